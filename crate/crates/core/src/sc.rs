//! Successive-cancellation decoding on the polar factor graph.
//!
//! Stage `n` holds the channel LLRs and stage 0 the per-bit decision LLRs.
//! A processing element at stage `s` joins positions `i` and `i + 2^s`
//! (bit `s` of `i` clear). The schedule is iterative: for each bit only the
//! blocks on the path from the deepest updated ancestor down to the leaf are
//! recomputed, which is the same sequence of PE evaluations as the recursive
//! description.

use crate::code::PolarCode;
use crate::error::{Error, Result};

/// Min-sum check-node update, `min(|a|,|b|)·sgn(a)·sgn(b)` with `sgn(0) = +1`.
#[inline(always)]
pub fn pe_f(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update, `(1 − 2v)·a + b`.
#[inline(always)]
pub fn pe_g(v: u8, a: f64, b: f64) -> f64 {
    if v & 1 == 0 {
        a + b
    } else {
        b - a
    }
}

/// Partial-sum propagation: `(v_left ⊕ v_right, v_right)`.
#[inline(always)]
pub fn combine_bits(v_left: u8, v_right: u8) -> (u8, u8) {
    (v_left ^ v_right, v_right)
}

/// Leaf decision: frozen bits are 0, otherwise 1 iff the LLR is negative.
#[inline]
pub fn hard_decision(code: &PolarCode, i: usize, llr: f64) -> u8 {
    if code.is_frozen(i) {
        0
    } else {
        decide(llr)
    }
}

/// `(1 − sgn(L)) / 2` with `sgn(0) = +1`.
#[inline(always)]
pub(crate) fn decide(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// LLR and hard-bit planes of one SC decode, `(n + 1) × N` each.
#[derive(Debug, Clone)]
pub struct ScState {
    n_block: usize,
    n_stages: usize,
    llr: Vec<f64>,
    bits: Vec<u8>,
}

impl ScState {
    pub fn new(n_block: usize) -> Self {
        let n_stages = n_block.trailing_zeros() as usize;
        Self {
            n_block,
            n_stages,
            llr: vec![0.0; (n_stages + 1) * n_block],
            bits: vec![0; (n_stages + 1) * n_block],
        }
    }

    /// `L_{s,i}`.
    pub fn llr(&self, stage: usize, i: usize) -> f64 {
        self.llr[stage * self.n_block + i]
    }

    /// `v̂_{s,i}`.
    pub fn bit(&self, stage: usize, i: usize) -> u8 {
        self.bits[stage * self.n_block + i]
    }

    pub fn llr_stage(&self, stage: usize) -> &[f64] {
        &self.llr[stage * self.n_block..(stage + 1) * self.n_block]
    }

    pub fn bit_stage(&self, stage: usize) -> &[u8] {
        &self.bits[stage * self.n_block..(stage + 1) * self.n_block]
    }

    /// Runs a full decode; stage-0 rows are filled in index order.
    fn run(&mut self, code: &PolarCode, chan: &[f64]) {
        let n = self.n_block;
        let ns = self.n_stages;
        self.llr[ns * n..].copy_from_slice(chan);

        for i in 0..n {
            let top = if i == 0 {
                ns.saturating_sub(1)
            } else {
                i.trailing_zeros() as usize
            };
            if ns > 0 {
                for s in (0..=top).rev() {
                    let half = 1usize << s;
                    let start = (i >> s) << s;
                    let (lower, upper) = self.llr.split_at_mut((s + 1) * n);
                    let dst = &mut lower[s * n..];
                    let src = &upper[..n];
                    if (i >> s) & 1 == 0 {
                        for k in start..start + half {
                            dst[k] = pe_f(src[k], src[k + half]);
                        }
                    } else {
                        let left = start - half;
                        let vb = &self.bits[s * n..];
                        for k in 0..half {
                            dst[start + k] = pe_g(vb[left + k], src[left + k], src[start + k]);
                        }
                    }
                }
            }

            let l0 = self.llr[i];
            self.bits[i] = hard_decision(code, i, l0);

            let mut s = 0;
            while s < ns && (i >> s) & 1 == 1 {
                let half = 1usize << s;
                let right = (i >> s) << s;
                let left = right - half;
                for k in 0..half {
                    let (a, b) =
                        combine_bits(self.bits[s * n + left + k], self.bits[s * n + right + k]);
                    self.bits[(s + 1) * n + left + k] = a;
                    self.bits[(s + 1) * n + right + k] = b;
                }
                s += 1;
            }
        }
    }
}

/// Decoded message and per-bit decision LLRs `L_{0,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScOutput {
    pub bits: Vec<u8>,
    pub decision_llrs: Vec<f64>,
}

/// Reusable SC decoder for one code.
#[derive(Debug, Clone)]
pub struct ScDecoder<'a> {
    code: &'a PolarCode,
    state: ScState,
}

impl<'a> ScDecoder<'a> {
    pub fn new(code: &'a PolarCode) -> Self {
        Self {
            code,
            state: ScState::new(code.n_block()),
        }
    }

    pub fn decode(&mut self, chan_llrs: &[f64]) -> Result<ScOutput> {
        if chan_llrs.len() != self.code.n_block() {
            return Err(Error::LengthMismatch {
                expected: self.code.n_block(),
                actual: chan_llrs.len(),
            });
        }
        self.state.run(self.code, chan_llrs);
        Ok(ScOutput {
            bits: self.state.bit_stage(0).to_vec(),
            decision_llrs: self.state.llr_stage(0).to_vec(),
        })
    }

    /// State of the last decode.
    pub fn state(&self) -> &ScState {
        &self.state
    }
}

/// Successive-cancellation decode of one frame.
pub fn sc_decode(code: &PolarCode, chan_llrs: &[f64]) -> Result<ScOutput> {
    ScDecoder::new(code).decode(chan_llrs)
}
