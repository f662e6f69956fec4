//! LLR-based successive-cancellation list decoding.
//!
//! Each path owns one buffer per stage, drawn from a pool of `M` slots with
//! reference counts; cloning a path only bumps the counts and a buffer is
//! copied (or simply replaced) the first time a shared path writes to it.
//! Decisions, decision LLRs and parent links are kept per bit so surviving
//! paths are rebuilt by walking back through the history.
//!
//! The constrained mode forces information bits (a prefix taken from an
//! earlier decode plus one complemented bit) without forking, then resumes
//! ordinary list decoding after the last forced index.

use std::cmp::Ordering;

use crate::code::PolarCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::sc::{decide, pe_f, pe_g};

/// Path-metric penalty `Δ` for deciding `bit` at position `i` given leaf LLR `llr`.
///
/// Frozen positions are scored as a decision of 0 irrespective of `bit`.
#[inline]
pub fn pm_penalty(code: &PolarCode, i: usize, llr: f64, bit: u8) -> f64 {
    let bit = if code.is_frozen(i) { 0 } else { bit };
    penalty(llr, bit)
}

/// `|L|·(1 − (1 − 2b)·sgn(L)) / 2` with `sgn(0) = +1`: zero when `b` agrees
/// with the sign of `L`, otherwise `|L|`.
#[inline(always)]
fn penalty(llr: f64, bit: u8) -> f64 {
    if decide(llr) == bit {
        0.0
    } else {
        llr.abs()
    }
}

/// One candidate message with its path metric and decision LLRs.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodePath {
    /// Message estimate `û[m]`, length `N`.
    pub bits: Vec<u8>,
    /// Path metric `PM[m]` after the last bit.
    pub pm: f64,
    /// `L[m]_{0,i}` for every position `i`.
    pub decision_llrs: Vec<f64>,
}

impl DecodePath {
    /// Decision LLR magnitudes at the information positions, in 𝒜 order.
    pub fn info_abs_llrs(&self, code: &PolarCode) -> Vec<f64> {
        code.info_set()
            .iter()
            .map(|&i| self.decision_llrs[i].abs())
            .collect()
    }
}

/// Bits forced during a constrained decode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodingConstraints {
    forced_prefix: Vec<(usize, u8)>,
    flip: Option<(usize, u8)>,
}

impl DecodingConstraints {
    /// `forced_prefix` pins information bits to the given values; `flip` is an
    /// optional `(index, value)` that must lie after every pinned index.
    pub fn new(forced_prefix: Vec<(usize, u8)>, flip: Option<(usize, u8)>) -> Result<Self> {
        let mut forced_prefix = forced_prefix;
        forced_prefix.sort_unstable_by_key(|&(i, _)| i);
        if forced_prefix.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConstraints("duplicate forced index".into()));
        }
        if let (Some((fi, _)), Some(&(last, _))) = (flip, forced_prefix.last()) {
            if fi <= last {
                return Err(Error::InvalidConstraints(format!(
                    "flip index {fi} does not follow forced index {last}"
                )));
            }
        }
        Ok(Self {
            forced_prefix,
            flip,
        })
    }

    /// Second-attempt constraints: information bits before `flip_index` copy
    /// `first_pass`, the bit at `flip_index` is its complement.
    pub fn flip_at(code: &PolarCode, first_pass: &[u8], flip_index: usize) -> Result<Self> {
        if code.is_frozen(flip_index) {
            return Err(Error::ConstraintNotInfo(flip_index));
        }
        let forced = code
            .info_set()
            .iter()
            .take_while(|&&i| i < flip_index)
            .map(|&i| (i, first_pass[i] & 1))
            .collect();
        Self::new(forced, Some((flip_index, 1 - (first_pass[flip_index] & 1))))
    }

    pub fn forced_prefix(&self) -> &[(usize, u8)] {
        &self.forced_prefix
    }

    pub fn flip(&self) -> Option<(usize, u8)> {
        self.flip
    }

    fn validate(&self, code: &PolarCode) -> Result<()> {
        for &(i, _) in self.forced_prefix.iter().chain(self.flip.iter()) {
            if i >= code.n_block() || code.is_frozen(i) {
                return Err(Error::ConstraintNotInfo(i));
            }
        }
        Ok(())
    }
}

/// Result of one list decode.
#[derive(Debug, Clone, PartialEq)]
pub struct SclOutput {
    /// Surviving paths, ascending path metric.
    pub paths: Vec<DecodePath>,
    /// Index into `paths` of the returned estimate.
    pub selected: usize,
    /// Whether the selected path passed the CRC.
    pub crc_pass: bool,
}

impl SclOutput {
    pub fn selected(&self) -> &DecodePath {
        &self.paths[self.selected]
    }

    /// Smallest-metric path `û[0]`.
    pub fn best(&self) -> &DecodePath {
        &self.paths[0]
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    pm: f64,
    delta: f64,
    ordinal: usize,
}

impl Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pm
            .total_cmp(&other.pm)
            .then(self.delta.total_cmp(&other.delta))
            .then(self.ordinal.cmp(&other.ordinal))
    }
}

/// Reusable list decoder for one code and list size.
#[derive(Debug, Clone)]
pub struct SclDecoder<'a> {
    code: &'a PolarCode,
    list_size: usize,
    n_stages: usize,
    // Stage s in 0..n: M slots of 2^s LLRs each. Stage n is the channel.
    llr_pool: Vec<Vec<f64>>,
    llr_refs: Vec<Vec<u32>>,
    llr_free: Vec<Vec<usize>>,
    // Stage s in 1..=n: M slots of 2^s partial sums ([left child | right child]).
    bit_pool: Vec<Vec<u8>>,
    bit_refs: Vec<Vec<u32>>,
    bit_free: Vec<Vec<usize>>,
    // [path * (n + 1) + stage]
    llr_ptr: Vec<usize>,
    bit_ptr: Vec<usize>,
    active: Vec<usize>,
    free_paths: Vec<usize>,
    pm: Vec<f64>,
    leaf: Vec<f64>,
    // [bit * M + path]
    hist_bit: Vec<u8>,
    hist_llr: Vec<f64>,
    hist_parent: Vec<u32>,
    forced: Vec<Option<u8>>,
    cands: Vec<Candidate>,
    keep: Vec<[bool; 2]>,
    new_pm: Vec<[f64; 2]>,
    prev_active: Vec<usize>,
}

impl<'a> SclDecoder<'a> {
    pub fn new(code: &'a PolarCode, list_size: usize) -> Result<Self> {
        if list_size < 1 {
            return Err(Error::InvalidParameter(
                "list size must be at least 1".into(),
            ));
        }
        let n = code.n_block();
        let ns = code.n_stages();
        let m = list_size;
        Ok(Self {
            code,
            list_size,
            n_stages: ns,
            llr_pool: (0..ns).map(|s| vec![0.0; m << s]).collect(),
            llr_refs: (0..ns).map(|_| vec![0; m]).collect(),
            llr_free: (0..ns).map(|_| Vec::with_capacity(m)).collect(),
            bit_pool: (0..=ns).map(|s| vec![0; m << s]).collect(),
            bit_refs: (0..=ns).map(|_| vec![0; m]).collect(),
            bit_free: (0..=ns).map(|_| Vec::with_capacity(m)).collect(),
            llr_ptr: vec![0; m * (ns + 1)],
            bit_ptr: vec![0; m * (ns + 1)],
            active: Vec::with_capacity(m),
            free_paths: Vec::with_capacity(m),
            pm: vec![0.0; m],
            leaf: vec![0.0; m],
            hist_bit: vec![0; n * m],
            hist_llr: vec![0.0; n * m],
            hist_parent: vec![0; n * m],
            forced: vec![None; n],
            cands: Vec::with_capacity(2 * m),
            keep: vec![[false; 2]; m],
            new_pm: vec![[0.0; 2]; m],
            prev_active: Vec::with_capacity(m),
        })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn code(&self) -> &'a PolarCode {
        self.code
    }

    fn reset(&mut self) {
        let m = self.list_size;
        let ns = self.n_stages;
        for s in 0..ns {
            self.llr_refs[s].iter_mut().for_each(|r| *r = 0);
            self.llr_free[s].clear();
            self.llr_free[s].extend((1..m).rev());
            self.llr_refs[s][0] = 1;
        }
        for s in 0..=ns {
            self.bit_refs[s].iter_mut().for_each(|r| *r = 0);
            self.bit_free[s].clear();
            self.bit_free[s].extend((1..m).rev());
            self.bit_refs[s][0] = 1;
        }
        for s in 0..=ns {
            self.llr_ptr[s] = 0;
            self.bit_ptr[s] = 0;
        }
        self.active.clear();
        self.active.push(0);
        self.free_paths.clear();
        self.free_paths.extend((1..m).rev());
        self.pm[0] = 0.0;
    }

    fn clone_path(&mut self, from: usize) -> usize {
        let to = self.free_paths.pop().expect("path pool exhausted");
        let stride = self.n_stages + 1;
        for s in 0..stride {
            let l = self.llr_ptr[from * stride + s];
            let b = self.bit_ptr[from * stride + s];
            self.llr_ptr[to * stride + s] = l;
            self.bit_ptr[to * stride + s] = b;
            if s < self.n_stages {
                self.llr_refs[s][l] += 1;
            }
            self.bit_refs[s][b] += 1;
        }
        self.pm[to] = self.pm[from];
        to
    }

    fn kill_path(&mut self, p: usize) {
        let stride = self.n_stages + 1;
        for s in 0..stride {
            if s < self.n_stages {
                let l = self.llr_ptr[p * stride + s];
                self.llr_refs[s][l] -= 1;
                if self.llr_refs[s][l] == 0 {
                    self.llr_free[s].push(l);
                }
            }
            let b = self.bit_ptr[p * stride + s];
            self.bit_refs[s][b] -= 1;
            if self.bit_refs[s][b] == 0 {
                self.bit_free[s].push(b);
            }
        }
        self.free_paths.push(p);
    }

    /// Slot of path `p` at LLR stage `s`, made private. Contents are not preserved.
    fn llr_slot_for_write(&mut self, p: usize, s: usize) -> usize {
        let idx = p * (self.n_stages + 1) + s;
        let slot = self.llr_ptr[idx];
        if self.llr_refs[s][slot] == 1 {
            return slot;
        }
        self.llr_refs[s][slot] -= 1;
        let fresh = self.llr_free[s].pop().expect("llr pool exhausted");
        self.llr_refs[s][fresh] = 1;
        self.llr_ptr[idx] = fresh;
        fresh
    }

    /// Slot of path `p` at bit stage `s`, made private. The left half is
    /// preserved when `keep_left`.
    fn bit_slot_for_write(&mut self, p: usize, s: usize, keep_left: bool) -> usize {
        let idx = p * (self.n_stages + 1) + s;
        let slot = self.bit_ptr[idx];
        if self.bit_refs[s][slot] == 1 {
            return slot;
        }
        self.bit_refs[s][slot] -= 1;
        let fresh = self.bit_free[s].pop().expect("bit pool exhausted");
        self.bit_refs[s][fresh] = 1;
        self.bit_ptr[idx] = fresh;
        if keep_left {
            let size = 1usize << s;
            let half = size / 2;
            self.bit_pool[s].copy_within(slot * size..slot * size + half, fresh * size);
        }
        fresh
    }

    /// Propagates LLRs of path `p` down to leaf `i` and returns `L_{0,i}`.
    fn leaf_llr(&mut self, p: usize, i: usize, chan: &[f64]) -> f64 {
        let ns = self.n_stages;
        if ns == 0 {
            return chan[0];
        }
        let stride = ns + 1;
        let top = if i == 0 {
            ns - 1
        } else {
            i.trailing_zeros() as usize
        };
        for s in (0..=top).rev() {
            let half = 1usize << s;
            let dst_slot = self.llr_slot_for_write(p, s);
            let (lower, upper) = self.llr_pool.split_at_mut(s + 1);
            let dst = &mut lower[s][dst_slot * half..(dst_slot + 1) * half];
            let src: &[f64] = if s + 1 == ns {
                chan
            } else {
                let src_slot = self.llr_ptr[p * stride + s + 1];
                &upper[0][src_slot * 2 * half..(src_slot + 1) * 2 * half]
            };
            if (i >> s) & 1 == 0 {
                for k in 0..half {
                    dst[k] = pe_f(src[k], src[k + half]);
                }
            } else {
                let bslot = self.bit_ptr[p * stride + s + 1];
                let v = &self.bit_pool[s + 1][bslot * 2 * half..bslot * 2 * half + half];
                for k in 0..half {
                    dst[k] = pe_g(v[k], src[k], src[k + half]);
                }
            }
        }
        self.llr_pool[0][self.llr_ptr[p * stride]]
    }

    /// Records decision `bit` for leaf `i` of path `p` and propagates partial sums.
    fn write_bit(&mut self, p: usize, i: usize, bit: u8) {
        let ns = self.n_stages;
        if ns == 0 {
            return;
        }
        let stride = ns + 1;
        let h = i & 1;
        let slot = self.bit_slot_for_write(p, 1, h == 1);
        self.bit_pool[1][slot * 2 + h] = bit;

        let mut s = 1;
        while s < ns && (i >> (s - 1)) & 1 == 1 {
            // Node at stage s is complete; write its result into stage s + 1.
            let size = 1usize << s;
            let half = size / 2;
            let h_up = (i >> s) & 1;
            let dst_slot = self.bit_slot_for_write(p, s + 1, h_up == 1);
            let src_slot = self.bit_ptr[p * stride + s];
            let (lower, upper) = self.bit_pool.split_at_mut(s + 1);
            let src = &lower[s][src_slot * size..(src_slot + 1) * size];
            let dst_base = dst_slot * 2 * size + h_up * size;
            let dst = &mut upper[0][dst_base..dst_base + size];
            for k in 0..half {
                dst[k] = src[k] ^ src[k + half];
                dst[k + half] = src[k + half];
            }
            s += 1;
        }
    }

    /// Decodes one frame. With `crc`, the first CRC-passing path in ascending
    /// metric order is selected; otherwise (or if none passes) the best path.
    pub fn decode(
        &mut self,
        chan_llrs: &[f64],
        crc: Option<&CrcSpec>,
        constraints: Option<&DecodingConstraints>,
    ) -> Result<SclOutput> {
        let code = self.code;
        let n = code.n_block();
        let m = self.list_size;
        if chan_llrs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: chan_llrs.len(),
            });
        }
        self.forced.iter_mut().for_each(|f| *f = None);
        if let Some(c) = constraints {
            c.validate(code)?;
            for &(i, v) in c.forced_prefix.iter().chain(c.flip.iter()) {
                self.forced[i] = Some(v & 1);
            }
        }

        self.reset();
        for i in 0..n {
            let n_active = self.active.len();
            for a in 0..n_active {
                let p = self.active[a];
                self.leaf[p] = self.leaf_llr(p, i, chan_llrs);
            }

            let fixed = if code.is_frozen(i) {
                Some(0)
            } else {
                self.forced[i]
            };
            if let Some(bit) = fixed {
                for a in 0..n_active {
                    let p = self.active[a];
                    let llr = self.leaf[p];
                    self.pm[p] += penalty(llr, bit);
                    self.record(i, p, p, bit, llr);
                    self.write_bit(p, i, bit);
                }
                continue;
            }

            self.cands.clear();
            for a in 0..n_active {
                let p = self.active[a];
                let llr = self.leaf[p];
                for bit in 0..2u8 {
                    let delta = penalty(llr, bit);
                    self.cands.push(Candidate {
                        pm: self.pm[p] + delta,
                        delta,
                        ordinal: 2 * a + bit as usize,
                    });
                }
            }
            if self.cands.len() > m {
                self.cands.sort_unstable_by(Candidate::cmp);
                self.cands.truncate(m);
            }
            for a in 0..n_active {
                self.keep[a] = [false; 2];
            }
            for c in &self.cands {
                self.keep[c.ordinal / 2][c.ordinal % 2] = true;
                self.new_pm[c.ordinal / 2][c.ordinal % 2] = c.pm;
            }

            std::mem::swap(&mut self.prev_active, &mut self.active);
            self.active.clear();
            for a in 0..n_active {
                let p = self.prev_active[a];
                match self.keep[a] {
                    [false, false] => self.kill_path(p),
                    _ => self.active.push(p),
                }
            }
            // Paths keeping both children: the clone takes bit 1 and joins the back of the list.
            for a in 0..n_active {
                if self.keep[a] == [true, true] {
                    let p = self.prev_active[a];
                    let q = self.clone_path(p);
                    self.active.push(q);
                    let llr = self.leaf[p];
                    self.pm[q] = self.new_pm[a][1];
                    self.record(i, q, p, 1, llr);
                    self.write_bit(q, i, 1);
                }
            }
            for a in 0..n_active {
                let bit = match self.keep[a] {
                    [true, _] => 0,
                    [false, true] => 1,
                    [false, false] => continue,
                };
                let p = self.prev_active[a];
                let llr = self.leaf[p];
                self.pm[p] = self.new_pm[a][bit as usize];
                self.record(i, p, p, bit, llr);
                self.write_bit(p, i, bit);
            }
        }

        Ok(self.collect(crc))
    }

    #[inline]
    fn record(&mut self, i: usize, p: usize, parent: usize, bit: u8, llr: f64) {
        let idx = i * self.list_size + p;
        self.hist_bit[idx] = bit;
        self.hist_llr[idx] = llr;
        self.hist_parent[idx] = parent as u32;
    }

    fn collect(&self, crc: Option<&CrcSpec>) -> SclOutput {
        let n = self.code.n_block();
        let m = self.list_size;
        let mut order: Vec<(usize, usize)> = self.active.iter().copied().enumerate().collect();
        order.sort_by(|x, y| self.pm[x.1].total_cmp(&self.pm[y.1]).then(x.0.cmp(&y.0)));

        let paths: Vec<DecodePath> = order
            .iter()
            .map(|&(_, p)| {
                let mut bits = vec![0u8; n];
                let mut llrs = vec![0.0; n];
                let mut cur = p;
                for i in (0..n).rev() {
                    let idx = i * m + cur;
                    bits[i] = self.hist_bit[idx];
                    llrs[i] = self.hist_llr[idx];
                    cur = self.hist_parent[idx] as usize;
                }
                DecodePath {
                    bits,
                    pm: self.pm[p],
                    decision_llrs: llrs,
                }
            })
            .collect();

        let passing = crc.and_then(|spec| {
            paths
                .iter()
                .position(|path| spec.check(&self.code.extract(&path.bits)))
        });
        SclOutput {
            paths,
            selected: passing.unwrap_or(0),
            crc_pass: passing.is_some(),
        }
    }
}

/// One-shot list decode; see [`SclDecoder::decode`].
pub fn scl_decode(
    code: &PolarCode,
    chan_llrs: &[f64],
    list_size: usize,
    crc: Option<&CrcSpec>,
    constraints: Option<&DecodingConstraints>,
) -> Result<SclOutput> {
    SclDecoder::new(code, list_size)?.decode(chan_llrs, crc, constraints)
}
