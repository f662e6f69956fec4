//! Bit-flipping metrics and flip-decoding orchestration.
//!
//! Metrics work on the decision-LLR magnitudes `|L_{0,i}|` of the best path at
//! the `K + c` information positions, addressed by their ordinal within 𝒜.
//! Lower metric values mark more likely first-error positions.

use std::sync::Arc;

use rand::Rng;

use crate::code::PolarCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::ops::{Arith, Plain};
use crate::scl::{DecodingConstraints, SclDecoder};

/// Default number of secondary decoding attempts.
pub const DEFAULT_MAX_ATTEMPTS: usize = 8;
/// Default DSCF perturbation.
pub const DEFAULT_ALPHA: f64 = 0.3;
/// Default magnitude at or below which correlation entries count as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-4;
/// Symmetry tolerance accepted when building a matrix from external data.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Symmetric, unit-diagonal correlation matrix `β` over information ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    size: usize,
    entries: Vec<f64>,
    zero_threshold: f64,
}

impl CorrelationMatrix {
    /// Validates and stores a row-major `size × size` matrix. Symmetry is
    /// checked within [`SYMMETRY_TOLERANCE`] and then made exact by mirroring
    /// the upper triangle; the diagonal must be exactly 1.
    pub fn new(size: usize, entries: Vec<f64>, zero_threshold: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if entries.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                actual: entries.len(),
            });
        }
        if !(zero_threshold >= 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "bad zero threshold {zero_threshold}"
            )));
        }
        let mut entries = entries;
        for i in 0..size {
            if entries[i * size + i] != 1.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry ({i},{i}) is {} instead of 1",
                    entries[i * size + i]
                )));
            }
            for j in i + 1..size {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                entries[j * size + i] = a;
            }
        }
        Ok(Self {
            size,
            entries,
            zero_threshold,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        Self {
            size,
            entries,
            zero_threshold: 0.0,
        }
    }

    /// Unit diagonal with off-diagonal pairs drawn i.i.d. from `U[-range, range]`,
    /// upper triangle in row-major order.
    pub fn random<R: Rng + ?Sized>(size: usize, range: f64, rng: &mut R) -> Self {
        let mut m = Self::identity(size);
        for i in 0..size {
            for j in i + 1..size {
                let v = rng.gen_range(-range..=range);
                m.set_pair(i, j, v);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// Row-major entries, unthresholded.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    pub fn with_zero_threshold(mut self, zero_threshold: f64) -> Self {
        self.zero_threshold = zero_threshold;
        self
    }

    /// Whether entry `(i, j)` takes part in the metric.
    #[inline]
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.get(i, j).abs() > self.zero_threshold
    }

    /// Entries that survive thresholding, diagonal included.
    pub fn nnz(&self) -> usize {
        self.entries
            .iter()
            .filter(|v| v.abs() > self.zero_threshold)
            .count()
    }

    /// Copy with sub-threshold entries set to exactly zero.
    pub fn thresholded(&self) -> Self {
        let t = self.zero_threshold;
        Self {
            size: self.size,
            entries: self
                .entries
                .iter()
                .map(|&v| if v.abs() > t { v } else { 0.0 })
                .collect(),
            zero_threshold: t,
        }
    }

    /// Sets `β_{i,j} = β_{j,i} = value` for `i ≠ j`.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, value: f64) {
        debug_assert_ne!(i, j);
        self.entries[i * self.size + j] = value;
        self.entries[j * self.size + i] = value;
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

/// Flip candidates ranked by ascending metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipPlan {
    /// `(information ordinal, metric)` pairs, ascending metric, ties by ordinal.
    pub candidates: Vec<(usize, f64)>,
    pub max_attempts: usize,
}

impl FlipPlan {
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut candidates: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Self {
            candidates,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    /// Ordinals in ranking order.
    pub fn order(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.0).collect()
    }

    /// Ordinals that will actually be tried.
    pub fn attempts(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().take(self.max_attempts).map(|c| c.0)
    }

    /// Rank of `ordinal` in the plan (0 = first choice).
    pub fn rank_of(&self, ordinal: usize) -> Option<usize> {
        self.candidates.iter().position(|c| c.0 == ordinal)
    }
}

/// Probability-domain intermediates of the DSCF and correlation metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTrace {
    /// `p*_i = 1 / (1 + exp(−α|L_i|))`.
    pub p_star: Vec<f64>,
    /// `P*_{i_ω} = (1 − p*_{i_ω}) Π_{i<i_ω} p*_i`.
    pub p_flip: Vec<f64>,
    /// `l_i = exp|L_i|`.
    pub l_i: Vec<f64>,
    /// `l*_{i_ω} = Π_i l_i^{β_{i_ω,i}}`.
    pub l_star: Vec<f64>,
    pub alpha: f64,
}

/// Smallest-|LLR| ranking.
pub fn scf_metric(abs_llrs: &[f64]) -> FlipPlan {
    FlipPlan::from_scores(abs_llrs)
}

/// DSCF metric values, each candidate evaluated from scratch:
/// `Q(i_ω) = |L_{i_ω}| + Σ_{i ≤ i_ω} (1/α)·ln(1 + exp(−α|L_i|))`.
pub fn dscf_scores_with<A: Arith>(abs_llrs: &[f64], alpha: f64, ar: &mut A) -> Vec<f64> {
    let inv_alpha = 1.0 / alpha;
    (0..abs_llrs.len())
        .map(|w| {
            let mut sum = 0.0;
            for &l in &abs_llrs[..=w] {
                let scaled = ar.mul(alpha, l);
                let e = ar.exp(-scaled);
                let term = ar.ln_1p(e);
                let term = ar.mul(term, inv_alpha);
                sum = ar.add(sum, term);
            }
            ar.add(abs_llrs[w], sum)
        })
        .collect()
}

pub fn dscf_metric(abs_llrs: &[f64], alpha: f64) -> Result<FlipPlan> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} must be positive"
        )));
    }
    Ok(FlipPlan::from_scores(&dscf_scores_with(
        abs_llrs, alpha, &mut Plain,
    )))
}

/// Probability-domain DSCF quantities; `−(1/α)·ln P*` reproduces the metric.
pub fn dscf_metric_oracle(abs_llrs: &[f64], alpha: f64) -> MetricTrace {
    let p_star: Vec<f64> = abs_llrs
        .iter()
        .map(|&l| 1.0 / (1.0 + (-alpha * l).exp()))
        .collect();
    let mut p_flip = Vec::with_capacity(abs_llrs.len());
    let mut prefix = 1.0;
    for (&p, &l) in p_star.iter().zip(abs_llrs) {
        // 1 - p* written out so it does not cancel to zero for large |L|.
        let e = (-alpha * l).exp();
        p_flip.push(e / (1.0 + e) * prefix);
        prefix *= p;
    }
    MetricTrace {
        p_star,
        p_flip,
        alpha,
        ..Default::default()
    }
}

/// Correlation metric values `Q_j = Σ_i β_{j,i}|L_i|`, skipping sub-threshold
/// entries. One multiplication per active entry and one addition per
/// accumulation after the first.
pub fn dlscl_scores_with<A: Arith>(
    abs_llrs: &[f64],
    beta: &CorrelationMatrix,
    ar: &mut A,
) -> Vec<f64> {
    let t = beta.zero_threshold();
    (0..beta.size())
        .map(|j| {
            let mut acc: Option<f64> = None;
            for (&b, &l) in beta.row(j).iter().zip(abs_llrs) {
                if b.abs() <= t {
                    continue;
                }
                let term = ar.mul(b, l);
                acc = Some(match acc {
                    None => term,
                    Some(a) => ar.add(a, term),
                });
            }
            acc.unwrap_or(0.0)
        })
        .collect()
}

pub fn dlscl_scores(abs_llrs: &[f64], beta: &CorrelationMatrix) -> Result<Vec<f64>> {
    if abs_llrs.len() != beta.size() {
        return Err(Error::LengthMismatch {
            expected: beta.size(),
            actual: abs_llrs.len(),
        });
    }
    Ok(dlscl_scores_with(abs_llrs, beta, &mut Plain))
}

pub fn dlscl_metric(abs_llrs: &[f64], beta: &CorrelationMatrix) -> Result<FlipPlan> {
    Ok(FlipPlan::from_scores(&dlscl_scores(abs_llrs, beta)?))
}

/// Likelihood-ratio form of the correlation metric; `ln l*` reproduces it.
/// Overflows for large LLRs; meant for checking.
pub fn dlscl_metric_oracle(abs_llrs: &[f64], beta: &CorrelationMatrix) -> MetricTrace {
    let l_i: Vec<f64> = abs_llrs.iter().map(|l| l.exp()).collect();
    let l_star = (0..beta.size())
        .map(|w| {
            l_i.iter()
                .enumerate()
                .filter(|&(i, _)| beta.is_active(w, i))
                .map(|(i, &l)| l.powf(beta.get(w, i)))
                .product()
        })
        .collect();
    MetricTrace {
        l_i,
        l_star,
        ..Default::default()
    }
}

/// Bit-flipping metric used to rank secondary attempts.
#[derive(Debug, Clone)]
pub enum FlipMetric {
    Scf,
    Dscf { alpha: f64 },
    DlScl(Arc<CorrelationMatrix>),
}

impl FlipMetric {
    pub fn plan(&self, abs_llrs: &[f64]) -> Result<FlipPlan> {
        match self {
            FlipMetric::Scf => Ok(scf_metric(abs_llrs)),
            FlipMetric::Dscf { alpha } => dscf_metric(abs_llrs, *alpha),
            FlipMetric::DlScl(beta) => dlscl_metric(abs_llrs, beta),
        }
    }
}

/// Output of a flip decode.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipOutcome {
    /// Message estimate, length `N`.
    pub bits: Vec<u8>,
    /// Secondary attempts run (0 when the first pass passed the CRC).
    pub attempts_used: usize,
    /// Whether the returned estimate passed the CRC.
    pub success: bool,
}

/// CRC-aided list decoding with up to `max_attempts` secondary attempts. A
/// failed first pass is re-decoded once per top-ranked candidate with the
/// information bits before it pinned to the best path and the candidate
/// itself flipped; the first CRC-passing attempt wins.
pub fn flip_decode(
    decoder: &mut SclDecoder<'_>,
    crc: &CrcSpec,
    chan_llrs: &[f64],
    metric: &FlipMetric,
    max_attempts: usize,
) -> Result<FlipOutcome> {
    let code: &PolarCode = decoder.code();
    let first = decoder.decode(chan_llrs, Some(crc), None)?;
    if first.crc_pass || max_attempts == 0 {
        return Ok(FlipOutcome {
            bits: first.selected().bits.clone(),
            attempts_used: 0,
            success: first.crc_pass,
        });
    }

    let best = first.best();
    let plan = metric
        .plan(&best.info_abs_llrs(code))?
        .with_max_attempts(max_attempts);
    let mut attempts = 0;
    for ordinal in plan.attempts() {
        attempts += 1;
        let constraints = DecodingConstraints::flip_at(code, &best.bits, code.info_set()[ordinal])?;
        let retry = decoder.decode(chan_llrs, Some(crc), Some(&constraints))?;
        if retry.crc_pass {
            return Ok(FlipOutcome {
                bits: retry.selected().bits.clone(),
                attempts_used: attempts,
                success: true,
            });
        }
    }
    Ok(FlipOutcome {
        bits: first.selected().bits.clone(),
        attempts_used: attempts,
        success: false,
    })
}
