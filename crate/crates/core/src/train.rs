//! Training of the correlation matrix `β`.
//!
//! Samples are frames whose first list decode failed the CRC, collected with
//! the all-zero codeword. Each sample carries the decision-LLR magnitudes of
//! the best path and the ordinal of its first wrong information bit. The loss
//! is a per-bit binary cross-entropy on the soft flip indicator
//! `tanh(Q_i − τ)` plus an L2 penalty over the off-diagonal pairs; `β` is
//! updated with RMSprop on its strict upper triangle and mirrored.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ebn0_to_sigma2, frame_rng, transmit_into};
use crate::code::PolarCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::flip::{dlscl_scores, CorrelationMatrix, FlipPlan};
use crate::scl::SclDecoder;

/// BCE arguments are clamped to `[BCE_CLAMP, 1 − BCE_CLAMP]`.
pub const BCE_CLAMP: f64 = 1e-12;

const DATASET_TAG: u64 = 0x7452_4149_4e00;
const DATASET_CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// `|L[0]_{0,i}|` over the information ordinals.
    pub abs_llrs: Vec<f64>,
    /// Ordinal of the first erroneous information bit of the best path.
    pub target_index: usize,
}

impl TrainingSample {
    pub fn new(abs_llrs: Vec<f64>, target_index: usize) -> Result<Self> {
        if target_index >= abs_llrs.len() {
            return Err(Error::InvalidParameter(format!(
                "target {target_index} out of range for {} bits",
                abs_llrs.len()
            )));
        }
        Ok(Self {
            abs_llrs,
            target_index,
        })
    }

    /// `T`: −1 at the target ordinal, +1 elsewhere.
    pub fn target_vector(&self) -> Vec<f64> {
        (0..self.abs_llrs.len())
            .map(|i| if i == self.target_index { -1.0 } else { 1.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_l2: f64,
    pub dataset_size: usize,
    pub ebn0_db: f64,
    pub init_range: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub list_size: usize,
    /// Optimizer steps; the dataset is reshuffled after every full pass.
    pub steps: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 1e-4,
            lambda_l2: 0.25,
            dataset_size: 1 << 18,
            ebn0_db: 5.0,
            init_range: 0.2,
            rms_decay: 0.99,
            rms_epsilon: 1e-8,
            list_size: 1,
            steps: 60_000,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("training: {what}")));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0) {
            return bad("learning_rate must be non-negative");
        }
        if !(self.lambda_l2 >= 0.0) {
            return bad("lambda_l2 must be non-negative");
        }
        if self.dataset_size == 0 {
            return bad("dataset_size must be positive");
        }
        if !(self.init_range > 0.0) {
            return bad("init_range must be positive");
        }
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return bad("rms_decay must lie in (0, 1)");
        }
        if !(self.rms_epsilon > 0.0) {
            return bad("rms_epsilon must be positive");
        }
        if self.list_size == 0 {
            return bad("list_size must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        Ok(())
    }
}

/// Forward-pass intermediates for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LossParts {
    pub q: Vec<f64>,
    pub tau0: f64,
    pub tau1: f64,
    pub tau: f64,
    /// Ordinals of the smallest and second-smallest `Q`.
    pub argmins: (usize, usize),
    pub t_soft: Vec<f64>,
    pub bce: f64,
    pub l2: f64,
    pub total: f64,
}

/// Smallest and second-smallest entries, ties to the lower index.
fn two_smallest(q: &[f64]) -> (usize, usize) {
    let mut first = 0;
    let mut second = usize::MAX;
    for j in 1..q.len() {
        if q[j] < q[first] {
            second = first;
            first = j;
        } else if second == usize::MAX || q[j] < q[second] {
            second = j;
        }
    }
    (first, second)
}

/// `λ Σ_{i<j} β_{i,j}²`.
pub fn l2_penalty(beta: &CorrelationMatrix, lambda_l2: f64) -> f64 {
    let n = beta.size();
    let mut sum = 0.0;
    for i in 0..n {
        for &v in &beta.row(i)[i + 1..] {
            sum += v * v;
        }
    }
    lambda_l2 * sum
}

pub fn forward_loss(
    sample: &TrainingSample,
    beta: &CorrelationMatrix,
    lambda_l2: f64,
) -> Result<LossParts> {
    forward_with_l2(sample, beta, l2_penalty(beta, lambda_l2))
}

fn forward_with_l2(
    sample: &TrainingSample,
    beta: &CorrelationMatrix,
    l2: f64,
) -> Result<LossParts> {
    let n = beta.size();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "τ needs at least two information bits".into(),
        ));
    }
    let q = dlscl_scores(&sample.abs_llrs, beta)?;
    let (i0, i1) = two_smallest(&q);
    let (tau0, tau1) = (q[i0], q[i1]);
    let tau = 0.5 * (tau0 + tau1);
    let t_soft: Vec<f64> = q.iter().map(|&v| (v - tau).tanh()).collect();
    let bce = t_soft
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let a = (0.5 * (1.0 - t)).clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            if i == sample.target_index {
                -a.ln()
            } else {
                -(1.0 - a).ln()
            }
        })
        .sum::<f64>()
        / n as f64;
    Ok(LossParts {
        q,
        tau0,
        tau1,
        tau,
        argmins: (i0, i1),
        t_soft,
        bce,
        l2,
        total: bce + l2,
    })
}

/// `∂Loss/∂Q` for the data term.
fn grad_q(sample: &TrainingSample, parts: &LossParts) -> Vec<f64> {
    let n = parts.q.len();
    let gz: Vec<f64> = parts
        .t_soft
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let raw = 0.5 * (1.0 - t);
            if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&raw) {
                return 0.0;
            }
            let b = if i == sample.target_index { 1.0 } else { 0.0 };
            let d_t = 0.5 * (b / raw - (1.0 - b) / (1.0 - raw));
            d_t * (1.0 - t * t) / n as f64
        })
        .collect();
    let total: f64 = gz.iter().sum();
    let mut gq = gz;
    gq[parts.argmins.0] -= 0.5 * total;
    gq[parts.argmins.1] -= 0.5 * total;
    gq
}

/// Gradient of the loss with respect to each free parameter `β_{i,j} = β_{j,i}`
/// (`i ≠ j`), reported at both `(i, j)` and `(j, i)`; the diagonal is zero.
pub fn grad_beta(
    sample: &TrainingSample,
    beta: &CorrelationMatrix,
    lambda_l2: f64,
) -> Result<Vec<f64>> {
    let parts = forward_loss(sample, beta, lambda_l2)?;
    Ok(grad_from_parts(sample, beta, lambda_l2, &parts))
}

fn grad_from_parts(
    sample: &TrainingSample,
    beta: &CorrelationMatrix,
    lambda_l2: f64,
    parts: &LossParts,
) -> Vec<f64> {
    let n = beta.size();
    let gq = grad_q(sample, parts);
    let l = &sample.abs_llrs;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            // Q_i = Σ_k β_{i,k} l_k and Q_j = Σ_k β_{j,k} l_k share β_{i,j}.
            let v = gq[i] * l[j] + gq[j] * l[i] + 2.0 * lambda_l2 * beta.get(i, j);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// Subnormals to zero. Penalty-dominated entries shrink geometrically and
/// would otherwise end up in slow subnormal arithmetic.
#[inline]
fn flush(v: f64) -> f64 {
    if v.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// RMSprop state over the entries of `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(size: usize, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            decay,
            epsilon,
            mean_square: vec![0.0; size * size],
        }
    }

    pub fn from_config(size: usize, cfg: &TrainingConfig) -> Self {
        Self::new(size, cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon)
    }

    /// `s ← ρs + (1−ρ)g²`, `β ← β − lr·g/√(s+ε)` on the strict upper
    /// triangle, mirrored to the lower one; the diagonal stays at 1.
    pub fn step(&mut self, beta: &mut CorrelationMatrix, grad: &[f64]) -> Result<()> {
        let n = beta.size();
        if grad.len() != n * n || self.mean_square.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: grad.len(),
            });
        }
        let entries = beta.entries_mut();
        for i in 0..n {
            for j in i + 1..n {
                let idx = i * n + j;
                let g = grad[idx];
                let s = flush(self.decay * self.mean_square[idx] + (1.0 - self.decay) * g * g);
                self.mean_square[idx] = s;
                self.mean_square[j * n + i] = s;
                let v = flush(entries[idx] - self.learning_rate * g / (s + self.epsilon).sqrt());
                entries[idx] = v;
                entries[j * n + i] = v;
            }
            entries[i * n + i] = 1.0;
        }
        Ok(())
    }
}

/// Free-function form of [`RmsProp::step`].
pub fn rmsprop_step(beta: &mut CorrelationMatrix, grad: &[f64], state: &mut RmsProp) -> Result<()> {
    state.step(beta, grad)
}

/// Parameters of a failed-frame collection run.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub list_size: usize,
    pub n_samples: usize,
    pub ebn0_db: f64,
    pub seed: u64,
    /// Give up after this many frames even if fewer samples were found.
    pub max_frames: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    /// Frames simulated to collect the samples.
    pub frames: u64,
}

impl Dataset {
    /// Fraction of simulated frames that failed the first decode.
    pub fn acceptance_rate(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.samples.len() as f64 / self.frames as f64
        }
    }
}

/// Collects frames (all-zero codeword, BPSK, AWGN at `Eb/N0` with the code's
/// payload rate) whose list decode fails the CRC on every path. Frame `f`
/// uses its own RNG stream, so the result does not depend on the thread count.
pub fn generate_dataset(code: &PolarCode, crc: &CrcSpec, spec: &DatasetSpec) -> Result<Dataset> {
    if spec.n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    SclDecoder::new(code, spec.list_size)?;
    let sigma2 = ebn0_to_sigma2(spec.ebn0_db, code.rate())?;
    let zero = vec![0u8; code.n_block()];

    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut frames = 0u64;
    while samples.len() < spec.n_samples && frames < spec.max_frames {
        let end = (frames + DATASET_CHUNK).min(spec.max_frames);
        let found: Vec<(u64, TrainingSample)> = (frames..end)
            .into_par_iter()
            .map_init(
                || {
                    (
                        SclDecoder::new(code, spec.list_size).expect("validated"),
                        vec![0.0; code.n_block()],
                    )
                },
                |(dec, llrs), f| {
                    let mut rng = frame_rng(spec.seed, DATASET_TAG, f);
                    transmit_into(&zero, sigma2, &mut rng, llrs);
                    let out = dec.decode(llrs, Some(crc), None).expect("sized input");
                    if out.crc_pass {
                        return None;
                    }
                    let best = out.best();
                    let info = code.extract(&best.bits);
                    let target = info.iter().position(|&b| b != 0)?;
                    Some((
                        f,
                        TrainingSample {
                            abs_llrs: best.info_abs_llrs(code),
                            target_index: target,
                        },
                    ))
                },
            )
            .flatten()
            .collect();
        for (f, s) in found {
            if samples.len() == spec.n_samples {
                break;
            }
            samples.push(s);
            frames = f + 1;
        }
        if samples.len() < spec.n_samples {
            frames = end;
        }
    }
    Ok(Dataset { samples, frames })
}

/// Final matrix and per-batch mean loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub beta: CorrelationMatrix,
    pub loss_history: Vec<f64>,
}

/// Batch mean loss and mean gradient, per-sample `τ`.
pub fn batch_loss_and_grad(
    batch: &[&TrainingSample],
    beta: &CorrelationMatrix,
    lambda_l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = beta.size();
    let l2 = l2_penalty(beta, lambda_l2);
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| {
            let parts = forward_with_l2(s, beta, l2)?;
            Ok((parts.total, grad_q(s, &parts)))
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let loss = per_sample.iter().map(|(l, _)| l).sum::<f64>() * scale;

    // Row i of the upper triangle accumulates over samples in batch order.
    let mut grad = vec![0.0; n * n];
    grad.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (s, (_, gq)) in batch.iter().zip(&per_sample) {
            let l = &s.abs_llrs;
            let (gi, li) = (gq[i], l[i]);
            for j in i + 1..n {
                row[j] += gi * l[j] + gq[j] * li;
            }
        }
        for (j, r) in row.iter_mut().enumerate().skip(i + 1) {
            *r = *r * scale + 2.0 * lambda_l2 * beta.get(i, j);
        }
    });
    for i in 0..n {
        for j in i + 1..n {
            grad[j * n + i] = grad[i * n + j];
        }
    }
    Ok((loss, grad))
}

/// Trains `β` on `samples`: random symmetric initialisation, shuffled
/// mini-batches each epoch, RMSprop updates.
pub fn train_on(
    samples: &[TrainingSample],
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty training set".into()))?;
    let size = first.abs_llrs.len();
    if let Some(bad) = samples.iter().find(|s| s.abs_llrs.len() != size) {
        return Err(Error::LengthMismatch {
            expected: size,
            actual: bad.abs_llrs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta = CorrelationMatrix::random(size, cfg.init_range, &mut rng);
    let mut opt = RmsProp::from_config(size, cfg);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_history = Vec::new();

    while loss_history.len() < cfg.steps {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            if loss_history.len() == cfg.steps {
                break;
            }
            let batch: Vec<&TrainingSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grad) = batch_loss_and_grad(&batch, &beta, cfg.lambda_l2)?;
            opt.step(&mut beta, &grad)?;
            loss_history.push(loss);
        }
    }
    Ok(TrainOutcome { beta, loss_history })
}

/// Collects a dataset per `cfg` and trains on it.
pub fn train(
    code: &PolarCode,
    crc: &CrcSpec,
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<(TrainOutcome, Dataset)> {
    cfg.validate()?;
    let data = generate_dataset(
        code,
        crc,
        &DatasetSpec {
            list_size: cfg.list_size,
            n_samples: cfg.dataset_size,
            ebn0_db: cfg.ebn0_db,
            seed,
            max_frames: u64::MAX,
        },
    )?;
    let outcome = train_on(&data.samples, cfg, seed.wrapping_add(1))?;
    Ok((outcome, data))
}

/// Fraction of samples whose target ordinal is among the first `k` candidates
/// of the correlation-metric ranking.
pub fn top_k_hit_rate(
    samples: &[TrainingSample],
    beta: &CorrelationMatrix,
    k: usize,
) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for s in samples {
        let plan = FlipPlan::from_scores(&dlscl_scores(&s.abs_llrs, beta)?);
        if plan.rank_of(s.target_index).is_some_and(|r| r < k) {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample3() -> TrainingSample {
        TrainingSample::new(vec![3.0, 1.0, 2.0], 1).unwrap()
    }

    #[test]
    fn hand_evaluated_loss() {
        let parts = forward_loss(&sample3(), &CorrelationMatrix::identity(3), 0.25).unwrap();
        assert_eq!(parts.q, vec![3.0, 1.0, 2.0]);
        assert_eq!((parts.tau0, parts.tau1, parts.tau), (1.0, 2.0, 1.5));
        let expected_t = [1.5f64.tanh(), (-0.5f64).tanh(), 0.5f64.tanh()];
        for (a, b) in parts.t_soft.iter().zip(expected_t) {
            assert!((a - b).abs() < 1e-15);
        }
        let bce = (-(0.5 * (1.0 + expected_t[0])).ln()
            - (0.5 * (1.0 - expected_t[1])).ln()
            - (0.5 * (1.0 + expected_t[2])).ln())
            / 3.0;
        assert!((parts.bce - bce).abs() < 1e-14);
        assert_eq!(parts.l2, 0.0);
        assert_eq!(parts.total, parts.bce);
    }

    #[test]
    fn loss_saturates_when_target_is_isolated() {
        let mut prev = f64::INFINITY;
        for gap in [1.0, 4.0, 16.0, 64.0] {
            let s = TrainingSample::new(vec![10.0 + gap, 10.0, 10.0 + 2.0 * gap], 1).unwrap();
            let bce = forward_loss(&s, &CorrelationMatrix::identity(3), 0.0)
                .unwrap()
                .bce;
            assert!(bce < prev);
            prev = bce;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn zero_llrs_leave_only_l2_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beta = CorrelationMatrix::random(4, 0.2, &mut rng);
        let s = TrainingSample::new(vec![0.0; 4], 2).unwrap();
        let g = grad_beta(&s, &beta, 0.25).unwrap();
        for i in 0..4 {
            assert_eq!(g[i * 4 + i], 0.0);
            for j in 0..4 {
                if i != j {
                    assert!((g[i * 4 + j] - 0.5 * beta.get(i, j)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn degenerate_size_rejected() {
        let s = TrainingSample::new(vec![1.0], 0).unwrap();
        assert!(forward_loss(&s, &CorrelationMatrix::identity(1), 0.1).is_err());
        assert!(TrainingSample::new(vec![1.0], 1).is_err());
    }

    #[test]
    fn tie_rule_for_tau() {
        assert_eq!(two_smallest(&[2.0, 1.0, 1.0, 3.0]), (1, 2));
        assert_eq!(two_smallest(&[1.0, 1.0]), (0, 1));
        assert_eq!(two_smallest(&[5.0, 4.0, 3.0]), (2, 1));
    }

    #[test]
    fn zero_gradient_keeps_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut beta = CorrelationMatrix::random(5, 0.2, &mut rng);
        let before = beta.clone();
        let mut opt = RmsProp::new(5, 1e-4, 0.99, 1e-8);
        opt.step(&mut beta, &[0.0; 25]).unwrap();
        assert_eq!(beta, before);
    }

    #[test]
    fn one_step_closed_form() {
        let mut beta = CorrelationMatrix::identity(3);
        let mut g = vec![0.0; 9];
        g[1] = 0.7;
        g[3] = 0.7;
        let mut opt = RmsProp::new(3, 1e-4, 0.99, 1e-8);
        opt.step(&mut beta, &g).unwrap();
        let expected = -1e-4 * 0.7 / (0.01 * 0.49 + 1e-8f64).sqrt();
        assert!((beta.get(0, 1) - expected).abs() < 1e-18);
        assert!((expected.abs() - 1e-4 / 0.01f64.sqrt()).abs() < 1e-8);
        assert_eq!(beta.get(1, 0), beta.get(0, 1));
        assert_eq!(beta.get(0, 2), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let cfg = TrainingConfig {
            rms_decay: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainingConfig {
            init_range: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(train_on(&[], &TrainingConfig::default(), 0).is_err());
    }

    #[test]
    fn hit_rate_identity() {
        let samples = vec![
            TrainingSample::new(vec![1.0, 0.5, 2.0], 1).unwrap(),
            TrainingSample::new(vec![1.0, 0.5, 2.0], 2).unwrap(),
        ];
        let eye = CorrelationMatrix::identity(3);
        assert_eq!(top_k_hit_rate(&samples, &eye, 1).unwrap(), 0.5);
        assert_eq!(top_k_hit_rate(&samples, &eye, 3).unwrap(), 1.0);
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (TrainingSample, CorrelationMatrix) {
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
        let target = rng.gen_range(0..n);
        let beta = CorrelationMatrix::random(n, 0.2, rng);
        (TrainingSample::new(l, target).unwrap(), beta)
    }

    fn perturbed(beta: &CorrelationMatrix, i: usize, j: usize, d: f64) -> CorrelationMatrix {
        let mut b = beta.clone();
        b.set_pair(i, j, beta.get(i, j) + d);
        b
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut good = 0;
        let mut tested = 0;
        while tested < 100 {
            let (s, beta) = random_instance(&mut rng, 8);
            let parts = forward_loss(&s, &beta, 0.25).unwrap();
            let mut sorted = parts.q.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted[1] - sorted[0] < 1e-3 || sorted[2] - sorted[1] < 1e-3 {
                continue;
            }
            tested += 1;
            let g = grad_beta(&s, &beta, 0.25).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..8 {
                for j in i + 1..8 {
                    let up = forward_loss(&s, &perturbed(&beta, i, j, h), 0.25)
                        .unwrap()
                        .total;
                    let down = forward_loss(&s, &perturbed(&beta, i, j, -h), 0.25)
                        .unwrap()
                        .total;
                    let fd = (up - down) / (2.0 * h);
                    let rel =
                        (g[i * 8 + j] - fd).abs() / fd.abs().max(g[i * 8 + j].abs()).max(1e-8);
                    worst = worst.max(rel);
                }
            }
            if worst < 1e-4 {
                good += 1;
            }
        }
        assert!(good >= 95, "{good}/100");
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let beta = CorrelationMatrix::random(6, 0.2, &mut rng);
        let samples: Vec<TrainingSample> = (0..5).map(|_| random_instance(&mut rng, 6).0).collect();
        let refs: Vec<&TrainingSample> = samples.iter().collect();
        let (loss, g) = batch_loss_and_grad(&refs, &beta, 0.25).unwrap();
        let mut mean = vec![0.0; 36];
        let mut mean_loss = 0.0;
        for s in &samples {
            mean_loss += forward_loss(s, &beta, 0.25).unwrap().total / 5.0;
            for (m, v) in mean.iter_mut().zip(grad_beta(s, &beta, 0.25).unwrap()) {
                *m += v / 5.0;
            }
        }
        assert!((loss - mean_loss).abs() < 1e-12);
        for (a, b) in g.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
