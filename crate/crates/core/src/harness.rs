//! Monte Carlo FER sweeps, operation counting and matrix export.
//!
//! Configuration is flat `key = value` text (`#` starts a comment). Keys are
//! listed in [`ExperimentConfig::KEYS`]; the CLI accepts each as a flag.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{ebn0_to_sigma2, frame_rng, transmit_into};
use crate::code::{load_reliability, PolarCode};
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::flip::{
    dlscl_scores_with, dscf_scores_with, flip_decode, CorrelationMatrix, FlipMetric, DEFAULT_ALPHA,
    DEFAULT_MAX_ATTEMPTS, DEFAULT_ZERO_THRESHOLD,
};
use crate::matrix_file::read_beta;
use crate::ops::OpCount;
use crate::sc::ScDecoder;
use crate::scl::SclDecoder;
use crate::train::TrainingConfig;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "POLARFLIP_WORKERS";

pub const CSV_HEADER: &str = "decoder,ebn0_db,frames,errors,fer,ci95,mean_attempts";

/// Per-metric-evaluation operation tallies.
pub type OpCountReport = OpCount;

#[derive(Debug, Clone, PartialEq)]
pub enum DecoderKind {
    Sc,
    Scl {
        list_size: usize,
    },
    /// List decoding with DSCF-ranked flips.
    Sclf {
        list_size: usize,
        alpha: f64,
        max_attempts: usize,
    },
    /// List decoding with correlation-matrix-ranked flips.
    DlScl {
        list_size: usize,
        beta: Arc<CorrelationMatrix>,
        beta_path: PathBuf,
        max_attempts: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSpec {
    pub name: String,
    pub kind: DecoderKind,
}

impl DecoderSpec {
    /// Parses one roster entry: `sc`, `sclM`, `sclfM` or `dlsclM@path`.
    /// Flip decoders take `alpha`, `max_attempts` and `zero_threshold` from
    /// the config.
    pub fn parse(token: &str, cfg: &ExperimentConfig) -> Result<Self> {
        let token = token.trim();
        let lower = token.to_ascii_lowercase();
        let list = |digits: &str| -> Result<usize> {
            match digits.parse::<usize>() {
                Ok(m) if m >= 1 => Ok(m),
                _ => Err(Error::InvalidParameter(format!(
                    "bad list size in decoder '{token}'"
                ))),
            }
        };
        let kind = if lower == "sc" {
            DecoderKind::Sc
        } else if let Some(rest) = lower.strip_prefix("dlscl") {
            let (digits, _) = rest.split_once('@').ok_or_else(|| {
                Error::InvalidParameter(format!("decoder '{token}' needs @<beta file>"))
            })?;
            let path = PathBuf::from(&token[token.find('@').unwrap() + 1..]);
            let file = read_beta(&path, cfg.zero_threshold)?;
            if file.matrix.size() != cfg.n_info + cfg.n_crc {
                return Err(Error::InvalidParameter(format!(
                    "{} is {}x{}, code needs {}",
                    path.display(),
                    file.matrix.size(),
                    file.matrix.size(),
                    cfg.n_info + cfg.n_crc
                )));
            }
            DecoderKind::DlScl {
                list_size: list(digits)?,
                beta: Arc::new(file.matrix),
                beta_path: path,
                max_attempts: cfg.max_attempts,
            }
        } else if let Some(digits) = lower.strip_prefix("sclf") {
            DecoderKind::Sclf {
                list_size: list(digits)?,
                alpha: cfg.alpha,
                max_attempts: cfg.max_attempts,
            }
        } else if let Some(digits) = lower.strip_prefix("scl") {
            DecoderKind::Scl {
                list_size: list(digits)?,
            }
        } else {
            return Err(Error::InvalidParameter(format!(
                "unknown decoder '{token}'"
            )));
        };
        Ok(Self::new(kind))
    }

    pub fn new(kind: DecoderKind) -> Self {
        let name = match &kind {
            DecoderKind::Sc => "SC".to_string(),
            DecoderKind::Scl { list_size } => format!("SCL-{list_size}"),
            DecoderKind::Sclf { list_size, .. } => format!("SCLF-{list_size}"),
            DecoderKind::DlScl { list_size, .. } => format!("DLSCL-{list_size}"),
        };
        Self { name, kind }
    }
}

/// Everything a `fer` or `train` run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_block: usize,
    pub n_info: usize,
    pub n_crc: usize,
    pub crc_poly: u64,
    pub crc_init: u64,
    /// Reliability order file, least reliable first. Defaults to the bundled
    /// `N = 128` sequence.
    pub reliability: Option<PathBuf>,
    /// Roster entries, see [`DecoderSpec::parse`].
    pub decoders: Vec<String>,
    pub ebn0: Vec<f64>,
    pub min_frames: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    /// Frames simulated between stopping-rule checks.
    pub chunk_frames: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub alpha: f64,
    pub max_attempts: usize,
    pub zero_threshold: f64,
    pub train: TrainingConfig,
    /// Optional CSV of per-batch training loss.
    pub loss_output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_block: 128,
            n_info: 64,
            n_crc: 24,
            crc_poly: crate::crc::CRC24C_POLY,
            crc_init: 0,
            reliability: None,
            decoders: vec!["sc".into(), "scl1".into()],
            ebn0: vec![4.5],
            min_frames: 1000,
            min_errors: 100,
            max_frames: 1_000_000,
            chunk_frames: 1000,
            seed: 1,
            output: None,
            alpha: DEFAULT_ALPHA,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            train: TrainingConfig::default(),
            loss_output: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_num(key, t))
        .collect()
}

fn parse_hex(key: &str, value: &str) -> Result<u64> {
    let v = value.trim();
    let digits = v
        .strip_prefix("0x")
        .or_else(|| v.strip_prefix("0X"))
        .unwrap_or(v);
    u64::from_str_radix(digits, 16).map_err(|_| Error::Parse(format!("{key}: bad hex '{value}'")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "n_block",
        "n_info",
        "n_crc",
        "crc_poly",
        "crc_init",
        "reliability",
        "decoders",
        "ebn0",
        "min_frames",
        "min_errors",
        "max_frames",
        "chunk_frames",
        "seed",
        "output",
        "alpha",
        "max_attempts",
        "zero_threshold",
        "list_size",
        "dataset_size",
        "batch_size",
        "learning_rate",
        "lambda_l2",
        "train_ebn0",
        "init_range",
        "rms_decay",
        "rms_epsilon",
        "steps",
        "loss_output",
    ];

    /// Sets one key. `-` in `key` is read as `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "n_block" => self.n_block = parse_num(k, value)?,
            "n_info" => self.n_info = parse_num(k, value)?,
            "n_crc" => self.n_crc = parse_num(k, value)?,
            "crc_poly" => self.crc_poly = parse_hex(k, value)?,
            "crc_init" => self.crc_init = parse_hex(k, value)?,
            "reliability" => self.reliability = optional_path(value),
            "decoders" => {
                self.decoders = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            "ebn0" => self.ebn0 = parse_list(k, value)?,
            "min_frames" => self.min_frames = parse_num(k, value)?,
            "min_errors" => self.min_errors = parse_num(k, value)?,
            "max_frames" => self.max_frames = parse_num(k, value)?,
            "chunk_frames" => self.chunk_frames = parse_num(k, value)?,
            "seed" => self.seed = parse_num(k, value)?,
            "output" => self.output = optional_path(value),
            "alpha" => self.alpha = parse_num(k, value)?,
            "max_attempts" => self.max_attempts = parse_num(k, value)?,
            "zero_threshold" => self.zero_threshold = parse_num(k, value)?,
            "list_size" => self.train.list_size = parse_num(k, value)?,
            "dataset_size" => self.train.dataset_size = parse_num(k, value)?,
            "batch_size" => self.train.batch_size = parse_num(k, value)?,
            "learning_rate" => self.train.learning_rate = parse_num(k, value)?,
            "lambda_l2" => self.train.lambda_l2 = parse_num(k, value)?,
            "train_ebn0" => self.train.ebn0_db = parse_num(k, value)?,
            "init_range" => self.train.init_range = parse_num(k, value)?,
            "rms_decay" => self.train.rms_decay = parse_num(k, value)?,
            "rms_epsilon" => self.train.rms_epsilon = parse_num(k, value)?,
            "steps" => self.train.steps = parse_num(k, value)?,
            "loss_output" => self.loss_output = optional_path(value),
            _ => return Err(Error::Parse(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.min_errors < 1 {
            return bad("min_errors must be at least 1".into());
        }
        if self.ebn0.is_empty() {
            return bad("ebn0 grid is empty".into());
        }
        if self.ebn0.iter().any(|v| !v.is_finite()) {
            return bad("ebn0 values must be finite".into());
        }
        if self.chunk_frames == 0 || self.max_frames == 0 {
            return bad("chunk_frames and max_frames must be positive".into());
        }
        if self.n_info == 0 {
            return bad("n_info must be positive".into());
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        if !(self.zero_threshold >= 0.0) {
            return bad("zero_threshold must be non-negative".into());
        }
        self.train.validate()?;
        self.code()?;
        self.crc()?;
        Ok(())
    }

    pub fn code(&self) -> Result<PolarCode> {
        match &self.reliability {
            Some(path) => {
                let order = load_reliability(path)?;
                PolarCode::new(self.n_block, self.n_info, self.n_crc, &order)
            }
            None if self.n_block == 128 => PolarCode::default_128(self.n_info, self.n_crc),
            None => Err(Error::InvalidParameter(format!(
                "N = {} needs a reliability file",
                self.n_block
            ))),
        }
    }

    pub fn crc(&self) -> Result<CrcSpec> {
        CrcSpec::new(self.n_crc, self.crc_poly, self.crc_init)
    }

    pub fn roster(&self) -> Result<Vec<DecoderSpec>> {
        if self.decoders.is_empty() {
            return Err(Error::InvalidParameter("decoder roster is empty".into()));
        }
        self.decoders
            .iter()
            .map(|d| DecoderSpec::parse(d, self))
            .collect()
    }

    /// Canonical `key = value` listing, one line per key.
    pub fn render(&self) -> String {
        let opt = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        };
        let joined = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let t = &self.train;
        let pairs: Vec<(&str, String)> = vec![
            ("n_block", self.n_block.to_string()),
            ("n_info", self.n_info.to_string()),
            ("n_crc", self.n_crc.to_string()),
            ("crc_poly", format!("{:#x}", self.crc_poly)),
            ("crc_init", format!("{:#x}", self.crc_init)),
            ("reliability", opt(&self.reliability)),
            ("decoders", self.decoders.join(",")),
            ("ebn0", joined(&self.ebn0)),
            ("min_frames", self.min_frames.to_string()),
            ("min_errors", self.min_errors.to_string()),
            ("max_frames", self.max_frames.to_string()),
            ("chunk_frames", self.chunk_frames.to_string()),
            ("seed", self.seed.to_string()),
            ("output", opt(&self.output)),
            ("alpha", self.alpha.to_string()),
            ("max_attempts", self.max_attempts.to_string()),
            ("zero_threshold", format!("{:e}", self.zero_threshold)),
            ("list_size", t.list_size.to_string()),
            ("dataset_size", t.dataset_size.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("learning_rate", format!("{:e}", t.learning_rate)),
            ("lambda_l2", t.lambda_l2.to_string()),
            ("train_ebn0", t.ebn0_db.to_string()),
            ("init_range", t.init_range.to_string()),
            ("rms_decay", t.rms_decay.to_string()),
            ("rms_epsilon", format!("{:e}", t.rms_epsilon)),
            ("steps", t.steps.to_string()),
            ("loss_output", opt(&self.loss_output)),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on a pool sized by [`worker_count`].
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Wilson score 95% half-width for `errors` out of `frames`.
pub fn wilson_half_width(errors: u64, frames: u64) -> f64 {
    if frames == 0 {
        return 0.0;
    }
    let z = 1.959_963_984_540_054;
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct FerPoint {
    pub decoder: String,
    pub ebn0_db: f64,
    pub frames: u64,
    pub errors: u64,
    /// Total decoding passes (first pass plus flip attempts).
    pub passes: u64,
}

impl FerPoint {
    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.errors as f64 / self.frames as f64
        }
    }

    pub fn ci95(&self) -> f64 {
        wilson_half_width(self.errors, self.frames)
    }

    /// Binomial standard error `√(p(1−p)/n)`.
    pub fn std_error(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        let p = self.fer();
        (p * (1.0 - p) / self.frames as f64).sqrt()
    }

    pub fn mean_attempts(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.passes as f64 / self.frames as f64
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6e},{:.6e},{:.4}",
            self.decoder,
            self.ebn0_db,
            self.frames,
            self.errors,
            self.fer(),
            self.ci95(),
            self.mean_attempts()
        )
    }
}

pub fn fer_csv(points: &[FerPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

enum Engine<'a> {
    Sc(ScDecoder<'a>),
    Scl(SclDecoder<'a>),
    Flip(SclDecoder<'a>, FlipMetric, usize),
}

impl<'a> Engine<'a> {
    fn new(code: &'a PolarCode, kind: &DecoderKind) -> Result<Self> {
        Ok(match kind {
            DecoderKind::Sc => Engine::Sc(ScDecoder::new(code)),
            DecoderKind::Scl { list_size } => Engine::Scl(SclDecoder::new(code, *list_size)?),
            DecoderKind::Sclf {
                list_size,
                alpha,
                max_attempts,
            } => Engine::Flip(
                SclDecoder::new(code, *list_size)?,
                FlipMetric::Dscf { alpha: *alpha },
                *max_attempts,
            ),
            DecoderKind::DlScl {
                list_size,
                beta,
                max_attempts,
                ..
            } => Engine::Flip(
                SclDecoder::new(code, *list_size)?,
                FlipMetric::DlScl(Arc::clone(beta)),
                *max_attempts,
            ),
        })
    }

    /// Decoded `u` and the number of decoding passes used.
    fn run(&mut self, crc: &CrcSpec, llrs: &[f64]) -> Result<(Vec<u8>, u64)> {
        match self {
            Engine::Sc(d) => Ok((d.decode(llrs)?.bits, 1)),
            Engine::Scl(d) => Ok((d.decode(llrs, Some(crc), None)?.selected().bits.clone(), 1)),
            Engine::Flip(d, metric, t) => {
                let out = flip_decode(d, crc, llrs, metric, *t)?;
                Ok((out.bits, 1 + out.attempts_used as u64))
            }
        }
    }
}

/// Draws a uniform payload, attaches the CRC, encodes and transmits. Returns
/// the payload; fills `llrs`.
pub fn simulate_frame<R: Rng + ?Sized>(
    code: &PolarCode,
    crc: &CrcSpec,
    sigma2: f64,
    rng: &mut R,
    llrs: &mut [f64],
) -> Result<Vec<u8>> {
    let payload: Vec<u8> = (0..code.n_info()).map(|_| rng.gen_range(0..2u8)).collect();
    let word = crc.attach(&payload);
    let x = code.encode(&code.embed(&word)?)?;
    transmit_into(&x, sigma2, rng, llrs);
    Ok(payload)
}

/// FER of every decoder at one Eb/N0. All decoders see the same frames;
/// each stops independently once it has `min_frames` frames and `min_errors`
/// errors, or `max_frames` frames, checked every `chunk_frames` frames.
/// Frame `f` at grid index `tag` uses `frame_rng(seed, tag, f)`, so counts do
/// not depend on the number of workers.
pub fn run_fer_point(
    code: &PolarCode,
    crc: &CrcSpec,
    roster: &[DecoderSpec],
    ebn0_db: f64,
    tag: u64,
    cfg: &ExperimentConfig,
) -> Result<Vec<FerPoint>> {
    let sigma2 = ebn0_to_sigma2(ebn0_db, code.rate())?;
    for spec in roster {
        Engine::new(code, &spec.kind)?;
    }
    let mut points: Vec<FerPoint> = roster
        .iter()
        .map(|d| FerPoint {
            decoder: d.name.clone(),
            ebn0_db,
            frames: 0,
            errors: 0,
            passes: 0,
        })
        .collect();
    let done = |p: &FerPoint| {
        p.frames >= cfg.max_frames || (p.frames >= cfg.min_frames && p.errors >= cfg.min_errors)
    };
    let mut next = 0u64;
    loop {
        let active: Vec<usize> = (0..roster.len()).filter(|&d| !done(&points[d])).collect();
        if active.is_empty() {
            break;
        }
        let end = next + cfg.chunk_frames;
        let chunk: Vec<Vec<(u64, u64, u64)>> = (next..end)
            .into_par_iter()
            .map_init(
                || {
                    let engines: Vec<Engine> = active
                        .iter()
                        .map(|&d| Engine::new(code, &roster[d].kind).expect("validated"))
                        .collect();
                    (engines, vec![0.0; code.n_block()])
                },
                |(engines, llrs), f| -> Result<Vec<(u64, u64, u64)>> {
                    let mut rng = frame_rng(cfg.seed, tag, f);
                    let payload = simulate_frame(code, crc, sigma2, &mut rng, llrs)?;
                    if f >= cfg.max_frames {
                        return Ok(vec![(0, 0, 0); active.len()]);
                    }
                    let mut row = Vec::with_capacity(active.len());
                    for engine in engines.iter_mut() {
                        let (u, passes) = engine.run(crc, llrs)?;
                        let decoded = &code.extract(&u)[..code.n_info()];
                        row.push((1, u64::from(decoded != payload.as_slice()), passes));
                    }
                    Ok(row)
                },
            )
            .collect::<Result<_>>()?;
        for row in &chunk {
            for (slot, &d) in active.iter().enumerate() {
                let (n, e, passes) = row[slot];
                points[d].frames += n;
                points[d].errors += e;
                points[d].passes += passes;
            }
        }
        next = end;
    }
    Ok(points)
}

/// Runs the whole grid; rows are grouped by Eb/N0 in grid order, decoders in
/// roster order.
pub fn run_fer(cfg: &ExperimentConfig) -> Result<Vec<FerPoint>> {
    cfg.validate()?;
    let code = cfg.code()?;
    let crc = cfg.crc()?;
    let roster = cfg.roster()?;
    let mut rows = Vec::new();
    for (tag, &ebn0) in cfg.ebn0.iter().enumerate() {
        rows.extend(run_fer_point(&code, &crc, &roster, ebn0, tag as u64, cfg)?);
    }
    Ok(rows)
}

/// Metric whose evaluation cost is counted.
#[derive(Debug, Clone, Copy)]
pub enum CountedMetric<'a> {
    Dscf,
    /// Sub-threshold entries (per the matrix's own threshold) are skipped.
    DlScl(&'a CorrelationMatrix),
}

/// Closed-form counts for one metric evaluation over `kc` bits.
pub fn count_metric_ops(metric: CountedMetric<'_>, kc: usize) -> Result<OpCountReport> {
    if kc == 0 {
        return Err(Error::InvalidParameter("K + c must be at least 1".into()));
    }
    let kc64 = kc as u64;
    Ok(match metric {
        CountedMetric::Dscf => {
            let pairs = kc64 * (kc64 + 1) / 2;
            OpCount {
                multiplications: 2 * pairs,
                additions: pairs + kc64,
                transcendentals: 2 * pairs,
            }
        }
        CountedMetric::DlScl(beta) => {
            if beta.size() != kc {
                return Err(Error::LengthMismatch {
                    expected: kc,
                    actual: beta.size(),
                });
            }
            let nnz = beta.nnz() as u64;
            let empty_rows = (0..kc)
                .filter(|&j| (0..kc).all(|i| !beta.is_active(j, i)))
                .count() as u64;
            OpCount {
                multiplications: nnz,
                additions: nnz + empty_rows - kc64,
                transcendentals: 0,
            }
        }
    })
}

/// Counts by evaluating the metric once through the instrumented arithmetic.
pub fn measure_metric_ops(metric: CountedMetric<'_>, abs_llrs: &[f64]) -> Result<OpCountReport> {
    let mut count = OpCount::default();
    match metric {
        CountedMetric::Dscf => {
            dscf_scores_with(abs_llrs, DEFAULT_ALPHA, &mut count);
        }
        CountedMetric::DlScl(beta) => {
            if beta.size() != abs_llrs.len() {
                return Err(Error::LengthMismatch {
                    expected: beta.size(),
                    actual: abs_llrs.len(),
                });
            }
            dlscl_scores_with(abs_llrs, beta, &mut count);
        }
    }
    Ok(count)
}

pub const OPS_CSV_HEADER: &str = "metric,kc,multiplications,additions,transcendentals";

pub fn ops_csv_row(metric: &str, kc: usize, r: &OpCountReport) -> String {
    format!(
        "{metric},{kc},{},{},{}",
        r.multiplications, r.additions, r.transcendentals
    )
}

/// `row,col,value` triples of `β − I`, off-diagonal entries only, row-major.
pub fn export_heatmap(beta: &CorrelationMatrix) -> String {
    let mut out = String::from("row,col,value\n");
    let n = beta.size();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let _ = writeln!(out, "{i},{j},{:?}", beta.get(i, j));
            }
        }
    }
    out
}

/// Share of off-diagonal entries with magnitude below `bound`.
pub fn fraction_below(beta: &CorrelationMatrix, bound: f64) -> f64 {
    let n = beta.size();
    if n < 2 {
        return 1.0;
    }
    let mut below = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && beta.get(i, j).abs() < bound {
                below += 1;
            }
        }
    }
    below as f64 / (n * (n - 1)) as f64
}

/// Per-batch loss as `step,loss` CSV.
pub fn loss_csv(history: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{l:?}");
    }
    out
}

/// Roster names in order, e.g. for log lines.
pub fn roster_summary(roster: &[DecoderSpec]) -> BTreeMap<String, String> {
    roster
        .iter()
        .map(|d| {
            let detail = match &d.kind {
                DecoderKind::Sc => String::new(),
                DecoderKind::Scl { .. } => String::new(),
                DecoderKind::Sclf {
                    alpha,
                    max_attempts,
                    ..
                } => format!("alpha={alpha} T={max_attempts}"),
                DecoderKind::DlScl {
                    beta_path,
                    max_attempts,
                    beta,
                    ..
                } => format!(
                    "beta={} T={max_attempts} nnz={}",
                    beta_path.display(),
                    beta.nnz()
                ),
            };
            (d.name.clone(), detail)
        })
        .collect()
}
