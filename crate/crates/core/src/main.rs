use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polarflip::harness::{
    count_metric_ops, export_heatmap, fer_csv, fraction_below, loss_csv, ops_csv_row,
    roster_summary, run_fer, with_workers, worker_count, CountedMetric, ExperimentConfig,
    OPS_CSV_HEADER,
};
use polarflip::matrix_file::{parse_plain_matrix, read_beta, write_beta, BetaHeader};
use polarflip::train::train;
use polarflip::{CorrelationMatrix, Error, Result};

#[derive(Parser)]
#[command(
    name = "polarflip",
    version,
    about = "Polar SC/SCL/bit-flip decoding workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo FER sweep; CSV to `output` or stdout.
    Fer(ConfigArgs),
    /// Collect failed frames, train β and write it to `output`.
    Train(ConfigArgs),
    /// Operation counts of one flip-metric evaluation.
    CountOps(CountOpsArgs),
    /// Write the off-diagonal entries of β − I as `row,col,value` CSV.
    ExportBeta(ExportArgs),
    /// Convert a bare square matrix into a validated β file.
    ImportBeta(ImportArgs),
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_block: Option<String>,
    #[arg(long)]
    n_info: Option<String>,
    #[arg(long)]
    n_crc: Option<String>,
    #[arg(long)]
    crc_poly: Option<String>,
    #[arg(long)]
    crc_init: Option<String>,
    #[arg(long)]
    reliability: Option<String>,
    /// e.g. `sc,scl4,sclf4,dlscl4@beta4.txt`
    #[arg(long)]
    decoders: Option<String>,
    /// Comma-separated Eb/N0 grid in dB.
    #[arg(long)]
    ebn0: Option<String>,
    #[arg(long)]
    min_frames: Option<String>,
    #[arg(long)]
    min_errors: Option<String>,
    #[arg(long)]
    max_frames: Option<String>,
    #[arg(long)]
    chunk_frames: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    max_attempts: Option<String>,
    #[arg(long)]
    zero_threshold: Option<String>,
    #[arg(long)]
    list_size: Option<String>,
    #[arg(long)]
    dataset_size: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    lambda_l2: Option<String>,
    #[arg(long)]
    train_ebn0: Option<String>,
    #[arg(long)]
    init_range: Option<String>,
    #[arg(long)]
    rms_decay: Option<String>,
    #[arg(long)]
    rms_epsilon: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    loss_output: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("n_block", &self.n_block),
            ("n_info", &self.n_info),
            ("n_crc", &self.n_crc),
            ("crc_poly", &self.crc_poly),
            ("crc_init", &self.crc_init),
            ("reliability", &self.reliability),
            ("decoders", &self.decoders),
            ("ebn0", &self.ebn0),
            ("min_frames", &self.min_frames),
            ("min_errors", &self.min_errors),
            ("max_frames", &self.max_frames),
            ("chunk_frames", &self.chunk_frames),
            ("seed", &self.seed),
            ("output", &self.output),
            ("alpha", &self.alpha),
            ("max_attempts", &self.max_attempts),
            ("zero_threshold", &self.zero_threshold),
            ("list_size", &self.list_size),
            ("dataset_size", &self.dataset_size),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("lambda_l2", &self.lambda_l2),
            ("train_ebn0", &self.train_ebn0),
            ("init_range", &self.init_range),
            ("rms_decay", &self.rms_decay),
            ("rms_epsilon", &self.rms_epsilon),
            ("steps", &self.steps),
            ("loss_output", &self.loss_output),
        ]
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Dscf,
    Dlscl,
}

#[derive(Args)]
struct CountOpsArgs {
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// Number of information plus CRC bits.
    #[arg(long)]
    kc: Option<usize>,
    /// β file for the correlation metric; dense when omitted.
    #[arg(long)]
    beta: Option<PathBuf>,
    #[arg(long, default_value_t = polarflip::flip::DEFAULT_ZERO_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    beta: PathBuf,
    /// Destination CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    /// Square matrix, one row per line, whitespace or comma separated.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 128)]
    n_block: usize,
    #[arg(long, default_value_t = 64)]
    n_info: usize,
    #[arg(long, default_value_t = 24)]
    n_crc: usize,
    #[arg(long, default_value_t = 1)]
    list_size: usize,
}

fn log_start(name: &str, cfg: Option<&ExperimentConfig>) {
    eprintln!("polarflip {} {name}", env!("CARGO_PKG_VERSION"));
    eprintln!("workers = {}", worker_count());
    if let Some(cfg) = cfg {
        eprint!("{}", cfg.render());
    }
}

fn emit(output: Option<&std::path::Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_fer(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    log_start("fer", Some(&cfg));
    for (name, detail) in roster_summary(&cfg.roster()?) {
        eprintln!("decoder {name} {detail}");
    }
    let rows = with_workers(|| run_fer(&cfg))??;
    emit(cfg.output.as_deref(), &fer_csv(&rows))
}

fn cmd_train(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    log_start("train", Some(&cfg));
    let output = cfg
        .output
        .clone()
        .ok_or_else(|| Error::InvalidParameter("train needs an output path".into()))?;
    let code = cfg.code()?;
    let crc = cfg.crc()?;
    let (outcome, data) = with_workers(|| train(&code, &crc, &cfg.train, cfg.seed))??;
    eprintln!(
        "collected {} samples from {} frames",
        data.samples.len(),
        data.frames
    );
    let h = &outcome.loss_history;
    eprintln!(
        "steps = {}, first loss = {:.6}, last loss = {:.6}",
        h.len(),
        h.first().copied().unwrap_or(f64::NAN),
        h.last().copied().unwrap_or(f64::NAN)
    );
    let header = BetaHeader {
        n_block: code.n_block(),
        n_info: code.n_info(),
        n_crc: code.n_crc(),
        list_size: cfg.train.list_size,
    };
    write_beta(&output, &header, &outcome.beta)?;
    eprintln!("wrote {}", output.display());
    let sparse = outcome.beta.clone().with_zero_threshold(cfg.zero_threshold);
    eprintln!(
        "nnz after thresholding = {}, |β−I| < 0.1 share = {:.4}",
        sparse.nnz(),
        fraction_below(&outcome.beta, 0.1)
    );
    if let Some(path) = &cfg.loss_output {
        std::fs::write(path, loss_csv(h))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_count_ops(args: &CountOpsArgs) -> Result<()> {
    log_start("count-ops", None);
    let (name, kc, report) = match args.metric {
        MetricArg::Dscf => {
            let kc = args
                .kc
                .ok_or_else(|| Error::InvalidParameter("--kc is required for dscf".into()))?;
            ("dscf", kc, count_metric_ops(CountedMetric::Dscf, kc)?)
        }
        MetricArg::Dlscl => {
            let beta = match &args.beta {
                Some(path) => read_beta(path, args.threshold)?.matrix,
                None => {
                    let kc = args.kc.ok_or_else(|| {
                        Error::InvalidParameter("--kc or --beta is required".into())
                    })?;
                    dense(kc)?
                }
            };
            if let Some(kc) = args.kc {
                if kc != beta.size() {
                    return Err(Error::LengthMismatch {
                        expected: kc,
                        actual: beta.size(),
                    });
                }
            }
            let kc = beta.size();
            (
                "dlscl",
                kc,
                count_metric_ops(CountedMetric::DlScl(&beta), kc)?,
            )
        }
    };
    println!("{OPS_CSV_HEADER}");
    println!("{}", ops_csv_row(name, kc, &report));
    Ok(())
}

/// All-ones matrix: every entry active.
fn dense(kc: usize) -> Result<CorrelationMatrix> {
    CorrelationMatrix::new(kc, vec![1.0; kc * kc], 0.0)
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    log_start("export-beta", None);
    let file = read_beta(&args.beta, 0.0)?;
    emit(args.output.as_deref(), &export_heatmap(&file.matrix))
}

fn cmd_import(args: &ImportArgs) -> Result<()> {
    log_start("import-beta", None);
    let text = std::fs::read_to_string(&args.input)?;
    let (size, entries) = parse_plain_matrix(&text)?;
    let header = BetaHeader {
        n_block: args.n_block,
        n_info: args.n_info,
        n_crc: args.n_crc,
        list_size: args.list_size,
    };
    if header.size() != size {
        return Err(Error::LengthMismatch {
            expected: header.size(),
            actual: size,
        });
    }
    let matrix = CorrelationMatrix::new(size, entries, 0.0)?;
    write_beta(&args.output, &header, &matrix)?;
    eprintln!(
        "wrote {} ({size}x{size}, nnz {})",
        args.output.display(),
        matrix.nnz()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fer(a) => cmd_fer(a),
        Command::Train(a) => cmd_train(a),
        Command::CountOps(a) => cmd_count_ops(a),
        Command::ExportBeta(a) => cmd_export(a),
        Command::ImportBeta(a) => cmd_import(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
