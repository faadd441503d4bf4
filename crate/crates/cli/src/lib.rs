//! `ihards`: one binary driving the pipeline a stage at a time.
//!
//! Exit codes: 0 success, 2 configuration, 3 data, 4 numeric failure.

mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use ihards_core::ErrorKind;

pub use config::parse_config;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<ihards_core::Error> for CliError {
    fn from(e: ihards_core::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => EXIT_CONFIG,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Numeric => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Integrated HAR pipeline: ingest, integrate, prune correlated features,
/// train and evaluate 1D CNNs.
#[derive(Debug, Parser)]
#[command(name = "ihards", version)]
pub struct Cli {
    /// Read defaults from a `key = value` file; command-line flags win.
    /// A run manifest is a valid config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Ingest the three sources and write an integrated IHDS container.
    Integrate(IntegrateArgs),
    /// Write synthetic sources in the public datasets' native layouts.
    Synth(SynthArgs),
    /// Fit correlations and write a DRWCC feature mask.
    Analyze(AnalyzeArgs),
    /// Split, train and evaluate; writes checkpoints and reports.
    Train(TrainArgs),
    /// Score a checkpoint on an IHDS container.
    Eval(EvalArgs),
    /// Write per-row class predictions from a checkpoint.
    Predict(PredictArgs),
    /// Time the conv and dense kernels while doubling one size at a time.
    Benchmark(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Draw with replacement when a class is short.
    Replace,
    /// Fail when a class is short.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    /// Every row of the container.
    All,
    /// The test half of the seeded 50/50 split.
    Test,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// UCI-HAR dataset directory.
    #[arg(long, value_name = "DIR")]
    pub uci: Option<PathBuf>,
    /// WISDM v1.1 raw accelerometer file.
    #[arg(long, value_name = "FILE")]
    pub wisdm: Option<PathBuf>,
    /// KU-HAR CSV file.
    #[arg(long, value_name = "FILE")]
    pub kuhar: Option<PathBuf>,
    /// Directory holding all three sources under their usual names.
    #[arg(long, env = "IHARDS_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Use generated Gaussian class blobs instead of real sources.
    #[arg(long)]
    pub synthetic: bool,
    /// Noise level of the synthetic blobs.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Rows drawn per class.
    #[arg(long, default_value_t = 420_000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// What to do when a source has fewer rows of a class than requested.
    #[arg(long, value_enum, default_value_t = Policy::Replace)]
    pub policy: Policy,
    /// Label map overriding the built-in UCI-HAR map.
    #[arg(long, value_name = "FILE")]
    pub uci_map: Option<PathBuf>,
    /// Label map overriding the built-in WISDM map.
    #[arg(long, value_name = "FILE")]
    pub wisdm_map: Option<PathBuf>,
    /// Label map overriding the built-in KU-HAR map.
    #[arg(long, value_name = "FILE")]
    pub kuhar_map: Option<PathBuf>,
    /// KU-HAR label column (default: last).
    #[arg(long, value_name = "COL")]
    pub kuhar_label_col: Option<usize>,
    /// KU-HAR feature columns, comma separated (default: the 7 before the label).
    #[arg(long, value_name = "COLS")]
    pub kuhar_feature_cols: Option<String>,
    /// Output IHDS container.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also export a CSV copy (small datasets only).
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Source rows per class.
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input IHDS container.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Drop a column when |r| with an earlier kept column exceeds this.
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Fit on every row instead of the training half of the split.
    #[arg(long)]
    pub fit_on_all: bool,
    /// Split seed; use the same seed as `train`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output mask file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Correlation summary file (default: `<out>.summary.txt`).
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input IHDS container.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Feature mask from `analyze`.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// Built-in architecture: arch1 to arch5.
    #[arg(long, default_value = "arch4")]
    pub arch: String,
    /// Architecture description file; takes precedence over --arch.
    #[arg(long, value_name = "FILE")]
    pub arch_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Independent seeded runs; metrics are reported as mean and stddev.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint (IHCK) file.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Raw IHDS container; masking and standardization come from the model.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    /// Split seed (default: the seed recorded in the checkpoint).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Checkpoint (IHCK) file.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Raw IHDS container; labels are not needed.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Output CSV: `row,class_code,class`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Timed trials per size; the median is used.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Conv input length n.
    #[arg(long, default_value_t = 2048)]
    pub length: usize,
    /// Conv kernel size k.
    #[arg(long, default_value_t = 8)]
    pub kernel: usize,
    /// Conv input channels d.
    #[arg(long, default_value_t = 16)]
    pub channels: usize,
    /// Conv filters f.
    #[arg(long, default_value_t = 32)]
    pub filters: usize,
    #[arg(long, default_value_t = 2048)]
    pub dense_in: usize,
    #[arg(long, default_value_t = 256)]
    pub dense_out: usize,
    /// Minimum wall time per timed sample, in milliseconds.
    #[arg(long, default_value_t = 40)]
    pub min_sample_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report to this file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn command() -> clap::Command {
    Cli::command()
}

/// Effective settings of the chosen subcommand as `key = value` lines,
/// in flag order. Defaults are included so the run can be repeated from it.
fn effective_config(matches: &clap::ArgMatches) -> (String, Vec<(String, String)>) {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = command();
    let sub_cmd = cmd.find_subcommand(name).expect("known subcommand");
    let mut out = Vec::new();
    for arg in sub_cmd.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(id, "help" | "version" | "config") {
            continue;
        }
        let value = match arg.get_action() {
            ArgAction::SetTrue => Some(sub.get_flag(id).to_string()),
            _ => sub.get_raw(id).map(|vals| {
                vals.map(|v| v.to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join(",")
            }),
        };
        if let Some(v) = value {
            out.push((long.to_string(), v));
        }
    }
    (name.to_string(), out)
}

pub(crate) struct Manifest {
    pub subcommand: String,
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# ihards {} manifest\n# ihards version {}\n# rerun: ihards {} --config <this file>\n",
            self.subcommand,
            env!("CARGO_PKG_VERSION"),
            self.subcommand
        );
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(path, self.to_text())
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
    match run_args(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn run_args(args: Vec<OsString>) -> Result<(), CliError> {
    let cmd = command();
    let args = config::merge_config(&cmd, args)?;
    let matches = match cmd.try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return Ok(());
            }
            return Err(CliError::config(e.render().to_string().trim_end().trim_start_matches("error: ")));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::config(e.to_string()))?;
    let (subcommand, entries) = effective_config(&matches);
    let manifest = Manifest { subcommand, entries };
    eprintln!("effective config ({}):", manifest.subcommand);
    for (k, v) in &manifest.entries {
        eprintln!("  {k} = {v}");
    }
    run::dispatch(&cli.command, &manifest)
}
