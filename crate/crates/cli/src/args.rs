use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const CONFIG_ENV: &str = "ICG_BPOINT_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "icg-bpoint",
    version,
    about = "B-point delineation for impedance cardiograms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect C- and B-points in one recording.
    Detect(DetectArgs),
    /// Score B-points against manual annotations.
    Eval(EvalArgs),
    /// Write a synthetic recording and its ground truth.
    Synth(SynthArgs),
    /// Write per-beat segments for manual labeling (no detector output).
    ExportSegments(ExportArgs),
    /// Detect and score many recordings, printing a summary table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Recording in text format (one sample per line).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Sampling rate in Hz; overrides the file header.
    #[arg(long)]
    pub fs: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ramp {
    StartToMinimum,
    MinimumToMaximum,
}

/// Detector settings. Flags override the config file, which overrides the
/// built-in defaults.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML detector configuration.
    #[arg(long, value_name = "PATH", env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "MS", allow_negative_numbers = true)]
    pub pre_c_window_ms: Option<f64>,
    #[arg(long, value_name = "MS", allow_negative_numbers = true)]
    pub c_min_distance_ms: Option<f64>,
    #[arg(long, value_name = "FRACTION", allow_negative_numbers = true)]
    pub c_threshold_std_fraction: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_name = "MS", allow_negative_numbers = true)]
    pub mb_min_peak_distance_ms: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mb_threshold_divisor: Option<f64>,
    /// Fallback band as a fraction of the segment peak-to-peak amplitude.
    #[arg(
        long,
        value_name = "FRACTION",
        conflicts_with = "epsilon_absolute",
        allow_negative_numbers = true
    )]
    pub epsilon_fraction: Option<f64>,
    /// Fallback band in signal units.
    #[arg(long, value_name = "VALUE", allow_negative_numbers = true)]
    pub epsilon_absolute: Option<f64>,
    #[arg(long, value_enum)]
    pub ramp: Option<Ramp>,
    #[arg(long)]
    pub filter_order: Option<usize>,
    #[arg(long, value_name = "HZ")]
    pub f_low: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub f_high: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write per-beat segment, window and transform traces.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detection file from `detect`.
    #[arg(
        long,
        value_name = "PATH",
        required_unless_present = "rec",
        conflicts_with = "rec"
    )]
    pub det: Option<PathBuf>,
    /// Recording to run detection on first.
    #[arg(long, value_name = "PATH")]
    pub rec: Option<PathBuf>,
    #[arg(long, requires = "rec")]
    pub fs: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub ann: PathBuf,
    /// Matching tolerance in ms; repeatable.
    #[arg(long = "tol", value_name = "MS", default_values_t = [30.0, 150.0])]
    pub tolerances: Vec<f64>,
    /// Write the evaluation as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "PATH")]
    pub out_rec: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out_ann: PathBuf,
    #[arg(long, default_value_t = 2000.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 60)]
    pub beats: usize,
    #[arg(long, default_value_t = 72.0)]
    pub bpm: f64,
    #[arg(long, default_value_t = 60.0)]
    pub b_to_c_ms: f64,
    #[arg(long, default_value_t = 0.15)]
    pub notch_depth: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_rms: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter_pct: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Seconds shown before each C-point.
    #[arg(long, default_value_t = 0.25)]
    pub pre: f64,
    /// Seconds shown after each C-point.
    #[arg(long, default_value_t = 0.5)]
    pub post: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Recordings; each is paired with `<ann-dir>/<file stem>.json`.
    #[arg(required = true, value_name = "RECORDING")]
    pub recordings: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub ann_dir: PathBuf,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long = "tol", value_name = "MS", default_values_t = [30.0, 150.0])]
    pub tolerances: Vec<f64>,
    /// Write the full report as JSON.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    #[command(flatten)]
    pub config: ConfigArgs,
}
