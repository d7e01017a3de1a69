use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phscrn::ErrorClass;

mod commands;

/// Boiling-flow phase screens: estimate parameters from measured data,
/// generate synthetic ensembles, and score them.
#[derive(Debug, Parser)]
#[command(name = "phscrn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate (L0, r0, vx, vy, alpha) from a frame stack.
    Estimate(EstimateArgs),
    /// Generate an ensemble of boiling-flow stacks from a parameter file.
    Generate(GenerateArgs),
    /// Score synthetic stacks against a measured stack.
    Evaluate(EvaluateArgs),
    /// Build a frame stack from CSV.
    Import(ImportArgs),
    /// Write a frame stack as long-format CSV (t,y,x,value).
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Cross-correlation lag in time-steps.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    lag: u64,
    /// Parameter file to write (TOML).
    #[arg(long)]
    out: PathBuf,
    /// Remove tilt, tip, and piston from every frame first.
    #[arg(long)]
    remove_ttp: bool,
    /// Estimate on the leading fraction of the frames only.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.8")]
    split: Option<f64>,
    /// Velocity search half-width in pixels (default K/2).
    #[arg(long)]
    max_shift: Option<usize>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    params: PathBuf,
    /// Frames per stack.
    #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
    steps: Option<usize>,
    /// Reference stack: sets the length (times --multiplier) and the
    /// sampling metadata.
    #[arg(long = "ref", value_name = "PATH")]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 20, requires = "reference")]
    multiplier: usize,
    /// Side of the output screens in pixels.
    #[arg(long)]
    size: usize,
    /// Number of stacks; member m uses seed + m.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    ensemble: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Sampling frequency, if neither the reference nor the parameter file
    /// provides one.
    #[arg(long)]
    fs_hz: Option<f64>,
    /// Wavelength, if neither the reference nor the parameter file provides
    /// one.
    #[arg(long)]
    lambda_m: Option<f64>,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    dtype: DtypeArg,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    measured: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    synthetic: Vec<PathBuf>,
    /// Welch block length for the phase TPSD.
    #[arg(long)]
    nb_phase: Option<usize>,
    /// Welch block length for the slope TPSD.
    #[arg(long)]
    nb_slope: Option<usize>,
    /// Block lengths of a reference data set; explicit --nb-* flags win.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Score only the frames after the leading fraction of the measured stack.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.8")]
    split: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImportFormat {
    /// One file with a `t,y,x,value` header.
    Long,
    /// One header-less matrix file per frame, in argument order.
    Frames,
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[arg(long, value_enum, default_value_t = ImportFormat::Long)]
    format: ImportFormat,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    delta_m: f64,
    #[arg(long)]
    fs_hz: f64,
    #[arg(long)]
    lambda_m: f64,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    dtype: DtypeArg,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DtypeArg {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    F06,
    F12,
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("PHSCRN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PHSCRN_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Generate(a) => commands::generate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Import(a) => commands::import(a),
        Command::Export(a) => commands::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(commands::Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numeric => EXIT_NUMERIC,
            })
        }
    }
}
