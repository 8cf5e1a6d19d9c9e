use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use crater_trn::detect::pgm::load_pgm;
use crater_trn::detect::{detect_from_mask, MaskPipelineParams};
use crater_trn::run::{execute, replay, Command, Overrides, RunError, RunInput};

/// Crater-based terrain-relative navigation simulator.
#[derive(Debug, Parser)]
#[command(name = "crater-trn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Monte-Carlo trials for one detector profile and brightness.
    Run(RunArgs),
    /// Profile × brightness grid of Monte-Carlo summaries.
    Compare(RunArgs),
    /// Ellipse detections from a rim-prediction mask (binary PGM).
    Detect(DetectArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration, or a manifest.toml from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    brightness: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Crater catalog CSV (id,lat_deg,lon_deg,diameter_km).
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    mask: PathBuf,
    /// Pixels must exceed this fraction of full scale.
    #[arg(long, default_value_t = MaskPipelineParams::default().certainty)]
    certainty: f64,
    #[arg(long, default_value_t = MaskPipelineParams::default().min_pixels)]
    min_pixels: usize,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            trials: self.trials,
            seed: self.seed,
            profile: self.profile.clone(),
            brightness: self.brightness,
            catalog: self.catalog.clone(),
        }
    }
}

fn run(args: &RunArgs, command: Command) -> Result<(), RunError> {
    let input = match &args.config {
        Some(path) => RunInput::load(path)?,
        None => RunInput::Config(Default::default()),
    };
    let overrides = args.overrides();
    let outcome = match input {
        RunInput::Manifest(m) if overrides == Overrides::default() => replay(&m, &args.out)?,
        other => {
            let mut cfg = other.config().clone();
            cfg.apply(&overrides);
            execute(&cfg, command, &args.out, None)?
        }
    };
    for s in &outcome.summaries {
        eprintln!(
            "{} brightness {:+.2}: final position error {:.3} m (σ {:.3}), velocity {:.4} m/s, {} of {} trials diverged",
            s.profile, s.brightness, s.final_pos_err_mean_m, s.final_pos_err_sigma_m, s.final_vel_err_mean_mps, s.diverged, s.trials
        );
    }
    for p in &outcome.outputs {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn detect(args: &DetectArgs) -> ExitCode {
    let mask = match load_pgm(&args.mask) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", args.mask.display());
            return ExitCode::from(2);
        }
    };
    let params = MaskPipelineParams { certainty: args.certainty, min_pixels: args.min_pixels, ..Default::default() };
    for d in detect_from_mask(&mask, &params) {
        println!("{:.6},{:.6},{:.6},{:.6},{:.6}", d.u, d.v, d.major_axis, d.minor_axis, d.orientation);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Cmd::Run(a) => run(a, Command::Run),
        Cmd::Compare(a) => run(a, Command::Compare),
        Cmd::Detect(a) => return detect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
