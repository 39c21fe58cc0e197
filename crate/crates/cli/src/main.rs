use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use motionaware_cli::{detect, fuse, report, simulate, train, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "motionaware", version, about = "Motion-aware anomaly detection pipeline")]
struct Cli {
    /// Key-value configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory of the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sets a configuration key, e.g. `--set kf.q=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training and test trajectories (and optionally frames).
    Simulate {
        /// Also render PNG frames for each run.
        #[arg(long)]
        frames: bool,
    },
    /// Fit the velocity field, segment zones and persist the model.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score test trajectories against a persisted model.
    Detect {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Join an innovation CSV with frame-level scores.
    Fuse {
        /// Innovation CSV written by `detect`.
        #[arg(long)]
        sl: PathBuf,
        /// Frame-level score CSV; omitted for SL-only runs.
        #[arg(long)]
        pl: Option<PathBuf>,
    },
    /// Write plot-ready CSVs and a text summary.
    Report {
        /// Directory holding `detect` (and optionally `fuse`) output.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    let paths = cfg.paths.clone();

    match cli.command {
        Command::Simulate { frames } => {
            let out = cli.out.unwrap_or(paths.data_dir);
            simulate(&cfg, &out, frames)?;
            println!("simulated data written to {}", out.display());
        }
        Command::Train { data } => {
            let out = cli.out.unwrap_or(paths.model_dir);
            let model = train(&cfg, &data.unwrap_or(paths.data_dir), &out)?;
            println!(
                "model with {} zones written to {}",
                model.zones.zones().len(),
                out.display()
            );
        }
        Command::Detect { data, model } => {
            let out = cli.out.unwrap_or(paths.out_dir);
            let scored = detect(
                &cfg,
                &model.unwrap_or(paths.model_dir),
                &data.unwrap_or(paths.data_dir),
                &out,
            )?;
            for s in &scored {
                println!(
                    "{}: {} records, abnormal fraction {:.4}, {} abnormal runs",
                    s.name,
                    s.summary.records,
                    s.summary.abnormal_fraction,
                    s.summary.runs.len()
                );
            }
        }
        Command::Fuse { sl, pl } => {
            let out = cli.out.unwrap_or(paths.out_dir);
            let (_, summary) = fuse(&cfg, &sl, pl.as_deref(), &out)?;
            match summary.overlap_ratio {
                Some(o) => println!("fused {} records, overlap ratio {o:.4}", summary.records),
                None => println!("fused {} records (SL only: {})", summary.records, summary.sl_only),
            }
        }
        Command::Report { input } => {
            let out = cli.out.unwrap_or_else(|| paths.out_dir.clone());
            let text = report(&cfg, &input.unwrap_or(paths.out_dir), &out)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
