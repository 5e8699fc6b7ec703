use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaa::error::{GaaError, Result};
use gaa::overlay::overlay_files;
use gaa::pipeline::{Pipeline, PipelineConfig, Stage};

/// Region-guided anomaly mask synthesis.
#[derive(Parser)]
#[command(name = "gaa", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun stages even when their outputs are up to date.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute fused descriptors of every anomaly record.
    Features,
    /// Multi-round clustering per defect label.
    Cluster,
    /// Enhance ground-truth masks into the mask pool.
    Enhance,
    /// Place pool masks into normal images following the plan.
    Place,
    /// Train the noise discriminator on normal images.
    TrainFilter,
    /// Score every placed pair.
    Score,
    /// Keep the best-scoring pairs per cluster and kind.
    Filter,
    /// Run every stage in order.
    Pipeline,
    /// Tint a mask (and optionally a score map) over an image.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        /// Trained filter; adds a score heat tint.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 127)]
        threshold: u8,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn stages(cmd: &Command) -> Vec<Stage> {
    match cmd {
        Command::Features => vec![Stage::Features],
        Command::Cluster => vec![Stage::Cluster],
        Command::Enhance => vec![Stage::Enhance],
        Command::Place => vec![Stage::Place],
        Command::TrainFilter => vec![Stage::TrainFilter],
        Command::Score => vec![Stage::Score],
        Command::Filter => vec![Stage::Filter],
        Command::Pipeline => Stage::ALL.to_vec(),
        Command::Overlay { .. } => Vec::new(),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Overlay { image, mask, model, threshold, output } = &cli.command {
        return overlay_files(image, mask, model.as_deref(), *threshold, output);
    }
    let path = cli.config.as_ref().ok_or_else(|| GaaError::Config("--config is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pipeline = Pipeline::new(cfg, cli.force)?;
    pipeline.run(&stages(&cli.command))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
