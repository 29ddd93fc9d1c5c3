use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dbloc::formats::report::render_csv;
use dbloc::pipeline;
use dbloc::PipelineConfig;
use dbloc_core::fusion::FusionMethod;

/// Detection-by-localization change detection.
#[derive(Debug, Parser)]
#[command(name = "dbloc", version)]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, default_value = "dbloc.toml")]
    config: PathBuf,

    /// Restrict detect/eval to one fusion method.
    #[arg(long, global = true)]
    method: Option<String>,

    /// Evaluate a single no-change RoC bound instead of the configured sweep.
    #[arg(long, global = true)]
    roc_neg_max: Option<f64>,

    /// Overrides both the synthetic-data seed and the fusion seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory: the dataset root for `synth`, the work directory
    /// otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the reference-subimage database.
    Index,
    /// Localize queries and write LoC maps and per-proposal records.
    Detect,
    /// Compute the AP report from detection records.
    Eval,
    /// Generate a seeded synthetic benchmark.
    Synth,
}

fn load_config(cli: &Cli, required: bool) -> anyhow::Result<PipelineConfig> {
    let mut cfg = if required || cli.config.exists() {
        PipelineConfig::load(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?
    } else {
        PipelineConfig::default()
    };
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
        cfg.fusion.seed = seed;
    }
    if let Some(m) = &cli.method {
        if FusionMethod::parse(m).is_none() {
            bail!("unknown fusion method `{m}`");
        }
        cfg.fusion.methods = vec![m.clone()];
    }
    if let Some(v) = cli.roc_neg_max {
        cfg.evaluation.roc_neg_max_sweep = vec![v];
    }
    if let (Some(out), false) = (&cli.out, matches!(cli.command, Command::Synth)) {
        cfg.paths.work_dir = absolute(out)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn absolute(p: &Path) -> anyhow::Result<PathBuf> {
    Ok(std::path::absolute(p)?)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Synth => {
            let Some(out) = &cli.out else {
                bail!("synth needs --out <dir>");
            };
            let cfg = load_config(cli, false)?;
            let path = pipeline::synth(&cfg.synth, cfg.workers, out)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Index => {
            let cfg = load_config(cli, true)?;
            let s = pipeline::index(&cfg)?;
            println!("indexed {} subimages from {} reference images", s.entries, s.images);
            Ok(true)
        }
        Command::Detect => {
            let cfg = load_config(cli, true)?;
            let s = pipeline::detect(&cfg, &cfg.methods()?)?;
            for (id, msg) in &s.failures {
                eprintln!("{id}: {msg}");
            }
            println!("{} samples, {} failed", s.samples, s.failures.len());
            Ok(s.failures.is_empty())
        }
        Command::Eval => {
            let cfg = load_config(cli, true)?;
            let report = pipeline::eval(&cfg, &cfg.methods()?, &cfg.evaluation.roc_neg_max_sweep)?;
            print!("{}", render_csv(&report));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
