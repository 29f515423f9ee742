use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use surreal_cli::{cmd_dist, cmd_experiment, cmd_generate, ExperimentConfig};

#[derive(Parser)]
#[command(name = "surreal", version, about = "Evolve random ensembles of surreal forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the process once and write the final ensemble and per-clade stats.
    Generate(RunArgs),
    /// Run many seeds (per split kind) and write aggregated statistics.
    Experiment(RunArgs),
    /// Tabulate pmf, cdf and geometric tail of Su(lambda, alpha).
    Dist {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 40)]
        k_max: u32,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "g0-max")]
    g0_max: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// uniform, binomial, or both
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Run i uses seed + i * stride.
    #[arg(long = "seed-stride")]
    seed_stride: Option<u64>,
    /// keep-youngest (default) or keep-oldest
    #[arg(long)]
    dedup: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "retain-clades")]
    retain_clades: bool,
    /// Comma list drawn from ensemble, stats, dist.
    #[arg(long)]
    emit: Option<String>,
}

impl RunArgs {
    fn into_config(self, default_emit: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        cfg.set("emit", default_emit)?;
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let overrides = [
            ("n", self.n.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("g0-max", self.g0_max.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("split", self.split),
            ("seed", self.seed.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("seed-stride", self.seed_stride.map(|v| v.to_string())),
            ("dedup", self.dedup),
            ("out", self.out.map(|v| v.display().to_string())),
            ("emit", self.emit),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        if self.retain_clades {
            cfg.retain_clades = true;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.into_config("ensemble,stats")?;
            let report = cmd_generate(&cfg)?;
            for path in [report.ensemble, report.stats, report.dist].into_iter().flatten() {
                println!("wrote {}", path.display());
            }
        }
        Command::Experiment(args) => {
            let cfg = args.into_config("stats")?;
            let report = cmd_experiment(&cfg)?;
            for s in &report.summaries {
                println!(
                    "{}: TV(final, Su) = {:.4} [{}], integer proportion {:.4} (bound {:.4}), P(gen 0) {:.4} (expected {:.4})",
                    s.split,
                    s.tv_su,
                    if s.tv_pass { "pass" } else { "fail" },
                    s.int_prop,
                    s.int_bound,
                    s.gen0_prop,
                    s.gen0_expected
                );
            }
            println!("wrote {}", report.summary_path.display());
        }
        Command::Dist { lambda, alpha, k_max, out } => {
            let table = cmd_dist(lambda, alpha, k_max)?;
            match out {
                Some(path) => fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
