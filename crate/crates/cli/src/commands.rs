//! The `generate`, `experiment` and `dist` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use surreal_ensemble::analysis::{
    aggregate_runs, convergence_iteration, pooled_pmf, t_conv_model, tv_distance, ConvergenceMode, RunTrace,
};
use surreal_ensemble::evolution::run_process;
use surreal_ensemble::stochastic::integer_lower_bound;
use surreal_ensemble::{FormStore, GenParams, SplitKind, SurrealDist};

use crate::config::ExperimentConfig;
use crate::ensemble_file::EnsembleFile;
use crate::output::{aggregate_csv, dist_csv, pmf_comparison_csv, stats_csv};

/// TV distance below which a pooled final clade is reported as matching Su.
pub const TV_PASS_THRESHOLD: f64 = 0.05;

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn dist_k_max(dist: &SurrealDist) -> u32 {
    dist.pmf_table().len() as u32 - 1
}

/// Files written by [`cmd_generate`].
#[derive(Clone, Debug, Default)]
pub struct GenerateReport {
    pub ensemble: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub dist: Option<PathBuf>,
    pub roots: usize,
}

/// One run of the process; writes `ensemble.json`, `stats.csv` and/or
/// `dist.csv` into the output directory.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateReport> {
    cfg.validate()?;
    let params = GenParams { split: cfg.splits[0], ..cfg.params.clone() };
    let dist = SurrealDist::new(params.lambda, params.alpha)?;
    let mut store = FormStore::new();
    let trace = run_process(&params, &mut store, cfg.retain_clades)?;

    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut report = GenerateReport { roots: trace.final_clade.len(), ..GenerateReport::default() };
    if cfg.emit.ensemble {
        let path = cfg.out_dir.join("ensemble.json");
        EnsembleFile::from_clade(&params, &trace.final_clade, &mut store).save(&path)?;
        report.ensemble = Some(path);
    }
    if cfg.emit.stats {
        let path = cfg.out_dir.join("stats.csv");
        write(&path, &stats_csv(&trace.stats))?;
        report.stats = Some(path);
    }
    if cfg.emit.dist {
        let path = cfg.out_dir.join("dist.csv");
        write(&path, &dist_csv(&dist, dist_k_max(&dist)))?;
        report.dist = Some(path);
    }
    Ok(report)
}

/// Final-clade summary for one split kind across all runs.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSummary {
    pub split: SplitKind,
    pub runs: usize,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub tv_su: f64,
    pub tv_pass: bool,
    pub gen0_prop: f64,
    pub gen0_expected: f64,
    pub gen0_se: f64,
    pub int_prop: f64,
    pub int_prop_se: f64,
    pub int_bound: f64,
    pub mean_np_drawn: f64,
    pub mean_np_eff: f64,
    pub gen_reach99: Option<usize>,
    pub nodes_reach99: Option<usize>,
    pub gen_band1pct: Option<usize>,
    pub t_conv_model: f64,
}

pub const SUMMARY_HEADER: &str = "split,runs,n,m,lambda,alpha,tv_su,tv_pass,gen0_prop,gen0_expected,gen0_se,\
int_prop,int_prop_se,int_bound,mean_np_drawn,mean_np_eff,gen_reach99,nodes_reach99,gen_band1pct,t_conv_model";

impl SplitSummary {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.split,
            self.runs,
            self.n,
            self.m,
            self.lambda,
            self.alpha,
            self.tv_su,
            self.tv_pass,
            self.gen0_prop,
            self.gen0_expected,
            self.gen0_se,
            self.int_prop,
            self.int_prop_se,
            self.int_bound,
            self.mean_np_drawn,
            self.mean_np_eff,
            opt(self.gen_reach99),
            opt(self.nodes_reach99),
            opt(self.gen_band1pct),
            self.t_conv_model
        )
    }
}

/// Runs every seed of one split kind; `keep` decides whether ensembles are
/// serialized alongside each trace.
pub fn run_seeds(cfg: &ExperimentConfig, split: SplitKind, keep: bool) -> Result<Vec<(RunTrace, Option<EnsembleFile>)>> {
    (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let params = GenParams { split, seed: cfg.run_seed(i), ..cfg.params.clone() };
            let mut store = FormStore::new();
            let trace = run_process(&params, &mut store, cfg.retain_clades)?;
            let file = keep.then(|| EnsembleFile::from_clade(&params, &trace.final_clade, &mut store));
            Ok((trace, file))
        })
        .collect()
}

pub fn summarize(split: SplitKind, traces: &[RunTrace]) -> Result<SplitSummary> {
    let p = &traces[0].params;
    let dist = SurrealDist::new(p.lambda, p.alpha)?;
    let finals: Vec<_> = traces.iter().map(|t| t.stats.last().expect("traces hold m + 1 clades")).collect();
    let pooled = pooled_pmf(&finals.iter().map(|s| s.generation_pmf.clone()).collect::<Vec<_>>());
    let tv_su = tv_distance(&pooled, &dist.pmf_table());
    let samples = (p.n * traces.len()) as f64;
    let gen0_expected = (-p.lambda).exp();
    let int_prop = finals.iter().map(|s| s.integer_proportion).sum::<f64>() / traces.len() as f64;
    let r = traces.len() as f64;
    let mean_np_drawn = traces.iter().map(|t| t.spawns.last().map_or(0.0, |s| s.mean_drawn)).sum::<f64>() / r;
    let mean_np_eff = traces.iter().map(|t| t.spawns.last().map_or(0.0, |s| s.mean_effective)).sum::<f64>() / r;
    let agg = aggregate_runs(traces)?;
    let gen = agg.mean_series(0);
    let nodes = agg.mean_series(2);
    Ok(SplitSummary {
        split,
        runs: traces.len(),
        n: p.n,
        m: p.m,
        lambda: p.lambda,
        alpha: p.alpha,
        tv_su,
        tv_pass: tv_su < TV_PASS_THRESHOLD,
        gen0_prop: pooled[0],
        gen0_expected,
        gen0_se: (gen0_expected * (1.0 - gen0_expected) / samples).sqrt(),
        int_prop,
        int_prop_se: (int_prop * (1.0 - int_prop) / samples).sqrt(),
        int_bound: integer_lower_bound(p.lambda),
        mean_np_drawn,
        mean_np_eff,
        gen_reach99: convergence_iteration(&gen, ConvergenceMode::Reach99).ok(),
        nodes_reach99: convergence_iteration(&nodes, ConvergenceMode::Reach99).ok(),
        gen_band1pct: convergence_iteration(&gen, ConvergenceMode::Band1Pct).ok(),
        t_conv_model: t_conv_model(p.alpha),
    })
}

/// What [`cmd_experiment`] produced.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub summaries: Vec<SplitSummary>,
    pub summary_path: PathBuf,
}

/// Independent runs per split kind, aggregated per iteration.
///
/// Always writes `summary.csv`, `aggregate_<split>.csv` and
/// `final_pmf_<split>.csv`; per-run `stats_*`/`ensemble_*` files and
/// `dist.csv` follow the `emit` setting.
pub fn cmd_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dist = SurrealDist::new(cfg.params.lambda, cfg.params.alpha)?;
    let mut runs_by_split = Vec::new();
    for &split in &cfg.splits {
        runs_by_split.push((split, run_seeds(cfg, split, cfg.emit.ensemble)?));
    }

    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut summaries = Vec::new();
    for (split, runs) in &runs_by_split {
        let traces: Vec<RunTrace> = runs.iter().map(|(t, _)| t.clone()).collect();
        let agg = aggregate_runs(&traces)?;
        write(&cfg.out_dir.join(format!("aggregate_{split}.csv")), &aggregate_csv(&agg))?;
        let finals: Vec<_> = traces.iter().map(|t| t.stats.last().unwrap().generation_pmf.clone()).collect();
        write(
            &cfg.out_dir.join(format!("final_pmf_{split}.csv")),
            &pmf_comparison_csv(&pooled_pmf(&finals), &dist.pmf_table()),
        )?;
        for (i, (trace, file)) in runs.iter().enumerate() {
            if cfg.emit.stats {
                write(&cfg.out_dir.join(format!("stats_{split}_run{i}.csv")), &stats_csv(&trace.stats))?;
            }
            if let Some(file) = file {
                file.save(&cfg.out_dir.join(format!("ensemble_{split}_run{i}.json")))?;
            }
        }
        let s = summarize(*split, &traces)?;
        writeln!(summary, "{}", s.csv_row()).unwrap();
        summaries.push(s);
    }
    if cfg.emit.dist {
        write(&cfg.out_dir.join("dist.csv"), &dist_csv(&dist, dist_k_max(&dist)))?;
    }
    let summary_path = cfg.out_dir.join("summary.csv");
    write(&summary_path, &summary)?;
    Ok(ExperimentReport { summaries, summary_path })
}

/// The closed-form table of `Su(lambda, alpha)` for `k = 0..=k_max`.
pub fn cmd_dist(lambda: f64, alpha: f64, k_max: u32) -> Result<String> {
    let dist = SurrealDist::new(lambda, alpha)?;
    Ok(dist_csv(&dist, k_max))
}
