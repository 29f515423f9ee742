//! CSV writers. Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;

use surreal_ensemble::analysis::{Aggregate, CladeStats, SCALAR_NAMES};
use surreal_ensemble::SurrealDist;

pub const STATS_HEADER: &str = "iter,mean_gen,max_gen,mean_nodes,mean_edges,int_prop,mean_np_eff";
pub const DIST_HEADER: &str = "k,pmf,cdf,geom_tail";

pub fn stats_csv(stats: &[CladeStats]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.iteration, s.mean_generation, s.max_generation, s.mean_nodes, s.mean_edges, s.integer_proportion, s.mean_parents
        )
        .unwrap();
    }
    out
}

/// `k,pmf,cdf,geom_tail` for `k = 0..=k_max`; the tail column is blank at 0.
pub fn dist_csv(dist: &SurrealDist, k_max: u32) -> String {
    let mut out = String::from(DIST_HEADER);
    out.push('\n');
    for k in 0..=k_max {
        let tail = if k == 0 { String::new() } else { dist.geometric_tail(k).to_string() };
        writeln!(out, "{k},{},{},{tail}", dist.pmf(k), dist.cdf(k)).unwrap();
    }
    out
}

pub fn aggregate_header() -> String {
    let mut h = String::from("iter");
    for name in SCALAR_NAMES {
        write!(h, ",{name}_mean,{name}_se").unwrap();
    }
    h
}

pub fn aggregate_csv(agg: &Aggregate) -> String {
    let mut out = aggregate_header();
    out.push('\n');
    for (i, (mean, se)) in agg.mean.iter().zip(&agg.stderr).enumerate() {
        write!(out, "{i}").unwrap();
        for j in 0..SCALAR_NAMES.len() {
            write!(out, ",{},{}", mean[j], se[j]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `k,empirical,su_pmf` over the union of supports.
pub fn pmf_comparison_csv(empirical: &[f64], su: &[f64]) -> String {
    let mut out = String::from("k,empirical,su_pmf\n");
    for k in 0..empirical.len().max(su.len()) {
        let e = empirical.get(k).copied().unwrap_or(0.0);
        let s = su.get(k).copied().unwrap_or(0.0);
        writeln!(out, "{k},{e},{s}").unwrap();
    }
    out
}
