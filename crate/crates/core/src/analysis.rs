//! Statistics over clades and runs.

use crate::error::CoreError;
use crate::evolution::{Clade, GenParams, SpawnSummary};
use crate::form::FormStore;

/// A PMF over non-negative integers, indexed by outcome.
pub type Pmf = Vec<f64>;

/// Summary statistics of one clade.
#[derive(Clone, Debug, PartialEq)]
pub struct CladeStats {
    pub iteration: usize,
    pub generation_pmf: Pmf,
    pub mean_generation: f64,
    pub max_generation: u32,
    pub mean_nodes: f64,
    pub max_nodes: u64,
    pub mean_edges: f64,
    pub max_edges: u64,
    pub integer_proportion: f64,
    /// Proportion of members whose value has denominator `2^k`, indexed by `k`.
    pub denominator_exponents: Pmf,
    /// Mean of `|L| + |R|`, i.e. the parent count after deduplication.
    pub mean_parents: f64,
}

/// Names of the scalar statistics, in [`CladeStats::scalars`] order.
pub const SCALAR_NAMES: [&str; 8] = [
    "mean_gen",
    "max_gen",
    "mean_nodes",
    "max_nodes",
    "mean_edges",
    "max_edges",
    "int_prop",
    "mean_np_eff",
];

impl CladeStats {
    pub fn scalars(&self) -> [f64; 8] {
        [
            self.mean_generation,
            f64::from(self.max_generation),
            self.mean_nodes,
            self.max_nodes as f64,
            self.mean_edges,
            self.max_edges as f64,
            self.integer_proportion,
            self.mean_parents,
        ]
    }
}

/// Everything recorded about one run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub params: GenParams,
    /// One entry per clade, the initial clade included.
    pub stats: Vec<CladeStats>,
    /// Parent-count diagnostics for clades `1..=m`.
    pub spawns: Vec<SpawnSummary>,
    pub final_clade: Clade,
    pub clades: Option<Vec<Clade>>,
}

impl RunTrace {
    /// One scalar statistic across iterations.
    pub fn series(&self, stat: usize) -> Vec<f64> {
        self.stats.iter().map(|s| s.scalars()[stat]).collect()
    }
}

fn normalize_counts(counts: &[u64]) -> Pmf {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

pub fn empirical_generation_pmf(clade: &Clade, store: &mut FormStore) -> Pmf {
    assert!(!clade.is_empty(), "empty clade has no generation distribution");
    let mut counts: Vec<u64> = Vec::new();
    for &x in &clade.members {
        let g = store.generation(x) as usize;
        if counts.len() <= g {
            counts.resize(g + 1, 0);
        }
        counts[g] += 1;
    }
    normalize_counts(&counts)
}

/// Half the L1 distance between two PMFs over their joint support.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (get(p, i) - get(q, i)).abs()).sum::<f64>()
}

/// Element-wise mean of several PMFs.
pub fn pooled_pmf(pmfs: &[Pmf]) -> Pmf {
    let n = pmfs.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![0.0; n];
    for p in pmfs {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= pmfs.len() as f64);
    out
}

pub fn clade_stats(clade: &Clade, store: &mut FormStore) -> CladeStats {
    assert!(!clade.is_empty(), "empty clade has no statistics");
    let n = clade.len() as f64;
    let mut gen_counts: Vec<u64> = Vec::new();
    let mut denom_counts: Vec<u64> = Vec::new();
    let (mut sum_gen, mut sum_nodes, mut sum_edges, mut sum_parents) = (0u64, 0u64, 0u64, 0u64);
    let (mut max_gen, mut max_nodes, mut max_edges) = (0u32, 0u64, 0u64);
    for &x in &clade.members {
        let g = store.generation(x);
        if gen_counts.len() <= g as usize {
            gen_counts.resize(g as usize + 1, 0);
        }
        gen_counts[g as usize] += 1;
        sum_gen += u64::from(g);
        max_gen = max_gen.max(g);

        let m = store.dag_metrics(x);
        sum_nodes += m.nodes;
        sum_edges += m.edges;
        max_nodes = max_nodes.max(m.nodes);
        max_edges = max_edges.max(m.edges);

        let k = store.value(x).exponent() as usize;
        if denom_counts.len() <= k {
            denom_counts.resize(k + 1, 0);
        }
        denom_counts[k] += 1;
        sum_parents += store.parent_count(x) as u64;
    }
    let denominator_exponents = normalize_counts(&denom_counts);
    CladeStats {
        iteration: clade.iteration,
        generation_pmf: normalize_counts(&gen_counts),
        mean_generation: sum_gen as f64 / n,
        max_generation: max_gen,
        mean_nodes: sum_nodes as f64 / n,
        max_nodes,
        mean_edges: sum_edges as f64 / n,
        max_edges,
        integer_proportion: denominator_exponents[0],
        denominator_exponents,
        mean_parents: sum_parents as f64 / n,
    }
}

/// Per-iteration mean and standard error of every scalar statistic across runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub mean: Vec<[f64; 8]>,
    pub stderr: Vec<[f64; 8]>,
}

impl Aggregate {
    pub fn mean_series(&self, stat: usize) -> Vec<f64> {
        self.mean.iter().map(|row| row[stat]).collect()
    }
}

pub fn aggregate_runs(traces: &[RunTrace]) -> Result<Aggregate, CoreError> {
    let first = traces
        .first()
        .ok_or_else(|| CoreError::InvalidParameter("no runs to aggregate".into()))?;
    let len = first.stats.len();
    for t in traces {
        let same = GenParams { seed: first.params.seed, ..t.params.clone() };
        if same != first.params || t.stats.len() != len {
            return Err(CoreError::InvalidParameter("runs differ in more than their seed".into()));
        }
    }
    let r = traces.len() as f64;
    let mut mean = vec![[0.0; 8]; len];
    let mut stderr = vec![[0.0; 8]; len];
    for i in 0..len {
        for j in 0..8 {
            let xs: Vec<f64> = traces.iter().map(|t| t.stats[i].scalars()[j]).collect();
            let mu = xs.iter().sum::<f64>() / r;
            mean[i][j] = mu;
            if traces.len() > 1 {
                let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (r - 1.0);
                stderr[i][j] = (var / r).sqrt();
            }
        }
    }
    Ok(Aggregate { runs: traces.len(), mean, stderr })
}

/// How convergence of a series is judged against its eventual mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceMode {
    /// First index at which the value reaches 99% of the eventual mean.
    Reach99,
    /// First index after which every value stays within 1% of it.
    Band1Pct,
}

/// Default number of trailing entries averaged into the eventual mean.
pub const EVENTUAL_WINDOW: usize = 10;

pub fn convergence_iteration(series: &[f64], mode: ConvergenceMode) -> Result<usize, CoreError> {
    convergence_iteration_with(series, mode, EVENTUAL_WINDOW)
}

pub fn convergence_iteration_with(series: &[f64], mode: ConvergenceMode, window: usize) -> Result<usize, CoreError> {
    if series.len() < 20 || window == 0 || window > series.len() {
        return Err(CoreError::InvalidParameter(format!(
            "need at least 20 points and a window within the series, got {} and {window}",
            series.len()
        )));
    }
    let tail = &series[series.len() - window..];
    let eventual = tail.iter().sum::<f64>() / window as f64;
    match mode {
        ConvergenceMode::Reach99 => series
            .iter()
            .position(|&v| v >= 0.99 * eventual)
            .ok_or(CoreError::NotConverged),
        ConvergenceMode::Band1Pct => {
            let band = 0.01 * eventual.abs();
            let outside = series.iter().rposition(|&v| (v - eventual).abs() > band);
            match outside {
                None => Ok(0),
                Some(i) if i + 1 < series.len() => Ok(i + 1),
                Some(_) => Err(CoreError::NotConverged),
            }
        }
    }
}

/// Least-squares fit coefficients and the residual 2-norm.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// `[a, b, c]` for `a x^2 + b x + c`, or `[scale, rate]` for `scale e^(rate x)`.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
}

impl FitResult {
    pub fn eval_quadratic(&self, x: f64) -> f64 {
        let c = &self.coefficients;
        (c[0] * x + c[1]) * x + c[2]
    }

    pub fn eval_exponential(&self, x: f64) -> f64 {
        self.coefficients[0] * (self.coefficients[1] * x).exp()
    }
}

/// Least-squares `y ~ a x^2 + b x + c`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<FitResult, CoreError> {
    if x.len() != y.len() {
        return Err(CoreError::InvalidParameter("x and y differ in length".into()));
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(CoreError::InvalidParameter("quadratic fit needs at least 3 distinct x".into()));
    }
    // Work in a centred, scaled variable for conditioning.
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let sigma = (x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = (xi - mu) / sigma;
        let row = [1.0, t, t * t];
        for r in 0..3 {
            aty[r] += row[r] * yi;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let p = solve3(ata, aty).ok_or_else(|| CoreError::InvalidParameter("singular normal equations".into()))?;
    let a = p[2] / (sigma * sigma);
    let b = p[1] / sigma - 2.0 * p[2] * mu / (sigma * sigma);
    let c = p[0] - p[1] * mu / sigma + p[2] * mu * mu / (sigma * sigma);
    let fit = FitResult { coefficients: vec![a, b, c], residual_norm: 0.0 };
    let residual_norm = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - fit.eval_quadratic(xi)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(FitResult { residual_norm, ..fit })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[r].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * out[c]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    Some(out)
}

/// Fits `y ~ scale * exp(rate * x)` by least squares on `ln y`. Needs
/// positive `y` and two distinct `x`.
pub fn exponential_fit(x: &[f64], y: &[f64]) -> Result<FitResult, CoreError> {
    if x.len() != y.len() || x.len() < 2 || y.iter().any(|&v| v <= 0.0) {
        return Err(CoreError::InvalidParameter("exponential fit needs matching positive data".into()));
    }
    let n = x.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CoreError::InvalidParameter("exponential fit needs two distinct x".into()));
    }
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let rate = sxy / sxx;
    let scale = (my - rate * mx).exp();
    let fit = FitResult { coefficients: vec![scale, rate], residual_norm: 0.0 };
    let residual_norm = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - fit.eval_exponential(xi)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(FitResult { residual_norm, ..fit })
}

/// Reference convergence-time curve `1.9 exp(3.3 alpha)`.
pub fn t_conv_model(alpha: f64) -> f64 {
    1.9 * (3.3 * alpha).exp()
}

/// Member count and mean node count per generation present in a clade.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationGroup {
    pub generation: u32,
    pub count: usize,
    pub mean_nodes: f64,
}

pub fn nodes_by_generation(clade: &Clade, store: &mut FormStore) -> Vec<GenerationGroup> {
    let mut sums: Vec<(usize, u64)> = Vec::new();
    for &x in &clade.members {
        let g = store.generation(x) as usize;
        if sums.len() <= g {
            sums.resize(g + 1, (0, 0));
        }
        sums[g].0 += 1;
        sums[g].1 += store.dag_metrics(x).nodes;
    }
    sums.into_iter()
        .enumerate()
        .filter(|(_, (c, _))| *c > 0)
        .map(|(g, (c, s))| GenerationGroup { generation: g as u32, count: c, mean_nodes: s as f64 / c as f64 })
        .collect()
}

/// Slope of `ln P(X >= v)` against `v` over the upper half of the observed
/// support. A steady negative slope points to a geometric-like tail.
pub fn log_ccdf_slope(samples: &[u64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let median = sorted[sorted.len() / 2];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        if v >= median {
            xs.push(v as f64);
            ys.push(((sorted.len() - i) as f64 / n).ln());
        }
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Raw moments `E[X^k]` for `k = 1..=order`.
pub fn raw_moments(samples: &[f64], order: u32) -> Vec<f64> {
    let n = samples.len() as f64;
    (1..=order)
        .map(|k| samples.iter().map(|v| v.powi(k as i32)).sum::<f64>() / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Dyadic;
    use crate::evolution::{init_clade, GenParams};
    use crate::form::FormId;

    #[test]
    fn generation_pmf_of_small_clades() {
        let mut s = FormStore::new();
        let c = init_clade(&GenParams::default(), &mut s);
        let p = empirical_generation_pmf(&c, &mut s);
        assert_eq!(p.len(), 2);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        let single = Clade { members: vec![FormId::ZERO], iteration: 0 };
        assert_eq!(empirical_generation_pmf(&single, &mut s), vec![1.0]);
        let mut rev = c.clone();
        rev.members.reverse();
        assert_eq!(empirical_generation_pmf(&rev, &mut s), p);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert_eq!(tv_distance(&[1.0], &[0.0, 1.0]), 1.0);
        assert!((tv_distance(&[0.5, 0.5], &[0.25, 0.25, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stats_of_tiny_clades() {
        let mut s = FormStore::new();
        let zero = Clade { members: vec![FormId::ZERO], iteration: 0 };
        let st = clade_stats(&zero, &mut s);
        assert_eq!(st.integer_proportion, 1.0);
        assert_eq!(st.mean_nodes, 1.0);
        assert_eq!(st.mean_edges, 0.0);
        let half = s.dali(&Dyadic::new(1, 1));
        let mixed = Clade { members: vec![FormId::ZERO, half], iteration: 3 };
        let st = clade_stats(&mixed, &mut s);
        assert_eq!(st.denominator_exponents, vec![0.5, 0.5]);
        assert_eq!(st.iteration, 3);
        assert_eq!(st.max_generation, 2);
        assert_eq!(st.mean_parents, 1.0);
    }

    #[test]
    fn convergence_of_constant_series() {
        let c = vec![2.5; 30];
        assert_eq!(convergence_iteration(&c, ConvergenceMode::Reach99).unwrap(), 0);
        assert_eq!(convergence_iteration(&c, ConvergenceMode::Band1Pct).unwrap(), 0);
    }

    #[test]
    fn convergence_of_geometric_approach() {
        let v: Vec<f64> = (0..50).map(|i| 1.0 - 0.5f64.powi(i)).collect();
        let eventual = v[40..].iter().sum::<f64>() / 10.0;
        // Oracle: scan the definition directly.
        let expect = (0..50).find(|&i| v[i] >= 0.99 * eventual).unwrap();
        assert_eq!(expect, 7);
        assert_eq!(convergence_iteration(&v, ConvergenceMode::Reach99).unwrap(), expect);
        let band = (0..50).find(|&i| v[i..].iter().all(|x| (x - eventual).abs() <= 0.01 * eventual)).unwrap();
        assert_eq!(convergence_iteration(&v, ConvergenceMode::Band1Pct).unwrap(), band);
    }

    #[test]
    fn increasing_series_leaves_band() {
        let v: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        assert_eq!(convergence_iteration(&v, ConvergenceMode::Band1Pct), Err(CoreError::NotConverged));
        assert!(convergence_iteration(&v[..10], ConvergenceMode::Reach99).is_err());
    }

    #[test]
    fn quadratic_fit_recovers_parabola() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v * v - 1.25 * v + 4.0).collect();
        let f = quadratic_fit(&x, &y).unwrap();
        assert!((f.coefficients[0] - 2.5).abs() < 1e-9);
        assert!((f.coefficients[1] + 1.25).abs() < 1e-9);
        assert!((f.coefficients[2] - 4.0).abs() < 1e-9);
        assert!(f.residual_norm < 1e-9);
        let lin: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let f = quadratic_fit(&x, &lin).unwrap();
        assert!(f.coefficients[0].abs() < 1e-9);
        assert!(quadratic_fit(&[1.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn exponential_fit_recovers_curve() {
        let x = [0.2, 0.4, 0.6, 0.8];
        let y: Vec<f64> = x.iter().map(|a| t_conv_model(*a)).collect();
        let f = exponential_fit(&x, &y).unwrap();
        assert!((f.coefficients[0] - 1.9).abs() < 1e-9);
        assert!((f.coefficients[1] - 3.3).abs() < 1e-9);
    }

    #[test]
    fn t_conv_reference() {
        assert!((t_conv_model(0.8) - 1.9 * 2.64f64.exp()).abs() < 1e-12);
        assert!((t_conv_model(0.8) - 26.6).abs() < 0.05);
        assert!(t_conv_model(0.3) < t_conv_model(0.4));
    }

    #[test]
    fn ccdf_slope_of_geometric_counts() {
        // 2^-v mass laid out exactly: v appears 2^(12 - v) times.
        let samples: Vec<u64> = (1..=12u64).flat_map(|v| std::iter::repeat_n(v, 1 << (12 - v))).collect();
        let slope = log_ccdf_slope(&samples).unwrap();
        assert!((slope + std::f64::consts::LN_2).abs() < 0.1, "{slope}");
    }

    #[test]
    fn moments() {
        assert_eq!(raw_moments(&[1.0, 2.0, 3.0], 2), vec![2.0, 14.0 / 3.0]);
    }
}
