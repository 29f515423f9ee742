//! The clade process: each new clade is grown from the previous one by
//! picking a Poisson number of parents with generation-weighted selection,
//! sorting them by value and cutting the list at a random split point.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::analysis::{clade_stats, RunTrace};
use crate::dyadic::Dyadic;
use crate::error::CoreError;
use crate::form::{FormId, FormStore};
use crate::stochastic::{poisson_sample, seeded_rng, split_sample, SplitKind};

/// Which parent survives when several sampled parents share a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DedupPolicy {
    /// Keep the highest-generation form of each value. The child's
    /// generation is then `1 + max` over every sampled parent.
    #[default]
    KeepYoungest,
    /// Keep the lowest-generation form of each value.
    KeepOldest,
}

impl DedupPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DedupPolicy::KeepYoungest => "keep-youngest",
            DedupPolicy::KeepOldest => "keep-oldest",
        }
    }
}

impl fmt::Display for DedupPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DedupPolicy {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep-youngest" => Ok(DedupPolicy::KeepYoungest),
            "keep-oldest" => Ok(DedupPolicy::KeepOldest),
            other => Err(CoreError::InvalidParameter(format!("unknown dedup policy `{other}`"))),
        }
    }
}

/// Parameters of one run of the process.
#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    /// Largest generation in the canonical starting clade.
    pub g0_max: u32,
    /// Members per clade.
    pub n: usize,
    /// Number of clades grown after the initial one.
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub split: SplitKind,
    pub seed: u64,
    pub dedup: DedupPolicy,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            g0_max: 1,
            n: 500,
            m: 50,
            lambda: 3.5,
            alpha: 0.8,
            split: SplitKind::Uniform,
            seed: 0,
            dedup: DedupPolicy::default(),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: String| Err(CoreError::InvalidParameter(msg));
        if self.n < 1 {
            return bad("population size n must be at least 1".into());
        }
        if self.m < 1 {
            return bad("iteration count m must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.g0_max > 24 {
            return bad(format!("g0_max {} would build more than 2^25 canonical forms", self.g0_max));
        }
        Ok(())
    }
}

/// One population iterate. Members may repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clade {
    pub members: Vec<FormId>,
    pub iteration: usize,
}

impl Clade {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The canonical forms of generation `<= g0_max`.
pub fn init_clade(params: &GenParams, store: &mut FormStore) -> Clade {
    Clade { members: store.canonical_population(params.g0_max), iteration: 0 }
}

/// Generation-weighted parent sampler for a frozen clade.
///
/// A present generation `k` is chosen with probability proportional to
/// `alpha^k`, then a member of that generation uniformly. Absent generations
/// get no weight.
#[derive(Clone, Debug)]
pub struct ParentSelector {
    groups: Vec<(u32, Vec<FormId>)>,
    cumulative: Vec<f64>,
    z: Vec<f64>,
}

impl ParentSelector {
    pub fn new(clade: &Clade, alpha: f64, store: &mut FormStore) -> Self {
        assert!(!clade.is_empty(), "cannot select parents from an empty clade");
        let mut by_gen: Vec<Vec<FormId>> = Vec::new();
        for &x in &clade.members {
            let g = store.generation(x) as usize;
            if by_gen.len() <= g {
                by_gen.resize_with(g + 1, Vec::new);
            }
            by_gen[g].push(x);
        }
        let groups: Vec<(u32, Vec<FormId>)> = by_gen
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .map(|(g, v)| (g as u32, v))
            .collect();
        let total: f64 = groups.iter().map(|(g, _)| alpha.powi(*g as i32)).sum();
        let max_gen = groups.last().map_or(0, |(g, _)| *g) as usize;
        let mut z = vec![0.0; max_gen + 1];
        let mut cumulative = Vec::with_capacity(groups.len());
        let mut acc = 0.0;
        for (g, _) in &groups {
            let p = alpha.powi(*g as i32) / total;
            z[*g as usize] = p;
            acc += p;
            cumulative.push(acc);
        }
        ParentSelector { groups, cumulative, z }
    }

    /// Probability that a single draw has generation `k`, indexed by `k`.
    pub fn generation_pmf(&self) -> &[f64] {
        &self.z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FormId {
        let u: f64 = rng.gen();
        let idx = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.groups.len() - 1);
        let members = &self.groups[idx].1;
        members[rng.gen_range(0..members.len())]
    }
}

/// Per-member selection probabilities, in clade order.
pub fn selection_weights(clade: &Clade, alpha: f64, store: &mut FormStore) -> Vec<f64> {
    let selector = ParentSelector::new(clade, alpha, store);
    let counts: Vec<usize> = {
        let mut c = vec![0usize; selector.z.len()];
        for (g, members) in &selector.groups {
            c[*g as usize] = members.len();
        }
        c
    };
    clade
        .members
        .iter()
        .map(|&x| {
            let g = store.generation(x) as usize;
            selector.z[g] / counts[g] as f64
        })
        .collect()
}

/// Reduces sampled parents to one form per value, sorted by value.
pub fn dedup_parents(parents: &[FormId], policy: DedupPolicy, store: &mut FormStore) -> Vec<FormId> {
    let mut keyed: Vec<(Dyadic, u32, FormId)> = parents
        .iter()
        .map(|&p| (store.value(p), store.generation(p), p))
        .collect();
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| match policy {
            DedupPolicy::KeepOldest => a.1.cmp(&b.1),
            DedupPolicy::KeepYoungest => b.1.cmp(&a.1),
        })
        .then(a.2.cmp(&b.2))
    });
    keyed.dedup_by(|later, first| later.0 == first.0);
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

/// `{ sorted[..split] | sorted[split..] }` for value-sorted distinct parents.
pub fn split_form(sorted: &[FormId], split: usize, store: &mut FormStore) -> FormId {
    let (left, right) = sorted.split_at(split);
    store
        .make_form(left, right)
        .expect("value-sorted distinct parents always split into a valid form")
}

/// Outcome of one spawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spawn {
    pub form: FormId,
    /// Parents drawn from the Poisson law.
    pub drawn: u32,
    /// Parents left after value deduplication.
    pub effective: u32,
}

/// Builds one child from a frozen clade.
pub fn spawn_with<R: Rng + ?Sized>(
    selector: &ParentSelector,
    params: &GenParams,
    rng: &mut R,
    store: &mut FormStore,
) -> Spawn {
    let drawn = poisson_sample(params.lambda, rng);
    if drawn == 0 {
        return Spawn { form: FormId::ZERO, drawn, effective: 0 };
    }
    let parents: Vec<FormId> = (0..drawn).map(|_| selector.sample(rng)).collect();
    let sorted = dedup_parents(&parents, params.dedup, store);
    let effective = sorted.len() as u32;
    let s = split_sample(params.split, effective, rng) as usize;
    Spawn { form: split_form(&sorted, s, store), drawn, effective }
}

pub fn spawn_form<R: Rng + ?Sized>(clade: &Clade, params: &GenParams, rng: &mut R, store: &mut FormStore) -> FormId {
    let selector = ParentSelector::new(clade, params.alpha, store);
    spawn_with(&selector, params, rng, store).form
}

/// Mean parent counts over one clade's spawns.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpawnSummary {
    pub mean_drawn: f64,
    pub mean_effective: f64,
}

/// Grows the next clade of `params.n` members.
pub fn next_clade<R: Rng + ?Sized>(
    clade: &Clade,
    params: &GenParams,
    rng: &mut R,
    store: &mut FormStore,
) -> (Clade, SpawnSummary) {
    let selector = ParentSelector::new(clade, params.alpha, store);
    let mut members = Vec::with_capacity(params.n);
    let (mut drawn, mut effective) = (0u64, 0u64);
    for _ in 0..params.n {
        let spawn = spawn_with(&selector, params, rng, store);
        drawn += u64::from(spawn.drawn);
        effective += u64::from(spawn.effective);
        members.push(spawn.form);
    }
    let n = params.n as f64;
    let summary = SpawnSummary { mean_drawn: drawn as f64 / n, mean_effective: effective as f64 / n };
    (Clade { members, iteration: clade.iteration + 1 }, summary)
}

/// Runs the whole process from the canonical clade, recording statistics for
/// every clade. Full clades are kept only when `retain_clades` is set.
pub fn run_process(params: &GenParams, store: &mut FormStore, retain_clades: bool) -> Result<RunTrace, CoreError> {
    params.validate()?;
    let mut rng = seeded_rng(params.seed);
    let mut clade = init_clade(params, store);
    let mut stats = vec![clade_stats(&clade, store)];
    let mut spawns = Vec::with_capacity(params.m);
    let mut clades = retain_clades.then(|| vec![clade.clone()]);
    for _ in 0..params.m {
        let (next, summary) = next_clade(&clade, params, &mut rng, store);
        stats.push(clade_stats(&next, store));
        spawns.push(summary);
        if let Some(c) = clades.as_mut() {
            c.push(next.clone());
        }
        clade = next;
    }
    Ok(RunTrace { params: params.clone(), stats, spawns, final_clade: clade, clades })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::seeded_rng;

    fn q(n: i64, k: u32) -> Dyadic {
        Dyadic::new(n, k)
    }

    #[test]
    fn initial_clades() {
        let mut s = FormStore::new();
        for (g, len) in [(0u32, 1usize), (1, 3), (2, 7), (3, 15)] {
            let p = GenParams { g0_max: g, ..GenParams::default() };
            assert_eq!(init_clade(&p, &mut s).len(), len);
        }
        let p = GenParams { g0_max: 1, ..GenParams::default() };
        let c = init_clade(&p, &mut s);
        let vals: Vec<_> = c.members.iter().map(|&x| s.value(x)).collect();
        assert_eq!(vals, vec![Dyadic::zero(), Dyadic::integer(-1), Dyadic::integer(1)]);
    }

    #[test]
    fn weights_for_the_three_member_clade() {
        let mut s = FormStore::new();
        let c = init_clade(&GenParams::default(), &mut s);
        let w = selection_weights(&c, 0.8, &mut s);
        assert!((w[0] - 1.0 / 1.8).abs() < 1e-12);
        assert!((w[1] - 0.8 / 1.8 / 2.0).abs() < 1e-12);
        assert!((w[2] - 0.8 / 1.8 / 2.0).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_uniform_within_single_generation() {
        let mut s = FormStore::new();
        let one = s.dali(&Dyadic::integer(1));
        let neg = s.dali(&Dyadic::integer(-1));
        let c = Clade { members: vec![one, neg, one, neg], iteration: 0 };
        let w = selection_weights(&c, 0.3, &mut s);
        assert!(w.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    }

    #[test]
    fn weights_unchanged_by_duplication() {
        let mut s = FormStore::new();
        let c = init_clade(&GenParams { g0_max: 3, ..GenParams::default() }, &mut s);
        let w = selection_weights(&c, 0.6, &mut s);
        let doubled = Clade { members: c.members.iter().chain(c.members.iter()).copied().collect(), iteration: 0 };
        let w2 = selection_weights(&doubled, 0.6, &mut s);
        for (i, p) in w.iter().enumerate() {
            assert!((p / 2.0 - w2[i]).abs() < 1e-12);
            assert!((p / 2.0 - w2[i + c.len()]).abs() < 1e-12);
        }
    }

    #[test]
    fn split_examples() {
        let mut s = FormStore::new();
        let one = s.dali(&Dyadic::integer(1));
        let x = split_form(&[FormId::ZERO], 1, &mut s);
        assert_eq!(x, one);
        assert_eq!(s.value(x), Dyadic::integer(1));
        let sorted = dedup_parents(&[one, FormId::ZERO], DedupPolicy::KeepYoungest, &mut s);
        assert_eq!(sorted, vec![FormId::ZERO, one]);
        let half = split_form(&sorted, 1, &mut s);
        assert_eq!(s.value(half), q(1, 1));
        assert_eq!(split_form(&sorted, 0, &mut s), s.make_form(&[], &[FormId::ZERO, one]).unwrap());
        assert_eq!(split_form(&sorted, 2, &mut s), s.make_form(&[FormId::ZERO, one], &[]).unwrap());
    }

    #[test]
    fn dedup_policies_pick_different_representatives() {
        let mut s = FormStore::new();
        let one = s.dali(&Dyadic::integer(1));
        let neg = s.dali(&Dyadic::integer(-1));
        // {-1 | 1} has value 0 but generation 2.
        let fancy_zero = s.make_form(&[neg], &[one]).unwrap();
        assert_eq!(s.value(fancy_zero), Dyadic::zero());
        let parents = [fancy_zero, one, FormId::ZERO, fancy_zero];
        assert_eq!(dedup_parents(&parents, DedupPolicy::KeepOldest, &mut s), vec![FormId::ZERO, one]);
        assert_eq!(dedup_parents(&parents, DedupPolicy::KeepYoungest, &mut s), vec![fancy_zero, one]);
    }

    #[test]
    fn zero_parents_gives_zero() {
        let mut s = FormStore::new();
        let c = init_clade(&GenParams::default(), &mut s);
        let params = GenParams { lambda: 1e-9, ..GenParams::default() };
        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            assert_eq!(spawn_form(&c, &params, &mut rng, &mut s), FormId::ZERO);
        }
    }

    #[test]
    fn next_clade_size_and_determinism() {
        let params = GenParams { n: 40, ..GenParams::default() };
        let run = |seed| {
            let mut s = FormStore::new();
            let c = init_clade(&params, &mut s);
            let mut rng = seeded_rng(seed);
            let (next, _) = next_clade(&c, &params, &mut rng, &mut s);
            let (next2, _) = next_clade(&next, &params, &mut rng, &mut s);
            (c.len(), next.len(), next2.iteration, next2.members.iter().map(|&x| s.value(x)).collect::<Vec<_>>())
        };
        let a = run(9);
        assert_eq!((a.0, a.1, a.2), (3, 40, 2));
        assert_eq!(a, run(9));
    }

    #[test]
    fn small_lambda_is_mostly_zero() {
        let params = GenParams { n: 1000, lambda: 0.01, ..GenParams::default() };
        let mut s = FormStore::new();
        let c = init_clade(&params, &mut s);
        let mut rng = seeded_rng(1);
        let (next, _) = next_clade(&c, &params, &mut rng, &mut s);
        let zeros = next.members.iter().filter(|&&x| x == FormId::ZERO).count();
        assert!(zeros >= 950, "{zeros}");
    }

    #[test]
    fn one_iteration_from_zero() {
        let params = GenParams { n: 200, m: 1, g0_max: 0, ..GenParams::default() };
        let mut s = FormStore::new();
        let trace = run_process(&params, &mut s, false).unwrap();
        assert!(trace.final_clade.members.iter().all(|&x| s.generation(x) <= 1));
        assert_eq!(trace.stats.len(), 2);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut s = FormStore::new();
        for p in [
            GenParams { alpha: 1.2, ..GenParams::default() },
            GenParams { alpha: 0.0, ..GenParams::default() },
            GenParams { lambda: -1.0, ..GenParams::default() },
            GenParams { n: 0, ..GenParams::default() },
            GenParams { m: 0, ..GenParams::default() },
        ] {
            assert!(matches!(run_process(&p, &mut s, false), Err(CoreError::InvalidParameter(_))));
        }
    }
}
