//! JSON persistence for a final clade and the DAG it spans.
//!
//! Nodes are written in topological order (parents first) with dense ids
//! starting at `{ | }` = 0, so loading is a single pass of `make_form` calls
//! that reproduces the same ids. Generation and value are redundant and are
//! checked on load.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use surreal_ensemble::stochastic::RNG_ALGORITHM;
use surreal_ensemble::{Clade, Dyadic, FormId, FormStore, GenParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub g0_max: u32,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub split: String,
    pub dedup: String,
    pub rng: String,
    pub seed: u64,
}

impl ParamsRecord {
    pub fn from_params(p: &GenParams) -> Self {
        ParamsRecord {
            g0_max: p.g0_max,
            n: p.n,
            m: p.m,
            lambda: p.lambda,
            alpha: p.alpha,
            split: p.split.name().to_string(),
            dedup: p.dedup.name().to_string(),
            rng: RNG_ALGORITHM.to_string(),
            seed: p.seed,
        }
    }

    pub fn to_params(&self) -> Result<GenParams> {
        Ok(GenParams {
            g0_max: self.g0_max,
            n: self.n,
            m: self.m,
            lambda: self.lambda,
            alpha: self.alpha,
            split: self.split.parse()?,
            dedup: self.dedup.parse()?,
            seed: self.seed,
        })
    }
}

/// `num / 2^exp`; `num` is a decimal string because it is unbounded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub num: String,
    pub exp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub generation: u32,
    pub value: ValueRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub params: ParamsRecord,
    pub nodes: Vec<NodeRecord>,
    /// The final clade, with multiplicity.
    pub roots: Vec<u32>,
}

/// An ensemble read back into a fresh store.
#[derive(Debug)]
pub struct LoadedEnsemble {
    pub params: GenParams,
    pub store: FormStore,
    pub roots: Vec<FormId>,
}

impl EnsembleFile {
    pub fn from_clade(params: &GenParams, clade: &Clade, store: &mut FormStore) -> Self {
        // Collect everything reachable, always including `{ | }`.
        let mut seen = vec![false; store.len()];
        seen[FormId::ZERO.index()] = true;
        let mut stack: Vec<FormId> = clade.members.clone();
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            stack.extend(store.left(x).iter().chain(store.right(x)).copied());
        }
        // Store ids are topological; renumber densely in the same order.
        let order: Vec<FormId> = store.ids().filter(|x| seen[x.index()]).collect();
        let remap: HashMap<FormId, u32> = order.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let ids = |set: &[FormId]| {
            let mut v: Vec<u32> = set.iter().map(|x| remap[x]).collect();
            v.sort_unstable();
            v
        };
        let nodes = order
            .iter()
            .map(|&x| {
                let value = store.value(x);
                NodeRecord {
                    id: remap[&x],
                    left: ids(store.left(x)),
                    right: ids(store.right(x)),
                    generation: store.generation(x),
                    value: ValueRecord { num: value.numerator().to_string(), exp: value.exponent() },
                }
            })
            .collect();
        EnsembleFile {
            params: ParamsRecord::from_params(params),
            nodes,
            roots: clade.members.iter().map(|x| remap[x]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    /// Rebuilds the DAG in a fresh store, checking ids, generations and values.
    pub fn load(&self) -> Result<LoadedEnsemble> {
        let mut store = FormStore::new();
        for (i, node) in self.nodes.iter().enumerate() {
            ensure!(node.id as usize == i, "node {i} carries id {}; ids must be dense and ordered", node.id);
            let resolve = |set: &[u32]| -> Result<Vec<FormId>> {
                set.iter()
                    .map(|&p| {
                        ensure!((p as usize) < i, "node {i} references {p}, which is not an earlier node");
                        Ok(FormId::from_index(p as usize))
                    })
                    .collect()
            };
            let left = resolve(&node.left)?;
            let right = resolve(&node.right)?;
            let id = store.make_form(&left, &right).with_context(|| format!("node {i}"))?;
            if id.index() != i {
                bail!("node {i} duplicates node {}", id.index());
            }
            let num: BigInt = node.value.num.parse().with_context(|| format!("node {i}: bad numerator"))?;
            let stored = Dyadic::new(num, node.value.exp);
            ensure!(
                stored.numerator().to_string() == node.value.num && stored.exponent() == node.value.exp,
                "node {i}: value {}/2^{} is not normalized",
                node.value.num,
                node.value.exp
            );
            let value = store.value(id);
            ensure!(value == stored, "node {i}: recorded value {stored} but form has value {value}");
            let generation = store.generation(id);
            ensure!(
                generation == node.generation,
                "node {i}: recorded generation {} but form has generation {generation}",
                node.generation
            );
        }
        let roots = self
            .roots
            .iter()
            .map(|&r| {
                ensure!((r as usize) < self.nodes.len(), "root {r} is not a node");
                Ok(FormId::from_index(r as usize))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadedEnsemble { params: self.params.to_params()?, store, roots })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use surreal_ensemble::evolution::run_process;

    fn small_run() -> (GenParams, Clade, FormStore) {
        let params = GenParams { n: 60, m: 8, seed: 4, ..GenParams::default() };
        let mut store = FormStore::new();
        let trace = run_process(&params, &mut store, false).unwrap();
        (params, trace.final_clade, store)
    }

    #[test]
    fn load_rebuilds_same_dag() {
        let (params, clade, mut store) = small_run();
        let file = EnsembleFile::from_clade(&params, &clade, &mut store);
        assert_eq!(file.nodes[0].id, 0);
        assert!(file.nodes[0].left.is_empty() && file.nodes[0].right.is_empty());
        let mut loaded = file.load().unwrap();
        assert_eq!(loaded.params, params);
        assert_eq!(loaded.roots.len(), clade.len());
        for (&orig, &back) in clade.members.iter().zip(&loaded.roots) {
            assert_eq!(store.value(orig), loaded.store.value(back));
            assert_eq!(store.generation(orig), loaded.store.generation(back));
            assert_eq!(store.dag_metrics(orig), loaded.store.dag_metrics(back));
        }
        let again = EnsembleFile::from_clade(&params, &Clade { members: loaded.roots.clone(), iteration: 0 }, &mut loaded.store);
        assert_eq!(again, file);
    }

    #[test]
    fn tampered_files_are_rejected() {
        let (params, clade, mut store) = small_run();
        let file = EnsembleFile::from_clade(&params, &clade, &mut store);
        let last = file.nodes.len() - 1;

        let mut bad = file.clone();
        bad.nodes[last].generation += 1;
        assert!(bad.load().is_err());

        let mut bad = file.clone();
        bad.nodes[last].value.exp += 3;
        assert!(bad.load().is_err());

        let mut bad = file.clone();
        bad.nodes[1].left.push(5);
        assert!(bad.load().is_err());

        let mut bad = file.clone();
        bad.roots.push(u32::MAX);
        assert!(bad.load().is_err());

        // {1 | 0} is not a number
        let mut bad = file;
        let one = bad.nodes.iter().position(|n| n.left == vec![0] && n.right.is_empty());
        if let Some(one) = one {
            let id = bad.nodes.len() as u32;
            bad.nodes.push(NodeRecord {
                id,
                left: vec![one as u32],
                right: vec![0],
                generation: 2,
                value: ValueRecord { num: "0".into(), exp: 0 },
            });
            assert!(bad.load().is_err());
        }
    }
}
