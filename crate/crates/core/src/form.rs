//! Interned surreal forms and the operations on them.
//!
//! A [`FormStore`] hash-conses every `{ L | R }` it sees, so each structurally
//! distinct form exists once and a form's DAG shares all common ancestry.
//! Parents are always interned before their children, which makes id order a
//! topological order of the whole store.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::dyadic::{simplest_between, Dyadic};
use crate::error::CoreError;

/// Handle to an interned form. Equal ids means identical forms (`==`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormId(u32);

impl FormId {
    /// `{ | }`, reserved in every store.
    pub const ZERO: FormId = FormId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        FormId(u32::try_from(i).expect("form store exceeds u32 ids"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Node {
    left: Box<[FormId]>,
    right: Box<[FormId]>,
}

/// Node and edge counts of the DAG reachable from a form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DagMetrics {
    pub nodes: u64,
    pub edges: u64,
}

/// Interning table for surreal forms plus memo caches.
#[derive(Clone, Debug)]
pub struct FormStore {
    nodes: Vec<Node>,
    index: HashMap<Node, FormId>,
    generation: Vec<Option<u32>>,
    value: Vec<Option<Dyadic>>,
    metrics: Vec<Option<DagMetrics>>,
    leq_memo: HashMap<(FormId, FormId), bool>,
    dali_memo: HashMap<Dyadic, FormId>,
    visit_stamp: Vec<u32>,
    stamp: u32,
}

impl Default for FormStore {
    fn default() -> Self {
        Self::new()
    }
}

impl FormStore {
    pub fn new() -> Self {
        let zero = Node { left: Box::new([]), right: Box::new([]) };
        let mut index = HashMap::new();
        index.insert(zero.clone(), FormId::ZERO);
        FormStore {
            nodes: vec![zero],
            index,
            generation: vec![Some(0)],
            value: vec![Some(Dyadic::zero())],
            metrics: vec![Some(DagMetrics { nodes: 1, edges: 0 })],
            leq_memo: HashMap::new(),
            dali_memo: HashMap::new(),
            visit_stamp: vec![0],
            stamp: 0,
        }
    }

    /// Number of interned forms.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: FormId) -> bool {
        x.index() < self.nodes.len()
    }

    /// All interned ids in interning (topological) order.
    pub fn ids(&self) -> impl Iterator<Item = FormId> {
        (0..self.nodes.len()).map(FormId::from_index)
    }

    pub fn left(&self, x: FormId) -> &[FormId] {
        &self.nodes[x.index()].left
    }

    pub fn right(&self, x: FormId) -> &[FormId] {
        &self.nodes[x.index()].right
    }

    /// Number of distinct parents, `|L| + |R|`.
    pub fn parent_count(&self, x: FormId) -> usize {
        let n = &self.nodes[x.index()];
        n.left.len() + n.right.len()
    }

    /// Drops every memoized result. Ids and interning are untouched.
    pub fn clear_caches(&mut self) {
        let n = self.nodes.len();
        self.generation = vec![None; n];
        self.value = vec![None; n];
        self.metrics = vec![None; n];
        self.leq_memo.clear();
        self.dali_memo.clear();
    }

    /// Interns `{ left | right }`.
    ///
    /// Inputs are treated as sets: order and repeats are ignored. Fails with
    /// [`CoreError::InvalidForm`] when some right option is `<=` some left
    /// option.
    pub fn make_form(&mut self, left: &[FormId], right: &[FormId]) -> Result<FormId, CoreError> {
        let left = canonical_set(left);
        let right = canonical_set(right);
        for &p in left.iter().chain(right.iter()) {
            if !self.contains(p) {
                return Err(CoreError::UnknownForm(p));
            }
        }
        let node = Node { left, right };
        if let Some(&id) = self.index.get(&node) {
            return Ok(id);
        }

        let max_left = self.extreme(&node.left, true);
        let min_right = self.extreme(&node.right, false);
        if let (Some((l, lv)), Some((r, rv))) = (&max_left, &min_right) {
            if rv <= lv {
                return Err(CoreError::InvalidForm { left: *l, right: *r });
            }
        }
        let value = simplest_between(max_left.as_ref().map(|(_, v)| v), min_right.as_ref().map(|(_, v)| v))?;
        let generation = node
            .left
            .iter()
            .chain(node.right.iter())
            .map(|&p| self.generation(p))
            .max()
            .map_or(0, |g| g + 1);

        let id = FormId::from_index(self.nodes.len());
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.generation.push(Some(generation));
        self.value.push(Some(value));
        self.metrics.push(None);
        self.visit_stamp.push(0);
        Ok(id)
    }

    /// Option of largest (or smallest) value, earliest id on ties.
    fn extreme(&mut self, set: &[FormId], largest: bool) -> Option<(FormId, Dyadic)> {
        let mut best: Option<(FormId, Dyadic)> = None;
        for &p in set {
            let v = self.value(p);
            let better = match &best {
                None => true,
                Some((_, bv)) => {
                    if largest {
                        v > *bv
                    } else {
                        v < *bv
                    }
                }
            };
            if better {
                best = Some((p, v));
            }
        }
        best
    }

    /// Conway's order: `a <= b` iff no left option of `a` is `>= b` and no
    /// right option of `b` is `<= a`. Memoized on the id pair.
    pub fn leq(&mut self, a: FormId, b: FormId) -> bool {
        if a == b {
            return true;
        }
        if let Some(&r) = self.leq_memo.get(&(a, b)) {
            return r;
        }
        let mut result = true;
        for i in 0..self.nodes[a.index()].left.len() {
            let al = self.nodes[a.index()].left[i];
            if self.leq(b, al) {
                result = false;
                break;
            }
        }
        if result {
            for i in 0..self.nodes[b.index()].right.len() {
                let br = self.nodes[b.index()].right[i];
                if self.leq(br, a) {
                    result = false;
                    break;
                }
            }
        }
        self.leq_memo.insert((a, b), result);
        result
    }

    /// Same value (`≡`).
    pub fn equiv(&mut self, a: FormId, b: FormId) -> bool {
        self.leq(a, b) && self.leq(b, a)
    }

    pub fn lt(&mut self, a: FormId, b: FormId) -> bool {
        !self.leq(b, a)
    }

    /// Checks the validity clause with Conway comparison directly.
    pub fn is_valid(&mut self, x: FormId) -> bool {
        let n = self.nodes[x.index()].clone();
        n.left.iter().all(|&l| n.right.iter().all(|&r| !self.leq(r, l)))
    }

    /// Birthday: 0 for `{ | }`, otherwise one more than the oldest parent.
    pub fn generation(&mut self, x: FormId) -> u32 {
        if let Some(g) = self.generation[x.index()] {
            return g;
        }
        let mut g = 0;
        for i in 0..self.parent_count(x) {
            let p = self.parent_at(x, i);
            g = g.max(self.generation(p) + 1);
        }
        self.generation[x.index()] = Some(g);
        g
    }

    /// The simplest dyadic strictly between the left and right option values.
    pub fn value(&mut self, x: FormId) -> Dyadic {
        if let Some(v) = &self.value[x.index()] {
            return v.clone();
        }
        let node = self.nodes[x.index()].clone();
        let lo = self.extreme(&node.left, true).map(|(_, v)| v);
        let hi = self.extreme(&node.right, false).map(|(_, v)| v);
        let v = simplest_between(lo.as_ref(), hi.as_ref()).expect("interned forms are valid");
        self.value[x.index()] = Some(v.clone());
        v
    }

    fn parent_at(&self, x: FormId, i: usize) -> FormId {
        let n = &self.nodes[x.index()];
        if i < n.left.len() {
            n.left[i]
        } else {
            n.right[i - n.left.len()]
        }
    }

    /// Distinct forms reachable from `x` (itself included) and the total
    /// number of parent links among them.
    pub fn dag_metrics(&mut self, x: FormId) -> DagMetrics {
        if let Some(m) = self.metrics[x.index()] {
            return m;
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.visit_stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        let mut m = DagMetrics::default();
        let mut stack = vec![x];
        self.visit_stamp[x.index()] = stamp;
        while let Some(y) = stack.pop() {
            let node = &self.nodes[y.index()];
            m.nodes += 1;
            m.edges += (node.left.len() + node.right.len()) as u64;
            for &p in node.left.iter().chain(node.right.iter()) {
                if self.visit_stamp[p.index()] != stamp {
                    self.visit_stamp[p.index()] = stamp;
                    stack.push(p);
                }
            }
        }
        self.metrics[x.index()] = Some(m);
        m
    }

    /// The canonical (Dali) form of `q`.
    pub fn dali(&mut self, q: &Dyadic) -> FormId {
        if let Some(&id) = self.dali_memo.get(q) {
            return id;
        }
        let id = if q.is_integer() {
            let n = q.numerator();
            let steps = n.abs().to_u64().expect("integer too large for a canonical chain");
            let mut cur = FormId::ZERO;
            for _ in 0..steps {
                cur = if n.is_positive() {
                    self.make_form(&[cur], &[])
                } else {
                    self.make_form(&[], &[cur])
                }
                .expect("canonical integers are valid");
            }
            cur
        } else {
            let n = q.numerator();
            let lo = Dyadic::new(n - BigInt::from(1), q.exponent());
            let hi = Dyadic::new(n + BigInt::from(1), q.exponent());
            let l = self.dali(&lo);
            let r = self.dali(&hi);
            self.make_form(&[l], &[r]).expect("dyadic neighbours are ordered")
        };
        self.dali_memo.insert(q.clone(), id);
        id
    }

    /// Every canonical form of generation `<= g_max`, ordered by generation
    /// and then by value.
    pub fn canonical_population(&mut self, g_max: u32) -> Vec<FormId> {
        let mut born: Vec<Dyadic> = vec![Dyadic::zero()];
        let mut by_generation: Vec<Vec<Dyadic>> = vec![vec![Dyadic::zero()]];
        for _ in 1..=g_max {
            let mut next = Vec::with_capacity(born.len() + 1);
            next.push(Dyadic::integer(born[0].floor() - 1));
            for w in born.windows(2) {
                next.push(w[0].midpoint(&w[1]));
            }
            next.push(Dyadic::integer(born[born.len() - 1].ceil() + 1));
            born.extend(next.iter().cloned());
            born.sort();
            by_generation.push(next);
        }
        by_generation.iter().flatten().map(|q| self.dali(q)).collect()
    }
}

fn canonical_set(ids: &[FormId]) -> Box<[FormId]> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v.into_boxed_slice()
}
