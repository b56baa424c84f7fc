//! p-trees, tilted ordered trees, and the two-stage sampler for connected
//! components of `G((V, w), t)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::graphgen::{components, sample_inhomogeneous, SparseGraph};
use crate::numeric::expm1_ratio;
use crate::rng::Seed;

/// A probability vector `q` on `[m]` with a tilt parameter `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    q: Vec<f64>,
    a: f64,
}

impl ProbabilityVector {
    pub fn new(q: Vec<f64>, a: f64) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::param("q", "must be nonempty"));
        }
        if q.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::param("q", "entries must be positive"));
        }
        let s: f64 = q.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::param("q", format!("must sum to 1, sums to {s}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("must be positive, got {a}")));
        }
        Ok(ProbabilityVector { q, a })
    }

    /// Normalizes positive weights to a probability vector.
    pub fn from_weights(w: &[f64], a: f64) -> Result<Self> {
        let s: f64 = w.iter().sum();
        Self::new(w.iter().map(|x| x / s).collect(), a)
    }

    pub fn uniform(m: usize, a: f64) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m], a)
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn q_max(&self) -> f64 {
        self.q.iter().cloned().fold(0.0, f64::max)
    }

    pub fn l2(&self) -> f64 {
        self.q.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A rooted plane tree on `[m]`; `children[v]` lists children left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderedTree {
    root: usize,
    children: Vec<Vec<usize>>,
}

impl OrderedTree {
    pub fn new(root: usize, children: Vec<Vec<usize>>) -> Result<Self> {
        let m = children.len();
        if root >= m {
            return Err(Error::Invariant(format!("root {root} out of range")));
        }
        let mut seen = vec![false; m];
        let mut stack = vec![root];
        seen[root] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                if c >= m || seen[c] {
                    return Err(Error::Invariant("children lists do not form a tree".into()));
                }
                seen[c] = true;
                count += 1;
                stack.push(c);
            }
        }
        if count != m {
            return Err(Error::Invariant("children lists do not reach every vertex".into()));
        }
        Ok(OrderedTree { root, children })
    }

    /// From a parent array (`None` for the root), children ordered by label.
    pub fn from_parents(parent: &[Option<usize>]) -> Result<Self> {
        let m = parent.len();
        let mut children = vec![Vec::new(); m];
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match p {
                None if root.is_none() => root = Some(v),
                None => return Err(Error::Invariant("more than one root".into())),
                Some(p) if *p < m => children[*p].push(v),
                Some(_) => return Err(Error::Invariant("parent out of range".into())),
            }
        }
        Self::new(root.ok_or_else(|| Error::Invariant("no root".into()))?, children)
    }

    pub fn m(&self) -> usize {
        self.children.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// `d_v(t)`, the number of children of `v`.
    pub fn out_degree(&self, v: usize) -> usize {
        self.children[v].len()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.m()];
        for (v, cs) in self.children.iter().enumerate() {
            for &c in cs {
                p[c] = Some(v);
            }
        }
        p
    }

    /// Depth-first order visiting children left to right, root first.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.m());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(v, cs)| cs.iter().map(move |&c| (v.min(c), v.max(c))))
            .collect();
        e.sort_unstable();
        e
    }

    /// The same tree with children lists in label order.
    pub fn unordered(&self) -> OrderedTree {
        let mut t = self.clone();
        for cs in &mut t.children {
            cs.sort_unstable();
        }
        t
    }
}

/// `P_tree(t) = prod_v q_v^{d_v(t)}`.
pub fn ptree_probability(t: &OrderedTree, q: &[f64]) -> f64 {
    (0..t.m()).map(|v| q[v].powi(t.out_degree(v) as i32)).product()
}

/// `P_ord(t) = prod_v q_v^{d_v(t)} / d_v(t)!`.
pub fn ordered_probability(t: &OrderedTree, q: &[f64]) -> f64 {
    (0..t.m())
        .map(|v| {
            let d = t.out_degree(v);
            q[v].powi(d as i32) / (1..=d).product::<usize>() as f64
        })
        .product()
}

/// Samples a rooted p-tree from an i.i.d. sequence drawn from `q`: the first
/// draw is the root and every value seen for the first time is attached to
/// the draw immediately before it. Children are listed in discovery order.
pub fn sample_ptree<R: Rng + ?Sized>(q: &ProbabilityVector, rng: &mut R) -> OrderedTree {
    let m = q.m();
    let alias = WeightedAliasIndex::new(q.q.clone()).expect("validated probability vector");
    let mut children = vec![Vec::new(); m];
    let mut seen = vec![false; m];
    let mut prev = alias.sample(rng);
    let root = prev;
    seen[root] = true;
    let mut found = 1;
    while found < m {
        let y = alias.sample(rng);
        if !seen[y] {
            seen[y] = true;
            found += 1;
            children[prev].push(y);
        }
        prev = y;
    }
    OrderedTree { root, children }
}

/// A draw from `P_ord`: a p-tree with uniformly shuffled children.
pub fn sample_ordered_ptree<R: Rng + ?Sized>(q: &ProbabilityVector, rng: &mut R) -> OrderedTree {
    let mut t = sample_ptree(q, rng);
    for cs in &mut t.children {
        cs.shuffle(rng);
    }
    t
}

/// `P(t)`: pairs `(i, j)` where the parent of `j` is a strict ancestor of `i`
/// and `j` sits to the right of the path from `i` to the root.
pub fn permitted_pairs(t: &OrderedTree) -> Vec<(usize, usize)> {
    let parent = t.parents();
    let mut out = Vec::new();
    for i in 0..t.m() {
        let mut u = i;
        while let Some(p) = parent[u] {
            let sibs = &t.children[p];
            let pos = sibs.iter().position(|&c| c == u).expect("child listed under its parent");
            out.extend(sibs[pos + 1..].iter().map(|&j| (i, j)));
            u = p;
        }
    }
    out.sort_unstable();
    out
}

/// `f_t` on the depth-first intervals: entry `k` is the value on the
/// interval of the `k`-th vertex in preorder, with the interval lengths.
pub fn f_function(t: &OrderedTree, q: &[f64]) -> Vec<(f64, f64)> {
    // running sum of q over the right siblings of every vertex on the current path
    let mut out = Vec::with_capacity(t.m());
    let mut stack = vec![(t.root, 0.0)];
    while let Some((v, right)) = stack.pop() {
        out.push((q[v], right));
        let cs = &t.children[v];
        let mut acc = 0.0;
        let mut frames = Vec::with_capacity(cs.len());
        for &c in cs.iter().rev() {
            frames.push((c, right + acc));
            acc += q[c];
        }
        stack.extend(frames);
    }
    out
}

/// `integral_0^1 f_t(s) ds`.
pub fn f_integral(t: &OrderedTree, q: &[f64]) -> f64 {
    f_function(t, q).iter().map(|(len, val)| len * val).sum()
}

/// `sup f_t`.
pub fn f_sup(t: &OrderedTree, q: &[f64]) -> f64 {
    f_function(t, q).iter().map(|&(_, v)| v).fold(0.0, f64::max)
}

/// `ln L(t)`.
pub fn log_tilt_weight(t: &OrderedTree, pv: &ProbabilityVector) -> f64 {
    let (q, a) = (&pv.q, pv.a);
    let edge_part: f64 = t.edges().iter().map(|&(i, j)| expm1_ratio(a * q[i] * q[j]).ln()).sum();
    let perm: f64 = permitted_pairs(t).iter().map(|&(i, j)| q[i] * q[j]).sum();
    edge_part + a * perm
}

/// `L(t) = prod_edges (e^{a q_i q_j} - 1)/(a q_i q_j) * exp(a sum_P q_i q_j)`.
pub fn tilt_weight(t: &OrderedTree, pv: &ProbabilityVector) -> f64 {
    log_tilt_weight(t, pv).exp()
}

/// All plane trees on `[m]`.
pub fn enumerate_ordered_trees(m: usize) -> Vec<OrderedTree> {
    let mut out = Vec::new();
    for t in enumerate_rooted_trees(m) {
        let mut orders: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for v in 0..m {
            let perms = permutations(&t.children[v]);
            orders = orders
                .into_iter()
                .flat_map(|prefix| {
                    perms.iter().map(move |p| {
                        let mut x = prefix.clone();
                        x.push(p.clone());
                        x
                    })
                })
                .collect();
        }
        out.extend(orders.into_iter().map(|children| OrderedTree { root: t.root, children }));
    }
    out
}

/// All rooted labeled trees on `[m]` (children in label order).
pub fn enumerate_rooted_trees(m: usize) -> Vec<OrderedTree> {
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    for root in 0..m {
        let others: Vec<usize> = (0..m).filter(|&v| v != root).collect();
        let mut choice = vec![0usize; others.len()];
        loop {
            let mut parent = vec![None; m];
            for (k, &v) in others.iter().enumerate() {
                let mut p = choice[k];
                if p >= v {
                    p += 1;
                }
                parent[v] = Some(p);
            }
            if let Ok(t) = OrderedTree::from_parents(&parent) {
                out.push(t);
            }
            // odometer over (m-1)^(m-1) parent choices
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < m - 1 {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    out
}

fn permutations(xs: &[usize]) -> Vec<Vec<usize>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

pub const EXACT_TREE_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltMode {
    /// Enumerate every plane tree and sample the normalized tilted law.
    ExactSmall,
    /// Independence Metropolis with proposal `P_ord`.
    Mcmc { burn_in: usize, thin: usize },
}

impl TiltMode {
    pub const DEFAULT_MCMC: TiltMode = TiltMode::Mcmc { burn_in: 200, thin: 5 };

    pub fn auto(m: usize) -> Self {
        if m <= EXACT_TREE_LIMIT {
            TiltMode::ExactSmall
        } else {
            Self::DEFAULT_MCMC
        }
    }
}

/// Chain diagnostics for the Metropolis mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainDiagnostics {
    pub proposed: usize,
    pub accepted: usize,
    /// `ln L` of the chain state after each step.
    pub log_l_trace: Vec<f64>,
}

impl ChainDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Sampler for `P*_ord(t) ~ P_ord(t) L(t)`.
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    pv: ProbabilityVector,
    mode: TiltMode,
    exact: Option<(Vec<OrderedTree>, WeightedAliasIndex<f64>)>,
    state: Option<(OrderedTree, f64)>,
    pub diagnostics: ChainDiagnostics,
    record_trace: bool,
}

impl TiltedSampler {
    pub fn new(pv: ProbabilityVector, mode: TiltMode) -> Result<Self> {
        let exact = match mode {
            TiltMode::ExactSmall => {
                if pv.m() > EXACT_TREE_LIMIT {
                    return Err(Error::param(
                        "mode",
                        format!("exact mode supports m <= {EXACT_TREE_LIMIT}, got {}", pv.m()),
                    ));
                }
                let trees = enumerate_ordered_trees(pv.m());
                let w: Vec<f64> = trees.iter().map(|t| ordered_probability(t, &pv.q) * tilt_weight(t, &pv)).collect();
                let alias = WeightedAliasIndex::new(w).map_err(|e| Error::Invariant(e.to_string()))?;
                Some((trees, alias))
            }
            TiltMode::Mcmc { thin, .. } if thin == 0 => return Err(Error::param("thin", "must be at least 1")),
            TiltMode::Mcmc { .. } => None,
        };
        Ok(TiltedSampler {
            pv,
            mode,
            exact,
            state: None,
            diagnostics: ChainDiagnostics::default(),
            record_trace: false,
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn probability_vector(&self) -> &ProbabilityVector {
        &self.pv
    }

    /// The exact tilted law (exact mode only).
    pub fn exact_law(&self) -> Option<HashMap<OrderedTree, f64>> {
        let (trees, _) = self.exact.as_ref()?;
        let w: Vec<f64> = trees
            .iter()
            .map(|t| ordered_probability(t, &self.pv.q) * tilt_weight(t, &self.pv))
            .collect();
        let z: f64 = w.iter().sum();
        Some(trees.iter().cloned().zip(w.into_iter().map(|x| x / z)).collect())
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let proposal = sample_ordered_ptree(&self.pv, rng);
        let lp = log_tilt_weight(&proposal, &self.pv);
        self.diagnostics.proposed += 1;
        let (_, lc) = self.state.as_ref().expect("chain initialized");
        if lp >= *lc || rng.random::<f64>() < (lp - lc).exp() {
            self.state = Some((proposal, lp));
            self.diagnostics.accepted += 1;
        }
        if self.record_trace {
            let l = self.state.as_ref().unwrap().1;
            self.diagnostics.log_l_trace.push(l);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> OrderedTree {
        match self.mode {
            TiltMode::ExactSmall => {
                let (trees, alias) = self.exact.as_ref().unwrap();
                trees[alias.sample(rng)].clone()
            }
            TiltMode::Mcmc { burn_in, thin } => {
                if self.state.is_none() {
                    let t = sample_ordered_ptree(&self.pv, rng);
                    let l = log_tilt_weight(&t, &self.pv);
                    self.state = Some((t, l));
                    for _ in 0..burn_in {
                        self.step(rng);
                    }
                }
                for _ in 0..thin {
                    self.step(rng);
                }
                self.state.as_ref().unwrap().0.clone()
            }
        }
    }
}

pub fn sample_tilted_ordered<R: Rng + ?Sized>(pv: &ProbabilityVector, mode: TiltMode, rng: &mut R) -> Result<OrderedTree> {
    Ok(TiltedSampler::new(pv.clone(), mode)?.sample(rng))
}

/// A tilted tree plus independent surplus edges over its permitted pairs.
pub fn connected_from_tree<R: Rng + ?Sized>(t: &OrderedTree, pv: &ProbabilityVector, rng: &mut R) -> SparseGraph {
    let mut edges = t.edges();
    for (i, j) in permitted_pairs(t) {
        if rng.random::<f64>() < -(-pv.a * pv.q[i] * pv.q[j]).exp_m1() {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    SparseGraph::from_simple_edges(pv.m(), edges)
}

pub fn sample_connected_with<R: Rng + ?Sized>(sampler: &mut TiltedSampler, rng: &mut R) -> SparseGraph {
    let t = sampler.sample(rng);
    connected_from_tree(&t, &sampler.pv.clone(), rng)
}

/// A connected graph on `[m]` with law `P_con(.; q, a, [m])`.
pub fn sample_connected<R: Rng + ?Sized>(pv: &ProbabilityVector, rng: &mut R) -> SparseGraph {
    let mut sampler = TiltedSampler::new(pv.clone(), TiltMode::auto(pv.m())).expect("mode matches size");
    sample_connected_with(&mut sampler, rng)
}

/// Samples `G(([n], w), t)` in two stages: the component partition from a
/// direct draw, then each component's internal structure from the
/// connected-graph sampler with `q = w / W(V_i)` and `a = t W(V_i)^2`.
pub fn two_stage_sample<R: Rng + ?Sized>(w: &[f64], t: f64, rng: &mut R) -> Result<SparseGraph> {
    if w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::param("w", "weights must be positive"));
    }
    let stage1 = sample_inhomogeneous(w, t, Seed::new(rng.random()))?;
    let part = components(&stage1, w);
    let mut edges = Vec::new();
    for members in part.members() {
        if members.len() < 2 {
            continue;
        }
        let mass: f64 = members.iter().map(|&v| w[v]).sum();
        let local_w: Vec<f64> = members.iter().map(|&v| w[v]).collect();
        let pv = ProbabilityVector::from_weights(&local_w, t * mass * mass)?;
        let g = sample_connected(&pv, rng);
        edges.extend(g.edges().iter().map(|&(a, b)| {
            let (x, y) = (members[a], members[b]);
            (x.min(y), x.max(y))
        }));
    }
    edges.sort_unstable();
    Ok(SparseGraph::from_simple_edges(w.len(), edges))
}

/// Monte-Carlo estimate of `a^2 e^{a q_max} E[||f||^2 e^{a ||f||}]` under `P_ord`.
pub fn surplus_bound_proxy<R: Rng + ?Sized>(pv: &ProbabilityVector, samples: usize, rng: &mut R) -> f64 {
    let mut acc = 0.0;
    for _ in 0..samples {
        let t = sample_ordered_ptree(pv, rng);
        let f = f_sup(&t, &pv.q);
        acc += f * f * (pv.a * f).exp();
    }
    pv.a * pv.a * (pv.a * pv.q_max()).exp() * acc / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_ptree_law() {
        let pv = ProbabilityVector::new(vec![0.3, 0.7], 1.0).unwrap();
        let mut rng = Seed::new(1).rng();
        let n = 50_000;
        let rooted0 = (0..n).filter(|_| sample_ptree(&pv, &mut rng).root() == 0).count() as f64 / n as f64;
        assert!((rooted0 - 0.3).abs() < 0.01);
    }

    #[test]
    fn rooted_tree_count_and_probabilities() {
        for m in 1..=5 {
            let trees = enumerate_rooted_trees(m);
            assert_eq!(trees.len(), m.pow(m as u32 - 1));
            let q: Vec<f64> = (1..=m).map(|i| i as f64).collect();
            let s: f64 = q.iter().sum();
            let q: Vec<f64> = q.iter().map(|x| x / s).collect();
            let total: f64 = trees.iter().map(|t| ptree_probability(t, &q)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let ord: f64 = enumerate_ordered_trees(m).iter().map(|t| ordered_probability(t, &q)).sum();
            assert!((ord - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn permitted_pairs_examples() {
        let path = OrderedTree::new(0, vec![vec![1], vec![]]).unwrap();
        assert!(permitted_pairs(&path).is_empty());
        // root 0 with children [left = 1, right = 2]
        let cherry = OrderedTree::new(0, vec![vec![1, 2], vec![], vec![]]).unwrap();
        assert_eq!(permitted_pairs(&cherry), vec![(1, 2)]);
    }

    #[test]
    fn tilt_weight_examples() {
        let pv = ProbabilityVector::new(vec![0.4, 0.6], 2.0).unwrap();
        let t = OrderedTree::new(0, vec![vec![1], vec![]]).unwrap();
        let y: f64 = 2.0 * 0.4 * 0.6;
        assert!((tilt_weight(&t, &pv) - y.exp_m1() / y).abs() < 1e-14);
        let tiny = ProbabilityVector::new(vec![0.4, 0.6], 1e-12).unwrap();
        assert!((tilt_weight(&t, &tiny) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn f_integral_matches_pairs() {
        let pv = ProbabilityVector::from_weights(&[1.0, 2.0, 0.5, 3.0, 1.5], 1.0).unwrap();
        for t in enumerate_ordered_trees(4).iter().take(500) {
            let q = &pv.q()[..4];
            let direct: f64 = permitted_pairs(t).iter().map(|&(i, j)| q[i] * q[j]).sum();
            assert!((f_integral(t, q) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_sampler_two_vertices_ratio() {
        let pv = ProbabilityVector::new(vec![0.25, 0.75], 3.0).unwrap();
        let s = TiltedSampler::new(pv, TiltMode::ExactSmall).unwrap();
        let law = s.exact_law().unwrap();
        let p0: f64 = law.iter().filter(|(t, _)| t.root() == 0).map(|(_, p)| p).sum();
        assert!((p0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn connected_two_vertices_is_single_edge() {
        let pv = ProbabilityVector::uniform(2, 1.0).unwrap();
        let mut rng = Seed::new(3).rng();
        for _ in 0..50 {
            assert_eq!(sample_connected(&pv, &mut rng).edges(), &[(0, 1)]);
        }
    }

    #[test]
    fn mcmc_reports_acceptance() {
        let pv = ProbabilityVector::uniform(8, 4.0).unwrap();
        let mut s = TiltedSampler::new(pv, TiltMode::Mcmc { burn_in: 50, thin: 2 }).unwrap().with_trace();
        let mut rng = Seed::new(4).rng();
        for _ in 0..20 {
            let t = s.sample(&mut rng);
            assert_eq!(t.m(), 8);
        }
        assert_eq!(s.diagnostics.proposed, 90);
        assert_eq!(s.diagnostics.log_l_trace.len(), 90);
        let r = s.diagnostics.acceptance_rate();
        assert!(r > 0.0 && r <= 1.0);
        assert!(TiltedSampler::new(ProbabilityVector::uniform(7, 1.0).unwrap(), TiltMode::ExactSmall).is_err());
    }

    #[test]
    fn two_stage_is_valid_graph() {
        let w = [1.0, 0.8, 0.5, 0.3, 0.3, 0.2, 0.1, 0.1, 0.05];
        let mut rng = Seed::new(5).rng();
        for _ in 0..50 {
            let g = two_stage_sample(&w, 2.0, &mut rng).unwrap();
            assert_eq!(g.n(), w.len());
        }
    }
}
