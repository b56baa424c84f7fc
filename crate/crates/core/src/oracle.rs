//! Brute-force references used to validate the fast algorithms.

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::mst::TreeStructure;
use crate::numeric::mean_se;
use crate::rng::{par_draws, Seed};
use crate::tilted::{permitted_pairs, ProbabilityVector, TiltMode, TiltedSampler};

/// Every spanning tree of `g`, as sorted lists of edge indices into `g.edges()`.
pub fn spanning_trees(g: &SparseGraph) -> Vec<Vec<usize>> {
    fn rec(g: &SparseGraph, next: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let need = g.n().saturating_sub(1);
        if chosen.len() == need {
            let mut dsu = DisjointSet::new(g.n());
            if chosen.iter().all(|&k| {
                let (a, b) = g.edges()[k];
                dsu.union(a, b)
            }) {
                out.push(chosen.clone());
            }
            return;
        }
        if g.m() - next < need - chosen.len() {
            return;
        }
        chosen.push(next);
        rec(g, next + 1, chosen, out);
        chosen.pop();
        rec(g, next + 1, chosen, out);
    }
    let mut out = Vec::new();
    if g.n() > 0 {
        rec(g, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// All labeled trees on `[n]`, decoded from every Prüfer sequence.
pub fn all_labeled_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n <= 1 {
        return vec![Vec::new()];
    }
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            prufer_decode(n, &seq)
        })
        .collect()
}

pub fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("Prüfer sequence has a leaf");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// A uniform labeled tree on `[n]` from a random Prüfer sequence.
pub fn random_labeled_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
            prufer_decode(n, &seq)
        }
    }
}

/// A tree structure on `[n]` with unit weights, rooted at 0.
pub fn tree_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<TreeStructure> {
    let v: Vec<usize> = (0..n).collect();
    let e: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
    TreeStructure::from_edges(&v, &e, 0)
}

/// Hop distances between all pairs of local vertices.
pub fn all_pairs_distances(t: &TreeStructure) -> Vec<Vec<usize>> {
    (0..t.len())
        .map(|s| {
            let mut dist = vec![usize::MAX; t.len()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &u in t.neighbors(v) {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        q.push_back(u);
                    }
                }
            }
            dist
        })
        .collect()
}

pub fn diameter_brute(t: &TreeStructure) -> usize {
    all_pairs_distances(t).iter().flatten().copied().max().unwrap_or(0)
}

/// `max_v min_{s in sub} d(v, s)` with `sub` in global labels.
pub fn hausdorff_brute(t: &TreeStructure, sub: &[usize]) -> Option<usize> {
    let d = all_pairs_distances(t);
    let src: Vec<usize> = sub.iter().map(|&v| t.local_index(v)).collect::<Option<_>>()?;
    (0..t.len()).map(|v| src.iter().map(|&s| d[v][s]).min()).max().flatten()
}

pub const BRUTE_COVER_LIMIT: usize = 20;

/// Minimum ball cover by checking center subsets in increasing size.
pub fn covering_brute(t: &TreeStructure, radius: usize) -> Result<usize> {
    let m = t.len();
    if m > BRUTE_COVER_LIMIT {
        return Err(Error::param("tree", format!("brute-force cover supports at most {BRUTE_COVER_LIMIT} vertices")));
    }
    let d = all_pairs_distances(t);
    let balls: Vec<u32> = (0..m)
        .map(|c| (0..m).filter(|&v| d[c][v] <= radius).fold(0u32, |acc, v| acc | 1 << v))
        .collect();
    let full: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    for k in 1..=m {
        // Gosper's hack over k-subsets of [m]
        let mut s: u32 = (1u32 << k) - 1;
        while s <= full {
            let mut cover = 0u32;
            let mut bits = s;
            while bits != 0 {
                cover |= balls[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            if cover == full {
                return Ok(k);
            }
            let c = s & s.wrapping_neg();
            let r = s + c;
            s = (((r ^ s) >> 2) / c) | r;
        }
    }
    Ok(m)
}

/// Component labels from the transitive closure of adjacency.
pub fn components_by_closure(g: &SparseGraph) -> Vec<usize> {
    let n = g.n();
    let mut reach = vec![vec![false; n]; n];
    for v in 0..n {
        reach[v][v] = true;
    }
    for &(a, b) in g.edges() {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).map(|v| (0..n).find(|&u| reach[v][u]).unwrap()).collect()
}

/// A graph on `[m]` identified by its sorted edge list.
pub type GraphKey = Vec<(usize, usize)>;

pub const EXACT_GRAPH_LIMIT: usize = 6;

fn all_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect()
}

/// Exact law of `G(([m], w), t)`, edges independent with probability `1 - exp(-t w_i w_j)`.
pub fn graph_law_exact(w: &[f64], t: f64) -> Result<HashMap<GraphKey, f64>> {
    let m = w.len();
    if m > EXACT_GRAPH_LIMIT {
        return Err(Error::param("w", format!("exact graph law supports at most {EXACT_GRAPH_LIMIT} vertices")));
    }
    let pairs = all_pairs(m);
    let probs: Vec<f64> = pairs.iter().map(|&(a, b)| -(-t * w[a] * w[b]).exp_m1()).collect();
    let mut law = HashMap::new();
    for mask in 0u32..1 << pairs.len() {
        let mut pr = 1.0;
        let mut key = Vec::new();
        for (k, &p) in probs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                pr *= p;
                key.push(pairs[k]);
            } else {
                pr *= 1.0 - p;
            }
        }
        law.insert(key, pr);
    }
    Ok(law)
}

/// Exact law of `G(([m], q), a)` conditioned on being connected.
pub fn connected_law_exact(pv: &ProbabilityVector) -> Result<HashMap<GraphKey, f64>> {
    let mut law: HashMap<GraphKey, f64> = graph_law_exact(pv.q(), pv.a())?
        .into_iter()
        .filter(|(k, _)| SparseGraph::from_edges(pv.m(), k.iter().copied()).is_ok_and(|g| g.is_connected()))
        .collect();
    let z: f64 = law.values().sum();
    law.values_mut().for_each(|p| *p /= z);
    Ok(law)
}

/// Law of the tilted-tree construction computed exactly: the tilted law over
/// all plane trees, each extended by every subset of its permitted pairs.
pub fn connected_law_from_tilted(pv: &ProbabilityVector) -> Result<HashMap<GraphKey, f64>> {
    let sampler = TiltedSampler::new(pv.clone(), TiltMode::ExactSmall)?;
    let trees = sampler.exact_law().expect("exact mode");
    let q = pv.q();
    let mut law: HashMap<GraphKey, f64> = HashMap::new();
    for (t, pt) in trees {
        let perm = permitted_pairs(&t);
        let probs: Vec<f64> = perm.iter().map(|&(i, j)| -(-pv.a() * q[i] * q[j]).exp_m1()).collect();
        for mask in 0u32..1 << perm.len() {
            let mut pr = pt;
            let mut key = t.edges();
            for (k, &p) in probs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    pr *= p;
                    let (i, j) = perm[k];
                    key.push((i.min(j), i.max(j)));
                } else {
                    pr *= 1.0 - p;
                }
            }
            key.sort_unstable();
            *law.entry(key).or_insert(0.0) += pr;
        }
    }
    Ok(law)
}

/// Direct sampling of `G(([m], q), a)` repeated until connected.
pub fn sample_connected_rejection<R: Rng + ?Sized>(pv: &ProbabilityVector, rng: &mut R) -> GraphKey {
    let pairs = all_pairs(pv.m());
    let q = pv.q();
    loop {
        let key: GraphKey = pairs
            .iter()
            .copied()
            .filter(|&(i, j)| rng.random::<f64>() < -(-pv.a() * q[i] * q[j]).exp_m1())
            .collect();
        if SparseGraph::from_edges(pv.m(), key.iter().copied()).is_ok_and(|g| g.is_connected()) {
            return key;
        }
    }
}

/// One randomized instance of the uniform-minima comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformMinimaCase {
    pub m0: usize,
    pub x0: f64,
    pub xs: Vec<f64>,
}

impl UniformMinimaCase {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let m0 = rng.random_range(1..=5);
        let k = rng.random_range(1..=5);
        let x0 = rng.random_range(0.0..0.9);
        let xs = (0..k).map(|_| rng.random_range(x0..0.99)).collect();
        UniformMinimaCase { m0, x0, xs }
    }

    pub fn bound(&self) -> f64 {
        self.m0 as f64 / (self.m0 + self.xs.len()) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMinimaEstimate {
    pub probability: f64,
    pub std_err: f64,
    pub bound: f64,
}

impl UniformMinimaEstimate {
    pub fn passes(&self) -> bool {
        self.probability >= self.bound - 3.0 * self.std_err
    }
}

/// Monte-Carlo estimate of `P(min of m0 Unif[x0,1] < min of Unif[x_j,1])`.
pub fn uniform_minima(case: &UniformMinimaCase, trials: usize, seed: Seed) -> Result<UniformMinimaEstimate> {
    if case.m0 == 0 || case.xs.is_empty() {
        return Err(Error::param("uniform_minima", "need m0 >= 1 and k >= 1"));
    }
    if !(0.0..1.0).contains(&case.x0) || case.xs.iter().any(|&x| !(case.x0..1.0).contains(&x)) {
        return Err(Error::param("uniform_minima", "need 0 <= x0 <= x_j < 1"));
    }
    let hits = par_draws(seed, trials, |rng| {
        let a = (0..case.m0).map(|_| rng.random_range(case.x0..1.0)).fold(f64::INFINITY, f64::min);
        let b = case.xs.iter().map(|&x| rng.random_range(x..1.0)).fold(f64::INFINITY, f64::min);
        (a < b) as u8 as f64
    });
    let (p, se) = mean_se(&hits);
    Ok(UniformMinimaEstimate {
        probability: p,
        std_err: se,
        bound: case.bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_counts() {
        for n in 1..=6 {
            assert_eq!(all_labeled_trees(n).len(), n.pow(n.saturating_sub(2) as u32));
        }
        let k4 = SparseGraph::from_edges(4, (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b)))).unwrap();
        assert_eq!(spanning_trees(&k4).len(), 16);
    }

    #[test]
    fn brute_cover_path() {
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let t = tree_from_edges(10, &edges).unwrap();
        assert_eq!(covering_brute(&t, 1).unwrap(), 4);
        assert_eq!(covering_brute(&t, 0).unwrap(), 10);
    }

    #[test]
    fn tilted_construction_is_exact() {
        for (q, a) in [(vec![1.0, 1.0, 1.0], 1.5), (vec![0.1, 0.2, 0.3, 0.4], 2.0), (vec![0.5, 0.1, 0.3, 0.05, 0.05], 4.0)] {
            let pv = ProbabilityVector::from_weights(&q, a).unwrap();
            let direct = connected_law_exact(&pv).unwrap();
            let tilted = connected_law_from_tilted(&pv).unwrap();
            let tv = crate::numeric::tv_distance(&direct, &tilted);
            assert!(tv < 1e-12, "q={q:?} tv={tv}");
        }
    }

    #[test]
    fn symmetric_minima_is_half() {
        let case = UniformMinimaCase { m0: 1, x0: 0.3, xs: vec![0.3] };
        let e = uniform_minima(&case, 200_000, Seed::new(1)).unwrap();
        assert!((e.probability - 0.5).abs() < 4.0 * e.std_err);
        assert!(e.passes());
    }
}
