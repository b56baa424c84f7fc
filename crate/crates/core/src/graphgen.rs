//! Rank-1 random graphs, the percolation ensemble, and component labeling.
//!
//! All samplers walk the weight-sorted vertex order and skip over absent
//! pairs with geometric jumps, so generation costs `O(n + m)` in expectation.
//! Each source vertex draws from its own sub-stream `seed.child(vertex)`,
//! which makes the output independent of how the work is split across
//! threads.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::numeric::fmt_sig17;
use crate::rng::{open_unit, Seed, SimRng};
use crate::weights::WeightSequence;

/// Denominator of the product kernel `min(1, w_i w_j / D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `D = L_n`, all weights.
    ProductFullL,
    /// `D = ell_n`, vertex 1 left out.
    ProductMinusEll,
}

impl Kernel {
    pub fn tag(self) -> &'static str {
        match self {
            Kernel::ProductFullL => "product-full-L",
            Kernel::ProductMinusEll => "product-minus-ell",
        }
    }

    pub fn denominator(self, seq: &WeightSequence) -> f64 {
        let st = seq.stats();
        match self {
            Kernel::ProductFullL => st.total,
            Kernel::ProductMinusEll => st.ell,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product-full-L" => Ok(Kernel::ProductFullL),
            "product-minus-ell" => Ok(Kernel::ProductMinusEll),
            other => Err(Error::param("kernel", format!("unknown kernel tag {other:?}"))),
        }
    }
}

/// Caps that keep a generation request from exhausting memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationLimits {
    pub max_expected_edges: f64,
}

impl Default for GenerationLimits {
    fn default() -> Self {
        GenerationLimits {
            max_expected_edges: 5.0e7,
        }
    }
}

/// Simple undirected graph on `0..n` with a mirrored edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        SparseGraph {
            n,
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    /// Builds a graph, rejecting self-loops, multi-edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = SparseGraph::empty(n);
        let mut seen = HashSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Invariant(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::Invariant(format!("self-loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::Invariant(format!("duplicate edge {e:?}")));
            }
            g.push_edge(e.0, e.1);
        }
        Ok(g)
    }

    /// Trusted constructor for edge lists that are already simple.
    pub(crate) fn from_simple_edges(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        SparseGraph { n, adj, edges }
    }

    fn push_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
        self.edges.push((a, b));
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (s, t) = if self.adj[a].len() <= self.adj[b].len() { (a, b) } else { (b, a) };
        self.adj[s].contains(&t)
    }

    /// Sorted edge list, handy as a canonical key for small graphs.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Subgraph induced on `vertices`, relabeled `0..k` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> SparseGraph {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| local[*a] != usize::MAX && local[*b] != usize::MAX)
            .map(|&(a, b)| {
                let (x, y) = (local[a], local[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        SparseGraph::from_simple_edges(vertices.len(), edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleEdge {
    pub i: usize,
    pub j: usize,
    /// Edge weight, uniform on (0, 1].
    pub u: f64,
}

/// The full product-kernel graph with one uniform per edge. Every percolated
/// graph and every MST of the experiment is read off this single object.
#[derive(Debug, Clone, PartialEq)]
pub struct PercolationEnsemble {
    n: usize,
    edges: Vec<EnsembleEdge>,
    kernel: Kernel,
    seed: u64,
}

impl PercolationEnsemble {
    pub fn from_parts(n: usize, edges: Vec<EnsembleEdge>, kernel: Kernel, seed: u64) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if !(e.i < e.j && e.j < n) {
                return Err(Error::Invariant(format!(
                    "ensemble edge ({}, {}) violates i < j < n",
                    e.i, e.j
                )));
            }
            if !(e.u >= 0.0 && e.u <= 1.0) {
                return Err(Error::Invariant(format!("edge weight {} outside [0, 1]", e.u)));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::Invariant(format!("duplicate ensemble edge ({}, {})", e.i, e.j)));
            }
        }
        Ok(PercolationEnsemble {
            n,
            edges,
            kernel,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EnsembleEdge] {
        &self.edges
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Keeps exactly the edges with `u <= p`.
    pub fn percolate(&self, p: f64) -> Result<SparseGraph> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| e.u <= p)
            .map(|e| (e.i, e.j))
            .collect();
        Ok(SparseGraph::from_simple_edges(self.n, edges))
    }

    pub fn graph(&self) -> SparseGraph {
        SparseGraph::from_simple_edges(self.n, self.edges.iter().map(|e| (e.i, e.j)).collect())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.u).collect()
    }

    /// Edge indices sorted by increasing weight.
    pub fn order_by_weight(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.edges.len()).collect();
        idx.sort_by(|&a, &b| self.edges[a].u.total_cmp(&self.edges[b].u));
        idx
    }

    /// Per-vertex incident edges as `(neighbor, u)`.
    pub fn weighted_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.u));
            adj[e.j].push((e.i, e.u));
        }
        adj
    }

    /// Writes the edge-list format: header `n m seed kernel`, then `i j u`
    /// per line with 1-based labels and 17 significant digits.
    pub fn write_edge_list<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_edge_list_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_edge_list_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {} {} {}", self.n, self.edges.len(), self.seed, self.kernel)?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.i + 1, e.j + 1, fmt_sig17(e.u))?;
        }
        Ok(())
    }

    pub fn read_edge_list<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let perr = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(perr(1, format!("expected `n m seed kernel`, got {header:?}")));
        }
        let n: usize = h[0].parse().map_err(|_| perr(1, "bad n".into()))?;
        let m: usize = h[1].parse().map_err(|_| perr(1, "bad m".into()))?;
        let seed: u64 = h[2].parse().map_err(|_| perr(1, "bad seed".into()))?;
        let kernel: Kernel = h[3].parse().map_err(|e: Error| perr(1, e.to_string()))?;
        let mut edges = Vec::with_capacity(m);
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr(k + 1, format!("expected `i j u`, got {line:?}")));
            }
            let i: usize = f[0].parse().map_err(|_| perr(k + 1, "bad i".into()))?;
            let j: usize = f[1].parse().map_err(|_| perr(k + 1, "bad j".into()))?;
            let u: f64 = f[2].parse().map_err(|_| perr(k + 1, "bad u".into()))?;
            if i == 0 || j == 0 {
                return Err(perr(k + 1, "labels are 1-based".into()));
            }
            edges.push(EnsembleEdge { i: i - 1, j: j - 1, u });
        }
        if edges.len() != m {
            return Err(perr(1, format!("header announces {m} edges, found {}", edges.len())));
        }
        PercolationEnsemble::from_parts(n, edges, kernel, seed)
    }
}

/// Generic skip sampler over `order` (vertex indices with nonincreasing
/// weight). `prob` maps the weight product `w_a w_b` to the edge probability
/// and must be nondecreasing in its argument. Returns `(a, b, mark)` with the
/// mark drawn right after acceptance from the source vertex stream.
fn rank1_sample<T, P, M>(order: &[usize], w: &[f64], prob: P, seed: Seed, mark: M) -> Vec<(usize, usize, T)>
where
    T: Send,
    P: Fn(f64) -> f64 + Sync,
    M: Fn(&mut SimRng) -> T + Sync,
{
    let k = order.len();
    let per_vertex: Vec<Vec<(usize, usize, T)>> = (0..k)
        .into_par_iter()
        .map(|a| {
            let va = order[a];
            let wa = w[va];
            let mut out = Vec::new();
            if a + 1 >= k {
                return out;
            }
            let mut rng = seed.child(va as u64).rng();
            let mut b = a + 1;
            let mut q = prob(wa * w[order[b]]);
            while b < k && q > 0.0 {
                if q < 1.0 {
                    let r = open_unit(&mut rng);
                    let skip = (r.ln() / (-q).ln_1p()).floor();
                    if skip >= (k - b) as f64 {
                        break;
                    }
                    b += skip as usize;
                }
                let vb = order[b];
                let p = prob(wa * w[vb]);
                if q >= 1.0 && p >= 1.0 || rng.random::<f64>() * q < p {
                    let m = mark(&mut rng);
                    out.push((va.min(vb), va.max(vb), m));
                }
                q = p;
                b += 1;
            }
            out
        })
        .collect();
    per_vertex.into_iter().flatten().collect()
}

/// `sum_{a<b} min(1, scale * w_a w_b)` over a weight-sorted vertex order in
/// `O(k log k)`.
pub fn expected_min_kernel_edges(order: &[usize], w: &[f64], scale: f64) -> f64 {
    let k = order.len();
    let ws: Vec<f64> = order.iter().map(|&v| w[v]).collect();
    // suffix[b] = sum_{c >= b} ws[c]
    let mut suffix = vec![0.0; k + 1];
    for b in (0..k).rev() {
        suffix[b] = suffix[b + 1] + ws[b];
    }
    let mut total = 0.0;
    for a in 0..k {
        // number of b > a with scale * ws[a] * ws[b] >= 1 (a prefix since ws is sorted)
        let lo = a + 1;
        let cut = lo + ws[lo..].partition_point(|&wb| scale * ws[a] * wb >= 1.0);
        total += (cut - lo) as f64 + scale * ws[a] * suffix[cut];
    }
    total
}

fn check_budget(expected: f64, limits: &GenerationLimits) -> Result<()> {
    if expected > limits.max_expected_edges {
        return Err(Error::EdgeBudgetExceeded {
            expected,
            cap: limits.max_expected_edges,
        });
    }
    Ok(())
}

/// Analytic expected edge count of the ensemble, `sum_{i<j} min(1, w_i w_j / D)`.
pub fn expected_ensemble_edges(seq: &WeightSequence, kernel: Kernel) -> f64 {
    let order: Vec<usize> = (0..seq.n()).collect();
    expected_min_kernel_edges(&order, seq.weights(), 1.0 / kernel.denominator(seq))
}

/// Samples the percolation ensemble: each pair `{i, j}` is present
/// independently with probability `min(1, w_i w_j / D)` and carries an
/// independent uniform weight on (0, 1].
pub fn sample_ensemble(
    seq: &WeightSequence,
    kernel: Kernel,
    seed: Seed,
    limits: &GenerationLimits,
) -> Result<PercolationEnsemble> {
    check_budget(expected_ensemble_edges(seq, kernel), limits)?;
    let inv_d = 1.0 / kernel.denominator(seq);
    let order: Vec<usize> = (0..seq.n()).collect();
    let raw = rank1_sample(
        &order,
        seq.weights(),
        |x| (x * inv_d).min(1.0),
        seed.named("ensemble"),
        open_unit,
    );
    let mut edges: Vec<EnsembleEdge> = raw.into_iter().map(|(i, j, u)| EnsembleEdge { i, j, u }).collect();
    edges.sort_unstable_by_key(|e| (e.i, e.j));
    resolve_ties(&mut edges, seed);
    PercolationEnsemble::from_parts(seq.n(), edges, kernel, seed.key())
}

/// Redraws the weight of any edge whose uniform collides with another one.
fn resolve_ties(edges: &mut [EnsembleEdge], seed: Seed) {
    let mut round = 0u64;
    loop {
        let mut idx: Vec<usize> = (0..edges.len()).collect();
        idx.sort_by(|&a, &b| edges[a].u.total_cmp(&edges[b].u));
        let dups: Vec<usize> = idx
            .windows(2)
            .filter(|w| edges[w[0]].u == edges[w[1]].u)
            .map(|w| w[1])
            .collect();
        if dups.is_empty() {
            return;
        }
        for &k in &dups {
            log::warn!(
                "tied edge weight {} on edge ({}, {}); redrawing",
                edges[k].u,
                edges[k].i + 1,
                edges[k].j + 1
            );
            let mut rng = seed.named("tie").child(round).child(k as u64).rng();
            edges[k].u = open_unit(&mut rng);
        }
        round += 1;
    }
}

/// Graph with independent edges of probability `1 - exp(-p w_i w_j / ell_n)`.
pub fn sample_poisson_graph(
    seq: &WeightSequence,
    p: f64,
    seed: Seed,
    limits: &GenerationLimits,
) -> Result<SparseGraph> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    let order: Vec<usize> = (0..seq.n()).collect();
    sample_exp_kernel(seq.n(), &order, seq.weights(), p / seq.stats().ell, seed.named("poisson"), limits)
}

/// The graph `H_n(lambda, delta)`: vertices outside `giant`, independent edges
/// with probability `1 - exp(-p_{(1+delta) lambda} w_i w_j / ell_n)`. The
/// returned graph lives on all `n` labels; giant vertices stay isolated.
pub fn sample_outside_graph(
    seq: &WeightSequence,
    lambda: f64,
    delta: f64,
    giant: &[usize],
    seed: Seed,
    limits: &GenerationLimits,
) -> Result<SparseGraph> {
    if !(lambda >= 0.0 && delta >= 0.0) {
        return Err(Error::param("lambda/delta", "must be nonnegative"));
    }
    let n = seq.n();
    let mut inside = vec![false; n];
    for &v in giant {
        inside[v] = true;
    }
    let order: Vec<usize> = (0..n).filter(|&v| !inside[v]).collect();
    let p = seq.p_lambda((1.0 + delta) * lambda);
    sample_exp_kernel(n, &order, seq.weights(), p / seq.stats().ell, seed.named("outside"), limits)
}

/// `G((V, x), t)`: independent edges with probability `1 - exp(-t x_u x_v)`.
/// Weights need not be sorted and may be zero.
pub fn sample_inhomogeneous(x: &[f64], t: f64, seed: Seed) -> Result<SparseGraph> {
    if !(t >= 0.0) || x.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::param("x/t", "weights and time must be nonnegative"));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    sample_exp_kernel(x.len(), &order, x, t, seed.named("inhomogeneous"), &GenerationLimits::default())
}

fn sample_exp_kernel(
    n: usize,
    order: &[usize],
    w: &[f64],
    scale: f64,
    seed: Seed,
    limits: &GenerationLimits,
) -> Result<SparseGraph> {
    // 1 - e^{-x} <= min(1, x) bounds the expected count from above.
    check_budget(expected_min_kernel_edges(order, w, scale), limits)?;
    let raw = rank1_sample(order, w, |x| -(-scale * x).exp_m1(), seed, |_| ());
    let mut edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b, _)| (a, b)).collect();
    edges.sort_unstable();
    Ok(SparseGraph::from_simple_edges(n, edges))
}

/// Connected components with vertex counts and weight masses
/// `W(C) = sum_{i in C} w_i`. Components are numbered by their smallest vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPartition {
    pub component: Vec<usize>,
    pub sizes: Vec<usize>,
    pub masses: Vec<f64>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (v, &c) in self.component.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn members_of(&self, c: usize) -> Vec<usize> {
        self.component
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == c)
            .map(|(v, _)| v)
            .collect()
    }
}

pub fn components(g: &SparseGraph, weights: &[f64]) -> ComponentPartition {
    assert_eq!(weights.len(), g.n(), "one weight per vertex");
    let n = g.n();
    let mut dsu = DisjointSet::new(n);
    for &(a, b) in g.edges() {
        dsu.union(a, b);
    }
    let mut label = vec![usize::MAX; n];
    let mut component = vec![0; n];
    let mut sizes = Vec::new();
    let mut masses = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if label[r] == usize::MAX {
            label[r] = sizes.len();
            sizes.push(0);
            masses.push(0.0);
        }
        let c = label[r];
        component[v] = c;
        sizes[c] += 1;
        masses[c] += weights[v];
    }
    ComponentPartition {
        component,
        sizes,
        masses,
    }
}

/// The component of vertex 1 (index 0) together with the largest mass among
/// all other components.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantRecord {
    pub vertices: Vec<usize>,
    pub mass: f64,
    pub max_other_mass: f64,
}

impl GiantRecord {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

pub fn giant(g: &SparseGraph, weights: &[f64]) -> GiantRecord {
    let part = components(g, weights);
    let c1 = part.component[0];
    let max_other_mass = part
        .masses
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != c1)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);
    GiantRecord {
        vertices: part.members_of(c1),
        mass: part.masses[c1],
        max_other_mass,
    }
}
