//! Minimal spanning trees on the percolation ensemble, the minimax criterion,
//! discrete cycle breaking, and the greedy attachment procedure.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::graphgen::{PercolationEnsemble, SparseGraph};
use crate::numeric::{fmt_sig17, tv_distance_ordered};
use crate::weights::WeightSequence;

/// A rooted tree over a subset of global vertex labels.
///
/// Internally vertices are numbered `0..len()` (local indices, root = 0)
/// and `label(k)` maps back to the global vertex. Each non-root vertex
/// stores the weight of the edge to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStructure {
    labels: Vec<usize>,
    local: HashMap<usize, usize>,
    parent: Vec<Option<usize>>,
    parent_weight: Vec<f64>,
    depth: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl TreeStructure {
    pub fn singleton(v: usize) -> Self {
        TreeStructure {
            labels: vec![v],
            local: HashMap::from([(v, 0)]),
            parent: vec![None],
            parent_weight: vec![f64::NAN],
            depth: vec![0],
            adj: vec![Vec::new()],
        }
    }

    /// Builds a tree from weighted edges given in global labels. Fails unless
    /// the edges form a spanning tree of `vertices`.
    pub fn from_edges(vertices: &[usize], edges: &[(usize, usize, f64)], root: usize) -> Result<Self> {
        let mut local = HashMap::with_capacity(vertices.len());
        for &v in vertices {
            if local.insert(v, local.len()).is_some() {
                return Err(Error::Invariant(format!("vertex {v} listed twice")));
            }
        }
        let k = vertices.len();
        if k == 0 {
            return Err(Error::Invariant("tree needs at least one vertex".into()));
        }
        if edges.len() + 1 != k {
            return Err(Error::Invariant(format!(
                "{} edges cannot span {} vertices as a tree",
                edges.len(),
                k
            )));
        }
        let &r = local
            .get(&root)
            .ok_or_else(|| Error::Invariant(format!("root {root} is not a tree vertex")))?;
        let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        for &(a, b, w) in edges {
            let (la, lb) = match (local.get(&a), local.get(&b)) {
                (Some(&x), Some(&y)) => (x, y),
                _ => return Err(Error::Invariant(format!("edge ({a}, {b}) leaves the vertex set"))),
            };
            nbrs[la].push((lb, w));
            nbrs[lb].push((la, w));
        }
        // BFS from the root, relabeling so the root is local 0 and labels follow BFS order
        let mut order = Vec::with_capacity(k);
        let mut par_old: Vec<Option<(usize, f64)>> = vec![None; k];
        let mut seen = vec![false; k];
        seen[r] = true;
        let mut queue = VecDeque::from([r]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &(y, w) in &nbrs[x] {
                if !seen[y] {
                    seen[y] = true;
                    par_old[y] = Some((x, w));
                    queue.push_back(y);
                }
            }
        }
        if order.len() != k {
            return Err(Error::Invariant("edges do not connect the vertex set".into()));
        }
        let mut new_of = vec![0; k];
        for (i, &x) in order.iter().enumerate() {
            new_of[x] = i;
        }
        let labels: Vec<usize> = order.iter().map(|&x| vertices[x]).collect();
        let local: HashMap<usize, usize> = labels.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut parent = vec![None; k];
        let mut parent_weight = vec![f64::NAN; k];
        let mut depth = vec![0; k];
        let mut adj = vec![Vec::new(); k];
        for (i, &x) in order.iter().enumerate() {
            if let Some((p, w)) = par_old[x] {
                let pi = new_of[p];
                parent[i] = Some(pi);
                parent_weight[i] = w;
                depth[i] = depth[pi] + 1;
                adj[i].push(pi);
                adj[pi].push(i);
            }
        }
        Ok(TreeStructure {
            labels,
            local,
            parent,
            parent_weight,
            depth,
            adj,
        })
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Global label of the root.
    pub fn root(&self) -> usize {
        self.labels[0]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> usize {
        self.labels[k]
    }

    pub fn local_index(&self, v: usize) -> Option<usize> {
        self.local.get(&v).copied()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.local.contains_key(&v)
    }

    pub fn parent(&self, k: usize) -> Option<usize> {
        self.parent[k]
    }

    pub fn parent_weight(&self, k: usize) -> Option<f64> {
        self.parent[k].map(|_| self.parent_weight[k])
    }

    pub fn depth(&self, k: usize) -> usize {
        self.depth[k]
    }

    /// Local neighbors of local vertex `k`.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.adj[k]
    }

    /// Edges as `(a, b, weight)` in global labels with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (1..self.len())
            .map(|k| {
                let p = self.parent[k].expect("non-root vertex has a parent");
                let (a, b) = (self.labels[k], self.labels[p]);
                (a.min(b), a.max(b), self.parent_weight[k])
            })
            .collect()
    }

    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges().into_iter().map(|(a, b, _)| (a, b)).collect()
    }

    /// Path length in hops between local vertices.
    pub fn distance(&self, mut a: usize, mut b: usize) -> usize {
        let mut d = 0;
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
            d += 1;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
            d += 1;
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
            d += 2;
        }
        d
    }

    /// Maximum edge weight on the path between local vertices.
    pub fn path_max_weight(&self, mut a: usize, mut b: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        while self.depth[a] > self.depth[b] {
            best = best.max(self.parent_weight[a]);
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            best = best.max(self.parent_weight[b]);
            b = self.parent[b].unwrap();
        }
        while a != b {
            best = best.max(self.parent_weight[a]).max(self.parent_weight[b]);
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        best
    }

    /// The tree as a graph on local indices.
    pub fn to_graph(&self) -> SparseGraph {
        let edges = (1..self.len())
            .map(|k| {
                let p = self.parent[k].unwrap();
                (p.min(k), p.max(k))
            })
            .collect();
        SparseGraph::from_simple_edges(self.len(), edges)
    }

    /// Tree file: first line the vertex count, then `child parent weight`
    /// per non-root vertex with 1-based labels.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.len())?;
        for k in 1..self.len() {
            let p = self.parent[k].unwrap();
            writeln!(
                out,
                "{} {} {}",
                self.labels[k] + 1,
                self.labels[p] + 1,
                fmt_sig17(self.parent_weight[k])
            )?;
        }
        Ok(())
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let perr = |line: usize, reason: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
        let k: usize = head.trim().parse().map_err(|_| perr(1, "bad vertex count"))?;
        let mut edges = Vec::new();
        let mut children = Vec::new();
        let mut parents = HashSet::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr(i + 1, "expected `child parent weight`"));
            }
            let c: usize = f[0].parse().map_err(|_| perr(i + 1, "bad child"))?;
            let p: usize = f[1].parse().map_err(|_| perr(i + 1, "bad parent"))?;
            let w: f64 = f[2].parse().map_err(|_| perr(i + 1, "bad weight"))?;
            if c == 0 || p == 0 {
                return Err(perr(i + 1, "labels are 1-based"));
            }
            edges.push((c - 1, p - 1, w));
            children.push(c - 1);
            parents.insert(p - 1);
        }
        let child_set: HashSet<usize> = children.iter().copied().collect();
        let roots: Vec<usize> = parents.difference(&child_set).copied().collect();
        let root = match (roots.as_slice(), k) {
            ([r], _) => *r,
            ([], 1) => return Err(perr(1, "a one-vertex tree file does not name its vertex")),
            _ => return Err(perr(1, "cannot identify a unique root")),
        };
        let mut vertices = vec![root];
        vertices.extend(children);
        if vertices.len() != k {
            return Err(perr(1, "vertex count does not match the edge lines"));
        }
        TreeStructure::from_edges(&vertices, &edges, root)
    }
}

/// Edge indices sorted by weight; aborts on any repeated weight.
pub fn sort_by_weight(edges: &[(usize, usize)], weights: &[f64]) -> Result<Vec<usize>> {
    if edges.len() != weights.len() {
        return Err(Error::param("weights", "need one weight per edge"));
    }
    let mut idx: Vec<usize> = (0..edges.len()).collect();
    idx.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    for w in idx.windows(2) {
        if weights[w[0]] == weights[w[1]] {
            return Err(Error::DuplicateWeight {
                weight: weights[w[0]],
                first: edges[w[0]],
                second: edges[w[1]],
            });
        }
    }
    Ok(idx)
}

/// Kruskal on a presorted edge order; returns the selected edge indices.
pub fn kruskal_indices(n: usize, edges: &[(usize, usize)], order: &[usize]) -> Vec<usize> {
    let mut dsu = DisjointSet::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for &e in order {
        let (a, b) = edges[e];
        if dsu.union(a, b) {
            chosen.push(e);
            if chosen.len() + 1 == n {
                break;
            }
        }
    }
    chosen
}

/// The minimum spanning forest of `g`, one tree per component, each rooted at
/// its smallest vertex. `weights` is indexed like `g.edges()`.
pub fn kruskal(g: &SparseGraph, weights: &[f64]) -> Result<Vec<TreeStructure>> {
    let order = sort_by_weight(g.edges(), weights)?;
    let chosen = kruskal_indices(g.n(), g.edges(), &order);
    let mut dsu = DisjointSet::new(g.n());
    for &e in &chosen {
        dsu.union(g.edges()[e].0, g.edges()[e].1);
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<(usize, usize, f64)>)> = BTreeMap::new();
    let mut first_of_root: HashMap<usize, usize> = HashMap::new();
    for v in 0..g.n() {
        let r = dsu.find(v);
        let key = *first_of_root.entry(r).or_insert(v);
        groups.entry(key).or_default().0.push(v);
    }
    for &e in &chosen {
        let (a, b) = g.edges()[e];
        let key = first_of_root[&dsu.find(a)];
        groups.get_mut(&key).unwrap().1.push((a, b, weights[e]));
    }
    groups
        .into_iter()
        .map(|(root, (vs, es))| TreeStructure::from_edges(&vs, &es, root))
        .collect()
}

/// The MST of the component of vertex 1 together with the nested vertex sets
/// of the percolated giants at each requested `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantMst {
    pub tree: TreeStructure,
    pub lambdas: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Vertex set of the component of vertex 1 at `p_lambda`, one per lambda, sorted.
    pub nested: Vec<Vec<usize>>,
}

impl GiantMst {
    /// The MST of the percolated giant at `lambdas[k]`, read off as a restriction.
    pub fn restricted(&self, k: usize) -> Result<TreeStructure> {
        restrict(&self.tree, &self.nested[k])
    }
}

/// One sorted pass over the ensemble builds the MST of the giant and records
/// every percolated giant along the way.
pub fn mst_of_giant(ens: &PercolationEnsemble, seq: &WeightSequence, lambdas: &[f64]) -> Result<GiantMst> {
    if seq.n() != ens.n() {
        return Err(Error::param("seq", "weight sequence and ensemble disagree on n"));
    }
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("lambdas", "must be sorted ascending"));
    }
    let thresholds: Vec<f64> = lambdas.iter().map(|&l| seq.p_lambda(l)).collect();
    if let Some(&p) = thresholds.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::param("lambdas", format!("percolation threshold {p} outside [0, 1]")));
    }
    let pairs: Vec<(usize, usize)> = ens.edges().iter().map(|e| (e.i, e.j)).collect();
    let order = sort_by_weight(&pairs, &ens.weights())?;
    let n = ens.n();
    let mut dsu = DisjointSet::new(n);
    let mut chosen = Vec::new();
    let mut nested = Vec::with_capacity(lambdas.len());
    let mut next = 0;
    let snapshot = |dsu: &mut DisjointSet| -> Vec<usize> {
        let r = dsu.find(0);
        (0..n).filter(|&v| dsu.find(v) == r).collect()
    };
    for &e in &order {
        let u = ens.edges()[e].u;
        while next < thresholds.len() && u > thresholds[next] {
            nested.push(snapshot(&mut dsu));
            next += 1;
        }
        if dsu.union(pairs[e].0, pairs[e].1) {
            chosen.push(e);
        }
    }
    while next < thresholds.len() {
        nested.push(snapshot(&mut dsu));
        next += 1;
    }
    let giant = snapshot(&mut dsu);
    let tree_edges: Vec<(usize, usize, f64)> = chosen
        .iter()
        .filter(|&&e| dsu.same(pairs[e].0, 0))
        .map(|&e| (pairs[e].0, pairs[e].1, ens.edges()[e].u))
        .collect();
    let tree = TreeStructure::from_edges(&giant, &tree_edges, 0)?;
    for set in &nested {
        let inside: HashSet<usize> = set.iter().copied().collect();
        let count = tree_edges
            .iter()
            .filter(|(a, b, _)| inside.contains(a) && inside.contains(b))
            .count();
        if count + 1 != set.len() {
            return Err(Error::Invariant(format!(
                "restriction of the MST to a percolated giant of size {} has {} edges",
                set.len(),
                count
            )));
        }
    }
    Ok(GiantMst {
        tree,
        lambdas: lambdas.to_vec(),
        thresholds,
        nested,
    })
}

/// Restriction of `t` to `vertices`; fails if the restriction is not a tree.
pub fn restrict(t: &TreeStructure, vertices: &[usize]) -> Result<TreeStructure> {
    let inside: HashSet<usize> = vertices.iter().copied().collect();
    if let Some(v) = vertices.iter().find(|v| !t.contains(**v)) {
        return Err(Error::Invariant(format!("vertex {v} is not in the tree")));
    }
    let edges: Vec<(usize, usize, f64)> = t
        .edges()
        .into_iter()
        .filter(|(a, b, _)| inside.contains(a) && inside.contains(b))
        .collect();
    let root = if inside.contains(&t.root()) {
        t.root()
    } else {
        *vertices.iter().min().ok_or_else(|| Error::Invariant("empty restriction".into()))?
    };
    TreeStructure::from_edges(vertices, &edges, root)
}

/// Bottleneck check: every edge of `g` between tree vertices that is not a
/// tree edge must weigh at least the heaviest edge on the tree path joining
/// its endpoints. Tree edges must be edges of `g`.
pub fn verify_minimax(g: &SparseGraph, weights: &[f64], t: &TreeStructure) -> bool {
    let tree_edges = t.edge_set();
    let mut present = 0;
    for (k, &(a, b)) in g.edges().iter().enumerate() {
        let (Some(la), Some(lb)) = (t.local_index(a), t.local_index(b)) else {
            continue;
        };
        if tree_edges.contains(&(a, b)) {
            present += 1;
            continue;
        }
        if weights[k] < t.path_max_weight(la, lb) {
            return false;
        }
    }
    present == tree_edges.len()
}

/// Outcome of discrete cycle breaking on a (possibly disconnected) graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbdOutcome {
    /// Surviving edges, sorted.
    pub edges: Vec<(usize, usize)>,
    pub deletions: usize,
}

fn connected_without(n: usize, edges: &[(usize, usize)], alive: &[bool], skip: usize) -> bool {
    let (s, target) = edges[skip];
    let mut adj = vec![Vec::new(); n];
    for (k, &(a, b)) in edges.iter().enumerate() {
        if alive[k] && k != skip {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(x) = stack.pop() {
        if x == target {
            return true;
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Repeatedly samples a uniform surviving edge and deletes it when doing so
/// keeps its component connected, until a spanning forest remains.
pub fn cbd_infty<R: Rng + ?Sized>(g: &SparseGraph, rng: &mut R) -> CbdOutcome {
    let edges = g.edges();
    let target = g.n() - crate::graphgen::components(g, &vec![0.0; g.n()]).count();
    let mut alive = vec![true; edges.len()];
    let mut live: Vec<usize> = (0..edges.len()).collect();
    let mut deletions = 0;
    while live.len() > target {
        let pick = rng.random_range(0..live.len());
        let e = live[pick];
        if connected_without(g.n(), edges, &alive, e) {
            alive[e] = false;
            live.swap_remove(pick);
            deletions += 1;
        }
    }
    let mut kept: Vec<(usize, usize)> = live.iter().map(|&e| edges[e]).collect();
    kept.sort_unstable();
    CbdOutcome { edges: kept, deletions }
}

/// Spanning forests encoded as bitmasks over `g.edges()`.
pub type ForestLaw = BTreeMap<u32, f64>;

pub const EXACT_EDGE_LIMIT: usize = 10;

fn check_small(g: &SparseGraph) -> Result<()> {
    if g.m() > EXACT_EDGE_LIMIT {
        return Err(Error::param(
            "g",
            format!("exact laws need at most {EXACT_EDGE_LIMIT} edges, got {}", g.m()),
        ));
    }
    Ok(())
}

pub fn edge_mask(g: &SparseGraph, kept: &[(usize, usize)]) -> u32 {
    let kept: HashSet<&(usize, usize)> = kept.iter().collect();
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| kept.contains(e))
        .fold(0, |m, (k, _)| m | (1 << k))
}

/// Exact MST law under exchangeable distinct weights, by enumerating all
/// `m!` orderings of the edges.
pub fn mst_law_exact(g: &SparseGraph) -> Result<ForestLaw> {
    check_small(g)?;
    let m = g.m();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut record = |perm: &[usize]| {
        let chosen = kruskal_indices(g.n(), g.edges(), perm);
        let mask = chosen.iter().fold(0u32, |acc, &e| acc | (1 << e));
        *counts.entry(mask).or_insert(0) += 1;
        total += 1;
    };
    // Heap's algorithm
    let mut c = vec![0; m];
    record(&perm);
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            record(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total as f64))
        .collect())
}

/// Exact law of the cycle-breaking output, propagated level by level over
/// the surviving edge sets.
pub fn cbd_law_exact(g: &SparseGraph) -> Result<ForestLaw> {
    check_small(g)?;
    let edges = g.edges();
    let m = edges.len();
    let full: u32 = if m == 0 { 0 } else { (1u32 << m) - 1 };
    let mut level: HashMap<u32, f64> = HashMap::from([(full, 1.0)]);
    let mut law = ForestLaw::new();
    while !level.is_empty() {
        let mut next: HashMap<u32, f64> = HashMap::new();
        for (mask, prob) in level {
            let alive: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
            let removable: Vec<usize> = (0..m)
                .filter(|&k| alive[k] && connected_without(g.n(), edges, &alive, k))
                .collect();
            if removable.is_empty() {
                *law.entry(mask).or_insert(0.0) += prob;
                continue;
            }
            // uniform over all live edges with rejection = uniform over removable ones
            let share = prob / removable.len() as f64;
            for k in removable {
                *next.entry(mask & !(1 << k)).or_insert(0.0) += share;
            }
        }
        level = next;
    }
    Ok(law)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbdLawReport {
    /// TV between the exact cycle-breaking law and the exact MST law.
    pub exact_tv: f64,
    /// TV between sampled cycle breaking and the exact MST law.
    pub sampled_tv: f64,
    pub trials: usize,
}

pub fn cbd_law_distance<R: Rng + ?Sized>(g: &SparseGraph, trials: usize, rng: &mut R) -> Result<CbdLawReport> {
    let mst = mst_law_exact(g)?;
    let cbd = cbd_law_exact(g)?;
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for _ in 0..trials {
        let out = cbd_infty(g, rng);
        *counts.entry(edge_mask(g, &out.edges)).or_insert(0.0) += 1.0;
    }
    for v in counts.values_mut() {
        *v /= trials.max(1) as f64;
    }
    Ok(CbdLawReport {
        exact_tv: tv_distance_ordered(&cbd, &mst),
        sampled_tv: tv_distance_ordered(&counts, &mst),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachOutcome {
    /// The start vertex already lies in the percolated giant.
    AlreadyAttached,
    /// The cluster reached the percolated giant.
    ReachedGiant,
    /// The cluster ran out of outgoing edges.
    NoOutgoingEdges,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    /// Added edges `(a, b, u)` in the order they were added.
    pub edges: Vec<(usize, usize, f64)>,
    pub outcome: AttachOutcome,
}

#[derive(PartialEq)]
struct Frontier(f64, usize, usize);

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1)).then(self.2.cmp(&other.2))
    }
}

/// Grows the percolated cluster of `v` at `p_lambda` by always adding the
/// lightest ensemble edge leaving the current cluster, absorbing whole
/// percolated components, until it meets the component of vertex 1.
pub fn algorithm1_attach(ens: &PercolationEnsemble, seq: &WeightSequence, lambda: f64, v: usize) -> Result<Attachment> {
    if v >= ens.n() {
        return Err(Error::param("v", format!("vertex index {v} out of range")));
    }
    let p = seq.p_lambda(lambda);
    let perc = ens.percolate(p.min(1.0))?;
    let mut dsu = DisjointSet::new(ens.n());
    for &(a, b) in perc.edges() {
        dsu.union(a, b);
    }
    if dsu.same(v, 0) {
        return Ok(Attachment {
            edges: Vec::new(),
            outcome: AttachOutcome::AlreadyAttached,
        });
    }
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..ens.n() {
        members.entry(dsu.find(x)).or_default().push(x);
    }
    let adj = ens.weighted_adjacency();
    let mut in_cluster = vec![false; ens.n()];
    let mut heap = BinaryHeap::new();
    let absorb = |root: usize, in_cluster: &mut Vec<bool>, heap: &mut BinaryHeap<Reverse<Frontier>>| {
        for &x in &members[&root] {
            in_cluster[x] = true;
        }
        for &x in &members[&root] {
            for &(y, u) in &adj[x] {
                if !in_cluster[y] && u > p {
                    heap.push(Reverse(Frontier(u, x, y)));
                }
            }
        }
    };
    absorb(dsu.find(v), &mut in_cluster, &mut heap);
    let giant_root = dsu.find(0);
    let mut added = Vec::new();
    while let Some(Reverse(Frontier(u, x, y))) = heap.pop() {
        if in_cluster[y] {
            continue;
        }
        added.push((x.min(y), x.max(y), u));
        let ry = dsu.find(y);
        if ry == giant_root {
            return Ok(Attachment {
                edges: added,
                outcome: AttachOutcome::ReachedGiant,
            });
        }
        absorb(ry, &mut in_cluster, &mut heap);
    }
    Ok(Attachment {
        edges: added,
        outcome: AttachOutcome::NoOutgoingEdges,
    })
}
