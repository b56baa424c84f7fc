//! Hop-metric statistics of trees and graphs.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graphgen::{components, SparseGraph};
use crate::mst::TreeStructure;
use crate::numeric::{linear_fit, LinearFit};

fn bfs_from(t: &TreeStructure, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.len()];
    let mut queue = VecDeque::with_capacity(t.len());
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in t.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

fn farthest(dist: &[usize]) -> (usize, usize) {
    dist.iter().enumerate().fold((0, 0), |best, (v, &d)| if d > best.1 { (v, d) } else { best })
}

/// Diameter in hops, by two breadth-first sweeps.
pub fn tree_diameter(t: &TreeStructure) -> usize {
    let (a, _) = farthest(&bfs_from(t, &[0]));
    farthest(&bfs_from(t, &[a])).1
}

/// Hop distances between `pairs` uniformly chosen pairs of distinct vertices.
pub fn typical_distance<R: Rng + ?Sized>(t: &TreeStructure, pairs: usize, rng: &mut R) -> Result<Vec<usize>> {
    let m = t.len();
    if m < 2 {
        return Err(Error::param("tree", "needs at least two vertices"));
    }
    Ok((0..pairs)
        .map(|_| {
            let a = rng.random_range(0..m);
            let b = loop {
                let b = rng.random_range(0..m);
                if b != a {
                    break b;
                }
            };
            t.distance(a, b)
        })
        .collect())
}

/// Exact mean hop distance over unordered pairs of distinct vertices.
pub fn mean_pair_distance(t: &TreeStructure) -> f64 {
    let m = t.len();
    if m < 2 {
        return 0.0;
    }
    // each edge separates size(child subtree) * (m - size) pairs
    let mut size = vec![1usize; m];
    let mut total = 0u128;
    for k in (1..m).rev() {
        let p = t.parent(k).expect("non-root");
        size[p] += size[k];
        total += (size[k] * (m - size[k])) as u128;
    }
    total as f64 / (m * (m - 1) / 2) as f64
}

/// `max_v dist(v, sub)` over vertices of `t`; `sub` holds global labels.
pub fn hausdorff_nested(t: &TreeStructure, sub: &[usize]) -> Result<usize> {
    if sub.is_empty() {
        return Err(Error::param("sub_vertices", "must be nonempty"));
    }
    let sources = sub
        .iter()
        .map(|&v| t.local_index(v).ok_or_else(|| Error::param("sub_vertices", format!("vertex {v} is not in the tree"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(farthest(&bfs_from(t, &sources)).1)
}

/// Minimum number of closed hop balls of radius `radius` covering `t`.
pub fn covering_number(t: &TreeStructure, radius: usize) -> usize {
    let m = t.len();
    // far: distance to the deepest vertex in the subtree still waiting for a center
    // near: distance to the closest center placed inside the subtree
    let mut far: Vec<Option<usize>> = vec![Some(0); m];
    let mut near: Vec<Option<usize>> = vec![None; m];
    let mut count = 0;
    for k in (0..m).rev() {
        if let (Some(f), Some(n)) = (far[k], near[k]) {
            if f + n <= radius {
                far[k] = None;
            }
        }
        if far[k] == Some(radius) {
            count += 1;
            far[k] = None;
            near[k] = Some(0);
        }
        match t.parent(k) {
            Some(p) => {
                if let Some(f) = far[k] {
                    far[p] = Some(far[p].map_or(f + 1, |g| g.max(f + 1)));
                }
                if let Some(n) = near[k] {
                    near[p] = Some(near[p].map_or(n + 1, |g| g.min(n + 1)));
                }
            }
            None => {
                if far[k].is_some() {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Covering counts over a radius grid with a least-squares dimension fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    pub radii: Vec<usize>,
    pub counts: Vec<usize>,
    /// Indices `[start, end)` into `radii` used by the fit.
    pub window: (usize, usize),
    /// Fit of `ln N` against `ln(1/r)`; its slope is the dimension estimate.
    pub fit: Option<LinearFit>,
    pub degenerate: bool,
}

impl CoveringReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Number of scales dropped at each end of the grid before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitWindow {
    pub trim_low: usize,
    pub trim_high: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { trim_low: 2, trim_high: 2 }
    }
}

/// Estimates the Minkowski dimension from covering numbers at `radii`.
/// Only scales with a positive radius and at least two balls enter the fit;
/// the default window trims two scales at each end when at least three
/// usable scales remain afterwards.
pub fn dim_estimate(t: &TreeStructure, radii: &[usize], window: Option<FitWindow>) -> Result<CoveringReport> {
    let mut radii: Vec<usize> = radii.iter().copied().filter(|&r| r > 0).collect();
    radii.sort_unstable();
    radii.dedup();
    if radii.is_empty() {
        return Err(Error::param("radii", "need at least one positive radius"));
    }
    let counts: Vec<usize> = radii.iter().map(|&r| covering_number(t, r)).collect();
    // counts are nonincreasing, so the usable scales form a prefix
    let k = counts.iter().take_while(|&&c| c >= 2).count();
    let (lo, hi) = match window {
        Some(w) => {
            let lo = w.trim_low.min(k);
            (lo, k.saturating_sub(w.trim_high).max(lo))
        }
        None if k >= 7 => (2, k - 2),
        None => (0, k),
    };
    let xs: Vec<f64> = radii[lo..hi].iter().map(|&r| -(r as f64).ln()).collect();
    let ys: Vec<f64> = counts[lo..hi].iter().map(|&c| (c as f64).ln()).collect();
    let fit = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    Ok(CoveringReport {
        radii,
        counts,
        window: (lo, hi),
        fit,
        degenerate: xs.len() < 3 || fit.is_none(),
    })
}

/// The run that produced a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub replica: usize,
    pub n: usize,
    pub tau: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub provenance: Provenance,
    pub vertices: usize,
    pub edges: usize,
    /// Components sorted by mass, heaviest first.
    pub component_masses: Vec<f64>,
    pub component_sizes: Vec<usize>,
    pub component_surplus: Vec<usize>,
    pub max_surplus: usize,
    /// `degree_histogram[d]` counts vertices of degree `d`.
    pub degree_histogram: Vec<usize>,
    pub max_degree: usize,
    pub leaf_fraction: f64,
}

/// Surplus `|E| - |V| + 1` of the connected graph spanned by each component.
pub fn graph_stats(g: &SparseGraph, weights: &[f64], provenance: Provenance) -> MetricReport {
    let part = components(g, weights);
    let c = part.count();
    let mut edge_count = vec![0usize; c];
    for &(a, _) in g.edges() {
        edge_count[part.component[a]] += 1;
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| part.masses[b].total_cmp(&part.masses[a]).then(a.cmp(&b)));
    let component_surplus: Vec<usize> = order.iter().map(|&k| edge_count[k] + 1 - part.sizes[k]).collect();
    let max_degree = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0);
    let mut degree_histogram = vec![0usize; max_degree + 1];
    for v in 0..g.n() {
        degree_histogram[g.degree(v)] += 1;
    }
    let leaves = degree_histogram.get(1).copied().unwrap_or(0);
    MetricReport {
        provenance,
        vertices: g.n(),
        edges: g.m(),
        component_masses: order.iter().map(|&k| part.masses[k]).collect(),
        component_sizes: order.iter().map(|&k| part.sizes[k]).collect(),
        max_surplus: component_surplus.iter().copied().max().unwrap_or(0),
        component_surplus,
        degree_histogram,
        max_degree,
        leaf_fraction: if g.n() == 0 { 0.0 } else { leaves as f64 / g.n() as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    fn path(m: usize) -> TreeStructure {
        let v: Vec<usize> = (0..=m).collect();
        let e: Vec<(usize, usize, f64)> = (0..m).map(|i| (i, i + 1, i as f64)).collect();
        TreeStructure::from_edges(&v, &e, 0).unwrap()
    }

    fn star(k: usize) -> TreeStructure {
        let v: Vec<usize> = (0..=k).collect();
        let e: Vec<(usize, usize, f64)> = (1..=k).map(|i| (0, i, i as f64)).collect();
        TreeStructure::from_edges(&v, &e, 3.min(k)).unwrap()
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(tree_diameter(&path(7)), 7);
        assert_eq!(tree_diameter(&star(6)), 2);
        assert_eq!(tree_diameter(&TreeStructure::singleton(4)), 0);
    }

    #[test]
    fn path_covering() {
        for m in 0..30 {
            let t = path(m);
            for r in 0..8 {
                assert_eq!(covering_number(&t, r), (m + 1).div_ceil(2 * r + 1), "m={m} r={r}");
            }
            assert_eq!(covering_number(&t, m), 1);
        }
    }

    #[test]
    fn typical_distance_examples() {
        let mut rng = Seed::new(1).rng();
        assert!(typical_distance(&path(1), 10, &mut rng).unwrap().iter().all(|&d| d == 1));
        assert!(typical_distance(&TreeStructure::singleton(0), 1, &mut rng).is_err());
        let m = 20;
        assert!((mean_pair_distance(&path(m)) - (m as f64 + 2.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_examples() {
        let t = path(9);
        let all: Vec<usize> = (0..10).collect();
        assert_eq!(hausdorff_nested(&t, &all).unwrap(), 0);
        assert_eq!(hausdorff_nested(&t, &[0, 1, 2]).unwrap(), 7);
        assert!(hausdorff_nested(&t, &[]).is_err());
        assert!(hausdorff_nested(&t, &[42]).is_err());
    }

    #[test]
    fn path_dimension_near_one() {
        let t = path(200_000);
        let radii: Vec<usize> = (0..12).map(|k| 16usize << k).collect();
        let r = dim_estimate(&t, &radii, None).unwrap();
        assert!(!r.degenerate);
        assert!((r.slope().unwrap() - 1.0).abs() < 0.05, "{r:?}");
        let few = dim_estimate(&t, &[1, 2], None).unwrap();
        assert!(few.degenerate);
        let saturated = dim_estimate(&path(10), &[2, 4, 8, 16, 32], None).unwrap();
        assert_eq!(saturated.window, (0, 2));
        assert!(saturated.degenerate);
    }

    #[test]
    fn stats_examples() {
        let tri = SparseGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = graph_stats(&tri, &[1.0; 3], Provenance::default());
        assert_eq!(s.max_surplus, 1);
        let tree = path(5).to_graph();
        let s = graph_stats(&tree, &[1.0; 6], Provenance::default());
        assert_eq!(s.max_surplus, 0);
        assert_eq!(s.degree_histogram.iter().sum::<usize>(), 6);
        let deg_sum: usize = s.degree_histogram.iter().enumerate().map(|(d, c)| d * c).sum();
        assert_eq!(deg_sum, 2 * s.edges);
        assert!((s.leaf_fraction - 2.0 / 6.0).abs() < 1e-15);
    }
}
