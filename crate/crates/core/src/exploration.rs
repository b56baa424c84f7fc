//! Breadth-first walks driven by exponential clocks, their coupling with
//! `G([n], x, lambda + 1/sigma_2(x))`, the drift functions `Phi` and `phi`,
//! and the positive root `s(lambda)` of `Phi`.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graphgen::SparseGraph;
use crate::numeric::{exp_excess, exp_excess_ratio, pairwise_sum};
use crate::rng::{open_unit, par_draws, Seed};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkStart {
    /// Vertex 1 removed, `Z(0) = 0`.
    Minus,
    /// Exploration from vertex 1, `Z(0) = x_1`.
    Vertex1,
}

/// A breadth-first walk `Z(u) = offset - u + sum_j x_j 1{xi_j <= u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    offset: f64,
    /// Jump times, sorted ascending.
    times: Vec<f64>,
    /// Jump sizes aligned with `times`.
    sizes: Vec<f64>,
    /// Vertex making each jump.
    vertices: Vec<usize>,
}

impl WalkTrace {
    /// Builds a walk from per-vertex clocks; `xi[v]` that is not finite marks
    /// a vertex without a jump.
    pub fn from_clocks(offset: f64, xi: &[f64], x: &[f64]) -> Self {
        let mut vertices: Vec<usize> = (0..xi.len()).filter(|&v| xi[v].is_finite()).collect();
        vertices.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]).then(a.cmp(&b)));
        WalkTrace {
            offset,
            times: vertices.iter().map(|&v| xi[v]).collect(),
            sizes: vertices.iter().map(|&v| x[v]).collect(),
            vertices,
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn jump_vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// `Z(u)`, right-continuous.
    pub fn value(&self, u: f64) -> f64 {
        let k = self.times.partition_point(|&t| t <= u);
        self.offset - u + self.sizes[..k].iter().sum::<f64>()
    }

    /// `Z(u-)`.
    pub fn left_limit(&self, u: f64) -> f64 {
        let k = self.times.partition_point(|&t| t < u);
        self.offset - u + self.sizes[..k].iter().sum::<f64>()
    }

    /// `inf { u >= 0 : Z(u) = 0 }`, scanning jumps while the running level
    /// stays ahead of them.
    pub fn hitting_time(&self) -> f64 {
        let mut level = self.offset;
        for (&t, &s) in self.times.iter().zip(&self.sizes) {
            if t > level {
                break;
            }
            level += s;
        }
        level
    }

    /// Infimum of `Z` over `[u1, u2]`; `Z` only decreases between jumps so
    /// the candidates are left limits at jumps and the right end.
    pub fn min_on(&self, u1: f64, u2: f64) -> f64 {
        let mut best = self.value(u1).min(self.value(u2));
        let lo = self.times.partition_point(|&t| t <= u1);
        let hi = self.times.partition_point(|&t| t <= u2);
        for &t in &self.times[lo..hi] {
            best = best.min(self.left_limit(t));
        }
        best
    }
}

/// Independent clocks `xi_j ~ Exp(theta_{j, lambda})` for `j = 2..n`
/// (index 0 gets `+inf`).
pub fn sample_clocks<R: Rng + ?Sized>(theta: &[f64], rng: &mut R) -> Vec<f64> {
    let mut xi = Vec::with_capacity(theta.len());
    xi.push(f64::INFINITY);
    for &th in &theta[1..] {
        xi.push(-open_unit(rng).ln() / th);
    }
    xi
}

pub fn sample_walk<R: Rng + ?Sized>(seq: &WeightSequence, lambda: f64, start: WalkStart, rng: &mut R) -> Result<WalkTrace> {
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", format!("must be nonnegative, got {lambda}")));
    }
    let view = seq.rescaled(lambda);
    let xi = sample_clocks(&view.theta, rng);
    let offset = match start {
        WalkStart::Minus => 0.0,
        WalkStart::Vertex1 => view.x[0],
    };
    Ok(WalkTrace::from_clocks(offset, &xi, &view.x))
}

/// The graph built by the coupled breadth-first exploration together with
/// its components in exploration order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledExploration {
    pub graph: SparseGraph,
    /// Components in the order they were explored, vertices in BFS order.
    pub components: Vec<Vec<usize>>,
    pub masses: Vec<f64>,
    pub walk: WalkTrace,
}

/// Explores `G(V, x, t)` breadth-first with scanning intervals driven by
/// the clocks `xi` (rates `t x_j`). Vertex `v` scans an interval of length
/// `x_v` and discovers the unexplored vertices whose clock rings inside it;
/// edges from `v` to already discovered, unscanned vertices are added with
/// probability `1 - exp(-t x_v x_j)`. With `Vertex1` the exploration starts
/// at vertex 0 over `[0, x_0]`; otherwise vertex 0 is left out entirely.
pub fn explore_coupled<R: Rng + ?Sized>(
    x: &[f64],
    t: f64,
    xi: &[f64],
    start: WalkStart,
    rng: &mut R,
) -> CoupledExploration {
    let n = x.len();
    let mut order: Vec<usize> = (1..n).collect();
    order.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]).then(a.cmp(&b)));
    let mut next = 0;
    let mut edges = Vec::new();
    let mut components = Vec::new();
    let mut masses = Vec::new();
    let mut queued = vec![false; n];

    let mut explore = |root: usize, mut pos: f64, next: &mut usize| {
        let mut comp = vec![root];
        let mut mass = x[root];
        let mut queue = VecDeque::from([root]);
        queued[root] = true;
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            for &j in &queue {
                if rng.random::<f64>() < -(-t * x[v] * x[j]).exp_m1() {
                    edges.push((v.min(j), v.max(j)));
                }
            }
            let end = pos + x[v];
            while *next < order.len() && xi[order[*next]] <= end {
                let j = order[*next];
                *next += 1;
                edges.push((v.min(j), v.max(j)));
                comp.push(j);
                mass += x[j];
                queue.push_back(j);
                queued[j] = true;
            }
            pos = end;
        }
        (comp, mass)
    };

    if start == WalkStart::Vertex1 {
        let (c, m) = explore(0, 0.0, &mut next);
        components.push(c);
        masses.push(m);
    }
    while next < order.len() {
        let root = order[next];
        next += 1;
        let (c, m) = explore(root, xi[root], &mut next);
        components.push(c);
        masses.push(m);
    }
    let offset = if start == WalkStart::Vertex1 { x[0] } else { 0.0 };
    edges.sort_unstable();
    CoupledExploration {
        graph: SparseGraph::from_simple_edges(n, edges),
        components,
        masses,
        walk: WalkTrace::from_clocks(offset, xi, x),
    }
}

/// One coupled run on the rescaled weights at `lambda`.
pub fn coupled_run<R: Rng + ?Sized>(seq: &WeightSequence, lambda: f64, start: WalkStart, rng: &mut R) -> CoupledExploration {
    let view = seq.rescaled(lambda);
    let t = lambda + 1.0 / sigma2_x(&view.x);
    let xi = sample_clocks(&view.theta, rng);
    explore_coupled(&view.x, t, &xi, start, rng)
}

/// `sigma_2(x) = sum_{i >= 2} x_i^2`.
pub fn sigma2_x(x: &[f64]) -> f64 {
    pairwise_sum(&x[1..].iter().map(|v| v * v).collect::<Vec<_>>())
}

pub const COUPLED_VERTEX_LIMIT: usize = 200;

/// Largest `|hitting time of Z^(1) - mass of the component of vertex 1|`
/// over coupled runs.
pub fn hitting_mass_check(seq: &WeightSequence, lambda: f64, trials: usize, seed: Seed) -> Result<f64> {
    if seq.n() > COUPLED_VERTEX_LIMIT {
        return Err(Error::param(
            "seq",
            format!("coupled exploration check supports n <= {COUPLED_VERTEX_LIMIT}"),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", "must be nonnegative"));
    }
    let diffs = par_draws(seed, trials, |rng| {
        let run = coupled_run(seq, lambda, WalkStart::Vertex1, rng);
        (run.walk.hitting_time() - run.masses[0]).abs()
    });
    Ok(diffs.into_iter().fold(0.0, f64::max))
}

/// `Phi(u)` and `phi(u)` at the given `lambda`.
pub fn phi_varphi(seq: &WeightSequence, lambda: f64, u: f64) -> Result<(f64, f64)> {
    if !(u >= 0.0) {
        return Err(Error::param("u", format!("must be nonnegative, got {u}")));
    }
    let drift = Drift::new(seq, lambda)?;
    Ok((drift.big_phi(u), drift.small_phi(u)))
}

/// Precomputed `theta_{j, lambda}` for `j >= 2` and the factor `1 + lambda n^{-eta}`.
#[derive(Debug, Clone)]
pub struct Drift {
    pub lambda: f64,
    pub factor: f64,
    theta: Vec<f64>,
}

impl Drift {
    pub fn new(seq: &WeightSequence, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be nonnegative, got {lambda}")));
        }
        let view = seq.rescaled(lambda);
        let eta = seq.constants().eta;
        Ok(Drift {
            lambda,
            factor: 1.0 + lambda * (seq.n() as f64).powf(-eta),
            theta: view.theta[1..].to_vec(),
        })
    }

    pub fn big_phi(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let s = pairwise_sum(&self.theta.iter().map(|&th| th * exp_excess(u * th)).collect::<Vec<_>>());
        self.lambda * u - s / self.factor
    }

    pub fn small_phi(&self, u: f64) -> f64 {
        pairwise_sum(&self.theta.iter().map(|&th| th * th * exp_excess_ratio(u * th)).collect::<Vec<_>>())
    }
}

/// The unique positive zero of `Phi`, bracketed by doubling or halving from
/// 1 and refined by bisection to machine precision.
pub fn root_s(seq: &WeightSequence, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let d = Drift::new(seq, lambda)?;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    if d.big_phi(1.0) >= 0.0 {
        let mut steps = 0;
        while d.big_phi(hi) >= 0.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 1100 || !hi.is_finite() {
                return Err(Error::Bracketing(format!(
                    "Phi stayed nonnegative up to u = {lo:e} at lambda = {lambda}"
                )));
            }
        }
    } else {
        let mut steps = 0;
        while d.big_phi(lo) < 0.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > 1100 || lo == 0.0 {
                return Err(Error::Bracketing(format!(
                    "Phi stayed negative down to u = {hi:e} at lambda = {lambda}"
                )));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d.big_phi(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_se;

    #[test]
    fn vertex1_walk_starts_at_x1() {
        let seq = WeightSequence::power_law(50, 3.0, 3.5).unwrap();
        let w = sample_walk(&seq, 1.0, WalkStart::Vertex1, &mut Seed::new(1).rng()).unwrap();
        assert_eq!(w.value(0.0), seq.rescaled(1.0).x[0]);
        let m = sample_walk(&seq, 1.0, WalkStart::Minus, &mut Seed::new(1).rng()).unwrap();
        assert_eq!(m.value(0.0), 0.0);
        assert_eq!(m.jump_times().len(), 49);
    }

    #[test]
    fn two_vertex_walk() {
        let seq = WeightSequence::new(vec![2.0, 1.0], 3.5).unwrap();
        let x = seq.rescaled(0.5).x;
        for r in 0..200 {
            let w = sample_walk(&seq, 0.5, WalkStart::Vertex1, &mut Seed::new(r).rng()).unwrap();
            let xi = w.jump_times()[0];
            let expect = if xi <= x[0] { x[0] + x[1] } else { x[0] };
            assert_eq!(w.hitting_time(), expect);
            assert!((w.value(xi) - (x[0] - xi + x[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn hitting_time_equals_component_mass() {
        let seq = WeightSequence::power_law(100, 3.0, 3.5).unwrap();
        for lambda in [0.0, 1.0, 5.0] {
            assert!(hitting_mass_check(&seq, lambda, 200, Seed::new(3)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn coupled_components_match_graph() {
        let seq = WeightSequence::power_law(120, 3.0, 3.5).unwrap();
        let mut rng = Seed::new(17).rng();
        for start in [WalkStart::Minus, WalkStart::Vertex1] {
            let run = coupled_run(&seq, 2.0, start, &mut rng);
            let x = seq.rescaled(2.0).x;
            let part = crate::graphgen::components(&run.graph, &x);
            let expected = if start == WalkStart::Minus { 1 } else { 0 };
            assert_eq!(part.count(), run.components.len() + expected);
            for (c, &m) in run.components.iter().zip(&run.masses) {
                let id = part.component[c[0]];
                assert_eq!(part.sizes[id], c.len());
                assert!((part.masses[id] - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_excursion_implies_large_component() {
        let seq = WeightSequence::power_law(100, 3.0, 3.5).unwrap();
        let mut rng = Seed::new(23).rng();
        for _ in 0..200 {
            let run = coupled_run(&seq, 3.0, WalkStart::Minus, &mut rng);
            let max_mass = run.masses.iter().cloned().fold(0.0, f64::max);
            let t = run.walk.jump_times().to_vec();
            for w in t.windows(2).take(30) {
                let (u1, u2) = (w[0], w[0] + 0.5 * (w[1] - w[0]) + 1e-3);
                if run.walk.min_on(u1, u2) > 0.0 {
                    assert!(max_mass >= u2 - u1);
                }
            }
        }
    }

    #[test]
    fn phi_identity_and_zero() {
        let seq = WeightSequence::power_law(5000, 3.0, 3.5).unwrap();
        let d = Drift::new(&seq, 4.0).unwrap();
        assert_eq!(d.big_phi(0.0), 0.0);
        assert_eq!(d.small_phi(0.0), 0.0);
        for &u in &[1e-4, 0.01, 0.3, 2.0, 50.0] {
            let lhs = d.big_phi(u);
            let rhs = d.lambda * u - u * d.small_phi(u) / d.factor;
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(d.lambda * u));
        }
        let mut prev = 0.0;
        for k in 0..40 {
            let v = d.small_phi(1e-3 * 1.4f64.powi(k));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn phi_single_nonroot_closed_form() {
        let seq = WeightSequence::new(vec![3.0, 2.0], 3.5).unwrap();
        let lambda = 1.5;
        let view = seq.rescaled(lambda);
        let th = view.theta[1];
        let f = 1.0 + lambda * 2f64.powf(-seq.constants().eta);
        for &u in &[0.1, 1.0, 7.0] {
            let (big, small) = phi_varphi(&seq, lambda, u).unwrap();
            let y = u * th;
            assert!((big - (lambda * u - th / f * (y + (-y).exp() - 1.0))).abs() < 1e-12);
            assert!((small - th * th * (y + (-y).exp() - 1.0) / y).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_mean_matches_phi() {
        let seq = WeightSequence::power_law(400, 3.0, 3.5).unwrap();
        let lambda = 2.0;
        let neta = (400f64).powf(seq.constants().eta);
        let d = Drift::new(&seq, lambda).unwrap();
        for &u in &[0.05, 0.2, 0.6] {
            let vals = par_draws(Seed::new(31), 10_000, |rng| {
                neta * sample_walk(&seq, lambda, WalkStart::Minus, rng).unwrap().value(u)
            });
            let (m, se) = mean_se(&vals);
            assert!((m - d.big_phi(u)).abs() < 3.5 * se, "u={u}: {m} vs {} (se {se})", d.big_phi(u));
        }
    }

    #[test]
    fn root_is_zero_and_monotone() {
        let seq = WeightSequence::power_law(20_000, 3.0, 3.5).unwrap();
        let mut prev = 0.0;
        for lambda in [0.5, 1.0, 3.0, 9.0] {
            let s = root_s(&seq, lambda).unwrap();
            let d = Drift::new(&seq, lambda).unwrap();
            assert!(d.big_phi(s).abs() / (lambda * s) < 1e-10);
            assert!(s > prev);
            prev = s;
        }
        assert!(root_s(&seq, 0.0).is_err());
    }
}
