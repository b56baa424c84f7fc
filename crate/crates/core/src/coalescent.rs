//! The finite multiplicative coalescent and its equivalence with the static
//! graph `G((V, x), t)`.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::numeric::{quantize, tv_distance};
use crate::rng::{par_law, Seed};

/// Clusters of a running coalescent. Cluster weights live at DSU roots.
#[derive(Debug, Clone)]
pub struct CoalescentState {
    x: Vec<f64>,
    dsu: DisjointSet,
    weight: Vec<f64>,
    clock: f64,
    merges: usize,
    s1: f64,
    s2: f64,
    positive_clusters: usize,
}

impl CoalescentState {
    pub fn new(x: &[f64]) -> Result<Self> {
        if x.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::param("vertex_weights", "must be finite and nonnegative"));
        }
        Ok(CoalescentState {
            x: x.to_vec(),
            dsu: DisjointSet::new(x.len()),
            weight: x.to_vec(),
            clock: 0.0,
            merges: 0,
            s1: x.iter().sum(),
            s2: x.iter().map(|v| v * v).sum(),
            positive_clusters: x.iter().filter(|&&v| v > 0.0).count(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn merges(&self) -> usize {
        self.merges
    }

    /// Current total merge rate `sum_{a<b} W_a W_b`.
    pub fn total_rate(&self) -> f64 {
        (0.5 * (self.s1 * self.s1 - self.s2)).max(0.0)
    }

    /// Runs the chain until its clock would pass `t`.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        if self.positive_clusters < 2 {
            self.clock = self.clock.max(t);
            return;
        }
        let alias = WeightedAliasIndex::new(self.x.clone()).expect("at least two positive weights");
        while self.positive_clusters >= 2 {
            let rate = self.total_rate();
            let dt = Exp::new(rate).expect("positive rate").sample(rng);
            if self.clock + dt > t {
                self.clock = t;
                return;
            }
            self.clock += dt;
            // two vertex draws proportional to x land in clusters a, b with
            // probability W_a W_b / S1^2; rejecting a == b leaves W_a W_b
            let (ra, rb) = loop {
                let a = self.dsu.find(alias.sample(rng));
                let b = self.dsu.find(alias.sample(rng));
                if a != b {
                    break (a, b);
                }
            };
            let (wa, wb) = (self.weight[ra], self.weight[rb]);
            self.dsu.union(ra, rb);
            let r = self.dsu.find(ra);
            self.weight[r] = wa + wb;
            self.s2 += 2.0 * wa * wb;
            self.positive_clusters -= 1;
            self.merges += 1;
        }
        self.clock = self.clock.max(t);
    }

    /// Cluster weights in nonincreasing order.
    pub fn cluster_weights(&mut self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.x.len())
            .filter(|&v| self.dsu.find(v) == v)
            .map(|v| self.weight[v])
            .collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    /// Cluster index per vertex, numbered by smallest member.
    pub fn partition(&mut self) -> Vec<usize> {
        let mut label = HashMap::new();
        (0..self.x.len())
            .map(|v| {
                let r = self.dsu.find(v);
                let next = label.len();
                *label.entry(r).or_insert(next)
            })
            .collect()
    }
}

/// State of `MC((V, x), t)` as the multiset of cluster weights, sorted nonincreasing.
pub fn simulate_mc<R: Rng + ?Sized>(x: &[f64], t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    let mut st = CoalescentState::new(x)?;
    st.run_until(t, rng);
    Ok(st.cluster_weights())
}

type LawKey = Vec<i64>;

fn key_of(mut weights: Vec<f64>) -> LawKey {
    weights.sort_by(|a, b| b.total_cmp(a));
    weights.into_iter().map(quantize).collect()
}

fn component_weights(n: usize, x: &[f64], edges: impl Iterator<Item = (usize, usize)>) -> Vec<f64> {
    let mut dsu = DisjointSet::new(n);
    for (a, b) in edges {
        dsu.union(a, b);
    }
    let mut mass: HashMap<usize, f64> = HashMap::new();
    for (v, &xv) in x.iter().enumerate() {
        *mass.entry(dsu.find(v)).or_insert(0.0) += xv;
    }
    mass.into_values().collect()
}

pub const EXACT_VERTEX_LIMIT: usize = 6;

/// Exact law of the ordered component weights of `G((V, x), t)` by summing
/// over all `2^(n(n-1)/2)` edge patterns.
pub fn graph_component_law_exact(x: &[f64], t: f64) -> Result<HashMap<LawKey, f64>> {
    let n = x.len();
    if n > EXACT_VERTEX_LIMIT {
        return Err(Error::param(
            "vertex_weights",
            format!("exact enumeration supports at most {EXACT_VERTEX_LIMIT} vertices"),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let probs: Vec<f64> = pairs.iter().map(|&(a, b)| -(-t * x[a] * x[b]).exp_m1()).collect();
    let mut law: HashMap<LawKey, f64> = HashMap::new();
    for mask in 0u32..(1u32 << pairs.len()) {
        let mut pr = 1.0;
        for (k, &p) in probs.iter().enumerate() {
            pr *= if mask >> k & 1 == 1 { p } else { 1.0 - p };
        }
        if pr == 0.0 {
            continue;
        }
        let present = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e);
        *law.entry(key_of(component_weights(n, x, present))).or_insert(0.0) += pr;
    }
    Ok(law)
}

fn sample_graph_weights<R: Rng + ?Sized>(x: &[f64], t: f64, rng: &mut R) -> Vec<f64> {
    let n = x.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < -(-t * x[a] * x[b]).exp_m1() {
                edges.push((a, b));
            }
        }
    }
    component_weights(n, x, edges.into_iter())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// TV between the simulated coalescent law and the exact graph law.
    pub tv_exact: f64,
    /// TV between the simulated coalescent law and a sampled graph law.
    pub tv_sampled: f64,
    pub trials: usize,
}

/// Compares the law of the ordered cluster weights of `MC((V, x), t)` with
/// the component weights of `G((V, x), t)`.
pub fn mc_graph_equivalence(x: &[f64], t: f64, trials: usize, seed: Seed) -> Result<EquivalenceReport> {
    let exact = graph_component_law_exact(x, t)?;
    CoalescentState::new(x)?;
    let mc = par_law(seed.named("coalescent"), trials, |rng| {
        key_of(simulate_mc(x, t, rng).expect("validated weights"))
    });
    let graph = par_law(seed.named("graph"), trials, |rng| key_of(sample_graph_weights(x, t, rng)));
    Ok(EquivalenceReport {
        tv_exact: tv_distance(&mc, &exact),
        tv_sampled: tv_distance(&mc, &graph),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_se;

    #[test]
    fn single_vertex() {
        let mut rng = Seed::new(1).rng();
        assert_eq!(simulate_mc(&[2.0], 5.0, &mut rng).unwrap(), vec![2.0]);
        let r = mc_graph_equivalence(&[2.0], 1.0, 100, Seed::new(1)).unwrap();
        assert_eq!(r.tv_exact, 0.0);
    }

    #[test]
    fn two_vertices_merge_probability() {
        let t = 0.7;
        let hits: Vec<f64> = crate::rng::par_draws(Seed::new(2), 100_000, |rng| {
            (simulate_mc(&[1.0, 1.0], t, rng).unwrap().len() == 1) as u8 as f64
        });
        let (m, se) = mean_se(&hits);
        assert!((m - (1.0 - (-t).exp())).abs() < 3.0 * se.max(1e-3) + 1e-3);
    }

    #[test]
    fn total_weight_conserved_and_merge_bound() {
        let x = [0.3, 1.2, 0.0, 0.7, 2.0, 0.05];
        let mut rng = Seed::new(5).rng();
        for _ in 0..200 {
            let mut st = CoalescentState::new(&x).unwrap();
            st.run_until(3.0, &mut rng);
            assert!(st.merges() < x.len());
            let total: f64 = st.cluster_weights().iter().sum();
            assert!((total - x.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_law_two_vertices() {
        let law = graph_component_law_exact(&[1.0, 1.0], 0.7).unwrap();
        let merged = law[&vec![quantize(2.0)]];
        assert!((merged - (1.0 - (-0.7f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn three_vertex_equivalence() {
        let r = mc_graph_equivalence(&[1.0, 0.5, 0.25], 0.7, 100_000, Seed::new(9)).unwrap();
        assert!(r.tv_exact < 0.015, "{r:?}");
        assert!(r.tv_sampled < 0.015, "{r:?}");
    }
}
