//! The mixed Poisson branching process `Poi(V_n)` and multitype branching
//! processes with rank-1 rates.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Poisson};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::numeric::{loglog_fit, pairwise_sum, LinearFit};
use crate::rng::{par_draws, Seed};
use crate::weights::WeightSequence;

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// The law of `V_n`: value `v_i = w_i / nu_n` with probability `w_i / ell_n`, `i >= 2`.
#[derive(Debug, Clone)]
pub struct SizeBiasedOffspring {
    values: Vec<f64>,
    probs: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl SizeBiasedOffspring {
    pub fn new(seq: &WeightSequence) -> Result<Self> {
        let st = seq.stats();
        let values: Vec<f64> = seq.weights()[1..].iter().map(|w| w / st.nu).collect();
        let probs: Vec<f64> = seq.weights()[1..].iter().map(|w| w / st.ell).collect();
        let alias = WeightedAliasIndex::new(seq.weights()[1..].to_vec())
            .map_err(|e| Error::InvalidWeights(format!("alias table: {e}")))?;
        Ok(SizeBiasedOffspring { values, probs, alias })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `v_2`, the largest support point.
    pub fn v2(&self) -> f64 {
        self.values[0]
    }

    /// `E[V_n] = sum_i w_i^2 / (nu_n ell_n)`.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values.iter().zip(&self.probs).map(|(v, p)| v * p).collect::<Vec<_>>())
    }

    /// Index into `values()` drawn with the selection probabilities.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    pub fn sample_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.values[self.alias.sample(rng)]
    }

    /// One draw of `Poi(V_n)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        poisson(self.sample_value(rng), rng)
    }

    /// Exact `P(Poi(V_n) >= u)` for real `u`.
    pub fn tail(&self, u: f64) -> f64 {
        let k = u.ceil().max(0.0);
        if k == 0.0 {
            return 1.0;
        }
        let terms: Vec<f64> = self.values.iter().zip(&self.probs).map(|(&v, &p)| p * gamma_lr(k, v)).collect();
        pairwise_sum(&terms)
    }

    /// Exact `P(Poi(V_n) = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        let lk: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&self.probs)
            .map(|(&v, &p)| p * (k as f64 * v.ln() - v - lk).exp())
            .collect();
        pairwise_sum(&terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightOutcome {
    /// The tree died out; `height` is the index of its last generation.
    Extinct { height: usize },
    /// Generation `cap` is nonempty.
    CapHit,
    /// Cumulative population passed the budget first; the height is at least the value given.
    Censored { at_least: usize },
}

impl HeightOutcome {
    /// Whether the height is known to be at least `h`.
    pub fn at_least(&self, h: usize, cap: usize) -> Option<bool> {
        match *self {
            HeightOutcome::Extinct { height } => Some(height >= h),
            HeightOutcome::CapHit => (h <= cap).then_some(true),
            HeightOutcome::Censored { at_least } => (h <= at_least).then_some(true),
        }
    }
}

pub const DEFAULT_POPULATION_BUDGET: u64 = 50_000_000;

/// Height of a Galton–Watson tree with `Poi(V_n)` offspring, explored
/// generation by generation.
pub fn bp_height_sample<R: Rng + ?Sized>(off: &SizeBiasedOffspring, cap: usize, budget: u64, rng: &mut R) -> HeightOutcome {
    let mut generation = 1u64;
    let mut population = 1u64;
    let mut depth = 0;
    loop {
        if depth >= cap {
            return HeightOutcome::CapHit;
        }
        let mut next = 0u64;
        for _ in 0..generation {
            next += off.sample(rng);
        }
        if next == 0 {
            return HeightOutcome::Extinct { height: depth };
        }
        depth += 1;
        population += next;
        if population > budget {
            return HeightOutcome::Censored { at_least: depth };
        }
        generation = next;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub u: Vec<f64>,
    /// Monte-Carlo estimates of `P(Poi(V_n) >= u)`.
    pub tail: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Exact tail at the same points.
    pub exact: Vec<f64>,
    /// Least-squares fit of `ln P` against `ln u` on the estimates.
    pub fit: Option<LinearFit>,
    pub trials: usize,
}

pub fn poi_vn_tail_estimate(off: &SizeBiasedOffspring, grid: &[f64], trials: usize, seed: Seed) -> Result<TailEstimate> {
    if let Some(u) = grid.iter().find(|&&u| !(u >= 0.0)) {
        return Err(Error::param("u", format!("grid point {u} is negative")));
    }
    let draws = par_draws(seed, trials, |rng| off.sample(rng));
    let mut tail = Vec::with_capacity(grid.len());
    let mut std_err = Vec::with_capacity(grid.len());
    for &u in grid {
        let p = draws.iter().filter(|&&d| d as f64 >= u).count() as f64 / trials as f64;
        tail.push(p);
        std_err.push((p * (1.0 - p) / trials as f64).sqrt());
    }
    Ok(TailEstimate {
        u: grid.to_vec(),
        exact: grid.iter().map(|&u| off.tail(u)).collect(),
        fit: loglog_fit(grid, &tail),
        tail,
        std_err,
        trials,
    })
}

/// A sampled multitype tree in breadth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedTree {
    pub types: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub generation: Vec<usize>,
    /// The exploration stopped at `max_gen` or the node budget with live vertices left.
    pub truncated: bool,
}

impl TypedTree {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn height(&self) -> usize {
        self.generation.iter().copied().max().unwrap_or(0)
    }

    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.height() + 1];
        for &g in &self.generation {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn children_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.len()];
        for p in self.parent.iter().flatten() {
            c[*p] += 1;
        }
        c
    }
}

pub const MTBP_NODE_BUDGET: usize = 10_000_000;

/// Rates and the type sampler of `MTBP(D)` at `(lambda, delta)`.
#[derive(Debug, Clone)]
pub struct MtbpLaw {
    types: Vec<usize>,
    /// `p_{(1+delta) lambda} W(D) / ell_n`; a type-`j` vertex has `Poi(scale w_j)` children.
    scale: f64,
    weights: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl MtbpLaw {
    pub fn new(seq: &WeightSequence, lambda: f64, delta: f64, type_space: &[usize]) -> Result<Self> {
        if !(lambda >= 0.0 && delta >= 0.0) {
            return Err(Error::param("lambda/delta", "must be nonnegative"));
        }
        if type_space.is_empty() || type_space.iter().any(|&v| v >= seq.n()) {
            return Err(Error::param("type_space", "must be a nonempty set of valid vertices"));
        }
        let p = seq.p_lambda((1.0 + delta) * lambda);
        let dw: Vec<f64> = type_space.iter().map(|&v| seq.weight(v)).collect();
        let total: f64 = pairwise_sum(&dw);
        Ok(MtbpLaw {
            types: type_space.to_vec(),
            scale: p * total / seq.stats().ell,
            weights: seq.weights().to_vec(),
            alias: WeightedAliasIndex::new(dw).map_err(|e| Error::InvalidWeights(e.to_string()))?,
        })
    }

    /// Mean number of children of a type-`j` vertex.
    pub fn mean_children(&self, j: usize) -> f64 {
        self.scale * self.weights[j]
    }

    pub fn sample<R: Rng + ?Sized>(&self, root: usize, max_gen: usize, rng: &mut R) -> Result<TypedTree> {
        if !self.types.contains(&root) {
            return Err(Error::param("root", "must belong to the type space"));
        }
        let mut tree = TypedTree {
            types: vec![root],
            parent: vec![None],
            generation: vec![0],
            truncated: false,
        };
        let mut head = 0;
        while head < tree.len() {
            let g = tree.generation[head];
            let k = poisson(self.mean_children(tree.types[head]), rng);
            if k > 0 && g >= max_gen {
                tree.truncated = true;
                head += 1;
                continue;
            }
            for _ in 0..k {
                if tree.len() >= MTBP_NODE_BUDGET {
                    tree.truncated = true;
                    return Ok(tree);
                }
                tree.types.push(self.types[self.alias.sample(rng)]);
                tree.parent.push(Some(head));
                tree.generation.push(g + 1);
            }
            head += 1;
        }
        Ok(tree)
    }
}

pub fn mtbp_sample<R: Rng + ?Sized>(
    seq: &WeightSequence,
    lambda: f64,
    delta: f64,
    type_space: &[usize],
    root: usize,
    max_gen: usize,
    rng: &mut R,
) -> Result<TypedTree> {
    MtbpLaw::new(seq, lambda, delta, type_space)?.sample(root, max_gen, rng)
}

/// Keeps the vertices of `big` whose own type and all ancestor types lie in
/// `subset`. Applied to `MTBP(D')` this yields a sample of `MTBP(D)`.
pub fn thin_to_subset(big: &TypedTree, subset: &[usize]) -> TypedTree {
    let keep_type: std::collections::HashSet<usize> = subset.iter().copied().collect();
    let mut new_index = vec![None; big.len()];
    let mut out = TypedTree {
        types: Vec::new(),
        parent: Vec::new(),
        generation: Vec::new(),
        truncated: big.truncated,
    };
    for v in 0..big.len() {
        if !keep_type.contains(&big.types[v]) {
            continue;
        }
        let parent = match big.parent[v] {
            None => None,
            Some(p) => match new_index[p] {
                Some(q) => Some(q),
                None => continue,
            },
        };
        new_index[v] = Some(out.types.len());
        out.types.push(big.types[v]);
        out.parent.push(parent);
        out.generation.push(big.generation[v]);
    }
    out
}

/// Pooled offspring counts of non-root vertices of `MTBP(D)` with `lambda = 0`,
/// compared with the exact `Poi(V_n)` law for `D = [n] \ {1}`.
pub fn type_erasure_tv(seq: &WeightSequence, samples: usize, seed: Seed) -> Result<f64> {
    let d: Vec<usize> = (1..seq.n()).collect();
    let law = MtbpLaw::new(seq, 0.0, 0.0, &d)?;
    let off = SizeBiasedOffspring::new(seq)?;
    let counts = par_draws(seed, samples, |rng| loop {
        // a non-root vertex: a child of the root, typed by size-biased choice
        let root = d[rng.random_range(0..d.len())];
        if let Ok(t) = law.sample(root, 2, rng) {
            let c = t.children_counts();
            if let Some(k) = (1..t.len()).find(|&v| t.generation[v] == 1) {
                break c[k] as u64;
            }
        }
    });
    let mut emp: BTreeMap<u64, f64> = BTreeMap::new();
    for k in counts {
        *emp.entry(k).or_insert(0.0) += 1.0 / samples as f64;
    }
    let kmax = emp.keys().copied().max().unwrap_or(0);
    let mut exact: BTreeMap<u64, f64> = (0..=kmax).map(|k| (k, off.pmf(k))).collect();
    exact.insert(kmax + 1, off.tail((kmax + 1) as f64));
    Ok(crate::numeric::tv_distance_ordered(&emp, &exact))
}

/// Counts per generation for a pair of coupled trees.
pub fn coupled_generation_sizes<R: Rng + ?Sized>(
    seq: &WeightSequence,
    lambda: f64,
    delta: f64,
    small: &[usize],
    big: &[usize],
    root: usize,
    max_gen: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let set: HashMap<usize, ()> = big.iter().map(|&v| (v, ())).collect();
    if small.iter().any(|v| !set.contains_key(v)) {
        return Err(Error::param("small", "must be a subset of the larger type space"));
    }
    let tree = mtbp_sample(seq, lambda, delta, big, root, max_gen, rng)?;
    let thin = thin_to_subset(&tree, small);
    Ok((thin.generation_sizes(), tree.generation_sizes()))
}
