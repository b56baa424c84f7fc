use std::collections::HashSet;

use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::branching::{bp_height_sample, MtbpLaw, SizeBiasedOffspring, DEFAULT_POPULATION_BUDGET};
use crate::coalescent::CoalescentState;
use crate::exploration::{sample_walk, Drift, WalkStart};
use crate::graphgen::{components, sample_ensemble, Kernel};
use crate::metrics::{covering_number, dim_estimate, hausdorff_nested, mean_pair_distance, typical_distance};
use crate::mst::{cbd_infty, kruskal, mst_of_giant, restrict};
use crate::numeric::{empirical_law, tv_distance};
use crate::rng::par_draws;
use crate::oracle::{components_by_closure, random_labeled_tree, tree_from_edges};
use crate::tilted::{f_integral, log_tilt_weight, permitted_pairs, sample_ptree, OrderedTree, ProbabilityVector};
use crate::{Seed, SparseGraph, WeightSequence};

fn small_graph() -> impl Strategy<Value = SparseGraph> {
    (2usize..12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        proptest::sample::subsequence(pairs.clone(), 0..=pairs.len())
            .prop_map(move |es| SparseGraph::from_edges(n, es).unwrap())
    })
}

fn weighted_graph() -> impl Strategy<Value = (SparseGraph, Vec<f64>)> {
    small_graph().prop_flat_map(|g| {
        let m = g.m();
        (Just(g), Just(()).prop_perturb(move |_, mut rng| {
            let mut w: Vec<f64> = (0..m).map(|k| k as f64 + 1.0).collect();
            for i in (1..w.len()).rev() {
                w.swap(i, rng.random_range(0..=i));
            }
            w
        }))
    })
}

fn random_tree(n: usize, seed: u64) -> crate::TreeStructure {
    let edges = random_labeled_tree(n, &mut Seed::new(seed).rng());
    tree_from_edges(n, &edges).unwrap()
}

fn prob_vector() -> impl Strategy<Value = ProbabilityVector> {
    (prop::collection::vec(0.05f64..1.0, 2..7), 0.1f64..4.0)
        .prop_map(|(w, a)| ProbabilityVector::from_weights(&w, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_law_sequences_satisfy_rescaling_identities(n in 50usize..3000, tau in 3.05f64..3.95, c in 0.5f64..5.0) {
        let s = WeightSequence::power_law(n, c, tau).unwrap();
        let eta = s.constants().eta;
        let view = s.rescaled(2.0);
        let sig: f64 = view.x[1..].iter().map(|x| x * x).sum();
        prop_assert!((sig / (n as f64).powf(-eta) - 1.0).abs() < 1e-9);
        let k = 2.0 + (n as f64).powf(eta);
        for (x, th) in view.x.iter().zip(&view.theta) {
            prop_assert!((k * x - th).abs() <= 1e-12 * th.abs().max(1.0));
        }
        prop_assert!(s.p_lambda(1.0) < s.p_lambda(1.5));
    }

    #[test]
    fn percolation_is_monotone_coupling(seed in any::<u64>(), p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let s = WeightSequence::power_law(300, 3.0, 3.5).unwrap();
        let ens = sample_ensemble(&s, Kernel::ProductMinusEll, Seed::new(seed), &Default::default()).unwrap();
        let ones = vec![1.0; ens.n()];
        let small = components(&ens.percolate(lo).unwrap(), &ones);
        let big = components(&ens.percolate(hi).unwrap(), &ones);
        for members in small.members() {
            let c = big.component[members[0]];
            prop_assert!(members.iter().all(|&v| big.component[v] == c));
        }
    }

    #[test]
    fn component_partition_matches_closure(g in small_graph()) {
        let part = components(&g, &vec![1.0; g.n()]);
        let closure = components_by_closure(&g);
        for a in 0..g.n() {
            for b in 0..g.n() {
                prop_assert_eq!(part.component[a] == part.component[b], closure[a] == closure[b]);
            }
        }
        prop_assert_eq!(part.sizes.iter().sum::<usize>(), g.n());
    }

    #[test]
    fn mst_depends_only_on_ranks((g, w) in weighted_graph()) {
        let transformed: Vec<f64> = w.iter().map(|x| (x / 100.0).powi(3) + 0.5).collect();
        let edge_set = |ts: Vec<crate::TreeStructure>| -> HashSet<(usize, usize)> {
            ts.iter().flat_map(|t| t.edge_set()).collect()
        };
        prop_assert_eq!(edge_set(kruskal(&g, &w).unwrap()), edge_set(kruskal(&g, &transformed).unwrap()));
    }

    #[test]
    fn cycle_breaking_deletes_exactly_the_surplus(g in small_graph(), seed in any::<u64>()) {
        let out = cbd_infty(&g, &mut Seed::new(seed).rng());
        let comps = components(&g, &vec![1.0; g.n()]).count();
        prop_assert_eq!(out.deletions, g.m() + comps - g.n());
        prop_assert_eq!(out.edges.len(), g.n() - comps);
    }

    #[test]
    fn coalescent_conserves_mass(x in prop::collection::vec(0.01f64..2.0, 1..12), t in 0.0f64..5.0, seed in any::<u64>()) {
        let mut st = CoalescentState::new(&x).unwrap();
        st.run_until(t, &mut Seed::new(seed).rng());
        let before: f64 = x.iter().sum();
        let after: f64 = st.cluster_weights().iter().sum();
        prop_assert!((before - after).abs() <= 1e-12 * before);
        prop_assert!(st.merges() < x.len());
    }

    #[test]
    fn covering_number_nonincreasing_in_radius(n in 1usize..120, seed in any::<u64>()) {
        let t = random_tree(n, seed);
        let counts: Vec<usize> = (0..12).map(|r| covering_number(&t, r)).collect();
        prop_assert_eq!(counts[0], n);
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn dimension_fit_ignores_labels(n in 30usize..300, seed in any::<u64>(), shift in 1usize..1000) {
        let edges = random_labeled_tree(n, &mut Seed::new(seed).rng());
        let t = tree_from_edges(n, &edges).unwrap();
        let relabel = |v: usize| (n - 1 - v) + shift;
        let vs: Vec<usize> = (0..n).map(relabel).collect();
        let es: Vec<(usize, usize, f64)> = edges.iter().enumerate().map(|(k, &(a, b))| (relabel(a), relabel(b), k as f64)).collect();
        let u = crate::TreeStructure::from_edges(&vs, &es, relabel(n - 1)).unwrap();
        let radii = [1, 2, 4, 8, 16];
        let a = dim_estimate(&t, &radii, None).unwrap();
        let b = dim_estimate(&u, &radii, None).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        prop_assert_eq!(a.slope().map(f64::to_bits), b.slope().map(f64::to_bits));
    }

    #[test]
    fn typical_distance_is_unbiased(n in 2usize..50, seed in any::<u64>()) {
        let t = random_tree(n, seed);
        let draws = typical_distance(&t, 4000, &mut Seed::new(seed).child(1).rng()).unwrap();
        let mean = draws.iter().sum::<usize>() as f64 / draws.len() as f64;
        let exact = mean_pair_distance(&t);
        let var = draws.iter().map(|&d| (d as f64 - exact).powi(2)).sum::<f64>() / draws.len() as f64;
        prop_assert!((mean - exact).abs() <= 5.0 * (var / draws.len() as f64).sqrt() + 1e-12);
    }

    #[test]
    fn permitted_pairs_follow_depth_first_order(pv in prob_vector(), seed in any::<u64>()) {
        let t = sample_ptree(&pv, &mut Seed::new(seed).rng());
        let pre = t.preorder();
        let mut pos = vec![0; t.m()];
        for (k, &v) in pre.iter().enumerate() {
            pos[v] = k;
        }
        let parents = t.parents();
        let is_strict_ancestor = |a: usize, mut v: usize| {
            while let Some(p) = parents[v] {
                if p == a {
                    return true;
                }
                v = p;
            }
            false
        };
        let mut expected = HashSet::new();
        for i in 0..t.m() {
            for j in 0..t.m() {
                if let Some(pj) = parents[j] {
                    if is_strict_ancestor(pj, i) && pos[j] > pos[i] {
                        expected.insert((i, j));
                    }
                }
            }
        }
        let got: HashSet<(usize, usize)> = permitted_pairs(&t).into_iter().collect();
        prop_assert_eq!(&got, &expected);
        let tree_edges: HashSet<(usize, usize)> = t.edges().into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
        for &(i, j) in &got {
            prop_assert!(!tree_edges.contains(&(i, j)));
            prop_assert!(!got.contains(&(j, i)));
        }
    }

    #[test]
    fn f_integral_and_tilt_bounds(pv in prob_vector(), seed in any::<u64>()) {
        let t = sample_ptree(&pv, &mut Seed::new(seed).rng());
        let q = pv.q();
        let pair_sum: f64 = permitted_pairs(&t).iter().map(|&(i, j)| q[i] * q[j]).sum();
        let integral = f_integral(&t, q);
        prop_assert!((pair_sum - integral).abs() < 1e-10);
        let log_l = log_tilt_weight(&t, &pv);
        prop_assert!(log_l >= -1e-12);
        prop_assert!(log_l <= pv.a() * pv.q_max() + pv.a() * integral + 1e-12);
    }

    #[test]
    fn ordered_tree_parent_roundtrip(pv in prob_vector(), seed in any::<u64>()) {
        let t = sample_ptree(&pv, &mut Seed::new(seed).rng());
        let back = OrderedTree::from_parents(&t.parents()).unwrap();
        prop_assert_eq!(back.unordered(), t.unordered());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn giant_msts_nest_and_restrict(seed in any::<u64>()) {
        let s = WeightSequence::power_law(2000, 3.0, 3.5).unwrap();
        let ens = sample_ensemble(&s, Kernel::ProductMinusEll, Seed::new(seed), &Default::default()).unwrap();
        let lambdas = [-2.0, 0.0, 2.0, 5.0];
        let gm = mst_of_giant(&ens, &s, &lambdas).unwrap();
        let full = gm.tree.edge_set();
        let mut prev: Option<HashSet<(usize, usize)>> = None;
        let mut prev_dh = usize::MAX;
        for k in 0..lambdas.len() {
            let sub = gm.restricted(k).unwrap();
            let es = sub.edge_set();
            prop_assert!(es.is_subset(&full));
            if let Some(p) = &prev {
                prop_assert!(p.is_subset(&es));
            }
            // the percolated giant's own MST agrees with the restriction
            let g = ens.percolate(gm.thresholds[k]).unwrap();
            let member: HashSet<usize> = gm.nested[k].iter().copied().collect();
            let induced = g.induced(&gm.nested[k]);
            let w_all = ens.weighted_adjacency();
            let weights: Vec<f64> = induced
                .edges()
                .iter()
                .map(|&(a, b)| {
                    let (ga, gb) = (gm.nested[k][a], gm.nested[k][b]);
                    w_all[ga].iter().find(|&&(v, _)| v == gb).unwrap().1
                })
                .collect();
            let own: HashSet<(usize, usize)> = kruskal(&induced, &weights)
                .unwrap()
                .iter()
                .flat_map(|t| t.edge_set())
                .map(|(a, b)| {
                    let (x, y) = (gm.nested[k][a], gm.nested[k][b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            prop_assert!(member.contains(&0));
            prop_assert_eq!(&own, &es);
            prop_assert_eq!(&restrict(&gm.tree, &gm.nested[k]).unwrap().edge_set(), &es);
            let dh = hausdorff_nested(&gm.tree, &gm.nested[k]).unwrap();
            prop_assert!(dh <= prev_dh);
            prev_dh = dh;
            prev = Some(es);
        }
    }
}

/// Edge-count laws of the two kernels draw together as n grows.
#[test]
fn kernel_coupling_distance_shrinks() {
    let replicas = 2000u64;
    let tv_at = |n: usize| {
        let s = WeightSequence::power_law(n, 3.0, 3.5).unwrap();
        let p = s.p_lambda(0.0);
        let counts = |kernel: Kernel, tag: &str| -> Vec<usize> {
            (0..replicas)
                .map(|r| {
                    let e = sample_ensemble(&s, kernel, Seed::new(5).named(tag).child(r), &Default::default()).unwrap();
                    e.percolate(p).unwrap().m()
                })
                .collect()
        };
        let full = counts(Kernel::ProductFullL, "full");
        let minus = counts(Kernel::ProductMinusEll, "minus");
        // bins of half a Poisson standard deviation
        let width = 0.5 * (full.iter().sum::<usize>() as f64 / replicas as f64).sqrt();
        let bin = |c: &usize| (*c as f64 / width).floor() as i64;
        tv_distance(&empirical_law(full.iter().map(bin)), &empirical_law(minus.iter().map(bin)))
    };
    let tvs: Vec<f64> = [100, 1000, 10_000].into_iter().map(tv_at).collect();
    eprintln!("kernel coupling tv by n: {tvs:?}");
    assert!(tvs[2] < tvs[0], "{tvs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn small_phi_nondecreasing(n in 10usize..2000, lambda in 0.0f64..8.0, u1 in 0.0f64..50.0, du in 0.0f64..50.0) {
        let s = WeightSequence::power_law(n, 3.0, 3.5).unwrap();
        let d = Drift::new(&s, lambda).unwrap();
        let (a, b) = (d.small_phi(u1), d.small_phi(u1 + du));
        prop_assert!(b >= a * (1.0 - 1e-12), "{a} > {b}");
    }

    #[test]
    fn walk_paths_have_unit_drift_and_vertex_jumps(n in 2usize..300, lambda in 0.0f64..5.0, seed in any::<u64>(), from_vertex1 in any::<bool>()) {
        let s = WeightSequence::power_law(n, 3.0, 3.5).unwrap();
        let x = s.rescaled(lambda).x;
        let start = if from_vertex1 { WalkStart::Vertex1 } else { WalkStart::Minus };
        let w = sample_walk(&s, lambda, start, &mut Seed::new(seed).rng()).unwrap();
        prop_assert_eq!(w.offset(), if from_vertex1 { x[0] } else { 0.0 });
        for (k, (&v, &size)) in w.jump_vertices().iter().zip(w.jump_sizes()).enumerate() {
            prop_assert_eq!(size, x[v]);
            let t = w.jump_times()[k];
            prop_assert!((w.value(t) - w.left_limit(t) - size).abs() <= 1e-9 * (1.0 + size));
        }
        let mut knots = vec![0.0];
        knots.extend_from_slice(w.jump_times());
        for pair in knots.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b > a {
                let mid = 0.5 * (a + b);
                prop_assert!((w.value(mid) - (w.value(a) - (mid - a))).abs() <= 1e-9 * (1.0 + w.value(a).abs()));
            }
        }
    }
}

/// `u phi(u) / u^(tau-2)` stays within a bounded band over the working
/// interval of `u`, with `A1 = A2 = c` for the pure power law.
#[test]
fn phi_power_law_band() {
    let (n, c, tau) = (100_000, 3.0, 3.5);
    let s = WeightSequence::power_law(n, c, tau).unwrap();
    assert!(s.check_assumptions(c, c).unwrap().sandwich_holds);
    let k = s.constants();
    let sig = s.stats().sigma2.sqrt();
    let (lo, hi) = (2.0 * sig / c, (n as f64).powf(k.alpha) * sig / (c * 2f64.powf(k.alpha + 1.0)));
    assert!(lo < hi);
    for lambda in [0.0, (n as f64).powf(k.eta) / 10.0] {
        let d = Drift::new(&s, lambda).unwrap();
        let r: Vec<f64> = (0..=20)
            .map(|i| lo * (hi / lo).powf(i as f64 / 20.0))
            .map(|u| u * d.small_phi(u) / u.powf(tau - 2.0))
            .collect();
        let (mn, mx) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        eprintln!("lambda {lambda}: u phi(u) / u^(tau-2) in [{mn:.4}, {mx:.4}] over u in [{lo:.4}, {hi:.4}]");
        assert!(mn > 0.0 && mx / mn < 10.0);
    }
}

/// Rescaled height tail `P(height >= g n^eta) n^alpha g^(1/(tau-3))` across
/// `g in {1/4, 1/2, 1}`.
#[test]
fn height_tail_rescaled_bounded() {
    let (n, tau) = (100_000usize, 3.5);
    let s = WeightSequence::power_law(n, 3.0, tau).unwrap();
    let off = SizeBiasedOffspring::new(&s).unwrap();
    let k = s.constants();
    let neta = (n as f64).powf(k.eta);
    let cap = neta.ceil() as usize;
    let trials = 100_000;
    let outcomes = par_draws(Seed::new(12).named("height"), trials, |rng| {
        bp_height_sample(&off, cap, DEFAULT_POPULATION_BUDGET, rng)
    });
    let scaled: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&g: &f64| {
            let h = (g * neta).ceil() as usize;
            let hits = outcomes.iter().filter(|o| o.at_least(h, cap) == Some(true)).count();
            hits as f64 / trials as f64 * (n as f64).powf(k.alpha) * g.powf(1.0 / (tau - 3.0))
        })
        .collect();
    eprintln!("rescaled height tail over g = 1/4, 1/2, 1: {scaled:?}");
    assert!(scaled.iter().all(|v| v.is_finite()));
    let (mn, mx) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(mx <= 10.0 * mn.max(1e-300), "{scaled:?}");
}

/// Chi-square goodness of fit of the alias sampler over 50 equal-mass bins.
#[test]
fn alias_sampler_matches_offspring_law() {
    let s = WeightSequence::power_law(5000, 3.0, 3.5).unwrap();
    let off = SizeBiasedOffspring::new(&s).unwrap();
    let probs = off.probabilities();
    let mut bin_of = vec![0usize; probs.len()];
    let mut mass = vec![0.0; 50];
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        let b = ((acc * 50.0) as usize).min(49);
        bin_of[i] = b;
        mass[b] += p;
        acc += p;
    }
    let draws = 1_000_000;
    let mut counts = vec![0usize; 50];
    for i in par_draws(Seed::new(13).named("alias"), draws, |rng| off.sample_index(rng)) {
        counts[bin_of[i]] += 1;
    }
    let used: Vec<usize> = (0..50).filter(|&b| mass[b] > 0.0).collect();
    let stat: f64 = used
        .iter()
        .map(|&b| {
            let e = mass[b] * draws as f64;
            (counts[b] as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new((used.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat} on {} bins, p = {p}", used.len());
}

/// Children of each type are independent Poissons with the per-type rates.
#[test]
fn mtbp_children_superpose() {
    let s = WeightSequence::power_law(400, 3.0, 3.5).unwrap();
    let space = [1usize, 2, 50];
    let law = MtbpLaw::new(&s, 2.0, 0.5, &space).unwrap();
    let total = law.mean_children(1);
    let ws: f64 = space.iter().map(|&j| s.weight(j)).sum();
    let rates: Vec<f64> = space.iter().map(|&k| total * s.weight(k) / ws).collect();
    let draws = 200_000;
    let sampled = empirical_law(par_draws(Seed::new(14).named("mtbp"), draws, |rng| {
        let t = law.sample(1, 1, rng).unwrap();
        let mut c = [0usize; 3];
        for (v, p) in t.parent.iter().enumerate() {
            if *p == Some(0) {
                c[space.iter().position(|&k| k == t.types[v]).unwrap()] += 1;
            }
        }
        c
    }));
    let pois: Vec<Poisson> = rates.iter().map(|&r| Poisson::new(r).unwrap()).collect();
    let mut exact = std::collections::HashMap::new();
    for a in 0..40u64 {
        for b in 0..40u64 {
            for c in 0..40u64 {
                let p = pois[0].pmf(a) * pois[1].pmf(b) * pois[2].pmf(c);
                if p > 1e-15 {
                    exact.insert([a as usize, b as usize, c as usize], p);
                }
            }
        }
    }
    let tv = tv_distance(&sampled, &exact);
    assert!(tv < 0.02, "tv {tv} with rates {rates:?}");
}
