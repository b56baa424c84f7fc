//! End-to-end acceptance checks. Each test writes one `[PASS]`/`[FAIL]` line
//! to stderr, bypassing libtest's output capture, then asserts.

use std::io::Write;
use std::sync::OnceLock;

use critmst::branching::{poi_vn_tail_estimate, SizeBiasedOffspring};
use critmst::coalescent::mc_graph_equivalence;
use critmst::experiments::{
    cbd_reference_graph, covering_and_diameter_check, hausdorff_and_large_diameter_check, minimax_uniqueness_check,
    run_critical_window, run_dimension, run_scaling, run_validate, two_stage_tv, Experiment, ExperimentConfig,
    WindowSummary,
};
use critmst::exploration::{hitting_mass_check, root_s, Drift};
use critmst::metrics::dim_estimate;
use critmst::mst::cbd_law_distance;
use critmst::numeric::{empirical_law, loglog_fit, tv_distance};
use critmst::oracle::sample_connected_rejection;
use critmst::rng::par_draws;
use critmst::tilted::{sample_connected, ProbabilityVector};
use critmst::{Seed, TreeStructure, WeightSequence};

fn report(name: &str, passed: bool, detail: &str) {
    let line = format!("[{}] {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn verdict(name: &str, passed: bool, detail: String) {
    report(name, passed, &detail);
    assert!(passed, "{name}: {detail}");
}

#[test]
fn exponent_recovery() {
    let mut parts = Vec::new();
    let mut ok = true;
    for tau in [3.5, 3.9] {
        let mut cfg = ExperimentConfig::defaults(Experiment::Scaling);
        cfg.tau = tau;
        let r = run_scaling(&cfg).expect("scaling run");
        let slope = r.slope().unwrap_or(f64::NAN);
        let good = (slope - r.eta).abs() <= 0.08;
        ok &= good;
        parts.push(format!("tau {tau}: slope {slope:.4} vs eta {:.4}", r.eta));
    }
    verdict("exponent recovery (+-0.08)", ok, parts.join("; "));
}

#[test]
fn minimax_uniqueness() {
    let (fails, first) = minimax_uniqueness_check(1000, Seed::new(1).named("minimax")).unwrap();
    verdict(
        "minimax and uniqueness on 1000 graphs",
        fails == 0,
        format!("failures {fails}, first failing seed {first:?}"),
    );
}

#[test]
fn cycle_breaking_law() {
    let r = cbd_law_distance(&cbd_reference_graph(), 100_000, &mut Seed::new(1).named("cbd").rng()).unwrap();
    verdict(
        "cycle breaking equals MST law",
        r.exact_tv < 1e-9 && r.sampled_tv < 0.02,
        format!("exact tv {:e} (< 1e-9), sampled tv {:.4} (< 0.02) at {} draws", r.exact_tv, r.sampled_tv, r.trials),
    );
}

#[test]
fn coalescent_equivalence() {
    let r = mc_graph_equivalence(&[1.0, 0.5, 0.25], 0.7, 1_000_000, Seed::new(1).named("coalescent")).unwrap();
    verdict(
        "multiplicative coalescent vs graph law",
        r.tv_exact < 0.01,
        format!("tv {:.5} (< 0.01) at {} trials", r.tv_exact, r.trials),
    );
}

#[test]
fn offspring_calibration() {
    let seq = WeightSequence::power_law(100_000, 3.0, 3.5).unwrap();
    let off = SizeBiasedOffspring::new(&seq).unwrap();
    let mean_err = (off.mean() - 1.0).abs();
    let top = (off.v2() / 2.0).floor() as usize;
    let grid: Vec<f64> = (1..=top).map(|u| u as f64).collect();
    let est = poi_vn_tail_estimate(&off, &grid, 1_000_000, Seed::new(1).named("offspring")).unwrap();
    let slope = est.fit.map_or(f64::NAN, |f| f.slope);
    let target = -(seq.tau() - 2.0);
    verdict(
        "offspring mean and Poisson tail slope",
        mean_err < 1e-12 && (slope - target).abs() <= 0.15,
        format!(
            "|E[V] - 1| = {mean_err:e} (< 1e-12); tail slope {slope:.4} vs {target} (+-0.15) on u = 1..={top}"
        ),
    );
}

#[test]
fn hitting_time_identity() {
    let seq = WeightSequence::power_law(100, 1.0, 3.5).unwrap();
    let err = hitting_mass_check(&seq, 1.0, 1000, Seed::new(1).named("hitting")).unwrap();
    verdict(
        "hitting time equals component mass",
        err < 1e-9,
        format!("max |hitting time - mass| = {err:e} over 1000 runs (< 1e-9)"),
    );
}

#[test]
fn root_scaling() {
    let seq = WeightSequence::power_law(1_000_000, 3.0, 3.5).unwrap();
    let lambdas = [8.0, 16.0, 32.0, 64.0];
    let mut roots = Vec::new();
    let mut worst_rel: f64 = 0.0;
    for &l in &lambdas {
        let s = root_s(&seq, l).unwrap();
        let d = Drift::new(&seq, l).unwrap();
        let phi = d.big_phi(s);
        // magnitude of the two competing terms of Phi at s
        let scale = l * s + (l * s - phi).abs();
        worst_rel = worst_rel.max(phi.abs() / scale);
        roots.push(s);
    }
    let slope = loglog_fit(&lambdas, &roots).map_or(f64::NAN, |f| f.slope);
    let shown: Vec<String> = roots.iter().map(|s| format!("{s:.2}")).collect();
    verdict(
        "drift root scaling",
        (slope - 2.0).abs() <= 0.1 && worst_rel < 1e-10,
        format!(
            "s = [{}], slope {slope:.4} vs 2 (+-0.1), max relative |Phi(s)| = {worst_rel:e} (< 1e-10); saturation lambda {:.1}",
            shown.join(", "),
            seq.saturation_lambda()
        ),
    );
}

#[test]
fn tilted_sampler() {
    let seed = Seed::new(1).named("tilted");
    let pv = ProbabilityVector::uniform(3, 1.5).unwrap();
    let draws = 100_000;
    let tilted = empirical_law(par_draws(seed.child(0), draws, |rng| sample_connected(&pv, rng).sorted_edges()));
    let rejected = empirical_law(par_draws(seed.child(1), draws, |rng| sample_connected_rejection(&pv, rng)));
    let tv_conn = tv_distance(&tilted, &rejected);
    let tv_two = two_stage_tv(&[1.0, 0.8, 0.6, 0.4], 0.5, draws, seed.child(2)).unwrap();
    verdict(
        "tilted component and two-stage samplers",
        tv_conn < 0.03 && tv_two < 0.03,
        format!("tv(tilted, rejection) {tv_conn:.4} (< 0.03), tv(two-stage, exact) {tv_two:.4} (< 0.03)"),
    );
}

fn window_summary() -> &'static [WindowSummary] {
    static CELL: OnceLock<Vec<WindowSummary>> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = ExperimentConfig::defaults(Experiment::CriticalWindow);
        assert_eq!(cfg.n, vec![100_000]);
        assert_eq!(cfg.lambda, vec![5.0, 10.0, 20.0, 40.0]);
        assert_eq!(cfg.replicas, 10);
        run_critical_window(&cfg).expect("critical window run").summary()
    })
}

#[test]
fn critical_window_monotone() {
    let s = window_summary();
    let med: Vec<f64> = s.iter().map(|w| w.median_d_h_scaled).collect();
    let ok = med.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = s.iter().map(|w| format!("{}: {:.4}", w.lambda, w.median_d_h_scaled)).collect();
    verdict("nested Hausdorff medians nonincreasing in lambda", ok, shown.join(", "));
}

#[test]
fn surplus_diagnostics() {
    let s: Vec<&WindowSummary> = window_summary().iter().filter(|w| [10.0, 20.0, 40.0].contains(&w.lambda)).collect();
    assert_eq!(s.len(), 3);
    let r: Vec<f64> = s.iter().map(|w| w.median_surplus_scaled).collect();
    let bounded = (0..r.len()).all(|j| (j + 1..r.len()).all(|k| r[k] <= 3.0 * r[j]));
    let freq: Vec<f64> = s.iter().map(|w| w.freq_h_surplus_ge2).collect();
    let monotone = freq.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        "surplus bounded and outside surplus frequency nonincreasing",
        bounded && monotone,
        format!("median scaled surplus {r:?} (no later value above 3x an earlier one), P(max surplus >= 2) {freq:?}"),
    );
}

#[test]
fn estimator_correctness() {
    let c = covering_and_diameter_check(300, Seed::new(1).named("covering")).unwrap();
    let h = hausdorff_and_large_diameter_check(100, Seed::new(1).named("hausdorff")).unwrap();
    verdict(
        "covering, diameter and Hausdorff estimators vs brute force",
        c.mismatches == 0 && h.mismatches == 0,
        format!(
            "covering/diameter: {} trees, {} mismatches; hausdorff/diameter: {} instances, {} mismatches",
            c.instances, c.mismatches, h.instances, h.mismatches
        ),
    );
}

#[test]
fn dimension_pipeline() {
    let n = 200_001;
    let edges: Vec<(usize, usize, f64)> = (1..n).map(|k| (k - 1, k, k as f64)).collect();
    let path = TreeStructure::from_edges(&(0..n).collect::<Vec<_>>(), &edges, 0).unwrap();
    let radii: Vec<usize> = (0..12).map(|k| 16usize << k).collect();
    let slope = dim_estimate(&path, &radii, None).unwrap().slope().unwrap_or(f64::NAN);

    let cfg = ExperimentConfig::defaults(Experiment::Dimension);
    let d = run_dimension(&cfg).unwrap();
    let diag: Vec<String> = d
        .replicas
        .iter()
        .map(|(n, _, size, rep)| format!("n {n}, mst size {size}, slope {:?}", rep.slope()))
        .collect();
    verdict(
        "covering dimension pipeline",
        (slope - 1.0).abs() <= 0.05,
        format!(
            "path slope {slope:.4} vs 1 (+-0.05); diagnostic only: {} vs limit {:.1}",
            diag.join("; "),
            d.target
        ),
    );
}

#[test]
fn validation_suite() {
    let cfg = ExperimentConfig::defaults(Experiment::Validate);
    let rep = run_validate(&cfg).unwrap();
    let failed: Vec<&str> = rep.failures().iter().map(|c| c.name.as_str()).collect();
    verdict(
        "validation suite",
        rep.passed(),
        format!("{} checks, failing: {failed:?}", rep.checks.len()),
    );
}
