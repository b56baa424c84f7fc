//! Experiment configuration, runners and CSV emission.
//!
//! Every runner is deterministic in `(config, seed)`: replica `r` draws from
//! `Seed::new(seed).child(r)` and rows are emitted in replica order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::coalescent::mc_graph_equivalence;
use crate::error::{Error, Result};
use crate::exploration::{hitting_mass_check, root_s};
use crate::graphgen::{
    components, expected_ensemble_edges, giant, sample_ensemble, sample_outside_graph, sample_poisson_graph,
    GenerationLimits, Kernel, PercolationEnsemble, SparseGraph,
};
use crate::metrics::{
    dim_estimate, graph_stats, hausdorff_nested, mean_pair_distance, covering_number, tree_diameter,
    typical_distance, Provenance,
};
use crate::mst::{cbd_law_distance, kruskal, mst_of_giant, verify_minimax, TreeStructure};
use crate::numeric::{empirical_law, fmt_sig17, loglog_fit, mean, median, tv_distance, LinearFit};
use crate::oracle::{
    all_labeled_trees, connected_law_exact, connected_law_from_tilted, covering_brute, diameter_brute,
    graph_law_exact, hausdorff_brute, random_labeled_tree, sample_connected_rejection, spanning_trees,
    tree_from_edges, uniform_minima, UniformMinimaCase,
};
use crate::rng::{open_unit, par_draws, Seed};
use crate::tilted::{
    enumerate_ordered_trees, enumerate_rooted_trees, ordered_probability, ptree_probability, sample_connected,
    sample_ordered_ptree, sample_ptree, two_stage_sample, ProbabilityVector,
};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Generate,
    Mst,
    Scaling,
    CriticalWindow,
    Validate,
    Dimension,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Generate,
        Experiment::Mst,
        Experiment::Scaling,
        Experiment::CriticalWindow,
        Experiment::Validate,
        Experiment::Dimension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Generate => "generate",
            Experiment::Mst => "mst",
            Experiment::Scaling => "scaling",
            Experiment::CriticalWindow => "critical-window",
            Experiment::Validate => "validate",
            Experiment::Dimension => "dimension",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: Vec<usize>,
    pub tau: f64,
    pub c: f64,
    /// Read the weight sequence from a one-column file instead of `c (n/i)^alpha`.
    pub weights_file: Option<PathBuf>,
    pub kernel: Kernel,
    pub lambda: Vec<f64>,
    /// The exponent slack `Delta` in the critical-window lower envelope.
    pub delta: f64,
    /// Percolation slack `delta_1` of the outside graph `H_n(lambda, delta_1)`.
    pub delta1: f64,
    pub replicas: usize,
    pub pairs: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Edge-list input for the `mst` experiment.
    pub input: Option<PathBuf>,
    pub scales: Vec<usize>,
    pub max_expected_edges: f64,
    pub svg: bool,
}

pub const CONFIG_KEYS: [&str; 17] = [
    "experiment",
    "n",
    "tau",
    "c",
    "weights_file",
    "kernel",
    "lambda",
    "delta",
    "delta1",
    "replicas",
    "pairs",
    "seed",
    "out",
    "input",
    "scales",
    "max_expected_edges",
    "svg",
];

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{v}` for key `{key}`")))
}

fn parse_count(key: &str, v: &str) -> Result<usize> {
    // accept 1e5-style counts
    let x: f64 = parse_one(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > 1e15 {
        return Err(Error::Config(format!("`{key}` must be a nonnegative integer, got `{v}`")));
    }
    Ok(x as usize)
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (n, replicas, lambda) = match experiment {
            Experiment::Scaling => ((12..=17).map(|k| 1usize << k).collect(), 20, Vec::new()),
            Experiment::CriticalWindow => (vec![100_000], 10, vec![5.0, 10.0, 20.0, 40.0]),
            Experiment::Dimension => (vec![100_000], 1, Vec::new()),
            _ => (vec![10_000], 1, Vec::new()),
        };
        ExperimentConfig {
            experiment,
            n,
            tau: 3.5,
            c: 3.0,
            weights_file: None,
            kernel: Kernel::ProductMinusEll,
            lambda,
            delta: 0.25,
            delta1: 0.5,
            replicas,
            pairs: 64,
            seed: 1,
            out: None,
            input: None,
            scales: (0..13).map(|k| 1usize << k).collect(),
            max_expected_edges: GenerationLimits::default().max_expected_edges,
            svg: false,
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "experiment" => {
                let e: Experiment = v.parse()?;
                if e != self.experiment {
                    return Err(Error::Config(format!(
                        "config names experiment `{e}` but `{}` was requested",
                        self.experiment
                    )));
                }
            }
            "n" => self.n = v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_count("n", s)).collect::<Result<_>>()?,
            "tau" => self.tau = parse_one("tau", v)?,
            "c" => self.c = parse_one("c", v)?,
            "weights_file" => self.weights_file = Some(PathBuf::from(v)),
            "kernel" => self.kernel = v.parse().map_err(|_| Error::Config(format!("unknown kernel `{v}`")))?,
            "lambda" => self.lambda = parse_list("lambda", v)?,
            "delta" => self.delta = parse_one("delta", v)?,
            "delta1" => self.delta1 = parse_one("delta1", v)?,
            "replicas" => self.replicas = parse_count("replicas", v)?,
            "pairs" => self.pairs = parse_count("pairs", v)?,
            "seed" => self.seed = parse_one("seed", v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "input" => self.input = Some(PathBuf::from(v)),
            "scales" => {
                self.scales = v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_count("scales", s)).collect::<Result<_>>()?
            }
            "max_expected_edges" => self.max_expected_edges = parse_one("max_expected_edges", v)?,
            "svg" => {
                self.svg = match v {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::Config(format!("`svg` must be true or false, got `{v}`"))),
                }
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: k + 1,
                reason: "expected `key = value`".into(),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: k + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(experiment: Experiment, path: &Path) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        cfg.apply_text(&fs::read_to_string(path)?, path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau > 3.0 && self.tau < 4.0) {
            return bad(format!("tau must lie in (3, 4), got {}", self.tau));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad(format!("delta must lie in (0, 1/2], got {}", self.delta));
        }
        if !(self.delta1 > 0.0 && self.delta1.is_finite()) {
            return bad(format!("delta1 must be positive, got {}", self.delta1));
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("lambda values must be finite and nonnegative".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.max_expected_edges > 0.0) {
            return bad("max_expected_edges must be positive".into());
        }
        if self.experiment != Experiment::Validate {
            if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
                return bad("n must list sizes of at least 2".into());
            }
            if self.replicas == 0 {
                return bad("replicas must be at least 1".into());
            }
        }
        match self.experiment {
            Experiment::Scaling => {
                let mut ns = self.n.clone();
                ns.sort_unstable();
                ns.dedup();
                let span = (*ns.last().unwrap() as f64 / ns[0] as f64).log10();
                if ns.len() < 4 || span < 1.2 {
                    return bad("scaling needs at least 4 distinct n spanning at least 1.2 decades".into());
                }
                if self.pairs == 0 {
                    return bad("pairs must be at least 1".into());
                }
                if self.weights_file.is_some() {
                    return bad("scaling builds one sequence per n and cannot use weights_file".into());
                }
            }
            Experiment::CriticalWindow => {
                if self.lambda.is_empty() || self.lambda.windows(2).any(|w| w[0] > w[1]) {
                    return bad("critical-window needs a nonempty ascending lambda list".into());
                }
                if self.lambda.contains(&0.0) {
                    return bad("critical-window lambdas must be positive".into());
                }
            }
            Experiment::Dimension => {
                let mut s: Vec<usize> = self.scales.iter().copied().filter(|&r| r > 0).collect();
                s.sort_unstable();
                s.dedup();
                if s.len() < 4 || (*s.last().unwrap() as f64 / s[0] as f64) < 10.0 {
                    return bad("dimension needs at least 4 positive radii spanning a decade".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn limits(&self) -> GenerationLimits {
        GenerationLimits {
            max_expected_edges: self.max_expected_edges,
        }
    }

    pub fn sequence(&self, n: usize) -> Result<WeightSequence> {
        match &self.weights_file {
            Some(p) => WeightSequence::read_text(p, self.tau),
            None => WeightSequence::power_law(n, self.c, self.tau),
        }
    }

    pub fn replica_seed(&self, r: usize) -> Seed {
        Seed::new(self.seed).child(r as u64)
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

fn f(x: f64) -> String {
    fmt_sig17(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_else(|| "NaN".into())
}

/// Data rows, a summary table and an optional plot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub data: Table,
    pub summary: Table,
    pub svg: Option<String>,
}

pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.csv");
    PathBuf::from(s)
}

pub fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}

/// Writes `<out>`, `<out>.summary.csv` and, if present, the plot.
pub fn write_output(out: &Path, o: &ExperimentOutput) -> Result<()> {
    fs::write(out, o.data.to_csv())?;
    fs::write(summary_path(out), o.summary.to_csv())?;
    if let Some(svg) = &o.svg {
        fs::write(svg_path(out), svg)?;
    }
    Ok(())
}

/// Log-log scatter plot with an optional fitted line.
pub fn svg_loglog(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], fit: Option<&LinearFit>) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">ln {xlabel}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 {})\">ln {ylabel}</text>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        w / 2.0,
        h - 16.0,
        h / 2.0,
        h / 2.0,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for &(x, y) in &pts {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    if let Some(fit) = fit {
        let (a, b) = (fit.intercept + fit.slope * x0, fit.intercept + fit.slope * x1);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\">slope {:.4}</text>\n",
            sx(x0),
            sy(a),
            sx(x1),
            sy(b),
            m + 8.0,
            m + 16.0,
            fit.slope
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn first_error<T>(results: Vec<Result<T>>) -> (Vec<T>, Option<Error>) {
    let mut ok = Vec::with_capacity(results.len());
    let mut err = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                err.get_or_insert(e);
            }
        }
    }
    (ok, err)
}

/// Emits `partial` to `cfg.out` before surfacing a replica failure.
fn finish<T>(cfg: &ExperimentConfig, value: T, err: Option<Error>, output: impl Fn(&T) -> ExperimentOutput) -> Result<T> {
    if let Some(out) = &cfg.out {
        write_output(out, &output(&value))?;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

fn giant_tree(seq: &WeightSequence, cfg: &ExperimentConfig, seed: Seed, lambdas: &[f64]) -> Result<(PercolationEnsemble, crate::mst::GiantMst)> {
    let ens = sample_ensemble(seq, cfg.kernel, seed, &cfg.limits())?;
    let gm = mst_of_giant(&ens, seq, lambdas)?;
    Ok((ens, gm))
}

// ---------------------------------------------------------------- scaling

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub replica: usize,
    pub giant_size: usize,
    pub mean_distance: f64,
    pub diameter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub seed: u64,
    pub tau: f64,
    pub eta: f64,
    pub rows: Vec<ScalingRow>,
    /// Mean over replicas of the per-replica mean distance, per `n`.
    pub per_n: Vec<(usize, f64)>,
    pub fit: Option<LinearFit>,
}

impl ScalingResult {
    fn build(seed: u64, tau: f64, eta: f64, rows: Vec<ScalingRow>) -> Self {
        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &rows {
            groups.entry(r.n).or_default().push(r.mean_distance);
        }
        let per_n: Vec<(usize, f64)> = groups.into_iter().map(|(n, v)| (n, mean(&v))).collect();
        let xs: Vec<f64> = per_n.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = per_n.iter().map(|p| p.1).collect();
        ScalingResult {
            seed,
            tau,
            eta,
            fit: loglog_fit(&xs, &ys),
            per_n,
            rows,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn output(&self) -> ExperimentOutput {
        let mut data = Table::new(&["seed", "tau", "n", "replica", "giant_size", "mean_distance", "diameter"]);
        for r in &self.rows {
            data.push(vec![
                self.seed.to_string(),
                f(self.tau),
                r.n.to_string(),
                r.replica.to_string(),
                r.giant_size.to_string(),
                f(r.mean_distance),
                r.diameter.to_string(),
            ]);
        }
        let mut summary = Table::new(&["seed", "tau", "eta", "points", "slope", "slope_se", "ci_low", "ci_high", "r2"]);
        let fit = self.fit;
        summary.push(vec![
            self.seed.to_string(),
            f(self.tau),
            f(self.eta),
            self.per_n.len().to_string(),
            opt(fit.map(|x| x.slope)),
            opt(fit.map(|x| x.slope_se)),
            opt(fit.map(|x| x.slope - 1.96 * x.slope_se)),
            opt(fit.map(|x| x.slope + 1.96 * x.slope_se)),
            opt(fit.map(|x| x.r2)),
        ]);
        let points: Vec<(f64, f64)> = self.per_n.iter().map(|&(n, d)| (n as f64, d)).collect();
        ExperimentOutput {
            data,
            summary,
            svg: Some(svg_loglog("typical MST distance", "n", "mean distance", &points, fit.as_ref())),
        }
    }
}

fn scaling_replica(cfg: &ExperimentConfig, n: usize, r: usize) -> Result<ScalingRow> {
    let seq = cfg.sequence(n)?;
    let seed = cfg.replica_seed(r).named("n").child(n as u64);
    let (_, gm) = giant_tree(&seq, cfg, seed, &[])?;
    let mut rng = seed.named("pairs").rng();
    let (mean_distance, diameter) = if gm.tree.len() >= 2 {
        let d = typical_distance(&gm.tree, cfg.pairs, &mut rng)?;
        (d.iter().sum::<usize>() as f64 / d.len() as f64, tree_diameter(&gm.tree))
    } else {
        (0.0, 0)
    };
    Ok(ScalingRow {
        n,
        replica: r,
        giant_size: gm.tree.len(),
        mean_distance,
        diameter,
    })
}

/// Typical distance and diameter of the giant's MST across `n`, with a
/// log-log regression of the mean distance on `n`.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ScalingResult> {
    cfg.validate()?;
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let tasks: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r))).collect();
    let results: Vec<Result<ScalingRow>> = tasks.par_iter().map(|&(n, r)| scaling_replica(cfg, n, r)).collect();
    let (rows, err) = first_error(results);
    let eta = crate::weights::ScalingConstants::from_tau(cfg.tau).eta;
    let res = ScalingResult::build(cfg.seed, cfg.tau, eta, rows);
    finish(cfg, res, err, |r| {
        let mut o = r.output();
        if !cfg.svg {
            o.svg = None;
        }
        o
    })
}

// ------------------------------------------------------- critical window

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    pub n: usize,
    pub replica: usize,
    pub lambda: f64,
    pub p_lambda: f64,
    pub mst_size: usize,
    pub giant_size: usize,
    /// `d_H(M_lambda, M)` in hops.
    pub d_h: usize,
    pub d_h_scaled: f64,
    pub giant_mass: f64,
    pub s_n: f64,
    pub mass_normalized: f64,
    pub poisson_giant_size: usize,
    pub surplus_c1: usize,
    pub surplus_scaled: f64,
    pub h_max_surplus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary {
    pub n: usize,
    pub lambda: f64,
    pub median_d_h_scaled: f64,
    pub median_mass_normalized: f64,
    pub median_surplus_scaled: f64,
    pub freq_h_surplus_ge2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub seed: u64,
    pub tau: f64,
    pub delta1: f64,
    pub rows: Vec<WindowRow>,
}

impl WindowResult {
    pub fn summary(&self) -> Vec<WindowSummary> {
        let mut groups: BTreeMap<(usize, u64), Vec<&WindowRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.n, r.lambda.to_bits())).or_default().push(r);
        }
        let mut out: Vec<WindowSummary> = groups
            .into_iter()
            .map(|((n, l), rs)| {
                let col = |g: fn(&WindowRow) -> f64| median(&rs.iter().map(|r| g(r)).collect::<Vec<_>>());
                WindowSummary {
                    n,
                    lambda: f64::from_bits(l),
                    median_d_h_scaled: col(|r| r.d_h_scaled),
                    median_mass_normalized: col(|r| r.mass_normalized),
                    median_surplus_scaled: col(|r| r.surplus_scaled),
                    freq_h_surplus_ge2: rs.iter().filter(|r| r.h_max_surplus >= 2).count() as f64 / rs.len() as f64,
                }
            })
            .collect();
        out.sort_by(|a, b| a.n.cmp(&b.n).then(a.lambda.total_cmp(&b.lambda)));
        out
    }

    pub fn output(&self) -> ExperimentOutput {
        let mut data = Table::new(&[
            "seed",
            "tau",
            "n",
            "replica",
            "lambda",
            "p_lambda",
            "mst_size",
            "giant_size",
            "d_h",
            "d_h_scaled",
            "giant_mass",
            "s_n",
            "mass_normalized",
            "poisson_giant_size",
            "surplus_c1",
            "surplus_scaled",
            "h_max_surplus",
        ]);
        for r in &self.rows {
            data.push(vec![
                self.seed.to_string(),
                f(self.tau),
                r.n.to_string(),
                r.replica.to_string(),
                f(r.lambda),
                f(r.p_lambda),
                r.mst_size.to_string(),
                r.giant_size.to_string(),
                r.d_h.to_string(),
                f(r.d_h_scaled),
                f(r.giant_mass),
                f(r.s_n),
                f(r.mass_normalized),
                r.poisson_giant_size.to_string(),
                r.surplus_c1.to_string(),
                f(r.surplus_scaled),
                r.h_max_surplus.to_string(),
            ]);
        }
        let mut summary = Table::new(&[
            "seed",
            "tau",
            "n",
            "lambda",
            "delta1",
            "median_d_h_scaled",
            "median_mass_normalized",
            "median_surplus_scaled",
            "freq_h_surplus_ge2",
        ]);
        for s in self.summary() {
            summary.push(vec![
                self.seed.to_string(),
                f(self.tau),
                s.n.to_string(),
                f(s.lambda),
                f(self.delta1),
                f(s.median_d_h_scaled),
                f(s.median_mass_normalized),
                f(s.median_surplus_scaled),
                f(s.freq_h_surplus_ge2),
            ]);
        }
        ExperimentOutput { data, summary, svg: None }
    }
}

fn window_replica(cfg: &ExperimentConfig, seq: &WeightSequence, s_n: &[f64], r: usize) -> Result<Vec<WindowRow>> {
    let n = seq.n();
    let k = seq.constants();
    let stats = seq.stats();
    let seed = cfg.replica_seed(r).named("n").child(n as u64);
    let (_, gm) = giant_tree(seq, cfg, seed, &cfg.lambda)?;
    let w = seq.weights();
    let n_eta = (n as f64).powf(k.eta);
    let unit = stats.sigma2.sqrt() * (n as f64).powf(k.rho);
    let mut rows = Vec::with_capacity(cfg.lambda.len());
    for (j, &lambda) in cfg.lambda.iter().enumerate() {
        let nested = &gm.nested[j];
        let d_h = hausdorff_nested(&gm.tree, nested)?;
        let giant_mass: f64 = nested.iter().map(|&v| w[v]).sum();
        let p = seq.p_lambda(lambda);
        let pseed = seed.named("poisson").child(j as u64);
        let g = sample_poisson_graph(seq, p, pseed, &cfg.limits())?;
        let part = components(&g, w);
        let c1 = part.component[0];
        let inside_edges = g.edges().iter().filter(|&&(a, _)| part.component[a] == c1).count();
        let surplus_c1 = inside_edges + 1 - part.sizes[c1];
        let c1_vertices = part.members_of(c1);
        let h = sample_outside_graph(seq, lambda, cfg.delta1, &c1_vertices, pseed.named("outside"), &cfg.limits())?;
        let h_stats = graph_stats(&h, w, Provenance::default());
        rows.push(WindowRow {
            n,
            replica: r,
            lambda,
            p_lambda: p,
            mst_size: gm.tree.len(),
            giant_size: nested.len(),
            d_h,
            d_h_scaled: d_h as f64 / n_eta,
            giant_mass,
            s_n: s_n[j],
            mass_normalized: giant_mass / (s_n[j] * unit),
            poisson_giant_size: c1_vertices.len(),
            surplus_c1,
            surplus_scaled: surplus_c1 as f64 / lambda.powf(1.0 / k.eta),
            h_max_surplus: h_stats.max_surplus,
        });
    }
    Ok(rows)
}

/// Nested Hausdorff distances, giant masses and surplus diagnostics across
/// the critical window.
pub fn run_critical_window(cfg: &ExperimentConfig) -> Result<WindowResult> {
    cfg.validate()?;
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut all = Vec::new();
    let mut err = None;
    for &n in &ns {
        let seq = cfg.sequence(n)?;
        let s_n = cfg
            .lambda
            .iter()
            .map(|&l| root_s(&seq, l))
            .collect::<Result<Vec<f64>>>()?;
        let results: Vec<Result<Vec<WindowRow>>> =
            (0..cfg.replicas).into_par_iter().map(|r| window_replica(cfg, &seq, &s_n, r)).collect();
        let (rows, e) = first_error(results);
        all.extend(rows.into_iter().flatten());
        if e.is_some() {
            err = e;
            break;
        }
    }
    let res = WindowResult {
        seed: cfg.seed,
        tau: cfg.tau,
        delta1: cfg.delta1,
        rows: all,
    };
    finish(cfg, res, err, WindowResult::output)
}

// ------------------------------------------------------------ dimension

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionResult {
    pub seed: u64,
    pub tau: f64,
    pub target: f64,
    /// `(n, replica, mst size, report)`.
    pub replicas: Vec<(usize, usize, usize, crate::metrics::CoveringReport)>,
}

impl DimensionResult {
    pub fn output(&self) -> ExperimentOutput {
        let mut data = Table::new(&["seed", "tau", "n", "replica", "radius", "count"]);
        let mut summary = Table::new(&[
            "seed", "tau", "n", "replica", "mst_size", "slope", "r2", "fit_first_radius", "fit_last_radius", "degenerate", "target",
        ]);
        for (n, r, size, rep) in &self.replicas {
            for (rad, cnt) in rep.radii.iter().zip(&rep.counts) {
                data.push(vec![self.seed.to_string(), f(self.tau), n.to_string(), r.to_string(), rad.to_string(), cnt.to_string()]);
            }
            let (lo, hi) = rep.window;
            summary.push(vec![
                self.seed.to_string(),
                f(self.tau),
                n.to_string(),
                r.to_string(),
                size.to_string(),
                opt(rep.slope()),
                opt(rep.fit.map(|x| x.r2)),
                rep.radii.get(lo).map_or("NaN".into(), |x| x.to_string()),
                if hi > lo { rep.radii[hi - 1].to_string() } else { "NaN".into() },
                rep.degenerate.to_string(),
                f(self.target),
            ]);
        }
        let svg = self.replicas.first().map(|(_, _, _, rep)| {
            let pts: Vec<(f64, f64)> = rep.radii.iter().zip(&rep.counts).map(|(&r, &c)| (1.0 / r as f64, c as f64)).collect();
            svg_loglog("covering numbers (diagnostic)", "1/r", "N(r)", &pts, rep.fit.as_ref())
        });
        ExperimentOutput { data, summary, svg }
    }
}

/// Covering numbers of the giant's MST over the radius grid (diagnostic).
pub fn run_dimension(cfg: &ExperimentConfig) -> Result<DimensionResult> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = cfg.n.iter().flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r))).collect();
    let results: Vec<Result<_>> = tasks
        .par_iter()
        .map(|&(n, r)| {
            let seq = cfg.sequence(n)?;
            let (_, gm) = giant_tree(&seq, cfg, cfg.replica_seed(r).named("n").child(n as u64), &[])?;
            let rep = dim_estimate(&gm.tree, &cfg.scales, None)?;
            Ok((seq.n(), r, gm.tree.len(), rep))
        })
        .collect();
    let (replicas, err) = first_error(results);
    let res = DimensionResult {
        seed: cfg.seed,
        tau: cfg.tau,
        target: (cfg.tau - 1.0) / (cfg.tau - 3.0),
        replicas,
    };
    finish(cfg, res, err, |r| {
        let mut o = r.output();
        if !cfg.svg {
            o.svg = None;
        }
        o
    })
}

// ------------------------------------------------------- generate / mst

/// Samples one ensemble with `Seed::new(seed)` and writes its edge list to `out`.
pub fn run_generate(cfg: &ExperimentConfig) -> Result<(PercolationEnsemble, ExperimentOutput)> {
    cfg.validate()?;
    let seq = cfg.sequence(cfg.n[0])?;
    let ens = sample_ensemble(&seq, cfg.kernel, Seed::new(cfg.seed), &cfg.limits())?;
    let g1 = giant(&ens.graph(), seq.weights());
    let mut summary = Table::new(&["seed", "tau", "n", "kernel", "m", "expected_m", "giant_size", "giant_mass", "max_other_mass"]);
    summary.push(vec![
        cfg.seed.to_string(),
        f(cfg.tau),
        ens.n().to_string(),
        ens.kernel().to_string(),
        ens.m().to_string(),
        f(expected_ensemble_edges(&seq, cfg.kernel)),
        g1.size().to_string(),
        f(g1.mass),
        f(g1.max_other_mass),
    ]);
    if let Some(out) = &cfg.out {
        ens.write_edge_list(out)?;
        fs::write(summary_path(out), summary.to_csv())?;
    }
    Ok((ens, ExperimentOutput { data: Table::default(), summary, svg: None }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstResult {
    pub tree: TreeStructure,
    pub output: ExperimentOutput,
}

/// MST of the giant of an ensemble read from `input` (or sampled from
/// `seed`); writes the tree file to `out`.
pub fn run_mst(cfg: &ExperimentConfig) -> Result<MstResult> {
    cfg.validate()?;
    if cfg.lambda.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("lambda list must be ascending".into()));
    }
    let (ens, seq) = match &cfg.input {
        Some(p) => {
            let ens = PercolationEnsemble::read_edge_list(p)?;
            let seq = cfg.sequence(ens.n())?;
            if seq.n() != ens.n() {
                return Err(Error::Config(format!(
                    "edge list has n = {} but the weight sequence has n = {}",
                    ens.n(),
                    seq.n()
                )));
            }
            (ens, seq)
        }
        None => {
            let seq = cfg.sequence(cfg.n[0])?;
            (sample_ensemble(&seq, cfg.kernel, Seed::new(cfg.seed), &cfg.limits())?, seq)
        }
    };
    let gm = mst_of_giant(&ens, &seq, &cfg.lambda)?;
    let t = &gm.tree;
    let stats_of = |tree: &TreeStructure, lambda: Option<f64>| {
        graph_stats(&tree.to_graph(), &vec![1.0; tree.len()], Provenance {
            seed: ens.seed(),
            replica: 0,
            n: ens.n(),
            tau: cfg.tau,
            lambda,
        })
    };
    let stats = stats_of(t, None);
    let mut summary = Table::new(&["seed", "tau", "n", "lambda", "size", "diameter", "mean_pair_distance", "leaf_fraction", "max_degree", "d_h"]);
    let row = |tree: &TreeStructure, lambda: Option<f64>, d_h: usize| {
        let s = stats_of(tree, lambda);
        vec![
            ens.seed().to_string(),
            f(cfg.tau),
            ens.n().to_string(),
            opt(lambda),
            tree.len().to_string(),
            tree_diameter(tree).to_string(),
            f(mean_pair_distance(tree)),
            f(s.leaf_fraction),
            s.max_degree.to_string(),
            d_h.to_string(),
        ]
    };
    summary.push(row(t, None, 0));
    for (k, &l) in cfg.lambda.iter().enumerate() {
        summary.push(row(&gm.restricted(k)?, Some(l), hausdorff_nested(t, &gm.nested[k])?));
    }
    let mut data = Table::new(&["degree", "count"]);
    for (d, c) in stats.degree_histogram.iter().enumerate() {
        data.push(vec![d.to_string(), c.to_string()]);
    }
    if let Some(out) = &cfg.out {
        t.write_file(out)?;
        fs::write(summary_path(out), summary.to_csv())?;
        let mut hist = out.as_os_str().to_owned();
        hist.push(".degrees.csv");
        fs::write(PathBuf::from(hist), data.to_csv())?;
    }
    Ok(MstResult {
        tree: gm.tree.clone(),
        output: ExperimentOutput { data, summary, svg: None },
    })
}

// ------------------------------------------------------------- validate

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Seed of the first failing instance, or the check's base seed.
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn output(&self) -> ExperimentOutput {
        let mut data = Table::new(&["check", "passed", "seed", "detail"]);
        for c in &self.checks {
            data.push(vec![c.name.clone(), c.passed.to_string(), c.seed.to_string(), format!("\"{}\"", c.detail.replace('"', "'"))]);
        }
        let mut summary = Table::new(&["checks", "failed", "passed"]);
        summary.push(vec![
            self.checks.len().to_string(),
            self.failures().len().to_string(),
            self.passed().to_string(),
        ]);
        ExperimentOutput { data, summary, svg: None }
    }
}

fn check(name: &str, seed: Seed, body: impl FnOnce(Seed) -> Result<(bool, u64, String)>) -> Check {
    match body(seed) {
        Ok((passed, s, detail)) => Check {
            name: name.into(),
            passed,
            seed: s,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            seed: seed.key(),
            detail: format!("error: {e}"),
        },
    }
}

/// A connected graph on `n <= 12` vertices: a uniform tree plus a few extra
/// edges, with i.i.d. uniform edge weights.
pub fn random_weighted_graph<R: Rng + ?Sized>(rng: &mut R) -> (SparseGraph, Vec<f64>) {
    let n = rng.random_range(2..=12);
    let mut edges = random_labeled_tree(n, rng);
    let extra = rng.random_range(0..=4);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && !edges.contains(&(a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let g = SparseGraph::from_edges(n, edges).expect("simple edges");
    let w = (0..g.m()).map(|_| open_unit(rng)).collect();
    (g, w)
}

/// Kruskal's tree passes the bottleneck check and no other spanning tree does.
pub fn minimax_uniqueness_check(graphs: usize, seed: Seed) -> Result<(usize, Option<u64>)> {
    let fails: Vec<Option<u64>> = (0..graphs)
        .into_par_iter()
        .map(|k| -> Result<Option<u64>> {
            let s = seed.child(k as u64);
            let (g, w) = random_weighted_graph(&mut s.rng());
            let forest = kruskal(&g, &w)?;
            let mst = &forest[0];
            let all_v: Vec<usize> = (0..g.n()).collect();
            let mut passing = 0;
            let mut matches = false;
            for idx in spanning_trees(&g) {
                let e: Vec<(usize, usize, f64)> = idx.iter().map(|&i| (g.edges()[i].0, g.edges()[i].1, w[i])).collect();
                let t = TreeStructure::from_edges(&all_v, &e, 0)?;
                if verify_minimax(&g, &w, &t) {
                    passing += 1;
                    matches = t.edge_set() == mst.edge_set();
                }
            }
            let ok = forest.len() == 1 && verify_minimax(&g, &w, mst) && passing == 1 && matches;
            Ok((!ok).then_some(s.key()))
        })
        .collect::<Result<_>>()?;
    let failed: Vec<u64> = fails.into_iter().flatten().collect();
    Ok((failed.len(), failed.first().copied()))
}

/// The fixed 4-vertex graph with 5 edges: a 4-cycle plus one chord.
pub fn cbd_reference_graph() -> SparseGraph {
    SparseGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]).expect("valid graph")
}

pub struct EstimatorCounts {
    pub instances: usize,
    pub mismatches: usize,
    pub first_failure: Option<u64>,
}

/// Covering numbers and diameters against brute force: every labeled tree
/// with at most 7 vertices, then `random` uniform trees on 8 to 20 vertices,
/// at every radius from 0 to the diameter.
pub fn covering_and_diameter_check(random: usize, seed: Seed) -> Result<EstimatorCounts> {
    let mut trees: Vec<(Vec<(usize, usize)>, usize, u64)> = Vec::new();
    for n in 1..=7 {
        for e in all_labeled_trees(n) {
            trees.push((e, n, seed.key()));
        }
    }
    for k in 0..random {
        let s = seed.child(k as u64);
        let mut rng = s.rng();
        let n = rng.random_range(8..=20);
        trees.push((random_labeled_tree(n, &mut rng), n, s.key()));
    }
    let results: Vec<Result<Option<u64>>> = trees
        .par_iter()
        .map(|(e, n, s)| {
            let t = tree_from_edges(*n, e)?;
            let d = diameter_brute(&t);
            let mut ok = tree_diameter(&t) == d;
            for r in 0..=d {
                ok &= covering_number(&t, r) == covering_brute(&t, r)?;
            }
            Ok((!ok).then_some(*s))
        })
        .collect();
    let failed: Vec<u64> = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    Ok(EstimatorCounts {
        instances: trees.len(),
        mismatches: failed.len(),
        first_failure: failed.first().copied(),
    })
}

/// Diameter on larger random trees (up to 50 vertices) and nested Hausdorff
/// distances to random connected subtrees, both against brute force.
pub fn hausdorff_and_large_diameter_check(instances: usize, seed: Seed) -> Result<EstimatorCounts> {
    let results: Vec<Result<Option<u64>>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let s = seed.child(k as u64);
            let mut rng = s.rng();
            let n = rng.random_range(1..=50);
            let t = tree_from_edges(n, &random_labeled_tree(n, &mut rng))?;
            // grow a random connected subtree from a random start
            let size = rng.random_range(1..=n);
            let start = rng.random_range(0..n);
            let mut inside = vec![false; n];
            inside[start] = true;
            let mut sub = vec![start];
            while sub.len() < size {
                let v = sub[rng.random_range(0..sub.len())];
                let nb = t.neighbors(t.local_index(v).unwrap());
                let u = t.label(nb[rng.random_range(0..nb.len())]);
                if !inside[u] {
                    inside[u] = true;
                    sub.push(u);
                }
            }
            let ok = tree_diameter(&t) == diameter_brute(&t) && Some(hausdorff_nested(&t, &sub)?) == hausdorff_brute(&t, &sub);
            Ok((!ok).then_some(s.key()))
        })
        .collect();
    let failed: Vec<u64> = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    Ok(EstimatorCounts {
        instances,
        mismatches: failed.len(),
        first_failure: failed.first().copied(),
    })
}

/// TV between `sample_connected` and both the exact connected law and
/// rejection sampling.
pub fn tilted_connected_tv(pv: &ProbabilityVector, draws: usize, seed: Seed) -> Result<(f64, f64)> {
    let exact = connected_law_exact(pv)?;
    let sampled = empirical_law(par_draws(seed.named("tilted"), draws, |rng| sample_connected(pv, rng).sorted_edges()));
    let rejected = empirical_law(par_draws(seed.named("rejection"), draws, |rng| sample_connected_rejection(pv, rng)));
    Ok((tv_distance(&sampled, &exact), tv_distance(&sampled, &rejected)))
}

/// TV between the two-stage sampler and the exact law of `G(([n], w), t)`.
pub fn two_stage_tv(w: &[f64], t: f64, draws: usize, seed: Seed) -> Result<f64> {
    let exact = graph_law_exact(w, t)?;
    let sampled = empirical_law(
        par_draws(seed.named("two-stage"), draws, |rng| two_stage_sample(w, t, rng).map(|g| g.sorted_edges()))
            .into_iter()
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(tv_distance(&sampled, &exact))
}

pub const TWO_STAGE_WEIGHTS: [f64; 4] = [1.0, 0.8, 0.6, 0.4];

/// The full oracle suite. Every check is itemized with its seed.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let base = Seed::new(cfg.seed);
    let mut checks = Vec::new();

    if let Some(p) = &cfg.weights_file {
        checks.push(check("weights-file", base, |s| {
            let seq = WeightSequence::read_text(p, cfg.tau)?;
            Ok((true, s.key(), format!("n = {}", seq.n())))
        }));
    }

    checks.push(check("minimax-uniqueness", base.named("minimax"), |s| {
        let (fails, first) = minimax_uniqueness_check(1000, s)?;
        Ok((fails == 0, first.unwrap_or(s.key()), format!("graphs = 1000, failures = {fails}")))
    }));

    checks.push(check("cbd-law", base.named("cbd"), |s| {
        let r = cbd_law_distance(&cbd_reference_graph(), 100_000, &mut s.rng())?;
        Ok((
            r.exact_tv < 1e-9 && r.sampled_tv < 0.02,
            s.key(),
            format!("exact tv = {:e}, sampled tv = {:.4} at {} draws", r.exact_tv, r.sampled_tv, r.trials),
        ))
    }));

    checks.push(check("coalescent-equivalence", base.named("coalescent"), |s| {
        let r = mc_graph_equivalence(&[1.0, 0.5, 0.25], 0.7, 1_000_000, s)?;
        Ok((r.tv_exact < 0.01, s.key(), format!("tv = {:.5} at {} trials", r.tv_exact, r.trials)))
    }));

    checks.push(check("hitting-time-identity", base.named("hitting"), |s| {
        let seq = WeightSequence::power_law(100, 1.0, 3.5)?;
        let err = hitting_mass_check(&seq, 1.0, 1000, s)?;
        Ok((err < 1e-9, s.key(), format!("max |hitting time - mass| = {err:e} over 1000 runs")))
    }));

    checks.push(check("ptree-law", base.named("ptree"), |s| {
        let pv = ProbabilityVector::from_weights(&[1.0, 2.0, 3.0, 4.0], 1.0)?;
        let trees = enumerate_rooted_trees(4);
        let total: f64 = trees.iter().map(|t| ptree_probability(t, pv.q())).sum();
        let exact: HashMap<_, f64> = trees.into_iter().map(|t| (ptree_probability(&t, pv.q()), t)).map(|(p, t)| (t, p)).collect();
        let draws = 200_000;
        let sampled = empirical_law(par_draws(s.named("tree"), draws, |rng| sample_ptree(&pv, rng).unordered()));
        let tv_tree = tv_distance(&sampled, &exact);
        let pv3 = ProbabilityVector::from_weights(&[1.0, 2.0, 3.0], 1.0)?;
        let ordered: HashMap<_, f64> = enumerate_ordered_trees(3).into_iter().map(|t| {
            let p = ordered_probability(&t, pv3.q());
            (t, p)
        }).collect();
        let sampled_ord = empirical_law(par_draws(s.named("ordered"), draws, |rng| sample_ordered_ptree(&pv3, rng)));
        let tv_ord = tv_distance(&sampled_ord, &ordered);
        Ok((
            (total - 1.0).abs() < 1e-12 && tv_tree < 0.02 && tv_ord < 0.02,
            s.key(),
            format!("sum = {total:.15}, tv(P_tree) = {tv_tree:.4}, tv(P_ord) = {tv_ord:.4}"),
        ))
    }));

    checks.push(check("tilted-construction-exact", base, |s| {
        let mut worst: f64 = 0.0;
        for (q, a) in [(vec![1.0, 1.0, 1.0], 1.5), (vec![0.1, 0.2, 0.3, 0.4], 2.0), (vec![0.5, 0.1, 0.3, 0.05, 0.05], 4.0)] {
            let pv = ProbabilityVector::from_weights(&q, a)?;
            worst = worst.max(tv_distance(&connected_law_exact(&pv)?, &connected_law_from_tilted(&pv)?));
        }
        Ok((worst < 1e-12, s.key(), format!("max tv = {worst:e}")))
    }));

    checks.push(check("tilted-sampler", base.named("tilted"), |s| {
        let pv = ProbabilityVector::uniform(3, 1.5)?;
        let (tv_exact, tv_rej) = tilted_connected_tv(&pv, 100_000, s)?;
        let tv_two = two_stage_tv(&TWO_STAGE_WEIGHTS, 0.5, 100_000, s)?;
        Ok((
            tv_exact < 0.03 && tv_rej < 0.03 && tv_two < 0.03,
            s.key(),
            format!("tv(exact) = {tv_exact:.4}, tv(rejection) = {tv_rej:.4}, tv(two-stage) = {tv_two:.4}"),
        ))
    }));

    checks.push(check("covering-diameter-brute-force", base.named("covering"), |s| {
        let c = covering_and_diameter_check(300, s)?;
        Ok((c.mismatches == 0, c.first_failure.unwrap_or(s.key()), format!("trees = {}, mismatches = {}", c.instances, c.mismatches)))
    }));

    checks.push(check("hausdorff-brute-force", base.named("hausdorff"), |s| {
        let c = hausdorff_and_large_diameter_check(100, s)?;
        Ok((c.mismatches == 0, c.first_failure.unwrap_or(s.key()), format!("instances = {}, mismatches = {}", c.instances, c.mismatches)))
    }));

    checks.push(check("uniform-minima-symmetric", base.named("minima-sym"), |s| {
        let e = uniform_minima(&UniformMinimaCase { m0: 1, x0: 0.25, xs: vec![0.25] }, 200_000, s)?;
        Ok((
            (e.probability - 0.5).abs() < 4.0 * e.std_err,
            s.key(),
            format!("p = {:.5} +- {:.5}", e.probability, e.std_err),
        ))
    }));

    checks.push(check("uniform-minima-bound", base.named("minima"), |s| {
        let mut fails = 0;
        let mut first = None;
        let mut worst = f64::INFINITY;
        for k in 0..100 {
            let ks = s.child(k);
            let case = UniformMinimaCase::random(&mut ks.named("case").rng());
            let e = uniform_minima(&case, 20_000, ks)?;
            worst = worst.min((e.probability - e.bound) / e.std_err.max(1e-300));
            if !e.passes() {
                fails += 1;
                first.get_or_insert(ks.key());
            }
        }
        Ok((fails == 0, first.unwrap_or(s.key()), format!("instances = 100, failures = {fails}, min z = {worst:.2}")))
    }));

    let report = ValidationReport { checks };
    if let Some(out) = &cfg.out {
        write_output(out, &report.output())?;
    }
    Ok(report)
}
