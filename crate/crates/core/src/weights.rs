//! Heavy-tailed weight sequences and the scalars derived from them.
//!
//! Vertex 1 (index 0) is the heaviest vertex. `ell_n` and `sigma2` leave it
//! out; `L_n` keeps it. Both totals are exposed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{fmt_sig17, pairwise_sum, pairwise_sum_map};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    w: Vec<f64>,
    tau: f64,
}

/// `alpha = 1/(tau-1)`, `rho = (tau-2)/(tau-1)`, `eta = (tau-3)/(tau-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConstants {
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
}

impl ScalingConstants {
    pub fn from_tau(tau: f64) -> Self {
        ScalingConstants {
            alpha: 1.0 / (tau - 1.0),
            rho: (tau - 2.0) / (tau - 1.0),
            eta: (tau - 3.0) / (tau - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedStats {
    /// Total weight including vertex 1.
    pub total: f64,
    /// Total weight excluding vertex 1.
    pub ell: f64,
    /// `(1/n) * sum_{i>=2} w_i^2`.
    pub sigma2: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledView {
    pub lambda: f64,
    /// `x_i = w_i / (n^rho sigma2^{1/2})`.
    pub x: Vec<f64>,
    /// `theta_i = (1 + lambda n^{-eta}) w_i / (n^alpha sigma2^{1/2})`.
    pub theta: Vec<f64>,
    /// `(1 + lambda n^{-eta}) / nu_n`, unclamped.
    pub p_lambda: f64,
    /// Set when `p_lambda > 1`, in which case it is not a probability.
    pub p_exceeds_one: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub nu: f64,
    pub supercritical: bool,
    /// Power-law sandwich `A1 (n/i)^alpha <= w_i <= A2 (n/i)^alpha` for `i <= n/2`.
    pub sandwich_holds: bool,
    /// First (1-based) index violating the sandwich, if any.
    pub sandwich_violation: Option<usize>,
    /// `w_n >= A1 (log n)^{3/2} n^{-eta/4}`.
    pub min_weight_holds: bool,
    pub min_weight_threshold: f64,
    /// Finite-n proxies `n^eta x_i` for `i = 1..=min(10, n)`.
    pub theta_proxies: Vec<f64>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.supercritical && self.sandwich_holds && self.min_weight_holds
    }
}

fn validate_tau(tau: f64) -> Result<()> {
    if !(tau > 3.0 && tau < 4.0) {
        return Err(Error::param("tau", format!("must lie in (3, 4), got {tau}")));
    }
    Ok(())
}

impl WeightSequence {
    /// Validates ordering, positivity, `n >= 2` and `tau` in (3, 4).
    pub fn new(w: Vec<f64>, tau: f64) -> Result<Self> {
        validate_tau(tau)?;
        if w.len() < 2 {
            return Err(Error::InvalidWeights(format!(
                "need at least 2 vertices, got {}",
                w.len()
            )));
        }
        for (i, &wi) in w.iter().enumerate() {
            if !(wi.is_finite() && wi > 0.0) {
                return Err(Error::InvalidWeights(format!(
                    "weight {} (vertex {}) is not a positive finite number",
                    wi,
                    i + 1
                )));
            }
            if i > 0 && wi > w[i - 1] {
                return Err(Error::InvalidWeights(format!(
                    "weights must be nonincreasing: w_{} = {} < w_{} = {}",
                    i,
                    w[i - 1],
                    i + 1,
                    wi
                )));
            }
        }
        Ok(WeightSequence { w, tau })
    }

    /// `w_i = c (n/i)^{1/(tau-1)}`.
    pub fn power_law(n: usize, c: f64, tau: f64) -> Result<Self> {
        validate_tau(tau)?;
        if n < 2 {
            return Err(Error::param("n", format!("must be at least 2, got {n}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("must be positive, got {c}")));
        }
        let alpha = 1.0 / (tau - 1.0);
        let nf = n as f64;
        let w = (1..=n).map(|i| c * (nf / i as f64).powf(alpha)).collect();
        Self::new(w, tau)
    }

    /// `w_i = inverse_tail(i/(n+1))`; the result must come out nonincreasing.
    pub fn from_inverse_tail<F: Fn(f64) -> f64>(n: usize, tau: f64, inverse_tail: F) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("must be at least 2, got {n}")));
        }
        let denom = (n + 1) as f64;
        let w = (1..=n).map(|i| inverse_tail(i as f64 / denom)).collect();
        Self::new(w, tau)
    }

    /// Sorted i.i.d. draws (largest first).
    pub fn from_iid_samples(mut samples: Vec<f64>, tau: f64) -> Result<Self> {
        samples.sort_by(|a, b| b.total_cmp(a));
        Self::new(samples, tau)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn constants(&self) -> ScalingConstants {
        ScalingConstants::from_tau(self.tau)
    }

    pub fn stats(&self) -> DerivedStats {
        let n = self.n() as f64;
        let ell = pairwise_sum(&self.w[1..]);
        let total = ell + self.w[0];
        let sigma2 = pairwise_sum_map(&self.w[1..], |x| x * x) / n;
        DerivedStats {
            total,
            ell,
            sigma2,
            nu: n * sigma2 / ell,
        }
    }

    /// `(1 + lambda n^{-eta}) / nu_n`.
    pub fn p_lambda(&self, lambda: f64) -> f64 {
        let c = self.constants();
        (1.0 + lambda * (self.n() as f64).powf(-c.eta)) / self.stats().nu
    }

    /// The lambda at which `p_lambda` reaches 1, `(nu_n - 1) n^eta`.
    pub fn saturation_lambda(&self) -> f64 {
        (self.stats().nu - 1.0) * (self.n() as f64).powf(self.constants().eta)
    }

    pub fn rescaled(&self, lambda: f64) -> RescaledView {
        let c = self.constants();
        let st = self.stats();
        let n = self.n() as f64;
        let root = st.sigma2.sqrt();
        let x_scale = 1.0 / (n.powf(c.rho) * root);
        let factor = 1.0 + lambda * n.powf(-c.eta);
        let t_scale = factor / (n.powf(c.alpha) * root);
        let x = self.w.iter().map(|w| w * x_scale).collect();
        let theta = self.w.iter().map(|w| w * t_scale).collect();
        let p_lambda = factor / st.nu;
        RescaledView {
            lambda,
            x,
            theta,
            p_lambda,
            p_exceeds_one: p_lambda > 1.0,
        }
    }

    /// Bundle of derived scalars, the rescaled view at `lambda`, and the constants.
    pub fn derived(&self, lambda: f64) -> Result<(DerivedStats, RescaledView, ScalingConstants)> {
        if !(lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be nonnegative, got {lambda}")));
        }
        Ok((self.stats(), self.rescaled(lambda), self.constants()))
    }

    pub fn check_assumptions(&self, a1: f64, a2: f64) -> Result<AssumptionReport> {
        if !(a1 > 0.0 && a2 >= a1) {
            return Err(Error::param("A1/A2", format!("need 0 < A1 <= A2, got {a1}, {a2}")));
        }
        const REL: f64 = 1e-12;
        let c = self.constants();
        let st = self.stats();
        let n = self.n();
        let nf = n as f64;
        let mut violation = None;
        for i in 1..=n / 2 {
            let base = (nf / i as f64).powf(c.alpha);
            let wi = self.w[i - 1];
            let lo = a1 * base * (1.0 - REL);
            let hi = a2 * base * (1.0 + REL);
            if wi < lo || wi > hi {
                violation = Some(i);
                break;
            }
        }
        let threshold = a1 * nf.ln().powf(1.5) * nf.powf(-c.eta / 4.0);
        let view = self.rescaled(0.0);
        let scale = nf.powf(c.eta);
        Ok(AssumptionReport {
            nu: st.nu,
            supercritical: st.nu > 1.0,
            sandwich_holds: violation.is_none(),
            sandwich_violation: violation,
            min_weight_holds: self.w[n - 1] >= threshold * (1.0 - REL),
            min_weight_threshold: threshold,
            theta_proxies: view.x.iter().take(10).map(|x| x * scale).collect(),
        })
    }

    /// One weight per line, 17 significant digits.
    pub fn write_text<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for w in &self.w {
            writeln!(out, "{}", fmt_sig17(*w))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the one-column format. Blank lines and `#` comments are skipped.
    pub fn read_text<P: AsRef<Path>>(path: P, tau: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut w = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                reason: format!("not a number: {line:?}"),
            })?;
            w.push(v);
        }
        Self::new(w, tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_last_weight_is_c() {
        for &n in &[2usize, 7, 1000] {
            let s = WeightSequence::power_law(n, 2.5, 3.3).unwrap();
            assert!((s.weight(n - 1) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn power_law_figure_instance() {
        let s = WeightSequence::power_law(80_000, 3.0, 3.05).unwrap();
        let expect = 3.0 * 80_000f64.powf(1.0 / 2.05);
        assert!((s.weight(0) - expect).abs() / expect < 1e-14);
    }

    #[test]
    fn power_law_small_instance() {
        let s = WeightSequence::power_law(4, 1.0, 3.5).unwrap();
        let expect = [4f64.powf(0.4), 2f64.powf(0.4), (4.0f64 / 3.0).powf(0.4), 1.0];
        for (a, b) in s.weights().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn power_law_rejects_bad_inputs() {
        assert!(WeightSequence::power_law(10, 1.0, 3.0).is_err());
        assert!(WeightSequence::power_law(10, 1.0, 4.0).is_err());
        assert!(WeightSequence::power_law(10, 0.0, 3.5).is_err());
        assert!(WeightSequence::power_law(1, 1.0, 3.5).is_err());
    }

    #[test]
    fn inverse_tail_pareto_and_constant() {
        let alpha = 1.0 / 2.5;
        let n = 50;
        let s = WeightSequence::from_inverse_tail(n, 3.5, |u| u.powf(-alpha)).unwrap();
        for i in 1..=n {
            let e = ((n + 1) as f64 / i as f64).powf(alpha);
            assert!((s.weight(i - 1) - e).abs() < 1e-12);
        }
        let s = WeightSequence::from_inverse_tail(n, 3.5, |_| 2.0).unwrap();
        assert!(s.weights().iter().all(|&w| w == 2.0));
        // increasing inverse tail must be rejected
        assert!(WeightSequence::from_inverse_tail(n, 3.5, |u| u).is_err());
    }

    #[test]
    fn pareto_matches_power_law_up_to_shift() {
        let (n, c, tau) = (200, 3.0, 3.5);
        let alpha = 1.0 / (tau - 1.0);
        let a = WeightSequence::power_law(n, c, tau).unwrap();
        let b = WeightSequence::from_inverse_tail(n, tau, |u| c * u.powf(-alpha)).unwrap();
        let ratio = ((n + 1) as f64 / n as f64).powf(alpha);
        for i in 0..n {
            assert!((b.weight(i) / a.weight(i) - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn stats_constant_weights() {
        let (n, c) = (40, 2.5);
        let s = WeightSequence::new(vec![c; n], 3.5).unwrap();
        let st = s.stats();
        assert!((st.ell - (n - 1) as f64 * c).abs() < 1e-12);
        assert!((st.sigma2 - (n - 1) as f64 * c * c / n as f64).abs() < 1e-12);
        assert!((st.nu - c).abs() < 1e-12);
        assert!((s.p_lambda(0.0) - 1.0 / c).abs() < 1e-12);
    }

    #[test]
    fn stats_three_vertices() {
        let s = WeightSequence::new(vec![2.0, 1.0, 1.0], 3.5).unwrap();
        let st = s.stats();
        assert_eq!(st.ell, 2.0);
        assert_eq!(st.total, 4.0);
        assert!((st.sigma2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((st.nu - 1.0).abs() < 1e-15);
        let view = s.rescaled(0.0);
        assert!((view.p_lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rescaled_identities() {
        let s = WeightSequence::power_law(5000, 3.0, 3.5).unwrap();
        let n = s.n() as f64;
        let eta = s.constants().eta;
        for &lambda in &[0.0, 1.0, 7.5] {
            let v = s.rescaled(lambda);
            let ss: f64 = pairwise_sum_map(&v.x[1..], |x| x * x);
            assert!((ss / n.powf(-eta) - 1.0).abs() < 1e-9);
            let f = lambda + n.powf(eta);
            for (x, th) in v.x.iter().zip(&v.theta) {
                assert!((f * x - th).abs() <= 1e-12 * th.abs());
            }
        }
    }

    #[test]
    fn p_lambda_reports_excess() {
        let s = WeightSequence::power_law(100, 3.0, 3.5).unwrap();
        let big = s.saturation_lambda() * 2.0;
        let v = s.rescaled(big);
        assert!(v.p_exceeds_one && v.p_lambda > 1.0);
        assert!(!s.rescaled(0.0).p_exceeds_one);
    }

    #[test]
    fn assumptions_report() {
        let s = WeightSequence::power_law(10_000, 3.0, 3.5).unwrap();
        let r = s.check_assumptions(3.0, 3.0).unwrap();
        assert!(r.supercritical && r.nu > 1.0);
        assert!(r.sandwich_holds);
        assert_eq!(r.theta_proxies.len(), 10);

        let flat = WeightSequence::new(vec![3.0; 10_000], 3.5).unwrap();
        let r = flat.check_assumptions(1.0, 3.0).unwrap();
        assert_eq!(r.sandwich_violation, Some(1));
    }

    #[test]
    fn text_roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        let s = WeightSequence::power_law(300, 3.0, 3.5).unwrap();
        s.write_text(&p).unwrap();
        assert_eq!(WeightSequence::read_text(&p, 3.5).unwrap(), s);
        fs::write(&p, "3.0\nabc\n1.0\n").unwrap();
        assert!(matches!(WeightSequence::read_text(&p, 3.5), Err(Error::Parse { line: 2, .. })));
        fs::write(&p, "1.0\n2.0\n").unwrap();
        assert!(matches!(WeightSequence::read_text(&p, 3.5), Err(Error::InvalidWeights(_))));
    }
}
