//! Small numerical and statistical helpers shared across modules.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

/// Pairwise (tree) summation; error grows like `O(log n)` rather than `O(n)`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(x)` over `xs`.
pub fn pairwise_sum_map<F: Fn(f64) -> f64 + Copy>(xs: &[f64], f: F) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_map(&xs[..mid], f) + pairwise_sum_map(&xs[mid..], f)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope (NaN with fewer than 3 points).
    pub slope_se: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
        slope_se,
        points: n,
    })
}

/// Least-squares slope of `ln y` against `ln x`, skipping non-positive entries.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// Empirical law of a sample of hashable keys.
pub fn empirical_law<K: Hash + Eq + Clone, I: IntoIterator<Item = K>>(items: I) -> HashMap<K, f64> {
    let mut counts: HashMap<K, f64> = HashMap::new();
    let mut total = 0.0;
    for k in items {
        *counts.entry(k).or_insert(0.0) += 1.0;
        total += 1.0;
    }
    if total > 0.0 {
        for v in counts.values_mut() {
            *v /= total;
        }
    }
    counts
}

/// Total variation distance between two discrete laws given as maps.
pub fn tv_distance<K: Hash + Eq>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut s = 0.0;
    for (k, &pk) in p {
        s += (pk - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qk) in q {
        if !p.contains_key(k) {
            s += qk.abs();
        }
    }
    0.5 * s
}

/// Total variation distance between laws over ordered keys.
pub fn tv_distance_ordered<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut s = 0.0;
    for (k, &pk) in p {
        s += (pk - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qk) in q {
        if !p.contains_key(k) {
            s += qk.abs();
        }
    }
    0.5 * s
}

/// Quantize a positive real to an integer key with relative resolution `1e-9`,
/// for using real-valued outcomes as law keys.
pub fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Format with 17 significant digits in positional decimal notation.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-30..=30).contains(&mag) {
        return format!("{:.16e}", x);
    }
    let decimals = (16 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// `y + e^{-y} - 1` without cancellation for small `y >= 0`.
pub fn exp_excess(y: f64) -> f64 {
    if y < 1e-3 {
        // y^2/2 - y^3/6 + y^4/24 - y^5/120
        let y2 = y * y;
        y2 * (0.5 - y / 6.0 + y2 / 24.0 - y2 * y / 120.0)
    } else {
        y + (-y).exp_m1()
    }
}

/// `(y + e^{-y} - 1) / y`, with the limit 0 at `y = 0`.
pub fn exp_excess_ratio(y: f64) -> f64 {
    if y < 1e-3 {
        let y2 = y * y;
        y * (0.5 - y / 6.0 + y2 / 24.0 - y2 * y / 120.0)
    } else {
        (y + (-y).exp_m1()) / y
    }
}

/// `(e^y - 1) / y`, with the limit 1 at `y = 0`.
pub fn expm1_ratio(y: f64) -> f64 {
    if y.abs() < 1e-8 {
        1.0 + 0.5 * y
    } else {
        y.exp_m1() / y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=1000).map(|i| 1.0 / i as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_excess_series_joins_closed_form() {
        for &y in &[1e-3_f64, 9.99e-4, 1.0001e-3] {
            let direct = y + (-y).exp_m1();
            assert!((exp_excess(y) - direct).abs() / direct < 1e-9);
        }
        assert_eq!(exp_excess(0.0), 0.0);
        assert_eq!(exp_excess_ratio(0.0), 0.0);
    }

    #[test]
    fn sig17_format() {
        assert_eq!(fmt_sig17(0.5), "0.50000000000000000");
        assert_eq!(fmt_sig17(123.0), "123.00000000000000");
        let x = 0.123_456_789_012_345_67_f64;
        assert_eq!(fmt_sig17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
