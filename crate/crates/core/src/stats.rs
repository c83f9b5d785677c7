//! Goodness-of-fit tests used by the statistical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom, chi-square only.
    pub dof: Option<usize>,
}

impl TestResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Two-sided one-sample Kolmogorov-Smirnov test against a continuous cdf.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    TestResult {
        statistic: d,
        p_value: kolmogorov_p_value(d, x.len()),
        dof: None,
    }
}

/// Asymptotic Kolmogorov tail with Stephens' finite-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square test of integer counts against Poisson(mean).
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> TestResult {
    let pois = Poisson::new(mean).expect("positive mean");
    chi_square_discrete(counts, |k| pois.pmf(k), 0)
}

/// Attempt counts (support 1, 2, ...) against a geometric law whose success
/// probability is estimated from the sample mean.
pub fn chi_square_geometric(attempts: &[u64]) -> TestResult {
    let mean = attempts.iter().sum::<u64>() as f64 / attempts.len() as f64;
    let p = (1.0 / mean).min(1.0);
    chi_square_discrete(
        attempts,
        |k| {
            if k == 0 {
                0.0
            } else {
                p * (1.0 - p).powi(k as i32 - 1)
            }
        },
        1,
    )
}

/// Pearson chi-square test of non-negative integer counts against `pmf`.
/// Classes are contiguous count ranges merged until each expects at least
/// five observations. `estimated` parameters are taken off the degrees of
/// freedom.
pub fn chi_square_discrete(
    counts: &[u64],
    pmf: impl Fn(u64) -> f64,
    estimated: usize,
) -> TestResult {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    // Class boundaries [lo, hi], with the last class absorbing the tail.
    let mut classes: Vec<(u64, u64, f64)> = Vec::new();
    let mut lo = 0;
    let mut acc = 0.0;
    let mut cum = 0.0;
    for k in 0..=max {
        let p = pmf(k);
        acc += p;
        cum += p;
        if acc * n >= 5.0 {
            classes.push((lo, k, acc));
            lo = k + 1;
            acc = 0.0;
        }
    }
    let tail = (1.0 - (cum - acc)).max(0.0);
    match classes.last_mut() {
        Some(last) if tail * n < 5.0 => {
            last.1 = u64::MAX;
            last.2 += tail;
        }
        _ => classes.push((lo, u64::MAX, tail)),
    }
    let mut observed = vec![0u64; classes.len()];
    for &c in counts {
        let idx = classes
            .iter()
            .position(|&(a, b, _)| c >= a && c <= b)
            .unwrap();
        observed[idx] += 1;
    }
    let statistic: f64 = classes
        .iter()
        .zip(&observed)
        .map(|(&(_, _, p), &o)| {
            let e = p * n;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = classes.len().saturating_sub(1 + estimated).max(1);
    let p_value = ChiSquared::new(dof as f64).unwrap().sf(statistic);
    TestResult {
        statistic,
        p_value,
        dof: Some(dof),
    }
}

/// Sample mean and its standard error.
pub fn mean_and_std_error(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
