//! Goodness-of-fit tests: one-sample Kolmogorov-Smirnov against a centered
//! normal, the two-sample variant, and sup-CDF distance against an exact
//! discrete distribution. P-values use the asymptotic Kolmogorov law, which
//! is accurate at the sample sizes the verification suites run (>= 500).

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestTag {
    Ks,
    Moment,
    Covariance,
}

#[derive(Debug, Clone, Copy)]
pub struct TestResult {
    pub tag: TestTag,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub alpha: f64,
    pub reject: bool,
}

/// KS test against `N(0, variance)` plus sample shape moments.
#[derive(Debug, Clone)]
pub struct NormalityReport {
    pub test: TestResult,
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_se: f64,
    /// Variance used for the null CDF (provided, or the sample variance).
    pub variance_used: f64,
}

/// One-sample KS test of `samples ~ N(0, variance)`.
///
/// Pass the externally estimated variance where one exists — normalizing by
/// the tested sample itself makes the test statistic and the normalization
/// circular. Falls back to the sample variance when `None`.
pub fn ks_normality_test(
    samples: &[f64],
    alpha: f64,
    variance: Option<f64>,
) -> Result<NormalityReport> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::Parameter(format!(
            "KS normality test needs at least 20 samples, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::Parameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let sample_var = stats::sample_variance(samples);
    if sample_var == 0.0 {
        return Err(Error::Degenerate("all sample values are equal".into()));
    }
    let variance_used = match variance {
        Some(v) if v > 0.0 => v,
        Some(v) => {
            return Err(Error::Parameter(format!(
                "provided variance must be positive, got {v}"
            )))
        }
        None => sample_var,
    };
    let sd = variance_used.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = stats::normal_cdf(x / sd);
        d = d.max(((i + 1) as f64 / nf - f).abs());
        d = d.max((i as f64 / nf - f).abs());
    }
    let p_value = stats::kolmogorov_sf(nf.sqrt() * d);
    Ok(NormalityReport {
        test: TestResult {
            tag: TestTag::Ks,
            statistic: d,
            p_value,
            n,
            alpha,
            reject: p_value < alpha,
        },
        skewness: stats::skewness(samples),
        skewness_se: (6.0 / nf).sqrt(),
        excess_kurtosis: stats::excess_kurtosis(samples),
        excess_kurtosis_se: (24.0 / nf).sqrt(),
        variance_used,
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(xs: &[f64], ys: &[f64], alpha: f64) -> Result<TestResult> {
    if xs.len() < 20 || ys.len() < 20 {
        return Err(Error::Parameter(
            "two-sample KS needs at least 20 samples on each side".into(),
        ));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let effective = (n * m / (n + m)).sqrt();
    let p_value = stats::kolmogorov_sf(effective * d);
    Ok(TestResult {
        tag: TestTag::Ks,
        statistic: d,
        p_value,
        n: xs.len() + ys.len(),
        alpha,
        reject: p_value < alpha,
    })
}

/// Sup distance between the empirical CDF of `samples` and an exact discrete
/// CDF given as `(atom value, cumulative probability)` pairs sorted by value.
/// Checks both one-sided limits at every atom.
pub fn sup_cdf_distance_discrete(samples: &[f64], cumulative: &[(f64, f64)]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut prev_cum = 0.0;
    for &(value, cum) in cumulative {
        let below = sorted.partition_point(|&x| x < value) as f64 / n;
        let at_or_below = sorted.partition_point(|&x| x <= value) as f64 / n;
        d = d.max((below - prev_cum).abs());
        d = d.max((at_or_below - cum).abs());
        prev_cum = cum;
    }
    d
}
