//! Summability diagnostics for coefficient families and projective-condition
//! estimates for field models.
//!
//! The analytic side computes quadrant tail sums `A_{k,l} = sum_{i>=k, j>=l}
//! a_{i,j}^2`, power-law exponent fits, and partial sums of the condition
//! series with their Cauchy gaps. Divergence is never declared from numerics
//! alone: the tool reports the gap signature plus the analytic
//! classification thresholds for the two parametric families.
//!
//! The Monte Carlo side estimates `|| E(f . T_{k,l} | F_{1,1}) ||_p` by
//! nested resampling and accumulates the weighted partial sums of the
//! projective series.

mod norms;

pub use norms::{
    delta_tilde_partial, estimate_conditional_norm, estimate_conditional_norm_mc, McParams,
    NormEstimate, ProjectiveReport,
};

use crate::error::{Error, Result};
use crate::models::CoefficientFamily;
use crate::stats;

/// Quadrant tail sum `A_{k,l}` to relative accuracy `rel_tol`.
///
/// Negative indices clamp to zero (the coefficients vanish there anyway).
/// The product family factorizes into two one-dimensional tail sums; the
/// additive family is regrouped along diagonals into `sum_j j (k+l+j)^{-2q}`.
/// Both use midpoint-rule integral remainders with a derivative error bound.
pub fn tail_sum(family: &CoefficientFamily, k: i64, l: i64, rel_tol: f64) -> Result<f64> {
    let k = k.max(0);
    let l = l.max(0);
    match family {
        CoefficientFamily::Delta => Ok(if k == 0 && l == 0 { 1.0 } else { 0.0 }),
        CoefficientFamily::Explicit { table } => {
            let mut s = 0.0;
            for (i, row) in table.iter().enumerate().skip(k as usize) {
                for &a in row.iter().skip(l as usize) {
                    s += a * a;
                }
                let _ = i;
            }
            Ok(s)
        }
        CoefficientFamily::ProductDecay { q } => {
            check_summable(*q)?;
            Ok(one_dim_tail(k as u64, 2.0 * q, rel_tol) * one_dim_tail(l as u64, 2.0 * q, rel_tol))
        }
        CoefficientFamily::AdditiveDecay { q } => {
            check_summable(*q)?;
            Ok(diagonal_tail((k + l) as u64, 2.0 * q, rel_tol))
        }
    }
}

fn check_summable(q: f64) -> Result<()> {
    if q <= 1.0 {
        return Err(Error::Divergence(format!(
            "coefficients with q = {q} are not square-summable"
        )));
    }
    Ok(())
}

/// `sum_{n >= k+1} n^{-twoq}`: explicit terms plus a midpoint integral
/// remainder, stopping once the remainder's error bound is below tolerance.
fn one_dim_tail(k: u64, twoq: f64, rel_tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = k + 1;
    loop {
        for _ in 0..32 {
            sum += (n as f64).powf(-twoq);
            n += 1;
        }
        let y = n as f64 - 0.5;
        let integral = y.powf(1.0 - twoq) / (twoq - 1.0);
        let err = twoq * y.powf(-twoq - 1.0) / 24.0;
        let estimate = sum + integral;
        if err <= rel_tol * estimate {
            return estimate;
        }
    }
}

/// `sum_{j >= 1} j (c + j)^{-twoq}`, the diagonal regrouping of the additive
/// family's quadrant tail with `c = k + l`.
fn diagonal_tail(c: u64, twoq: f64, rel_tol: f64) -> f64 {
    let c = c as f64;
    // g(x) = x (c+x)^{-twoq} decreases only past c/(twoq-1); the midpoint
    // bound needs monotonicity.
    let start_guard = (c / (twoq - 1.0)).ceil() as u64 + 1;
    let mut sum = 0.0;
    let mut j = 1u64;
    loop {
        for _ in 0..32 {
            sum += j as f64 * (c + j as f64).powf(-twoq);
            j += 1;
        }
        if j < start_guard {
            continue;
        }
        let y = j as f64 - 0.5;
        let u = c + y;
        // twoq > 2 holds for every q > 1.
        let integral = u.powf(2.0 - twoq) / (twoq - 2.0) - c * u.powf(1.0 - twoq) / (twoq - 1.0);
        let err = u.powf(-twoq - 1.0) * (y * (twoq - 1.0) - c).abs() / 24.0;
        let estimate = sum + integral;
        if err <= rel_tol * estimate {
            return estimate;
        }
    }
}

/// Tail sums `A[k][l]` for `1 <= k <= kmax`, `1 <= l <= lmax`.
///
/// Entries are nonnegative and nonincreasing in both indices.
#[derive(Debug, Clone)]
pub struct TailSumTable {
    kmax: usize,
    lmax: usize,
    rel_tol: f64,
    a: Vec<f64>,
}

impl TailSumTable {
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// `A_{k,l}` for 1-based indices within the table.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        assert!(k >= 1 && k <= self.kmax && l >= 1 && l <= self.lmax);
        self.a[(k - 1) * self.lmax + (l - 1)]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.kmax).flat_map(move |k| (1..=self.lmax).map(move |l| (k, l, self.get(k, l))))
    }
}

/// Tabulates `A_{k,l}` with per-axis caching for the parametric families.
pub fn tail_sum_table(
    family: &CoefficientFamily,
    kmax: usize,
    lmax: usize,
    rel_tol: f64,
) -> Result<TailSumTable> {
    if kmax == 0 || lmax == 0 {
        return Err(Error::Dimension(
            "tail table extents must be positive".into(),
        ));
    }
    let mut a = vec![0.0; kmax * lmax];
    match family {
        CoefficientFamily::ProductDecay { q } => {
            check_summable(*q)?;
            let s_k: Vec<f64> = (1..=kmax)
                .map(|k| one_dim_tail(k as u64, 2.0 * q, rel_tol))
                .collect();
            let s_l: Vec<f64> = (1..=lmax)
                .map(|l| one_dim_tail(l as u64, 2.0 * q, rel_tol))
                .collect();
            for k in 1..=kmax {
                for l in 1..=lmax {
                    a[(k - 1) * lmax + (l - 1)] = s_k[k - 1] * s_l[l - 1];
                }
            }
        }
        CoefficientFamily::AdditiveDecay { q } => {
            check_summable(*q)?;
            let diag: Vec<f64> = (0..=kmax + lmax)
                .map(|c| diagonal_tail(c as u64, 2.0 * q, rel_tol))
                .collect();
            for k in 1..=kmax {
                for l in 1..=lmax {
                    a[(k - 1) * lmax + (l - 1)] = diag[k + l];
                }
            }
        }
        _ => {
            for k in 1..=kmax {
                for l in 1..=lmax {
                    a[(k - 1) * lmax + (l - 1)] = tail_sum(family, k as i64, l as i64, rel_tol)?;
                }
            }
        }
    }
    Ok(TailSumTable {
        kmax,
        lmax,
        rel_tol,
        a,
    })
}

/// Least-squares slope of `log A(k,k)` against `log k` over `k_lo..=k_hi`.
pub fn fit_tail_exponent_diagonal(
    family: &CoefficientFamily,
    k_lo: usize,
    k_hi: usize,
    rel_tol: f64,
) -> Result<f64> {
    fit_exponent(k_lo, k_hi, |k| {
        tail_sum(family, k as i64, k as i64, rel_tol)
    })
}

/// Least-squares slope of `log A(k,1)` against `log k`, the per-axis decay.
pub fn fit_tail_exponent_axis(
    family: &CoefficientFamily,
    k_lo: usize,
    k_hi: usize,
    rel_tol: f64,
) -> Result<f64> {
    fit_exponent(k_lo, k_hi, |k| tail_sum(family, k as i64, 1, rel_tol))
}

fn fit_exponent(
    k_lo: usize,
    k_hi: usize,
    mut value: impl FnMut(usize) -> Result<f64>,
) -> Result<f64> {
    if k_lo < 1 || k_hi <= k_lo + 1 {
        return Err(Error::Parameter(format!(
            "exponent fit needs 1 <= k_lo < k_hi - 1, got {k_lo}..{k_hi}"
        )));
    }
    let mut xs = Vec::with_capacity(k_hi - k_lo + 1);
    let mut ys = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        let a = value(k)?;
        if a <= 0.0 {
            return Err(Error::Domain(format!("tail sum vanishes at k = {k}")));
        }
        xs.push((k as f64).ln());
        ys.push(a.ln());
    }
    Ok(stats::ols_slope(&xs, &ys))
}

/// Partial sums `P(K) = sum_{k,l <= K} A_{k+1-h,l+1-h}^{alpha/2} /
/// (k^{1/2} l^{1/2})` for `K = 1..=kmax`; tail indices below zero clamp to
/// zero.
pub fn condition_series_partial(
    family: &CoefficientFamily,
    alpha: f64,
    h: usize,
    kmax: usize,
    rel_tol: f64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if h == 0 || kmax == 0 {
        return Err(Error::Parameter("h and kmax must be positive".into()));
    }
    let half = alpha / 2.0;
    // A^{alpha/2} evaluated at the clamped per-axis index.
    let axis_index = |k: usize| -> i64 { (k as i64 + 1 - h as i64).max(0) };
    let powered: Vec<f64> = match family {
        CoefficientFamily::ProductDecay { q } => {
            check_summable(*q)?;
            // factorized: A = S(k') S(l'), so cache S(k')^{alpha/2}.
            let s: Vec<f64> = (1..=kmax)
                .map(|k| one_dim_tail(axis_index(k) as u64, 2.0 * q, rel_tol).powf(half))
                .collect();
            let mut terms = Vec::with_capacity(kmax * kmax);
            for k in 1..=kmax {
                for l in 1..=kmax {
                    terms.push(s[k - 1] * s[l - 1] / ((k * l) as f64).sqrt());
                }
            }
            terms
        }
        CoefficientFamily::AdditiveDecay { q } => {
            check_summable(*q)?;
            let cmax = 2 * kmax;
            let diag: Vec<f64> = (0..=cmax)
                .map(|c| diagonal_tail(c as u64, 2.0 * q, rel_tol).powf(half))
                .collect();
            let mut terms = Vec::with_capacity(kmax * kmax);
            for k in 1..=kmax {
                for l in 1..=kmax {
                    let c = (axis_index(k) + axis_index(l)) as usize;
                    terms.push(diag[c] / ((k * l) as f64).sqrt());
                }
            }
            terms
        }
        _ => {
            let mut terms = Vec::with_capacity(kmax * kmax);
            for k in 1..=kmax {
                for l in 1..=kmax {
                    let a = tail_sum(family, axis_index(k), axis_index(l), rel_tol)?;
                    terms.push(a.powf(half) / ((k * l) as f64).sqrt());
                }
            }
            terms
        }
    };
    let mut partials = Vec::with_capacity(kmax);
    let mut total = 0.0;
    for kk in 1..=kmax {
        // new row k = kk (l <= kk) and new column l = kk (k < kk)
        for l in 1..=kk {
            total += powered[(kk - 1) * kmax + (l - 1)];
        }
        for k in 1..kk {
            total += powered[(k - 1) * kmax + (kk - 1)];
        }
        partials.push(total);
    }
    Ok(partials)
}

/// Cauchy-gap signature `P(2K) - P(K)` for each requested `K`.
pub fn cauchy_gaps(partials: &[f64], ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 || 2 * k > partials.len() {
            return Err(Error::Parameter(format!(
                "gap at K = {k} needs partial sums up to 2K = {}",
                2 * k
            )));
        }
        out.push((k, partials[2 * k - 1] - partials[k - 1]));
    }
    Ok(out)
}

/// Analytic classification of the condition series for the Lipschitz case
/// (`alpha = 1`, `h = 1`): the additive family converges for q > 2, the
/// product family for q > 3/2. Finite supports always converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionClass {
    Convergent,
    Divergent,
}

pub fn classify_lipschitz(family: &CoefficientFamily) -> ConditionClass {
    match family {
        CoefficientFamily::Delta | CoefficientFamily::Explicit { .. } => ConditionClass::Convergent,
        CoefficientFamily::AdditiveDecay { q } => {
            if *q > 2.0 {
                ConditionClass::Convergent
            } else {
                ConditionClass::Divergent
            }
        }
        CoefficientFamily::ProductDecay { q } => {
            if *q > 1.5 {
                ConditionClass::Convergent
            } else {
                ConditionClass::Divergent
            }
        }
    }
}
