//! Finite-dimensional covariance check of the interpolated sheet process
//! against the Brownian sheet target `prod_i min(s_i, t_i)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_summed_area, Rect};
use crate::limits::{TestResult, TestTag};
use crate::models::FieldModel;
use crate::rng::RngStream;
use crate::stats;

const TAG_FDD: u64 = 0x6664_6431;

#[derive(Debug, Clone, Copy)]
pub struct FddEntry {
    pub s: (f64, f64),
    pub t: (f64, f64),
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct FddReport {
    pub entries: Vec<FddEntry>,
    pub max_abs_z: f64,
    pub result: TestResult,
}

/// Simulates `reps` replicates of the normalized sheet values
/// `B_{n,t} / (sigma |V_n|^{1/2})` over the evaluation points and compares
/// every covariance entry against the Brownian-sheet target. The statistic
/// is the largest entrywise deviation in units of its Monte Carlo standard
/// error; the p-value is a conservative Bonferroni normal bound.
pub fn fdd_covariance_check(
    model: &FieldModel,
    points: &[(f64, f64)],
    grid: Rect,
    reps: usize,
    sigma2_hat: f64,
    alpha: f64,
    stream: RngStream,
) -> Result<FddReport> {
    if points.is_empty() {
        return Err(Error::Parameter("empty evaluation grid".into()));
    }
    if sigma2_hat <= 0.0 {
        return Err(Error::Parameter(format!(
            "normalization variance must be positive, got {sigma2_hat}"
        )));
    }
    if reps < 2 {
        return Err(Error::Parameter("covariance check needs reps >= 2".into()));
    }
    for &(t1, t2) in points {
        if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) {
            return Err(Error::Domain(format!(
                "evaluation point ({t1}, {t2}) outside the unit square"
            )));
        }
    }
    let scale = 1.0 / (sigma2_hat * grid.cardinality() as f64).sqrt();
    let base = stream.substream(TAG_FDD);
    let sheets: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let f = model
                .generate(grid, base.substream(rep as u64))
                .expect("model generation");
            let table = build_summed_area(&f).expect("finite field");
            points
                .iter()
                .map(|&t| table.sheet_value(t).expect("point validated") * scale)
                .collect()
        })
        .collect();

    let mut entries = Vec::new();
    let mut max_abs_z = 0.0f64;
    for i in 0..points.len() {
        for j in i..points.len() {
            let products: Vec<f64> = sheets.iter().map(|b| b[i] * b[j]).collect();
            let estimate = stats::mean(&products);
            let se = (stats::sample_variance(&products) / reps as f64).sqrt();
            let target = points[i].0.min(points[j].0) * points[i].1.min(points[j].1);
            let z = if se > 0.0 {
                (estimate - target) / se
            } else {
                0.0
            };
            max_abs_z = max_abs_z.max(z.abs());
            entries.push(FddEntry {
                s: points[i],
                t: points[j],
                target,
                estimate,
                se,
                z,
            });
        }
    }
    let n_pairs = entries.len() as f64;
    let p_value = (n_pairs * stats::erfc(max_abs_z / std::f64::consts::SQRT_2)).min(1.0);
    Ok(FddReport {
        entries,
        max_abs_z,
        result: TestResult {
            tag: TestTag::Covariance,
            statistic: max_abs_z,
            p_value,
            n: reps,
            alpha,
            reject: p_value < alpha,
        },
    })
}
