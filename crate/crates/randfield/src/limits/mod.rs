//! Limit-theorem verification: variance estimators for the normalization
//! constant, goodness-of-fit tests for the central limit theorem, and
//! finite-dimensional covariance checks against the Brownian sheet.

mod fdd;
mod gof;
mod sigma2;

pub use fdd::{fdd_covariance_check, FddEntry, FddReport};
pub use gof::{
    ks_normality_test, ks_two_sample, sup_cdf_distance_discrete, NormalityReport, TestResult,
    TestTag,
};
pub use sigma2::{
    estimate_sigma2_scaling, estimate_sigma2_series, EstimatorMethod, EstimatorReport, ScalePoint,
    SeriesParams,
};

use crate::rng::RngStream;

const TAG_PRODUCT_REF: u64 = 0x7072_6566;

/// Independent draws of `sigma_Y sigma_Z * N * N'` with standard normal
/// factors: the exact reference law for the product counterexample.
pub fn product_normal_reference(
    reps: usize,
    row_variance: f64,
    col_variance: f64,
    stream: RngStream,
) -> Vec<f64> {
    let s = stream.substream(TAG_PRODUCT_REF);
    let scale = (row_variance * col_variance).sqrt();
    (0..reps as u64)
        .map(|r| scale * s.gaussian(2 * r) * s.gaussian(2 * r + 1))
        .collect()
}

#[cfg(test)]
mod tests;
