//! Estimators for `sigma^2 = lim Var(S_n) / |V_n|`: the scaling route
//! (normalized partial-sum variances along a growing schedule) and the
//! series route (lag-window sum of covariances of the m-dependent
//! approximation, spatially averaged on one large grid).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_summed_area, Rect};
use crate::models::{FieldModel, ModelVariant};
use crate::rng::RngStream;
use crate::stats;

const TAG_SCALING: u64 = 0x7363_616c;
const TAG_SERIES: u64 = 0x7365_7269;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    Scaling,
    Series,
}

#[derive(Debug, Clone)]
pub struct ScalePoint {
    pub rect: Rect,
    pub estimate: f64,
    pub se: f64,
}

/// Point estimate with its per-scale sequence; the sequence of square roots
/// is the finite probe of the plus-norm `limsup ||S_n||_2 / |V_n|^{1/2}`.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub method: EstimatorMethod,
    pub point: f64,
    pub se: f64,
    pub per_scale: Vec<ScalePoint>,
    pub warnings: Vec<String>,
}

impl EstimatorReport {
    /// `||S_n||_2 / |V_n|^{1/2}` per scale.
    pub fn normalized_l2_sequence(&self) -> Vec<(Rect, f64)> {
        self.per_scale
            .iter()
            .map(|s| (s.rect, s.estimate.max(0.0).sqrt()))
            .collect()
    }

    /// Agreement within `nsig` combined standard errors.
    pub fn agrees_with(&self, other: &EstimatorReport, nsig: f64) -> bool {
        let combined = (self.se * self.se + other.se * other.se).sqrt();
        (self.point - other.point).abs() <= nsig * combined
    }
}

/// Variance of the normalized partial sum at each scale of the schedule,
/// from independent replicates; the largest scale is the point estimate.
pub fn estimate_sigma2_scaling(
    model: &FieldModel,
    schedule: &[Rect],
    reps: usize,
    stream: RngStream,
) -> Result<EstimatorReport> {
    if reps < 2 {
        return Err(Error::Parameter(format!(
            "scaling estimator needs reps >= 2, got {reps}"
        )));
    }
    if schedule.is_empty() {
        return Err(Error::Parameter("empty scale schedule".into()));
    }
    for w in schedule.windows(2) {
        if w[1].rows() <= w[0].rows() || w[1].cols() <= w[0].cols() {
            return Err(Error::Parameter(
                "scale schedule must be strictly increasing in both dimensions".into(),
            ));
        }
    }
    let base = stream.substream(TAG_SCALING);
    let mut per_scale = Vec::with_capacity(schedule.len());
    for (si, &rect) in schedule.iter().enumerate() {
        let scale_stream = base.substream(si as u64);
        let cells = rect.cardinality() as f64;
        let squares: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let f = model
                    .generate(rect, scale_stream.substream(rep as u64))
                    .expect("generation checked at first scale");
                let s: f64 = f.as_slice().iter().sum();
                s * s / cells
            })
            .collect();
        let estimate = stats::mean(&squares);
        let se = (stats::sample_variance(&squares) / reps as f64).sqrt();
        per_scale.push(ScalePoint { rect, estimate, se });
    }
    let last = per_scale.last().unwrap();
    Ok(EstimatorReport {
        method: EstimatorMethod::Scaling,
        point: last.estimate,
        se: last.se,
        per_scale,
        warnings: Vec::new(),
    })
}

/// Parameters for the series estimator.
#[derive(Debug, Clone, Copy)]
pub struct SeriesParams {
    /// Approximation order of `f_m`.
    pub m: usize,
    /// Lags `|k|_inf <= lag_cutoff` enter the covariance sum.
    pub lag_cutoff: usize,
    /// Grid override; default side is `20 (m + lag_cutoff)`, which keeps
    /// block effects below the reported standard errors.
    pub grid: Option<Rect>,
    /// Inner replicates for nested-Monte-Carlo approximations.
    pub inner: usize,
    /// The valid region is split into `blocks x blocks` tiles whose means
    /// give the standard error.
    pub blocks: usize,
}

impl Default for SeriesParams {
    fn default() -> Self {
        SeriesParams {
            m: 16,
            lag_cutoff: 16,
            grid: None,
            inner: 64,
            blocks: 4,
        }
    }
}

/// Lag-window estimate `sigma_m^2 = sum_{|k|_inf <= L} E[f_m (f_m . T_k)]`
/// from one large grid. The window sums come from a prefix table, so the
/// cost is independent of the cutoff.
pub fn estimate_sigma2_series(
    model: &FieldModel,
    params: SeriesParams,
    stream: RngStream,
) -> Result<EstimatorReport> {
    let mut warnings = Vec::new();
    let m = params.m;
    let lag = params.lag_cutoff;
    if lag < m {
        warnings.push(format!(
            "lag cutoff {lag} below approximation order {m}: covariance series truncated"
        ));
    }
    let grid = match params.grid {
        Some(g) => g,
        None => {
            let side = (20 * (m + lag)).max(64);
            Rect::new(side, side)?
        }
    };
    let series_stream = stream.substream(TAG_SERIES);
    let fm = match &model.variant {
        ModelVariant::Orthomartingale { window, .. } => {
            if lag < *window {
                warnings.push(format!(
                    "lag cutoff {lag} below orthomartingale window {window}"
                ));
            }
            // Already finitely dependent; the field is its own approximation.
            model.generate(grid, series_stream)?
        }
        ModelVariant::Counterexample { .. } => {
            return Err(Error::UnsupportedModel(
                "counterexample field is not m-dependent at any order".into(),
            ))
        }
        _ => model.m_dependent_approx(m, grid, series_stream, params.inner)?,
    };
    let rows = fm.rows();
    let cols = fm.cols();
    if rows <= 2 * lag + params.blocks || cols <= 2 * lag + params.blocks {
        return Err(Error::Parameter(format!(
            "grid {rows}x{cols} too small for lag cutoff {lag}"
        )));
    }
    let table = build_summed_area(&fm)?;
    let (o1, o2) = fm.origin();

    // Valid cells keep the full lag window inside the grid.
    let r_lo = 1 + lag;
    let r_hi = rows - lag;
    let c_lo = 1 + lag;
    let c_hi = cols - lag;
    let bb = params.blocks;
    let mut block_means = Vec::with_capacity(bb * bb);
    for br in 0..bb {
        for bc in 0..bb {
            let rs = r_lo + br * (r_hi - r_lo + 1) / bb;
            let re = r_lo + (br + 1) * (r_hi - r_lo + 1) / bb;
            let cs = c_lo + bc * (c_hi - c_lo + 1) / bb;
            let ce = c_lo + (bc + 1) * (c_hi - c_lo + 1) / bb;
            let mut acc = 0.0;
            let mut n = 0usize;
            for r in rs..re {
                for c in cs..ce {
                    let w = table
                        .rect_sum((r - lag, c - lag), (r + lag, c + lag))
                        .expect("window inside grid");
                    acc += fm.get(o1 + r as i64 - 1, o2 + c as i64 - 1) * w;
                    n += 1;
                }
            }
            block_means.push(acc / n as f64);
        }
    }
    let point = stats::mean(&block_means);
    let se = (stats::sample_variance(&block_means) / block_means.len() as f64).sqrt();
    Ok(EstimatorReport {
        method: EstimatorMethod::Series,
        point,
        se,
        per_scale: vec![ScalePoint {
            rect: grid,
            estimate: point,
            se,
        }],
        warnings,
    })
}
