//! m-dependent approximation `f_m = E(f | innovations within distance m)`.
//!
//! For causal variants only the quadrant `[i-m, i] x [j-m, j]` of the
//! two-sided conditioning window can intersect the dependence set of the
//! value at `(i, j)`, so conditioning on the full window and on its causal
//! clip coincide. Linear fields admit the exact form (coefficient
//! truncation); functionals use a nested Monte Carlo average with
//! per-cell private resampling streams, which keeps distinct output cells
//! independent whenever their kept windows are disjoint — the output is
//! m-dependent by construction, not just approximately.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{FieldArray, Rect};
use crate::models::{
    generate_innovations, generate_linear_field, ConvolvePath, FieldModel, ModelVariant,
    TAG_MDEP_RESAMPLE,
};
use crate::rng::{cell_counter, RngStream};

/// Realizes `f_m . T_{i,j}` over the grid.
///
/// Supported variants: `iid` (where `f_m = f`), `linear-identity`
/// (exact truncation of the kernel to `[0, m]^2`), and `linear-functional`
/// (nested Monte Carlo over `inner` resamples of out-of-window
/// innovations). The orthomartingale variant is already finitely dependent
/// and the counterexample has no window structure; both are unsupported.
pub fn m_dependent_approx(
    model: &FieldModel,
    m: usize,
    grid: Rect,
    stream: RngStream,
    inner: usize,
) -> Result<FieldArray> {
    match &model.variant {
        ModelVariant::Iid => model.generate(grid, stream),
        ModelVariant::LinearIdentity { coefficients } => {
            let b = model.resolve_truncation()?;
            let innov = generate_innovations(&model.innovations, grid, b, stream)?;
            let z = generate_linear_field(coefficients, &innov, m.min(b), ConvolvePath::Auto)?;
            z.interior(grid)
        }
        ModelVariant::LinearFunctional {
            coefficients,
            functional,
        } => {
            if inner == 0 {
                return Err(Error::Parameter(
                    "nested Monte Carlo needs at least one inner replicate".into(),
                ));
            }
            let b = model.resolve_truncation()? as i64;
            let h = functional.h() as i64;
            let span = b + h - 1;
            let side = (span + 1) as usize;
            let innov = generate_innovations(&model.innovations, grid, span as usize, stream)?;
            let spec = model.innovations;
            let m = m as i64;
            let kernel: Vec<f64> = (0..=b)
                .flat_map(|r| (0..=b).map(move |s| (r, s)))
                .map(|(r, s)| coefficients.coefficient(r, s))
                .collect();

            let rows = grid.rows();
            let cols = grid.cols();
            let values: Vec<f64> = (0..rows * cols)
                .into_par_iter()
                .map(|cell| {
                    let i = (cell / cols + 1) as i64;
                    let j = (cell % cols + 1) as i64;
                    let mut eps = vec![0.0; side * side];
                    let mut kept = vec![false; side * side];
                    for dr in -span..=0 {
                        for ds in -span..=0 {
                            let idx = ((dr + span) * (span + 1) + (ds + span)) as usize;
                            if dr >= -m && ds >= -m {
                                eps[idx] = innov.get(i + dr, j + ds);
                                kept[idx] = true;
                            }
                        }
                    }
                    let cell_stream = stream.substream_at(TAG_MDEP_RESAMPLE, i, j);
                    let mut zwin = vec![0.0; (h * h) as usize];
                    let mut acc = 0.0;
                    for rep in 0..inner {
                        let rep_stream = cell_stream.substream(rep as u64);
                        for dr in -span..=0 {
                            for ds in -span..=0 {
                                let idx = ((dr + span) * (span + 1) + (ds + span)) as usize;
                                if !kept[idx] {
                                    eps[idx] =
                                        spec.sample(&rep_stream, cell_counter(i + dr, j + ds));
                                }
                            }
                        }
                        let mut widx = 0;
                        for wi in (1 - h)..=0 {
                            for wj in (1 - h)..=0 {
                                let mut z = 0.0;
                                for r in 0..=b {
                                    for s in 0..=b {
                                        z += kernel[(r * (b + 1) + s) as usize]
                                            * eps[((wi - r + span) * (span + 1) + (wj - s + span))
                                                as usize];
                                    }
                                }
                                zwin[widx] = z;
                                widx += 1;
                            }
                        }
                        acc += functional.eval_centered(&zwin);
                    }
                    acc / inner as f64
                })
                .collect();
            FieldArray::from_values((1, 1), rows, cols, values)
        }
        ModelVariant::Orthomartingale { .. } => Err(Error::UnsupportedModel(
            "orthomartingale differences already have finite dependence".into(),
        )),
        ModelVariant::Counterexample { .. } => Err(Error::UnsupportedModel(
            "counterexample field has no m-dependent approximation".into(),
        )),
    }
}
