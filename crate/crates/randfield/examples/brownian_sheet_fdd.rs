//! Finite-dimensional covariance of the interpolated sheet process against
//! the Brownian sheet target prod_i min(s_i, t_i).
//!
//! ```text
//! cargo run --example brownian_sheet_fdd
//! ```

use randfield::limits::{estimate_sigma2_scaling, fdd_covariance_check};
use randfield::{CoefficientFamily, FieldModel, InnovationSpec, Rect, RngStream};

fn main() {
    let model = FieldModel::linear_identity(
        CoefficientFamily::product_decay(3.0).unwrap(),
        InnovationSpec::Gaussian { variance: 1.0 },
    );
    let grid = Rect::square(64).unwrap();
    let fractions = [0.25, 0.5, 0.75, 1.0];
    let mut points = Vec::new();
    for &a in &fractions {
        for &b in &fractions {
            points.push((a, b));
        }
    }

    let sigma = estimate_sigma2_scaling(&model, &[grid], 4000, RngStream::new(11, 0)).unwrap();
    let report = fdd_covariance_check(
        &model,
        &points,
        grid,
        1000,
        sigma.point,
        0.01,
        RngStream::new(12, 0),
    )
    .unwrap();

    println!(
        "normalized sheet covariance vs prod min(s_i, t_i) at {} point pairs",
        report.entries.len()
    );
    println!("worst entries by |z|:");
    let mut entries = report.entries.clone();
    entries.sort_by(|a, b| b.z.abs().total_cmp(&a.z.abs()));
    for e in entries.iter().take(5) {
        println!(
            "  s = ({:.2},{:.2}) t = ({:.2},{:.2})  target {:.4}  estimate {:.4}  z = {:+.2}",
            e.s.0, e.s.1, e.t.0, e.t.1, e.target, e.estimate, e.z
        );
    }
    println!(
        "max |z| = {:.2}  -> {}",
        report.max_abs_z,
        if report.max_abs_z <= 3.0 {
            "all entries within 3 MC SE"
        } else {
            "some entry beyond 3 MC SE"
        }
    );
}
