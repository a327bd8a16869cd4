//! The two routes to the limiting variance: normalized partial-sum
//! variances along a growing schedule, and the lag-window covariance series
//! of the m-dependent approximation. They must agree within combined
//! standard errors.
//!
//! ```text
//! cargo run --example sigma2_estimators
//! ```

use randfield::limits::{estimate_sigma2_scaling, estimate_sigma2_series, SeriesParams};
use randfield::{CoefficientFamily, FieldModel, InnovationSpec, Rect, RngStream};

fn main() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 });
    let b = model.resolve_truncation().unwrap();
    println!(
        "covariance-sum closed form: sigma2 = (sum of box coefficients)^2 = {:.5}",
        family.box_sum(b).powi(2)
    );

    let schedule = [
        Rect::square(32).unwrap(),
        Rect::square(64).unwrap(),
        Rect::square(128).unwrap(),
    ];
    let scaling = estimate_sigma2_scaling(&model, &schedule, 800, RngStream::new(3, 0)).unwrap();
    println!("scaling estimator (Var S_n / |V_n| across scales):");
    for point in &scaling.per_scale {
        println!(
            "  {:>3}x{:<3}  {:.5} +- {:.5}",
            point.rect.rows(),
            point.rect.cols(),
            point.estimate,
            point.se
        );
    }

    let series = estimate_sigma2_series(
        &model,
        SeriesParams {
            m: 8,
            lag_cutoff: 8,
            grid: Some(Rect::square(400).unwrap()),
            inner: 64,
            blocks: 4,
        },
        RngStream::new(4, 0),
    )
    .unwrap();
    println!(
        "series estimator (lag window sum):  {:.5} +- {:.5}",
        series.point, series.se
    );
    println!(
        "cross-validated within 3 combined SE: {}",
        series.agrees_with(&scaling, 3.0)
    );

    // The per-scale square roots probe the plus-norm sequence.
    println!("normalized L2 sequence ||S_n||_2 / |V_n|^(1/2):");
    for (rect, value) in scaling.normalized_l2_sequence() {
        println!("  {:>3}x{:<3}  {value:.5}", rect.rows(), rect.cols());
    }
}
