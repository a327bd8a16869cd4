use super::*;
use crate::lattice::Rect;
use crate::models::{
    simulate_counterexample, CoefficientFamily, CounterexampleKind, FieldModel, InnovationSpec,
    WindowFunction,
};
use crate::rng::RngStream;

fn stream(n: u64) -> RngStream {
    RngStream::new(0x11f1, n)
}

fn squares(sides: &[usize]) -> Vec<Rect> {
    sides.iter().map(|&s| Rect::square(s).unwrap()).collect()
}

#[test]
fn scaling_estimator_is_scale_free_for_iid() {
    let model = FieldModel::iid(InnovationSpec::Gaussian { variance: 2.0 });
    let report = estimate_sigma2_scaling(&model, &squares(&[16, 32, 64]), 400, stream(0)).unwrap();
    for point in &report.per_scale {
        assert!(
            (point.estimate - 2.0).abs() < 3.0 * point.se,
            "scale {:?}: {} (se {})",
            point.rect,
            point.estimate,
            point.se
        );
    }
    // Pairwise agreement across scales.
    for pair in report.per_scale.windows(2) {
        let combined = (pair[0].se.powi(2) + pair[1].se.powi(2)).sqrt();
        assert!((pair[0].estimate - pair[1].estimate).abs() < 3.0 * combined);
    }
}

#[test]
fn scaling_estimator_approaches_covariance_sum_for_linear_fields() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 })
            .with_truncation(5);
    let target = family.box_sum(5).powi(2);
    let report = estimate_sigma2_scaling(&model, &squares(&[32, 64]), 600, stream(1)).unwrap();
    assert!(
        (report.point - target).abs() < 3.0 * report.se + 0.05 * target,
        "point {} vs {target}",
        report.point
    );
}

#[test]
fn scaling_estimator_for_orthomartingale_sign_product_is_one() {
    let model = FieldModel::orthomartingale(
        WindowFunction::new("lag", 1, |w| w[0]),
        1,
        InnovationSpec::Rademacher,
    );
    let report = estimate_sigma2_scaling(&model, &squares(&[24, 48]), 500, stream(2)).unwrap();
    assert!(
        (report.point - 1.0).abs() < 3.0 * report.se,
        "point {} (se {})",
        report.point,
        report.se
    );
}

#[test]
fn scaling_estimator_validates_inputs() {
    let model = FieldModel::iid(InnovationSpec::Rademacher);
    assert!(estimate_sigma2_scaling(&model, &squares(&[8, 16]), 1, stream(3)).is_err());
    let not_increasing = vec![Rect::square(16).unwrap(), Rect::square(16).unwrap()];
    assert!(estimate_sigma2_scaling(&model, &not_increasing, 10, stream(3)).is_err());
}

#[test]
fn series_estimator_iid_reduces_to_the_innovation_variance() {
    let model = FieldModel::iid(InnovationSpec::Gaussian { variance: 2.0 });
    let params = SeriesParams {
        m: 2,
        lag_cutoff: 2,
        grid: Some(Rect::square(128).unwrap()),
        ..SeriesParams::default()
    };
    let report = estimate_sigma2_series(&model, params, stream(4)).unwrap();
    assert!(
        (report.point - 2.0).abs() < 3.0 * report.se,
        "point {} (se {})",
        report.point,
        report.se
    );
}

#[test]
fn series_estimator_sees_the_truncated_coefficient_sum() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 })
            .with_truncation(8);
    let m = 2;
    let params = SeriesParams {
        m,
        lag_cutoff: 10,
        grid: Some(Rect::square(200).unwrap()),
        ..SeriesParams::default()
    };
    let report = estimate_sigma2_series(&model, params, stream(5)).unwrap();
    let target = family.box_sum(m).powi(2);
    assert!(
        (report.point - target).abs() < 3.0 * report.se,
        "point {} vs {target} (se {})",
        report.point,
        report.se
    );
}

#[test]
fn series_and_scaling_estimators_cross_validate() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model = FieldModel::linear_identity(family, InnovationSpec::Gaussian { variance: 1.0 })
        .with_truncation(5);
    let scaling = estimate_sigma2_scaling(&model, &squares(&[32, 64, 96]), 600, stream(6)).unwrap();
    let series = estimate_sigma2_series(
        &model,
        SeriesParams {
            m: 8,
            lag_cutoff: 8,
            grid: Some(Rect::square(320).unwrap()),
            ..SeriesParams::default()
        },
        stream(7),
    )
    .unwrap();
    assert!(
        series.agrees_with(&scaling, 3.0),
        "series {} (se {}) vs scaling {} (se {})",
        series.point,
        series.se,
        scaling.point,
        scaling.se
    );
}

#[test]
fn series_estimator_warns_on_short_lag_cutoff() {
    let model = FieldModel::iid(InnovationSpec::Rademacher);
    let params = SeriesParams {
        m: 8,
        lag_cutoff: 4,
        grid: Some(Rect::square(128).unwrap()),
        ..SeriesParams::default()
    };
    let report = estimate_sigma2_series(&model, params, stream(8)).unwrap();
    assert!(!report.warnings.is_empty());
}

#[test]
fn ks_rejection_rate_is_calibrated_under_the_null() {
    let s = stream(9);
    let mut rejections = 0;
    let runs = 200;
    let n = 200;
    for r in 0..runs {
        let sub = s.substream(r);
        let sample: Vec<f64> = (0..n).map(|c| sub.gaussian(c)).collect();
        let report = ks_normality_test(&sample, 0.05, Some(1.0)).unwrap();
        if report.test.reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / runs as f64;
    let se = (0.05f64 * 0.95 / runs as f64).sqrt();
    assert!((rate - 0.05).abs() < 3.0 * se, "rate {rate}");
}

#[test]
fn ks_rejects_product_normal_draws() {
    let draws = product_normal_reference(10_000, 1.0, 1.0, stream(10));
    let report = ks_normality_test(&draws, 0.001, None).unwrap();
    assert!(report.test.reject, "p = {}", report.test.p_value);
    // The shape diagnostic sees the heavy tails too: kurtosis ratio near 9
    // means excess near 6.
    assert!(report.excess_kurtosis > 3.0);
}

#[test]
fn ks_degenerate_sample_is_an_error() {
    let constant = vec![1.5; 100];
    assert!(matches!(
        ks_normality_test(&constant, 0.05, None),
        Err(crate::error::Error::Degenerate(_))
    ));
}

#[test]
fn counterexample_discrimination_at_desk_scale() {
    let product = simulate_counterexample(
        CounterexampleKind::Product,
        64,
        10_000,
        1.0,
        1.0,
        stream(11),
    )
    .unwrap();
    let normality = ks_normality_test(&product, 0.001, None).unwrap();
    assert!(normality.test.reject);
    let reference = product_normal_reference(10_000, 1.0, 1.0, stream(12));
    let two_sample = ks_two_sample(&product, &reference, 0.01).unwrap();
    assert!(!two_sample.reject, "p = {}", two_sample.p_value);

    let sum =
        simulate_counterexample(CounterexampleKind::Sum, 64, 10_000, 1.0, 1.0, stream(13)).unwrap();
    let normality = ks_normality_test(&sum, 0.01, Some(2.0)).unwrap();
    assert!(!normality.test.reject, "p = {}", normality.test.p_value);
}

#[test]
fn split_halves_give_independent_p_values() {
    let model = FieldModel::iid(InnovationSpec::Gaussian { variance: 1.0 });
    let rect = Rect::square(32).unwrap();
    let cells = rect.cardinality() as f64;
    let draws: Vec<f64> = (0..600u64)
        .map(|rep| {
            let f = model.generate(rect, stream(14).substream(rep)).unwrap();
            f.as_slice().iter().sum::<f64>() / cells.sqrt()
        })
        .collect();
    let first = ks_normality_test(&draws[..300], 0.05, Some(1.0)).unwrap();
    let second = ks_normality_test(&draws[300..], 0.05, Some(1.0)).unwrap();
    assert_ne!(first.test.p_value, second.test.p_value);
    assert!(first.test.p_value > 1e-6 && second.test.p_value > 1e-6);
}

#[test]
fn product_normal_reference_moments() {
    let draws = product_normal_reference(40_000, 1.0, 1.5, stream(15));
    let n = draws.len() as f64;
    let mean = crate::stats::mean(&draws);
    let var = crate::stats::sample_variance(&draws);
    let target_var = 1.5;
    assert!(mean.abs() < 3.0 * (target_var / n).sqrt());
    // SE of the sample variance with product-normal fourth moments.
    let se_var = ((9.0 - 1.0) * target_var * target_var / n).sqrt();
    assert!((var - target_var).abs() < 3.0 * se_var, "var {var}");
    let ratio = crate::stats::kurtosis_ratio(&draws);
    let se = crate::stats::kurtosis_ratio_se(&draws);
    assert!((ratio - 9.0).abs() < 3.0 * se, "ratio {ratio} (se {se})");
}

#[test]
fn two_sample_ks_from_the_same_law_does_not_reject() {
    let a = product_normal_reference(5_000, 1.0, 1.0, stream(16));
    let b = product_normal_reference(5_000, 1.0, 1.0, stream(17));
    let result = ks_two_sample(&a, &b, 0.01).unwrap();
    assert!(!result.reject, "p = {}", result.p_value);
}

#[test]
fn fdd_unit_point_has_unit_normalized_variance() {
    let model = FieldModel::iid(InnovationSpec::Gaussian { variance: 1.0 });
    let report = fdd_covariance_check(
        &model,
        &[(1.0, 1.0)],
        Rect::square(32).unwrap(),
        2000,
        1.0,
        0.01,
        stream(18),
    )
    .unwrap();
    let entry = &report.entries[0];
    assert!(
        (entry.estimate - 1.0).abs() < 3.0 * entry.se,
        "estimate {} (se {})",
        entry.estimate,
        entry.se
    );
}

#[test]
fn fdd_fractional_points_match_overlap_area_oracle_for_iid() {
    // Exact finite-n covariance for the iid field from cell overlap areas.
    let grid = Rect::square(16).unwrap();
    let overlap = |u: f64, k: usize| -> f64 { (16.0 * u - (k as f64 - 1.0)).clamp(0.0, 1.0) };
    let exact_cov = |s: (f64, f64), t: (f64, f64)| -> f64 {
        let axis = |su: f64, tu: f64| -> f64 {
            (1..=16)
                .map(|k| overlap(su, k) * overlap(tu, k))
                .sum::<f64>()
        };
        axis(s.0, t.0) * axis(s.1, t.1) / 256.0
    };
    let points = [(0.33, 0.71), (0.5, 0.5), (0.9, 0.2)];
    let model = FieldModel::iid(InnovationSpec::Gaussian { variance: 1.0 });
    let report = fdd_covariance_check(&model, &points, grid, 4000, 1.0, 0.01, stream(19)).unwrap();
    for entry in &report.entries {
        let target = exact_cov(entry.s, entry.t);
        assert!(
            (entry.estimate - target).abs() < 3.0 * entry.se,
            "({:?},{:?}): {} vs {} (se {})",
            entry.s,
            entry.t,
            entry.estimate,
            target,
            entry.se
        );
    }
}

#[test]
fn fdd_validates_inputs() {
    let model = FieldModel::iid(InnovationSpec::Rademacher);
    let grid = Rect::square(8).unwrap();
    assert!(fdd_covariance_check(&model, &[], grid, 10, 1.0, 0.05, stream(20)).is_err());
    assert!(fdd_covariance_check(&model, &[(0.5, 0.5)], grid, 10, 0.0, 0.05, stream(20)).is_err());
    assert!(fdd_covariance_check(&model, &[(1.5, 0.5)], grid, 10, 1.0, 0.05, stream(20)).is_err());
}
