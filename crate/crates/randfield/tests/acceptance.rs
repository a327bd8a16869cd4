//! Acceptance suite: one test per criterion, each asserting its stated
//! tolerance and printing a `criterion NN: PASS` line with the measured
//! quantities and elapsed time. Run with `--nocapture` (or `--show-output`)
//! to see every line:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use std::time::Instant;

use rayon::prelude::*;

use randfield::cli::{parse_config, run_experiment, ExperimentKind};
use randfield::lattice::{build_summed_area, Rect};
use randfield::limits::{
    estimate_sigma2_scaling, estimate_sigma2_series, fdd_covariance_check, ks_normality_test,
    ks_two_sample, product_normal_reference, sup_cdf_distance_discrete, SeriesParams,
};
use randfield::models::{
    generate_innovations, generate_linear_field, simulate_counterexample, CoefficientFamily,
    ConvolvePath, CounterexampleKind, FieldModel, InnovationSpec, WindowFunction,
};
use randfield::oracle::{
    exact_distribution, moment_inequality_ratio, random_centered_window_table, table_window_eval,
    verify_commuting, verify_marginal_commuting, FiniteSpace,
};
use randfield::projective::{
    cauchy_gaps, condition_series_partial, delta_tilde_partial, estimate_conditional_norm,
    fit_tail_exponent_axis, fit_tail_exponent_diagonal, McParams,
};
use randfield::rng::{cell_counter, RngStream};
use randfield::stats;

const SEED: u64 = 20260808;

fn stream(lane: u64) -> RngStream {
    RngStream::new(SEED, lane)
}

fn budget(elapsed: std::time::Duration, seconds: u64, criterion: u32) {
    assert!(
        elapsed.as_secs() < seconds,
        "criterion {criterion} exceeded its {seconds}s budget: {elapsed:?}"
    );
}

fn sign_product_model() -> FieldModel {
    FieldModel::orthomartingale(
        WindowFunction::new("first-lag", 1, |w| w[0]),
        1,
        InnovationSpec::Rademacher,
    )
}

fn product_q3_model() -> FieldModel {
    FieldModel::linear_identity(
        CoefficientFamily::product_decay(3.0).unwrap(),
        InnovationSpec::Gaussian { variance: 1.0 },
    )
}

#[test]
fn criterion_01_oracle_equivalence_at_small_scale() {
    let t0 = Instant::now();
    // Exact side: full enumeration over the 3x3 sign space.
    let space = FiniteSpace::new((0, 0), 3, 3).unwrap();
    let exact = space
        .partial_sum_variable(
            &[(0, 0), (-1, -1)],
            |w| w[0] * w[1],
            Rect::new(2, 2).unwrap(),
        )
        .unwrap();
    let table = exact_distribution(&exact);
    let mean = table.mean();
    let variance = table.variance();
    assert!(mean.abs() <= 1e-12, "exact mean {mean}");
    assert!((variance - 4.0).abs() <= 1e-12, "exact variance {variance}");

    // Monte Carlo side through the generation pipeline.
    let model = sign_product_model();
    let grid = Rect::new(2, 2).unwrap();
    let draw_stream = stream(1);
    let draws: Vec<f64> = (0..100_000)
        .into_par_iter()
        .map(|rep| {
            let f = model
                .generate(grid, draw_stream.substream(rep as u64))
                .unwrap();
            f.as_slice().iter().sum::<f64>()
        })
        .collect();
    let distance = sup_cdf_distance_discrete(&draws, &table.cumulative());
    assert!(distance < 0.02, "sup-CDF distance {distance}");
    let elapsed = t0.elapsed();
    budget(elapsed, 30, 1);
    println!(
        "criterion 01: PASS — sup-CDF distance {distance:.5} < 0.02, exact mean {mean:.1e}, \
         variance dev {:.1e} ({elapsed:.2?})",
        (variance - 4.0).abs()
    );
}

#[test]
fn criterion_02_clt_reproduction_at_desk_scale() {
    let t0 = Instant::now();
    let model = product_q3_model();
    let rect = Rect::new(256, 256).unwrap();
    let b = model.resolve_truncation().unwrap();
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let target = family.box_sum(b).powi(2);

    // Normalization from its own replicates (never the tested sample); the
    // replicate count keeps the estimator's own noise well below the 5%
    // tolerance (relative SE ~ sqrt(2/reps)).
    let sigma = estimate_sigma2_scaling(&model, &[rect], 6000, stream(20)).unwrap();
    let rel_err = (sigma.point - target).abs() / target;
    assert!(
        rel_err < 0.05,
        "sigma2 {} vs {target} ({rel_err:.4})",
        sigma.point
    );

    let cells = rect.cardinality() as f64;
    let draw_stream = stream(3);
    let draws: Vec<f64> = (0..500)
        .into_par_iter()
        .map(|rep| {
            let f = model
                .generate(rect, draw_stream.substream(rep as u64))
                .unwrap();
            f.as_slice().iter().sum::<f64>() / cells.sqrt()
        })
        .collect();
    let report = ks_normality_test(&draws, 0.01, Some(sigma.point)).unwrap();
    assert!(
        !report.test.reject,
        "normality rejected: p = {}",
        report.test.p_value
    );
    let elapsed = t0.elapsed();
    budget(elapsed, 300, 2);
    println!(
        "criterion 02: PASS — sigma2 rel err {rel_err:.4} < 0.05 (B = {b}), KS p = {:.3} \
         at alpha 0.01 ({elapsed:.2?})",
        report.test.p_value
    );
}

#[test]
fn criterion_03_estimator_cross_validation() {
    let t0 = Instant::now();
    let model = product_q3_model();
    let schedule = [
        Rect::new(64, 64).unwrap(),
        Rect::new(128, 128).unwrap(),
        Rect::new(256, 256).unwrap(),
    ];
    let scaling = estimate_sigma2_scaling(&model, &schedule, 1500, stream(21)).unwrap();
    // Grid above the 20(m + lag) floor shrinks the block standard error.
    let series = estimate_sigma2_series(
        &model,
        SeriesParams {
            m: 16,
            lag_cutoff: 16,
            grid: Some(Rect::new(960, 960).unwrap()),
            inner: 64,
            blocks: 4,
        },
        stream(22),
    )
    .unwrap();
    let combined = (scaling.se.powi(2) + series.se.powi(2)).sqrt();
    let gap = (scaling.point - series.point).abs();
    assert!(
        gap <= 3.0 * combined,
        "series {} vs scaling {} (combined se {combined})",
        series.point,
        scaling.point
    );
    let elapsed = t0.elapsed();
    budget(elapsed, 180, 3);
    println!(
        "criterion 03: PASS — series {:.4} vs scaling {:.4}, gap {gap:.4} <= 3x{combined:.4} \
         ({elapsed:.2?})",
        series.point, scaling.point
    );
}

#[test]
fn criterion_04_projective_thresholds() {
    let t0 = Instant::now();
    for q in [2.5, 3.0] {
        let family = CoefficientFamily::additive_decay(q).unwrap();
        let slope = fit_tail_exponent_diagonal(&family, 8, 128, 1e-9).unwrap();
        let target = 2.0 - 2.0 * q;
        assert!(
            (slope - target).abs() < 0.15,
            "additive q={q}: slope {slope} vs {target}"
        );
    }
    for q in [2.0, 3.0] {
        let family = CoefficientFamily::product_decay(q).unwrap();
        let slope = fit_tail_exponent_axis(&family, 8, 128, 1e-9).unwrap();
        let target = -(2.0 * q - 1.0);
        assert!(
            (slope - target).abs() < 0.1,
            "product q={q}: slope {slope} vs {target}"
        );
    }
    let probes = [16usize, 32, 64, 128, 256];
    let convergent = CoefficientFamily::product_decay(3.0).unwrap();
    let partials = condition_series_partial(&convergent, 1.0, 1, 512, 1e-9).unwrap();
    let gaps = cauchy_gaps(&partials, &probes).unwrap();
    for w in gaps.windows(2) {
        assert!(w[1].1 < w[0].1, "gaps not decreasing: {gaps:?}");
    }
    let final_gap = gaps.last().unwrap().1;
    assert!(final_gap < 1e-3, "final gap {final_gap}");

    let slow = CoefficientFamily::product_decay(1.2).unwrap();
    let partials = condition_series_partial(&slow, 1.0, 1, 512, 1e-8).unwrap();
    let slow_gaps = cauchy_gaps(&partials, &probes).unwrap();
    let min_gap = slow_gaps
        .iter()
        .map(|&(_, g)| g)
        .fold(f64::INFINITY, f64::min);
    assert!(min_gap > 0.01, "q=1.2 gap fell to {min_gap}");
    let elapsed = t0.elapsed();
    budget(elapsed, 60, 4);
    println!(
        "criterion 04: PASS — exponent fits within tolerance; q=3 gap -> {final_gap:.2e}, \
         q=1.2 gaps >= {min_gap:.3} ({elapsed:.2?})"
    );
}

#[test]
fn criterion_05_orthomartingale_collapse() {
    let t0 = Instant::now();
    let model = sign_product_model();
    let params = McParams {
        outer: 4096,
        inner: 64,
    };
    let norm_stream = stream(6);
    let mut max_off_z = 0.0f64;
    for k in 1..=4usize {
        for l in 1..=4usize {
            let est = estimate_conditional_norm(
                &model,
                k,
                l,
                2.0,
                params,
                norm_stream.substream(cell_counter(k as i64, l as i64)),
            )
            .unwrap();
            if (k, l) == (1, 1) {
                assert!(
                    (est.norm - 1.0).abs() <= 1e-12,
                    "norm at (1,1): {}",
                    est.norm
                );
            } else {
                assert!(
                    est.consistent_with(0.0, 3.0),
                    "({k},{l}): power mean {} se {}",
                    est.power_mean,
                    est.power_se
                );
                if est.power_se > 0.0 {
                    max_off_z = max_off_z.max(est.power_mean.abs() / est.power_se);
                }
            }
        }
    }
    let report = delta_tilde_partial(&model, 4, 4, 2.0, params, stream(7)).unwrap();
    let gap = (report.total - 1.0).abs();
    assert!(
        gap <= 3.0 * report.total_se,
        "delta-tilde total {} (se {})",
        report.total,
        report.total_se
    );
    let elapsed = t0.elapsed();
    budget(elapsed, 120, 5);
    println!(
        "criterion 05: PASS — off-lag norms zero within 3 SE (max |z| {max_off_z:.2}), \
         delta-tilde {:.4} vs 1 within 3x{:.4} ({elapsed:.2?})",
        report.total, report.total_se
    );
}

#[test]
fn criterion_06_counterexample_discrimination() {
    let t0 = Instant::now();
    let product =
        simulate_counterexample(CounterexampleKind::Product, 64, 10_000, 1.0, 1.0, stream(8))
            .unwrap();
    let normality = ks_normality_test(&product, 0.001, None).unwrap();
    assert!(normality.test.reject, "product passed normality");

    let reference = product_normal_reference(10_000, 1.0, 1.0, stream(9));
    let two_sample = ks_two_sample(&product, &reference, 0.01).unwrap();
    assert!(
        !two_sample.reject,
        "product vs reference rejected: p = {}",
        two_sample.p_value
    );

    // Fourth-moment oracle: E[Y^4 Z^4] / Var^2 = 9 for a product of
    // independent normals (excess kurtosis 6).
    let ratio = stats::kurtosis_ratio(&product);
    let ratio_se = stats::kurtosis_ratio_se(&product);
    assert!(
        (ratio - 9.0).abs() <= 3.0 * ratio_se,
        "kurtosis ratio {ratio} (se {ratio_se})"
    );

    let sum =
        simulate_counterexample(CounterexampleKind::Sum, 64, 10_000, 1.0, 1.0, stream(10)).unwrap();
    let sum_report = ks_normality_test(&sum, 0.01, Some(2.0)).unwrap();
    assert!(
        !sum_report.test.reject,
        "sum rejected: p = {}",
        sum_report.test.p_value
    );
    let sum_var = stats::sample_variance(&sum);
    assert!(
        (sum_var - 2.0).abs() / 2.0 < 0.05,
        "sum variance {sum_var} vs 2.0"
    );
    let elapsed = t0.elapsed();
    budget(elapsed, 60, 6);
    println!(
        "criterion 06: PASS — product rejected (p {:.1e}), matches reference (p {:.3}), \
         kurtosis ratio {ratio:.2} ~ 9; sum normal (p {:.3}), variance {sum_var:.4} \
         ({elapsed:.2?})",
        normality.test.p_value, two_sample.p_value, sum_report.test.p_value
    );
}

#[test]
fn criterion_07_fdd_against_brownian_sheet() {
    let t0 = Instant::now();
    let model = product_q3_model();
    let grid = Rect::new(128, 128).unwrap();
    let fractions = [0.25, 0.5, 0.75, 1.0];
    let mut points = Vec::new();
    for &a in &fractions {
        for &b in &fractions {
            points.push((a, b));
        }
    }
    // The normalization multiplies every covariance entry, so its own noise
    // must sit well below the per-entry Monte Carlo SE: use an order of
    // magnitude more replicates for sigma than for the sheet sample.
    let sigma = estimate_sigma2_scaling(&model, &[grid], 20_000, stream(11)).unwrap();
    let report =
        fdd_covariance_check(&model, &points, grid, 2000, sigma.point, 0.01, stream(12)).unwrap();
    assert!(
        report.max_abs_z <= 3.0,
        "max |z| = {} (entry target/estimate pairs: {:?})",
        report.max_abs_z,
        report
            .entries
            .iter()
            .filter(|e| e.z.abs() > 3.0)
            .map(|e| (e.s, e.t, e.target, e.estimate))
            .collect::<Vec<_>>()
    );
    let elapsed = t0.elapsed();
    budget(elapsed, 600, 7);
    println!(
        "criterion 07: PASS — {} covariance entries all within 3 MC SE (max |z| {:.2}) \
         ({elapsed:.2?})",
        report.entries.len(),
        report.max_abs_z
    );
}

#[test]
fn criterion_08_m_dependent_approximation_error() {
    let t0 = Instant::now();
    let b = 32usize;
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 })
            .with_truncation(b);
    let grid = Rect::new(128, 128).unwrap();
    let reps = 20;
    let base = stream(13);
    let mut previous = f64::INFINITY;
    let mut summary = Vec::new();
    for m in [2usize, 4, 8, 16] {
        let per_rep: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let rep_stream = base.substream((m * 1000 + rep) as u64);
                let f = model.generate(grid, rep_stream).unwrap();
                let fm = model.m_dependent_approx(m, grid, rep_stream, 1).unwrap();
                let mut acc = 0.0;
                for (i, j, v) in f.iter() {
                    let d = v - fm.get(i, j);
                    acc += d * d;
                }
                acc / grid.cardinality() as f64
            })
            .collect();
        let estimate = stats::mean(&per_rep);
        let se = (stats::sample_variance(&per_rep) / reps as f64).sqrt();
        let target = family.box_sum_squares(b) - family.box_sum_squares(m);
        assert!(
            (estimate - target).abs() <= 3.0 * se,
            "m={m}: estimate {estimate} vs {target} (se {se})"
        );
        assert!(
            estimate < previous,
            "approximation error not decreasing at m={m}"
        );
        previous = estimate;
        summary.push(format!("m={m}: {estimate:.3e}"));
    }
    let elapsed = t0.elapsed();
    budget(elapsed, 120, 8);
    println!(
        "criterion 08: PASS — ||f - f_m||^2 matches coefficient tails and decreases \
         ({}) ({elapsed:.2?})",
        summary.join(", ")
    );
}

#[test]
fn criterion_09_exact_filtration_identities() {
    let t0 = Instant::now();
    let mut max_dev = 0.0f64;
    for (rows, cols) in [(3usize, 3usize), (4, 4)] {
        let space = FiniteSpace::new((0, 0), rows, cols).unwrap();
        let base = stream(14).substream((rows * 10 + cols) as u64);
        for instance in 0..100u64 {
            let x = space.random_variable(base.substream(instance));
            let pick = base.substream(1000 + instance);
            let mut labels = Vec::new();
            for (idx, _) in space.cells().enumerate() {
                labels.push((pick.uniform(idx as u64) * 4.0) as u8);
            }
            let set_of = |target: u8| {
                let mut idx = 0;
                space.cell_set(|_, _| {
                    let hit = labels[idx] == target;
                    idx += 1;
                    hit
                })
            };
            let dev = verify_commuting(&x, set_of(0), set_of(1), set_of(2)).unwrap();
            let marginal = verify_marginal_commuting(&x, 1, 1).max(verify_marginal_commuting(
                &x,
                rows as i64 - 2,
                cols as i64 - 1,
            ));
            max_dev = max_dev.max(dev).max(marginal);
        }
    }
    assert!(max_dev <= 1e-12, "max deviation {max_dev}");
    let elapsed = t0.elapsed();
    budget(elapsed, 60, 9);
    println!(
        "criterion 09: PASS — 200 random variables, max identity deviation {max_dev:.2e} \
         <= 1e-12 ({elapsed:.2?})"
    );
}

#[test]
fn criterion_10_moment_inequality_ratios() {
    let t0 = Instant::now();
    let space = FiniteSpace::new((1, 1), 4, 4).unwrap();
    let mut max_iid_ratio = 0.0f64;
    for p in [2.0, 4.0] {
        for m in 1..=4usize {
            for n in 1..=4usize {
                let report = moment_inequality_ratio(&space, &[(0, 0)], |w| w[0], m, n, p).unwrap();
                assert!(
                    report.ratio <= 1.0 + 1e-12,
                    "iid ratio {} at (m,n,p)=({m},{n},{p})",
                    report.ratio
                );
                max_iid_ratio = max_iid_ratio.max(report.ratio);
            }
        }
    }
    let shifted = FiniteSpace::new((-1, -1), 4, 4).unwrap();
    let mut max_random_ratio = 0.0f64;
    for instance in 0..20u64 {
        let table = random_centered_window_table(2, stream(15).substream(instance));
        let report = moment_inequality_ratio(
            &shifted,
            &[(0, 0), (-1, -1)],
            table_window_eval(&table),
            2,
            2,
            2.0,
        )
        .unwrap();
        assert!(
            report.lhs == 0.0 || report.ratio.is_finite(),
            "instance {instance}: infinite ratio"
        );
        max_random_ratio = max_random_ratio.max(report.ratio);
    }
    let elapsed = t0.elapsed();
    budget(elapsed, 120, 10);
    println!(
        "criterion 10: PASS — iid ratios <= 1 (max {max_iid_ratio:.4}), 20 randomized \
         instances finite (max ratio {max_random_ratio:.4}) ({elapsed:.2?})"
    );
}

#[test]
fn criterion_11_worker_count_and_rerun_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config_text = "experiment.kind = clt\nmodel.variant = linear-identity\n\
                       model.coefficients = product-decay\nmodel.q = 3\n\
                       model.innovation = gaussian\nschedule.scales = 16,32\n\
                       run.reps = 200\nrun.seed = 99\noutput.raw = true\n";
    let mut outputs = Vec::new();
    for (label, workers) in [("w1", 1usize), ("w8", 8), ("w1-again", 1)] {
        let mut config = parse_config(config_text, ExperimentKind::Clt).unwrap();
        config.workers = workers;
        config.out_dir = dir.path().join(label);
        run_experiment(&config).unwrap();
        let clt = std::fs::read(config.out_dir.join("clt.csv")).unwrap();
        let raw = std::fs::read(config.out_dir.join("raw.csv")).unwrap();
        outputs.push((clt, raw));
    }
    assert_eq!(
        outputs[0].0, outputs[1].0,
        "clt.csv differs between 1 and 8 workers"
    );
    assert_eq!(
        outputs[0].1, outputs[1].1,
        "raw.csv differs between 1 and 8 workers"
    );
    assert_eq!(outputs[0].0, outputs[2].0, "clt.csv differs between reruns");
    assert_eq!(outputs[0].1, outputs[2].1, "raw.csv differs between reruns");
    let elapsed = t0.elapsed();
    budget(elapsed, 120, 11);
    println!(
        "criterion 11: PASS — byte-identical CSV outputs for 1 worker, 8 workers and a \
         rerun ({elapsed:.2?})"
    );
}

/// The exact enumeration behind criterion 01's Monte Carlo run also pins the
/// lag-covariance structure the scaling estimator relies on: every nonzero
/// lag has exactly zero covariance for the sign-product field.
#[test]
fn sign_product_lag_covariances_vanish_exactly() {
    let space = FiniteSpace::new((-1, -1), 4, 4).unwrap();
    let f = |w: &[f64]| w[0] * w[1];
    let offsets = [(0i64, 0i64), (-1, -1)];
    let at_origin = space.window_variable(&offsets, f, (0, 0)).unwrap();
    for (k, l) in [(0i64, 1i64), (1, 0), (1, 1), (0, 2), (2, 1), (2, 2)] {
        let shifted = space.window_variable(&offsets, f, (k, l)).unwrap();
        let cov = at_origin.combine(&shifted, |a, b| a * b).expectation();
        assert!(cov.abs() <= 1e-12, "lag ({k},{l}) covariance {cov}");
    }
}

/// Sanity anchor for criterion 02's closed form: the box coefficient sum it
/// normalizes against, recomputed here by direct summation.
#[test]
fn clt_target_box_sum_matches_direct_summation() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model = product_q3_model();
    let b = model.resolve_truncation().unwrap();
    let mut direct = 0.0;
    for i in 0..=b as i64 {
        for j in 0..=b as i64 {
            direct += ((i + 1) as f64).powi(-3) * ((j + 1) as f64).powi(-3);
        }
    }
    assert!((family.box_sum(b) - direct).abs() <= 1e-12);
    // Two independent convolution routes agree on the realized field.
    let grid = Rect::new(48, 48).unwrap();
    let innov = generate_innovations(
        &InnovationSpec::Gaussian { variance: 1.0 },
        grid,
        b,
        stream(16),
    )
    .unwrap();
    let direct_field = generate_linear_field(&family, &innov, b, ConvolvePath::Direct).unwrap();
    let fft_field = generate_linear_field(&family, &innov, b, ConvolvePath::Fft).unwrap();
    let max_diff = direct_field
        .as_slice()
        .iter()
        .zip(fft_field.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-10);
    let table = build_summed_area(&direct_field).unwrap();
    assert!((table.total() - direct_field.as_slice().iter().sum::<f64>()).abs() < 1e-9);
}
