use super::*;
use crate::lattice::build_summed_area;
use ::approx::assert_relative_eq;

fn stream(n: u64) -> RngStream {
    RngStream::new(0x5eed, n)
}

/// Mean and standard error of per-block means over a bb x bb partition;
/// robust to short-range correlation in the field.
fn block_mean_se(values: &FieldArray, bb: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let rows = values.rows();
    let cols = values.cols();
    let (o1, o2) = values.origin();
    let mut blocks = Vec::new();
    for br in 0..bb {
        for bc in 0..bb {
            let r0 = br * rows / bb;
            let r1 = (br + 1) * rows / bb;
            let c0 = bc * cols / bb;
            let c1 = (bc + 1) * cols / bb;
            let mut acc = 0.0;
            let mut n = 0usize;
            for r in r0..r1 {
                for c in c0..c1 {
                    acc += f(values.get(o1 + r as i64, o2 + c as i64));
                    n += 1;
                }
            }
            blocks.push(acc / n as f64);
        }
    }
    let m = crate::stats::mean(&blocks);
    let se = (crate::stats::sample_variance(&blocks) / blocks.len() as f64).sqrt();
    (m, se)
}

#[test]
fn coefficient_parametric_values() {
    let add = CoefficientFamily::additive_decay(2.0).unwrap();
    assert_relative_eq!(add.coefficient(0, 0), 1.0);
    let prod = CoefficientFamily::product_decay(2.0).unwrap();
    assert_relative_eq!(prod.coefficient(1, 1), 1.0 / 16.0);
}

#[test]
fn coefficient_is_causal() {
    for family in [
        CoefficientFamily::Delta,
        CoefficientFamily::additive_decay(2.0).unwrap(),
        CoefficientFamily::product_decay(3.0).unwrap(),
        CoefficientFamily::explicit(vec![vec![1.0, 0.5]]).unwrap(),
    ] {
        assert_eq!(family.coefficient(-1, 3), 0.0);
        assert_eq!(family.coefficient(2, -1), 0.0);
    }
}

#[test]
fn decay_exponent_must_exceed_one() {
    assert!(CoefficientFamily::additive_decay(0.5).is_err());
    assert!(CoefficientFamily::product_decay(1.0).is_err());
}

#[test]
fn rademacher_innovations_are_signs() {
    let grid = Rect::new(16, 16).unwrap();
    let eps = generate_innovations(&InnovationSpec::Rademacher, grid, 2, stream(0)).unwrap();
    assert!(eps.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
}

#[test]
fn innovations_are_deterministic_and_window_consistent() {
    let spec = InnovationSpec::Gaussian { variance: 1.0 };
    let a = generate_innovations(&spec, Rect::new(8, 8).unwrap(), 2, stream(1)).unwrap();
    let b = generate_innovations(&spec, Rect::new(8, 8).unwrap(), 2, stream(1)).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    // Larger window: same cells carry the same values.
    let big = generate_innovations(&spec, Rect::new(16, 16).unwrap(), 4, stream(1)).unwrap();
    for (i, j, v) in a.iter() {
        assert_eq!(v.to_bits(), big.get(i, j).to_bits());
    }
}

#[test]
fn uniform_innovation_moments_match_closed_forms() {
    let spec = InnovationSpec::uniform_centered(3.0).unwrap();
    assert_relative_eq!(spec.variance(), 3.0, epsilon = 1e-12);
    // || U ||_p = a / (p+1)^{1/p}; check p = 2 against the variance and
    // p = 4 against the quadrature oracle int_0^a x^4 dx / a = a^4 / 5.
    assert_relative_eq!(spec.lp_norm(2.0), 3.0_f64.sqrt(), epsilon = 1e-12);
    assert_relative_eq!(
        spec.lp_norm(4.0),
        (3.0_f64.powi(4) / 5.0).powf(0.25),
        epsilon = 1e-12
    );
    // Sample moments at scale.
    let grid = Rect::new(500, 500).unwrap();
    let eps = generate_innovations(&spec, grid, 0, stream(22)).unwrap();
    let n = eps.as_slice().len() as f64;
    assert!(eps.as_slice().iter().all(|v| v.abs() <= 3.0));
    let mean = eps.mean();
    assert!(mean.abs() < 3.0 * (3.0 / n).sqrt(), "mean {mean}");
    let var = eps.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
    // Var of U^2 for uniform: E U^4 - (E U^2)^2 = a^4 (1/5 - 1/9).
    let se = (3.0_f64.powi(4) * (1.0 / 5.0 - 1.0 / 9.0) / n).sqrt();
    assert!((var - 3.0).abs() < 3.0 * se, "variance {var}");
}

#[test]
fn gaussian_innovation_variance_matches_spec() {
    let spec = InnovationSpec::Gaussian { variance: 1.0 };
    let eps = generate_innovations(&spec, Rect::new(1000, 1000).unwrap(), 0, stream(2)).unwrap();
    let n = eps.as_slice().len() as f64;
    let var = eps.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
    let se = (2.0 / n).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "var={var}");
}

#[test]
fn delta_kernel_reproduces_innovations() {
    let grid = Rect::new(12, 9).unwrap();
    let eps = generate_innovations(&InnovationSpec::Rademacher, grid, 0, stream(3)).unwrap();
    let z =
        generate_linear_field(&CoefficientFamily::Delta, &eps, 0, ConvolvePath::Direct).unwrap();
    assert_eq!(z.as_slice(), eps.as_slice());
}

#[test]
fn fft_and_direct_paths_agree() {
    let family = CoefficientFamily::additive_decay(1.5).unwrap();
    let b = 8;
    let grid = Rect::new(64, 64).unwrap();
    let eps = generate_innovations(
        &InnovationSpec::Gaussian { variance: 1.0 },
        grid,
        b,
        stream(4),
    )
    .unwrap();
    let direct = generate_linear_field(&family, &eps, b, ConvolvePath::Direct).unwrap();
    let fft = generate_linear_field(&family, &eps, b, ConvolvePath::Fft).unwrap();
    let max_diff = direct
        .as_slice()
        .iter()
        .zip(fft.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-10, "max_diff={max_diff}");
    assert_eq!(direct.origin(), fft.origin());
}

#[test]
fn linear_field_variance_matches_coefficient_sum() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let b = 8;
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 })
            .with_truncation(b);
    let z = model
        .generate(Rect::new(256, 256).unwrap(), stream(5))
        .unwrap();
    let target = family.box_sum_squares(b);
    let (var, se) = block_mean_se(&z, 4, |v| v * v);
    assert!(
        (var - target).abs() < 3.0 * se,
        "var={var} target={target} se={se}"
    );
}

#[test]
fn margin_too_small_is_a_precondition_error() {
    let eps = generate_innovations(
        &InnovationSpec::Rademacher,
        Rect::new(4, 4).unwrap(),
        1,
        stream(6),
    )
    .unwrap();
    let family = CoefficientFamily::product_decay(2.0).unwrap();
    assert!(generate_linear_field(&family, &eps, 5, ConvolvePath::Direct).is_err());
}

#[test]
fn identity_functional_is_a_passthrough() {
    let grid = Rect::new(10, 10).unwrap();
    let eps = generate_innovations(&InnovationSpec::Rademacher, grid, 0, stream(7)).unwrap();
    let out = apply_functional(&FunctionalK::identity(), &eps).unwrap();
    assert_eq!(out.as_slice(), eps.as_slice());
}

#[test]
fn abs_functional_with_analytic_centering_is_mean_zero() {
    // Delta kernel keeps Z = eps, exactly N(0, v), so E|Z| = sqrt(2v/pi).
    let v = 2.0;
    let model = FieldModel::linear_functional(
        CoefficientFamily::Delta,
        FunctionalK::abs_for_gaussian(v),
        InnovationSpec::Gaussian { variance: v },
    );
    let f = model
        .generate(Rect::new(400, 400).unwrap(), stream(8))
        .unwrap();
    let n = f.as_slice().len() as f64;
    let mean = f.mean();
    let sd = crate::stats::sample_variance(f.as_slice()).sqrt();
    assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean={mean}");
}

#[test]
fn window_flattening_order_is_lexicographic() {
    // Field value i*10 + j makes the window contents unambiguous.
    let z = FieldArray::from_fn((1, 1), 3, 3, |i, j| (i * 10 + j) as f64).unwrap();
    let k = FunctionalK::from_parts(
        WindowFunction::new("probe", 4, |w| w[0] + 2.0 * w[1] + 4.0 * w[2] + 8.0 * w[3]),
        2,
        0.0,
        0.0,
        None,
    )
    .unwrap();
    let out = apply_functional(&k, &z).unwrap();
    assert_eq!(out.origin(), (2, 2));
    // Window at (2,2) reads (1,1), (1,2), (2,1), (2,2).
    let expected = 11.0 + 2.0 * 12.0 + 4.0 * 21.0 + 8.0 * 22.0;
    assert_relative_eq!(out.get(2, 2), expected);
}

#[test]
fn m_dependent_equals_field_once_window_covers_support() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let model = FieldModel::linear_identity(family, InnovationSpec::Gaussian { variance: 1.0 })
        .with_truncation(6);
    let grid = Rect::new(32, 32).unwrap();
    let f = model
        .generate(grid, stream(9))
        .unwrap()
        .interior(grid)
        .unwrap();
    let fm = model
        .m_dependent_approx(6, grid, stream(9), 1)
        .unwrap()
        .interior(grid)
        .unwrap();
    assert_eq!(f.as_slice(), fm.as_slice());
}

#[test]
fn m_dependent_l2_error_matches_coefficient_tail() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let b = 8;
    let model =
        FieldModel::linear_identity(family.clone(), InnovationSpec::Gaussian { variance: 1.0 })
            .with_truncation(b);
    let grid = Rect::new(200, 200).unwrap();
    let m = 2;
    let f = model.generate(grid, stream(10)).unwrap();
    let fm = model.m_dependent_approx(m, grid, stream(10), 1).unwrap();
    let diff = FieldArray::from_fn((1, 1), grid.rows(), grid.cols(), |i, j| {
        f.get(i, j) - fm.get(i, j)
    })
    .unwrap();
    let target = family.box_sum_squares(b) - family.box_sum_squares(m);
    let (est, se) = block_mean_se(&diff, 4, |v| v * v);
    assert!(
        (est - target).abs() < 3.0 * se,
        "est={est} target={target} se={se}"
    );
}

#[test]
fn m_dependent_functional_keeps_mean_zero() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let z_variance = family.box_sum_squares(4);
    let model = FieldModel::linear_functional(
        family,
        FunctionalK::abs_for_gaussian(z_variance),
        InnovationSpec::Gaussian { variance: 1.0 },
    )
    .with_truncation(4);
    let grid = Rect::new(48, 48).unwrap();
    let fm = model.m_dependent_approx(2, grid, stream(11), 64).unwrap();
    let (mean, se) = block_mean_se(&fm, 4, |v| v);
    assert!(mean.abs() < 3.0 * se, "mean={mean} se={se}");
}

#[test]
fn nested_mc_approximation_is_m_dependent() {
    // Private per-cell resampling keeps cells with disjoint kept windows
    // independent, so correlations beyond max-distance m must vanish.
    let family = CoefficientFamily::product_decay(2.0).unwrap();
    let z_variance = family.box_sum_squares(4);
    let model = FieldModel::linear_functional(
        family,
        FunctionalK::abs_for_gaussian(z_variance),
        InnovationSpec::Gaussian { variance: 1.0 },
    )
    .with_truncation(4);
    let m = 2;
    let grid = Rect::new(56, 56).unwrap();
    let fm = model.m_dependent_approx(m, grid, stream(21), 16).unwrap();
    let var = fm.as_slice().iter().map(|v| v * v).sum::<f64>() / fm.as_slice().len() as f64;
    for (k, l) in [(3i64, 0i64), (0, 3), (3, 3), (5, 1)] {
        let mut acc = 0.0;
        let mut n = 0;
        for i in 1..=(56 - k) {
            for j in 1..=(56 - l) {
                acc += fm.get(i, j) * fm.get(i + k, j + l);
                n += 1;
            }
        }
        let corr = acc / n as f64 / var;
        assert!(
            corr.abs() < 4.0 / (n as f64).sqrt(),
            "lag ({k},{l}) correlation {corr}"
        );
    }
}

#[test]
fn m_dependent_rejects_unsupported_variants() {
    let grid = Rect::new(8, 8).unwrap();
    let ortho = FieldModel::orthomartingale(
        WindowFunction::new("lag", 1, |w| w[0]),
        1,
        InnovationSpec::Rademacher,
    );
    assert!(matches!(
        ortho.m_dependent_approx(2, grid, stream(12), 8),
        Err(Error::UnsupportedModel(_))
    ));
    let ce = FieldModel::counterexample(CounterexampleKind::Product, 1.0, 1.0);
    assert!(ce.m_dependent_approx(2, grid, stream(12), 8).is_err());
}

#[test]
fn orthomartingale_with_unit_g_is_iid() {
    let grid = Rect::new(20, 20).unwrap();
    let eps = generate_innovations(&InnovationSpec::Rademacher, grid, 1, stream(13)).unwrap();
    // g == 1 over an (unused) 1x1 strict-past window.
    let g = WindowFunction::new("one", 1, |_| 1.0);
    let f = generate_orthomartingale_field(&g, 1, &eps).unwrap();
    for (i, j, v) in f.iter() {
        assert_eq!(v, eps.get(i, j));
    }
}

#[test]
fn orthomartingale_sign_product_has_unit_variance_and_no_lag_correlation() {
    let model = FieldModel::orthomartingale(
        WindowFunction::new("lag", 1, |w| w[0]),
        1,
        InnovationSpec::Rademacher,
    );
    let grid = Rect::new(200, 200).unwrap();
    let f = model.generate(grid, stream(14)).unwrap();
    assert!(f.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    // Exact unit variance: every value is +-1.
    let var = f.as_slice().iter().map(|v| v * v).sum::<f64>() / f.as_slice().len() as f64;
    assert_relative_eq!(var, 1.0);
    for (k, l) in [(0i64, 1i64), (1, 0), (1, 1), (2, 2)] {
        let mut acc = 0.0;
        let mut n = 0;
        for i in 1..=(200 - k) {
            for j in 1..=(200 - l) {
                acc += f.get(i, j) * f.get(i + k, j + l);
                n += 1;
            }
        }
        let corr = acc / n as f64;
        // Products of disjoint sign pairs: variance 1 per term.
        assert!(
            corr.abs() < 4.0 / (n as f64).sqrt(),
            "lag ({k},{l}) corr={corr}"
        );
    }
}

#[test]
fn counterexample_product_at_n1_is_a_product_of_normals() {
    let draws =
        simulate_counterexample(CounterexampleKind::Product, 1, 40_000, 1.0, 1.0, stream(15))
            .unwrap();
    let n = draws.len() as f64;
    let var = crate::stats::sample_variance(&draws);
    // Var(D*E) = 1; SE of the sample variance of a product normal uses its
    // eighth moments, be generous.
    assert!((var - 1.0).abs() < 0.1, "var={var}");
    let ratio = crate::stats::kurtosis_ratio(&draws);
    let se = crate::stats::kurtosis_ratio_se(&draws);
    assert!(
        (ratio - 9.0).abs() < 3.0 * se,
        "kurtosis ratio {ratio} (se {se})"
    );
    assert!(crate::stats::mean(&draws).abs() < 3.0 * (1.0 / n).sqrt());
}

#[test]
fn counterexample_sum_is_exactly_normal_with_summed_variance() {
    let (sy2, sz2) = (1.0, 2.0);
    let draws =
        simulate_counterexample(CounterexampleKind::Sum, 64, 20_000, sy2, sz2, stream(16)).unwrap();
    let var = crate::stats::sample_variance(&draws);
    let target = sy2 + sz2;
    let se = target * (2.0 / draws.len() as f64).sqrt();
    assert!((var - target).abs() < 3.0 * se, "var={var}");
}

#[test]
fn counterexample_rejects_bad_parameters() {
    assert!(simulate_counterexample(CounterexampleKind::Sum, 0, 10, 1.0, 1.0, stream(17)).is_err());
    assert!(simulate_counterexample(CounterexampleKind::Sum, 5, 0, 1.0, 1.0, stream(17)).is_err());
}

#[test]
fn stationarity_lag_moments_agree_across_disjoint_windows() {
    let model = FieldModel::linear_identity(
        CoefficientFamily::product_decay(3.0).unwrap(),
        InnovationSpec::Gaussian { variance: 1.0 },
    )
    .with_truncation(5);
    let f = model
        .generate(Rect::new(256, 128).unwrap(), stream(18))
        .unwrap();
    let lag_cov = |r0: i64, r1: i64| {
        let mut acc = 0.0;
        let mut n = 0;
        for i in r0..r1 {
            for j in 1..128 {
                acc += f.get(i, j) * f.get(i + 1, j);
                n += 1;
            }
        }
        (acc / n as f64, n)
    };
    let (a, na) = lag_cov(1, 120);
    let (b, nb) = lag_cov(129, 248);
    // Conservative SE: treat products as independent with variance ~2.
    let se = (2.0 / na as f64 + 2.0 / nb as f64).sqrt();
    assert!((a - b).abs() < 3.0 * se, "a={a} b={b}");
}

#[test]
fn auto_truncation_meets_tail_budget() {
    let family = CoefficientFamily::product_decay(3.0).unwrap();
    let b = family.auto_truncation_radius().unwrap();
    assert!(b <= 16, "unexpectedly large radius {b}");
    let total = crate::projective::tail_sum(&family, 0, 0, 1e-10).unwrap();
    assert!(total - family.box_sum_squares(b) < 1e-4 * total);
    // Finite supports need no truncation search.
    assert_eq!(
        CoefficientFamily::Delta.auto_truncation_radius().unwrap(),
        0
    );
}

#[test]
fn centering_estimate_matches_half_normal_mean() {
    let v = 1.0;
    let (mean, se) = estimate_centering(
        &WindowFunction::new("abs", 1, |w| w[0].abs()),
        1,
        &CoefficientFamily::Delta,
        0,
        &InnovationSpec::Gaussian { variance: v },
        200_000,
        stream(19),
    )
    .unwrap();
    let target = (2.0 * v / std::f64::consts::PI).sqrt();
    assert!(
        (mean - target).abs() < 3.0 * se,
        "mean={mean} target={target}"
    );
}

#[test]
fn counterexample_grid_matches_partial_sum_scaling() {
    // S_{n,n} of the product field equals Y_n * Z_n; its n-scaled value has
    // the product-normal law. Sanity-check the grid route against the
    // direct route's variance.
    let model = FieldModel::counterexample(CounterexampleKind::Product, 1.0, 1.0);
    let n = 16;
    let mut draws = Vec::new();
    for rep in 0..2000u64 {
        let f = model
            .generate(Rect::new(n, n).unwrap(), stream(20).substream(rep))
            .unwrap();
        let table = build_summed_area(&f).unwrap();
        // S_{n,n} = Y_n Z_n, so M_{n,n}/n = S/n has the product-normal law.
        draws.push(table.total() / n as f64);
    }
    let var = crate::stats::sample_variance(&draws);
    assert!((var - 1.0).abs() < 0.25, "var={var}");
}
