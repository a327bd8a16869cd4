//! The two-martingale counterexample: the same orthomartingale structure on
//! a non-product probability space gives a non-normal diagonal limit for the
//! product field, while the sum field stays normal under sqrt-n scaling.
//! Gaussian increments make both limit laws exact at every n.
//!
//! ```text
//! cargo run --example counterexample
//! ```

use randfield::limits::{ks_normality_test, ks_two_sample, product_normal_reference};
use randfield::stats;
use randfield::{simulate_counterexample, CounterexampleKind, RngStream};

fn main() {
    let (n, reps) = (64, 10_000);

    let product = simulate_counterexample(
        CounterexampleKind::Product,
        n,
        reps,
        1.0,
        1.0,
        RngStream::new(8, 0),
    )
    .unwrap();
    let normality = ks_normality_test(&product, 0.001, None).unwrap();
    println!(
        "product kind (M_nn / n): KS vs normal p = {:.2e}  -> {}",
        normality.test.p_value,
        if normality.test.reject {
            "non-normal"
        } else {
            "looks normal"
        }
    );
    println!(
        "  kurtosis ratio E X^4 / Var^2 = {:.2} (product of normals: 9)",
        stats::kurtosis_ratio(&product)
    );

    let reference = product_normal_reference(reps, 1.0, 1.0, RngStream::new(9, 0));
    let two_sample = ks_two_sample(&product, &reference, 0.01).unwrap();
    println!(
        "  two-sample KS vs exact product-normal reference: p = {:.3} -> {}",
        two_sample.p_value,
        if two_sample.reject {
            "distinct"
        } else {
            "same law"
        }
    );

    let sum = simulate_counterexample(
        CounterexampleKind::Sum,
        n,
        reps,
        1.0,
        1.0,
        RngStream::new(10, 0),
    )
    .unwrap();
    let sum_report = ks_normality_test(&sum, 0.01, Some(2.0)).unwrap();
    println!(
        "sum kind ((Y_n + Z_n)/sqrt n): KS vs N(0, 2) p = {:.3} -> {}, variance {:.4}",
        sum_report.test.p_value,
        if sum_report.test.reject {
            "rejected"
        } else {
            "normal"
        },
        stats::sample_variance(&sum)
    );
}
