//! Summability diagnostics for the two parametric coefficient families:
//! tail-sum exponent fits against their asymptotic orders, condition-series
//! Cauchy gaps, and the analytic classification. Divergence is never
//! declared from numerics alone.
//!
//! ```text
//! cargo run --example projective_condition
//! ```

use randfield::projective::{
    cauchy_gaps, classify_lipschitz, condition_series_partial, fit_tail_exponent_axis,
    fit_tail_exponent_diagonal, tail_sum,
};
use randfield::CoefficientFamily;

fn main() {
    println!("tail-sum exponent fits over k in 8..=128:");
    for q in [2.5, 3.0] {
        let family = CoefficientFamily::additive_decay(q).unwrap();
        let slope = fit_tail_exponent_diagonal(&family, 8, 128, 1e-9).unwrap();
        println!(
            "  additive q={q}: log A(k,k) slope {slope:.3}, asymptotic order {}",
            2.0 - 2.0 * q
        );
    }
    for q in [2.0, 3.0] {
        let family = CoefficientFamily::product_decay(q).unwrap();
        let slope = fit_tail_exponent_axis(&family, 8, 128, 1e-9).unwrap();
        println!(
            "  product  q={q}: log A(k,1) slope {slope:.3}, asymptotic order {}",
            -(2.0 * q - 1.0)
        );
    }

    println!("\ncondition-series Cauchy gaps P(2K) - P(K):");
    for q in [3.0, 1.2] {
        let family = CoefficientFamily::product_decay(q).unwrap();
        let partials = condition_series_partial(&family, 1.0, 1, 512, 1e-8).unwrap();
        let gaps = cauchy_gaps(&partials, &[16, 32, 64, 128, 256]).unwrap();
        let class = classify_lipschitz(&family);
        print!("  product q={q} ({class:?}):");
        for (k, gap) in gaps {
            print!("  K={k}: {gap:.2e}");
        }
        println!();
    }

    println!("\nsample tail sums A(k, l) for additive q=2.5:");
    let family = CoefficientFamily::additive_decay(2.5).unwrap();
    for (k, l) in [(0, 0), (1, 1), (4, 4), (16, 16)] {
        println!(
            "  A({k:>2},{l:>2}) = {:.6e}",
            tail_sum(&family, k, l, 1e-9).unwrap()
        );
    }
}
