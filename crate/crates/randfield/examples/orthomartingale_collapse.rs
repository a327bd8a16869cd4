//! For orthomartingale-difference fields the conditional expectation of any
//! shifted value given the origin quadrant vanishes except at lag (1,1), so
//! the projective series collapses to the field norm. Estimate the
//! conditional norms by nested Monte Carlo and watch the partial sums
//! stabilize.
//!
//! ```text
//! cargo run --example orthomartingale_collapse
//! ```

use randfield::projective::{delta_tilde_partial, estimate_conditional_norm, McParams};
use randfield::{FieldModel, InnovationSpec, RngStream, WindowFunction};

fn main() {
    // f = eps_{0,0} * eps_{-1,-1}: a sign product with ||f||_2 = 1.
    let model = FieldModel::orthomartingale(
        WindowFunction::new("first-lag", 1, |w| w[0]),
        1,
        InnovationSpec::Rademacher,
    );
    let params = McParams {
        outer: 2048,
        inner: 32,
    };

    println!("conditional norms || E(f . T_kl | F_11) ||_2:");
    for k in 1..=3usize {
        for l in 1..=3usize {
            let est = estimate_conditional_norm(
                &model,
                k,
                l,
                2.0,
                params,
                RngStream::new(5, (k * 10 + l) as u64),
            )
            .unwrap();
            println!(
                "  ({k},{l}): norm {:+.4}  (power mean {:+.5}, se {:.5})",
                est.norm, est.power_mean, est.power_se
            );
        }
    }

    let report = delta_tilde_partial(&model, 4, 4, 2.0, params, RngStream::new(6, 0)).unwrap();
    println!("\nweighted partial sums of the projective series:");
    for k in 1..=4usize {
        for l in 1..=4usize {
            print!("  P({k},{l}) = {:.4}", report.partial(k, l));
        }
        println!();
    }
    println!(
        "total {:.4} +- {:.4}  (collapses to ||f||_2 = 1)",
        report.total, report.total_se
    );
}
