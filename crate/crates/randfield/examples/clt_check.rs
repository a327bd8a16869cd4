//! Central limit behavior of normalized rectangular partial sums: simulate
//! `S_n / |V_n|^{1/2}` at a few scales and test against the normal law with
//! the externally estimated variance.
//!
//! ```text
//! cargo run --example clt_check
//! ```

use rayon::prelude::*;

use randfield::limits::{estimate_sigma2_scaling, ks_normality_test};
use randfield::{CoefficientFamily, FieldModel, InnovationSpec, Rect, RngStream};

fn main() {
    let model = FieldModel::linear_identity(
        CoefficientFamily::product_decay(3.0).unwrap(),
        InnovationSpec::Gaussian { variance: 1.0 },
    );
    let reps = 400;

    for side in [32usize, 64, 128] {
        let rect = Rect::square(side).unwrap();
        // Normalization from separate replicates, never the tested sample.
        let sigma =
            estimate_sigma2_scaling(&model, &[rect], 1000, RngStream::new(1, side as u64)).unwrap();
        let draw_stream = RngStream::new(2, side as u64);
        let cells = rect.cardinality() as f64;
        let draws: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let f = model.generate(rect, draw_stream.substream(rep)).unwrap();
                f.as_slice().iter().sum::<f64>() / cells.sqrt()
            })
            .collect();
        let report = ks_normality_test(&draws, 0.01, Some(sigma.point)).unwrap();
        println!(
            "{side:>3}x{side:<3}  sigma2 = {:.4}  KS = {:.4}  p = {:.3}  {}",
            sigma.point,
            report.test.statistic,
            report.test.p_value,
            if report.test.reject {
                "REJECTED"
            } else {
                "consistent with N(0, sigma2)"
            }
        );
    }
}
