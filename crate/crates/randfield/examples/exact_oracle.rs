//! Exact computations on a fully enumerated sign lattice: conditional
//! expectations, the commuting-filtration identity, the exact distribution
//! of a small partial sum, and the constant-free moment-inequality ratio.
//!
//! ```text
//! cargo run --example exact_oracle
//! ```

use randfield::lattice::Rect;
use randfield::oracle::{
    exact_distribution, moment_inequality_ratio, verify_commuting, verify_marginal_commuting,
    FiniteSpace,
};
use randfield::RngStream;

fn main() {
    let space = FiniteSpace::new((0, 0), 3, 3).unwrap();
    println!(
        "3x3 sign lattice: {} cells, {} outcomes, all enumerated",
        space.cell_count(),
        space.outcome_count()
    );

    // Commuting identity E[E(X | F v G) | G v H] = E(X | G) for disjoint
    // (hence independent) generating sets.
    let x = space.random_variable(RngStream::new(13, 0));
    let f = space.cell_set(|i, _| i == 0);
    let g = space.cell_set(|i, _| i == 1);
    let h = space.cell_set(|i, _| i == 2);
    println!(
        "commuting identity deviation: {:.2e}",
        verify_commuting(&x, f, g, h).unwrap()
    );
    println!(
        "marginal commuting at (i,j) = (1,1): {:.2e}",
        verify_marginal_commuting(&x, 1, 1)
    );

    // Exact distribution of S over a 2x2 rectangle of the sign product
    // f = eps_{0,0} eps_{-1,-1}.
    let s = space
        .partial_sum_variable(
            &[(0, 0), (-1, -1)],
            |w| w[0] * w[1],
            Rect::new(2, 2).unwrap(),
        )
        .unwrap();
    let table = exact_distribution(&s);
    println!("\nexact distribution of S_(2,2) for the sign-product field:");
    for &(value, count) in table.atoms() {
        println!("  P(S = {value:+.0}) = {count:>3}/{}", table.total());
    }
    println!("mean {} variance {}", table.mean(), table.variance());

    // Moment inequality: both sides computed exactly; the universal constant
    // is unknown so only the ratio is reported.
    let iid_space = FiniteSpace::new((1, 1), 4, 4).unwrap();
    for p in [2.0, 4.0] {
        let report = moment_inequality_ratio(&iid_space, &[(0, 0)], |w| w[0], 4, 4, p).unwrap();
        println!(
            "\nmoment inequality at (m,n) = (4,4), p = {p}: lhs {:.4}, constant-free rhs {:.4}, \
             ratio {:.4}",
            report.lhs, report.rhs, report.ratio
        );
    }
}
