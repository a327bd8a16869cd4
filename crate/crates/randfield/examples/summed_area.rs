//! Prefix-sum tables: rectangle sums in O(1) and the interpolated sheet
//! value at fractional points of the unit square.
//!
//! ```text
//! cargo run --example summed_area
//! ```

use randfield::{build_summed_area, FieldArray, Rect};

fn main() {
    let field = FieldArray::from_fn((1, 1), 4, 4, |i, j| (i * j) as f64).unwrap();
    let table = build_summed_area(&field).unwrap();

    println!("4x4 field with values i*j");
    println!("total S(V, f)            = {}", table.total());
    println!(
        "sum over [2,3]x[2,3]     = {}",
        table.rect_sum((2, 2), (3, 3)).unwrap()
    );
    println!(
        "single cell (4,4)        = {}",
        table.rect_sum((4, 4), (4, 4)).unwrap()
    );

    // The sheet value interpolates between lattice partial sums: at the
    // grid fractions it reproduces rect_sum exactly, between them it scales
    // with the covered area.
    for t in [(0.25, 0.25), (0.5, 0.5), (0.625, 0.5), (1.0, 1.0)] {
        println!(
            "B at t = {t:?}          = {}",
            table.sheet_value(t).unwrap()
        );
    }

    // Monotone in t for nonnegative fields.
    let grid = Rect::new(4, 4).unwrap();
    let mut previous = -1.0;
    for k in 0..=8 {
        let t = k as f64 / 8.0;
        let v = table.sheet_value((t, t)).unwrap();
        assert!(v >= previous);
        previous = v;
    }
    println!("diagonal t -> B(t,t) is nondecreasing over {grid:?}");
}
