//! Rectangles, realized field windows and prefix-sum tables.
//!
//! The two partial-sum functionals live here: `rect_sum` evaluates the sum of
//! a field over a closed index rectangle in O(1) from a summed-area table,
//! and `sheet_value` evaluates the area-interpolated sheet process at a point
//! of the unit square. Lattice coordinates are 1-based inside a window, so a
//! rectangle `{1..rows} x {1..cols}` matches the index sets the estimators
//! sum over.

use crate::error::{Error, Result};

/// A finite index rectangle `{1..rows} x {1..cols}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    rows: usize,
    cols: usize,
}

impl Rect {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "rectangle sides must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Rect { rows, cols })
    }

    pub fn square(side: usize) -> Result<Self> {
        Rect::new(side, side)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of lattice points.
    pub fn cardinality(&self) -> usize {
        self.rows * self.cols
    }
}

/// A realized rectangular window of a random field.
///
/// `values[r][c]` holds the field value at lattice point
/// `(origin.0 + r, origin.1 + c)`. Generators attach the origin so that
/// margins (extra history kept on the low side of each axis) and interior
/// windows share one coordinate frame; lattice shifts are plain index
/// translations on this array.
#[derive(Debug, Clone)]
pub struct FieldArray {
    rows: usize,
    cols: usize,
    origin: (i64, i64),
    values: Vec<f64>,
}

impl FieldArray {
    /// Builds an array over `[origin.0, origin.0+rows) x [origin.1, origin.1+cols)`
    /// by evaluating `f` at every lattice point.
    pub fn from_fn(
        origin: (i64, i64),
        rows: usize,
        cols: usize,
        mut f: impl FnMut(i64, i64) -> f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "field extent must be positive, got {rows}x{cols}"
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(origin.0 + r as i64, origin.1 + c as i64));
            }
        }
        Ok(FieldArray {
            rows,
            cols,
            origin,
            values,
        })
    }

    /// Wraps row-major values whose first entry sits at `origin`.
    pub fn from_values(
        origin: (i64, i64),
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "field extent must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "value count {} does not match extent {rows}x{cols}",
                values.len()
            )));
        }
        Ok(FieldArray {
            rows,
            cols,
            origin,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Lattice coordinate of the array's low corner.
    pub fn origin(&self) -> (i64, i64) {
        self.origin
    }

    /// Inclusive lattice coordinate of the array's high corner.
    pub fn high(&self) -> (i64, i64) {
        (
            self.origin.0 + self.rows as i64 - 1,
            self.origin.1 + self.cols as i64 - 1,
        )
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= self.origin.0
            && j >= self.origin.1
            && i < self.origin.0 + self.rows as i64
            && j < self.origin.1 + self.cols as i64
    }

    /// Value at lattice point `(i, j)`. Panics outside the extent.
    #[inline]
    pub fn get(&self, i: i64, j: i64) -> f64 {
        debug_assert!(self.contains(i, j), "({i},{j}) outside field extent");
        let r = (i - self.origin.0) as usize;
        let c = (j - self.origin.1) as usize;
        self.values[r * self.cols + c]
    }

    /// Iterates `(i, j, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| {
            (
                self.origin.0 + (k / self.cols) as i64,
                self.origin.1 + (k % self.cols) as i64,
                v,
            )
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Copies the sub-window anchored at lattice `(1,1)` with the given shape.
    pub fn interior(&self, rect: Rect) -> Result<FieldArray> {
        self.window((1, 1), rect)
    }

    /// Copies the sub-window with low corner `lo` and the given shape.
    pub fn window(&self, lo: (i64, i64), rect: Rect) -> Result<FieldArray> {
        let hi = (lo.0 + rect.rows() as i64 - 1, lo.1 + rect.cols() as i64 - 1);
        if !self.contains(lo.0, lo.1) || !self.contains(hi.0, hi.1) {
            return Err(Error::Bounds(format!(
                "window {lo:?}..{hi:?} not inside extent {:?}..{:?}",
                self.origin,
                self.high()
            )));
        }
        FieldArray::from_fn(lo, rect.rows(), rect.cols(), |i, j| self.get(i, j))
    }

    /// Mean over all stored values.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Double prefix-sum table over a field window.
///
/// `cum(i, j) = sum of values over {1..i} x {1..j}` with an implicit zero
/// border at `i = 0` or `j = 0`, accumulated left-to-right, top-to-bottom in
/// a fixed order so results are deterministic. Immutable after construction
/// and safe to share across threads.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    rows: usize,
    cols: usize,
    cum: Vec<f64>, // (rows+1) x (cols+1), zero row/column included
}

/// Builds the summed-area table of a field window.
pub fn build_summed_area(field: &FieldArray) -> Result<SummedAreaTable> {
    if field.rows() == 0 || field.cols() == 0 {
        return Err(Error::Dimension("empty field".into()));
    }
    if field.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(
            "field contains non-finite values".into(),
        ));
    }
    let rows = field.rows();
    let cols = field.cols();
    let w = cols + 1;
    let mut cum = vec![0.0; (rows + 1) * w];
    for r in 1..=rows {
        let mut row_sum = 0.0;
        for c in 1..=cols {
            row_sum += field.as_slice()[(r - 1) * cols + (c - 1)];
            cum[r * w + c] = cum[(r - 1) * w + c] + row_sum;
        }
    }
    Ok(SummedAreaTable { rows, cols, cum })
}

impl SummedAreaTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> Rect {
        Rect {
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Prefix sum over `{1..i} x {1..j}`; `i = 0` or `j = 0` gives 0.
    #[inline]
    pub fn prefix(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= self.rows && j <= self.cols);
        self.cum[i * (self.cols + 1) + j]
    }

    /// Sum over the closed index rectangle `[lo, hi]` (1-based, inclusive)
    /// via four-corner inclusion-exclusion.
    pub fn rect_sum(&self, lo: (usize, usize), hi: (usize, usize)) -> Result<f64> {
        let (r1, c1) = lo;
        let (r2, c2) = hi;
        if r1 < 1 || c1 < 1 || r1 > r2 || c1 > c2 || r2 > self.rows || c2 > self.cols {
            return Err(Error::Bounds(format!(
                "rectangle ({r1},{c1})..({r2},{c2}) outside table {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(
            self.prefix(r2, c2) - self.prefix(r1 - 1, c2) - self.prefix(r2, c1 - 1)
                + self.prefix(r1 - 1, c1 - 1),
        )
    }

    /// Sum over the whole window, the partial sum `S(V, f)`.
    pub fn total(&self) -> f64 {
        self.prefix(self.rows, self.cols)
    }

    /// Area-interpolated sheet value at `t` in the unit square.
    ///
    /// Evaluates `sum_k area([0, rows*t1] x [0, cols*t2] and cell k) * f_k`,
    /// which equals the bilinear interpolation of the prefix table at the
    /// fractional point `(rows*t1, cols*t2)`. Continuous in `t`, equal to
    /// `rect_sum` at integer grid points and to the full partial sum at
    /// `t = (1,1)`.
    pub fn sheet_value(&self, t: (f64, f64)) -> Result<f64> {
        let (t1, t2) = t;
        if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) {
            return Err(Error::Domain(format!(
                "sheet point ({t1}, {t2}) outside the unit square"
            )));
        }
        let x = self.rows as f64 * t1;
        let y = self.cols as f64 * t2;
        // Clamp the base cell so t = 1 reads the last row/column with weight 1.
        let bx = (x.floor() as usize).min(self.rows.saturating_sub(1));
        let by = (y.floor() as usize).min(self.cols.saturating_sub(1));
        let fx = x - bx as f64;
        let fy = y - by as f64;
        let v00 = self.prefix(bx, by);
        let v10 = self.prefix(bx + 1, by);
        let v01 = self.prefix(bx, by + 1);
        let v11 = self.prefix(bx + 1, by + 1);
        Ok((1.0 - fx) * (1.0 - fy) * v00
            + fx * (1.0 - fy) * v10
            + (1.0 - fx) * fy * v01
            + fx * fy * v11)
    }
}
