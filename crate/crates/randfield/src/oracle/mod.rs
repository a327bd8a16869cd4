//! Exact computations on fully enumerated Rademacher lattice spaces:
//! conditional expectations by partition averaging, commuting-filtration
//! identities, exact distributions of small partial sums, and the moment
//! inequality checked instance by instance.
//!
//! Sigma-fields are subsets of cells; on a finite product space that
//! representation is complete, and quadrant filtrations are the clipped
//! intersections with the space. Probabilities are dyadic outcome counts,
//! so distribution tables are exact.

mod moment;

pub use moment::{moment_inequality_ratio, DTermBreakdown, MomentRatioReport};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::Rect;
use crate::rng::RngStream;

/// Enumeration ceiling: 2^20 outcomes.
pub const MAX_CELLS: usize = 20;

/// A fully enumerated lattice rectangle of i.i.d. signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiniteSpace {
    origin: (i64, i64),
    rows: usize,
    cols: usize,
}

impl FiniteSpace {
    pub fn new(origin: (i64, i64), rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("finite space must be nonempty".into()));
        }
        if rows * cols > MAX_CELLS {
            return Err(Error::Capacity(format!(
                "{rows}x{cols} cells exceed the {MAX_CELLS}-cell enumeration ceiling"
            )));
        }
        Ok(FiniteSpace { origin, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn origin(&self) -> (i64, i64) {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn outcome_count(&self) -> usize {
        1 << self.cell_count()
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= self.origin.0
            && j >= self.origin.1
            && i < self.origin.0 + self.rows as i64
            && j < self.origin.1 + self.cols as i64
    }

    /// Row-major cell index of lattice point `(i, j)`.
    pub fn cell_index(&self, i: i64, j: i64) -> Option<usize> {
        if !self.contains(i, j) {
            return None;
        }
        Some((i - self.origin.0) as usize * self.cols + (j - self.origin.1) as usize)
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (0..self.cols).map(move |c| (self.origin.0 + r as i64, self.origin.1 + c as i64))
        })
    }

    /// Sign of a cell under an outcome; bit set means +1.
    #[inline]
    pub fn sign(outcome: usize, cell: usize) -> f64 {
        if (outcome >> cell) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Cells satisfying a predicate, as a sigma-field descriptor.
    pub fn cell_set(&self, mut pred: impl FnMut(i64, i64) -> bool) -> CellSet {
        let mut mask = 0u32;
        for (i, j) in self.cells() {
            if pred(i, j) {
                mask |= 1 << self.cell_index(i, j).unwrap();
            }
        }
        CellSet { mask }
    }

    /// Quadrant sigma-field `sigma(eps_{r,s}: r <= row_max, s <= col_max)`,
    /// clipped to the space; `None` leaves an axis unbounded.
    pub fn quadrant(&self, row_max: Option<i64>, col_max: Option<i64>) -> CellSet {
        self.cell_set(|i, j| row_max.is_none_or(|r| i <= r) && col_max.is_none_or(|c| j <= c))
    }

    /// Evaluates a window function of the signs around lattice point `at`.
    ///
    /// All window cells must lie inside the space: the boundary stands in
    /// for the infinite past, so no conditional expectation is ever
    /// approximated.
    pub fn window_variable(
        &self,
        offsets: &[(i64, i64)],
        eval: impl Fn(&[f64]) -> f64,
        at: (i64, i64),
    ) -> Result<ExactRandomVariable> {
        let cells = self.window_cells(offsets, at)?;
        let mut values = Vec::with_capacity(self.outcome_count());
        let mut window = vec![0.0; cells.len()];
        for outcome in 0..self.outcome_count() {
            for (slot, &cell) in window.iter_mut().zip(&cells) {
                *slot = Self::sign(outcome, cell);
            }
            values.push(eval(&window));
        }
        Ok(ExactRandomVariable {
            space: *self,
            values,
        })
    }

    /// Partial sum `S(V, f) = sum over shifts (i,j) in {1..k} x {1..l}` of
    /// the window function translated to each shift.
    pub fn partial_sum_variable(
        &self,
        offsets: &[(i64, i64)],
        eval: impl Fn(&[f64]) -> f64,
        rect: Rect,
    ) -> Result<ExactRandomVariable> {
        let mut shifted_cells = Vec::new();
        for i in 1..=rect.rows() as i64 {
            for j in 1..=rect.cols() as i64 {
                shifted_cells.push(self.window_cells(offsets, (i, j))?);
            }
        }
        let mut values = Vec::with_capacity(self.outcome_count());
        let mut window = vec![0.0; offsets.len()];
        for outcome in 0..self.outcome_count() {
            let mut total = 0.0;
            for cells in &shifted_cells {
                for (slot, &cell) in window.iter_mut().zip(cells) {
                    *slot = Self::sign(outcome, cell);
                }
                total += eval(&window);
            }
            values.push(total);
        }
        Ok(ExactRandomVariable {
            space: *self,
            values,
        })
    }

    fn window_cells(&self, offsets: &[(i64, i64)], at: (i64, i64)) -> Result<Vec<usize>> {
        offsets
            .iter()
            .map(|&(dr, ds)| {
                self.cell_index(at.0 + dr, at.1 + ds).ok_or_else(|| {
                    Error::Precondition(format!(
                        "window cell ({}, {}) falls outside the finite space",
                        at.0 + dr,
                        at.1 + ds
                    ))
                })
            })
            .collect()
    }

    /// Arbitrary random variable with independent uniform `[-1, 1]` values
    /// per outcome; the workhorse of the identity sweeps.
    pub fn random_variable(&self, stream: RngStream) -> ExactRandomVariable {
        let values = (0..self.outcome_count() as u64)
            .map(|o| 2.0 * stream.uniform(o) - 1.0)
            .collect();
        ExactRandomVariable {
            space: *self,
            values,
        }
    }

    pub fn variable_from_values(&self, values: Vec<f64>) -> Result<ExactRandomVariable> {
        if values.len() != self.outcome_count() {
            return Err(Error::Dimension(format!(
                "expected {} outcome values, got {}",
                self.outcome_count(),
                values.len()
            )));
        }
        Ok(ExactRandomVariable {
            space: *self,
            values,
        })
    }
}

/// A sigma-field represented by the cells that generate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSet {
    mask: u32,
}

impl CellSet {
    pub const EMPTY: CellSet = CellSet { mask: 0 };

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn union(&self, other: CellSet) -> CellSet {
        CellSet {
            mask: self.mask | other.mask,
        }
    }

    pub fn is_disjoint(&self, other: CellSet) -> bool {
        self.mask & other.mask == 0
    }

    pub fn is_subset_of(&self, other: CellSet) -> bool {
        self.mask & !other.mask == 0
    }
}

/// A random variable tabulated over every outcome of a finite space.
#[derive(Debug, Clone)]
pub struct ExactRandomVariable {
    space: FiniteSpace,
    values: Vec<f64>,
}

impl ExactRandomVariable {
    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expectation(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / self.values.len() as f64)
            .powf(1.0 / p)
    }

    pub fn max_abs_diff(&self, other: &ExactRandomVariable) -> f64 {
        assert_eq!(
            self.space, other.space,
            "variables live on different spaces"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn combine(
        &self,
        other: &ExactRandomVariable,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> ExactRandomVariable {
        assert_eq!(
            self.space, other.space,
            "variables live on different spaces"
        );
        ExactRandomVariable {
            space: self.space,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// `E(X | sigma(cells))` by exact partition averaging over the complement.
pub fn exact_conditional_expectation(
    x: &ExactRandomVariable,
    cells: CellSet,
) -> ExactRandomVariable {
    let n = x.values.len();
    let mask = cells.mask as usize;
    let free_cells = x.space.cell_count() - cells.len();
    let group_size = (1usize << free_cells) as f64;
    let mut sums = vec![0.0; n];
    for (outcome, &v) in x.values.iter().enumerate() {
        sums[outcome & mask] += v;
    }
    let values = (0..n)
        .map(|outcome| sums[outcome & mask] / group_size)
        .collect();
    ExactRandomVariable {
        space: x.space,
        values,
    }
}

/// Checks `E[E(X | F v G) | G v H] = E(X | G)` outcome by outcome for
/// pairwise disjoint cell sets (disjointness gives mutual independence on
/// the product space); returns the maximum absolute deviation.
pub fn verify_commuting(
    x: &ExactRandomVariable,
    f: CellSet,
    g: CellSet,
    h: CellSet,
) -> Result<f64> {
    if !f.is_disjoint(g) || !f.is_disjoint(h) || !g.is_disjoint(h) {
        return Err(Error::Precondition(
            "cell sets must be pairwise disjoint for the independence hypothesis".into(),
        ));
    }
    let inner = exact_conditional_expectation(x, f.union(g));
    let lhs = exact_conditional_expectation(&inner, g.union(h));
    let rhs = exact_conditional_expectation(x, g);
    Ok(lhs.max_abs_diff(&rhs))
}

/// Checks the marginal commuting identity
/// `E[E(X | F_{i,inf}) | F_{inf,j}] = E(X | F_{i,j})` in both orders on the
/// clipped quadrant filtrations; returns the maximum absolute deviation.
pub fn verify_marginal_commuting(x: &ExactRandomVariable, i: i64, j: i64) -> f64 {
    let space = x.space;
    let rows = space.quadrant(Some(i), None);
    let cols = space.quadrant(None, Some(j));
    let both = space.quadrant(Some(i), Some(j));
    let direct = exact_conditional_expectation(x, both);
    let row_first = exact_conditional_expectation(&exact_conditional_expectation(x, rows), cols);
    let col_first = exact_conditional_expectation(&exact_conditional_expectation(x, cols), rows);
    row_first
        .max_abs_diff(&direct)
        .max(col_first.max_abs_diff(&direct))
}

/// Exact distribution of a tabulated random variable: atoms with dyadic
/// outcome counts, so probabilities carry no rounding.
#[derive(Debug, Clone)]
pub struct DistributionTable {
    atoms: Vec<(f64, u64)>,
    total: u64,
}

impl DistributionTable {
    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, value: f64) -> f64 {
        self.atoms
            .iter()
            .find(|(v, _)| *v == value)
            .map(|(_, c)| *c as f64 / self.total as f64)
            .unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / self.total as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .map(|&(v, c)| (v - m) * (v - m) * c as f64)
            .sum::<f64>()
            / self.total as f64
    }

    /// `(value, cumulative probability)` pairs in increasing value order.
    pub fn cumulative(&self) -> Vec<(f64, f64)> {
        let mut acc = 0u64;
        self.atoms
            .iter()
            .map(|&(v, c)| {
                acc += c;
                (v, acc as f64 / self.total as f64)
            })
            .collect()
    }
}

/// Tabulates the exact distribution of `x` by full enumeration.
pub fn exact_distribution(x: &ExactRandomVariable) -> DistributionTable {
    let mut sorted = x.values.clone();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let mut atoms: Vec<(f64, u64)> = Vec::new();
    for v in sorted {
        match atoms.last_mut() {
            Some((value, count)) if *value == v => *count += 1,
            _ => atoms.push((v, 1)),
        }
    }
    DistributionTable {
        atoms,
        total: x.values.len() as u64,
    }
}

/// A random mean-zero function of a sign window, tabulated per sign
/// pattern: uniform values recentered so the exact mean under i.i.d. signs
/// is zero. Pattern bits follow window order with +1 mapping to 1.
pub fn random_centered_window_table(window_cells: usize, stream: RngStream) -> Vec<f64> {
    let n = 1usize << window_cells;
    let mut table: Vec<f64> = (0..n as u64)
        .map(|c| 2.0 * stream.uniform(c) - 1.0)
        .collect();
    let mean = table.iter().sum::<f64>() / n as f64;
    for v in &mut table {
        *v -= mean;
    }
    table
}

/// Evaluates a pattern table as a window function.
pub fn table_window_eval(table: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |window: &[f64]| {
        let mut idx = 0usize;
        for (bit, &v) in window.iter().enumerate() {
            if v > 0.0 {
                idx |= 1 << bit;
            }
        }
        table[idx]
    }
}

/// Independent re-derivation of conditional expectation by hash-grouping,
/// kept for cross-checks.
#[doc(hidden)]
pub fn conditional_expectation_by_grouping(
    x: &ExactRandomVariable,
    cells: CellSet,
) -> ExactRandomVariable {
    let mask = cells.mask() as usize;
    let mut groups: HashMap<usize, (f64, u64)> = HashMap::new();
    for (outcome, &v) in x.values.iter().enumerate() {
        let e = groups.entry(outcome & mask).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let values = (0..x.values.len())
        .map(|outcome| {
            let (sum, count) = groups[&(outcome & mask)];
            sum / count as f64
        })
        .collect();
    x.space.variable_from_values(values).unwrap()
}
