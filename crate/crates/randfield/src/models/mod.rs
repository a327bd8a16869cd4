//! Field models: i.i.d. innovations, causal linear fields, window
//! functionals of linear fields, m-dependent approximations,
//! orthomartingale-difference fields and the product/sum counterexample
//! processes built from two one-parameter martingales.
//!
//! Every generator is a pure function of `(model, grid, seed, stream id)`:
//! innovations are drawn at per-cell counters, so a cell has the same value
//! in any window that contains it and replicate-level parallelism cannot
//! change results.

mod approx;
mod convolve;

pub use approx::m_dependent_approx;
pub use convolve::{generate_linear_field, ConvolvePath};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{FieldArray, Rect};
use crate::rng::{cell_counter, RngStream};
use crate::stats;

// Substream tags; innovations use the base stream, everything else derives.
pub(crate) const TAG_MDEP_RESAMPLE: u64 = 0x6d64_6570;
pub(crate) const TAG_CE_ROWS: u64 = 0x6365_726f;
pub(crate) const TAG_CE_COLS: u64 = 0x6365_636f;
pub(crate) const TAG_CENTERING: u64 = 0x6365_6e74;

/// Mean-zero innovation distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationSpec {
    /// Fair signs in `{-1, +1}`.
    Rademacher,
    /// Centered normal with the given variance.
    Gaussian { variance: f64 },
    /// Uniform on `[-half_width, half_width]`.
    UniformCentered { half_width: f64 },
}

impl InnovationSpec {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if variance <= 0.0 || !variance.is_finite() {
            return Err(Error::Parameter(format!(
                "innovation variance must be positive, got {variance}"
            )));
        }
        Ok(InnovationSpec::Gaussian { variance })
    }

    pub fn uniform_centered(half_width: f64) -> Result<Self> {
        if half_width <= 0.0 || !half_width.is_finite() {
            return Err(Error::Parameter(format!(
                "uniform half-width must be positive, got {half_width}"
            )));
        }
        Ok(InnovationSpec::UniformCentered { half_width })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InnovationSpec::Rademacher => 1.0,
            InnovationSpec::Gaussian { variance } => variance,
            InnovationSpec::UniformCentered { half_width } => half_width * half_width / 3.0,
        }
    }

    /// `|| eps ||_p`; analytic for all three families.
    pub fn lp_norm(&self, p: f64) -> f64 {
        match *self {
            InnovationSpec::Rademacher => 1.0,
            InnovationSpec::Gaussian { variance } => {
                variance.sqrt() * stats::normal_abs_moment(p).powf(1.0 / p)
            }
            InnovationSpec::UniformCentered { half_width } => half_width / (p + 1.0).powf(1.0 / p),
        }
    }

    /// Draw at a counter; consumes exactly one counter per cell.
    #[inline]
    pub fn sample(&self, stream: &RngStream, counter: u64) -> f64 {
        match *self {
            InnovationSpec::Rademacher => stream.sign(counter),
            InnovationSpec::Gaussian { variance } => variance.sqrt() * stream.gaussian(counter),
            InnovationSpec::UniformCentered { half_width } => {
                half_width * (2.0 * stream.uniform(counter) - 1.0)
            }
        }
    }
}

/// Causal coefficient arrays `a_{i,j}`, zero off the nonnegative quadrant.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFamily {
    /// `a_{0,0} = 1`, everything else zero: the identity kernel.
    Delta,
    /// `a_{i,j} = (i + j + 1)^{-q}`, square-summable for q > 1.
    AdditiveDecay { q: f64 },
    /// `a_{i,j} = (i + 1)^{-q} (j + 1)^{-q}`, square-summable for q > 1.
    ProductDecay { q: f64 },
    /// Explicit finite table, `a_{i,j} = table[i][j]`.
    Explicit { table: Vec<Vec<f64>> },
}

impl CoefficientFamily {
    pub fn additive_decay(q: f64) -> Result<Self> {
        Self::check_q(q)?;
        Ok(CoefficientFamily::AdditiveDecay { q })
    }

    pub fn product_decay(q: f64) -> Result<Self> {
        Self::check_q(q)?;
        Ok(CoefficientFamily::ProductDecay { q })
    }

    pub fn explicit(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table.iter().any(|r| r.is_empty()) {
            return Err(Error::Dimension(
                "explicit coefficient table is empty".into(),
            ));
        }
        let w = table[0].len();
        if table.iter().any(|r| r.len() != w) {
            return Err(Error::Dimension("ragged explicit coefficient table".into()));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(CoefficientFamily::Explicit { table })
    }

    fn check_q(q: f64) -> Result<()> {
        if !q.is_finite() || q <= 1.0 {
            return Err(Error::Parameter(format!(
                "decay exponent must exceed 1 for square-summability, got {q}"
            )));
        }
        Ok(())
    }

    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            CoefficientFamily::AdditiveDecay { q } | CoefficientFamily::ProductDecay { q } => {
                Some(q)
            }
            _ => None,
        }
    }

    /// `a_{i,j}`; zero for any index outside the causal quadrant.
    pub fn coefficient(&self, i: i64, j: i64) -> f64 {
        if i < 0 || j < 0 {
            return 0.0;
        }
        match self {
            CoefficientFamily::Delta => {
                if i == 0 && j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            CoefficientFamily::AdditiveDecay { q } => ((i + j + 1) as f64).powf(-q),
            CoefficientFamily::ProductDecay { q } => {
                ((i + 1) as f64).powf(-q) * ((j + 1) as f64).powf(-q)
            }
            CoefficientFamily::Explicit { table } => table
                .get(i as usize)
                .and_then(|r| r.get(j as usize))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// Sum of `a_{i,j}` over the box `[0, b]^2`.
    pub fn box_sum(&self, b: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..=b as i64 {
            for j in 0..=b as i64 {
                s += self.coefficient(i, j);
            }
        }
        s
    }

    /// Sum of `a_{i,j}^2` over the box `[0, b]^2`.
    pub fn box_sum_squares(&self, b: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..=b as i64 {
            for j in 0..=b as i64 {
                let a = self.coefficient(i, j);
                s += a * a;
            }
        }
        s
    }

    /// Radius beyond which all coefficients vanish, when the support is finite.
    pub fn finite_support_radius(&self) -> Option<usize> {
        match self {
            CoefficientFamily::Delta => Some(0),
            CoefficientFamily::Explicit { table } => {
                Some(table.len().max(table[0].len()).saturating_sub(1))
            }
            _ => None,
        }
    }

    /// Smallest truncation radius whose omitted tail variance is below
    /// `1e-4` of the total series variance. The chosen radius is recorded in
    /// generation metadata by callers.
    pub fn auto_truncation_radius(&self) -> Result<usize> {
        const BUDGET: f64 = 1e-4;
        const MAX_RADIUS: usize = 4096;
        if let Some(r) = self.finite_support_radius() {
            return Ok(r);
        }
        let total = crate::projective::tail_sum(self, 0, 0, 1e-10)?;
        for b in 1..=MAX_RADIUS {
            if total - self.box_sum_squares(b) < BUDGET * total {
                return Ok(b);
            }
        }
        Err(Error::Parameter(format!(
            "tail variance budget {BUDGET} not reachable within radius {MAX_RADIUS}"
        )))
    }
}

/// Shared evaluation closure over a flattened window of field values.
pub type WindowEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A real-valued function of a flattened window of field values.
#[derive(Clone)]
pub struct WindowFunction {
    name: String,
    arity: usize,
    eval: WindowEval,
}

impl WindowFunction {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WindowFunction {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn eval(&self, window: &[f64]) -> f64 {
        debug_assert_eq!(window.len(), self.arity);
        (self.eval)(window)
    }
}

impl fmt::Debug for WindowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindowFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

/// A centered functional `K` applied to `h x h` windows of a linear field.
///
/// Windows are flattened lexicographically: for the window anchored at
/// `(k, l)` the vector reads `Z` at `(k-h+1, l-h+1), (k-h+1, l-h+2), ...,
/// (k, l)`, rows ascending and columns ascending within each row. The
/// flattening order is normative for asymmetric functionals.
#[derive(Clone, Debug)]
pub struct FunctionalK {
    window: WindowFunction,
    h: usize,
    centering: f64,
    centering_se: f64,
    holder: Option<(f64, f64)>,
}

impl FunctionalK {
    pub fn from_parts(
        window: WindowFunction,
        h: usize,
        centering: f64,
        centering_se: f64,
        holder: Option<(f64, f64)>,
    ) -> Result<Self> {
        if h == 0 {
            return Err(Error::Parameter("window size h must be positive".into()));
        }
        if window.arity() != h * h {
            return Err(Error::Parameter(format!(
                "window function arity {} does not match h^2 = {}",
                window.arity(),
                h * h
            )));
        }
        if let Some((alpha, beta)) = holder {
            if !(alpha > 0.0 && alpha <= 1.0 && beta >= 1.0) {
                return Err(Error::Parameter(format!(
                    "Holder exponents must satisfy 0 < alpha <= 1 <= beta, got ({alpha}, {beta})"
                )));
            }
        }
        Ok(FunctionalK {
            window,
            h,
            centering,
            centering_se,
            holder,
        })
    }

    /// `K(x) = x`, already centered for mean-zero fields.
    pub fn identity() -> Self {
        FunctionalK {
            window: WindowFunction::new("identity", 1, |w| w[0]),
            h: 1,
            centering: 0.0,
            centering_se: 0.0,
            holder: Some((1.0, 1.0)),
        }
    }

    /// `K(x) = |x| - c` with caller-supplied centering constant.
    pub fn abs_value(centering: f64) -> Self {
        FunctionalK {
            window: WindowFunction::new("abs", 1, |w| w[0].abs()),
            h: 1,
            centering,
            centering_se: 0.0,
            holder: Some((1.0, 1.0)),
        }
    }

    /// `K(x) = |x|` centered analytically for a Gaussian field value:
    /// `E |Z| = sqrt(2 v / pi)` when `Z ~ N(0, v)`.
    pub fn abs_for_gaussian(z_variance: f64) -> Self {
        Self::abs_value((2.0 * z_variance / std::f64::consts::PI).sqrt())
    }

    /// Sum over the `h x h` window; mean-zero without centering.
    pub fn window_sum(h: usize) -> Result<Self> {
        FunctionalK::from_parts(
            WindowFunction::new("window-sum", h * h, |w| w.iter().sum()),
            h,
            0.0,
            0.0,
            Some((1.0, 1.0)),
        )
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn centering(&self) -> f64 {
        self.centering
    }

    pub fn centering_se(&self) -> f64 {
        self.centering_se
    }

    pub fn holder_exponents(&self) -> Option<(f64, f64)> {
        self.holder
    }

    pub fn name(&self) -> &str {
        self.window.name()
    }

    /// Replaces the centering constant (e.g. with an estimated mean).
    pub fn with_centering(mut self, centering: f64, se: f64) -> Self {
        self.centering = centering;
        self.centering_se = se;
        self
    }

    #[inline]
    pub fn eval_centered(&self, window: &[f64]) -> f64 {
        self.window.eval(window) - self.centering
    }
}

/// Counterexample flavors from the two-martingale construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// `M_{n,n}/n = (Y_n/sqrt n)(Z_n/sqrt n)`, non-normal limit.
    Product,
    /// `(Y_n + Z_n)/sqrt n`, normal limit under sqrt-n scaling.
    Sum,
}

/// Model variants; each defines a mean-zero stationary field.
#[derive(Debug, Clone)]
pub enum ModelVariant {
    /// The innovations themselves.
    Iid,
    /// Causal linear field `Z_{i,j} = sum a_{r,s} eps_{i-r,j-s}`.
    LinearIdentity { coefficients: CoefficientFamily },
    /// Centered functional of `h x h` windows of a causal linear field.
    LinearFunctional {
        coefficients: CoefficientFamily,
        functional: FunctionalK,
    },
    /// `f = eps_{0,0} * g(eps_{-a,-b}: 1 <= a,b <= window)`; the strict past
    /// in both coordinates makes the field an orthomartingale difference by
    /// construction.
    Orthomartingale { g: WindowFunction, window: usize },
    /// `D_i E_j` or `D_i + E_j` with independent Gaussian increment
    /// sequences; not defined on a two-parameter product space.
    Counterexample {
        kind: CounterexampleKind,
        row_variance: f64,
        col_variance: f64,
    },
}

/// Composite field specification: variant, innovations, truncation radius.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub variant: ModelVariant,
    pub innovations: InnovationSpec,
    truncation: Option<usize>,
}

impl FieldModel {
    pub fn iid(innovations: InnovationSpec) -> Self {
        FieldModel {
            variant: ModelVariant::Iid,
            innovations,
            truncation: None,
        }
    }

    pub fn linear_identity(coefficients: CoefficientFamily, innovations: InnovationSpec) -> Self {
        FieldModel {
            variant: ModelVariant::LinearIdentity { coefficients },
            innovations,
            truncation: None,
        }
    }

    pub fn linear_functional(
        coefficients: CoefficientFamily,
        functional: FunctionalK,
        innovations: InnovationSpec,
    ) -> Self {
        FieldModel {
            variant: ModelVariant::LinearFunctional {
                coefficients,
                functional,
            },
            innovations,
            truncation: None,
        }
    }

    pub fn orthomartingale(g: WindowFunction, window: usize, innovations: InnovationSpec) -> Self {
        FieldModel {
            variant: ModelVariant::Orthomartingale { g, window },
            innovations,
            truncation: None,
        }
    }

    pub fn counterexample(kind: CounterexampleKind, row_variance: f64, col_variance: f64) -> Self {
        FieldModel {
            variant: ModelVariant::Counterexample {
                kind,
                row_variance,
                col_variance,
            },
            innovations: InnovationSpec::Gaussian { variance: 1.0 },
            truncation: None,
        }
    }

    /// Pins the truncation radius instead of the tail-variance budget rule.
    pub fn with_truncation(mut self, radius: usize) -> Self {
        self.truncation = Some(radius);
        self
    }

    /// Truncation radius in effect: explicit, or chosen so the omitted tail
    /// variance is below 1e-4 of the total series variance.
    pub fn resolve_truncation(&self) -> Result<usize> {
        if let Some(b) = self.truncation {
            return Ok(b);
        }
        match &self.variant {
            ModelVariant::LinearIdentity { coefficients }
            | ModelVariant::LinearFunctional { coefficients, .. } => {
                coefficients.auto_truncation_radius()
            }
            _ => Ok(0),
        }
    }

    /// Realizes `f . T_{i,j}` over the window `{1..rows} x {1..cols}`.
    ///
    /// Innovations for the same `(seed, stream)` are shared across grids and
    /// across this method and [`m_dependent_approx`], so realizations couple
    /// pathwise.
    pub fn generate(&self, grid: Rect, stream: RngStream) -> Result<FieldArray> {
        match &self.variant {
            ModelVariant::Iid => {
                let innov = generate_innovations(&self.innovations, grid, 0, stream)?;
                Ok(innov)
            }
            ModelVariant::LinearIdentity { coefficients } => {
                let b = self.resolve_truncation()?;
                let innov = generate_innovations(&self.innovations, grid, b, stream)?;
                generate_linear_field(coefficients, &innov, b, ConvolvePath::Auto)
            }
            ModelVariant::LinearFunctional {
                coefficients,
                functional,
            } => {
                let b = self.resolve_truncation()?;
                let margin = b + functional.h() - 1;
                let innov = generate_innovations(&self.innovations, grid, margin, stream)?;
                let z = generate_linear_field(coefficients, &innov, b, ConvolvePath::Auto)?;
                apply_functional(functional, &z)
            }
            ModelVariant::Orthomartingale { g, window } => {
                let innov = generate_innovations(&self.innovations, grid, *window, stream)?;
                generate_orthomartingale_field(g, *window, &innov)
            }
            ModelVariant::Counterexample {
                kind,
                row_variance,
                col_variance,
            } => {
                let rows_stream = stream.substream(TAG_CE_ROWS);
                let cols_stream = stream.substream(TAG_CE_COLS);
                let sy = row_variance.sqrt();
                let sz = col_variance.sqrt();
                let kind = *kind;
                FieldArray::from_fn((1, 1), grid.rows(), grid.cols(), |i, j| {
                    let d = sy * rows_stream.gaussian(cell_counter(i, 0));
                    let e = sz * cols_stream.gaussian(cell_counter(j, 0));
                    match kind {
                        CounterexampleKind::Product => d * e,
                        CounterexampleKind::Sum => d + e,
                    }
                })
            }
        }
    }

    /// The m-dependent approximation `f_m` realized over the window; see
    /// [`m_dependent_approx`].
    pub fn m_dependent_approx(
        &self,
        m: usize,
        grid: Rect,
        stream: RngStream,
        inner: usize,
    ) -> Result<FieldArray> {
        m_dependent_approx(self, m, grid, stream, inner)
    }

    /// Finite-dependence representation: the set of innovation offsets the
    /// value at a point reads, and the evaluation map. Offsets are relative
    /// to the evaluation point and nonpositive in both coordinates for the
    /// causal variants.
    pub fn dependence(&self) -> Result<Dependence> {
        match &self.variant {
            ModelVariant::Iid => Ok(Dependence {
                offsets: vec![(0, 0)],
                eval: Arc::new(|w| w[0]),
            }),
            ModelVariant::LinearIdentity { coefficients } => {
                let b = self.resolve_truncation()? as i64;
                let mut offsets = Vec::new();
                let mut weights = Vec::new();
                for dr in -b..=0 {
                    for ds in -b..=0 {
                        offsets.push((dr, ds));
                        weights.push(coefficients.coefficient(-dr, -ds));
                    }
                }
                Ok(Dependence {
                    offsets,
                    eval: Arc::new(move |w| {
                        w.iter().zip(&weights).map(|(v, a)| v * a).sum::<f64>()
                    }),
                })
            }
            ModelVariant::LinearFunctional {
                coefficients,
                functional,
            } => {
                let b = self.resolve_truncation()? as i64;
                let h = functional.h() as i64;
                let span = b + h - 1;
                let side = (span + 1) as usize;
                let mut offsets = Vec::with_capacity(side * side);
                for dr in -span..=0 {
                    for ds in -span..=0 {
                        offsets.push((dr, ds));
                    }
                }
                let kernel: Vec<f64> = (0..=b)
                    .flat_map(|r| (0..=b).map(move |s| (r, s)))
                    .map(|(r, s)| coefficients.coefficient(r, s))
                    .collect();
                let functional = functional.clone();
                Ok(Dependence {
                    offsets,
                    eval: Arc::new(move |w| {
                        // w is the eps window [-span..0]^2 row-major.
                        let at = |dr: i64, ds: i64| -> f64 {
                            w[((dr + span) * (span + 1) + (ds + span)) as usize]
                        };
                        let mut zwin = Vec::with_capacity((h * h) as usize);
                        for wi in (1 - h)..=0 {
                            for wj in (1 - h)..=0 {
                                let mut z = 0.0;
                                for r in 0..=b {
                                    for s in 0..=b {
                                        z +=
                                            kernel[(r * (b + 1) + s) as usize] * at(wi - r, wj - s);
                                    }
                                }
                                zwin.push(z);
                            }
                        }
                        functional.eval_centered(&zwin)
                    }),
                })
            }
            ModelVariant::Orthomartingale { g, window } => {
                let mg = *window as i64;
                let mut offsets = vec![(0, 0)];
                for a in 1..=mg {
                    for b in 1..=mg {
                        offsets.push((-a, -b));
                    }
                }
                let g = g.clone();
                Ok(Dependence {
                    offsets,
                    eval: Arc::new(move |w| w[0] * g.eval(&w[1..])),
                })
            }
            ModelVariant::Counterexample { .. } => Err(Error::UnsupportedModel(
                "counterexample field has no product-space innovation representation".into(),
            )),
        }
    }
}

/// Finite-dependence representation of a model value at one point.
#[derive(Clone)]
pub struct Dependence {
    /// Innovation cells read, relative to the evaluation point.
    pub offsets: Vec<(i64, i64)>,
    /// Evaluates the field value from innovations listed in offset order.
    pub eval: WindowEval,
}

impl Dependence {
    #[inline]
    pub fn eval(&self, window: &[f64]) -> f64 {
        (self.eval)(window)
    }
}

impl fmt::Debug for Dependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dependence")
            .field("offsets", &self.offsets.len())
            .finish()
    }
}

/// Draws an i.i.d. innovation array over the grid plus a low-side margin.
///
/// The array covers lattice `[1-margin, rows] x [1-margin, cols]`; values
/// are keyed by absolute cell position, so sub-window reuse is consistent.
pub fn generate_innovations(
    spec: &InnovationSpec,
    grid: Rect,
    margin: usize,
    stream: RngStream,
) -> Result<FieldArray> {
    let origin = (1 - margin as i64, 1 - margin as i64);
    let spec = *spec;
    FieldArray::from_fn(
        origin,
        grid.rows() + margin,
        grid.cols() + margin,
        |i, j| spec.sample(&stream, cell_counter(i, j)),
    )
}

/// Applies a centered window functional to a realized linear field.
///
/// The output at `(k, l)` is `K` of the `h x h` window `{k-h+1..k} x
/// {l-h+1..l}` flattened lexicographically, minus the centering constant.
/// The input must extend at least `h - 1` cells below the output window on
/// both axes.
pub fn apply_functional(functional: &FunctionalK, z: &FieldArray) -> Result<FieldArray> {
    let h = functional.h();
    if z.rows() < h || z.cols() < h {
        return Err(Error::Precondition(format!(
            "field extent {}x{} smaller than window size {h}",
            z.rows(),
            z.cols()
        )));
    }
    let rows = z.rows() - (h - 1);
    let cols = z.cols() - (h - 1);
    let origin = (z.origin().0 + h as i64 - 1, z.origin().1 + h as i64 - 1);
    let mut values = Vec::with_capacity(rows * cols);
    let mut window = vec![0.0; h * h];
    for r in 0..rows {
        for c in 0..cols {
            let (k, l) = (origin.0 + r as i64, origin.1 + c as i64);
            let mut idx = 0;
            for wi in (k - h as i64 + 1)..=k {
                for wj in (l - h as i64 + 1)..=l {
                    window[idx] = z.get(wi, wj);
                    idx += 1;
                }
            }
            values.push(functional.eval_centered(&window));
        }
    }
    FieldArray::from_values(origin, rows, cols, values)
}

/// Builds the orthomartingale-difference field
/// `f . T_{i,j} = eps_{i,j} * g(eps_{i-a,j-b}: 1 <= a,b <= window)`.
///
/// The `g` window is flattened with `a` ascending then `b` ascending. Both
/// defining conditional-expectation identities hold by construction because
/// `g` reads the strict past in both coordinates.
pub fn generate_orthomartingale_field(
    g: &WindowFunction,
    window: usize,
    innovations: &FieldArray,
) -> Result<FieldArray> {
    if g.arity() != window * window {
        return Err(Error::Parameter(format!(
            "g arity {} does not match window^2 = {}",
            g.arity(),
            window * window
        )));
    }
    if innovations.rows() <= window || innovations.cols() <= window {
        return Err(Error::Precondition(format!(
            "innovation margin smaller than orthomartingale window {window}"
        )));
    }
    let rows = innovations.rows() - window;
    let cols = innovations.cols() - window;
    let origin = (
        innovations.origin().0 + window as i64,
        innovations.origin().1 + window as i64,
    );
    let mut values = Vec::with_capacity(rows * cols);
    let mut buf = vec![0.0; window * window];
    for r in 0..rows {
        for c in 0..cols {
            let (i, j) = (origin.0 + r as i64, origin.1 + c as i64);
            let mut idx = 0;
            for a in 1..=window as i64 {
                for b in 1..=window as i64 {
                    buf[idx] = innovations.get(i - a, j - b);
                    idx += 1;
                }
            }
            values.push(innovations.get(i, j) * g.eval(&buf));
        }
    }
    FieldArray::from_values(origin, rows, cols, values)
}

/// Simulates the diagonal counterexample statistics with Gaussian
/// increments, for which the limit laws hold exactly at every `n`:
/// `Product` draws `(Y_n/sqrt n)(Z_n/sqrt n)`, `Sum` draws
/// `(Y_n + Z_n)/sqrt n`.
pub fn simulate_counterexample(
    kind: CounterexampleKind,
    n: usize,
    reps: usize,
    row_variance: f64,
    col_variance: f64,
    stream: RngStream,
) -> Result<Vec<f64>> {
    if n < 1 || reps < 1 {
        return Err(Error::Parameter(format!(
            "counterexample needs n >= 1 and reps >= 1, got n={n}, reps={reps}"
        )));
    }
    if row_variance <= 0.0 || col_variance <= 0.0 {
        return Err(Error::Parameter(
            "increment variances must be positive".into(),
        ));
    }
    let rows_stream = stream.substream(TAG_CE_ROWS);
    let cols_stream = stream.substream(TAG_CE_COLS);
    let sy = row_variance.sqrt();
    let sz = col_variance.sqrt();
    let sqrt_n = (n as f64).sqrt();
    let draws = (0..reps)
        .map(|rep| {
            let base = rep as u64 * n as u64;
            let mut y = 0.0;
            let mut z = 0.0;
            for i in 0..n as u64 {
                y += sy * rows_stream.gaussian(base + i);
                z += sz * cols_stream.gaussian(base + i);
            }
            match kind {
                CounterexampleKind::Product => (y / sqrt_n) * (z / sqrt_n),
                CounterexampleKind::Sum => (y + z) / sqrt_n,
            }
        })
        .collect();
    Ok(draws)
}

/// Estimates the centering constant `E K` by a dedicated pre-pass of
/// independent window draws; returns `(mean, standard error)`.
pub fn estimate_centering(
    window: &WindowFunction,
    h: usize,
    family: &CoefficientFamily,
    truncation: usize,
    innovations: &InnovationSpec,
    draws: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    if window.arity() != h * h {
        return Err(Error::Parameter("window arity must equal h^2".into()));
    }
    if draws < 2 {
        return Err(Error::Parameter(
            "centering pre-pass needs at least 2 draws".into(),
        ));
    }
    let b = truncation as i64;
    let h = h as i64;
    let span = b + h - 1;
    let side = (span + 1) as usize;
    let base = stream.substream(TAG_CENTERING);
    let spec = *innovations;
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let s = base.substream(d as u64);
            let mut eps = vec![0.0; side * side];
            for (idx, e) in eps.iter_mut().enumerate() {
                *e = spec.sample(&s, idx as u64);
            }
            let at = |dr: i64, ds: i64| eps[((dr + span) * (span + 1) + (ds + span)) as usize];
            let mut zwin = Vec::with_capacity((h * h) as usize);
            for wi in (1 - h)..=0 {
                for wj in (1 - h)..=0 {
                    let mut z = 0.0;
                    for r in 0..=b {
                        for s2 in 0..=b {
                            z += family.coefficient(r, s2) * at(wi - r, wj - s2);
                        }
                    }
                    zwin.push(z);
                }
            }
            window.eval(&zwin)
        })
        .collect();
    let mean = stats::mean(&values);
    let se = (stats::sample_variance(&values) / draws as f64).sqrt();
    Ok((mean, se))
}

#[cfg(test)]
mod tests;
