//! Simulation and verification toolkit for stationary two-parameter random
//! fields.
//!
//! The crate builds causal linear fields, window functionals,
//! orthomartingale differences and their m-dependent approximations on the
//! integer lattice, evaluates rectangular partial sums and the interpolated
//! sheet process through prefix tables, and verifies the limit behavior
//! empirically: central-limit goodness of fit, finite-dimensional covariance
//! against the Brownian sheet, projective-condition diagnostics, and the
//! product/sum counterexamples that separate orthomartingales on general
//! probability structures from those on product spaces. A fully enumerated
//! finite sign space supplies exact oracles for conditional expectations,
//! commuting-filtration identities and the rectangular moment inequality.
//!
//! Everything is reproducible by construction: random draws are pure
//! functions of `(seed, stream id, counter)`, so results are identical
//! across runs and worker counts.
//!
//! The `examples/` directory demonstrates each capability; the `randfield`
//! binary runs batch experiments from config files.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod limits;
pub mod models;
pub mod oracle;
pub mod projective;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{build_summed_area, FieldArray, Rect, SummedAreaTable};
pub use models::{
    apply_functional, estimate_centering, generate_innovations, generate_linear_field,
    generate_orthomartingale_field, m_dependent_approx, simulate_counterexample, CoefficientFamily,
    ConvolvePath, CounterexampleKind, FieldModel, FunctionalK, InnovationSpec, ModelVariant,
    WindowFunction,
};
pub use rng::RngStream;
