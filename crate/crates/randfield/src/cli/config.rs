//! Config parsing for the experiment runner.
//!
//! Grammar: one `section.key = value` assignment per line, `#` starts a
//! comment, blank lines ignored. Parsing is strict: unknown keys, duplicate
//! keys, type mismatches and out-of-range values are all rejected, and every
//! violation is reported with its line number rather than only the first.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::lattice::Rect;
use crate::models::{
    estimate_centering, CoefficientFamily, CounterexampleKind, FieldModel, FunctionalK,
    InnovationSpec, WindowFunction,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    Sigma2,
    Clt,
    Fdd,
    Projective,
    Counterexample,
    Oracle,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Sigma2 => "sigma2",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Fdd => "fdd",
            ExperimentKind::Projective => "projective",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "simulate" => ExperimentKind::Simulate,
            "sigma2" => ExperimentKind::Sigma2,
            "clt" => ExperimentKind::Clt,
            "fdd" => ExperimentKind::Fdd,
            "projective" => ExperimentKind::Projective,
            "counterexample" => ExperimentKind::Counterexample,
            "oracle" => ExperimentKind::Oracle,
            _ => return None,
        })
    }
}

/// Model description as written in the config; builds a [`FieldModel`].
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub variant: String,
    pub innovation: InnovationSpec,
    pub coefficients: Option<CoefficientFamily>,
    pub truncation: Option<usize>,
    pub functional: String,
    pub h: usize,
    pub centering_draws: usize,
    pub g: String,
    pub g_window: usize,
    pub counterexample: CounterexampleKind,
    pub sigma_y2: f64,
    pub sigma_z2: f64,
}

impl ModelConfig {
    pub fn family(&self) -> Result<CoefficientFamily> {
        self.coefficients.clone().ok_or_else(|| {
            Error::Validation(vec![
                "model.coefficients is required for this experiment".into()
            ])
        })
    }

    fn g_function(&self) -> Result<WindowFunction> {
        let arity = self.g_window * self.g_window;
        Ok(match self.g.as_str() {
            "one" => WindowFunction::new("one", arity, |_| 1.0),
            "first-lag" => WindowFunction::new("first-lag", arity, |w| w[0]),
            "sign-product" => WindowFunction::new("sign-product", arity, |w| w.iter().product()),
            other => {
                return Err(Error::Validation(vec![format!(
                    "unknown orthomartingale g '{other}'"
                )]))
            }
        })
    }

    /// Assembles the model, estimating the functional centering empirically
    /// where no analytic constant applies.
    pub fn build(&self, seed: u64) -> Result<FieldModel> {
        let model = match self.variant.as_str() {
            "iid" => FieldModel::iid(self.innovation),
            "linear-identity" => FieldModel::linear_identity(self.family()?, self.innovation),
            "linear-functional" => {
                let family = self.family()?;
                let functional = self.build_functional(&family, seed)?;
                FieldModel::linear_functional(family, functional, self.innovation)
            }
            "orthomartingale" => {
                FieldModel::orthomartingale(self.g_function()?, self.g_window, self.innovation)
            }
            "counterexample" => {
                FieldModel::counterexample(self.counterexample, self.sigma_y2, self.sigma_z2)
            }
            other => {
                return Err(Error::Validation(vec![format!(
                    "unknown model variant '{other}'"
                )]))
            }
        };
        Ok(match self.truncation {
            Some(b) => model.with_truncation(b),
            None => model,
        })
    }

    fn build_functional(&self, family: &CoefficientFamily, seed: u64) -> Result<FunctionalK> {
        let truncation = match self.truncation {
            Some(b) => b,
            None => family.auto_truncation_radius()?,
        };
        match self.functional.as_str() {
            "identity" => Ok(FunctionalK::identity()),
            "window-sum" => FunctionalK::window_sum(self.h),
            "abs" => {
                if let InnovationSpec::Gaussian { variance } = self.innovation {
                    Ok(FunctionalK::abs_for_gaussian(
                        variance * family.box_sum_squares(truncation),
                    ))
                } else {
                    let window = WindowFunction::new("abs", 1, |w: &[f64]| w[0].abs());
                    let (mean, se) = estimate_centering(
                        &window,
                        1,
                        family,
                        truncation,
                        &self.innovation,
                        self.centering_draws,
                        RngStream::new(seed, u64::MAX),
                    )?;
                    Ok(FunctionalK::abs_value(mean).with_centering(mean, se))
                }
            }
            other => Err(Error::Validation(vec![format!(
                "unknown functional '{other}'"
            )])),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub outer: usize,
    pub inner: usize,
    pub m: usize,
    pub lag_cutoff: usize,
    pub kmax: usize,
    pub lmax: usize,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectiveConfig {
    pub mode: String,
    pub alpha: f64,
    pub h: usize,
    pub kmax: usize,
    pub rel_tol: f64,
    pub fit_lo: usize,
    pub fit_hi: usize,
}

#[derive(Debug, Clone)]
pub struct FddConfig {
    pub points: Vec<f64>,
    pub alpha: f64,
    pub sigma_reps: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub mode: String,
    pub rows: usize,
    pub cols: usize,
    pub origin_row: i64,
    pub origin_col: i64,
    pub instances: usize,
    pub window: String,
    pub rect_rows: usize,
    pub rect_cols: usize,
    pub m: usize,
    pub n: usize,
    pub p: f64,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub raw: bool,
    pub model: Option<ModelConfig>,
    pub grid: Option<Rect>,
    pub schedule: Vec<Rect>,
    pub reps: usize,
    pub mc: McConfig,
    pub projective: ProjectiveConfig,
    pub fdd: FddConfig,
    pub oracle: OracleConfig,
    pub counterexample_n: usize,
    pub clt_alpha: f64,
    pub clt_sigma_reps: Option<usize>,
    /// Raw key-value assignments, echoed into every report.
    pub echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn require_model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| {
            Error::Validation(vec![format!(
                "experiment '{}' requires a model section (model.variant = ...)",
                self.kind.name()
            )])
        })
    }

    pub fn require_grid(&self) -> Result<Rect> {
        self.grid.ok_or_else(|| {
            Error::Validation(vec![format!(
                "experiment '{}' requires grid.rows and grid.cols",
                self.kind.name()
            )])
        })
    }

    pub fn require_schedule(&self) -> Result<&[Rect]> {
        if self.schedule.is_empty() {
            return Err(Error::Validation(vec![format!(
                "experiment '{}' requires schedule.scales",
                self.kind.name()
            )]));
        }
        Ok(&self.schedule)
    }

    pub fn require_reps(&self) -> Result<usize> {
        if self.reps == 0 {
            return Err(Error::Validation(vec![format!(
                "experiment '{}' requires run.reps",
                self.kind.name()
            )]));
        }
        Ok(self.reps)
    }
}

struct Reader {
    entries: BTreeMap<String, (String, usize)>,
    errors: Vec<String>,
    consumed: BTreeSet<String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.entries.get(key).map(|(v, _)| v.clone())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|&(_, l)| l).unwrap_or(0)
    }

    fn err(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors
            .push(format!("line {}: {msg}", self.line_of(key)));
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or_else(|| default.to_string())
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T, what: &str) -> T {
        match self.take(key) {
            None => default,
            Some(v) => match v.parse::<T>() {
                Ok(x) => x,
                Err(_) => {
                    self.err(key, format!("{key} expects {what}, got '{v}'"));
                    default
                }
            },
        }
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let v = self.take(key)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(key, format!("{key} expects {what}, got '{v}'"));
                None
            }
        }
    }

    fn one_of(&mut self, key: &str, default: &str, allowed: &[&str]) -> String {
        let v = self.string(key, default);
        if !allowed.contains(&v.as_str()) {
            self.err(
                key,
                format!("{key} must be one of {}, got '{v}'", allowed.join(" | ")),
            );
            return default.to_string();
        }
        v
    }
}

fn parse_raw(text: &str) -> (BTreeMap<String, (String, usize)>, Vec<String>) {
    let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut errors = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            errors.push(format!("line {line_no}: expected 'section.key = value'"));
            continue;
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() || !key.contains('.') {
            errors.push(format!(
                "line {line_no}: keys must be dotted 'section.key', got '{key}'"
            ));
            continue;
        }
        if value.is_empty() {
            errors.push(format!("line {line_no}: empty value for '{key}'"));
            continue;
        }
        if let Some(&(_, first_line)) = entries.get(&key) {
            errors.push(format!(
                "line {line_no}: duplicate key '{key}' (first set on line {first_line})"
            ));
            continue;
        }
        entries.insert(key, (value, line_no));
    }
    (entries, errors)
}

fn parse_scale_list(reader: &mut Reader, key: &str) -> Vec<Rect> {
    let Some(text) = reader.take(key) else {
        return Vec::new();
    };
    let mut scales = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let (r, c) = match part.split_once('x') {
            Some((a, b)) => (a.trim().parse::<usize>(), b.trim().parse::<usize>()),
            None => (part.parse::<usize>(), part.parse::<usize>()),
        };
        match (r, c) {
            (Ok(r), Ok(c)) if r > 0 && c > 0 => scales.push(Rect::new(r, c).unwrap()),
            _ => reader.err(
                key,
                format!("{key} entries must be positive integers or RxC pairs, got '{part}'"),
            ),
        }
    }
    scales
}

fn parse_point_list(reader: &mut Reader, key: &str, default: &[f64]) -> Vec<f64> {
    let Some(text) = reader.take(key) else {
        return default.to_vec();
    };
    let mut out = Vec::new();
    for part in text.split(',') {
        match part.trim().parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => out.push(v),
            _ => reader.err(
                key,
                format!("{key} entries must lie in [0, 1], got '{part}'"),
            ),
        }
    }
    out
}

/// Parses and validates a config for the given experiment kind, reporting
/// every violation at once.
pub fn parse_config(text: &str, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let (entries, mut raw_errors) = parse_raw(text);
    let echo: BTreeMap<String, String> = entries
        .iter()
        .map(|(k, (v, _))| (k.clone(), v.clone()))
        .collect();
    let mut reader = Reader {
        entries,
        errors: Vec::new(),
        consumed: BTreeSet::new(),
    };
    let r = &mut reader;

    if let Some(declared) = r.take("experiment.kind") {
        match ExperimentKind::from_name(&declared) {
            None => r.err(
                "experiment.kind",
                format!("unknown experiment kind '{declared}'"),
            ),
            Some(k) if k != kind => r.err(
                "experiment.kind",
                format!(
                    "config declares kind '{declared}' but the '{}' subcommand was invoked",
                    kind.name()
                ),
            ),
            _ => {}
        }
    }

    let seed = r.parse::<u64>("run.seed", 0, "an unsigned integer");
    let workers = r.parse::<usize>("run.workers", 0, "a worker count (0 = all cores)");
    let reps = r.parse::<usize>("run.reps", 0, "a replicate count");
    let out_dir = PathBuf::from(r.string("output.dir", "out"));
    let raw = r.one_of("output.raw", "false", &["true", "false"]) == "true";

    let model = if r.entries.keys().any(|k| k.starts_with("model.")) {
        parse_model(r)
    } else {
        None
    };

    let grid = {
        let rows = r.parse_opt::<usize>("grid.rows", "a positive integer");
        let cols = r.parse_opt::<usize>("grid.cols", "a positive integer");
        match (rows, cols) {
            (Some(rows), Some(cols)) => match Rect::new(rows, cols) {
                Ok(rect) => Some(rect),
                Err(e) => {
                    r.err("grid.rows", e);
                    None
                }
            },
            (None, None) => None,
            _ => {
                r.err("grid.rows", "grid.rows and grid.cols must be set together");
                None
            }
        }
    };

    let schedule = parse_scale_list(r, "schedule.scales");

    let mc = McConfig {
        outer: r.parse::<usize>("mc.outer", 4096, "an outer draw count"),
        inner: r.parse::<usize>("mc.inner", 64, "an inner draw count"),
        m: r.parse::<usize>("mc.m", 16, "an approximation order"),
        lag_cutoff: r.parse::<usize>("mc.lag_cutoff", 16, "a lag cutoff"),
        kmax: r.parse::<usize>("mc.kmax", 4, "a lag bound"),
        lmax: r.parse::<usize>("mc.lmax", 4, "a lag bound"),
        p: r.parse::<f64>("mc.p", 2.0, "a norm order >= 2"),
    };
    if mc.p < 2.0 {
        r.err("mc.p", "mc.p must be at least 2");
    }

    let projective = ProjectiveConfig {
        mode: r.one_of("projective.mode", "tails", &["tails", "condition", "norms"]),
        alpha: r.parse::<f64>("projective.alpha", 1.0, "a real in (0, 1]"),
        h: r.parse::<usize>("projective.h", 1, "a positive window size"),
        kmax: r.parse::<usize>("projective.kmax", 0, "a positive bound"),
        rel_tol: r.parse::<f64>("projective.rel_tol", 1e-8, "a relative tolerance"),
        fit_lo: r.parse::<usize>("projective.fit_lo", 8, "a fit range bound"),
        fit_hi: r.parse::<usize>("projective.fit_hi", 128, "a fit range bound"),
    };
    if !(projective.alpha > 0.0 && projective.alpha <= 1.0) {
        r.err("projective.alpha", "projective.alpha must lie in (0, 1]");
    }

    let fdd = FddConfig {
        points: parse_point_list(r, "fdd.points", &[0.25, 0.5, 0.75, 1.0]),
        alpha: r.parse::<f64>("fdd.alpha", 0.01, "a significance level"),
        sigma_reps: r.parse_opt::<usize>("fdd.sigma_reps", "a replicate count"),
    };

    let oracle = OracleConfig {
        mode: r.one_of(
            "oracle.mode",
            "commuting",
            &["commuting", "distribution", "moment-ratio"],
        ),
        rows: r.parse::<usize>("oracle.rows", 3, "a row count"),
        cols: r.parse::<usize>("oracle.cols", 3, "a column count"),
        origin_row: r.parse::<i64>("oracle.origin_row", 0, "an integer"),
        origin_col: r.parse::<i64>("oracle.origin_col", 0, "an integer"),
        instances: r.parse::<usize>("oracle.instances", 100, "an instance count"),
        window: r.one_of(
            "oracle.window",
            "sign-product",
            &["iid", "sign-product", "random"],
        ),
        rect_rows: r.parse::<usize>("oracle.rect_rows", 2, "a positive integer"),
        rect_cols: r.parse::<usize>("oracle.rect_cols", 2, "a positive integer"),
        m: r.parse::<usize>("oracle.m", 2, "a rectangle side in 1..=4"),
        n: r.parse::<usize>("oracle.n", 2, "a rectangle side in 1..=4"),
        p: r.parse::<f64>("oracle.p", 2.0, "a norm order >= 2"),
    };

    let counterexample_n = r.parse::<usize>("counterexample.n", 64, "a diagonal index");
    let clt_alpha = r.parse::<f64>("clt.alpha", 0.01, "a significance level");
    let clt_sigma_reps = r.parse_opt::<usize>("clt.sigma_reps", "a replicate count");

    // Strictness: everything left over is unknown.
    let unknown: Vec<String> = reader
        .entries
        .iter()
        .filter(|(k, _)| !reader.consumed.contains(*k))
        .map(|(k, (_, line))| format!("line {line}: unknown key '{k}'"))
        .collect();
    raw_errors.extend(reader.errors);
    raw_errors.extend(unknown);
    raw_errors.sort_by_key(|e| {
        e.strip_prefix("line ")
            .and_then(|rest| rest.split(':').next())
            .and_then(|n| n.parse::<usize>().ok())
            .unwrap_or(0)
    });
    if !raw_errors.is_empty() {
        return Err(Error::Validation(raw_errors));
    }

    Ok(ExperimentConfig {
        kind,
        seed,
        workers,
        out_dir,
        raw,
        model,
        grid,
        schedule,
        reps,
        mc,
        projective,
        fdd,
        oracle,
        counterexample_n,
        clt_alpha,
        clt_sigma_reps,
        echo,
    })
}

fn parse_model(r: &mut Reader) -> Option<ModelConfig> {
    let variant = r.one_of(
        "model.variant",
        "iid",
        &[
            "iid",
            "linear-identity",
            "linear-functional",
            "orthomartingale",
            "counterexample",
        ],
    );
    let innovation_name = r.one_of(
        "model.innovation",
        "gaussian",
        &["rademacher", "gaussian", "uniform"],
    );
    let variance = r.parse::<f64>("model.variance", 1.0, "a positive real");
    let half_width = r.parse::<f64>("model.half_width", 1.0, "a positive real");
    let innovation = match innovation_name.as_str() {
        "rademacher" => Some(InnovationSpec::Rademacher),
        "gaussian" => match InnovationSpec::gaussian(variance) {
            Ok(s) => Some(s),
            Err(e) => {
                r.err("model.variance", e);
                None
            }
        },
        _ => match InnovationSpec::uniform_centered(half_width) {
            Ok(s) => Some(s),
            Err(e) => {
                r.err("model.half_width", e);
                None
            }
        },
    };
    let coefficients = match r.take("model.coefficients") {
        None => {
            // consume model.q even without a family so a stray value is
            // validated rather than flagged unknown
            let _ = r.parse_opt::<f64>("model.q", "a real exceeding 1");
            None
        }
        Some(kind_name) => {
            let q = r.parse_opt::<f64>("model.q", "a real exceeding 1");
            match kind_name.as_str() {
                "delta" => Some(CoefficientFamily::Delta),
                "additive-decay" | "product-decay" => match q {
                    None => {
                        r.err("model.coefficients", "decay families require model.q");
                        None
                    }
                    Some(q) => {
                        let built = if kind_name == "additive-decay" {
                            CoefficientFamily::additive_decay(q)
                        } else {
                            CoefficientFamily::product_decay(q)
                        };
                        match built {
                            Ok(f) => Some(f),
                            Err(e) => {
                                r.err("model.q", e);
                                None
                            }
                        }
                    }
                },
                other => {
                    r.err(
                        "model.coefficients",
                        format!(
                            "model.coefficients must be one of delta | additive-decay | \
                             product-decay, got '{other}'"
                        ),
                    );
                    None
                }
            }
        }
    };
    let truncation = match r.take("model.truncation") {
        None => None,
        Some(v) if v == "auto" => None,
        Some(v) => match v.parse::<usize>() {
            Ok(b) if b >= 1 => Some(b),
            _ => {
                r.err(
                    "model.truncation",
                    format!("model.truncation must be 'auto' or a positive integer, got '{v}'"),
                );
                None
            }
        },
    };
    let functional = r.one_of(
        "model.functional",
        "identity",
        &["identity", "abs", "window-sum"],
    );
    let h = r.parse::<usize>("model.h", 1, "a positive window size");
    if h == 0 {
        r.err("model.h", "model.h must be at least 1");
    }
    let centering_draws = r.parse::<usize>("model.centering_draws", 1_000_000, "a draw count");
    let g = r.one_of(
        "model.g",
        "first-lag",
        &["one", "first-lag", "sign-product"],
    );
    let g_window = r.parse::<usize>("model.g_window", 1, "a positive window size");
    if g_window == 0 {
        r.err("model.g_window", "model.g_window must be at least 1");
    }
    let counterexample = match r
        .one_of("model.counterexample", "product", &["product", "sum"])
        .as_str()
    {
        "sum" => CounterexampleKind::Sum,
        _ => CounterexampleKind::Product,
    };
    let sigma_y2 = r.parse::<f64>("model.sigma_y2", 1.0, "a positive real");
    let sigma_z2 = r.parse::<f64>("model.sigma_z2", 1.0, "a positive real");
    if sigma_y2 <= 0.0 {
        r.err("model.sigma_y2", "model.sigma_y2 must be positive");
    }
    if sigma_z2 <= 0.0 {
        r.err("model.sigma_z2", "model.sigma_z2 must be positive");
    }
    innovation.map(|innovation| ModelConfig {
        variant,
        innovation,
        coefficients,
        truncation,
        functional,
        h,
        centering_draws,
        g,
        g_window,
        counterexample,
        sigma_y2,
        sigma_z2,
    })
}
