//! Run configuration files (TOML).
//!
//! Coefficients are numbers or expression strings in `t`. Coordinates in
//! polynomial terms are 1-based; delay slot 0 is the undelayed state and
//! slot `i` the state delayed by the `i`-th delay.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{Criterion, FtsParams, RadiusSettings, RobustSettings};
use crate::dde::{DelaySpec, History, ToleranceSettings};
use crate::expr::parse_expression;
use crate::majorant::{Factor, Monomial, PolynomialField, PolynomialMajorant, PolynomialTerm};
use crate::reduction::CoefficientMode;
use crate::system::{LinearDelayTerm, VectorDelaySystem};
use crate::timefn::{MatrixFn, TimeFn};

pub const PAPER_6_1: &str = include_str!("../configs/paper_6_1.cfg");
pub const PAPER_6_1_B: &str = include_str!("../configs/paper_6_1_b.cfg");

/// Bundled configurations by file name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "paper_6_1.cfg" => Some(PAPER_6_1),
        "paper_6_1_b.cfg" => Some(PAPER_6_1_B),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config error in `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    /// `λ(t) I`.
    Scalar(Scalar),
    Rows(Vec<Vec<Scalar>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    reduction: RawReduction,
    #[serde(default)]
    analysis: RawAnalysis,
    robust: Option<RawRobust>,
    perturbation: Option<RawPerturbation>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    dim: Option<usize>,
    #[serde(default)]
    t0: f64,
    #[serde(default)]
    delays: Vec<Scalar>,
    a0: Option<MatrixSpec>,
    a1: Option<MatrixSpec>,
    #[serde(default)]
    delayed_linear: Vec<RawDelayedLinear>,
    #[serde(default)]
    term: Vec<RawTerm>,
    #[serde(default)]
    forcing_amplitude: f64,
    forcing_shape: Option<Vec<Scalar>>,
    history: Option<RawHistory>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelayedLinear {
    slot: usize,
    matrix: MatrixSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coordinate: usize,
    coeff: Scalar,
    factors: Vec<RawFactor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    coord: usize,
    #[serde(default)]
    slot: usize,
    power: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    kind: String,
    values: Option<Vec<Scalar>>,
    times: Option<Vec<f64>>,
    rows: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rtol: Option<f64>,
    atol: Option<f64>,
    cap: Option<f64>,
    horizon: Option<f64>,
    max_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReduction {
    coefficients: Option<String>,
    p: Option<Scalar>,
    c: Option<Scalar>,
    margin: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    criterion: Option<String>,
    tail_fraction: Option<f64>,
    decay_ratio: Option<f64>,
    bisect_tol: Option<f64>,
    max_iterations: Option<usize>,
    q_max: Option<f64>,
    r_max: Option<f64>,
    angles: Option<usize>,
    zeta_tilde: Option<f64>,
    grid_points: Option<usize>,
    violation_tol: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    window: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobust {
    p_hat: Option<f64>,
    c_hat: Option<f64>,
    #[serde(default)]
    l_hat: Vec<RawPolyTerm>,
    y_min: Option<f64>,
    y_max: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolyTerm {
    coeff: f64,
    degree: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    #[serde(default)]
    delays: Vec<Scalar>,
    #[serde(default)]
    term: Vec<RawMajorantTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMajorantTerm {
    coeff: Scalar,
    exponents: Vec<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    svg: Option<bool>,
    grid_points: Option<usize>,
}

/// Explicit constant-coefficient data for the robust criterion.
#[derive(Debug, Clone)]
pub struct RobustConfig {
    pub p_hat: Option<f64>,
    pub c_hat: Option<f64>,
    pub l_hat: Vec<(f64, u32)>,
    pub settings: RobustSettings,
}

#[derive(Debug, Clone)]
pub struct PerturbationConfig {
    pub majorant: PolynomialMajorant,
    pub delays: Vec<TimeFn>,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub radius: RadiusSettings,
    /// Use the bounded criterion for forced systems and the configured
    /// decaying one otherwise.
    pub criterion_auto: bool,
    pub q_max: f64,
    pub r_max: f64,
    pub angles: usize,
    pub zeta_tilde: f64,
    pub grid_points: usize,
    pub violation_tol: f64,
    pub fts: Option<FtsParams>,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub svg: bool,
    pub grid_points: usize,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: Option<VectorDelaySystem>,
    pub tol: ToleranceSettings,
    /// Simulated time after `t0`.
    pub horizon: f64,
    pub coefficients: CoefficientMode,
    pub margin: f64,
    pub analysis: AnalysisConfig,
    pub robust: Option<RobustConfig>,
    pub perturbation: Option<PerturbationConfig>,
    pub output: OutputConfig,
}

impl AnalysisConfig {
    /// Radius settings for a system with the given forcing amplitude.
    pub fn radius_for(&self, forcing_amplitude: f64) -> RadiusSettings {
        let mut settings = self.radius;
        if self.criterion_auto && forcing_amplitude > 0.0 {
            settings.criterion = Criterion::Bounded;
        }
        settings
    }
}

impl RunConfig {
    /// Applies command-line overrides.
    pub fn with_overrides(mut self, horizon: Option<f64>, rtol: Option<f64>, cap: Option<f64>) -> Result<Self, ConfigError> {
        if let Some(h) = horizon {
            positive("--horizon", h)?;
            self.horizon = h;
            self.analysis.radius.horizon = h;
            if let Some(fts) = self.analysis.fts.as_mut() {
                fts.window = fts.window.min(h);
            }
        }
        if let Some(r) = rtol {
            positive("--rtol", r)?;
            self.tol.rtol = r;
        }
        if let Some(c) = cap {
            positive("--cap", c)?;
            self.tol.cap = c;
        }
        self.analysis.radius.tol = self.tol;
        if let Some(vs) = &self.system {
            vs.validate(vs.t0 + self.horizon)
                .map_err(|e| field_err("--horizon", e.to_string()))?;
        }
        Ok(self)
    }

    pub fn t_end(&self) -> f64 {
        self.system.as_ref().map_or(0.0, |s| s.t0) + self.horizon
    }

    /// The system, or a field error naming `[system]`.
    pub fn require_system(&self) -> Result<&VectorDelaySystem, ConfigError> {
        self.system
            .as_ref()
            .ok_or_else(|| field_err("system", "this command needs a [system] section"))
    }
}

/// Reads and validates a configuration file. A missing file whose name is
/// that of a bundled configuration loads the bundled text.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            match bundled(name) {
                Some(text) if !path.exists() => text.to_string(),
                _ => {
                    return Err(ConfigError::Io {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })
                }
            }
        }
    };
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    if text.trim().is_empty() {
        return Err(field_err("system", "config is empty; expected a [system] section"));
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if raw.system.is_none() && raw.robust.is_none() {
        return Err(field_err("system", "missing [system] section"));
    }

    let solver = &raw.solver;
    let mut tol = ToleranceSettings::default();
    if let Some(v) = solver.rtol {
        positive("solver.rtol", v)?;
        tol.rtol = v;
    }
    if let Some(v) = solver.atol {
        if !(v >= 0.0) {
            return Err(field_err("solver.atol", "must be nonnegative"));
        }
        tol.atol = v;
    }
    if let Some(v) = solver.cap {
        positive("solver.cap", v)?;
        tol.cap = v;
    }
    if let Some(v) = solver.max_steps {
        tol.max_steps = v;
    }
    let horizon = solver.horizon.unwrap_or(50.0);
    positive("solver.horizon", horizon)?;

    let system = match &raw.system {
        Some(s) => Some(build_system(s, horizon)?),
        None => None,
    };

    let coefficients = match raw.reduction.coefficients.as_deref().unwrap_or("auto") {
        "auto" => CoefficientMode::Auto,
        "numerical" => CoefficientMode::Numerical,
        "closed_form" => {
            let p = raw
                .reduction
                .p
                .as_ref()
                .ok_or_else(|| field_err("reduction.p", "closed_form coefficients need p"))?;
            let c = raw
                .reduction
                .c
                .as_ref()
                .ok_or_else(|| field_err("reduction.c", "closed_form coefficients need c"))?;
            CoefficientMode::ClosedForm {
                p: time_fn("reduction.p", p)?,
                c: time_fn("reduction.c", c)?,
            }
        }
        other => {
            return Err(field_err(
                "reduction.coefficients",
                format!("unknown mode '{other}' (expected auto, numerical or closed_form)"),
            ))
        }
    };
    let margin = raw.reduction.margin.unwrap_or(1e-3);
    if !(margin >= 0.0) {
        return Err(field_err("reduction.margin", "must be nonnegative"));
    }

    let analysis = build_analysis(&raw.analysis, horizon, tol)?;
    let robust = raw.robust.as_ref().map(build_robust).transpose()?;
    let perturbation = raw
        .perturbation
        .as_ref()
        .map(|p| build_perturbation(p, horizon))
        .transpose()?;
    let output = OutputConfig {
        dir: raw.output.dir.clone(),
        svg: raw.output.svg.unwrap_or(false),
        grid_points: raw.output.grid_points.unwrap_or(2000),
    };
    if output.grid_points < 2 {
        return Err(field_err("output.grid_points", "must be at least 2"));
    }

    Ok(RunConfig {
        system,
        tol,
        horizon,
        coefficients,
        margin,
        analysis,
        robust,
        perturbation,
        output,
    })
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

fn time_fn(field: &str, s: &Scalar) -> Result<TimeFn, ConfigError> {
    match s {
        Scalar::Num(v) => Ok(TimeFn::Const(*v)),
        Scalar::Text(text) => parse_expression(text)
            .map(TimeFn::from_expr)
            .map_err(|e| field_err(field, e.to_string())),
    }
}

fn matrix(field: &str, spec: &MatrixSpec, n: usize) -> Result<MatrixFn, ConfigError> {
    match spec {
        MatrixSpec::Scalar(s) => Ok(MatrixFn::scalar_identity(n, time_fn(field, s)?)),
        MatrixSpec::Rows(rows) => {
            if rows.len() != n {
                return Err(field_err(field, format!("expected {n} rows, got {}", rows.len())));
            }
            let mut entries = Vec::with_capacity(n * n);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(field_err(
                        format!("{field}[{i}]"),
                        format!("expected {n} entries, got {}", row.len()),
                    ));
                }
                for (j, e) in row.iter().enumerate() {
                    entries.push(time_fn(&format!("{field}[{i}][{j}]"), e)?);
                }
            }
            Ok(MatrixFn::new(n, entries))
        }
    }
}

fn build_system(raw: &RawSystem, horizon: f64) -> Result<VectorDelaySystem, ConfigError> {
    let n = raw.dim.ok_or_else(|| field_err("system.dim", "missing required field"))?;
    if n == 0 {
        return Err(field_err("system.dim", "must be positive"));
    }
    let a0 = raw
        .a0
        .as_ref()
        .ok_or_else(|| field_err("system.a0", "missing required field"))?;
    let a0 = matrix("system.a0", a0, n)?;
    let delays = raw
        .delays
        .iter()
        .enumerate()
        .map(|(i, d)| time_fn(&format!("system.delays[{i}]"), d))
        .collect::<Result<Vec<_>, _>>()?;
    let t_end = raw.t0 + horizon;
    let spec = DelaySpec::sample(&delays, raw.t0, t_end).map_err(|e| field_err("system.delays", e.to_string()))?;
    let m = delays.len();

    let mut vs = VectorDelaySystem::linear(a0).with_t0(raw.t0).with_delays(delays);
    if let Some(a1) = &raw.a1 {
        vs = vs.with_split(matrix("system.a1", a1, n)?);
    }
    for (k, d) in raw.delayed_linear.iter().enumerate() {
        let field = format!("system.delayed_linear[{k}]");
        if d.slot == 0 || d.slot > m {
            return Err(field_err(
                format!("{field}.slot"),
                format!("delay slot {} does not exist ({m} delays declared)", d.slot),
            ));
        }
        vs = vs.with_delayed_linear(LinearDelayTerm {
            slot: d.slot,
            matrix: matrix(&format!("{field}.matrix"), &d.matrix, n)?,
        });
    }

    let mut monomials = Vec::with_capacity(raw.term.len());
    for (k, term) in raw.term.iter().enumerate() {
        let field = format!("system.term[{k}]");
        if term.coordinate == 0 || term.coordinate > n {
            return Err(field_err(
                format!("{field}.coordinate"),
                format!("must be in 1..={n}, got {}", term.coordinate),
            ));
        }
        if term.factors.is_empty() {
            return Err(field_err(format!("{field}.factors"), "a term needs at least one factor"));
        }
        let mut factors = Vec::with_capacity(term.factors.len());
        for (j, f) in term.factors.iter().enumerate() {
            let ff = format!("{field}.factors[{j}]");
            if f.coord == 0 || f.coord > n {
                return Err(field_err(format!("{ff}.coord"), format!("must be in 1..={n}, got {}", f.coord)));
            }
            if f.slot > m {
                return Err(field_err(
                    format!("{ff}.slot"),
                    format!("delay slot {} does not exist ({m} delays declared)", f.slot),
                ));
            }
            if f.power == 0 {
                return Err(field_err(format!("{ff}.power"), "must be at least 1"));
            }
            factors.push(Factor {
                coord: f.coord - 1,
                slot: f.slot,
                power: f.power,
            });
        }
        monomials.push(Monomial {
            coordinate: term.coordinate - 1,
            coeff: time_fn(&format!("{field}.coeff"), &term.coeff)?,
            factors,
        });
    }
    let field = PolynomialField::new(n, m, monomials).map_err(|e| field_err("system.term", e.to_string()))?;
    vs = vs.with_nonlinear(field);

    if !(raw.forcing_amplitude >= 0.0) {
        return Err(field_err("system.forcing_amplitude", "must be nonnegative"));
    }
    let shape = match &raw.forcing_shape {
        Some(entries) => {
            if entries.len() != n {
                return Err(field_err(
                    "system.forcing_shape",
                    format!("expected {n} entries, got {}", entries.len()),
                ));
            }
            entries
                .iter()
                .enumerate()
                .map(|(i, e)| time_fn(&format!("system.forcing_shape[{i}]"), e))
                .collect::<Result<Vec<_>, _>>()?
        }
        None if raw.forcing_amplitude > 0.0 => {
            return Err(field_err("system.forcing_shape", "required when forcing_amplitude > 0"))
        }
        None => vec![TimeFn::zero(); n],
    };
    vs = vs.with_forcing(raw.forcing_amplitude, shape);

    let history = raw
        .history
        .as_ref()
        .ok_or_else(|| field_err("system.history", "missing required section"))?;
    vs = vs.with_history(build_history(history, n, raw.t0, spec.h_bar)?);

    vs.validate(t_end).map_err(|e| field_err("system", e.to_string()))?;
    Ok(vs)
}

fn build_history(raw: &RawHistory, n: usize, t0: f64, h_bar: f64) -> Result<History, ConfigError> {
    let values = || {
        raw.values
            .as_ref()
            .ok_or_else(|| field_err("system.history.values", "missing required field"))
            .and_then(|v| {
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(field_err(
                        "system.history.values",
                        format!("expected {n} entries, got {}", v.len()),
                    ))
                }
            })
    };
    match raw.kind.as_str() {
        "constant" => {
            let values = values()?
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Scalar::Num(x) => Ok(*x),
                    Scalar::Text(_) => Err(field_err(
                        format!("system.history.values[{i}]"),
                        "constant histories take numbers",
                    )),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(History::constant(values))
        }
        "expression" => Ok(History::Expression(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| time_fn(&format!("system.history.values[{i}]"), v))
                .collect::<Result<Vec<_>, _>>()?,
        )),
        "grid" => {
            let times = raw
                .times
                .clone()
                .ok_or_else(|| field_err("system.history.times", "missing required field"))?;
            let rows = raw
                .rows
                .clone()
                .ok_or_else(|| field_err("system.history.rows", "missing required field"))?;
            let start = t0 - h_bar;
            if times.first().is_none_or(|&a| a > start + 1e-12) || times.last().is_none_or(|&b| b < t0 - 1e-12) {
                return Err(field_err(
                    "system.history.times",
                    format!("grid must cover [{start}, {t0}]"),
                ));
            }
            if rows.iter().any(|r| r.len() != n) {
                return Err(field_err("system.history.rows", format!("every row needs {n} entries")));
            }
            History::grid(times, rows).map_err(|e| field_err("system.history", e))
        }
        other => Err(field_err(
            "system.history.kind",
            format!("unknown kind '{other}' (expected constant, expression or grid)"),
        )),
    }
}

fn build_analysis(raw: &RawAnalysis, horizon: f64, tol: ToleranceSettings) -> Result<AnalysisConfig, ConfigError> {
    let tail_fraction = raw.tail_fraction.unwrap_or(0.2);
    let decay_ratio = raw.decay_ratio.unwrap_or(0.5);
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(field_err("analysis.tail_fraction", "must lie in (0, 1]"));
    }
    positive("analysis.decay_ratio", decay_ratio)?;
    let decaying = Criterion::Decaying {
        tail_fraction,
        decay_ratio,
    };
    let mode = raw.criterion.as_deref().unwrap_or("auto");
    let criterion_auto = mode == "auto";
    let criterion = match mode {
        "bounded" => Criterion::Bounded,
        "decaying" | "auto" => decaying,
        other => {
            return Err(field_err(
                "analysis.criterion",
                format!("unknown criterion '{other}' (expected auto, bounded or decaying)"),
            ))
        }
    };
    let bisect_tol = raw.bisect_tol.unwrap_or(1e-3);
    positive("analysis.bisect_tol", bisect_tol)?;
    let q_max = raw.q_max.unwrap_or(100.0);
    positive("analysis.q_max", q_max)?;
    let r_max = raw.r_max.unwrap_or(100.0);
    positive("analysis.r_max", r_max)?;
    let zeta_tilde = raw.zeta_tilde.unwrap_or(0.5);
    positive("analysis.zeta_tilde", zeta_tilde)?;
    let fts = match (raw.alpha, raw.beta) {
        (Some(alpha), Some(beta)) => Some(FtsParams {
            alpha,
            beta,
            window: raw.window.unwrap_or(horizon),
            gamma: raw.gamma,
        }),
        (None, None) => None,
        (None, Some(_)) => return Err(field_err("analysis.alpha", "beta given without alpha")),
        (Some(_), None) => return Err(field_err("analysis.beta", "alpha given without beta")),
    };
    Ok(AnalysisConfig {
        radius: RadiusSettings {
            criterion,
            horizon,
            bisect_tol,
            max_iterations: raw.max_iterations.unwrap_or(40),
            tol,
        },
        criterion_auto,
        q_max,
        r_max,
        angles: raw.angles.unwrap_or(200),
        zeta_tilde,
        grid_points: raw.grid_points.unwrap_or(2000),
        violation_tol: raw.violation_tol.unwrap_or(1e-4),
        fts,
    })
}

fn build_robust(raw: &RawRobust) -> Result<RobustConfig, ConfigError> {
    let mut settings = RobustSettings::default();
    if let Some(v) = raw.y_min {
        positive("robust.y_min", v)?;
        settings.y_min = v;
    }
    if let Some(v) = raw.y_max {
        positive("robust.y_max", v)?;
        settings.y_max = v;
    }
    if let Some(v) = raw.samples {
        settings.samples = v;
    }
    Ok(RobustConfig {
        p_hat: raw.p_hat,
        c_hat: raw.c_hat,
        l_hat: raw.l_hat.iter().map(|t| (t.coeff, t.degree)).collect(),
        settings,
    })
}

fn build_perturbation(raw: &RawPerturbation, horizon: f64) -> Result<PerturbationConfig, ConfigError> {
    let delays = raw
        .delays
        .iter()
        .enumerate()
        .map(|(i, d)| time_fn(&format!("perturbation.delays[{i}]"), d))
        .collect::<Result<Vec<_>, _>>()?;
    DelaySpec::sample(&delays, 0.0, horizon).map_err(|e| field_err("perturbation.delays", e.to_string()))?;
    let args = delays.len() + 1;
    let terms = raw
        .term
        .iter()
        .enumerate()
        .map(|(k, t)| {
            if t.exponents.len() != args {
                return Err(field_err(
                    format!("perturbation.term[{k}].exponents"),
                    format!("expected {args} exponents, got {}", t.exponents.len()),
                ));
            }
            Ok(PolynomialTerm::new(
                time_fn(&format!("perturbation.term[{k}].coeff"), &t.coeff)?,
                t.exponents.clone(),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let majorant =
        PolynomialMajorant::perturbation(args, terms).map_err(|e| field_err("perturbation.term", e.to_string()))?;
    Ok(PerturbationConfig { majorant, delays })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_load() {
        for text in [PAPER_6_1, PAPER_6_1_B] {
            let cfg = parse_config(text).unwrap();
            let vs = cfg.system.as_ref().unwrap();
            assert_eq!(vs.dim, 2);
            assert_eq!(vs.delays.len(), 1);
            assert!(vs.a0.as_scalar_identity().is_some());
            assert_eq!(vs.forcing_amplitude, 1.0);
            assert_eq!(cfg.horizon, 50.0);
        }
        let a = parse_config(PAPER_6_1).unwrap();
        let lambda = a.system.unwrap().a0.as_scalar_identity().unwrap();
        assert_eq!(lambda.eval(0.0), -3.0);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_config(""), Err(ConfigError::Field { .. })));
        assert!(matches!(parse_config("  \n"), Err(ConfigError::Field { .. })));
    }

    #[test]
    fn missing_slot_is_reported() {
        let text = r#"
            [system]
            dim = 1
            delays = [1.0]
            a0 = -1.0
            history = { kind = "constant", values = [0.1] }
            [[system.term]]
            coordinate = 1
            coeff = 1.0
            factors = [{ coord = 1, slot = 3, power = 2 }]
        "#;
        match parse_config(text) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "system.term[0].factors[0].slot"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_errors_name_the_field() {
        let base = |extra: &str| {
            format!(
                "[system]\ndim = 2\na0 = [[\"-1\", \"0\"], [\"0\", \"sin(\"]]\n{extra}\nhistory = {{ kind = \"constant\", values = [0.1, 0.2] }}\n"
            )
        };
        match parse_config(&base("")) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "system.a0[1][1]"),
            other => panic!("{other:?}"),
        }
        let missing_dim = "[system]\na0 = -1.0\n";
        match parse_config(missing_dim) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "system.dim"),
            other => panic!("{other:?}"),
        }
        let unknown = "[system]\ndim = 1\na0 = -1.0\nbogus = 3\n";
        assert!(matches!(parse_config(unknown), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn grid_history_must_cover_interval() {
        let text = r#"
            [system]
            dim = 1
            delays = [1.0]
            a0 = -1.0
            [system.history]
            kind = "grid"
            times = [-0.5, 0.0]
            rows = [[1.0], [1.0]]
        "#;
        match parse_config(text) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "system.history.times"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn robust_only_config() {
        let text = r#"
            [robust]
            p_hat = -2.0
            c_hat = 1.0
            l_hat = [{ coeff = 1.0, degree = 3 }]
        "#;
        let cfg = parse_config(text).unwrap();
        assert!(cfg.system.is_none());
        let r = cfg.robust.unwrap();
        assert_eq!(r.l_hat, vec![(1.0, 3)]);
    }
}
