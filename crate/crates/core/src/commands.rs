//! Command dispatch for the command-line tool.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{
    self, classify_fts, estimate_scalar_radius, estimate_vector_region, polar_angles, robust_check_for_scalar,
    robust_stability_check, verify_bound_chain, AnalysisError, RadiusEstimate, RadiusSettings, RegionBoundary,
};
use crate::config::{ConfigError, RunConfig};
use crate::dde::{self, DdeError};
use crate::output::{
    emit_csv, emit_polar_svg, emit_svg, emit_table, format_real, AxesSpec, Column, Curve, OutputError, PolarCurve,
};
use crate::reduction::{reduce_system, Provenance, Reduction, ReductionError};
use crate::system::{SystemError, VectorDelaySystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Reduce,
    Verify,
    Radius,
    Region,
    Robust,
    Fts,
    ReproduceFig1,
    ReproduceFig2,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Simulate,
        Command::Reduce,
        Command::Verify,
        Command::Radius,
        Command::Region,
        Command::Robust,
        Command::Fts,
        Command::ReproduceFig1,
        Command::ReproduceFig2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Reduce => "reduce",
            Command::Verify => "verify",
            Command::Radius => "radius",
            Command::Region => "region",
            Command::Robust => "robust",
            Command::Fts => "fts",
            Command::ReproduceFig1 => "reproduce-fig1",
            Command::ReproduceFig2 => "reproduce-fig2",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CommandError::Usage(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("usage: {0}")]
    Usage(String),
    /// A hypothesis of the requested check is not met.
    #[error("check not applicable: {0}")]
    Hypothesis(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Hypothesis(_) => 1,
            CommandError::Config(_) | CommandError::Usage(_) | CommandError::Output(_) => 2,
            CommandError::Numerical(_) => 3,
        }
    }
}

impl From<AnalysisError> for CommandError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Usage(m) => CommandError::Usage(m),
            AnalysisError::Precondition(m) => CommandError::Usage(m),
            AnalysisError::Hypothesis(m) => CommandError::Hypothesis(m),
            AnalysisError::System(e) => e.into(),
            other => CommandError::Numerical(other.to_string()),
        }
    }
}

impl From<SystemError> for CommandError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Dde(e) => CommandError::Numerical(e.to_string()),
            other => CommandError::Usage(other.to_string()),
        }
    }
}

impl From<ReductionError> for CommandError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::System(e) => e.into(),
            ReductionError::HorizonTooShort { .. } => CommandError::Usage(e.to_string()),
            other => CommandError::Numerical(other.to_string()),
        }
    }
}

impl From<DdeError> for CommandError {
    fn from(e: DdeError) -> Self {
        CommandError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub svg: bool,
}

/// What a command did. `passed` is false when its check failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub passed: bool,
    pub messages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    fn say(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

/// Exit status of a finished command.
pub fn exit_code(result: &Result<Outcome, CommandError>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(e) => e.exit_code(),
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CommandError> {
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| OutputError::Io {
        path: opts.out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut out = Outcome {
        passed: true,
        ..Outcome::default()
    };
    match cmd {
        Command::Simulate => simulate(cfg, opts, &mut out)?,
        Command::Reduce => reduce(cfg, opts, &mut out)?,
        Command::Verify => verify(cfg, opts, opts.svg, "verify", &mut out)?,
        Command::Radius => radius(cfg, opts, &mut out)?,
        Command::Region => region(cfg, opts, &mut out)?,
        Command::Robust => robust(cfg, opts, &mut out)?,
        Command::Fts => fts(cfg, opts, &mut out)?,
        Command::ReproduceFig1 => verify(cfg, opts, true, "fig1", &mut out)?,
        Command::ReproduceFig2 => fig2(cfg, opts, &mut out)?,
    }
    Ok(out)
}

fn artifact(opts: &RunOptions, name: &str, out: &mut Outcome) -> PathBuf {
    let path = opts.out_dir.join(name);
    out.artifacts.push(path.clone());
    path
}

fn system(cfg: &RunConfig) -> Result<&VectorDelaySystem, CommandError> {
    Ok(cfg.require_system()?)
}

fn reduction_for(vs: &VectorDelaySystem, cfg: &RunConfig) -> Result<Reduction, CommandError> {
    Ok(reduce_system(vs, &cfg.coefficients, vs.t0 + cfg.horizon, &cfg.tol, cfg.margin)?)
}

fn simulate(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let t_end = cfg.t_end();
    let traj = vs.integrate(t_end, &cfg.tol)?;
    let stop = if traj.blew_up() { traj.t_end() } else { t_end };
    let grid = dde::uniform_grid(vs.t0, stop, cfg.output.grid_points);
    let mut coords = vec![Vec::with_capacity(grid.len()); vs.dim];
    let mut buf = vec![0.0; vs.dim];
    for &t in &grid {
        traj.eval_into(t, &mut buf)?;
        for (c, v) in coords.iter_mut().zip(&buf) {
            c.push(*v);
        }
    }
    let mut columns = vec![Column::new("t", grid.clone())];
    for (i, c) in coords.into_iter().enumerate() {
        columns.push(Column::new(format!("x{}", i + 1), c));
    }
    columns.push(Column::new("|x|", traj.norms_on_grid(&grid)?));
    emit_csv(&columns, &artifact(opts, "simulate.csv", out))?;
    if traj.blew_up() {
        out.say(format!("solution exceeded the cap {} at t = {}", cfg.tol.cap, traj.t_end()));
    } else {
        out.say(format!("integrated to t = {t_end}; final |x| = {}", traj.norm_at(t_end)?));
    }
    if opts.svg {
        let norms = columns.last().unwrap().values.clone();
        emit_svg(
            &[Curve::new("|x|", grid, norms)],
            &AxesSpec {
                title: "solution norm".into(),
                x_label: "t".into(),
                y_label: "|x(t)|".into(),
            },
            &artifact(opts, "simulate.svg", out),
        )?;
    }
    Ok(())
}

fn reduce(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let red = reduction_for(vs, cfg)?;
    let t_end = cfg.t_end();
    let stop = red.coeffs.valid_until.min(t_end);
    let grid = dde::uniform_grid(vs.t0, stop, cfg.output.grid_points);
    let p: Vec<f64> = grid.iter().map(|&t| red.coeffs.p.eval(t)).collect();
    let c: Vec<f64> = grid.iter().map(|&t| red.coeffs.c.eval(t)).collect();
    emit_csv(
        &[Column::new("t", grid), Column::new("p", p), Column::new("c", c)],
        &artifact(opts, "reduce.csv", out),
    )?;
    let provenance = match red.coeffs.provenance {
        Provenance::ClosedForm => "closed form",
        Provenance::Numerical => "numerical",
    };
    out.say(format!("coefficients p(t), c(t): {provenance}"));
    if !red.coeffs.crossing_times.is_empty() {
        out.say(format!(
            "singular-value crossings near t = {:?}",
            red.coeffs.crossing_times
        ));
    }
    let auto = &red.autonomous;
    out.say(format!(
        "autonomous bound: p_hat = {}, c_hat = {}",
        fmt_opt(auto.p.as_constant()),
        fmt_opt(auto.c.as_constant())
    ));
    for (k, term) in auto.majorant.terms().iter().enumerate() {
        out.say(format!(
            "  L_hat term {k}: coefficient {} exponents {:?}",
            fmt_opt(term.coeff.as_constant()),
            term.exponents
        ));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "non-constant".into(), format_real)
}

fn verify(cfg: &RunConfig, opts: &RunOptions, svg: bool, stem: &str, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let red = reduction_for(vs, cfg)?;
    let report = verify_bound_chain(
        vs,
        &red,
        cfg.t_end(),
        &cfg.tol,
        cfg.analysis.grid_points,
        cfg.analysis.violation_tol,
    )?;
    let mut columns = vec![Column::new("t", report.grid.clone())];
    for (name, s) in ["|x|", "y", "ŷ"].iter().zip(&report.series) {
        columns.push(Column::new(*name, s.values.clone()));
    }
    emit_csv(&columns, &artifact(opts, &format!("{stem}.csv"), out))?;
    if svg {
        let curves: Vec<Curve> = columns[1..]
            .iter()
            .map(|c| Curve::new(c.name.clone(), report.grid.clone(), c.values.clone()))
            .collect();
        emit_svg(
            &curves,
            &AxesSpec {
                title: "norm bounds |x| <= y <= ŷ".into(),
                x_label: "t".into(),
                y_label: "norm".into(),
            },
            &artifact(opts, &format!("{stem}.svg"), out),
        )?;
    }
    for (name, s) in ["|x|", "y", "ŷ"].iter().zip(&report.series) {
        if s.values.iter().any(|v| v.is_infinite()) {
            out.say(format!("{name} exceeds the cap {} within the horizon", cfg.tol.cap));
        }
    }
    out.passed = report.holds;
    out.say(match report.first_violation_time {
        None => format!(
            "ordering |x| <= y <= ŷ holds at {} points (max violation {}, tolerance {})",
            report.grid.len(),
            report.max_violation,
            report.tolerance
        ),
        Some(t) => format!(
            "ordering violated: first at t = {t}, max violation {} (tolerance {})",
            report.max_violation, report.tolerance
        ),
    });
    Ok(())
}

fn radius_row(equation: &str, r: &RadiusEstimate) -> Vec<String> {
    vec![
        equation.to_string(),
        format_real(r.value),
        format_real(r.lo),
        format_real(r.hi),
        r.unbracketed_above.to_string(),
        r.criterion.label().to_string(),
        format_real(r.horizon),
        format_real(r.cap),
        r.iterations.to_string(),
    ]
}

fn radius_headers() -> Vec<String> {
    ["equation", "value", "lo", "hi", "unbracketed", "criterion", "horizon", "cap", "iterations"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn describe(name: &str, r: &RadiusEstimate) -> String {
    if r.hi == 0.0 {
        format!(
            "{name}: no radius is good; the zero history already fails ({}, horizon-certified)",
            r.criterion.label()
        )
    } else if r.unbracketed_above {
        format!(
            "{name}: every tested radius up to {} is good ({}, horizon-certified)",
            r.value,
            r.criterion.label()
        )
    } else {
        format!(
            "{name}: radius {} in [{}, {}] ({}, horizon-certified on {} time units)",
            r.value,
            r.lo,
            r.hi,
            r.criterion.label(),
            r.horizon
        )
    }
}

fn scalar_radii(
    vs: &VectorDelaySystem,
    cfg: &RunConfig,
    settings: &RadiusSettings,
) -> Result<(RadiusEstimate, RadiusEstimate), CommandError> {
    let red = reduction_for(vs, cfg)?;
    let y = estimate_scalar_radius(&red.scalar, cfg.analysis.q_max, settings)?;
    let y_hat = estimate_scalar_radius(&red.autonomous, cfg.analysis.q_max, settings)?;
    Ok((y, y_hat))
}

fn radius(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let settings = cfg.analysis.radius_for(vs.forcing_amplitude);
    let (y, y_hat) = scalar_radii(vs, cfg, &settings)?;
    emit_table(
        &radius_headers(),
        &[radius_row("y", &y), radius_row("y_hat", &y_hat)],
        &artifact(opts, "radius.csv", out),
    )?;
    out.say(describe("scalar bound y", &y));
    out.say(describe("autonomous bound ŷ", &y_hat));
    Ok(())
}

struct RegionRun {
    boundary: RegionBoundary,
    y: RadiusEstimate,
    y_hat: RadiusEstimate,
    settings: RadiusSettings,
}

impl RegionRun {
    /// Scalar radius inside the smallest vector radius, up to the bisection
    /// tolerance.
    fn inclusion_holds(&self) -> bool {
        let min = self.boundary.min_radius();
        self.y.value <= min + 2.0 * self.settings.bisect_tol * min
    }
}

fn run_region(vs: &VectorDelaySystem, cfg: &RunConfig) -> Result<RegionRun, CommandError> {
    let settings = cfg.analysis.radius_for(vs.forcing_amplitude);
    let angles: Vec<f64> = if cfg.analysis.angles == 200 {
        polar_angles()
    } else {
        let n = cfg.analysis.angles.max(1);
        (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
    };
    let boundary = estimate_vector_region(vs, cfg.analysis.r_max, &angles, &settings)?;
    let (y, y_hat) = scalar_radii(vs, cfg, &settings)?;
    Ok(RegionRun {
        boundary,
        y,
        y_hat,
        settings,
    })
}

fn report_region(label: &str, run: &RegionRun, out: &mut Outcome) {
    let flips: usize = run.boundary.radii.iter().map(|r| r.flips.len()).sum();
    let open = run.boundary.radii.iter().filter(|r| r.unbracketed_above).count();
    out.say(format!(
        "{label}: min vector radius {} over {} angles ({}, horizon-certified)",
        run.boundary.min_radius(),
        run.boundary.angles.len(),
        run.settings.criterion.label()
    ));
    if open > 0 {
        out.say(format!("  {open} angles unbracketed up to r_max"));
    }
    if flips > 0 {
        out.say(format!("  {flips} non-monotone radii seen in coarse scans"));
    }
    out.say(format!("  {}", describe("scalar bound y", &run.y)));
    out.say(format!("  {}", describe("autonomous bound ŷ", &run.y_hat)));
    out.say(format!(
        "  inclusion of the scalar disk in the vector region: {}",
        if run.inclusion_holds() { "holds" } else { "FAILS" }
    ));
}

fn polar_curves(run: &RegionRun) -> Vec<PolarCurve> {
    let angles = run.boundary.angles.clone();
    let constant = |label: &str, r: f64| PolarCurve {
        label: label.into(),
        angles: angles.clone(),
        radii: vec![r; angles.len()],
    };
    // ln r is undefined for zero radii; such curves are left out.
    [
        PolarCurve {
            label: "vector system".into(),
            angles: angles.clone(),
            radii: run.boundary.radii.iter().map(|r| r.value).collect(),
        },
        constant("scalar y", run.y.value),
        constant("autonomous ŷ", run.y_hat.value),
    ]
    .into_iter()
    .filter(|c| c.radii.iter().all(|&r| r > 0.0 && r.is_finite()))
    .collect()
}

fn emit_polar_svg_if_any(curves: &[PolarCurve], title: &str, path: &Path) -> Result<(), OutputError> {
    if curves.is_empty() {
        return Ok(());
    }
    emit_polar_svg(curves, title, path)
}

fn region_columns(run: &RegionRun) -> Vec<Column> {
    let radii = &run.boundary.radii;
    vec![
        Column::new("angle", run.boundary.angles.clone()),
        Column::new("radius", radii.iter().map(|r| r.value).collect()),
        Column::new("lo", radii.iter().map(|r| r.lo).collect()),
        Column::new("hi", radii.iter().map(|r| r.hi).collect()),
        Column::new("flips", radii.iter().map(|r| r.flips.len() as f64).collect()),
    ]
}

fn region(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let run = run_region(vs, cfg)?;
    emit_csv(&region_columns(&run), &artifact(opts, "region.csv", out))?;
    emit_table(
        &radius_headers(),
        &[radius_row("y", &run.y), radius_row("y_hat", &run.y_hat)],
        &artifact(opts, "region_scalar.csv", out),
    )?;
    if opts.svg {
        emit_polar_svg_if_any(&polar_curves(&run), "region boundary", &artifact(opts, "region.svg", out))?;
    }
    let label = if vs.forcing_amplitude > 0.0 { "trapping region" } else { "stability region" };
    report_region(label, &run, out);
    out.passed = run.inclusion_holds();
    Ok(())
}

fn fig2(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let mut variants = vec![("stability", vs.homogeneous())];
    if vs.forcing_amplitude > 0.0 {
        variants.insert(0, ("trapping", vs.clone()));
    }
    for (name, sys) in variants {
        let run = run_region(&sys, cfg)?;
        emit_csv(&region_columns(&run), &artifact(opts, &format!("fig2_{name}.csv"), out))?;
        emit_table(
            &radius_headers(),
            &[radius_row("y", &run.y), radius_row("y_hat", &run.y_hat)],
            &artifact(opts, &format!("fig2_{name}_scalar.csv"), out),
        )?;
        emit_polar_svg_if_any(
            &polar_curves(&run),
            &format!("{name} region (F0 = {})", sys.forcing_amplitude),
            &artifact(opts, &format!("fig2_{name}.svg"), out),
        )?;
        report_region(&format!("{name} region"), &run, out);
        out.passed &= run.inclusion_holds();
    }
    Ok(())
}

fn robust(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let settings = cfg.robust.as_ref().map(|r| r.settings).unwrap_or_default();
    let explicit = cfg.robust.as_ref().filter(|r| r.p_hat.is_some());
    let result = match explicit {
        Some(r) => {
            let c_hat = r.c_hat.unwrap_or(1.0);
            out.say(format!("criterion for p_hat = {}, c_hat = {c_hat}", r.p_hat.unwrap()));
            robust_stability_check(r.p_hat.unwrap(), c_hat, &r.l_hat, &settings)?
        }
        None => {
            let vs = system(cfg)?;
            let red = reduction_for(vs, cfg)?;
            out.say("criterion for the scalar bound of the configured system");
            robust_check_for_scalar(&red.scalar, cfg.t_end(), cfg.margin, &settings)?
        }
    };
    out.passed = result.holds;
    if result.holds {
        out.say(format!("robust criterion holds; y+ = {}", result.y_plus));
    } else {
        out.say("robust criterion fails: p_hat y + c_hat L_hat(y) is nonnegative near 0");
    }

    if let (Some(p), Some(vs)) = (&cfg.perturbation, &cfg.system) {
        let red = reduction_for(vs, cfg)?;
        let perturbed = analysis::build_perturbed_scalar(&red.scalar, &p.majorant, p.delays.clone())?;
        let t_end = cfg.t_end();
        let z = perturbed.integrate(t_end, &cfg.tol)?;
        let stop = if z.blew_up() { z.t_end() } else { t_end };
        let grid = dde::uniform_grid(vs.t0, stop, cfg.output.grid_points);
        let values = z.scalar_on_grid(&grid)?;
        let sup = values.iter().cloned().fold(0.0, f64::max);
        emit_csv(
            &[Column::new("t", grid), Column::new("z", values)],
            &artifact(opts, "robust.csv", out),
        )?;
        if z.blew_up() {
            out.say(format!("perturbed scalar system exceeds the cap at t = {}", z.t_end()));
        } else {
            out.say(format!("perturbed scalar system: sup z = {sup} on [{}, {t_end}]", vs.t0));
        }
    }
    Ok(())
}

fn fts(cfg: &RunConfig, opts: &RunOptions, out: &mut Outcome) -> Result<(), CommandError> {
    let vs = system(cfg)?;
    let params = cfg.analysis.fts.ok_or_else(|| {
        CommandError::Config(ConfigError::Field {
            field: "analysis.alpha".into(),
            message: "fts needs alpha and beta".into(),
        })
    })?;
    let t_end = vs.t0 + params.window;
    if params.window > cfg.horizon {
        return Err(CommandError::Usage(format!(
            "window {} exceeds the horizon {}",
            params.window, cfg.horizon
        )));
    }
    let spec = vs.delay_spec(t_end)?;
    let history_sup = vs.history.sup_norm(vs.t0 - spec.h_bar, vs.t0, 1000);
    let traj = vs.integrate(t_end, &cfg.tol)?;
    let result = classify_fts(&traj, history_sup, &params)?;
    let stop = if traj.blew_up() { traj.t_end() } else { t_end };
    let grid = dde::uniform_grid(vs.t0, stop, cfg.output.grid_points);
    let norms = traj.norms_on_grid(&grid)?;
    emit_csv(&[Column::new("t", grid), Column::new("|x|", norms)], &artifact(opts, "fts.csv", out))?;
    out.say(format!(
        "FTS (alpha = {}, beta = {}, T = {}): {} (sup |x| = {})",
        params.alpha, params.beta, params.window, result.fts, result.sup_norm
    ));
    if let Some(t) = result.beta_crossing {
        out.say(format!("  |x| reaches beta at t = {t}"));
    }
    if let (Some(ftcs), Some(g)) = (result.ftcs, params.gamma) {
        out.say(format!(
            "FTCS (gamma = {g}): {ftcs}{}",
            result.t1.map_or(String::new(), |t| format!(", t1 = {t}"))
        ));
    }
    out.passed = result.fts && result.ftcs.unwrap_or(true);
    Ok(())
}

/// Reads a config and applies the overrides; errors carry exit code 2.
pub fn load_with_overrides(
    path: &Path,
    horizon: Option<f64>,
    rtol: Option<f64>,
    cap: Option<f64>,
) -> Result<RunConfig, CommandError> {
    Ok(crate::config::load_config(path)?.with_overrides(horizon, rtol, cap)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, PAPER_6_1};

    fn opts(dir: &Path) -> RunOptions {
        RunOptions {
            out_dir: dir.to_path_buf(),
            svg: true,
        }
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert_eq!("nope".parse::<Command>().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn verify_writes_ordered_columns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(PAPER_6_1).unwrap();
        let out = run_command(Command::Verify, &cfg, &opts(dir.path())).unwrap();
        assert!(out.passed, "{:?}", out.messages);
        let text = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,|x|,y,ŷ");
        assert_eq!(text.lines().count(), 2001);
        assert!(dir.path().join("verify.svg").exists());
    }

    #[test]
    fn robust_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("[robust]\np_hat = -2.0\nc_hat = 1.0\nl_hat = [{ coeff = 1.0, degree = 3 }]\n").unwrap();
        let out = run_command(Command::Robust, &cfg, &opts(dir.path())).unwrap();
        assert!(out.passed);
        assert!(out.messages.iter().any(|m| m.contains("1.4142")));
        let cfg = parse_config("[robust]\np_hat = 1.0\n").unwrap();
        let err = run_command(Command::Robust, &cfg, &opts(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn commands_needing_a_system_fail_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("[robust]\np_hat = -2.0\n").unwrap();
        let err = run_command(Command::Simulate, &cfg, &opts(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn output_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = parse_config(PAPER_6_1).unwrap();
        run_command(Command::Simulate, &cfg, &opts(a.path())).unwrap();
        run_command(Command::Simulate, &cfg, &opts(b.path())).unwrap();
        let read = |d: &Path| std::fs::read(d.join("simulate.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }
}
