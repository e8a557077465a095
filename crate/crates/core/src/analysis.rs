//! Bound verification, finite-time stability, the closed-form robustness
//! criterion and radius estimation.
//!
//! Radii are horizon-certified: "bounded" means the trajectory stayed under
//! the cap on the simulated horizon, not for all time.

use rayon::prelude::*;
use thiserror::Error;

use crate::dde::{self, sup_norm_on_interval, DdeError, History, ToleranceSettings, Trajectory};
use crate::linalg::euclidean_norm;
use crate::linear_aux::LinearAuxError;
use crate::majorant::{MajorantError, PolynomialMajorant};
use crate::reduction::{Reduction, ReductionError};
use crate::system::{ScalarDelaySystem, ScalarPerturbation, SystemError, VectorDelaySystem};
use crate::timefn::TimeFn;

/// History points compared by the matching precondition.
pub const HISTORY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    LinearAux(#[from] LinearAuxError),
    #[error(transparent)]
    Integration(#[from] DdeError),
}

/// A named series on a shared grid together with its history samples.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub history: Vec<f64>,
}

impl Series {
    /// `|x(t)|` of a vector trajectory and `|φ|` on `history_grid`.
    pub fn vector(
        name: &str,
        traj: &Trajectory,
        history: &History,
        grid: &[f64],
        history_grid: &[f64],
    ) -> Result<Self, AnalysisError> {
        let mut buf = vec![0.0; history.dim()];
        let history = history_grid
            .iter()
            .map(|&t| {
                history.eval_into(t, &mut buf);
                euclidean_norm(&buf)
            })
            .collect();
        Ok(Series {
            name: name.into(),
            values: traj.norms_on_grid(grid)?,
            history,
        })
    }

    /// A scalar trajectory and its scalar history.
    pub fn scalar(
        name: &str,
        traj: &Trajectory,
        history: &History,
        grid: &[f64],
        history_grid: &[f64],
    ) -> Result<Self, AnalysisError> {
        Ok(Series {
            name: name.into(),
            values: traj.scalar_on_grid(grid)?,
            history: history_grid.iter().map(|&t| history.eval(t)[0]).collect(),
        })
    }
}

/// Outcome of an ordering check `s_0 <= s_1 <= ...`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    pub tolerance: f64,
    pub holds: bool,
    pub max_violation: f64,
    pub first_violation_time: Option<f64>,
}

/// Checks that adjacent series are ordered on the grid. Values of `+inf`
/// (past a blow-up) dominate everything finite.
pub fn verify_pointwise_ordering(
    series: Vec<Series>,
    grid: &[f64],
    tol: f64,
) -> Result<BoundReport, AnalysisError> {
    if series.len() < 2 {
        return Err(AnalysisError::Precondition("need at least two series".into()));
    }
    for s in &series {
        if s.values.len() != grid.len() {
            return Err(AnalysisError::Precondition(format!(
                "series '{}' has {} values for {} grid points",
                s.name,
                s.values.len(),
                grid.len()
            )));
        }
    }
    let reference = &series[0];
    for s in &series[1..] {
        if s.history.len() != reference.history.len() {
            return Err(AnalysisError::Precondition(format!(
                "history sample count of '{}' differs from '{}'",
                s.name, reference.name
            )));
        }
        for (a, b) in reference.history.iter().zip(&s.history) {
            if (a - b).abs() > tol {
                return Err(AnalysisError::Precondition(format!(
                    "history of '{}' ({b}) does not match |history| of '{}' ({a})",
                    s.name, reference.name
                )));
            }
        }
    }
    let mut max_violation: f64 = 0.0;
    let mut first_violation_time = None;
    for (k, &t) in grid.iter().enumerate() {
        for pair in series.windows(2) {
            let (lower, upper) = (pair[0].values[k], pair[1].values[k]);
            let excess = if lower.is_nan() || upper.is_nan() {
                f64::INFINITY
            } else if upper == f64::INFINITY {
                0.0
            } else {
                lower - upper
            };
            if excess > tol && first_violation_time.is_none() {
                first_violation_time = Some(t);
            }
            max_violation = max_violation.max(excess);
        }
    }
    Ok(BoundReport {
        grid: grid.to_vec(),
        series,
        tolerance: tol,
        holds: max_violation <= tol,
        max_violation,
        first_violation_time,
    })
}

/// Integrates the vector system and both scalar bounds and checks
/// `|x| <= y <= ŷ` on `grid_points` uniform points of `[t0, t_end]`.
pub fn verify_bound_chain(
    vs: &VectorDelaySystem,
    reduction: &Reduction,
    t_end: f64,
    tol: &ToleranceSettings,
    grid_points: usize,
    violation_tol: f64,
) -> Result<BoundReport, AnalysisError> {
    let trajs = [
        vs.integrate(t_end, tol),
        reduction.scalar.integrate(t_end, tol),
        reduction.autonomous.integrate(t_end, tol),
    ];
    let (x, y, y_hat) = match trajs {
        [Ok(x), Ok(y), Ok(z)] => (x, y, z),
        [a, b, c] => return Err(a.and(b).and(c).unwrap_err().into()),
    };
    let spec = vs.delay_spec(t_end)?;
    let grid = dde::uniform_grid(vs.t0, t_end, grid_points);
    let history_grid = dde::uniform_grid(vs.t0 - spec.h_bar, vs.t0, HISTORY_SAMPLES);
    let series = vec![
        Series::vector("|x|", &x, &vs.history, &grid, &history_grid)?,
        Series::scalar("y", &y, &reduction.scalar.history, &grid, &history_grid)?,
        Series::scalar("y_hat", &y_hat, &reduction.autonomous.history, &grid, &history_grid)?,
    ];
    verify_pointwise_ordering(series, &grid, violation_tol)
}

/// Parameters of a finite-time stability check.
#[derive(Debug, Clone, Copy)]
pub struct FtsParams {
    pub alpha: f64,
    pub beta: f64,
    /// Length of the window `[t0, t0 + T]`.
    pub window: f64,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtsResult {
    pub fts: bool,
    pub sup_norm: f64,
    /// First time `|x|` reaches `β`.
    pub beta_crossing: Option<f64>,
    pub ftcs: Option<bool>,
    /// Earliest time after which `|x| < γ` up to the window end.
    pub t1: Option<f64>,
}

/// Samples per unit time when locating level crossings.
const CROSSING_DENSITY: f64 = 2000.0;

/// Finite-time (contractive) stability of `traj`.
pub fn classify_fts(traj: &Trajectory, history_sup: f64, params: &FtsParams) -> Result<FtsResult, AnalysisError> {
    let FtsParams {
        alpha,
        beta,
        window,
        gamma,
    } = *params;
    if !(history_sup < alpha) {
        return Err(AnalysisError::Precondition(format!(
            "history norm {history_sup} is not below alpha = {alpha}"
        )));
    }
    if !(alpha < beta) {
        return Err(AnalysisError::Precondition(format!("alpha = {alpha} must be below beta = {beta}")));
    }
    if let Some(g) = gamma {
        if !(g > 0.0 && g < beta) {
            return Err(AnalysisError::Precondition(format!(
                "gamma = {g} must lie in (0, beta = {beta})"
            )));
        }
    }
    let t0 = traj.t_start();
    let t_end = t0 + window;
    if !(window > 0.0) || (t_end > traj.t_end() && !traj.blew_up()) {
        return Err(AnalysisError::Precondition(format!(
            "window end {t_end} is beyond the trajectory horizon {}",
            traj.t_end()
        )));
    }
    let stop = t_end.min(traj.t_end());
    let sup_norm = if traj.blew_up() && stop < t_end {
        f64::INFINITY
    } else {
        sup_norm_on_interval(traj, t0, stop, 2000)?
    };
    let fts = sup_norm < beta;
    let points = ((stop - t0) * CROSSING_DENSITY).ceil().max(2.0) as usize + 1;
    let grid = dde::uniform_grid(t0, stop, points);
    let norms = traj.norms_on_grid(&grid)?;
    let beta_crossing = match norms.iter().position(|&v| v >= beta) {
        Some(0) => Some(t0),
        Some(k) => Some(refine_crossing(traj, grid[k - 1], grid[k], beta)),
        None if traj.blew_up() && stop < t_end => Some(traj.t_end()),
        None => None,
    };
    let (ftcs, t1) = match gamma {
        None => (None, None),
        Some(g) => {
            if traj.blew_up() && stop < t_end {
                (Some(false), None)
            } else {
                match norms.iter().rposition(|&v| v >= g) {
                    None => (Some(true), Some(t0)),
                    Some(k) if k + 1 >= grid.len() => (Some(false), None),
                    Some(k) => {
                        let t1 = refine_crossing(traj, grid[k + 1], grid[k], g);
                        (Some(t1 < t_end), Some(t1))
                    }
                }
            }
        }
    };
    Ok(FtsResult {
        fts,
        sup_norm,
        beta_crossing,
        ftcs,
        t1,
    })
}

/// Bisects for `|x(t)| = level` between `below` (norm under the level) and
/// `above` (norm at or over it); either may be the later time.
fn refine_crossing(traj: &Trajectory, below: f64, above: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (below, above);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = traj.norm_at(mid).unwrap_or(f64::INFINITY);
        if v >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Search settings for the robust criterion.
#[derive(Debug, Clone, Copy)]
pub struct RobustSettings {
    pub y_min: f64,
    pub y_max: f64,
    pub samples: usize,
}

impl Default for RobustSettings {
    fn default() -> Self {
        RobustSettings {
            y_min: 1e-8,
            y_max: 1e3,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustResult {
    pub holds: bool,
    /// Smallest positive root of `p̂ y + ĉ L̂(y)`, or `y_max` if none was
    /// found; 0 when the expression is nonnegative from the start.
    pub y_plus: f64,
}

/// Checks `p̂ y + ĉ L̂(y) < 0` on `(0, y+)` for `L̂(y) = Σ a_d y^d`.
pub fn robust_stability_check(
    p_hat: f64,
    c_hat: f64,
    l_hat: &[(f64, u32)],
    settings: &RobustSettings,
) -> Result<RobustResult, AnalysisError> {
    if !(p_hat < 0.0) {
        return Err(AnalysisError::Hypothesis(format!("p_hat = {p_hat} must be negative")));
    }
    if !(c_hat >= 1.0) {
        return Err(AnalysisError::Hypothesis(format!("c_hat = {c_hat} must be at least 1")));
    }
    let g = |y: f64| p_hat * y + c_hat * l_hat.iter().map(|&(a, d)| a.abs() * y.powi(d as i32)).sum::<f64>();
    let n = settings.samples.max(2);
    let ratio = (settings.y_max / settings.y_min).ln();
    let mut prev = 0.0;
    for k in 0..n {
        let y = settings.y_min * (ratio * k as f64 / (n - 1) as f64).exp();
        if g(y) >= 0.0 {
            if k == 0 {
                return Ok(RobustResult {
                    holds: false,
                    y_plus: 0.0,
                });
            }
            let (mut lo, mut hi) = (prev, y);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(RobustResult {
                holds: true,
                y_plus: 0.5 * (lo + hi),
            });
        }
        prev = y;
    }
    Ok(RobustResult {
        holds: true,
        y_plus: settings.y_max,
    })
}

/// The robust criterion for a scalar system: `p̂`, `ĉ` and `L̂` are inflated
/// sups on `[t0, t_end]`.
pub fn robust_check_for_scalar(
    ss: &ScalarDelaySystem,
    t_end: f64,
    margin: f64,
    settings: &RobustSettings,
) -> Result<RobustResult, AnalysisError> {
    let auto = crate::reduction::build_autonomous_auxiliary(ss, t_end, margin)?;
    let l_hat = auto
        .majorant
        .collapse_diagonal()
        .ok_or_else(|| AnalysisError::Precondition("majorant coefficients are not constant".into()))?;
    robust_stability_check(
        auto.p.as_constant().unwrap_or(f64::NAN),
        auto.c.as_constant().unwrap_or(f64::NAN),
        &l_hat,
        settings,
    )
}

/// Adds `c(t) L_R(t, z, z(t - h*_1), ...)` to `ss`. A zero `L_R` leaves the
/// system unchanged.
pub fn build_perturbed_scalar(
    ss: &ScalarDelaySystem,
    l_r: &PolynomialMajorant,
    perturbed_delays: Vec<TimeFn>,
) -> Result<ScalarDelaySystem, AnalysisError> {
    if l_r.arg_count() != perturbed_delays.len() + 1 {
        return Err(AnalysisError::Precondition(format!(
            "L_R takes {} arguments but {} perturbed delays were given",
            l_r.arg_count(),
            perturbed_delays.len()
        )));
    }
    if l_r.is_zero() {
        return Ok(ss.clone());
    }
    Ok(ss.clone().with_perturbation(Some(ScalarPerturbation {
        majorant: l_r.clone(),
        delays: perturbed_delays,
    })))
}

/// Good/bad oracle for radius searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Stays under the cap on the whole horizon.
    Bounded,
    /// Bounded, and the sup over the final `tail_fraction` of the horizon is
    /// at most `decay_ratio` times the initial norm.
    Decaying { tail_fraction: f64, decay_ratio: f64 },
}

impl Criterion {
    pub fn decaying() -> Self {
        Criterion::Decaying {
            tail_fraction: 0.2,
            decay_ratio: 0.5,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Criterion::Bounded => "bounded_on_horizon",
            Criterion::Decaying { .. } => "decaying_tail",
        }
    }

    /// Applies the criterion to a trajectory started from norm `initial`.
    pub fn accepts(&self, traj: &Trajectory, initial: f64) -> Result<bool, AnalysisError> {
        if traj.blew_up() {
            return Ok(false);
        }
        match *self {
            Criterion::Bounded => Ok(true),
            Criterion::Decaying {
                tail_fraction,
                decay_ratio,
            } => {
                let (a, b) = (traj.t_start(), traj.t_end());
                let tail = sup_norm_on_interval(traj, b - tail_fraction * (b - a), b, 200)?;
                Ok(tail <= decay_ratio * initial)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadiusSettings {
    pub criterion: Criterion,
    /// Simulated time after `t0`.
    pub horizon: f64,
    /// Relative bracket width at which bisection stops.
    pub bisect_tol: f64,
    pub max_iterations: usize,
    pub tol: ToleranceSettings,
}

impl Default for RadiusSettings {
    fn default() -> Self {
        RadiusSettings {
            criterion: Criterion::decaying(),
            horizon: 50.0,
            bisect_tol: 1e-3,
            max_iterations: 40,
            tol: ToleranceSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    pub value: f64,
    /// Largest radius verified good; `lo = hi = 0` when even the zero
    /// history fails.
    pub lo: f64,
    /// Smallest radius verified bad (`inf` when unbracketed above).
    pub hi: f64,
    pub unbracketed_above: bool,
    pub criterion: Criterion,
    pub horizon: f64,
    pub cap: f64,
    pub iterations: usize,
    /// Radii found good beyond a bad radius during the coarse scan.
    pub flips: Vec<f64>,
}

impl RadiusEstimate {
    fn unbracketed(r_max: f64, settings: &RadiusSettings) -> Self {
        RadiusEstimate {
            value: r_max,
            lo: r_max,
            hi: f64::INFINITY,
            unbracketed_above: true,
            criterion: settings.criterion,
            horizon: settings.horizon,
            cap: settings.tol.cap,
            iterations: 0,
            flips: Vec::new(),
        }
    }
}

/// Bisection on `[lo, hi]` with `good(lo)` and `!good(hi)`.
fn bisect<F>(mut lo: f64, mut hi: f64, settings: &RadiusSettings, good: F) -> Result<(f64, f64, usize), AnalysisError>
where
    F: Fn(f64) -> Result<bool, AnalysisError>,
{
    let mut iterations = 0;
    while iterations < settings.max_iterations && hi - lo > settings.bisect_tol * hi {
        let mid = 0.5 * (lo + hi);
        if good(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((lo, hi, iterations))
}

/// Radius of constant scalar histories that satisfy the criterion. Relies
/// on solutions being monotone in the constant history.
pub fn estimate_scalar_radius(
    ss: &ScalarDelaySystem,
    q_max: f64,
    settings: &RadiusSettings,
) -> Result<RadiusEstimate, AnalysisError> {
    if !(q_max > 0.0) {
        return Err(AnalysisError::Precondition(format!("q_max = {q_max} must be positive")));
    }
    let t_end = ss.t0 + settings.horizon;
    let good = |q: f64| -> Result<bool, AnalysisError> {
        let traj = ss.clone().with_constant_history(q).integrate(t_end, &settings.tol)?;
        settings.criterion.accepts(&traj, q)
    };
    if good(q_max)? {
        return Ok(RadiusEstimate::unbracketed(q_max, settings));
    }
    if !good(0.0)? {
        return Ok(RadiusEstimate {
            value: 0.0,
            lo: 0.0,
            hi: 0.0,
            unbracketed_above: false,
            criterion: settings.criterion,
            horizon: settings.horizon,
            cap: settings.tol.cap,
            iterations: 0,
            flips: Vec::new(),
        });
    }
    let (lo, hi, iterations) = bisect(0.0, q_max, settings, good)?;
    Ok(RadiusEstimate {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        unbracketed_above: false,
        criterion: settings.criterion,
        horizon: settings.horizon,
        cap: settings.tol.cap,
        iterations,
        flips: Vec::new(),
    })
}

/// Polar boundary of the region of constant initial vectors satisfying the
/// criterion.
#[derive(Debug, Clone)]
pub struct RegionBoundary {
    pub angles: Vec<f64>,
    pub radii: Vec<RadiusEstimate>,
    pub t0: f64,
    pub forcing_amplitude: f64,
}

impl RegionBoundary {
    pub fn min_radius(&self) -> f64 {
        self.radii.iter().map(|r| r.value).fold(f64::INFINITY, f64::min)
    }

    pub fn min_lower_bound(&self) -> f64 {
        self.radii.iter().map(|r| r.lo).fold(f64::INFINITY, f64::min)
    }
}

/// Angles `k π / 100` for `k = 0, ..., 199`.
pub fn polar_angles() -> Vec<f64> {
    (0..200).map(|k| k as f64 * std::f64::consts::PI / 100.0).collect()
}

/// Radii in the coarse scan before bisection: `r_max / 2^k`, ascending.
const SCAN_LEVELS: i32 = 12;

/// Per-angle radius search for a planar system. Angles run in parallel;
/// the output is ordered by angle.
pub fn estimate_vector_region(
    vs: &VectorDelaySystem,
    r_max: f64,
    angles: &[f64],
    settings: &RadiusSettings,
) -> Result<RegionBoundary, AnalysisError> {
    if vs.dim != 2 {
        return Err(AnalysisError::Usage(format!(
            "the polar region sweep needs a 2-dimensional system, got dimension {}",
            vs.dim
        )));
    }
    if !(r_max > 0.0) {
        return Err(AnalysisError::Precondition(format!("r_max = {r_max} must be positive")));
    }
    let t_end = vs.t0 + settings.horizon;
    vs.validate(t_end)?;
    let radii = angles
        .par_iter()
        .map(|&phi| angle_radius(vs, phi, r_max, t_end, settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegionBoundary {
        angles: angles.to_vec(),
        radii,
        t0: vs.t0,
        forcing_amplitude: vs.forcing_amplitude,
    })
}

fn angle_radius(
    vs: &VectorDelaySystem,
    phi: f64,
    r_max: f64,
    t_end: f64,
    settings: &RadiusSettings,
) -> Result<RadiusEstimate, AnalysisError> {
    let (c, s) = (phi.cos(), phi.sin());
    let good = |r: f64| -> Result<bool, AnalysisError> {
        let probe = vs.clone().with_constant_history(vec![r * c, r * s]);
        let traj = dde::integrate(&probe, &probe.history, probe.t0, t_end, &settings.tol)?;
        settings.criterion.accepts(&traj, r)
    };
    let scan: Vec<f64> = (0..=SCAN_LEVELS).rev().map(|k| r_max * 2f64.powi(-k)).collect();
    let verdicts = scan.iter().map(|&r| good(r)).collect::<Result<Vec<_>, _>>()?;
    let Some(first_bad) = verdicts.iter().position(|&g| !g) else {
        return Ok(RadiusEstimate::unbracketed(r_max, settings));
    };
    let flips = scan
        .iter()
        .zip(&verdicts)
        .skip(first_bad + 1)
        .filter(|(_, &g)| g)
        .map(|(&r, _)| r)
        .collect();
    let lo = if first_bad == 0 { 0.0 } else { scan[first_bad - 1] };
    let (lo, hi, iterations) = bisect(lo, scan[first_bad], settings, good)?;
    Ok(RadiusEstimate {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        unbracketed_above: false,
        criterion: settings.criterion,
        horizon: settings.horizon,
        cap: settings.tol.cap,
        iterations,
        flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::FnRhs;
    use crate::majorant::{Factor, Monomial, PolynomialField, PolynomialTerm};
    use crate::timefn::MatrixFn;

    fn relax(rate: f64, y0: f64, t_end: f64) -> Trajectory {
        let rhs = FnRhs::new(1, vec![], move |_, x: &[f64], _: &[f64], dx: &mut [f64]| dx[0] = rate * x[0]);
        let tol = ToleranceSettings::default().with_rtol(1e-10).with_atol(1e-13);
        dde::integrate(&rhs, &History::scalar(y0), 0.0, t_end, &tol).unwrap()
    }

    #[test]
    fn fts_examples() {
        let decay = relax(-1.0, 0.9, 6.0);
        let params = FtsParams {
            alpha: 1.0,
            beta: 1.1,
            window: 5.0,
            gamma: None,
        };
        let r = classify_fts(&decay, 0.9, &params).unwrap();
        assert!(r.fts);
        assert!((r.sup_norm - 0.9).abs() < 1e-12);

        let r = classify_fts(&decay, 0.9, &FtsParams { gamma: Some(0.1), ..params }).unwrap();
        assert_eq!(r.ftcs, Some(true));
        assert!((r.t1.unwrap() - 9f64.ln()).abs() < 1e-3);

        let growth = relax(1.0, 0.9, 6.0);
        let r = classify_fts(&growth, 0.9, &params).unwrap();
        assert!(!r.fts);
        assert!((r.beta_crossing.unwrap() - (1.1f64 / 0.9).ln()).abs() < 1e-3);
    }

    #[test]
    fn fts_preconditions() {
        let decay = relax(-1.0, 0.9, 3.0);
        let params = FtsParams {
            alpha: 1.0,
            beta: 1.1,
            window: 5.0,
            gamma: None,
        };
        assert!(classify_fts(&decay, 0.9, &params).is_err());
        assert!(classify_fts(&decay, 1.2, &FtsParams { window: 2.0, ..params }).is_err());
        assert!(classify_fts(&decay, 0.9, &FtsParams { beta: 0.5, window: 2.0, ..params }).is_err());
    }

    #[test]
    fn robust_examples() {
        let s = RobustSettings::default();
        let r = robust_stability_check(-2.0, 1.0, &[(1.0, 3)], &s).unwrap();
        assert!(r.holds);
        assert!((r.y_plus - 2f64.sqrt()).abs() < 1e-10);
        let r = robust_stability_check(-2.0, 1.0, &[], &s).unwrap();
        assert!(r.holds);
        assert_eq!(r.y_plus, s.y_max);
        let r = robust_stability_check(-1.0, 2.0, &[(1.0, 1)], &s).unwrap();
        assert!(!r.holds);
        assert!(matches!(
            robust_stability_check(0.5, 1.0, &[], &s),
            Err(AnalysisError::Hypothesis(_))
        ));
    }

    #[test]
    fn ordering_report() {
        let grid = vec![0.0, 1.0, 2.0];
        let series = |name: &str, values: Vec<f64>, h: f64| Series {
            name: name.into(),
            values,
            history: vec![h; 3],
        };
        let same = verify_pointwise_ordering(
            vec![series("a", vec![1.0, 2.0, 3.0], 1.0), series("b", vec![1.0, 2.0, 3.0], 1.0)],
            &grid,
            1e-4,
        )
        .unwrap();
        assert!(same.holds);
        assert_eq!(same.max_violation, 0.0);

        let broken = verify_pointwise_ordering(
            vec![series("a", vec![1.0, 2.5, 3.0], 1.0), series("b", vec![1.0, 2.0, f64::INFINITY], 1.0)],
            &grid,
            1e-4,
        )
        .unwrap();
        assert!(!broken.holds);
        assert_eq!(broken.first_violation_time, Some(1.0));
        assert!((broken.max_violation - 0.5).abs() < 1e-15);

        let mismatched = verify_pointwise_ordering(
            vec![series("a", vec![1.0; 3], 1.0), series("b", vec![1.0; 3], 0.5)],
            &grid,
            1e-4,
        );
        assert!(matches!(mismatched, Err(AnalysisError::Precondition(_))));
    }

    fn cubic_scalar() -> ScalarDelaySystem {
        let l = PolynomialMajorant::new(1, vec![PolynomialTerm::new(1.0.into(), vec![3])]).unwrap();
        ScalarDelaySystem::new((-2.0).into(), 1.0.into(), l, vec![])
    }

    #[test]
    fn scalar_radius_of_cubic_ode() {
        let settings = RadiusSettings {
            criterion: Criterion::Bounded,
            ..RadiusSettings::default()
        };
        let r = estimate_scalar_radius(&cubic_scalar(), 10.0, &settings).unwrap();
        assert!(!r.unbracketed_above);
        assert!((r.value - 2f64.sqrt()).abs() < 1e-3, "{r:?}");
        assert!(r.hi - r.lo <= settings.bisect_tol * r.hi);
        let linear = ScalarDelaySystem::new((-1.0).into(), 1.0.into(), PolynomialMajorant::zero(1), vec![]);
        let r = estimate_scalar_radius(&linear, 10.0, &RadiusSettings::default()).unwrap();
        assert!(r.unbracketed_above);
    }

    #[test]
    fn bisection_brackets_reverify() {
        let settings = RadiusSettings::default();
        let ss = cubic_scalar();
        let r = estimate_scalar_radius(&ss, 10.0, &settings).unwrap();
        let run = |q: f64| {
            let traj = ss.clone().with_constant_history(q).integrate(50.0, &settings.tol).unwrap();
            settings.criterion.accepts(&traj, q).unwrap()
        };
        assert!(run(r.lo));
        assert!(!run(r.hi));
    }

    fn symmetric_planar() -> VectorDelaySystem {
        // x' = -x + |x|^2 x, written out per coordinate.
        let m = |coordinate, factors: Vec<(usize, u32)>| Monomial {
            coordinate,
            coeff: 1.0.into(),
            factors: factors
                .into_iter()
                .map(|(coord, power)| Factor { coord, slot: 0, power })
                .collect(),
        };
        let field = PolynomialField::new(
            2,
            0,
            vec![
                m(0, vec![(0, 3)]),
                m(0, vec![(0, 1), (1, 2)]),
                m(1, vec![(1, 3)]),
                m(1, vec![(1, 1), (0, 2)]),
            ],
        )
        .unwrap();
        VectorDelaySystem::linear(MatrixFn::scalar_identity(2, (-1.0).into())).with_nonlinear(field)
    }

    #[test]
    fn symmetric_region_is_round() {
        let settings = RadiusSettings {
            criterion: Criterion::Bounded,
            horizon: 20.0,
            ..RadiusSettings::default()
        };
        let angles: Vec<f64> = polar_angles().into_iter().step_by(25).collect();
        let region = estimate_vector_region(&symmetric_planar(), 8.0, &angles, &settings).unwrap();
        for r in &region.radii {
            assert!((r.value - 1.0).abs() < 2e-3, "{r:?}");
            assert!(r.flips.is_empty());
        }
        let values: Vec<f64> = region.radii.iter().map(|r| r.value).collect();
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - region.min_radius();
        assert!(spread <= 2.0 * settings.bisect_tol);
    }

    #[test]
    fn linear_region_is_unbracketed() {
        let vs = VectorDelaySystem::linear(MatrixFn::scalar_identity(2, (-1.0).into()));
        let angles: Vec<f64> = polar_angles().into_iter().step_by(50).collect();
        let region = estimate_vector_region(&vs, 5.0, &angles, &RadiusSettings::default()).unwrap();
        assert!(region.radii.iter().all(|r| r.unbracketed_above));
        let three = VectorDelaySystem::linear(MatrixFn::zeros(3));
        assert!(matches!(
            estimate_vector_region(&three, 1.0, &angles, &RadiusSettings::default()),
            Err(AnalysisError::Usage(_))
        ));
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let ss = cubic_scalar();
        let out = build_perturbed_scalar(&ss, &PolynomialMajorant::zero(1), vec![]).unwrap();
        assert!(out.perturbation.is_none());
        let l_r = PolynomialMajorant::perturbation(1, vec![PolynomialTerm::new(0.01.into(), vec![0])]).unwrap();
        let out = build_perturbed_scalar(&ss, &l_r, vec![]).unwrap();
        assert!(out.perturbation.is_some());
        assert!(build_perturbed_scalar(&ss, &l_r, vec![1.0.into()]).is_err());
    }

    #[test]
    fn robust_check_from_scalar_system() {
        let r = robust_check_for_scalar(&cubic_scalar(), 10.0, 0.0, &RobustSettings::default()).unwrap();
        assert!((r.y_plus - 2f64.sqrt()).abs() < 1e-8);
    }
}
