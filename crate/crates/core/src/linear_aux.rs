//! Linear scalar auxiliary equations
//! `u' = P(t) u + Σ d_i(t) u(t - h_i(t)) + F0 g(t)`.

use thiserror::Error;

use crate::dde::{self, DdeError, DelayRhs, History, ToleranceSettings, Trajectory};
use crate::majorant::{linearize_majorant, sup_linear_coefficients, MajorantError};
use crate::system::ScalarDelaySystem;
use crate::timefn::{grid_sup, SupError, TimeFn, SUP_SAMPLES};

/// Points of the uniform grid used by the superposition check.
pub const SUPERPOSITION_GRID: usize = 2001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearAuxError {
    #[error("horizon {t_end} must exceed the start time {start}")]
    InvalidHorizon { start: f64, t_end: f64 },
    #[error("delayed coefficient {index} is negative ({value}) at t = {t}")]
    NegativeCoefficient { index: usize, t: f64, value: f64 },
    #[error("perturbed systems have no linear auxiliary form")]
    Perturbed,
    #[error("series lengths differ: {0}")]
    Mismatch(String),
    #[error("supremum of {what}: {source}")]
    Sup { what: &'static str, source: SupError },
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    Integration(#[from] DdeError),
}

/// A linear scalar delay equation. `zeta_tilde` records the linearization
/// radius the coefficients were built with, if any.
#[derive(Debug, Clone)]
pub struct LinearScalarDDE {
    pub t0: f64,
    pub rate: TimeFn,
    pub delayed: Vec<TimeFn>,
    pub delays: Vec<TimeFn>,
    pub forcing_amplitude: f64,
    pub forcing_shape: TimeFn,
    pub history: History,
    pub zeta_tilde: Option<f64>,
}

impl LinearScalarDDE {
    pub fn new(rate: TimeFn, delayed: Vec<(TimeFn, TimeFn)>) -> Self {
        let (delayed, delays) = delayed.into_iter().unzip();
        LinearScalarDDE {
            t0: 0.0,
            rate,
            delayed,
            delays,
            forcing_amplitude: 0.0,
            forcing_shape: TimeFn::zero(),
            history: History::scalar(0.0),
            zeta_tilde: None,
        }
    }

    pub fn with_forcing(mut self, amplitude: f64, shape: TimeFn) -> Self {
        self.forcing_amplitude = amplitude;
        self.forcing_shape = shape;
        self
    }

    pub fn with_history(mut self, history: History) -> Self {
        self.history = history;
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// `u' = (p + c μ_1) u + c (Σ μ_i u(t - h_i) + F0 |e|)` from the
    /// linearization of `ss` at radius `zeta_tilde`.
    pub fn from_scalar(ss: &ScalarDelaySystem, zeta_tilde: f64) -> Result<Self, LinearAuxError> {
        if ss.perturbation.is_some() {
            return Err(LinearAuxError::Perturbed);
        }
        let lc = linearize_majorant(&ss.majorant, zeta_tilde)?;
        let rate = ss.p.sum(&ss.c.product(&lc.mu[0]));
        let delayed = lc.mu[1..].iter().map(|mu| ss.c.product(mu)).collect();
        Ok(LinearScalarDDE {
            t0: ss.t0,
            rate,
            delayed,
            delays: ss.delays.clone(),
            forcing_amplitude: ss.forcing_amplitude,
            forcing_shape: ss.c.product(&ss.forcing_shape.magnitude()),
            history: ss.history.clone(),
            zeta_tilde: Some(zeta_tilde),
        })
    }

    /// Constant-coefficient form `U' = (p̂ + ĉ μ̂_1) U + ĉ (Σ μ̂_i U(t - h_i)
    /// + F0 sup|e|)` with every sup taken on `[t0, t_end]` and inflated by
    /// `margin`.
    pub fn autonomous(
        ss: &ScalarDelaySystem,
        zeta_tilde: f64,
        t_end: f64,
        margin: f64,
    ) -> Result<Self, LinearAuxError> {
        if ss.perturbation.is_some() {
            return Err(LinearAuxError::Perturbed);
        }
        let t0 = ss.t0;
        let sup = |f: &TimeFn, what| {
            grid_sup(f, t0, t_end, SUP_SAMPLES, margin).map_err(|source| LinearAuxError::Sup { what, source })
        };
        let p_hat = sup(&ss.p, "p(t)")?;
        let c_hat = sup(&ss.c, "c(t)")?;
        let e_hat = sup(&ss.forcing_shape.magnitude(), "|e(t)|")?;
        let lc = linearize_majorant(&ss.majorant, zeta_tilde)?;
        let mu_hat = sup_linear_coefficients(&lc, t0, t_end, margin)?;
        Ok(LinearScalarDDE {
            t0,
            rate: TimeFn::Const(p_hat + c_hat * mu_hat[0]),
            delayed: mu_hat[1..].iter().map(|m| TimeFn::Const(c_hat * m)).collect(),
            delays: ss.delays.clone(),
            forcing_amplitude: ss.forcing_amplitude,
            forcing_shape: TimeFn::Const(c_hat * e_hat),
            history: ss.history.clone(),
            zeta_tilde: Some(zeta_tilde),
        })
    }

    pub fn homogeneous(&self) -> Self {
        let mut out = self.clone();
        out.forcing_amplitude = 0.0;
        out
    }

    /// Checks the delayed coefficients are nonnegative on `[t0, t_end]`.
    pub fn validate(&self, t_end: f64) -> Result<(), LinearAuxError> {
        for (index, d) in self.delayed.iter().enumerate() {
            let grid: Vec<f64> = match d.as_constant() {
                Some(_) => vec![self.t0],
                None => dde::uniform_grid(self.t0, t_end, 1000),
            };
            for t in grid {
                let value = d.eval(t);
                if !(value >= 0.0) {
                    return Err(LinearAuxError::NegativeCoefficient { index, t, value });
                }
            }
        }
        Ok(())
    }

    /// Integrates from the stored history and tracks the linearization
    /// domain `|u| <= ζ̃`.
    pub fn simulate(&self, t_end: f64, tol: &ToleranceSettings) -> Result<LinearizedRun, LinearAuxError> {
        self.validate(t_end)?;
        let traj = dde::integrate(self, &self.history, self.t0, t_end, tol)?;
        Ok(LinearizedRun::new(traj, self.zeta_tilde))
    }
}

impl DelayRhs for LinearScalarDDE {
    fn dim(&self) -> usize {
        1
    }

    fn lags(&self) -> &[TimeFn] {
        &self.delays
    }

    fn eval(&self, t: f64, x: &[f64], lagged: &[f64], dx: &mut [f64]) {
        let mut v = self.rate.eval(t) * x[0];
        for (d, u) in self.delayed.iter().zip(lagged) {
            v += d.eval(t) * u;
        }
        if self.forcing_amplitude != 0.0 {
            v += self.forcing_amplitude * self.forcing_shape.eval(t);
        }
        dx[0] = v;
    }
}

/// A linear auxiliary trajectory with its linearization-domain status.
#[derive(Debug, Clone)]
pub struct LinearizedRun {
    pub traj: Trajectory,
    pub zeta_tilde: Option<f64>,
    pub within_domain: bool,
    /// First node time where `|u|` exceeded `ζ̃`.
    pub first_exit: Option<f64>,
}

impl LinearizedRun {
    fn new(traj: Trajectory, zeta_tilde: Option<f64>) -> Self {
        let first_exit = zeta_tilde.and_then(|z| {
            (0..traj.node_count())
                .find(|&k| traj.node_state(k)[0].abs() > z)
                .map(|k| traj.node_times()[k])
        });
        LinearizedRun {
            traj,
            zeta_tilde,
            within_domain: first_exit.is_none(),
            first_exit,
        }
    }
}

/// `C(t, s)`: the homogeneous response to the value 1 at `s` with zero
/// pre-history.
pub fn cauchy_function(
    sys: &LinearScalarDDE,
    s: f64,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<Trajectory, LinearAuxError> {
    if !(t_end > s) {
        return Err(LinearAuxError::InvalidHorizon { start: s, t_end });
    }
    let homogeneous = sys.homogeneous();
    Ok(dde::integrate_from(&homogeneous, &History::scalar(0.0), s, Some(&[1.0]), t_end, tol)?)
}

/// `u_nh(t, 0)`: zero history and unit forcing amplitude.
pub fn particular_response(
    sys: &LinearScalarDDE,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<Trajectory, LinearAuxError> {
    let mut forced = sys.clone();
    forced.forcing_amplitude = 1.0;
    forced.history = History::scalar(0.0);
    Ok(dde::integrate(&forced, &forced.history, sys.t0, t_end, tol)?)
}

/// Residual of `u(t, φ) = u_h(t, φ) + F0 u_nh(t, 0)`.
#[derive(Debug, Clone)]
pub struct SuperpositionReport {
    pub max_residual: f64,
    pub full: Trajectory,
    pub homogeneous: Trajectory,
    pub particular: Trajectory,
}

/// Integrates the full, homogeneous and particular problems and returns the
/// largest superposition residual on a uniform grid.
pub fn superposition_check(
    sys: &LinearScalarDDE,
    history: &History,
    f0: f64,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<SuperpositionReport, LinearAuxError> {
    let mut full_sys = sys.clone().with_history(history.clone());
    full_sys.forcing_amplitude = f0;
    let full = dde::integrate(&full_sys, history, sys.t0, t_end, tol)?;
    let homogeneous = dde::integrate(&full_sys.homogeneous(), history, sys.t0, t_end, tol)?;
    let particular = particular_response(sys, t_end, tol)?;
    let grid = dde::uniform_grid(sys.t0, t_end, SUPERPOSITION_GRID);
    let u = full.scalar_on_grid(&grid)?;
    let uh = homogeneous.scalar_on_grid(&grid)?;
    let unh = particular.scalar_on_grid(&grid)?;
    let max_residual = (0..grid.len())
        .map(|k| (u[k] - (uh[k] + f0 * unh[k])).abs())
        .fold(0.0, f64::max);
    Ok(SuperpositionReport {
        max_residual,
        full,
        homogeneous,
        particular,
    })
}

/// Pointwise check of `|x(t)| <= u_h(t) + F0 u_nh(t)`.
#[derive(Debug, Clone)]
pub struct IssReport {
    pub grid: Vec<f64>,
    pub vector_norms: Vec<f64>,
    pub bounds: Vec<f64>,
    pub max_violation: f64,
    pub first_violation: Option<f64>,
}

impl IssReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

pub fn iss_bound_series(
    vector_traj: &Trajectory,
    u_h: &Trajectory,
    u_nh: &Trajectory,
    f0: f64,
    grid: &[f64],
) -> Result<IssReport, LinearAuxError> {
    let vector_norms = vector_traj.norms_on_grid(grid)?;
    let uh = u_h.scalar_on_grid(grid)?;
    let unh = u_nh.scalar_on_grid(grid)?;
    let bounds: Vec<f64> = uh.iter().zip(&unh).map(|(a, b)| a + f0 * b).collect();
    let mut max_violation: f64 = 0.0;
    let mut first_violation = None;
    for (k, (&x, &b)) in vector_norms.iter().zip(&bounds).enumerate() {
        let excess = if x.is_infinite() && b.is_infinite() { 0.0 } else { x - b };
        if excess > 0.0 && first_violation.is_none() {
            first_violation = Some(grid[k]);
        }
        max_violation = max_violation.max(excess);
    }
    Ok(IssReport {
        grid: grid.to_vec(),
        vector_norms,
        bounds,
        max_violation,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::{PolynomialMajorant, PolynomialTerm};

    fn tight() -> ToleranceSettings {
        ToleranceSettings::default().with_rtol(1e-9).with_atol(1e-12)
    }

    #[test]
    fn cauchy_of_zero_field_is_one() {
        let sys = LinearScalarDDE::new(TimeFn::zero(), vec![]);
        let c = cauchy_function(&sys, 1.0, 4.0, &tight()).unwrap();
        for t in [1.0, 2.0, 3.9] {
            assert_eq!(c.eval(t).unwrap()[0], 1.0);
        }
    }

    #[test]
    fn cauchy_of_ode_is_exponential() {
        let sys = LinearScalarDDE::new((-0.7).into(), vec![]);
        let c = cauchy_function(&sys, 0.5, 3.0, &tight()).unwrap();
        for t in [0.5f64, 1.0, 2.5, 3.0] {
            let exact = (-0.7 * (t - 0.5)).exp();
            assert!((c.eval(t).unwrap()[0] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn cauchy_sees_zero_prehistory() {
        let sys = LinearScalarDDE::new(TimeFn::zero(), vec![((-1.0).into(), 1.0.into())]);
        let s = 2.0;
        let c = cauchy_function(&sys, s, s + 2.0, &tight()).unwrap();
        assert_eq!(c.eval(s + 0.5).unwrap()[0], 1.0);
        assert_eq!(c.eval(s + 1.0).unwrap()[0], 1.0);
        // On [s + 1, s + 2]: C = 1 - (t - s - 1).
        assert!((c.eval(s + 1.5).unwrap()[0] - 0.5).abs() < 1e-8);
        assert!(cauchy_function(&sys, s, s, &tight()).is_err());
    }

    #[test]
    fn particular_response_of_relaxation() {
        let sys = LinearScalarDDE::new((-1.0).into(), vec![]).with_forcing(5.0, 1.0.into());
        let unh = particular_response(&sys, 4.0, &tight()).unwrap();
        for t in [0.0, 1.0, 3.0] {
            assert!((unh.eval(t).unwrap()[0] - (1.0 - (-t).exp())).abs() < 1e-8);
        }
        let zero = particular_response(&sys.clone().with_forcing(1.0, TimeFn::zero()), 4.0, &tight())
            .unwrap();
        assert_eq!(zero.final_state()[0], 0.0);
    }

    #[test]
    fn superposition_of_relaxation() {
        let sys = LinearScalarDDE::new((-1.0).into(), vec![]).with_forcing(1.0, 1.0.into());
        let report = superposition_check(&sys, &History::scalar(1.0), 2.5, 5.0, &tight()).unwrap();
        assert!(report.max_residual < 1e-8);
        let t = 2.0f64;
        let exact = 2.5 + (1.0 - 2.5) * (-t).exp();
        assert!((report.full.eval(t).unwrap()[0] - exact).abs() < 1e-8);
        let zero = superposition_check(&sys, &History::scalar(1.0), 0.0, 5.0, &tight()).unwrap();
        assert!(zero.max_residual < 1e-12);
    }

    #[test]
    fn homogeneous_solution_is_linear_in_history() {
        let sys = LinearScalarDDE::new((-1.0).into(), vec![(0.4.into(), 0.7.into())]);
        let tol = ToleranceSettings::default();
        let a = sys.clone().with_history(History::scalar(0.3)).simulate(10.0, &tol).unwrap();
        let b = sys.with_history(History::scalar(0.9)).simulate(10.0, &tol).unwrap();
        for t in [0.5, 2.0, 7.0, 10.0] {
            let ua = a.traj.eval(t).unwrap()[0];
            let ub = b.traj.eval(t).unwrap()[0];
            assert!((3.0 * ua - ub).abs() < 1e-6, "{t}: {ua} {ub}");
        }
    }

    #[test]
    fn linearization_domain_is_tracked() {
        let l = PolynomialMajorant::new(1, vec![PolynomialTerm::new(1.0.into(), vec![3])]).unwrap();
        let ss = ScalarDelaySystem::new(0.5.into(), 1.0.into(), l, vec![]).with_constant_history(0.1);
        let lin = LinearScalarDDE::from_scalar(&ss, 0.2).unwrap();
        assert_eq!(lin.rate.as_constant(), Some(0.5 + 0.04));
        let run = lin.simulate(5.0, &ToleranceSettings::default()).unwrap();
        assert!(!run.within_domain);
        let exit = run.first_exit.unwrap();
        // 0.1 e^{0.54 t} = 0.2 at t = ln 2 / 0.54.
        assert!(exit > 2f64.ln() / 0.54 - 0.2 && exit < 2f64.ln() / 0.54 + 0.2);
    }

    #[test]
    fn autonomous_form_uses_sups() {
        let l = PolynomialMajorant::new(
            2,
            vec![
                PolynomialTerm::new(TimeFn::from_fn(|t| 0.2 * t.sin()), vec![1, 0]),
                PolynomialTerm::new(0.1.into(), vec![0, 3]),
            ],
        )
        .unwrap();
        let ss = ScalarDelaySystem::new(TimeFn::from_fn(|t| -2.0 + 0.5 * t.cos()), 1.0.into(), l, vec![
            0.5.into(),
        ]);
        let u = LinearScalarDDE::autonomous(&ss, 0.5, 20.0, 0.0).unwrap();
        assert!((u.rate.as_constant().unwrap() - (-1.5 + 0.2)).abs() < 1e-6);
        assert!((u.delayed[0].as_constant().unwrap() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn iss_report_flags_violations() {
        let tol = ToleranceSettings::default();
        let decay = LinearScalarDDE::new((-1.0).into(), vec![]).with_history(History::scalar(1.0));
        let slow = LinearScalarDDE::new((-0.5).into(), vec![]).with_history(History::scalar(1.0));
        let fast = decay.simulate(5.0, &tol).unwrap().traj;
        let upper = slow.simulate(5.0, &tol).unwrap().traj;
        let zero = particular_response(&decay, 5.0, &tol).unwrap();
        let grid = dde::uniform_grid(0.0, 5.0, 50);
        assert!(iss_bound_series(&fast, &upper, &zero, 1.0, &grid).unwrap().holds(1e-9));
        let flipped = iss_bound_series(&upper, &fast, &zero, 1.0, &grid).unwrap();
        assert!(!flipped.holds(1e-9));
        assert!(flipped.first_violation.unwrap() > 0.0);
        assert!(iss_bound_series(&fast, &upper, &zero, 1.0, &[6.0]).is_err());
    }
}
