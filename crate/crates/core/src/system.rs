//! Vector and scalar delay systems.

use thiserror::Error;

use crate::dde::{self, DdeError, DelayRhs, DelaySpec, History, ToleranceSettings, Trajectory};
use crate::linalg::euclidean_norm;
use crate::majorant::{PolynomialField, PolynomialMajorant};
use crate::timefn::{grid_sup, MatrixFn, TimeFn, SUP_SAMPLES};

/// Allowed deviation of `sup |e(t)|` from 1.
pub const FORCING_NORM_TOLERANCE: f64 = 1e-2;

/// Samples used when checking history and coefficient invariants.
const CHECK_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("delayed linear term refers to delay slot {slot}, but only {lags} delays exist")]
    SlotOutOfRange { slot: usize, lags: usize },
    #[error("forcing amplitude must be nonnegative, got {0}")]
    NegativeAmplitude(f64),
    #[error("sup |e(t)| = {0} is not 1 (forcing shape must be normalized)")]
    ForcingNotNormalized(f64),
    #[error("scalar history is negative ({value}) at t = {t}")]
    NegativeHistory { t: f64, value: f64 },
    #[error("c(t) = {value} < 1 at t = {t}")]
    ConditionBelowOne { t: f64, value: f64 },
    #[error("majorant takes {got} arguments but the system has {expected} slots")]
    MajorantArity { expected: usize, got: usize },
    #[error(transparent)]
    Dde(#[from] DdeError),
}

/// `B(t) x(t - h_slot(t))`, with `slot` counted from 1.
#[derive(Debug, Clone)]
pub struct LinearDelayTerm {
    pub slot: usize,
    pub matrix: MatrixFn,
}

/// `x' = (A0 + A1) x + Σ B_i x(t - h_i) + f(t, x, x(t - h_1), ...) + F0 e(t)`.
///
/// `A1` is the part of the linear coefficient that the reduction moves into
/// the majorant; it is `None` when the whole of `A` goes into `w(t)`.
#[derive(Debug, Clone)]
pub struct VectorDelaySystem {
    pub dim: usize,
    pub t0: f64,
    pub a0: MatrixFn,
    pub a1: Option<MatrixFn>,
    pub delayed_linear: Vec<LinearDelayTerm>,
    pub nonlinear: PolynomialField,
    pub forcing_amplitude: f64,
    pub forcing_shape: Vec<TimeFn>,
    pub delays: Vec<TimeFn>,
    pub history: History,
}

impl VectorDelaySystem {
    /// The linear system `x' = A x` with zero history.
    pub fn linear(a: MatrixFn) -> Self {
        let dim = a.dim();
        VectorDelaySystem {
            dim,
            t0: 0.0,
            a0: a,
            a1: None,
            delayed_linear: Vec::new(),
            nonlinear: PolynomialField::zero(dim, 0),
            forcing_amplitude: 0.0,
            forcing_shape: vec![TimeFn::zero(); dim],
            delays: Vec::new(),
            history: History::zero(dim),
        }
    }

    pub fn with_delays(mut self, delays: Vec<TimeFn>) -> Self {
        self.delays = delays;
        self
    }

    pub fn with_split(mut self, a1: MatrixFn) -> Self {
        self.a1 = Some(a1);
        self
    }

    pub fn with_delayed_linear(mut self, term: LinearDelayTerm) -> Self {
        self.delayed_linear.push(term);
        self
    }

    pub fn with_nonlinear(mut self, field: PolynomialField) -> Self {
        self.nonlinear = field;
        self
    }

    pub fn with_forcing(mut self, amplitude: f64, shape: Vec<TimeFn>) -> Self {
        self.forcing_amplitude = amplitude;
        self.forcing_shape = shape;
        self
    }

    pub fn with_history(mut self, history: History) -> Self {
        self.history = history;
        self
    }

    pub fn with_constant_history(self, x0: Vec<f64>) -> Self {
        self.with_history(History::constant(x0))
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// The same system with `F0 = 0`.
    pub fn homogeneous(&self) -> Self {
        let mut out = self.clone();
        out.forcing_amplitude = 0.0;
        out
    }

    /// `A0 + A1`.
    pub fn full_matrix(&self) -> MatrixFn {
        match &self.a1 {
            Some(a1) => self.a0.add(a1),
            None => self.a0.clone(),
        }
    }

    /// `|e(t)|`.
    pub fn forcing_norm(&self) -> TimeFn {
        if self.forcing_shape.iter().all(TimeFn::is_zero) {
            return TimeFn::zero();
        }
        let shape = self.forcing_shape.clone();
        TimeFn::from_fn(move |t| {
            let v: Vec<f64> = shape.iter().map(|e| e.eval(t)).collect();
            euclidean_norm(&v)
        })
    }

    pub fn delay_spec(&self, t_end: f64) -> Result<DelaySpec, SystemError> {
        Ok(DelaySpec::sample(&self.delays, self.t0, t_end)?)
    }

    /// Checks dimensions, slot references, delay bounds and the forcing
    /// normalization on `[t0, t_end]`.
    pub fn validate(&self, t_end: f64) -> Result<DelaySpec, SystemError> {
        let n = self.dim;
        let dim_check = |what, got| {
            if got == n {
                Ok(())
            } else {
                Err(SystemError::Dimension { what, expected: n, got })
            }
        };
        dim_check("A0", self.a0.dim())?;
        if let Some(a1) = &self.a1 {
            dim_check("A1", a1.dim())?;
        }
        dim_check("forcing shape", self.forcing_shape.len())?;
        dim_check("history", self.history.dim())?;
        dim_check("nonlinear term", self.nonlinear.dim())?;
        for term in &self.delayed_linear {
            dim_check("delayed linear term", term.matrix.dim())?;
            if term.slot == 0 || term.slot > self.delays.len() {
                return Err(SystemError::SlotOutOfRange {
                    slot: term.slot,
                    lags: self.delays.len(),
                });
            }
        }
        if self.nonlinear.lag_count() > self.delays.len() {
            return Err(SystemError::SlotOutOfRange {
                slot: self.nonlinear.lag_count(),
                lags: self.delays.len(),
            });
        }
        if !(self.forcing_amplitude >= 0.0) {
            return Err(SystemError::NegativeAmplitude(self.forcing_amplitude));
        }
        if self.forcing_amplitude > 0.0 {
            let sup = grid_sup(&self.forcing_norm(), self.t0, t_end, SUP_SAMPLES, 0.0)
                .map_err(|_| SystemError::ForcingNotNormalized(f64::NAN))?;
            if (sup - 1.0).abs() > FORCING_NORM_TOLERANCE {
                return Err(SystemError::ForcingNotNormalized(sup));
            }
        }
        self.delay_spec(t_end)
    }

    /// Integrates on `[t0, t_end]`.
    pub fn integrate(&self, t_end: f64, tol: &ToleranceSettings) -> Result<Trajectory, SystemError> {
        self.validate(t_end)?;
        Ok(dde::integrate(self, &self.history, self.t0, t_end, tol)?)
    }
}

impl DelayRhs for VectorDelaySystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lags(&self) -> &[TimeFn] {
        &self.delays
    }

    fn eval(&self, t: f64, x: &[f64], lagged: &[f64], dx: &mut [f64]) {
        let n = self.dim;
        self.a0.apply(t, x, dx);
        let mut tmp = [0.0f64; 8];
        let mut heap;
        let buf: &mut [f64] = if n <= tmp.len() {
            &mut tmp[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        if let Some(a1) = &self.a1 {
            a1.apply(t, x, buf);
            for (d, b) in dx.iter_mut().zip(buf.iter()) {
                *d += b;
            }
        }
        for term in &self.delayed_linear {
            let block = &lagged[(term.slot - 1) * n..term.slot * n];
            term.matrix.apply(t, block, buf);
            for (d, b) in dx.iter_mut().zip(buf.iter()) {
                *d += b;
            }
        }
        self.nonlinear.accumulate(t, x, lagged, dx);
        if self.forcing_amplitude != 0.0 {
            for (d, e) in dx.iter_mut().zip(&self.forcing_shape) {
                *d += self.forcing_amplitude * e.eval(t);
            }
        }
    }
}

/// The extra `c(t) L_R(t, |z|, |z(t - h*_1)|, ...)` term of a perturbed
/// scalar system.
#[derive(Debug, Clone)]
pub struct ScalarPerturbation {
    pub majorant: PolynomialMajorant,
    pub delays: Vec<TimeFn>,
}

/// `y' = p(t) y + c(t) (L(t, |y|, |y(t - h_1)|, ...) + F0 |e(t)|)`, plus an
/// optional perturbation term.
#[derive(Debug, Clone)]
pub struct ScalarDelaySystem {
    pub t0: f64,
    pub p: TimeFn,
    pub c: TimeFn,
    pub majorant: PolynomialMajorant,
    pub forcing_amplitude: f64,
    /// `|e(t)|`.
    pub forcing_shape: TimeFn,
    pub delays: Vec<TimeFn>,
    pub history: History,
    pub perturbation: Option<ScalarPerturbation>,
    all_lags: Vec<TimeFn>,
}

impl ScalarDelaySystem {
    pub fn new(p: TimeFn, c: TimeFn, majorant: PolynomialMajorant, delays: Vec<TimeFn>) -> Self {
        ScalarDelaySystem {
            t0: 0.0,
            p,
            c,
            majorant,
            forcing_amplitude: 0.0,
            forcing_shape: TimeFn::zero(),
            all_lags: delays.clone(),
            delays,
            history: History::scalar(0.0),
            perturbation: None,
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

    pub fn with_constant_history(self, q: f64) -> Self {
        self.with_history(History::scalar(q))
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_perturbation(mut self, perturbation: Option<ScalarPerturbation>) -> Self {
        self.all_lags = self.delays.clone();
        if let Some(p) = &perturbation {
            self.all_lags.extend(p.delays.iter().cloned());
        }
        self.perturbation = perturbation;
        self
    }

    pub fn homogeneous(&self) -> Self {
        let mut out = self.clone();
        out.forcing_amplitude = 0.0;
        out
    }

    /// True when every coefficient is a constant.
    pub fn is_autonomous(&self) -> bool {
        self.p.as_constant().is_some()
            && self.c.as_constant().is_some()
            && self.majorant.terms().iter().all(|t| t.coeff.as_constant().is_some())
            && (self.forcing_amplitude == 0.0 || self.forcing_shape.as_constant().is_some())
            && self.delays.iter().all(|h| h.as_constant().is_some())
    }

    /// Checks the majorant arity, `c >= 1` and history nonnegativity.
    pub fn validate(&self, t_end: f64) -> Result<DelaySpec, SystemError> {
        let slots = self.delays.len() + 1;
        if self.majorant.arg_count() != slots {
            return Err(SystemError::MajorantArity {
                expected: slots,
                got: self.majorant.arg_count(),
            });
        }
        if let Some(p) = &self.perturbation {
            if p.majorant.arg_count() != p.delays.len() + 1 {
                return Err(SystemError::MajorantArity {
                    expected: p.delays.len() + 1,
                    got: p.majorant.arg_count(),
                });
            }
        }
        if self.history.dim() != 1 {
            return Err(SystemError::Dimension {
                what: "scalar history",
                expected: 1,
                got: self.history.dim(),
            });
        }
        if !(self.forcing_amplitude >= 0.0) {
            return Err(SystemError::NegativeAmplitude(self.forcing_amplitude));
        }
        let spec = DelaySpec::sample(&self.all_lags, self.t0, t_end)?;
        let h0 = self.t0 - spec.h_bar;
        for t in dde::uniform_grid(h0, self.t0, CHECK_SAMPLES) {
            let value = self.history.eval(t)[0];
            if !(value >= 0.0) {
                return Err(SystemError::NegativeHistory { t, value });
            }
        }
        let c_grid: Box<dyn Iterator<Item = f64>> = match self.c.as_constant() {
            Some(_) => Box::new(std::iter::once(self.t0)),
            None => Box::new(dde::uniform_grid(self.t0, t_end, CHECK_SAMPLES).into_iter()),
        };
        for t in c_grid {
            let value = self.c.eval(t);
            // Numerical c sits at 1 up to rounding.
            if !(value >= 1.0 - 1e-9) {
                return Err(SystemError::ConditionBelowOne { t, value });
            }
        }
        Ok(spec)
    }

    pub fn integrate(&self, t_end: f64, tol: &ToleranceSettings) -> Result<Trajectory, SystemError> {
        self.validate(t_end)?;
        Ok(dde::integrate(self, &self.history, self.t0, t_end, tol)?)
    }
}

impl DelayRhs for ScalarDelaySystem {
    fn dim(&self) -> usize {
        1
    }

    fn lags(&self) -> &[TimeFn] {
        &self.all_lags
    }

    fn eval(&self, t: f64, x: &[f64], lagged: &[f64], dx: &mut [f64]) {
        let y = x[0];
        let m = self.delays.len();
        let c = self.c.eval(t);
        let mut drive = self.majorant.eval_scalar(t, y, &lagged[..m]);
        if self.forcing_amplitude != 0.0 {
            drive += self.forcing_amplitude * self.forcing_shape.eval(t).abs();
        }
        if let Some(p) = &self.perturbation {
            drive += p.majorant.eval_scalar(t, y, &lagged[m..]);
        }
        dx[0] = self.p.eval(t) * y + c * drive;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::{Factor, Monomial, PolynomialTerm};

    fn cubic_delay_field(b: f64) -> PolynomialField {
        PolynomialField::new(
            2,
            1,
            vec![Monomial {
                coordinate: 1,
                coeff: b.into(),
                factors: vec![Factor { coord: 1, slot: 1, power: 3 }],
            }],
        )
        .unwrap()
    }

    #[test]
    fn vector_rhs_assembles_all_parts() {
        let sys = VectorDelaySystem::linear(MatrixFn::scalar_identity(2, (-1.0).into()))
            .with_split(MatrixFn::new(
                2,
                vec![0.0.into(), 1.0.into(), (-1.0).into(), 0.0.into()],
            ))
            .with_delays(vec![0.5.into()])
            .with_delayed_linear(LinearDelayTerm {
                slot: 1,
                matrix: MatrixFn::scalar_identity(2, 2.0.into()),
            })
            .with_nonlinear(cubic_delay_field(0.1))
            .with_forcing(3.0, vec![0.0.into(), 1.0.into()]);
        let mut dx = [0.0; 2];
        sys.eval(0.0, &[1.0, 2.0], &[1.0, 2.0], &mut dx);
        // A0 x = (-1, -2), A1 x = (2, -1), B x(t-h) = (2, 4), f = (0, 0.8), F = (0, 3)
        assert!((dx[0] - 3.0).abs() < 1e-15);
        assert!((dx[1] - 4.8).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_bad_inputs() {
        let base = VectorDelaySystem::linear(MatrixFn::zeros(2)).with_delays(vec![0.5.into()]);
        assert!(base.validate(10.0).is_ok());
        let bad_slot = base.clone().with_delayed_linear(LinearDelayTerm {
            slot: 2,
            matrix: MatrixFn::zeros(2),
        });
        assert!(matches!(
            bad_slot.validate(10.0),
            Err(SystemError::SlotOutOfRange { slot: 2, .. })
        ));
        let unnormalized = base.clone().with_forcing(1.0, vec![0.0.into(), 0.5.into()]);
        assert!(matches!(
            unnormalized.validate(10.0),
            Err(SystemError::ForcingNotNormalized(_))
        ));
        let normalized = base.clone().with_forcing(
            1.0,
            vec![0.0.into(), TimeFn::from_fn(|t| (10.0 * t).sin())],
        );
        assert!(normalized.validate(50.0).is_ok());
        let wrong_history = base.with_constant_history(vec![1.0]);
        assert!(matches!(
            wrong_history.validate(10.0),
            Err(SystemError::Dimension { what: "history", .. })
        ));
    }

    #[test]
    fn scalar_rhs_uses_magnitudes() {
        let l = PolynomialMajorant::new(2, vec![PolynomialTerm::new((-0.5).into(), vec![0, 3])])
            .unwrap();
        let sys = ScalarDelaySystem::new((-2.0).into(), 1.5.into(), l, vec![1.0.into()])
            .with_forcing(2.0, TimeFn::from_fn(|t| t.sin()));
        let mut dx = [0.0];
        let t = -1.0f64;
        sys.eval(t, &[1.0], &[-2.0], &mut dx);
        let expected = -2.0 + 1.5 * (0.5 * 8.0 + 2.0 * t.sin().abs());
        assert!((dx[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn scalar_validation() {
        let sys = ScalarDelaySystem::new((-1.0).into(), 1.0.into(), PolynomialMajorant::zero(2), vec![
            1.0.into(),
        ]);
        assert!(sys.validate(5.0).is_ok());
        assert!(matches!(
            sys.clone().with_constant_history(-0.1).validate(5.0),
            Err(SystemError::NegativeHistory { .. })
        ));
        let low_c = ScalarDelaySystem::new((-1.0).into(), 0.5.into(), PolynomialMajorant::zero(2), vec![
            1.0.into(),
        ]);
        assert!(matches!(low_c.validate(5.0), Err(SystemError::ConditionBelowOne { .. })));
        let wrong_arity =
            ScalarDelaySystem::new((-1.0).into(), 1.0.into(), PolynomialMajorant::zero(1), vec![1.0.into()]);
        assert!(matches!(wrong_arity.validate(5.0), Err(SystemError::MajorantArity { .. })));
    }

    #[test]
    fn perturbation_adds_lags() {
        let sys = ScalarDelaySystem::new((-1.0).into(), 1.0.into(), PolynomialMajorant::zero(2), vec![
            1.0.into(),
        ])
        .with_perturbation(Some(ScalarPerturbation {
            majorant: PolynomialMajorant::perturbation(2, vec![PolynomialTerm::new(0.2.into(), vec![0, 0])])
                .unwrap(),
            delays: vec![1.01.into()],
        }));
        assert_eq!(sys.lags().len(), 2);
        let mut dx = [0.0];
        sys.eval(0.0, &[1.0], &[0.0, 0.0], &mut dx);
        assert!((dx[0] - (-0.8)).abs() < 1e-15);
    }
}
