//! Method-of-steps integration of delay differential equations.
//!
//! The integrator is the Bogacki–Shampine 3(2) embedded pair with local
//! extrapolation and cubic Hermite dense output. Steps never exceed the
//! minimal delay and are broken at `t0 + k * h_under`, so every delayed
//! argument refers to history or to already accepted segments.

mod history;
mod integrator;
mod trajectory;

use thiserror::Error;

use crate::timefn::TimeFn;

pub use history::History;
pub use integrator::{integrate, integrate_from};
pub use trajectory::{
    detect_blowup, sup_norm_on_interval, uniform_grid, BlowupStatus, Termination, Trajectory,
};

/// Samples used to establish the delay bounds over a horizon.
const DELAY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DdeError {
    #[error("delay h_{lag} evaluated to {value} at t = {t}; delays must be finite and positive")]
    InvalidDelay { lag: usize, t: f64, value: f64 },
    #[error("delayed argument {arg} at t = {t} falls below the history interval start {start}")]
    MalformedDelay { t: f64, arg: f64, start: f64 },
    #[error("delayed argument {arg} at t = {t} lies ahead of the computed solution (ends at {end})")]
    LagAheadOfSolution { t: f64, arg: f64, end: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite right-hand side at t = {t}")]
    NonFiniteRhs { t: f64 },
    #[error("maximum step count {max_steps} exceeded at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("horizon {t_end} must exceed the initial time {t0}")]
    InvalidHorizon { t0: f64, t_end: f64 },
    #[error("t = {t} is outside the trajectory domain [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("invalid tolerance settings: {0}")]
    InvalidTolerance(String),
}

/// Error control and termination settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Integration stops once `|x|` reaches this value.
    pub cap: f64,
    pub max_steps: usize,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        ToleranceSettings {
            rtol: 1e-6,
            atol: 1e-9,
            cap: 1e6,
            max_steps: 2_000_000,
        }
    }
}

impl ToleranceSettings {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    /// `rtol` and `atol` scaled by the same factor.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rtol *= factor;
        self.atol *= factor;
        self
    }

    fn validate(&self) -> Result<(), DdeError> {
        if !(self.rtol > 0.0) || !(self.atol >= 0.0) || !(self.cap > 0.0) {
            return Err(DdeError::InvalidTolerance(format!(
                "rtol = {}, atol = {}, cap = {}",
                self.rtol, self.atol, self.cap
            )));
        }
        Ok(())
    }
}

/// Delay bounds `h_under <= h_i(t) <= h_bar` established by sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySpec {
    pub h_bar: f64,
    pub h_under: f64,
}

impl DelaySpec {
    /// Samples every delay on `[t0, t_end]`. With no delays `h_bar = 0` and
    /// `h_under = inf`.
    pub fn sample(delays: &[TimeFn], t0: f64, t_end: f64) -> Result<Self, DdeError> {
        let mut h_bar: f64 = 0.0;
        let mut h_under = f64::INFINITY;
        for (lag, h) in delays.iter().enumerate() {
            let samples: Box<dyn Iterator<Item = f64>> = match h.as_constant() {
                Some(_) => Box::new(std::iter::once(t0)),
                None => Box::new(uniform_grid(t0, t_end, DELAY_SAMPLES).into_iter()),
            };
            for t in samples {
                let value = h.eval(t);
                if !(value.is_finite() && value > 0.0) {
                    return Err(DdeError::InvalidDelay { lag: lag + 1, t, value });
                }
                h_bar = h_bar.max(value);
                h_under = h_under.min(value);
            }
        }
        Ok(DelaySpec { h_bar, h_under })
    }
}

/// Right-hand side of `x'(t) = F(t, x(t), x(t - h_1(t)), ..., x(t - h_m(t)))`.
pub trait DelayRhs: Sync {
    fn dim(&self) -> usize;

    /// The delays `h_1, ..., h_m`.
    fn lags(&self) -> &[TimeFn];

    /// `lagged` holds `m` consecutive blocks of `dim` values,
    /// block `i` being `x(t - h_{i+1}(t))`.
    fn eval(&self, t: f64, x: &[f64], lagged: &[f64], dx: &mut [f64]);
}

/// A [`DelayRhs`] backed by a closure.
pub struct FnRhs<F> {
    dim: usize,
    lags: Vec<TimeFn>,
    f: F,
}

impl<F> FnRhs<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, lags: Vec<TimeFn>, f: F) -> Self {
        FnRhs { dim, lags, f }
    }
}

impl<F> DelayRhs for FnRhs<F>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn lags(&self) -> &[TimeFn] {
        &self.lags
    }

    fn eval(&self, t: f64, x: &[f64], lagged: &[f64], dx: &mut [f64]) {
        (self.f)(t, x, lagged, dx)
    }
}
