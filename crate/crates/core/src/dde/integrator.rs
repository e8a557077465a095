use crate::linalg::euclidean_norm;

use super::trajectory::{detect_blowup, BlowupStatus};
use super::{DdeError, DelayRhs, DelaySpec, History, Termination, ToleranceSettings, Trajectory};

// Bogacki–Shampine 3(2) coefficients.
const C2: f64 = 0.5;
const C3: f64 = 0.75;
const A21: f64 = 0.5;
const A32: f64 = 0.75;
const B1: f64 = 2.0 / 9.0;
const B2: f64 = 1.0 / 3.0;
const B3: f64 = 4.0 / 9.0;
const E1: f64 = -5.0 / 72.0;
const E2: f64 = 1.0 / 12.0;
const E3: f64 = 1.0 / 9.0;
const E4: f64 = -1.0 / 8.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const PI_ALPHA: f64 = 0.7 / 3.0;
const PI_BETA: f64 = 0.4 / 3.0;

/// Integrates from `t0` to `t_end` starting from `history(t0)`.
pub fn integrate<R: DelayRhs + ?Sized>(
    rhs: &R,
    history: &History,
    t0: f64,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<Trajectory, DdeError> {
    integrate_from(rhs, history, t0, None, t_end, tol)
}

/// Like [`integrate`], but `initial` (when given) overrides `history(t0)`.
/// Delayed arguments strictly before `t0` always read `history`; this is how
/// jump histories such as a Cauchy function's are realized.
pub fn integrate_from<R: DelayRhs + ?Sized>(
    rhs: &R,
    history: &History,
    t0: f64,
    initial: Option<&[f64]>,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<Trajectory, DdeError> {
    tol.validate()?;
    if !(t_end > t0) {
        return Err(DdeError::InvalidHorizon { t0, t_end });
    }
    let n = rhs.dim();
    if history.dim() != n {
        return Err(DdeError::DimensionMismatch {
            expected: n,
            got: history.dim(),
        });
    }
    let spec = DelaySpec::sample(rhs.lags(), t0, t_end)?;
    let span = t_end - t0;
    let h_max = spec.h_under.min(0.1 * span);

    let y0 = match initial {
        Some(v) if v.len() != n => {
            return Err(DdeError::DimensionMismatch {
                expected: n,
                got: v.len(),
            })
        }
        Some(v) => v.to_vec(),
        None => history.eval(t0),
    };

    let mut stepper = Stepper {
        rhs,
        history,
        t0,
        spec,
        n,
        lagged: vec![0.0; n * rhs.lags().len()],
    };

    let mut f0 = vec![0.0; n];
    let probe = Trajectory::start(n, t0, &y0, &f0);
    stepper.derivative(&probe, t0, &y0, &mut f0)?;
    if f0.iter().any(|v| !v.is_finite()) || y0.iter().any(|v| !v.is_finite()) {
        return Err(DdeError::NonFiniteRhs { t: t0 });
    }
    let mut traj = Trajectory::start(n, t0, &y0, &f0);
    if euclidean_norm(&y0) >= tol.cap {
        traj.set_termination(Termination::BlewUp { t: t0 });
        return Ok(traj);
    }

    let scale = |y: &[f64], i: usize| tol.atol + tol.rtol * y[i].abs();
    let d0 = (0..n).map(|i| (y0[i] / scale(&y0, i)).abs()).fold(0.0, f64::max);
    let d1 = (0..n).map(|i| (f0[i] / scale(&y0, i)).abs()).fold(0.0, f64::max);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h = h.clamp(1e-10 * span, h_max);

    let mut t = t0;
    let mut y = y0;
    let mut f = f0;
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut ystage = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err_prev: f64 = 1e-4;
    let mut just_rejected = false;
    let mut steps = 0usize;
    let mut breakpoint_index = 1.0;
    let next_breakpoint = |k: f64| {
        if spec.h_under.is_finite() {
            t0 + k * spec.h_under
        } else {
            f64::INFINITY
        }
    };

    while t < t_end {
        steps += 1;
        if steps > tol.max_steps {
            return Err(DdeError::TooManySteps {
                t,
                max_steps: tol.max_steps,
            });
        }
        let mut bp = next_breakpoint(breakpoint_index);
        while bp <= t * (1.0 + 4.0 * f64::EPSILON) + 4.0 * f64::EPSILON {
            breakpoint_index += 1.0;
            bp = next_breakpoint(breakpoint_index);
        }
        let target = t_end.min(bp);
        h = h.min(h_max);
        let mut t_next = t + h;
        if t_next >= target || target - t_next < 1e-3 * h {
            t_next = target;
        }
        h = t_next - t;
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(DdeError::StepUnderflow { t, h });
        }

        for i in 0..n {
            ystage[i] = y[i] + h * A21 * f[i];
        }
        stepper.derivative(&traj, t + C2 * h, &ystage, &mut k2)?;
        for i in 0..n {
            ystage[i] = y[i] + h * A32 * k2[i];
        }
        stepper.derivative(&traj, t + C3 * h, &ystage, &mut k3)?;
        for i in 0..n {
            ynew[i] = y[i] + h * (B1 * f[i] + B2 * k2[i] + B3 * k3[i]);
        }
        stepper.derivative(&traj, t_next, &ynew, &mut k4)?;

        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h * (E1 * f[i] + E2 * k2[i] + E3 * k3[i] + E4 * k4[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err = err.max((e / sc).abs());
        }
        let finite = err.is_finite() && ynew.iter().chain(k4.iter()).all(|v| v.is_finite());

        if !finite {
            // Growth that overflows before tripping the cap counts as blow-up.
            if euclidean_norm(&y) >= tol.cap * 1e-3 && h < 1e-12 * span.max(1.0) {
                traj.set_termination(Termination::BlewUp { t });
                return Ok(traj);
            }
            if h < 1e-14 * span.max(1.0) {
                return Err(DdeError::NonFiniteRhs { t });
            }
            h *= 0.25;
            just_rejected = true;
            continue;
        }

        if err <= 1.0 {
            traj.push(t_next, &ynew, &k4);
            t = t_next;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut f, &mut k4);
            if euclidean_norm(&y) >= tol.cap {
                let t_blow = match detect_blowup(&traj, tol.cap) {
                    BlowupStatus::BlewUp { t } => t,
                    BlowupStatus::Bounded => t,
                };
                traj.set_termination(Termination::BlewUp { t: t_blow });
                return Ok(traj);
            }
            let e = err.max(1e-10);
            let mut factor = SAFETY * e.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if just_rejected {
                factor = factor.min(1.0);
            }
            err_prev = e.max(1e-4);
            just_rejected = false;
            h *= factor;
        } else {
            let factor = (SAFETY * err.powf(-1.0 / 3.0)).max(MIN_FACTOR);
            h *= factor;
            just_rejected = true;
        }
    }
    Ok(traj)
}

struct Stepper<'a, R: ?Sized> {
    rhs: &'a R,
    history: &'a History,
    t0: f64,
    spec: DelaySpec,
    n: usize,
    lagged: Vec<f64>,
}

impl<R: DelayRhs + ?Sized> Stepper<'_, R> {
    /// Evaluates the right-hand side at `(t, x)`, filling delayed states from
    /// history or from the accepted part of `traj`.
    fn derivative(
        &mut self,
        traj: &Trajectory,
        t: f64,
        x: &[f64],
        dx: &mut [f64],
    ) -> Result<(), DdeError> {
        let n = self.n;
        let start = self.t0 - self.spec.h_bar * 1.01 - 1e-12 * self.t0.abs().max(1.0);
        let known_end = traj.t_end();
        let slop = 1e-10 * known_end.abs().max(1.0);
        for (i, h) in self.rhs.lags().iter().enumerate() {
            let lag = h.eval(t);
            if !(lag.is_finite() && lag > 0.0) {
                return Err(DdeError::InvalidDelay {
                    lag: i + 1,
                    t,
                    value: lag,
                });
            }
            let s = t - lag;
            let out = &mut self.lagged[i * n..(i + 1) * n];
            if s < start {
                return Err(DdeError::MalformedDelay { t, arg: s, start });
            }
            if s < self.t0 {
                self.history.eval_into(s, out);
            } else if s <= known_end + slop {
                traj.interpolate(s.min(known_end), out);
            } else {
                return Err(DdeError::LagAheadOfSolution {
                    t,
                    arg: s,
                    end: known_end,
                });
            }
        }
        self.rhs.eval(t, x, &self.lagged, dx);
        Ok(())
    }
}
