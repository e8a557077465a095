use crate::linalg::euclidean_norm;

use super::DdeError;

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// `|x|` reached the blow-up cap; `t` is the first crossing time.
    BlewUp { t: f64 },
}

/// Result of [`detect_blowup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupStatus {
    Bounded,
    BlewUp { t: f64 },
}

/// Piecewise cubic Hermite solution. Node `k` stores the state and its
/// derivative at `times[k]`; each pair of adjacent nodes is one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    derivs: Vec<f64>,
    termination: Termination,
}

impl Trajectory {
    pub(crate) fn start(dim: usize, t0: f64, y0: &[f64], f0: &[f64]) -> Self {
        Trajectory {
            dim,
            times: vec![t0],
            states: y0.to_vec(),
            derivs: f0.to_vec(),
            termination: Termination::Completed,
        }
    }

    pub(crate) fn push(&mut self, t: f64, y: &[f64], f: &[f64]) {
        debug_assert!(t > *self.times.last().unwrap());
        self.times.push(t);
        self.states.extend_from_slice(y);
        self.derivs.extend_from_slice(f);
    }

    pub(crate) fn set_termination(&mut self, termination: Termination) {
        self.termination = termination;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.termination, Termination::BlewUp { .. })
    }

    pub fn node_count(&self) -> usize {
        self.times.len()
    }

    pub fn node_times(&self) -> &[f64] {
        &self.times
    }

    pub fn node_state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_derivative(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.dim..(k + 1) * self.dim]
    }

    /// `(start, end)` of every segment in order.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn final_state(&self) -> &[f64] {
        self.node_state(self.times.len() - 1)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }

    /// Interpolated state at `t`; errors outside `[t_start, t_end]`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, DdeError> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), DdeError> {
        if !self.contains(t) {
            return Err(DdeError::OutOfRange {
                t,
                start: self.t_start(),
                end: self.t_end(),
            });
        }
        self.interpolate(t, out);
        Ok(())
    }

    /// Interpolation without the range check; `t` is clamped to the domain.
    pub(crate) fn interpolate(&self, t: f64, out: &mut [f64]) {
        let n = self.dim;
        let last = self.times.len() - 1;
        if last == 0 || t <= self.times[0] {
            out.copy_from_slice(self.node_state(0));
            return;
        }
        if t >= self.times[last] {
            out.copy_from_slice(self.node_state(last));
            return;
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        if t == ta {
            out.copy_from_slice(self.node_state(k));
            return;
        }
        let h = tb - ta;
        let th = (t - ta) / h;
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        let ya = &self.states[k * n..(k + 1) * n];
        let yb = &self.states[(k + 1) * n..(k + 2) * n];
        let fa = &self.derivs[k * n..(k + 1) * n];
        let fb = &self.derivs[(k + 1) * n..(k + 2) * n];
        for i in 0..n {
            out[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
        }
    }

    pub fn norm_at(&self, t: f64) -> Result<f64, DdeError> {
        Ok(euclidean_norm(&self.eval(t)?))
    }

    /// `|x(t)|` on `grid`. Points past the end of a blown-up trajectory map
    /// to `+inf`; for a completed trajectory they are range errors.
    pub fn norms_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>, DdeError> {
        let mut buf = vec![0.0; self.dim];
        grid.iter()
            .map(|&t| {
                if t > self.t_end() && self.blew_up() {
                    Ok(f64::INFINITY)
                } else {
                    self.eval_into(t, &mut buf)?;
                    Ok(euclidean_norm(&buf))
                }
            })
            .collect()
    }

    /// First component of the state on `grid`; same blow-up convention as
    /// [`Trajectory::norms_on_grid`].
    pub fn scalar_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>, DdeError> {
        let mut buf = vec![0.0; self.dim];
        grid.iter()
            .map(|&t| {
                if t > self.t_end() && self.blew_up() {
                    Ok(f64::INFINITY)
                } else {
                    self.eval_into(t, &mut buf)?;
                    Ok(buf[0])
                }
            })
            .collect()
    }
}

/// `t0, ..., t1` with `points` uniformly spaced samples.
pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| {
            if k == points - 1 {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Maximum of `|x(t)|` over `[a, b]`: uniform grid of `grid_points`, then a
/// golden-section refinement around the best grid point.
///
/// For a blown-up trajectory `b` is clamped to its end, whose state is at
/// or above the cap.
pub fn sup_norm_on_interval(
    traj: &Trajectory,
    a: f64,
    b: f64,
    grid_points: usize,
) -> Result<f64, DdeError> {
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) || grid_points < 2 {
        return Err(DdeError::EmptyInterval { a, b });
    }
    let b = if traj.blew_up() { b.min(traj.t_end()) } else { b };
    if a < traj.t_start() || b > traj.t_end() || a > b {
        return Err(DdeError::OutOfRange {
            t: if a < traj.t_start() { a } else { b },
            start: traj.t_start(),
            end: traj.t_end(),
        });
    }
    if a == b {
        return traj.norm_at(a);
    }
    let grid = uniform_grid(a, b, grid_points);
    let mut buf = vec![0.0; traj.dim()];
    let mut norm = |t: f64| {
        traj.interpolate(t, &mut buf);
        euclidean_norm(&buf)
    };
    let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
    for (k, &t) in grid.iter().enumerate() {
        let v = norm(t);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let lo = grid[best_k.saturating_sub(1)];
    let hi = grid[(best_k + 1).min(grid.len() - 1)];
    let (mut x0, mut x3) = (lo, hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = x3 - g * (x3 - x0);
    let mut x2 = x0 + g * (x3 - x0);
    let (mut f1, mut f2) = (norm(x1), norm(x2));
    for _ in 0..60 {
        if f1 >= f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - g * (x3 - x0);
            f1 = norm(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + g * (x3 - x0);
            f2 = norm(x2);
        }
        best = best.max(f1).max(f2);
    }
    Ok(best)
}

/// Scans the trajectory for the first time `|x| >= cap`.
pub fn detect_blowup(traj: &Trajectory, cap: f64) -> BlowupStatus {
    let first = (0..traj.node_count()).find(|&k| {
        let v = euclidean_norm(traj.node_state(k));
        !(v < cap)
    });
    let Some(k) = first else {
        return BlowupStatus::Bounded;
    };
    if k == 0 {
        return BlowupStatus::BlewUp { t: traj.t_start() };
    }
    let times = traj.node_times();
    let (mut lo, mut hi) = (times[k - 1], times[k]);
    let mut buf = vec![0.0; traj.dim()];
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        traj.interpolate(mid, &mut buf);
        if euclidean_norm(&buf) >= cap {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    BlowupStatus::BlewUp { t: hi }
}
