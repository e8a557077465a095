use std::fmt;
use std::sync::Arc;

use crate::linalg::euclidean_norm;
use crate::timefn::TimeFn;

type HistoryFn = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// Prescribed solution values on `[t0 - h_bar, t0]`.
#[derive(Clone)]
pub enum History {
    Constant(Vec<f64>),
    /// One time function per coordinate.
    Expression(Vec<TimeFn>),
    /// Sampled values with linear interpolation; clamped outside the grid.
    Grid { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// Scalar history `|φ(t)|` of a vector history `φ`.
    Norm(Box<History>),
    Func {
        dim: usize,
        f: Arc<HistoryFn>,
    },
}

impl History {
    pub fn constant(values: Vec<f64>) -> Self {
        History::Constant(values)
    }

    pub fn zero(dim: usize) -> Self {
        History::Constant(vec![0.0; dim])
    }

    pub fn scalar(q: f64) -> Self {
        History::Constant(vec![q])
    }

    /// Linear interpolation through `(times[k], values[k])`. Times must be
    /// strictly increasing and all value rows the same length.
    pub fn grid(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, String> {
        if times.is_empty() || times.len() != values.len() {
            return Err("grid history needs one value row per time".into());
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err("grid history times must be strictly increasing".into());
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err("grid history rows must share a nonzero dimension".into());
        }
        Ok(History::Grid { times, values })
    }

    pub fn from_fn(dim: usize, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        History::Func { dim, f: Arc::new(f) }
    }

    /// The Euclidean norm of this history as a scalar history.
    pub fn norm(&self) -> History {
        match self {
            History::Constant(v) => History::Constant(vec![euclidean_norm(v)]),
            other => History::Norm(Box::new(other.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            History::Constant(v) => v.len(),
            History::Expression(fs) => fs.len(),
            History::Grid { values, .. } => values[0].len(),
            History::Norm(_) => 1,
            History::Func { dim, .. } => *dim,
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            History::Constant(v) => out.copy_from_slice(v),
            History::Expression(fs) => {
                for (o, f) in out.iter_mut().zip(fs) {
                    *o = f.eval(t);
                }
            }
            History::Grid { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    out.copy_from_slice(&values[0]);
                } else if t >= times[last] {
                    out.copy_from_slice(&values[last]);
                } else {
                    let k = times.partition_point(|&s| s <= t) - 1;
                    let w = (t - times[k]) / (times[k + 1] - times[k]);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = (1.0 - w) * values[k][i] + w * values[k + 1][i];
                    }
                }
            }
            History::Norm(inner) => {
                let mut buf = vec![0.0; inner.dim()];
                inner.eval_into(t, &mut buf);
                out[0] = euclidean_norm(&buf);
            }
            History::Func { f, .. } => f(t, out),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Supremum of `|φ|` over `[a, b]`, sampled on `samples` points.
    pub fn sup_norm(&self, a: f64, b: f64, samples: usize) -> f64 {
        if let History::Constant(v) = self {
            return euclidean_norm(v);
        }
        let samples = samples.max(2);
        let mut buf = vec![0.0; self.dim()];
        (0..samples)
            .map(|k| {
                let t = a + (b - a) * k as f64 / (samples - 1) as f64;
                self.eval_into(t, &mut buf);
                euclidean_norm(&buf)
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            History::Constant(v) => write!(f, "Constant({v:?})"),
            History::Expression(fs) => write!(f, "Expression({fs:?})"),
            History::Grid { times, .. } => write!(f, "Grid({} points)", times.len()),
            History::Norm(inner) => write!(f, "Norm({inner:?})"),
            History::Func { dim, .. } => write!(f, "Func(dim = {dim})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_interpolates_linearly() {
        let h = History::grid(vec![-1.0, 0.0], vec![vec![0.0, 2.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(h.eval(-0.5), vec![0.5, 3.0]);
        assert_eq!(h.eval(-2.0), vec![0.0, 2.0]);
        assert!(History::grid(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn norm_history_matches_vector_norm() {
        let h = History::Expression(vec![TimeFn::from_fn(|t| t.cos()), TimeFn::from_fn(|t| 2.0 * t)]);
        let n = h.norm();
        for k in 0..100 {
            let t = -1.0 + k as f64 / 99.0;
            assert_eq!(n.eval(t)[0], euclidean_norm(&h.eval(t)));
        }
        assert_eq!(History::constant(vec![3.0, 4.0]).norm().eval(0.0), vec![5.0]);
    }
}
