//! Scalar and matrix valued functions of time.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expr;
use crate::linalg::{spectral_norm, Matrix};

/// A real function of time.
///
/// Expression evaluation errors surface as `NaN`; the integrator reports
/// non-finite right-hand sides as hard errors.
#[derive(Clone)]
pub enum TimeFn {
    Const(f64),
    Expr(Arc<Expr>),
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TimeFn {
    pub fn constant(v: f64) -> Self {
        TimeFn::Const(v)
    }

    pub fn zero() -> Self {
        TimeFn::Const(0.0)
    }

    /// Wraps an expression, folding it to a constant when it ignores `t`.
    pub fn from_expr(e: Expr) -> Self {
        match e.constant_value() {
            Some(v) => TimeFn::Const(v),
            None => TimeFn::Expr(Arc::new(e)),
        }
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFn::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFn::Const(v) => *v,
            TimeFn::Expr(e) => e.eval(t).unwrap_or(f64::NAN),
            TimeFn::Func(f) => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TimeFn::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// `|self(t)|`, kept constant when `self` is.
    pub fn magnitude(&self) -> TimeFn {
        match self {
            TimeFn::Const(v) => TimeFn::Const(v.abs()),
            other => {
                let inner = other.clone();
                TimeFn::from_fn(move |t| inner.eval(t).abs())
            }
        }
    }

    pub fn scaled(&self, k: f64) -> TimeFn {
        match self {
            TimeFn::Const(v) => TimeFn::Const(k * v),
            other => {
                let inner = other.clone();
                TimeFn::from_fn(move |t| k * inner.eval(t))
            }
        }
    }

    pub fn product(&self, other: &TimeFn) -> TimeFn {
        match (self, other) {
            (TimeFn::Const(a), TimeFn::Const(b)) => TimeFn::Const(a * b),
            (TimeFn::Const(a), g) | (g, TimeFn::Const(a)) => g.scaled(*a),
            (f, g) => {
                let (f, g) = (f.clone(), g.clone());
                TimeFn::from_fn(move |t| f.eval(t) * g.eval(t))
            }
        }
    }

    pub fn sum(&self, other: &TimeFn) -> TimeFn {
        match (self, other) {
            (TimeFn::Const(a), TimeFn::Const(b)) => TimeFn::Const(a + b),
            (f, g) if g.is_zero() => f.clone(),
            (f, g) if f.is_zero() => g.clone(),
            (f, g) => {
                let (f, g) = (f.clone(), g.clone());
                TimeFn::from_fn(move |t| f.eval(t) + g.eval(t))
            }
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Const(v) => write!(f, "Const({v})"),
            TimeFn::Expr(e) => write!(f, "Expr({e})"),
            TimeFn::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl From<f64> for TimeFn {
    fn from(v: f64) -> Self {
        TimeFn::Const(v)
    }
}

impl From<Expr> for TimeFn {
    fn from(e: Expr) -> Self {
        TimeFn::from_expr(e)
    }
}

/// Samples used for supremum estimates over a horizon.
pub const SUP_SAMPLES: usize = 10_000;

/// Sups above this are treated as unbounded.
pub const OVERFLOW_GUARD: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SupError {
    #[error("non-finite sample {value} at t = {t}")]
    NonFinite { t: f64, value: f64 },
    #[error("sample {value} at t = {t} exceeds the overflow guard")]
    Overflow { t: f64, value: f64 },
}

/// Grid supremum of `f` on `[t0, t1]`, inflated by `margin * |sup|` so the
/// estimate errs upward. Constants are returned unchanged.
pub fn grid_sup(f: &TimeFn, t0: f64, t1: f64, samples: usize, margin: f64) -> Result<f64, SupError> {
    if let Some(v) = f.as_constant() {
        return Ok(v);
    }
    let samples = samples.max(2);
    let mut best = f64::NEG_INFINITY;
    for k in 0..samples {
        let t = t0 + (t1 - t0) * k as f64 / (samples - 1) as f64;
        let value = f.eval(t);
        if !value.is_finite() {
            return Err(SupError::NonFinite { t, value });
        }
        if value.abs() > OVERFLOW_GUARD {
            return Err(SupError::Overflow { t, value });
        }
        best = best.max(value);
    }
    Ok(best + margin * best.abs())
}

/// A square matrix of time functions, row-major.
#[derive(Clone, Debug)]
pub struct MatrixFn {
    n: usize,
    entries: Vec<TimeFn>,
}

impl MatrixFn {
    pub fn new(n: usize, entries: Vec<TimeFn>) -> Self {
        assert_eq!(entries.len(), n * n, "matrix function needs n*n entries");
        MatrixFn { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        MatrixFn::new(n, vec![TimeFn::zero(); n * n])
    }

    /// `diag(f, ..., f)`.
    pub fn scalar_identity(n: usize, f: TimeFn) -> Self {
        let mut m = MatrixFn::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = f.clone();
        }
        m
    }

    pub fn diagonal(diag: Vec<TimeFn>) -> Self {
        let n = diag.len();
        let mut m = MatrixFn::zeros(n);
        for (i, f) in diag.into_iter().enumerate() {
            m.entries[i * n + i] = f;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &TimeFn {
        &self.entries[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TimeFn::is_zero)
    }

    pub fn eval(&self, t: f64) -> Matrix {
        Matrix::from_row_major(self.n, self.n, self.entries.iter().map(|f| f.eval(t)).collect())
    }

    /// Writes `self(t) * x` into `out`.
    #[inline]
    pub fn apply(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(n) {
                let e = &self.entries[i * n + j];
                if let TimeFn::Const(c) = e {
                    if *c == 0.0 {
                        continue;
                    }
                }
                acc += e.eval(t) * xj;
            }
            *o = acc;
        }
    }

    pub fn add(&self, other: &MatrixFn) -> MatrixFn {
        assert_eq!(self.n, other.n);
        MatrixFn::new(
            self.n,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sum(b))
                .collect(),
        )
    }

    /// `t -> |self(t)|`, the spectral norm.
    pub fn norm_fn(&self) -> TimeFn {
        if self.is_zero() {
            return TimeFn::zero();
        }
        if self.entries.iter().all(|e| e.as_constant().is_some()) {
            return TimeFn::Const(spectral_norm(&self.eval(0.0)));
        }
        let m = self.clone();
        TimeFn::from_fn(move |t| spectral_norm(&m.eval(t)))
    }

    /// True when every off-diagonal entry is identically zero and all
    /// diagonal entries are the same function object or equal constants.
    pub fn as_scalar_identity(&self) -> Option<TimeFn> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.entry(i, j).is_zero() {
                    return None;
                }
            }
        }
        let first = self.entry(0, 0);
        let same = (1..n).all(|i| match (first, self.entry(i, i)) {
            (TimeFn::Const(a), TimeFn::Const(b)) => a == b,
            (TimeFn::Expr(a), TimeFn::Expr(b)) => a == b,
            (TimeFn::Func(a), TimeFn::Func(b)) => Arc::ptr_eq(a, b),
            _ => false,
        });
        same.then(|| first.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn constant_folding() {
        let f = TimeFn::from_expr(parse_expression("2 * 3").unwrap());
        assert_eq!(f.as_constant(), Some(6.0));
        let g = TimeFn::from_expr(parse_expression("sin(t)").unwrap());
        assert!(g.as_constant().is_none());
        assert_eq!(g.magnitude().eval(-std::f64::consts::FRAC_PI_2), 1.0);
    }

    #[test]
    fn grid_sup_inflates_upward() {
        let f = TimeFn::from_fn(|t| -3.0 + 0.1 * (5.0 * t).sin());
        let s = grid_sup(&f, 0.0, 50.0, SUP_SAMPLES, 1e-3).unwrap();
        assert!((-2.9..-2.9 + 4e-3).contains(&s), "{s}");
        assert_eq!(grid_sup(&TimeFn::Const(2.5), 0.0, 1.0, 10, 0.1).unwrap(), 2.5);
        let g = TimeFn::from_fn(|t| 1.0 / (t - 0.5));
        assert!(grid_sup(&g, 0.0, 1.0, 3, 0.0).is_err());
    }

    #[test]
    fn eval_error_is_nan() {
        let f = TimeFn::from_expr(parse_expression("1 / t").unwrap());
        assert!(f.eval(0.0).is_nan());
    }

    #[test]
    fn matrix_apply_and_norm() {
        let m = MatrixFn::new(
            2,
            vec![0.0.into(), 1.0.into(), TimeFn::from_fn(|t| -t), (-0.1).into()],
        );
        let mut out = [0.0; 2];
        m.apply(2.0, &[1.0, 2.0], &mut out);
        assert_eq!(out, [2.0, -2.2]);
        let norm = m.norm_fn();
        assert!((norm.eval(0.0) - 1.01f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn scalar_identity_detection() {
        let lam = TimeFn::from_expr(parse_expression("-3 + sin(t)").unwrap());
        let m = MatrixFn::scalar_identity(3, lam);
        assert!(m.as_scalar_identity().is_some());
        let d = MatrixFn::diagonal(vec![(-1.0).into(), (-2.0).into()]);
        assert!(d.as_scalar_identity().is_none());
    }
}
