//! Polynomial nonlinearities and their scalar majorants.
//!
//! A nonlinearity `f(t, x(t), x(t - h_1), ..., x(t - h_m))` is a sum of
//! monomials. Argument slot `0` is the undelayed state and slot `i` the
//! state delayed by `h_i`. The majorant `L(t, ζ_0, ..., ζ_m)` satisfies
//! `|f(t, χ)| <= L(t, |χ_0|, ..., |χ_m|)`; it is obtained from
//! `|f|_2 <= |f|_1` across coordinates and `|x_j| <= |x|` within a slot.

use thiserror::Error;

use crate::timefn::{grid_sup, SupError, TimeFn, SUP_SAMPLES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MajorantError {
    #[error("monomial {index} has total degree 0; f(t, 0) must vanish")]
    ConstantMonomial { index: usize },
    #[error("monomial {index} refers to coordinate {coord} of a {dim}-dimensional state")]
    CoordinateOutOfRange { index: usize, coord: usize, dim: usize },
    #[error("monomial {index} refers to delay slot {slot}, but only {lags} delays exist")]
    SlotOutOfRange { index: usize, slot: usize, lags: usize },
    #[error("expected {expected} arguments, got {got}")]
    ArgCount { expected: usize, got: usize },
    #[error("majorant argument {index} is negative ({value})")]
    NegativeArgument { index: usize, value: f64 },
    #[error("linearization radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("term {index} has degree 0 and cannot be linearized")]
    ConstantTerm { index: usize },
    #[error("coefficient supremum failed: {0}")]
    Sup(#[from] SupError),
}

/// `x_coord` taken at delay slot `slot`, raised to `power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub coord: usize,
    pub slot: usize,
    pub power: u32,
}

/// `coeff(t) * Π factors`, contributing to output coordinate `coordinate`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coordinate: usize,
    pub coeff: TimeFn,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.power).sum()
    }
}

/// A vector polynomial nonlinearity on `lag_count + 1` argument slots.
#[derive(Debug, Clone)]
pub struct PolynomialField {
    dim: usize,
    lag_count: usize,
    monomials: Vec<Monomial>,
}

impl PolynomialField {
    pub fn new(dim: usize, lag_count: usize, monomials: Vec<Monomial>) -> Result<Self, MajorantError> {
        for (index, m) in monomials.iter().enumerate() {
            if m.coordinate >= dim {
                return Err(MajorantError::CoordinateOutOfRange {
                    index,
                    coord: m.coordinate,
                    dim,
                });
            }
            if m.degree() == 0 {
                return Err(MajorantError::ConstantMonomial { index });
            }
            for f in &m.factors {
                if f.coord >= dim {
                    return Err(MajorantError::CoordinateOutOfRange {
                        index,
                        coord: f.coord,
                        dim,
                    });
                }
                if f.slot > lag_count {
                    return Err(MajorantError::SlotOutOfRange {
                        index,
                        slot: f.slot,
                        lags: lag_count,
                    });
                }
            }
        }
        Ok(PolynomialField {
            dim,
            lag_count,
            monomials,
        })
    }

    pub fn zero(dim: usize, lag_count: usize) -> Self {
        PolynomialField {
            dim,
            lag_count,
            monomials: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lag_count(&self) -> usize {
        self.lag_count
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Adds `f(t, x, lagged)` to `out`. `lagged` holds `lag_count` blocks of
    /// `dim` values, block `i` being slot `i + 1`.
    #[inline]
    pub fn accumulate(&self, t: f64, x: &[f64], lagged: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for m in &self.monomials {
            let mut v = m.coeff.eval(t);
            for f in &m.factors {
                let xi = if f.slot == 0 {
                    x[f.coord]
                } else {
                    lagged[(f.slot - 1) * n + f.coord]
                };
                v *= xi.powi(f.power as i32);
            }
            out[m.coordinate] += v;
        }
    }
}

/// `|coeff(t)| * Π ζ_i^{exponents[i]}`.
#[derive(Debug, Clone)]
pub struct PolynomialTerm {
    pub coeff: TimeFn,
    pub exponents: Vec<u32>,
}

impl PolynomialTerm {
    pub fn new(coeff: TimeFn, exponents: Vec<u32>) -> Self {
        PolynomialTerm { coeff, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Index of the first argument with a positive exponent.
    pub fn leading_slot(&self) -> Option<usize> {
        self.exponents.iter().position(|&k| k > 0)
    }

    #[inline]
    fn eval(&self, t: f64, zeta: &[f64]) -> f64 {
        let mut v = self.coeff.eval(t).abs();
        for (z, &k) in zeta.iter().zip(&self.exponents) {
            if k > 0 {
                v *= z.powi(k as i32);
            }
        }
        v
    }
}

/// Scalar majorant `L(t, ζ_0, ..., ζ_m)`: nonnegative and nondecreasing in
/// every argument on the nonnegative orthant.
#[derive(Debug, Clone)]
pub struct PolynomialMajorant {
    terms: Vec<PolynomialTerm>,
    arg_count: usize,
    allow_constant: bool,
}

impl PolynomialMajorant {
    /// A majorant with `L(t, 0) = 0`; degree-0 terms are rejected.
    pub fn new(arg_count: usize, terms: Vec<PolynomialTerm>) -> Result<Self, MajorantError> {
        Self::build(arg_count, terms, false)
    }

    /// A perturbation majorant `L_R`, which may have constant terms.
    pub fn perturbation(arg_count: usize, terms: Vec<PolynomialTerm>) -> Result<Self, MajorantError> {
        Self::build(arg_count, terms, true)
    }

    fn build(
        arg_count: usize,
        terms: Vec<PolynomialTerm>,
        allow_constant: bool,
    ) -> Result<Self, MajorantError> {
        for (index, term) in terms.iter().enumerate() {
            if term.exponents.len() != arg_count {
                return Err(MajorantError::ArgCount {
                    expected: arg_count,
                    got: term.exponents.len(),
                });
            }
            if !allow_constant && term.degree() == 0 {
                return Err(MajorantError::ConstantMonomial { index });
            }
        }
        Ok(PolynomialMajorant {
            terms,
            arg_count,
            allow_constant,
        })
    }

    pub fn zero(arg_count: usize) -> Self {
        PolynomialMajorant {
            terms: Vec::new(),
            arg_count,
            allow_constant: false,
        }
    }

    pub fn terms(&self) -> &[PolynomialTerm] {
        &self.terms
    }

    pub fn arg_count(&self) -> usize {
        self.arg_count
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn allows_constant(&self) -> bool {
        self.allow_constant
    }

    /// Appends `|coeff(t)| ζ_slot` (skipped when `coeff` is identically 0).
    pub fn push_linear(&mut self, coeff: TimeFn, slot: usize) {
        if coeff.is_zero() {
            return;
        }
        let mut exponents = vec![0; self.arg_count];
        exponents[slot] = 1;
        self.terms.push(PolynomialTerm::new(coeff, exponents));
    }

    pub fn push_term(&mut self, term: PolynomialTerm) -> Result<(), MajorantError> {
        if term.exponents.len() != self.arg_count {
            return Err(MajorantError::ArgCount {
                expected: self.arg_count,
                got: term.exponents.len(),
            });
        }
        if !self.allow_constant && term.degree() == 0 {
            return Err(MajorantError::ConstantMonomial {
                index: self.terms.len(),
            });
        }
        self.terms.push(term);
        Ok(())
    }

    /// `Σ |coeff(t)| Π ζ_i^{k_i}` for nonnegative `zeta`.
    pub fn eval(&self, t: f64, zeta: &[f64]) -> Result<f64, MajorantError> {
        if zeta.len() != self.arg_count {
            return Err(MajorantError::ArgCount {
                expected: self.arg_count,
                got: zeta.len(),
            });
        }
        if let Some((index, &value)) = zeta.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(MajorantError::NegativeArgument { index, value });
        }
        Ok(self.eval_unchecked(t, zeta))
    }

    /// Evaluation without argument checks, for right-hand sides.
    #[inline]
    pub fn eval_unchecked(&self, t: f64, zeta: &[f64]) -> f64 {
        self.terms.iter().map(|term| term.eval(t, zeta)).sum()
    }

    /// `L(t, |current|, |lagged[0]|, ...)` for scalar right-hand sides.
    #[inline]
    pub fn eval_scalar(&self, t: f64, current: f64, lagged: &[f64]) -> f64 {
        let mut total = 0.0;
        for term in &self.terms {
            let mut v = term.coeff.eval(t).abs();
            for (i, &k) in term.exponents.iter().enumerate() {
                if k > 0 {
                    let z = if i == 0 { current } else { lagged[i - 1] };
                    v *= z.abs().powi(k as i32);
                }
            }
            total += v;
        }
        total
    }

    /// Every coefficient replaced by its inflated grid supremum of `|coeff|`.
    pub fn sup_coefficients(&self, t0: f64, t1: f64, margin: f64) -> Result<Self, MajorantError> {
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let sup = grid_sup(&term.coeff.magnitude(), t0, t1, SUP_SAMPLES, margin)?;
                Ok(PolynomialTerm::new(TimeFn::Const(sup), term.exponents.clone()))
            })
            .collect::<Result<Vec<_>, MajorantError>>()?;
        Ok(PolynomialMajorant {
            terms,
            arg_count: self.arg_count,
            allow_constant: self.allow_constant,
        })
    }

    /// For constant coefficients, the one-variable polynomial
    /// `L(y, ..., y) = Σ a_d y^d` as `(a_d, d)` pairs with merged degrees.
    pub fn collapse_diagonal(&self) -> Option<Vec<(f64, u32)>> {
        let mut out: Vec<(f64, u32)> = Vec::new();
        for term in &self.terms {
            let a = term.coeff.as_constant()?.abs();
            let d = term.degree();
            match out.iter_mut().find(|(_, e)| *e == d) {
                Some(entry) => entry.0 += a,
                None => out.push((a, d)),
            }
        }
        out.sort_by_key(|&(_, d)| d);
        Some(out)
    }
}

/// Builds the majorant of a polynomial field: one term per monomial, with
/// the exponents of all coordinates sharing a delay slot added together.
pub fn majorize_polynomial(field: &PolynomialField) -> Result<PolynomialMajorant, MajorantError> {
    let args = field.lag_count() + 1;
    let terms = field
        .monomials()
        .iter()
        .map(|m| {
            let mut exponents = vec![0u32; args];
            for f in &m.factors {
                exponents[f.slot] += f.power;
            }
            PolynomialTerm::new(m.coeff.clone(), exponents)
        })
        .collect();
    PolynomialMajorant::new(args, terms)
}

/// Coefficients `μ_i(t, ζ̃)` with `L(t, ζ) <= Σ μ_i ζ_i` whenever
/// `0 <= ζ_i <= ζ̃`.
#[derive(Debug, Clone)]
pub struct LinearizedCoefficients {
    pub zeta_tilde: f64,
    pub mu: Vec<TimeFn>,
}

/// Each term `|a| Π ζ_i^{k_i}` of degree `d` is bounded by
/// `|a| ζ̃^{d-1} ζ_j` where `j` is its first participating slot.
pub fn linearize_majorant(
    majorant: &PolynomialMajorant,
    zeta_tilde: f64,
) -> Result<LinearizedCoefficients, MajorantError> {
    if !(zeta_tilde > 0.0 && zeta_tilde.is_finite()) {
        return Err(MajorantError::NonPositiveRadius(zeta_tilde));
    }
    let mut per_slot: Vec<Vec<(TimeFn, f64)>> = vec![Vec::new(); majorant.arg_count()];
    for (index, term) in majorant.terms().iter().enumerate() {
        let slot = term
            .leading_slot()
            .ok_or(MajorantError::ConstantTerm { index })?;
        let weight = zeta_tilde.powi(term.degree() as i32 - 1);
        per_slot[slot].push((term.coeff.clone(), weight));
    }
    let mu = per_slot
        .into_iter()
        .map(|parts| {
            if parts.iter().all(|(c, _)| c.as_constant().is_some()) {
                TimeFn::Const(
                    parts
                        .iter()
                        .map(|(c, w)| c.as_constant().unwrap().abs() * w)
                        .sum(),
                )
            } else {
                TimeFn::from_fn(move |t| parts.iter().map(|(c, w)| c.eval(t).abs() * w).sum())
            }
        })
        .collect();
    Ok(LinearizedCoefficients { zeta_tilde, mu })
}

impl LinearizedCoefficients {
    /// `Σ μ_i(t) ζ_i`.
    pub fn eval(&self, t: f64, zeta: &[f64]) -> f64 {
        self.mu.iter().zip(zeta).map(|(m, z)| m.eval(t) * z).sum()
    }
}

/// Inflated grid supremum of every `μ_i` on `[t0, t1]`.
pub fn sup_linear_coefficients(
    lc: &LinearizedCoefficients,
    t0: f64,
    t1: f64,
    margin: f64,
) -> Result<Vec<f64>, MajorantError> {
    lc.mu
        .iter()
        .map(|m| Ok(grid_sup(m, t0, t1, SUP_SAMPLES, margin)?))
        .collect()
}
