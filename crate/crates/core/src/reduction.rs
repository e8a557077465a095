//! Reduction of a vector delay system to a scalar auxiliary equation.
//!
//! `w(t)` solves `w' = A0(t) w`, `w(t0) = I`. The scalar equation uses
//! `p(t) = d ln|w(t)| / dt` and `c(t) = |w(t)| |w(t)^{-1}|`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::dde::{self, DdeError, FnRhs, History, ToleranceSettings, Trajectory};
use crate::linalg::{singular_values, Matrix};
use crate::majorant::{majorize_polynomial, MajorantError, PolynomialMajorant, PolynomialTerm};
use crate::system::{ScalarDelaySystem, ScalarPerturbation, SystemError, VectorDelaySystem};
use crate::timefn::{grid_sup, MatrixFn, SupError, TimeFn, SUP_SAMPLES};

/// `σ_min / σ_max` below this is reported as ill-conditioning.
pub const ILL_CONDITIONING: f64 = 1e-12;

/// Maximal spacing of the grid carrying numerical `p` and `c`.
pub const COEFFICIENT_GRID_SPACING: f64 = 0.02;

/// Relative gap between the two largest singular values below which a
/// sample is reported as a possible crossing.
const CROSSING_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("fundamental matrix is ill-conditioned at t = {t} (σ_min/σ_max = {ratio:e})")]
    IllConditioned { t: f64, ratio: f64 },
    #[error("t = {t} is outside [{start}, {end}] (finite-difference stencil included)")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("coefficients are valid until {valid_until}, but the horizon is {requested}")]
    HorizonTooShort { valid_until: f64, requested: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("supremum of {what}: {source}")]
    Sup { what: String, source: SupError },
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Integration(#[from] DdeError),
}

/// One renormalized piece: `w(t) = 2^log2_scale * u(t)` on `[start, end]`,
/// where `u' = A u` and `|u(start)|` is close to 1.
#[derive(Debug)]
struct Chunk {
    start: f64,
    end: f64,
    log2_scale: i32,
    traj: Trajectory,
}

/// Dense fundamental matrix `w(t)` with cached singular values.
#[derive(Debug)]
pub struct FundamentalMatrixSolution {
    source: MatrixFn,
    t0: f64,
    t_end: f64,
    chunks: Vec<Chunk>,
    cache: RwLock<HashMap<u64, LogSingularValues>>,
}

/// Natural logarithms of the singular values of `w(t)`, largest first.
#[derive(Debug, Clone)]
struct LogSingularValues(Arc<Vec<f64>>);

/// Integrates `w' = A w`, `w(t0) = I` on `[t0, t_end]`.
///
/// The run is split into chunks of length `2 / max(1, sup |A|)`; each chunk
/// restarts from the previous end state rescaled by a power of two, so the
/// absolute tolerance never swamps a decaying `w`.
pub fn compute_fundamental_matrix(
    a: &MatrixFn,
    t0: f64,
    t_end: f64,
    tol: &ToleranceSettings,
) -> Result<FundamentalMatrixSolution, ReductionError> {
    if !(t_end > t0) {
        return Err(DdeError::InvalidHorizon { t0, t_end }.into());
    }
    let n = a.dim();
    let norm_sup = grid_sup(&a.norm_fn(), t0, t_end, SUP_SAMPLES / 10, 0.0).map_err(|source| {
        ReductionError::Sup {
            what: "|A(t)|".into(),
            source,
        }
    })?;
    let chunk_len = 2.0 / norm_sup.max(1.0);
    let matrix_tol = ToleranceSettings {
        atol: tol.atol.min(tol.rtol * 1e-3),
        cap: f64::MAX,
        ..*tol
    };
    let source = a.clone();
    let rhs = FnRhs::new(n * n, Vec::new(), move |t, x: &[f64], _: &[f64], dx: &mut [f64]| {
        // Column j of u is x[j], x[n + j], ...; A acts on every column.
        let m = source.eval(t);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[(i, k)] * x[k * n + j];
                }
                dx[i * n + j] = acc;
            }
        }
    });

    let mut chunks = Vec::new();
    let mut start = t0;
    let mut state = Matrix::identity(n).as_slice().to_vec();
    let mut log2_scale = 0i32;
    while start < t_end {
        let mut end = (start + chunk_len).min(t_end);
        if t_end - end < 0.25 * chunk_len {
            end = t_end;
        }
        let traj = dde::integrate(&rhs, &History::constant(state.clone()), start, end, &matrix_tol)?;
        let last = Matrix::from_row_major(n, n, traj.final_state().to_vec());
        let sv = singular_values(&last);
        let (smax, smin) = (sv[0], sv[n - 1]);
        if !(smin >= ILL_CONDITIONING * smax) || !smax.is_finite() {
            return Err(ReductionError::IllConditioned {
                t: end,
                ratio: smin / smax,
            });
        }
        let shift = smax.log2().round() as i32;
        let factor = 2f64.powi(-shift);
        state = last.as_slice().iter().map(|v| v * factor).collect();
        chunks.push(Chunk {
            start,
            end,
            log2_scale,
            traj,
        });
        log2_scale += shift;
        start = end;
    }

    Ok(FundamentalMatrixSolution {
        source: a.clone(),
        t0,
        t_end,
        chunks,
        cache: RwLock::new(HashMap::new()),
    })
}

impl FundamentalMatrixSolution {
    pub fn source(&self) -> &MatrixFn {
        &self.source
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    fn check_range(&self, t: f64) -> Result<(), ReductionError> {
        if t >= self.t0 && t <= self.t_end {
            Ok(())
        } else {
            Err(ReductionError::OutOfRange {
                t,
                start: self.t0,
                end: self.t_end,
            })
        }
    }

    fn chunk_at(&self, t: f64) -> &Chunk {
        let k = self.chunks.partition_point(|c| c.start <= t);
        &self.chunks[k.saturating_sub(1)]
    }

    /// `w(t)`. Underflows for very strongly decaying `w`; use the
    /// singular-value accessors for those.
    pub fn eval(&self, t: f64) -> Result<Matrix, ReductionError> {
        self.check_range(t)?;
        let chunk = self.chunk_at(t);
        let n = self.dim();
        let scale = 2f64.powi(chunk.log2_scale);
        let u = chunk.traj.eval(t.min(chunk.end))?;
        Ok(Matrix::from_row_major(n, n, u.into_iter().map(|v| v * scale).collect()))
    }

    /// Accepted integrator times, chunk boundaries included once.
    pub fn node_times(&self) -> Vec<f64> {
        let mut out = vec![self.t0];
        for chunk in &self.chunks {
            out.extend_from_slice(&chunk.traj.node_times()[1..]);
        }
        out
    }

    fn log_singular_values(&self, t: f64) -> Result<LogSingularValues, ReductionError> {
        self.check_range(t)?;
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let chunk = self.chunk_at(t);
        let n = self.dim();
        let u = Matrix::from_row_major(n, n, chunk.traj.eval(t.min(chunk.end))?);
        let sv = singular_values(&u);
        let (smax, smin) = (sv[0], sv[n - 1]);
        if !(smin >= ILL_CONDITIONING * smax) {
            return Err(ReductionError::IllConditioned {
                t,
                ratio: smin / smax,
            });
        }
        let offset = chunk.log2_scale as f64 * std::f64::consts::LN_2;
        let logs = LogSingularValues(Arc::new(sv.iter().map(|s| s.ln() + offset).collect()));
        // Concurrent fills compute the same value, so last writer wins safely.
        self.cache.write().unwrap().insert(key, logs.clone());
        Ok(logs)
    }

    /// `ln σ_max(w(t))`.
    pub fn log_norm(&self, t: f64) -> Result<f64, ReductionError> {
        Ok(self.log_singular_values(t)?.0[0])
    }

    /// `(|w(t)|, |w(t)^{-1}|)`.
    pub fn norms(&self, t: f64) -> Result<(f64, f64), ReductionError> {
        let logs = self.log_singular_values(t)?;
        Ok((logs.0[0].exp(), (-logs.0[logs.0.len() - 1]).exp()))
    }

    /// Relative gap `(σ_1 - σ_2) / σ_1`; 1 for scalar systems.
    pub fn top_gap(&self, t: f64) -> Result<f64, ReductionError> {
        let logs = self.log_singular_values(t)?;
        if logs.0.len() < 2 {
            return Ok(1.0);
        }
        Ok(1.0 - (logs.0[1] - logs.0[0]).exp())
    }
}

/// Finite-difference step used for `p(t)`.
pub fn fd_step(t: f64) -> f64 {
    1e-4 * t.abs().max(1.0)
}

/// `p(t)` by a central difference of `ln σ_max(w)`.
pub fn p_of_t(w: &FundamentalMatrixSolution, t: f64) -> Result<f64, ReductionError> {
    let d = fd_step(t);
    if t - d < w.t0 || t + d > w.t_end {
        return Err(ReductionError::OutOfRange {
            t,
            start: w.t0 + d,
            end: w.t_end - d,
        });
    }
    Ok((w.log_norm(t + d)? - w.log_norm(t - d)?) / (2.0 * d))
}

/// Second-order difference that stays inside the horizon near its ends.
fn p_on_grid(w: &FundamentalMatrixSolution, t: f64) -> Result<f64, ReductionError> {
    let d = fd_step(t);
    if t - d < w.t0 {
        let (f0, f1, f2) = (w.log_norm(t)?, w.log_norm(t + d)?, w.log_norm(t + 2.0 * d)?);
        Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * d))
    } else if t + d > w.t_end {
        let (f0, f1, f2) = (w.log_norm(t)?, w.log_norm(t - d)?, w.log_norm(t - 2.0 * d)?);
        Ok((3.0 * f0 - 4.0 * f1 + f2) / (2.0 * d))
    } else {
        p_of_t(w, t)
    }
}

/// `c(t) = σ_max / σ_min`.
pub fn c_of_t(w: &FundamentalMatrixSolution, t: f64) -> Result<f64, ReductionError> {
    let logs = w.log_singular_values(t)?;
    Ok((logs.0[0] - logs.0[logs.0.len() - 1]).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Numerical,
}

/// `p(t)` and `c(t)` for the scalar auxiliary equation.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    pub p: TimeFn,
    pub c: TimeFn,
    pub provenance: Provenance,
    pub valid_until: f64,
    /// Grid times where the two largest singular values nearly coincide;
    /// `p` may be nonsmooth there.
    pub crossing_times: Vec<f64>,
}

impl CoefficientPair {
    pub fn closed_form(p: TimeFn, c: TimeFn) -> Self {
        CoefficientPair {
            p,
            c,
            provenance: Provenance::ClosedForm,
            valid_until: f64::INFINITY,
            crossing_times: Vec::new(),
        }
    }

    /// `p = λ`, `c = 1` when `a0 = λ(t) I`.
    pub fn for_scalar_identity(a0: &MatrixFn) -> Option<Self> {
        a0.as_scalar_identity()
            .map(|lambda| CoefficientPair::closed_form(lambda, TimeFn::Const(1.0)))
    }

    /// Samples `p` and `c` at the integrator nodes (refined to spacing at
    /// most [`COEFFICIENT_GRID_SPACING`]) and interpolates them by cubics.
    pub fn numerical(w: &FundamentalMatrixSolution) -> Result<Self, ReductionError> {
        let nodes = w.node_times();
        let mut grid = vec![nodes[0]];
        for pair in nodes.windows(2) {
            let pieces = ((pair[1] - pair[0]) / COEFFICIENT_GRID_SPACING).ceil().max(1.0) as usize;
            for k in 1..=pieces {
                grid.push(if k == pieces {
                    pair[1]
                } else {
                    pair[0] + (pair[1] - pair[0]) * k as f64 / pieces as f64
                });
            }
        }
        let mut ps = Vec::with_capacity(grid.len());
        let mut cs = Vec::with_capacity(grid.len());
        let mut gaps = Vec::with_capacity(grid.len());
        for &t in &grid {
            ps.push(p_on_grid(w, t)?);
            cs.push(c_of_t(w, t)?);
            gaps.push(w.top_gap(t)?);
        }
        // A persistent zero gap (w a multiple of an orthogonal matrix) is
        // not a crossing.
        let crossing_times = if gaps.iter().all(|&g| g < CROSSING_GAP) {
            Vec::new()
        } else {
            grid.iter()
                .zip(&gaps)
                .filter(|(_, &g)| g < CROSSING_GAP)
                .map(|(&t, _)| t)
                .collect()
        };
        let c_table = Arc::new(CubicTable::new(grid.clone(), cs));
        let p_table = Arc::new(CubicTable::new(grid, ps));
        Ok(CoefficientPair {
            p: TimeFn::from_fn(move |t| p_table.eval(t)),
            c: TimeFn::from_fn(move |t| c_table.eval(t).max(1.0)),
            provenance: Provenance::Numerical,
            valid_until: w.t_end,
            crossing_times,
        })
    }
}

/// Piecewise cubic Hermite interpolation with three-point slopes.
#[derive(Debug)]
struct CubicTable {
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicTable {
    fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        let n = times.len();
        let mut slopes = vec![0.0; n];
        if n >= 2 {
            let secant = |k: usize| (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
            slopes[0] = secant(0);
            slopes[n - 1] = secant(n - 2);
            for k in 1..n - 1 {
                let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
                slopes[k] = (h1 * secant(k - 1) + h0 * secant(k)) / (h0 + h1);
            }
        }
        CubicTable {
            times,
            values,
            slopes,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.values[k]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[k]
            + (-2.0 * s3 + 3.0 * s2) * self.values[k + 1]
            + (s3 - s2) * h * self.slopes[k + 1]
    }
}

/// Majorant of the polynomial part of `vs`, with one argument per slot.
pub fn system_majorant(vs: &VectorDelaySystem) -> Result<PolynomialMajorant, ReductionError> {
    let base = majorize_polynomial(&vs.nonlinear)?;
    let args = vs.delays.len() + 1;
    let terms = base
        .terms()
        .iter()
        .map(|t| {
            let mut exponents = t.exponents.clone();
            exponents.resize(args, 0);
            PolynomialTerm::new(t.coeff.clone(), exponents)
        })
        .collect();
    Ok(PolynomialMajorant::new(args, terms)?)
}

/// The scalar auxiliary system for `vs`.
///
/// `l` must majorize the nonlinear part. The split `A1` contributes
/// `|A1(t)| ζ_1` and every delayed linear term `B_i` contributes
/// `|B_i(t)| ζ_{i+1}`. The history is `|φ(t)|`.
pub fn build_scalar_auxiliary(
    vs: &VectorDelaySystem,
    coeffs: &CoefficientPair,
    l: &PolynomialMajorant,
    t_end: f64,
) -> Result<ScalarDelaySystem, ReductionError> {
    if coeffs.valid_until < t_end {
        return Err(ReductionError::HorizonTooShort {
            valid_until: coeffs.valid_until,
            requested: t_end,
        });
    }
    let args = vs.delays.len() + 1;
    if l.arg_count() != args {
        return Err(ReductionError::Dimension(format!(
            "majorant takes {} arguments, system has {} slots",
            l.arg_count(),
            args
        )));
    }
    vs.validate(t_end)?;
    let mut majorant = l.clone();
    if let Some(a1) = &vs.a1 {
        majorant.push_linear(a1.norm_fn(), 0);
    }
    for term in &vs.delayed_linear {
        majorant.push_linear(term.matrix.norm_fn(), term.slot);
    }
    let ss = ScalarDelaySystem::new(coeffs.p.clone(), coeffs.c.clone(), majorant, vs.delays.clone())
        .with_forcing(vs.forcing_amplitude, vs.forcing_norm())
        .with_history(vs.history.norm())
        .with_t0(vs.t0);
    Ok(ss)
}

/// Replaces every time-varying coefficient of `ss` by its inflated
/// supremum on `[t0, t_end]`.
pub fn build_autonomous_auxiliary(
    ss: &ScalarDelaySystem,
    t_end: f64,
    margin: f64,
) -> Result<ScalarDelaySystem, ReductionError> {
    let t0 = ss.t0;
    let sup = |f: &TimeFn, what: &str| {
        grid_sup(f, t0, t_end, SUP_SAMPLES, margin).map_err(|source| ReductionError::Sup {
            what: what.to_string(),
            source,
        })
    };
    let p_hat = sup(&ss.p, "p(t)")?;
    let c_hat = sup(&ss.c, "c(t)")?;
    let majorant = ss
        .majorant
        .sup_coefficients(t0, t_end, margin)
        .map_err(|e| match e {
            MajorantError::Sup(source) => ReductionError::Sup {
                what: "majorant coefficient".into(),
                source,
            },
            other => other.into(),
        })?;
    let forcing = sup(&ss.forcing_shape.magnitude(), "|e(t)|")?;
    let perturbation = match &ss.perturbation {
        Some(p) => Some(ScalarPerturbation {
            majorant: p.majorant.sup_coefficients(t0, t_end, margin)?,
            delays: p.delays.clone(),
        }),
        None => None,
    };
    Ok(ScalarDelaySystem::new(TimeFn::Const(p_hat), TimeFn::Const(c_hat), majorant, ss.delays.clone())
        .with_forcing(ss.forcing_amplitude, TimeFn::Const(forcing))
        .with_history(ss.history.clone())
        .with_t0(t0)
        .with_perturbation(perturbation))
}

/// How `p` and `c` are obtained.
#[derive(Debug, Clone)]
pub enum CoefficientMode {
    /// Closed form when `A0 = λ(t) I`, numerical otherwise.
    Auto,
    ClosedForm { p: TimeFn, c: TimeFn },
    Numerical,
}

/// The scalar auxiliary system and its autonomous counterpart.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub coeffs: CoefficientPair,
    pub scalar: ScalarDelaySystem,
    pub autonomous: ScalarDelaySystem,
}

/// Runs the whole reduction on `[t0, t_end]` with the system's own majorant.
pub fn reduce_system(
    vs: &VectorDelaySystem,
    mode: &CoefficientMode,
    t_end: f64,
    tol: &ToleranceSettings,
    margin: f64,
) -> Result<Reduction, ReductionError> {
    let coeffs = match mode {
        CoefficientMode::ClosedForm { p, c } => CoefficientPair::closed_form(p.clone(), c.clone()),
        CoefficientMode::Auto if vs.a0.as_scalar_identity().is_some() => {
            CoefficientPair::for_scalar_identity(&vs.a0).expect("checked scalar identity")
        }
        CoefficientMode::Auto | CoefficientMode::Numerical => {
            let w = compute_fundamental_matrix(&vs.a0, vs.t0, t_end, tol)?;
            CoefficientPair::numerical(&w)?
        }
    };
    let l = system_majorant(vs)?;
    let scalar = build_scalar_auxiliary(vs, &coeffs, &l, t_end)?;
    let autonomous = build_autonomous_auxiliary(&scalar, t_end, margin)?;
    Ok(Reduction {
        coeffs,
        scalar,
        autonomous,
    })
}
