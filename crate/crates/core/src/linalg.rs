//! Small dense matrices and a one-sided Jacobi SVD.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Singular values of `a`, sorted in decreasing order.
///
/// One-sided Jacobi: columns of a working copy are rotated pairwise until
/// mutually orthogonal; the singular values are then the column norms.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on the transpose when wide so the column count is the smaller side.
    let (m, n, mut u) = if a.rows >= a.cols {
        (a.rows, a.cols, a.clone())
    } else {
        let mut t = Matrix::zeros(a.cols, a.rows);
        for i in 0..a.rows {
            for j in 0..a.cols {
                t[(j, i)] = a[(i, j)];
            }
        }
        (a.cols, a.rows, t)
    };

    let max_abs = u.max_abs();
    if max_abs == 0.0 || !max_abs.is_finite() {
        return vec![if max_abs.is_finite() { 0.0 } else { f64::NAN }; n];
    }
    // Power-of-two scaling is exact.
    let scale = 2f64.powi(max_abs.log2().round() as i32);
    for v in u.data.iter_mut() {
        *v /= scale;
    }

    const MAX_SWEEPS: usize = 60;
    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt() * scale)
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (induced Euclidean norm).
pub fn spectral_norm(a: &Matrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `(σ_max, σ_min)` of a square matrix.
pub fn extreme_singular_values(a: &Matrix) -> (f64, f64) {
    let sv = singular_values(a);
    (sv[0], *sv.last().unwrap())
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    // Every history-matching path goes through this function.
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn diagonal_matrix() {
        let a = Matrix::from_row_major(3, 3, vec![-2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(singular_values(&a), vec![3.0, 2.0, 0.5]);
    }

    #[test]
    fn known_two_by_two() {
        // [[0, 1], [-1, -1]]: A^T A = [[1, 1], [1, 2]], eigenvalues (3 ± √5)/2.
        let a = Matrix::from_row_major(2, 2, vec![0.0, 1.0, -1.0, -1.0]);
        let sv = singular_values(&a);
        assert_relative_eq!(sv[0], ((3.0 + 5f64.sqrt()) / 2.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(sv[1], ((3.0 - 5f64.sqrt()) / 2.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn rectangular_and_zero() {
        let a = Matrix::from_row_major(1, 2, vec![3.0, 4.0]);
        assert_relative_eq!(spectral_norm(&a), 5.0, epsilon = 1e-15);
        assert_eq!(singular_values(&Matrix::zeros(2, 2)), vec![0.0, 0.0]);
    }

    fn frobenius(a: &Matrix) -> f64 {
        a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    proptest! {
        #[test]
        fn frobenius_and_determinant_are_preserved(
            entries in proptest::collection::vec(-10.0f64..10.0, 9)
        ) {
            let a = Matrix::from_row_major(3, 3, entries.clone());
            let sv = singular_values(&a);
            let f2: f64 = sv.iter().map(|s| s * s).sum();
            prop_assert!((f2.sqrt() - frobenius(&a)).abs() <= 1e-12 * (1.0 + frobenius(&a)));
            let e = &entries;
            let det = e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6])
                + e[2] * (e[3] * e[7] - e[4] * e[6]);
            let prod: f64 = sv.iter().product();
            prop_assert!((prod - det.abs()).abs() <= 1e-10 * (1.0 + det.abs() + prod));
            prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
