//! Dense symmetric positive-definite helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
}

impl CholeskyFactor {
    /// Factorizes a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with the order (1-based) of the first leading minor whose pivot
    /// is not strictly positive.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::InvalidInput(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Factorization {
                    minor: j + 1,
                    pivot,
                });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `log det A = 2 Σ log L_kk`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("cholesky diagonal is strictly positive")
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let z = self.solve_lower(b);
        self.lower
            .tr_solve_lower_triangular(&z)
            .expect("cholesky diagonal is strictly positive")
    }

    /// Solves `A X = B`.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self
            .lower
            .solve_lower_triangular(b)
            .expect("cholesky diagonal is strictly positive");
        self.lower
            .tr_solve_lower_triangular(&z)
            .expect("cholesky diagonal is strictly positive")
    }

    /// `bᵀ A⁻¹ b` computed as `‖L⁻¹ b‖²`.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        self.solve_lower(b).norm_squared()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()));
        symmetrize(&mut inv);
        inv
    }
}

/// Replaces `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Log density of `N(0, A)` at `y`, given the Cholesky factor of `A`.
pub fn gaussian_log_density(chol: &CholeskyFactor, y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    -0.5 * (chol.quad_form(y) + chol.log_det() + n * (2.0 * std::f64::consts::PI).ln())
}
