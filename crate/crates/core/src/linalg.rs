//! Dense symmetric linear algebra.
//!
//! Everything here works on small matrices (a few dozen rows at most). The
//! symmetric eigensolver is a cyclic Jacobi iteration: it is slower than a
//! tridiagonal QR for large `n` but unconditionally stable and exact to
//! roundoff on the sizes this crate deals with.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry above which construction logs a warning.
pub const DEFAULT_ASYMMETRY_WARN: f64 = 1e-8;

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A real symmetric matrix. The input is symmetrized as `(M + Mᵀ)/2` on
/// construction, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: Matrix,
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn new(neg: usize, zero: usize, pos: usize) -> Self {
        Inertia { neg, zero, pos }
    }

    pub fn dim(&self) -> usize {
        self.neg + self.zero + self.pos
    }
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.neg, self.zero, self.pos)
    }
}

/// Eigen-decomposition of a [`SymMatrix`]: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        Self::with_asymmetry_threshold(m, DEFAULT_ASYMMETRY_WARN)
    }

    /// Like [`SymMatrix::new`] but with a custom relative asymmetry
    /// threshold for the warning.
    pub fn with_asymmetry_threshold(m: Matrix, warn_threshold: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch("symmetric matrix must have n >= 1".into()));
        }
        let skew = (&m - m.transpose()).norm();
        let scale = m.norm();
        if scale > 0.0 && skew / scale > warn_threshold {
            log::warn!("symmetrizing matrix with relative asymmetry {:.3e}", skew / scale);
        }
        let s = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix { m: s })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix { m: Matrix::identity(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SymMatrix { m: Matrix::from_diagonal(&Vector::from_column_slice(d)) }
    }

    /// Block-diagonal `[a 0; 0 b]`.
    pub fn block_diag(a: &SymMatrix, b: &SymMatrix) -> Self {
        let (na, nb) = (a.dim(), b.dim());
        let mut m = Matrix::zeros(na + nb, na + nb);
        m.view_mut((0, 0), (na, na)).copy_from(&a.m);
        m.view_mut((na, na), (nb, nb)).copy_from(&b.m);
        SymMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn scaled(&self, k: f64) -> Self {
        SymMatrix { m: &self.m * k }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn eigen(&self) -> SymEigen {
        jacobi_eigen(&self.m)
    }

    /// Largest absolute entry sum over rows; an upper bound on the spectral
    /// radius that needs no eigen-decomposition.
    pub fn spectral_radius_bound(&self) -> f64 {
        self.m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Default zero tolerance for inertia counts, relative to the matrix scale.
    pub fn default_zero_tol(&self) -> f64 {
        1e-9 * self.spectral_radius_bound().max(1.0)
    }

    pub fn inertia(&self) -> Inertia {
        inertia(self, self.default_zero_tol())
    }
}

/// Eigenvalues of `s`, ascending.
pub fn sym_eigvals(s: &SymMatrix) -> Vec<f64> {
    s.eigen().values
}

/// Counts eigenvalues below `-zero_tol`, within `±zero_tol`, and above `+zero_tol`.
pub fn inertia(s: &SymMatrix, zero_tol: f64) -> Inertia {
    let mut out = Inertia::new(0, 0, 0);
    for l in sym_eigvals(s) {
        if l < -zero_tol {
            out.neg += 1;
        } else if l > zero_tol {
            out.pos += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// Largest eigenvalue. `s ⪯ 0` iff the result is `<= 0`; a negative value is
/// the strict feasibility margin.
pub fn nsd_margin(s: &SymMatrix) -> f64 {
    *sym_eigvals(s).last().expect("n >= 1")
}

fn jacobi_eigen(input: &Matrix) -> SymEigen {
    let n = input.nrows();
    let mut a = input.clone();
    let mut v = Matrix::identity(n, n);
    let scale = a.norm();

    let off_norm = |a: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J the (p, q) plane rotation
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&a) > JACOBI_TOL * scale {
        log::warn!("Jacobi eigensolver hit the sweep limit (n = {n})");
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymEigen { values, vectors }
}

/// Builds a dense matrix from row slices, rejecting ragged input.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Reciprocal 2-norm condition number (`σ_min / σ_max`), zero for the zero matrix.
pub fn rcond(m: &Matrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Inverts a square matrix, failing with [`Error::SingularD`] when it is
/// numerically singular (reciprocal condition below `1e-12`).
pub fn checked_inverse(m: &Matrix) -> Result<Matrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("cannot invert a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let rc = rcond(m);
    if !(rc >= 1e-12) {
        return Err(Error::SingularD { rcond: rc });
    }
    m.clone().try_inverse().ok_or(Error::SingularD { rcond: rc })
}

/// Two-block diagonal matrix of general (not necessarily symmetric) blocks.
pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}
