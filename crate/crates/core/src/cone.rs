//! Quadratic matrix cones `C = {v : vᵀ P v ≤ 0}`.

use crate::error::{Error, Result};
use crate::linalg::{SymMatrix, Vector};

/// Default relative width of the boundary band used by [`MatrixCone::locate`].
pub const DEFAULT_CONE_TOL: f64 = 1e-9;

/// A nondegenerate quadratic cone. `rank` is the number of negative
/// eigenvalues of `P`, which equals the dimension of the largest linear
/// subspace contained in the cone. `rank == 0` (positive-definite `P`) is
/// allowed and describes the stability case, where the cone is `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCone {
    p: SymMatrix,
    rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeLocation {
    Interior,
    Boundary,
    Outside,
}

impl MatrixCone {
    /// Fails with [`Error::SingularP`] when `P` has eigenvalues in the zero band.
    pub fn new(p: SymMatrix) -> Result<Self> {
        let inertia = p.inertia();
        if inertia.zero > 0 {
            return Err(Error::SingularP { zero: inertia.zero });
        }
        Ok(MatrixCone { rank: inertia.neg, p })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        quad_form(&self.p, v)
    }

    /// Classifies `v` relative to the cone using a band of half-width
    /// `tol·‖v‖²` around `vᵀ P v = 0`. The zero vector is `Boundary`.
    pub fn locate(&self, v: &[f64], tol: f64) -> Result<ConeLocation> {
        let q = self.quad_form(v)?;
        let band = tol * v.iter().map(|x| x * x).sum::<f64>();
        Ok(if q < -band {
            ConeLocation::Interior
        } else if q <= band {
            ConeLocation::Boundary
        } else {
            ConeLocation::Outside
        })
    }

    /// `vᵀ P v / ‖v‖²`, the scale-free quantity that `locate` thresholds.
    pub fn normalized_margin(&self, v: &[f64]) -> Result<f64> {
        let q = self.quad_form(v)?;
        let nn: f64 = v.iter().map(|x| x * x).sum();
        Ok(if nn == 0.0 { 0.0 } else { q / nn })
    }
}

/// `vᵀ P v` as an explicit bilinear sum.
pub fn quad_form(p: &SymMatrix, v: &[f64]) -> Result<f64> {
    let n = p.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!("vector of length {} against {n}x{n} matrix", v.len())));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * p.get(i, j) * v[j];
        }
    }
    Ok(s)
}

pub fn quad_form_vec(p: &SymMatrix, v: &Vector) -> Result<f64> {
    quad_form(p, v.as_slice())
}
