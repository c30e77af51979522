//! Verification of dominance LMIs over single matrices and matrix polytopes.
//!
//! A matrix `A` is dominant with rate `λ` and margin `σ` with respect to `P`
//! when
//!
//! ```text
//! P A + Aᵀ P + 2 λ P + σ I ⪯ 0.
//! ```
//!
//! The left-hand side is affine in `A`, so checking it at the vertices of a
//! polytope certifies every matrix in the convex hull. Certificates are
//! verified here, never synthesized, apart from the small experimental grid
//! search in [`search_pr_2x2`].

use crate::cone::MatrixCone;
use crate::error::{check_dims, Error, Result};
use crate::linalg::{nsd_margin, Matrix, SymMatrix};

/// Margins up to this value are reported as "feasible within slack".
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// A nonempty set of square matrices of a common size, representing their
/// convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolytope {
    vertices: Vec<Matrix>,
}

impl MatrixPolytope {
    pub fn new(vertices: Vec<Matrix>) -> Result<Self> {
        let first =
            vertices.first().ok_or_else(|| Error::DimensionMismatch("polytope needs at least one vertex".into()))?;
        let n = first.nrows();
        for v in &vertices {
            check_dims("polytope vertex", v.shape(), (n, n))?;
        }
        Ok(MatrixPolytope { vertices })
    }

    pub fn single(m: Matrix) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn vertices(&self) -> &[Matrix] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertResult {
    /// `worst_margin <= 0`.
    pub feasible: bool,
    /// Largest eigenvalue of the residual, maximized over vertices.
    pub worst_margin: f64,
    pub worst_vertex: usize,
    /// Per-vertex margins, in vertex order.
    pub margins: Vec<f64>,
}

impl CertResult {
    fn from_margins(margins: Vec<f64>) -> Self {
        let (worst_vertex, worst_margin) = margins
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
        CertResult { feasible: worst_margin <= 0.0, worst_margin, worst_vertex, margins }
    }

    pub fn feasible_within_slack(&self) -> bool {
        self.worst_margin <= FEASIBILITY_SLACK
    }
}

/// `P A + Aᵀ P + 2 λ P + σ I`.
pub fn lmi_residual(p: &SymMatrix, a: &Matrix, lambda: f64, sigma: f64) -> Result<SymMatrix> {
    let n = p.dim();
    check_dims("LMI system matrix", a.shape(), (n, n))?;
    let pm = p.as_matrix();
    let pa = pm * a;
    let s = &pa + pa.transpose() + pm * (2.0 * lambda) + Matrix::identity(n, n) * sigma;
    SymMatrix::new(s)
}

pub fn certify_polytope(p: &SymMatrix, polytope: &MatrixPolytope, lambda: f64, sigma: f64) -> Result<CertResult> {
    let margins = polytope
        .vertices()
        .iter()
        .map(|a| lmi_residual(p, a, lambda, sigma).map(|s| nsd_margin(&s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertResult::from_margins(margins))
}

/// Dominance certificate for a singularly perturbed system: `P_r` with
/// inertia `(p, 0, n_r - p)` for the slow part and a positive-definite `P_f`
/// for the fast part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpCertificate {
    pub p_r: SymMatrix,
    pub p_f: SymMatrix,
    pub lambda_r: f64,
    pub lambda_f: f64,
    pub sigma_r: f64,
    pub sigma_f: f64,
    pub p: usize,
}

impl SpCertificate {
    pub fn new(
        p_r: SymMatrix,
        p_f: SymMatrix,
        lambda_r: f64,
        lambda_f: f64,
        sigma_r: f64,
        sigma_f: f64,
    ) -> Result<Self> {
        let p = p_r.inertia().neg;
        Self::with_rank(p_r, p_f, lambda_r, lambda_f, sigma_r, sigma_f, p)
    }

    /// Validates against an explicitly stated rank `p`.
    pub fn with_rank(
        p_r: SymMatrix,
        p_f: SymMatrix,
        lambda_r: f64,
        lambda_f: f64,
        sigma_r: f64,
        sigma_f: f64,
        p: usize,
    ) -> Result<Self> {
        let n_r = p_r.dim();
        let in_r = p_r.inertia();
        if in_r.neg != p || in_r.zero != 0 || in_r.pos != n_r - p.min(n_r) {
            return Err(Error::InvalidCertificate(format!(
                "inertia of P_r is {in_r}, expected ({p}, 0, {})",
                n_r.saturating_sub(p)
            )));
        }
        let in_f = p_f.inertia();
        if in_f.pos != p_f.dim() {
            return Err(Error::InvalidCertificate(format!("P_f must be positive definite, inertia is {in_f}")));
        }
        if !(lambda_r >= 0.0 && lambda_f >= 0.0) {
            return Err(Error::InvalidCertificate("rates must be nonnegative".into()));
        }
        if !(sigma_r > 0.0 && sigma_f > 0.0) {
            return Err(Error::InvalidCertificate("sigma_r and sigma_f must be positive".into()));
        }
        Ok(SpCertificate { p_r, p_f, lambda_r, lambda_f, sigma_r, sigma_f, p })
    }

    pub fn n_r(&self) -> usize {
        self.p_r.dim()
    }

    pub fn n_f(&self) -> usize {
        self.p_f.dim()
    }

    /// Margin used on both blocks of the decoupled system: `min(σ_r, σ_f)/2`.
    pub fn block_sigma(&self) -> f64 {
        0.5 * self.sigma_r.min(self.sigma_f)
    }

    /// The cone `blkdiag(P_r, P_f)` in which trajectory differences live.
    pub fn cone(&self) -> Result<MatrixCone> {
        MatrixCone::new(SymMatrix::block_diag(&self.p_r, &self.p_f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpCertResult {
    pub slow: CertResult,
    pub fast: CertResult,
}

impl SpCertResult {
    pub fn feasible(&self) -> bool {
        self.slow.feasible && self.fast.feasible
    }
}

/// Checks the reduced-model LMI on the `A₀` polytope and the fast LMI on the
/// `D` polytope.
pub fn certify_sp(cert: &SpCertificate, slow: &MatrixPolytope, fast: &MatrixPolytope) -> Result<SpCertResult> {
    check_dims("slow polytope", (slow.dim(), slow.dim()), (cert.n_r(), cert.n_r()))?;
    check_dims("fast polytope", (fast.dim(), fast.dim()), (cert.n_f(), cert.n_f()))?;
    Ok(SpCertResult {
        slow: certify_polytope(&cert.p_r, slow, cert.lambda_r, cert.sigma_r)?,
        fast: certify_polytope(&cert.p_f, fast, cert.lambda_f, cert.sigma_f)?,
    })
}

/// Residual margins of the decoupled blocks at a given `ε`:
/// `A - B L_ε` against `P_r` and `D/ε + L_ε B` against `P_f`, both with rate
/// `λ_r` and margin [`SpCertificate::block_sigma`].
pub fn block_conditions(
    cert: &SpCertificate,
    a: &Matrix,
    b: &Matrix,
    l_eps: &Matrix,
    d: &Matrix,
    eps: f64,
) -> Result<SpCertResult> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveEps(eps));
    }
    let (n_r, n_f) = (cert.n_r(), cert.n_f());
    check_dims("A", a.shape(), (n_r, n_r))?;
    check_dims("B", b.shape(), (n_r, n_f))?;
    check_dims("L", l_eps.shape(), (n_f, n_r))?;
    check_dims("D", d.shape(), (n_f, n_f))?;
    let sigma = cert.block_sigma();
    let slow_block = a - b * l_eps;
    let fast_block = d / eps + l_eps * b;
    let slow = certify_polytope(&cert.p_r, &MatrixPolytope::single(slow_block)?, cert.lambda_r, sigma)?;
    let fast = certify_polytope(&cert.p_f, &MatrixPolytope::single(fast_block)?, cert.lambda_r, sigma)?;
    Ok(SpCertResult { slow, fast })
}

/// Conservative fast-block margin when `L_ε B` is only known through a norm
/// bound `‖L_ε B‖₂ ≤ coupling_bound`:
/// `P_f D/ε + Dᵀ P_f/ε + 2‖P_f‖ β I + 2 λ_r P_f + σ I`.
pub fn fast_block_bounded(cert: &SpCertificate, d: &Matrix, eps: f64, coupling_bound: f64) -> Result<CertResult> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveEps(eps));
    }
    check_dims("D", d.shape(), (cert.n_f(), cert.n_f()))?;
    // P_f is positive definite, so its 2-norm is the top eigenvalue
    let pf_norm = nsd_margin(&cert.p_f);
    let sigma = cert.block_sigma() + 2.0 * pf_norm * coupling_bound;
    certify_polytope(&cert.p_f, &MatrixPolytope::single(d / eps)?, cert.lambda_r, sigma)
}

/// Result of the experimental 2×2 candidate search.
#[derive(Debug, Clone)]
pub struct PrCandidate {
    pub p_r: SymMatrix,
    pub result: CertResult,
}

/// Experimental: coarse grid search for a 2×2 `P_r` with inertia `(1, 0, 1)`.
///
/// Candidates are `R(θ) diag(-μ, 1/μ) R(θ)ᵀ` (unit determinant magnitude)
/// over `grid` angles in `[0, π)` and `grid` log-spaced `μ ∈ [0.1, 10]`. The
/// best shape is rescaled so that its `σ`-free margin absorbs `sigma`. Returns
/// `None` if no shape has a negative `σ`-free margin on every vertex.
pub fn search_pr_2x2(polytope: &MatrixPolytope, lambda: f64, sigma: f64, grid: usize) -> Result<Option<PrCandidate>> {
    if polytope.dim() != 2 {
        return Err(Error::DimensionMismatch("candidate search supports 2x2 systems only".into()));
    }
    let grid = grid.max(2);
    let mut best: Option<(f64, SymMatrix)> = None;
    for i in 0..grid {
        let theta = std::f64::consts::PI * i as f64 / grid as f64;
        let (s, c) = theta.sin_cos();
        let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        for j in 0..grid {
            let mu = 10f64.powf(-1.0 + 2.0 * j as f64 / (grid - 1) as f64);
            let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-mu, 1.0 / mu]));
            let p = SymMatrix::new(&rot * d * rot.transpose())?;
            let m = certify_polytope(&p, polytope, lambda, 0.0)?.worst_margin;
            if m < 0.0 && best.as_ref().is_none_or(|(bm, _)| m < *bm) {
                best = Some((m, p));
            }
        }
    }
    let Some((m, p)) = best else { return Ok(None) };
    // margin(t P, σ) = t·margin(P, 0) + σ; t = 2σ/|m| leaves half of it as slack
    let p = p.scaled(2.0 * sigma / m.abs());
    let result = certify_polytope(&p, polytope, lambda, sigma)?;
    Ok(Some(PrCandidate { p_r: p, result }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix_from_rows;
    use proptest::prelude::*;

    fn pr() -> SymMatrix {
        SymMatrix::from_rows(&[&[-5.1987, 3.6260], &[3.6260, 6.1987]]).unwrap()
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        matrix_from_rows(rows).unwrap()
    }

    fn m_lo() -> Matrix {
        m(&[&[0.0, 1.0], &[-5.0, -5.0]])
    }

    fn m_hi() -> Matrix {
        m(&[&[0.0, 1.0], &[2.0, -5.0]])
    }

    // largest root of λ² − tr·λ + det for a symmetric 2×2
    fn max_eig_2x2(s: &Matrix) -> f64 {
        let tr = s[(0, 0)] + s[(1, 1)];
        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
    }

    fn paper_cert() -> SpCertificate {
        SpCertificate::new(pr(), SymMatrix::identity(1), 2.0, 0.5, 0.01, 1.0).unwrap()
    }

    #[test]
    fn residual_scalar_examples() {
        let one = SymMatrix::identity(1);
        let r = lmi_residual(&one, &m(&[&[-1.0]]), 0.0, 1.0).unwrap();
        assert_eq!(r.get(0, 0), -1.0);
        let r = lmi_residual(&one, &m(&[&[-1.0]]), 0.5, 1.0).unwrap();
        assert_eq!(r.get(0, 0), 0.0);
    }

    #[test]
    fn residual_upper_vertex_matches_oracle() {
        let r = lmi_residual(&pr(), &m_hi(), 2.0, 0.01).unwrap();
        let got = nsd_margin(&r);
        let want = max_eig_2x2(r.as_matrix());
        assert!(got <= 0.0);
        assert!((got - want).abs() < 1e-11);
    }

    #[test]
    fn polytope_examples() {
        let neg = MatrixPolytope::single(-Matrix::identity(2, 2)).unwrap();
        let r = certify_polytope(&SymMatrix::identity(2), &neg, 0.0, 1.0).unwrap();
        assert!(r.feasible);
        assert_eq!(r.worst_margin, -1.0);

        let paper = MatrixPolytope::new(vec![m_lo(), m_hi()]).unwrap();
        let r = certify_polytope(&pr(), &paper, 2.0, 0.01).unwrap();
        assert!(r.feasible);
        for (i, a) in [m_lo(), m_hi()].iter().enumerate() {
            let s = lmi_residual(&pr(), a, 2.0, 0.01).unwrap();
            assert!((r.margins[i] - max_eig_2x2(s.as_matrix())).abs() < 1e-11);
        }
    }

    #[test]
    fn vertex_beyond_paper_range() {
        let a = m(&[&[0.0, 1.0], &[3.0, -5.0]]);
        let s = lmi_residual(&pr(), &a, 2.0, 0.01).unwrap();
        let oracle = max_eig_2x2(s.as_matrix());
        let r = certify_polytope(&pr(), &MatrixPolytope::single(a).unwrap(), 2.0, 0.01).unwrap();
        assert!((r.worst_margin - oracle).abs() < 1e-11);
        assert_eq!(r.feasible, oracle <= 0.0);
        // the vertex leaves less room than the paper's upper vertex
        let hi = certify_polytope(&pr(), &MatrixPolytope::single(m_hi()).unwrap(), 2.0, 0.01).unwrap();
        assert!(r.worst_margin > hi.worst_margin);
    }

    #[test]
    fn sp_examples() {
        let slow = MatrixPolytope::new(vec![m_lo(), m_hi()]).unwrap();
        let fast = MatrixPolytope::single(m(&[&[-1.0]])).unwrap();
        let r = certify_sp(&paper_cert(), &slow, &fast).unwrap();
        assert!(r.feasible());
        assert_eq!(r.fast.worst_margin, 0.0);

        let stab = SpCertificate::new(SymMatrix::identity(2), SymMatrix::identity(2), 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(stab.p, 0);
        let neg = MatrixPolytope::single(-Matrix::identity(2, 2)).unwrap();
        assert!(certify_sp(&stab, &neg, &neg).unwrap().feasible());

        for lf in [0.0, 0.7, 3.0] {
            let c = SpCertificate::new(pr(), SymMatrix::identity(1), 2.0, lf, 0.01, 0.3).unwrap();
            let up = MatrixPolytope::single(m(&[&[1.0]])).unwrap();
            let r = certify_sp(&c, &slow, &up).unwrap();
            assert!(!r.fast.feasible);
            assert!((r.fast.worst_margin - (2.0 + 2.0 * lf + 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn certificate_validation() {
        let bad_pf = SpCertificate::new(pr(), SymMatrix::diagonal(&[-1.0]), 2.0, 0.5, 0.01, 1.0);
        assert!(matches!(bad_pf, Err(Error::InvalidCertificate(_))));
        let bad_rank = SpCertificate::with_rank(pr(), SymMatrix::identity(1), 2.0, 0.5, 0.01, 1.0, 0);
        assert!(bad_rank.is_err());
        let bad_sigma = SpCertificate::new(pr(), SymMatrix::identity(1), 2.0, 0.5, 0.0, 1.0);
        assert!(bad_sigma.is_err());
        assert_eq!(paper_cert().p, 1);
    }

    #[test]
    fn block_conditions_decoupled_case() {
        // B = 0, C = 0 gives L = 0 and the blocks reduce to (A, D/ε)
        let c = SpCertificate::new(pr(), SymMatrix::identity(1), 2.0, 0.5, 0.01, 1.0).unwrap();
        let b = Matrix::zeros(2, 1);
        let l = Matrix::zeros(1, 2);
        let d = m(&[&[-1.0]]);
        let eps = 0.25;
        let r = block_conditions(&c, &m_hi(), &b, &l, &d, eps).unwrap();
        let slow = certify_polytope(&pr(), &MatrixPolytope::single(m_hi()).unwrap(), 2.0, 0.005).unwrap();
        let fast = certify_polytope(&c.p_f, &MatrixPolytope::single(&d / eps).unwrap(), 2.0, 0.005).unwrap();
        assert_eq!(r.slow, slow);
        assert_eq!(r.fast, fast);
        assert!(matches!(block_conditions(&c, &m_hi(), &b, &l, &d, 0.0), Err(Error::NonpositiveEps(_))));
    }

    #[test]
    fn bounded_fast_block_is_conservative() {
        let c = paper_cert();
        let d = m(&[&[-1.0]]);
        let l = m(&[&[0.0, -1.0]]);
        let b = m(&[&[0.0], &[-5.0]]);
        let lb = (&l * &b).norm();
        let exact = block_conditions(&c, &m_hi(), &b, &l, &d, 0.01).unwrap().fast;
        let bound = fast_block_bounded(&c, &d, 0.01, lb).unwrap();
        assert!(bound.worst_margin >= exact.worst_margin - 1e-12);
    }

    #[test]
    fn grid_search_finds_candidate_for_paper_polytope() {
        let poly = MatrixPolytope::new(vec![m_lo(), m_hi()]).unwrap();
        let cand = search_pr_2x2(&poly, 2.0, 0.01, 60).unwrap().expect("candidate");
        assert!(cand.result.feasible);
        assert_eq!(cand.p_r.inertia(), crate::linalg::Inertia::new(1, 0, 1));
    }

    proptest! {
        #[test]
        fn residual_is_affine_in_a(
            a1 in prop::collection::vec(-5.0f64..5.0, 4),
            a2 in prop::collection::vec(-5.0f64..5.0, 4),
            alpha in 0.0f64..1.0,
        ) {
            let a1 = Matrix::from_vec(2, 2, a1);
            let a2 = Matrix::from_vec(2, 2, a2);
            let mix = &a1 * alpha + &a2 * (1.0 - alpha);
            let lhs = lmi_residual(&pr(), &mix, 2.0, 0.01).unwrap();
            let r1 = lmi_residual(&pr(), &a1, 2.0, 0.01).unwrap();
            let r2 = lmi_residual(&pr(), &a2, 2.0, 0.01).unwrap();
            let rhs = r1.as_matrix() * alpha + r2.as_matrix() * (1.0 - alpha);
            prop_assert!((lhs.as_matrix() - rhs).amax() < 1e-10);
        }

        #[test]
        fn hull_points_inherit_feasibility(alpha in 0.0f64..1.0) {
            let mix = m_lo() * alpha + m_hi() * (1.0 - alpha);
            let r = certify_polytope(&pr(), &MatrixPolytope::single(mix).unwrap(), 2.0, 0.01).unwrap();
            prop_assert!(r.feasible);
        }

        #[test]
        fn sigma_shifts_margin_exactly(ds in 0.0f64..5.0) {
            let poly = MatrixPolytope::new(vec![m_lo(), m_hi()]).unwrap();
            let base = certify_polytope(&pr(), &poly, 2.0, 0.01).unwrap();
            let shifted = certify_polytope(&pr(), &poly, 2.0, 0.01 + ds).unwrap();
            prop_assert!((shifted.worst_margin - base.worst_margin - ds).abs() < 1e-10);
        }
    }
}
