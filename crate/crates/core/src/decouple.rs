//! Slow/fast decoupling of linear singularly perturbed systems
//!
//! ```text
//!   ẋ = A x + B z
//! ε ż = C x + D z
//! ```
//!
//! The Chang transformation `T_ε` built from the solutions `L_ε`, `H_ε` of
//!
//! ```text
//! 0 = D L − C − ε L (A − B L)
//! 0 = H D − B + ε H L B − ε (A − B L) H
//! ```
//!
//! block-diagonalizes the system into `A − B L_ε` (slow) and `D/ε + L_ε B`
//! (fast). Only the time-invariant equations are solved; time-varying and
//! nonlinear systems are handled vertex-wise on Jacobian polytopes.

use crate::certify::{block_conditions, fast_block_bounded, MatrixPolytope, SpCertificate};
use crate::error::{check_dims, Error, Result};
use crate::linalg::{checked_inverse, rcond, Matrix};

/// The four blocks of a linear singularly perturbed system (or of the
/// Jacobian of a nonlinear one at a point).
#[derive(Debug, Clone, PartialEq)]
pub struct SpBlocks {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl SpBlocks {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n_r = a.nrows();
        let n_f = d.nrows();
        check_dims("A", a.shape(), (n_r, n_r))?;
        check_dims("B", b.shape(), (n_r, n_f))?;
        check_dims("C", c.shape(), (n_f, n_r))?;
        check_dims("D", d.shape(), (n_f, n_f))?;
        Ok(SpBlocks { a, b, c, d })
    }

    pub fn n_r(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_f(&self) -> usize {
        self.d.nrows()
    }

    /// `[[A, B], [C/ε, D/ε]]`, the system matrix in `(x, z)` coordinates.
    pub fn full_matrix(&self, eps: f64) -> Matrix {
        let (n_r, n_f) = (self.n_r(), self.n_f());
        let mut m = Matrix::zeros(n_r + n_f, n_r + n_f);
        m.view_mut((0, 0), (n_r, n_r)).copy_from(&self.a);
        m.view_mut((0, n_r), (n_r, n_f)).copy_from(&self.b);
        m.view_mut((n_r, 0), (n_f, n_r)).copy_from(&(&self.c / eps));
        m.view_mut((n_r, n_r), (n_f, n_f)).copy_from(&(&self.d / eps));
        m
    }
}

/// The `ε → 0` limit: `L₀ = D⁻¹C`, `H₀ = B D⁻¹`, `A₀ = A − B L₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub l0: Matrix,
    pub h0: Matrix,
    pub a0: Matrix,
    /// Reciprocal condition number of `D`.
    pub d_rcond: f64,
}

pub fn reduced_model(blocks: &SpBlocks) -> Result<ReducedModel> {
    let d_inv = checked_inverse(&blocks.d)?;
    let l0 = &d_inv * &blocks.c;
    let h0 = &blocks.b * &d_inv;
    let a0 = &blocks.a - &blocks.b * &l0;
    Ok(ReducedModel { l0, h0, a0, d_rcond: rcond(&blocks.d) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangOptions {
    /// Stop when the largest entry of the update is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ChangOptions {
    fn default() -> Self {
        ChangOptions { tol: 1e-12, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangSolution {
    pub l: Matrix,
    pub h: Matrix,
    pub iterations: (usize, usize),
    /// Frobenius norms of the two algebraic residuals.
    pub residual_l: f64,
    pub residual_h: f64,
}

pub fn chang_residual_l(blocks: &SpBlocks, l: &Matrix, eps: f64) -> Matrix {
    let SpBlocks { a, b, c, d } = blocks;
    d * l - c - (l * (a - b * l)) * eps
}

pub fn chang_residual_h(blocks: &SpBlocks, l: &Matrix, h: &Matrix, eps: f64) -> Matrix {
    let SpBlocks { a, b, d, .. } = blocks;
    h * d - b + (h * l * b) * eps - ((a - b * l) * h) * eps
}

/// Runs `x_{k+1} = step(x_k)` until the update drops below `tol`. Gives up
/// after `max_iter` steps, on non-finite values, or once the update has grown
/// five times in a row.
fn fixed_point(start: Matrix, opts: &ChangOptions, mut step: impl FnMut(&Matrix) -> Matrix) -> Result<(Matrix, usize)> {
    let mut x = start;
    let mut last = f64::INFINITY;
    let mut growth = 0;
    for k in 1..=opts.max_iter {
        let next = step(&x);
        let update = (&next - &x).amax();
        if !update.is_finite() {
            return Err(Error::NoConvergence { iterations: k, last_update: update });
        }
        x = next;
        if update <= opts.tol {
            return Ok((x, k));
        }
        growth = if update > last { growth + 1 } else { 0 };
        if growth >= 5 {
            return Err(Error::NoConvergence { iterations: k, last_update: update });
        }
        last = update;
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, last_update: last })
}

/// Solves the time-invariant Chang equations by fixed-point iteration
/// started from the `ε = 0` solution.
pub fn solve_chang_lti(blocks: &SpBlocks, eps: f64, opts: &ChangOptions) -> Result<ChangSolution> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveEps(eps));
    }
    let SpBlocks { a, b, c, .. } = blocks;
    let d_inv = checked_inverse(&blocks.d)?;

    let l0 = &d_inv * c;
    let (l, it_l) = fixed_point(l0, opts, |l| &d_inv * (c + (l * (a - b * l)) * eps))?;

    let slow = a - b * &l;
    let lb = &l * b;
    let h0 = b * &d_inv;
    let (h, it_h) = fixed_point(h0, opts, |h| (b - (h * &lb) * eps + (&slow * h) * eps) * &d_inv)?;

    let residual_l = chang_residual_l(blocks, &l, eps).norm();
    let residual_h = chang_residual_h(blocks, &l, &h, eps).norm();
    if residual_l > 1e-10 * c.norm().max(1.0) || residual_h > 1e-10 * b.norm().max(1.0) {
        return Err(Error::NoConvergence { iterations: it_l.max(it_h), last_update: residual_l.max(residual_h) });
    }
    Ok(ChangSolution { l, h, iterations: (it_l, it_h), residual_l, residual_h })
}

/// The Chang transformation at a fixed `ε` together with the decoupled blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangDecoupling {
    pub eps: f64,
    pub l: Matrix,
    pub h: Matrix,
    /// `[[I, εH], [−L, I − εLH]]`
    pub t: Matrix,
    /// `[[I − εHL, −εH], [L, I]]`
    pub t_inv: Matrix,
    /// `A − B L`
    pub slow_block: Matrix,
    /// `D/ε + L B`
    pub fast_block: Matrix,
    pub residual_l: f64,
    pub residual_h: f64,
}

impl ChangDecoupling {
    pub fn det_t_inv(&self) -> f64 {
        self.t_inv.clone().determinant()
    }

    /// `‖T T⁻¹ − I‖_F`
    pub fn inverse_residual(&self) -> f64 {
        let n = self.t.nrows();
        (&self.t * &self.t_inv - Matrix::identity(n, n)).norm()
    }

    /// Frobenius norm of the off-diagonal blocks of `T⁻¹ M_ε T`.
    pub fn block_diag_residual(&self, blocks: &SpBlocks) -> f64 {
        let (n_r, n_f) = (blocks.n_r(), blocks.n_f());
        let m = &self.t_inv * blocks.full_matrix(self.eps) * &self.t;
        let upper = m.view((0, n_r), (n_r, n_f)).norm();
        let lower = m.view((n_r, 0), (n_f, n_r)).norm();
        upper.hypot(lower)
    }
}

pub fn build_decoupling(blocks: &SpBlocks, eps: f64, opts: &ChangOptions) -> Result<ChangDecoupling> {
    let sol = solve_chang_lti(blocks, eps, opts)?;
    let (n_r, n_f) = (blocks.n_r(), blocks.n_f());
    let (l, h) = (sol.l, sol.h);
    let i_r = Matrix::identity(n_r, n_r);
    let i_f = Matrix::identity(n_f, n_f);

    let mut t = Matrix::zeros(n_r + n_f, n_r + n_f);
    t.view_mut((0, 0), (n_r, n_r)).copy_from(&i_r);
    t.view_mut((0, n_r), (n_r, n_f)).copy_from(&(&h * eps));
    t.view_mut((n_r, 0), (n_f, n_r)).copy_from(&(-&l));
    t.view_mut((n_r, n_r), (n_f, n_f)).copy_from(&(&i_f - (&l * &h) * eps));

    let mut t_inv = Matrix::zeros(n_r + n_f, n_r + n_f);
    t_inv.view_mut((0, 0), (n_r, n_r)).copy_from(&(&i_r - (&h * &l) * eps));
    t_inv.view_mut((0, n_r), (n_r, n_f)).copy_from(&(-&h * eps));
    t_inv.view_mut((n_r, 0), (n_f, n_r)).copy_from(&l);
    t_inv.view_mut((n_r, n_r), (n_f, n_f)).copy_from(&i_f);

    let slow_block = &blocks.a - &blocks.b * &l;
    let fast_block = &blocks.d / eps + &l * &blocks.b;
    Ok(ChangDecoupling {
        eps,
        l,
        h,
        t,
        t_inv,
        slow_block,
        fast_block,
        residual_l: sol.residual_l,
        residual_h: sol.residual_h,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonStarOptions {
    pub eps_max: f64,
    pub bisection_steps: usize,
    /// Smallest `ε` tried; infeasibility here is an error.
    pub floor: f64,
    /// Number of log-spaced points below the result that are re-checked.
    pub verify_points: usize,
    /// Optional bound on `‖L_ε B‖₂` used in place of the computed coupling
    /// on the fast block.
    pub coupling_bound: Option<f64>,
    pub chang: ChangOptions,
}

impl Default for EpsilonStarOptions {
    fn default() -> Self {
        EpsilonStarOptions {
            eps_max: 1.0,
            bisection_steps: 60,
            floor: 1e-12,
            verify_points: 16,
            coupling_bound: None,
            chang: ChangOptions::default(),
        }
    }
}

/// Block-condition outcome at one `ε`, worst case over all vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsCheck {
    pub eps: f64,
    pub feasible: bool,
    /// `None` when the Chang iteration failed at some vertex.
    pub slow_margin: Option<f64>,
    pub fast_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonStar {
    /// Largest tested `ε` with feasible block conditions at every vertex.
    pub eps_hat: f64,
    pub eps_max: f64,
    /// Log-spaced re-checks below `eps_hat`.
    pub verification: Vec<EpsCheck>,
    /// Re-check points that turned out infeasible.
    pub violations: Vec<f64>,
}

/// Worst-case block conditions over all vertex systems at one `ε`.
pub fn check_block_conditions(
    vertices: &[SpBlocks],
    cert: &SpCertificate,
    eps: f64,
    opts: &EpsilonStarOptions,
) -> Result<EpsCheck> {
    let mut slow = f64::NEG_INFINITY;
    let mut fast = f64::NEG_INFINITY;
    for v in vertices {
        let sol = match solve_chang_lti(v, eps, &opts.chang) {
            Ok(s) => s,
            Err(Error::NoConvergence { .. }) => {
                return Ok(EpsCheck { eps, feasible: false, slow_margin: None, fast_margin: None })
            }
            Err(e) => return Err(e),
        };
        let r = block_conditions(cert, &v.a, &v.b, &sol.l, &v.d, eps)?;
        slow = slow.max(r.slow.worst_margin);
        let f = match opts.coupling_bound {
            Some(beta) => fast_block_bounded(cert, &v.d, eps, beta)?.worst_margin,
            None => r.fast.worst_margin,
        };
        fast = fast.max(f);
    }
    Ok(EpsCheck { eps, feasible: slow <= 0.0 && fast <= 0.0, slow_margin: Some(slow), fast_margin: Some(fast) })
}

/// Bisection for the largest `ε ∈ (0, eps_max]` at which the decoupled block
/// conditions hold at every vertex system.
///
/// Feasibility is assumed monotone below the first feasible point; the
/// assumption is then re-checked at `verify_points` log-spaced values below
/// the result and any failures are reported in `violations`.
pub fn epsilon_star_vertices(
    vertices: &[SpBlocks],
    cert: &SpCertificate,
    opts: &EpsilonStarOptions,
) -> Result<EpsilonStar> {
    if vertices.is_empty() {
        return Err(Error::DimensionMismatch("no vertex systems given".into()));
    }
    for v in vertices {
        check_dims("vertex A", v.a.shape(), (cert.n_r(), cert.n_r()))?;
        check_dims("vertex D", v.d.shape(), (cert.n_f(), cert.n_f()))?;
    }
    if !(opts.eps_max > opts.floor) {
        return Err(Error::NonpositiveEps(opts.eps_max));
    }

    let feasible = |eps| check_block_conditions(vertices, cert, eps, opts).map(|c| c.feasible);

    let eps_hat = if feasible(opts.eps_max)? {
        opts.eps_max
    } else {
        if !feasible(opts.floor)? {
            return Err(Error::InfeasibleAtFloor { floor: opts.floor });
        }
        let (mut lo, mut hi) = (opts.floor, opts.eps_max);
        for _ in 0..opts.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let mut verification = Vec::with_capacity(opts.verify_points);
    let n = opts.verify_points;
    for k in 0..n {
        // ε̂·10^(-6k/(n-1)), from ε̂ down six decades
        let exponent = if n > 1 { -6.0 * k as f64 / (n - 1) as f64 } else { 0.0 };
        let eps = (eps_hat * 10f64.powf(exponent)).max(opts.floor);
        verification.push(check_block_conditions(vertices, cert, eps, opts)?);
    }
    let violations = verification.iter().filter(|c| !c.feasible).map(|c| c.eps).collect();
    Ok(EpsilonStar { eps_hat, eps_max: opts.eps_max, verification, violations })
}

/// [`epsilon_star_vertices`] over every pair `(Aᵢ, Dⱼ)` with fixed coupling
/// blocks `B`, `C`.
pub fn epsilon_star(
    a_polytope: &MatrixPolytope,
    b: &Matrix,
    c: &Matrix,
    d_polytope: &MatrixPolytope,
    cert: &SpCertificate,
    opts: &EpsilonStarOptions,
) -> Result<EpsilonStar> {
    let mut vertices = Vec::with_capacity(a_polytope.len() * d_polytope.len());
    for a in a_polytope.vertices() {
        for d in d_polytope.vertices() {
            vertices.push(SpBlocks::new(a.clone(), b.clone(), c.clone(), d.clone())?);
        }
    }
    epsilon_star_vertices(&vertices, cert, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_from_rows, SymMatrix};

    fn m(rows: &[&[f64]]) -> Matrix {
        matrix_from_rows(rows).unwrap()
    }

    fn paper_blocks(vp: f64) -> SpBlocks {
        SpBlocks::new(m(&[&[0.0, 1.0], &[vp, 0.0]]), m(&[&[0.0], &[-5.0]]), m(&[&[0.0, 1.0]]), m(&[&[-1.0]])).unwrap()
    }

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> SpBlocks {
        SpBlocks::new(m(&[&[a]]), m(&[&[b]]), m(&[&[c]]), m(&[&[d]])).unwrap()
    }

    fn paper_cert() -> SpCertificate {
        let pr = SymMatrix::from_rows(&[&[-5.1987, 3.6260], &[3.6260, 6.1987]]).unwrap();
        SpCertificate::new(pr, SymMatrix::identity(1), 2.0, 0.5, 0.01, 1.0).unwrap()
    }

    #[test]
    fn reduced_model_examples() {
        let b0 = SpBlocks::new(m(&[&[1.0, 2.0], &[3.0, 4.0]]), Matrix::zeros(2, 1), m(&[&[1.0, 1.0]]), m(&[&[-2.0]]))
            .unwrap();
        let r = reduced_model(&b0).unwrap();
        assert_eq!(r.a0, b0.a);
        assert_eq!(r.h0, Matrix::zeros(2, 1));

        let r = reduced_model(&paper_blocks(2.0)).unwrap();
        assert_eq!(r.l0, m(&[&[0.0, -1.0]]));
        assert_eq!(r.a0, m(&[&[0.0, 1.0], &[2.0, -5.0]]));

        let i = Matrix::identity(2, 2);
        let r = reduced_model(&SpBlocks::new(Matrix::zeros(2, 2), i.clone(), i.clone(), -&i).unwrap()).unwrap();
        assert_eq!(r.a0, i);

        let sing = scalar(0.0, 1.0, 1.0, 0.0);
        assert!(matches!(reduced_model(&sing), Err(Error::SingularD { .. })));
    }

    #[test]
    fn scalar_chang_matches_quadratic_root() {
        // 0.1 L² − L − 1 = 0, root nearest L₀ = −1
        let want = (1.0 - 1.4f64.sqrt()) / 0.2;
        let sol = solve_chang_lti(&scalar(0.0, 1.0, 1.0, -1.0), 0.1, &ChangOptions::default()).unwrap();
        assert!((sol.l[(0, 0)] - want).abs() < 1e-10, "{} vs {want}", sol.l[(0, 0)]);
    }

    #[test]
    fn small_eps_recovers_l0() {
        let b = paper_blocks(-3.0);
        let r = reduced_model(&b).unwrap();
        let sol = solve_chang_lti(&b, 1e-8, &ChangOptions::default()).unwrap();
        assert!((&sol.l - &r.l0).amax() < 1e-6);
        assert!((&sol.h - &r.h0).amax() < 1e-6);
    }

    #[test]
    fn uncoupled_fast_matches_sylvester_solve() {
        // B = 0: D L − C − ε L A = 0 is linear; solve (I⊗D − ε Aᵀ⊗I) vec(L) = vec(C)
        let a = m(&[&[0.3, -1.0], &[2.0, -0.5]]);
        let c = m(&[&[1.0, -2.0], &[0.5, 0.25]]);
        let d = m(&[&[-2.0, 0.3], &[0.1, -1.5]]);
        let blocks = SpBlocks::new(a.clone(), Matrix::zeros(2, 2), c.clone(), d.clone()).unwrap();
        let eps = 0.05;
        let kron = Matrix::identity(2, 2).kronecker(&d) - a.transpose().kronecker(&Matrix::identity(2, 2)) * eps;
        let vec_c = nalgebra::DVector::from_column_slice(c.as_slice());
        let vec_l = kron.lu().solve(&vec_c).unwrap();
        let want = Matrix::from_column_slice(2, 2, vec_l.as_slice());
        let sol = solve_chang_lti(&blocks, eps, &ChangOptions::default()).unwrap();
        assert!((&sol.l - want).amax() < 1e-11);
    }

    #[test]
    fn large_eps_fails_to_converge() {
        let err = solve_chang_lti(&paper_blocks(2.0), 0.5, &ChangOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
        assert!(matches!(
            solve_chang_lti(&paper_blocks(2.0), -1.0, &ChangOptions::default()),
            Err(Error::NonpositiveEps(_))
        ));
    }

    #[test]
    fn decoupling_of_uncoupled_system_is_identity() {
        let b =
            SpBlocks::new(m(&[&[-1.0, 2.0], &[0.0, -3.0]]), Matrix::zeros(2, 1), Matrix::zeros(1, 2), m(&[&[-4.0]]))
                .unwrap();
        let dec = build_decoupling(&b, 0.1, &ChangOptions::default()).unwrap();
        assert_eq!(dec.t, Matrix::identity(3, 3));
        assert_eq!(dec.slow_block, b.a);
        assert_eq!(dec.fast_block, m(&[&[-40.0]]));
    }

    #[test]
    fn paper_decoupling_block_diagonalizes() {
        let b = paper_blocks(2.0);
        let dec = build_decoupling(&b, 0.01, &ChangOptions::default()).unwrap();
        assert!(dec.block_diag_residual(&b) <= 1e-8);
        assert!((dec.det_t_inv() - 1.0).abs() <= 1e-9);
        assert!(dec.inverse_residual() <= 1e-9);
    }

    #[test]
    fn spectrum_is_preserved() {
        let b = paper_blocks(-5.0);
        let dec = build_decoupling(&b, 0.01, &ChangOptions::default()).unwrap();
        let sorted = |m: Matrix| {
            let mut v: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
            v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
            v
        };
        let full = sorted(b.full_matrix(0.01));
        let parts = sorted(crate::linalg::block_diag(&dec.slow_block, &dec.fast_block));
        for (x, y) in full.iter().zip(&parts) {
            assert!((x.0 - y.0).abs() < 1e-8 && (x.1 - y.1).abs() < 1e-8, "{x:?} {y:?}");
        }
    }

    #[test]
    fn epsilon_star_examples() {
        let cert = paper_cert();
        let opts = EpsilonStarOptions::default();
        let verts = [paper_blocks(-5.0), paper_blocks(2.0)];
        let star = epsilon_star_vertices(&verts, &cert, &opts).unwrap();
        assert!(star.eps_hat >= 0.01, "{}", star.eps_hat);
        assert!(star.eps_hat < 1.0);
        assert!(star.violations.is_empty());

        let uncoupled =
            SpBlocks::new(m(&[&[0.0, 1.0], &[2.0, -5.0]]), Matrix::zeros(2, 1), Matrix::zeros(1, 2), m(&[&[-1.0]]))
                .unwrap();
        // fast block alone: -2/ε + 2λ_r + σ ≤ 0 with σ = min(σ_r, σ_f)/2
        let star = epsilon_star_vertices(std::slice::from_ref(&uncoupled), &cert, &opts).unwrap();
        let oracle = 2.0 / (2.0 * cert.lambda_r + cert.block_sigma());
        assert!((star.eps_hat - oracle).abs() < 1e-12, "{} vs {oracle}", star.eps_hat);

        let stiff = SpBlocks { d: m(&[&[-10.0]]), ..uncoupled };
        let star = epsilon_star_vertices(&[stiff], &cert, &opts).unwrap();
        assert_eq!(star.eps_hat, opts.eps_max);

        let unstable =
            SpBlocks::new(m(&[&[0.0, 1.0], &[2.0, -5.0]]), Matrix::zeros(2, 1), Matrix::zeros(1, 2), m(&[&[1.0]]))
                .unwrap();
        assert!(matches!(epsilon_star_vertices(&[unstable], &cert, &opts), Err(Error::InfeasibleAtFloor { .. })));
    }

    #[test]
    fn epsilon_star_shrinks_with_sigma() {
        let verts = [paper_blocks(-5.0), paper_blocks(2.0)];
        let opts = EpsilonStarOptions::default();
        let mut last = f64::INFINITY;
        for sigma_f in [0.01, 0.5, 1.0, 2.0] {
            let mut c = paper_cert();
            c.sigma_r = sigma_f;
            c.sigma_f = sigma_f;
            let e = epsilon_star_vertices(&verts, &c, &opts).unwrap().eps_hat;
            assert!(e <= last + 1e-15);
            last = e;
        }
    }

    #[test]
    fn polytope_pairs_cover_all_vertices() {
        let cert = paper_cert();
        let a = MatrixPolytope::new(vec![paper_blocks(-5.0).a, paper_blocks(2.0).a]).unwrap();
        let d = MatrixPolytope::single(m(&[&[-1.0]])).unwrap();
        let b = m(&[&[0.0], &[-5.0]]);
        let c = m(&[&[0.0, 1.0]]);
        let via_pairs = epsilon_star(&a, &b, &c, &d, &cert, &EpsilonStarOptions::default()).unwrap();
        let direct =
            epsilon_star_vertices(&[paper_blocks(-5.0), paper_blocks(2.0)], &cert, &EpsilonStarOptions::default())
                .unwrap();
        assert_eq!(via_pairs.eps_hat, direct.eps_hat);
    }
}
