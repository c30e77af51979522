use nalgebra::DVector;

use super::expr::{diff_expr, Expr, Scope};
use super::parse::parse_simplified;
use crate::certify::MatrixPolytope;
use crate::decouple::{reduced_model, SpBlocks};
use crate::error::{check_dims, Error, Result};
use crate::linalg::{checked_inverse, Matrix, Vector};

/// Right-hand side of a singularly perturbed system
///
/// ```text
///   ẋ = f(x, z)
/// ε ż = g(x, z)
/// ```
///
/// with the state stored as `[x; z]`.
pub trait SpDynamics: Sync {
    fn n_r(&self) -> usize;
    fn n_f(&self) -> usize;
    fn eps(&self) -> f64;

    /// Writes `[f; g]` (not divided by `ε`) into `out`.
    fn field(&self, state: &[f64], out: &mut [f64]) -> Result<()>;

    /// Jacobian blocks `∂f/∂x, ∂f/∂z, ∂g/∂x, ∂g/∂z` at `state`.
    fn jacobians(&self, state: &[f64]) -> Result<SpBlocks>;

    fn dim(&self) -> usize {
        self.n_r() + self.n_f()
    }

    /// Time derivative `[f; g/ε]`.
    fn rhs(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        self.field(state, out)?;
        let eps = self.eps();
        for v in &mut out[self.n_r()..] {
            *v /= eps;
        }
        Ok(())
    }
}

/// Closed axis-aligned box, one interval per state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    pub bounds: Vec<(f64, f64)>,
}

impl StateBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::DimensionMismatch(format!(
                    "state box interval {i} is [{lo}, {hi}]; intervals must be finite and nonempty"
                )));
            }
        }
        Ok(StateBox { bounds })
    }

    pub fn symmetric(dim: usize, r: f64) -> Self {
        StateBox { bounds: vec![(-r, r); dim] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.bounds).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Points of a tensor grid with `n` points per axis (`n >= 2`; degenerate
    /// intervals contribute their single value).
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.bounds.iter().map(|&(lo, hi)| linspace(lo, hi, n)).collect();
        tensor_grid(&axes)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo == hi || n < 2 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub(crate) fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Nonlinear singularly perturbed system given by expressions over
/// `x1..x{n_r}, z1..z{n_f}`, with symbolic Jacobians derived once at
/// construction.
#[derive(Debug, Clone)]
pub struct NonlinearSpSystem {
    n_r: usize,
    n_f: usize,
    scope: Scope,
    f: Vec<Expr>,
    g: Vec<Expr>,
    /// `jac[i][j] = ∂[f; g]_i / ∂w_j`
    jac: Vec<Vec<Expr>>,
    eps: f64,
    omega: StateBox,
}

impl NonlinearSpSystem {
    pub fn new(scope: Scope, n_r: usize, f: &[&str], g: &[&str], eps: f64, omega: StateBox) -> Result<Self> {
        let parse = |srcs: &[&str]| srcs.iter().map(|s| parse_simplified(s, &scope)).collect::<Result<Vec<_>>>();
        let (f, g) = (parse(f)?, parse(g)?);
        Self::from_exprs(scope, n_r, f, g, eps, omega)
    }

    pub fn from_exprs(scope: Scope, n_r: usize, f: Vec<Expr>, g: Vec<Expr>, eps: f64, omega: StateBox) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonpositiveEps(eps));
        }
        let n_f = g.len();
        if f.len() != n_r || scope.len() != n_r + n_f || omega.dim() != n_r + n_f {
            return Err(Error::DimensionMismatch(format!(
                "system has {} f and {} g components, {} variables and a {}-dimensional box",
                f.len(),
                n_f,
                scope.len(),
                omega.dim()
            )));
        }
        if n_r == 0 || n_f == 0 {
            return Err(Error::DimensionMismatch("both slow and fast parts must be nonempty".into()));
        }
        let jac = f.iter().chain(&g).map(|e| (0..n_r + n_f).map(|j| diff_expr(e, j)).collect()).collect();
        let sys = NonlinearSpSystem { n_r, n_f, scope, f, g, jac, eps, omega };

        let origin = vec![0.0; n_r + n_f];
        let mut out = vec![0.0; n_r + n_f];
        match sys.field(&origin, &mut out) {
            Ok(()) if out.iter().all(|v| v.abs() <= 1e-12) => {}
            Ok(()) => log::warn!("f(0,0) or g(0,0) is nonzero; the origin is not an equilibrium"),
            Err(e) => log::warn!("system cannot be evaluated at the origin: {e}"),
        }
        Ok(sys)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn omega(&self) -> &StateBox {
        &self.omega
    }

    pub fn f(&self) -> &[Expr] {
        &self.f
    }

    pub fn g(&self) -> &[Expr] {
        &self.g
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonpositiveEps(eps));
        }
        Ok(NonlinearSpSystem { eps, ..self.clone() })
    }

    /// Symbolic Jacobian entry `∂[f; g]_row / ∂w_col` over the full state.
    pub fn jacobian_expr(&self, row: usize, col: usize) -> &Expr {
        &self.jac[row][col]
    }

    fn full_jacobian(&self, state: &[f64]) -> Result<Matrix> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.jac[i][j].eval(state)?;
            }
        }
        Ok(m)
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {}-dimensional system",
                state.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Slow manifold `z = h(x)` and its slope `∂h/∂x = −(∂g/∂z)⁻¹ ∂g/∂x`.
    ///
    /// When `∂g/∂z` does not depend on `z` the fast equation is affine and
    /// `h` is solved directly; otherwise by damped Newton from `z = 0`.
    pub fn reduced_manifold_slope(&self, x: &[f64]) -> Result<ManifoldPoint> {
        if x.len() != self.n_r {
            return Err(Error::DimensionMismatch(format!("x of length {} for n_r = {}", x.len(), self.n_r)));
        }
        let (n_r, n_f) = (self.n_r, self.n_f);
        let mut w: Vec<f64> = x.iter().copied().chain(std::iter::repeat_n(0.0, n_f)).collect();
        let affine = (n_r..n_r + n_f)
            .all(|row| (n_r..n_r + n_f).all(|col| (n_r..n_r + n_f).all(|v| !self.jac[row][col].depends_on(v))));

        let g_at = |w: &[f64]| -> Result<Vector> {
            let vals = self.g.iter().map(|e| e.eval(w)).collect::<Result<Vec<_>>>()?;
            Ok(DVector::from_vec(vals))
        };
        let dz = |w: &[f64]| -> Result<Matrix> { Ok(self.jacobians(w)?.d) };
        let solve = |m: &Matrix, r: &Vector| -> Result<Vector> {
            checked_inverse(m).map(|inv| inv * r).map_err(|_| Error::SingularDz)
        };

        let mut iterations = 0;
        if affine {
            let step = solve(&dz(&w)?, &g_at(&w)?)?;
            for k in 0..n_f {
                w[n_r + k] = -step[k];
            }
        } else {
            let mut r = g_at(&w)?;
            loop {
                if r.norm() <= 1e-12 {
                    break;
                }
                iterations += 1;
                if iterations > 100 {
                    return Err(Error::NewtonFailure(format!(
                        "no convergence at x = {x:?} (residual {:.3e})",
                        r.norm()
                    )));
                }
                let step = solve(&dz(&w)?, &r)?;
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..=30 {
                    let trial: Vec<f64> =
                        w.iter().enumerate().map(|(i, v)| if i >= n_r { v - t * step[i - n_r] } else { *v }).collect();
                    let rt = g_at(&trial)?;
                    if rt.norm() < r.norm() {
                        w = trial;
                        r = rt;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    return Err(Error::NewtonFailure(format!(
                        "line search stalled at x = {x:?} (residual {:.3e})",
                        r.norm()
                    )));
                }
            }
        }
        let blocks = self.jacobians(&w)?;
        let d_inv = checked_inverse(&blocks.d).map_err(|_| Error::SingularDz)?;
        let slope = -(d_inv * blocks.c);
        Ok(ManifoldPoint { h: w[n_r..].to_vec(), slope, iterations })
    }

    /// Selects the state-dependent Jacobian entry and builds the polytope of
    /// Jacobian blocks at its lower and upper bound. All other entries must
    /// be constant. Without explicit `bounds` the entry is sampled on a grid
    /// with `grid_n` points per axis it depends on; the result is then a
    /// heuristic enclosure, flagged by `sampled`.
    pub fn scalar_hull(&self, entry: JacobianEntry, bounds: Option<(f64, f64)>, grid_n: usize) -> Result<ScalarHull> {
        let (row, col) = entry.full_index(self.n_r, self.n_f)?;
        let n = self.dim();
        let varying: Vec<String> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (i, j) != (row, col) && self.jac[i][j].as_const().is_none())
            .map(|(i, j)| format!("({i}, {j})"))
            .collect();
        if !varying.is_empty() {
            return Err(Error::NotScalarParameterized(varying.join(", ")));
        }
        let expr = &self.jac[row][col];
        let origin = vec![0.0; n];

        let (values, sampled) = if let Some(c) = expr.as_const() {
            (vec![c], false)
        } else if let Some((lo, hi)) = bounds {
            if !(lo <= hi) {
                return Err(Error::DimensionMismatch(format!("hull bounds [{lo}, {hi}] are empty")));
            }
            (if lo == hi { vec![lo] } else { vec![lo, hi] }, false)
        } else {
            let vars = expr.free_vars();
            let axes: Vec<Vec<f64>> = vars
                .iter()
                .map(|&v| {
                    let (lo, hi) = self.omega.bounds[v];
                    linspace(lo, hi, grid_n.max(2))
                })
                .collect();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in tensor_grid(&axes) {
                let mut w = origin.clone();
                for (&v, &val) in vars.iter().zip(&p) {
                    w[v] = val;
                }
                let val = expr.eval(&w)?;
                lo = lo.min(val);
                hi = hi.max(val);
            }
            (if lo == hi { vec![lo] } else { vec![lo, hi] }, true)
        };

        // every other entry is constant, so the origin gives their values
        let base = self.full_jacobian_const()?;
        let vertices = values
            .iter()
            .map(|&val| {
                let mut m = base.clone();
                m[(row, col)] = val;
                split_blocks(&m, self.n_r, self.n_f)
            })
            .collect::<Result<Vec<_>>>()?;
        let lo = values[0];
        let hi = *values.last().expect("nonempty");
        Ok(ScalarHull { entry, lo, hi, sampled, vertices })
    }

    fn full_jacobian_const(&self) -> Result<Matrix> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.jac[i][j].as_const().unwrap_or(0.0);
            }
        }
        Ok(m)
    }

    /// Entrywise Jacobian ranges over a tensor grid on `Ω` (`grid_n` points
    /// per axis). A sampled check of boundedness, not a proof.
    pub fn sample_jacobian_ranges(&self, grid_n: usize) -> Result<JacobianRanges> {
        let n = self.dim();
        let mut min = Matrix::from_element(n, n, f64::INFINITY);
        let mut max = Matrix::from_element(n, n, f64::NEG_INFINITY);
        let grid = self.omega.grid(grid_n.max(2));
        for p in &grid {
            let j = self.full_jacobian(p)?;
            min.zip_apply(&j, |a, b| *a = a.min(b));
            max.zip_apply(&j, |a, b| *a = a.max(b));
        }
        let all_finite = min.iter().chain(max.iter()).all(|v| v.is_finite());
        Ok(JacobianRanges { min, max, points: grid.len(), all_finite })
    }
}

impl SpDynamics for NonlinearSpSystem {
    fn n_r(&self) -> usize {
        self.n_r
    }

    fn n_f(&self) -> usize {
        self.n_f
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn field(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_state(state)?;
        for (o, e) in out.iter_mut().zip(self.f.iter().chain(&self.g)) {
            *o = e.eval(state)?;
        }
        Ok(())
    }

    fn jacobians(&self, state: &[f64]) -> Result<SpBlocks> {
        self.check_state(state)?;
        if !self.omega.contains(state) {
            log::debug!("Jacobian requested outside the state box at {state:?}");
        }
        split_blocks(&self.full_jacobian(state)?, self.n_r, self.n_f)
    }
}

fn split_blocks(m: &Matrix, n_r: usize, n_f: usize) -> Result<SpBlocks> {
    SpBlocks::new(
        m.view((0, 0), (n_r, n_r)).into_owned(),
        m.view((0, n_r), (n_r, n_f)).into_owned(),
        m.view((n_r, 0), (n_f, n_r)).into_owned(),
        m.view((n_r, n_r), (n_f, n_f)).into_owned(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    pub h: Vec<f64>,
    pub slope: Matrix,
    /// Newton iterations used; zero for the affine case.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    A,
    B,
    C,
    D,
}

/// One entry of one Jacobian block, with block-local indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JacobianEntry {
    pub block: Block,
    pub row: usize,
    pub col: usize,
}

impl JacobianEntry {
    pub fn new(block: Block, row: usize, col: usize) -> Self {
        JacobianEntry { block, row, col }
    }

    fn full_index(&self, n_r: usize, n_f: usize) -> Result<(usize, usize)> {
        let (r0, c0, nr, nc) = match self.block {
            Block::A => (0, 0, n_r, n_r),
            Block::B => (0, n_r, n_r, n_f),
            Block::C => (n_r, 0, n_f, n_r),
            Block::D => (n_r, n_r, n_f, n_f),
        };
        if self.row >= nr || self.col >= nc {
            return Err(Error::DimensionMismatch(format!(
                "entry ({}, {}) outside a {nr}x{nc} block",
                self.row, self.col
            )));
        }
        Ok((r0 + self.row, c0 + self.col))
    }
}

/// Jacobian blocks at the extreme values of a single state-dependent entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarHull {
    pub entry: JacobianEntry,
    pub lo: f64,
    pub hi: f64,
    /// Bounds came from grid sampling rather than the caller.
    pub sampled: bool,
    pub vertices: Vec<SpBlocks>,
}

impl ScalarHull {
    /// Polytope of reduced matrices `A₀ = A − B D⁻¹ C` at the vertices.
    pub fn slow_polytope(&self) -> Result<MatrixPolytope> {
        let a0 = self.vertices.iter().map(|v| reduced_model(v).map(|r| r.a0)).collect::<Result<Vec<_>>>()?;
        MatrixPolytope::new(a0)
    }

    pub fn fast_polytope(&self) -> Result<MatrixPolytope> {
        MatrixPolytope::new(self.vertices.iter().map(|v| v.d.clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianRanges {
    pub min: Matrix,
    pub max: Matrix,
    pub points: usize,
    pub all_finite: bool,
}

/// Linear singularly perturbed system with optional vertex polytopes for
/// `A` and `D`. Simulation uses the first vertex of each.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpSystem {
    pub a: MatrixPolytope,
    pub b: Matrix,
    pub c: Matrix,
    pub d: MatrixPolytope,
    pub eps: f64,
}

impl LinearSpSystem {
    pub fn new(a: MatrixPolytope, b: Matrix, c: Matrix, d: MatrixPolytope, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonpositiveEps(eps));
        }
        let (n_r, n_f) = (a.dim(), d.dim());
        check_dims("B", b.shape(), (n_r, n_f))?;
        check_dims("C", c.shape(), (n_f, n_r))?;
        Ok(LinearSpSystem { a, b, c, d, eps })
    }

    pub fn from_blocks(blocks: SpBlocks, eps: f64) -> Result<Self> {
        let SpBlocks { a, b, c, d } = blocks;
        Self::new(MatrixPolytope::single(a)?, b, c, MatrixPolytope::single(d)?, eps)
    }

    pub fn nominal(&self) -> SpBlocks {
        SpBlocks {
            a: self.a.vertices()[0].clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.vertices()[0].clone(),
        }
    }

    /// Every `(Aᵢ, B, C, Dⱼ)` combination.
    pub fn vertex_systems(&self) -> Vec<SpBlocks> {
        let mut out = Vec::new();
        for a in self.a.vertices() {
            for d in self.d.vertices() {
                out.push(SpBlocks { a: a.clone(), b: self.b.clone(), c: self.c.clone(), d: d.clone() });
            }
        }
        out
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone(), eps)
    }
}

impl SpDynamics for LinearSpSystem {
    fn n_r(&self) -> usize {
        self.a.dim()
    }

    fn n_f(&self) -> usize {
        self.d.dim()
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn field(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if state.len() != n {
            return Err(Error::DimensionMismatch(format!("state of length {} for dimension {n}", state.len())));
        }
        let n_r = self.n_r();
        let (x, z) = state.split_at(n_r);
        let a = &self.a.vertices()[0];
        let d = &self.d.vertices()[0];
        let row = |m: &Matrix, i: usize, v: &[f64]| v.iter().enumerate().map(|(j, vj)| m[(i, j)] * vj).sum::<f64>();
        for (i, o) in out[..n_r].iter_mut().enumerate() {
            *o = row(a, i, x) + row(&self.b, i, z);
        }
        for (i, o) in out[n_r..n].iter_mut().enumerate() {
            *o = row(&self.c, i, x) + row(d, i, z);
        }
        Ok(())
    }

    fn jacobians(&self, _state: &[f64]) -> Result<SpBlocks> {
        Ok(self.nominal())
    }
}

/// Either kind of system, for callers that pick at runtime.
#[derive(Debug, Clone)]
pub enum SpSystem {
    Linear(LinearSpSystem),
    Nonlinear(NonlinearSpSystem),
}

impl SpSystem {
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Ok(match self {
            SpSystem::Linear(s) => SpSystem::Linear(s.with_eps(eps)?),
            SpSystem::Nonlinear(s) => SpSystem::Nonlinear(s.with_eps(eps)?),
        })
    }

    fn inner(&self) -> &dyn SpDynamics {
        match self {
            SpSystem::Linear(s) => s,
            SpSystem::Nonlinear(s) => s,
        }
    }
}

impl SpDynamics for SpSystem {
    fn n_r(&self) -> usize {
        self.inner().n_r()
    }

    fn n_f(&self) -> usize {
        self.inner().n_f()
    }

    fn eps(&self) -> f64 {
        self.inner().eps()
    }

    fn field(&self, state: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner().field(state, out)
    }

    fn jacobians(&self, state: &[f64]) -> Result<SpBlocks> {
        self.inner().jacobians(state)
    }
}
