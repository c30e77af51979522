//! Fixed-step simulation of two-time-scale systems.
//!
//! Classical fourth-order Runge–Kutta with a step small enough to resolve
//! the boundary layer (`h = min(1e-3, ε/20)` by default). This is explicit,
//! so the cost grows like `1/ε`; it is meant for `ε ≳ 1e-3`.

use std::io::{self, Write};

use crate::dynamics::{SpDynamics, StateBox};
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// States whose Euclidean norm exceeds this abort the integration.
pub const BLOWUP_NORM: f64 = 1e12;

/// Rows written by [`Trajectory::write_csv`] are thinned to at most this many.
pub const MAX_CSV_ROWS: usize = 100_000;

pub fn default_step(eps: f64) -> f64 {
    (eps / 20.0).min(1e-3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub eps: f64,
    pub step: f64,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalTrajectory {
    pub base: Trajectory,
    pub deltas: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    /// Writes `t,<names...>` rows with 17 significant digits, keeping every
    /// k-th sample (and always the last) so that at most `max_rows` rows
    /// are written.
    pub fn write_csv<W: Write>(&self, mut w: W, names: &[String], max_rows: usize) -> io::Result<()> {
        write!(w, "t")?;
        for n in names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        let stride = self.len().div_ceil(max_rows.max(1)).max(1);
        let last = self.len() - 1;
        for i in (0..self.len()).filter(|i| i % stride == 0 || *i == last) {
            write!(w, "{:.16e}", self.times[i])?;
            for v in &self.states[i] {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn rk4_step<F>(rhs: &F, t: f64, y: &[f64], h: f64, scratch: &mut Rk4Scratch) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let Rk4Scratch { k1, k2, k3, k4, tmp } = scratch;
    rhs(y, k1)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(tmp, k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(tmp, k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(tmp, k4)?;
    let next: Vec<f64> = (0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > BLOWUP_NORM {
        return Err(Error::NonFinite { t: t + h });
    }
    Ok(next)
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Rk4Scratch { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }
}

/// Step sizes covering `[t0, t1]`: full steps of `h` and a final partial
/// step for the remainder (dropped when it is below `1e-9·h`).
fn step_plan(t0: f64, t1: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0) || !(t1 >= t0) {
        return Err(Error::Precondition(format!("need h > 0 and t1 >= t0 (h = {h}, span [{t0}, {t1}])")));
    }
    let ratio = (t1 - t0) / h;
    let mut full = ratio.floor();
    if ratio - full > 1.0 - 1e-9 {
        full += 1.0;
    }
    let rem = (t1 - t0) - full * h;
    Ok((full as usize, if rem > 1e-9 * h { rem } else { 0.0 }))
}

fn march<F>(rhs: F, y0: Vec<f64>, t0: f64, t1: f64, h: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let (full, rem) = step_plan(t0, t1, h)?;
    let mut scratch = Rk4Scratch::new(y0.len());
    let mut times = Vec::with_capacity(full + 2);
    let mut states = Vec::with_capacity(full + 2);
    times.push(t0);
    states.push(y0);
    for k in 0..full {
        let t = t0 + k as f64 * h;
        let next = rk4_step(&rhs, t, states.last().unwrap(), h, &mut scratch)?;
        times.push(t0 + (k + 1) as f64 * h);
        states.push(next);
    }
    if rem > 0.0 {
        let t = t0 + full as f64 * h;
        let next = rk4_step(&rhs, t, states.last().unwrap(), rem, &mut scratch)?;
        times.push(t1);
        states.push(next);
    }
    Ok((times, states))
}

fn check_initial<S: SpDynamics + ?Sized>(sys: &S, x0: &[f64]) -> Result<()> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state of length {} for a {}-dimensional system",
            x0.len(),
            sys.dim()
        )));
    }
    Ok(())
}

/// Integrates `[f; g/ε]` from `x0` over `t_span` with RK4 step `h`
/// (default [`default_step`]).
pub fn integrate<S: SpDynamics + ?Sized>(
    sys: &S,
    x0: &[f64],
    t_span: (f64, f64),
    h: Option<f64>,
) -> Result<Trajectory> {
    check_initial(sys, x0)?;
    let step = h.unwrap_or_else(|| default_step(sys.eps()));
    let (times, states) = march(|y, out| sys.rhs(y, out), x0.to_vec(), t_span.0, t_span.1, step)?;
    Ok(Trajectory { times, states, eps: sys.eps(), step, method: "rk4" })
}

/// States at each of `times` (ascending, all `>= t0`), integrating between
/// consecutive output times with equal steps no longer than `h`.
pub fn integrate_at<S: SpDynamics + ?Sized>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    times: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    check_initial(sys, x0)?;
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("step must be positive, got {h}")));
    }
    let n = x0.len();
    let mut scratch = Rk4Scratch::new(n);
    let rhs = |y: &[f64], out: &mut [f64]| sys.rhs(y, out);
    let mut y = x0.to_vec();
    let mut t = t0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::Precondition("output times must be ascending and after t0".into()));
        }
        let span = target - t;
        let steps = (span / h - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let dt = span / steps as f64;
            for k in 0..steps {
                y = rk4_step(&rhs, t + k as f64 * dt, &y, dt, &mut scratch)?;
            }
        }
        t = target;
        out.push(y.clone());
    }
    Ok(out)
}

/// Jointly integrates the system and its variational equation
/// `δ̇ = [[A, B], [C/ε, D/ε]] δ` with Jacobians taken at the current state.
pub fn integrate_variational<S: SpDynamics + ?Sized>(
    sys: &S,
    x0: &[f64],
    delta0: &[f64],
    t_span: (f64, f64),
    h: Option<f64>,
) -> Result<VariationalTrajectory> {
    check_initial(sys, x0)?;
    check_initial(sys, delta0)?;
    let n = sys.dim();
    let step = h.unwrap_or_else(|| default_step(sys.eps()));
    let eps = sys.eps();
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<()> {
        let (w, d) = y.split_at(n);
        let (ow, od) = out.split_at_mut(n);
        sys.rhs(w, ow)?;
        let j = sys.jacobians(w)?.full_matrix(eps);
        let dv = &j * Vector::from_column_slice(d);
        od.copy_from_slice(dv.as_slice());
        Ok(())
    };
    let y0: Vec<f64> = x0.iter().chain(delta0).copied().collect();
    let (times, joint) = march(rhs, y0, t_span.0, t_span.1, step)?;
    let (states, deltas) = joint
        .into_iter()
        .map(|mut y| {
            let d = y.split_off(n);
            (y, d)
        })
        .unzip();
    Ok(VariationalTrajectory { base: Trajectory { times, states, eps, step, method: "rk4" }, deltas })
}

/// Residual norm below which a Newton iterate is accepted as an equilibrium.
pub const EQUILIBRIUM_RESIDUAL: f64 = 1e-10;
/// Equilibria closer than this are merged.
pub const EQUILIBRIUM_MERGE_RADIUS: f64 = 1e-6;

fn newton_equilibrium<S: SpDynamics + ?Sized>(sys: &S, seed: &[f64]) -> Option<Vec<f64>> {
    let n = sys.dim();
    let residual = |w: &[f64]| -> Option<Vector> {
        let mut out = vec![0.0; n];
        sys.field(w, &mut out).ok()?;
        let v = Vector::from_vec(out);
        v.iter().all(|x| x.is_finite()).then_some(v)
    };
    let mut w = seed.to_vec();
    let mut r = residual(&w)?;
    for _ in 0..100 {
        if r.norm() <= EQUILIBRIUM_RESIDUAL {
            return Some(w);
        }
        let j = sys.jacobians(&w).ok()?.full_matrix(1.0);
        let step = j.lu().solve(&r)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if let Some(rt) = residual(&trial) {
                if rt.norm() < r.norm() {
                    w = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r.norm() <= EQUILIBRIUM_RESIDUAL).then_some(w)
}

/// Damped Newton on `[f; g] = 0` from every point of a `grid_n`-per-axis grid
/// over `search_box`. Results inside the box are deduplicated and sorted
/// lexicographically.
pub fn find_equilibria<S: SpDynamics + ?Sized>(sys: &S, search_box: &StateBox, grid_n: usize) -> Result<Vec<Vec<f64>>> {
    if search_box.dim() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "search box of dimension {} for a {}-dimensional system",
            search_box.dim(),
            sys.dim()
        )));
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for seed in search_box.grid(grid_n.max(2)) {
        let Some(eq) = newton_equilibrium(sys, &seed) else { continue };
        let inside = eq.iter().zip(&search_box.bounds).all(|(v, (lo, hi))| *v >= lo - 1e-9 && *v <= hi + 1e-9);
        if !inside {
            continue;
        }
        let dup = found.iter().any(|p| distance(p, &eq) <= EQUILIBRIUM_MERGE_RADIUS);
        if !dup {
            found.push(eq);
        }
    }
    found.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCheck {
    /// Index into the equilibrium list, when the trajectory settled on one.
    pub matched: Option<usize>,
    /// Index of the equilibrium nearest to the final state.
    pub nearest: Option<usize>,
    pub final_distance: f64,
    /// Largest distance from the final state over the last quarter of the run.
    pub tail_variation: f64,
    pub tol: f64,
}

/// A trajectory has converged to an equilibrium when its final state lies
/// within `tol` of it and its last quarter stays within `tol` of the final
/// state.
pub fn detect_convergence(traj: &Trajectory, equilibria: &[Vec<f64>], tol: f64) -> ConvergenceCheck {
    let last = traj.final_state();
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let cutoff = t0 + 0.75 * (t1 - t0);
    let tail_variation = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= cutoff)
        .map(|(_, s)| distance(s, last))
        .fold(0.0, f64::max);
    let nearest = equilibria.iter().enumerate().map(|(i, e)| (i, distance(e, last))).min_by(|a, b| a.1.total_cmp(&b.1));
    let final_distance = nearest.map_or(f64::INFINITY, |(_, d)| d);
    let matched = nearest.filter(|&(_, d)| d <= tol && tail_variation <= tol).map(|(i, _)| i);
    ConvergenceCheck { matched, nearest: nearest.map(|(i, _)| i), final_distance, tail_variation, tol }
}

/// Centered-difference derivative of samples on a uniform grid, for the
/// interior points `1..len-1`.
pub fn centered_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    (1..values.len().saturating_sub(1))
        .map(|i| (values[i + 1] - values[i - 1]) / (times[i + 1] - times[i - 1]))
        .collect()
}
