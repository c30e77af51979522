//! Empirical check of strong monotonicity: trajectory pairs whose initial
//! difference lies in the cone should have differences in the cone's
//! interior at every later time.
//!
//! Pairs are drawn with a seeded SplitMix64 generator so that a run is
//! reproducible from its seed on any platform. Pairs are integrated in
//! parallel (capped by `DOMINION_THREADS`); results are collected in draw
//! order.

use rayon::prelude::*;

use crate::certify::SpCertificate;
use crate::cone::{ConeLocation, MatrixCone, DEFAULT_CONE_TOL};
use crate::dynamics::{SpDynamics, StateBox};
use crate::error::{Error, Result};
use crate::integrate::{default_step, integrate_at};

/// SplitMix64 (Steele, Lea & Flood). Tiny, fast, and fully specified by its
/// three constants, which is what makes seeded runs portable.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn point_in(&mut self, b: &StateBox) -> Vec<f64> {
        b.bounds.iter().map(|&(lo, hi)| self.uniform(lo, hi)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub n_pairs: usize,
    pub t_final: f64,
    pub seed: u64,
    /// Sample times are `k·t_final/samples`, `k = 1..=samples`.
    pub samples: usize,
    pub cone_tol: f64,
    /// Cap on consecutive rejected draws for a single pair.
    pub max_attempts: usize,
    /// Largest admissible fraction of Boundary classifications.
    pub boundary_fraction: f64,
    /// RK4 step; `None` uses the integrator default for the system's ε.
    pub step: Option<f64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            n_pairs: 100,
            t_final: 9.0,
            seed: 42,
            samples: 200,
            cone_tol: DEFAULT_CONE_TOL,
            max_attempts: 100_000,
            boundary_fraction: 0.01,
            step: None,
        }
    }
}

/// How sample classifications are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeMode {
    /// Rank ≥ 1: each difference is located relative to the cone.
    Cone,
    /// Rank 0 (`P ≻ 0`, the cone is `{0}`): the weighted energy
    /// `e^{2λt}·δᵀPδ` must not increase between consecutive samples.
    /// Decrease counts as Interior, a change inside the relative band as
    /// Boundary, and an increase as Outside.
    WeightedEnergy { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub interior: usize,
    pub boundary: usize,
    pub outside: usize,
    /// Largest `δᵀPδ/‖δ‖²` over the samples (cone mode) or largest relative
    /// increase of the weighted energy (weighted-energy mode).
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub mode: ProbeMode,
    pub pairs: Vec<PairOutcome>,
    pub samples_per_pair: usize,
    pub interior: usize,
    pub boundary: usize,
    pub outside: usize,
    pub worst_margin: f64,
    /// Total draws including rejected ones.
    pub draws: usize,
    pub options: ProbeOptions,
}

impl ProbeReport {
    pub fn total(&self) -> usize {
        self.interior + self.boundary + self.outside
    }

    pub fn boundary_share(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.boundary as f64 / self.total() as f64
        }
    }

    /// No Outside samples and Boundary within the allowed fraction.
    pub fn passed(&self) -> bool {
        self.outside == 0 && self.boundary_share() <= self.options.boundary_fraction
    }
}

pub fn probe_mode(cert: &SpCertificate) -> ProbeMode {
    if cert.p == 0 {
        ProbeMode::WeightedEnergy { lambda: cert.lambda_r.min(cert.lambda_f) }
    } else {
        ProbeMode::Cone
    }
}

pub fn sample_times(t_final: f64, samples: usize) -> Vec<f64> {
    (1..=samples).map(|k| k as f64 * t_final / samples as f64).collect()
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    b.iter().zip(a).map(|(y, x)| y - x).collect()
}

/// Draws one pair inside `omega` whose difference is nonzero and (in cone
/// mode) not Outside.
fn draw_pair(
    rng: &mut SplitMix64,
    omega: &StateBox,
    cone: &MatrixCone,
    mode: ProbeMode,
    opts: &ProbeOptions,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    for attempt in 1..=opts.max_attempts {
        let x = rng.point_in(omega);
        let y = rng.point_in(omega);
        let d = difference(&x, &y);
        if d.iter().all(|v| *v == 0.0) {
            continue;
        }
        let admissible = match mode {
            ProbeMode::WeightedEnergy { .. } => true,
            ProbeMode::Cone => cone.locate(&d, opts.cone_tol)? != ConeLocation::Outside,
        };
        if admissible {
            return Ok((x, y, attempt));
        }
    }
    Err(Error::SamplingExhausted { attempts: opts.max_attempts })
}

/// Integrates one pair and classifies its difference at the sample times.
pub fn probe_pair<S: SpDynamics + ?Sized>(
    sys: &S,
    cone: &MatrixCone,
    mode: ProbeMode,
    x0: &[f64],
    y0: &[f64],
    opts: &ProbeOptions,
) -> Result<PairOutcome> {
    if x0.len() != cone.dim() || y0.len() != cone.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pair of lengths {}/{} for a cone of dimension {}",
            x0.len(),
            y0.len(),
            cone.dim()
        )));
    }
    let d0 = difference(x0, y0);
    if d0.iter().all(|v| *v == 0.0) {
        return Err(Error::Precondition("initial difference is zero; the pair must be distinct".into()));
    }
    let times = sample_times(opts.t_final, opts.samples);
    let h = opts.step.unwrap_or_else(|| default_step(sys.eps()));
    let xs = integrate_at(sys, x0, 0.0, &times, h)?;
    let ys = integrate_at(sys, y0, 0.0, &times, h)?;

    let mut out = PairOutcome {
        x0: x0.to_vec(),
        y0: y0.to_vec(),
        interior: 0,
        boundary: 0,
        outside: 0,
        worst_margin: f64::NEG_INFINITY,
    };
    let mut tally = |loc: ConeLocation| match loc {
        ConeLocation::Interior => out.interior += 1,
        ConeLocation::Boundary => out.boundary += 1,
        ConeLocation::Outside => out.outside += 1,
    };
    let mut worst = f64::NEG_INFINITY;
    match mode {
        ProbeMode::Cone => {
            for (x, y) in xs.iter().zip(&ys) {
                let d = difference(x, y);
                tally(cone.locate(&d, opts.cone_tol)?);
                worst = worst.max(cone.normalized_margin(&d)?);
            }
        }
        ProbeMode::WeightedEnergy { lambda } => {
            let mut prev = cone.quad_form(&d0)?;
            for ((t, x), y) in times.iter().zip(&xs).zip(&ys) {
                let w = (2.0 * lambda * t).exp() * cone.quad_form(&difference(x, y))?;
                let rel = (w - prev) / prev.abs().max(f64::MIN_POSITIVE);
                tally(if rel < -opts.cone_tol {
                    ConeLocation::Interior
                } else if rel <= opts.cone_tol {
                    ConeLocation::Boundary
                } else {
                    ConeLocation::Outside
                });
                worst = worst.max(rel);
                prev = w;
            }
        }
    }
    out.worst_margin = worst;
    Ok(out)
}

fn thread_cap() -> Option<usize> {
    std::env::var("DOMINION_THREADS").ok()?.trim().parse::<usize>().ok().filter(|n| *n > 0)
}

/// Draws `n_pairs` pairs from `omega` (sequentially, so the draw is fixed by
/// the seed) and probes them in parallel.
pub fn monotone_probe<S: SpDynamics + ?Sized>(
    sys: &S,
    omega: &StateBox,
    cert: &SpCertificate,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let cone = cert.cone()?;
    if omega.dim() != cone.dim() || sys.dim() != cone.dim() {
        return Err(Error::DimensionMismatch(format!(
            "system of dimension {}, box of dimension {}, cone of dimension {}",
            sys.dim(),
            omega.dim(),
            cone.dim()
        )));
    }
    if !(opts.t_final > 0.0) || opts.samples == 0 {
        return Err(Error::Precondition("probe needs t_final > 0 and at least one sample".into()));
    }
    let mode = probe_mode(cert);
    let mut rng = SplitMix64::new(opts.seed);
    let mut draws = 0;
    let mut pairs = Vec::with_capacity(opts.n_pairs);
    for _ in 0..opts.n_pairs {
        let (x, y, n) = draw_pair(&mut rng, omega, &cone, mode, opts)?;
        draws += n;
        pairs.push((x, y));
    }

    let run = || -> Result<Vec<PairOutcome>> {
        pairs.par_iter().map(|(x, y)| probe_pair(sys, &cone, mode, x, y, opts)).collect()
    };
    let outcomes = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let sum = |f: fn(&PairOutcome) -> usize| outcomes.iter().map(f).sum::<usize>();
    Ok(ProbeReport {
        mode,
        samples_per_pair: opts.samples,
        interior: sum(|p| p.interior),
        boundary: sum(|p| p.boundary),
        outside: sum(|p| p.outside),
        worst_margin: outcomes.iter().map(|p| p.worst_margin).fold(f64::NEG_INFINITY, f64::max),
        draws,
        pairs: outcomes,
        options: opts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decouple::SpBlocks;
    use crate::dynamics::{LinearSpSystem, NonlinearSpSystem, Scope};
    use crate::linalg::{matrix_from_rows, SymMatrix};

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 (widely published reference values)
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(r.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(r.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn uniform_stays_in_range_and_is_seeded() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..1000 {
            let u = a.next_f64();
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u, b.next_f64());
        }
        let v = a.uniform(-2.0, 3.0);
        assert!((-2.0..3.0).contains(&v));
    }

    fn decay_system() -> NonlinearSpSystem {
        NonlinearSpSystem::new(Scope::state(1, 1), 1, &["-x1"], &["-z1"], 0.1, StateBox::symmetric(2, 1.0)).unwrap()
    }

    fn opts(n: usize) -> ProbeOptions {
        ProbeOptions { n_pairs: n, t_final: 1.0, samples: 20, ..ProbeOptions::default() }
    }

    #[test]
    fn identical_pair_is_a_precondition_violation() {
        let sys = decay_system();
        let cone = MatrixCone::new(SymMatrix::diagonal(&[-1.0, 1.0])).unwrap();
        let err = probe_pair(&sys, &cone, ProbeMode::Cone, &[0.5, 0.5], &[0.5, 0.5], &opts(1)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn thin_cone_exhausts_sampling() {
        let sys = decay_system();
        // with x pinned, every difference is (0, dz) and lies outside {x² ≥ z²}
        let cert =
            SpCertificate::new(SymMatrix::diagonal(&[-1.0]), SymMatrix::identity(1), 0.0, 0.0, 1.0, 1.0).unwrap();
        let o = ProbeOptions { max_attempts: 1000, ..opts(1) };
        let omega = StateBox::new(vec![(0.0, 0.0), (-1.0, 1.0)]).unwrap();
        let err = monotone_probe(&sys, &omega, &cert, &o).unwrap_err();
        assert_eq!(err, Error::SamplingExhausted { attempts: 1000 });
    }

    #[test]
    fn decoupled_decay_stays_in_slow_cone() {
        // x decays at rate 1, z at rate 10; the cone {x² ≥ z²} is entered by
        // every difference, and stays interior.
        let sys = decay_system();
        let cert =
            SpCertificate::new(SymMatrix::diagonal(&[-1.0]), SymMatrix::identity(1), 2.0, 2.0, 0.1, 0.1).unwrap();
        let r = monotone_probe(&sys, sys.omega(), &cert, &opts(10)).unwrap();
        assert_eq!(r.mode, ProbeMode::Cone);
        assert_eq!(r.total(), 200);
        assert_eq!(r.outside, 0);
        assert!(r.passed());
        assert!(r.worst_margin < 0.0);
    }

    #[test]
    fn weighted_energy_mode_on_stable_linear_system() {
        let blocks = SpBlocks::new(
            matrix_from_rows(&[&[-1.0]]).unwrap(),
            matrix_from_rows(&[&[0.0]]).unwrap(),
            matrix_from_rows(&[&[0.0]]).unwrap(),
            matrix_from_rows(&[&[-1.0]]).unwrap(),
        )
        .unwrap();
        let sys = LinearSpSystem::from_blocks(blocks, 0.5).unwrap();
        let cert = SpCertificate::new(SymMatrix::identity(1), SymMatrix::identity(1), 0.5, 0.5, 0.1, 0.1).unwrap();
        assert_eq!(probe_mode(&cert), ProbeMode::WeightedEnergy { lambda: 0.5 });
        let r = monotone_probe(&sys, &StateBox::symmetric(2, 1.0), &cert, &opts(5)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.interior, r.total());

        // a rate faster than the true decay is caught
        let fast = SpCertificate::new(SymMatrix::identity(1), SymMatrix::identity(1), 1.5, 1.5, 0.1, 0.1).unwrap();
        let r = monotone_probe(&sys, &StateBox::symmetric(2, 1.0), &fast, &opts(5)).unwrap();
        assert!(r.outside > 0);
        assert!(!r.passed());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let sys = decay_system();
        let cert =
            SpCertificate::new(SymMatrix::diagonal(&[-1.0]), SymMatrix::identity(1), 2.0, 2.0, 0.1, 0.1).unwrap();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = serial.install(|| monotone_probe(&sys, sys.omega(), &cert, &opts(8)).unwrap());
        let b = monotone_probe(&sys, sys.omega(), &cert, &opts(8)).unwrap();
        assert_eq!(a, b);
        let c = monotone_probe(&sys, sys.omega(), &cert, &ProbeOptions { seed: 43, ..opts(8) }).unwrap();
        assert_ne!(a.pairs[0].x0, c.pairs[0].x0);
    }
}
