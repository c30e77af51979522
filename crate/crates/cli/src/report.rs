//! Machine-readable reports. Every struct serializes its fields in
//! declaration order, so identical inputs give byte-identical JSON once the
//! timestamp is switched off.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use dominion::certify::CertResult;
use dominion::decouple::{EpsCheck, EpsilonStar};
use dominion::dynamics::{Block, ScalarHull};
use dominion::integrate::ConvergenceCheck;
use dominion::probe::{PairOutcome, ProbeMode, ProbeReport};
use dominion::{ChangDecoupling, Matrix, MatrixPolytope, SpBlocks, SpCertResult, SpCertificate};
use serde::Serialize;

use crate::config::Rows;
use crate::error::{CliError, CliResult};

pub fn rows(m: &Matrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerance {
    pub name: &'static str,
    pub value: f64,
}

pub fn tol(name: &'static str, value: f64) -> Tolerance {
    Tolerance { name, value }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub tolerances: Vec<Tolerance>,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, config: Option<&Path>, timestamp: bool, result: T) -> Self {
        let generated_unix =
            timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Report {
            tool: "dominion",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: config.map(|p| p.display().to_string()),
            generated_unix,
            passed: true,
            checks: Vec::new(),
            warnings: Vec::new(),
            tolerances: Vec::new(),
            result,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HullSection {
    pub block: &'static str,
    pub row: usize,
    pub col: usize,
    pub lo: f64,
    pub hi: f64,
    /// Bounds were found by grid sampling and are not a proof.
    pub sampled: bool,
}

impl From<&ScalarHull> for HullSection {
    fn from(h: &ScalarHull) -> Self {
        let block = match h.entry.block {
            Block::A => "A",
            Block::B => "B",
            Block::C => "C",
            Block::D => "D",
        };
        HullSection { block, row: h.entry.row, col: h.entry.col, lo: h.lo, hi: h.hi, sampled: h.sampled }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LmiSection {
    pub lambda: f64,
    pub sigma: f64,
    pub vertices: Vec<Rows>,
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub worst_vertex: usize,
    pub feasible: bool,
}

impl LmiSection {
    fn new(poly: &MatrixPolytope, r: &CertResult, lambda: f64, sigma: f64) -> Self {
        LmiSection {
            lambda,
            sigma,
            vertices: poly.vertices().iter().map(rows).collect(),
            margins: r.margins.clone(),
            worst_margin: r.worst_margin,
            worst_vertex: r.worst_vertex,
            feasible: r.feasible,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifySection {
    pub rank: usize,
    pub inertia_p_r: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hull: Option<HullSection>,
    pub slow: LmiSection,
    pub fast: LmiSection,
    pub feasible: bool,
}

impl CertifySection {
    pub fn new(
        cert: &SpCertificate,
        hull: Option<&ScalarHull>,
        slow: &MatrixPolytope,
        fast: &MatrixPolytope,
        r: &SpCertResult,
    ) -> Self {
        let i = cert.p_r.inertia();
        CertifySection {
            rank: cert.p,
            inertia_p_r: [i.neg, i.zero, i.pos],
            hull: hull.map(HullSection::from),
            slow: LmiSection::new(slow, &r.slow, cert.lambda_r, cert.sigma_r),
            fast: LmiSection::new(fast, &r.fast, cert.lambda_f, cert.sigma_f),
            feasible: r.feasible(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlocksSection {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
}

impl From<&SpBlocks> for BlocksSection {
    fn from(b: &SpBlocks) -> Self {
        BlocksSection { a: rows(&b.a), b: rows(&b.b), c: rows(&b.c), d: rows(&b.d) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecoupleVertex {
    pub index: usize,
    pub system: BlocksSection,
    pub l: Rows,
    pub h: Rows,
    pub t: Rows,
    pub t_inv: Rows,
    pub slow_block: Rows,
    pub fast_block: Rows,
    pub residual_l: f64,
    pub residual_h: f64,
    pub det_t_inv: f64,
    pub inverse_residual: f64,
    pub block_diag_residual: f64,
}

impl DecoupleVertex {
    pub fn new(index: usize, blocks: &SpBlocks, d: &ChangDecoupling) -> Self {
        DecoupleVertex {
            index,
            system: blocks.into(),
            l: rows(&d.l),
            h: rows(&d.h),
            t: rows(&d.t),
            t_inv: rows(&d.t_inv),
            slow_block: rows(&d.slow_block),
            fast_block: rows(&d.fast_block),
            residual_l: d.residual_l,
            residual_h: d.residual_h,
            det_t_inv: d.det_t_inv(),
            inverse_residual: d.inverse_residual(),
            block_diag_residual: d.block_diag_residual(blocks),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecoupleSection {
    pub eps: f64,
    pub vertices: Vec<DecoupleVertex>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsCheckSection {
    pub eps: f64,
    pub feasible: bool,
    pub slow_margin: Option<f64>,
    pub fast_margin: Option<f64>,
}

impl From<&EpsCheck> for EpsCheckSection {
    fn from(c: &EpsCheck) -> Self {
        EpsCheckSection { eps: c.eps, feasible: c.feasible, slow_margin: c.slow_margin, fast_margin: c.fast_margin }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSection {
    pub eps_hat: f64,
    pub eps_max: f64,
    pub floor: f64,
    pub bisection_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_bound: Option<f64>,
    pub vertex_systems: usize,
    pub config_eps: f64,
    pub config_eps_certified: bool,
    pub verification: Vec<EpsCheckSection>,
    pub violations: Vec<f64>,
}

impl EpsilonSection {
    pub fn new(
        star: &EpsilonStar,
        floor: f64,
        bisection_steps: usize,
        coupling_bound: Option<f64>,
        vertex_systems: usize,
        config_eps: f64,
    ) -> Self {
        EpsilonSection {
            eps_hat: star.eps_hat,
            eps_max: star.eps_max,
            floor,
            bisection_steps,
            coupling_bound,
            vertex_systems,
            config_eps,
            config_eps_certified: config_eps <= star.eps_hat,
            verification: star.verification.iter().map(EpsCheckSection::from).collect(),
            violations: star.violations.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySection {
    pub index: usize,
    pub initial: Vec<f64>,
    pub csv: String,
    pub steps: usize,
    pub final_state: Vec<f64>,
    pub converged: bool,
    pub matched: Option<usize>,
    pub nearest: Option<usize>,
    pub final_distance: f64,
    pub tail_variation: f64,
}

impl TrajectorySection {
    pub fn new(index: usize, initial: &[f64], csv: String, steps: usize, fin: &[f64], c: &ConvergenceCheck) -> Self {
        TrajectorySection {
            index,
            initial: initial.to_vec(),
            csv,
            steps,
            final_state: fin.to_vec(),
            converged: c.matched.is_some(),
            matched: c.matched,
            nearest: c.nearest,
            final_distance: c.final_distance,
            tail_variation: c.tail_variation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSection {
    pub eps: f64,
    pub t_final: f64,
    pub step: f64,
    pub method: &'static str,
    pub equilibrium_grid: usize,
    pub equilibria: Vec<Vec<f64>>,
    pub trajectories: Vec<TrajectorySection>,
    pub converged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSection {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub interior: usize,
    pub boundary: usize,
    pub outside: usize,
    pub worst_margin: f64,
}

impl From<&PairOutcome> for PairSection {
    fn from(p: &PairOutcome) -> Self {
        PairSection {
            x0: p.x0.clone(),
            y0: p.y0.clone(),
            interior: p.interior,
            boundary: p.boundary,
            outside: p.outside,
            worst_margin: p.worst_margin,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSection {
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub n_pairs: usize,
    pub t_final: f64,
    pub seed: u64,
    pub samples_per_pair: usize,
    pub draws: usize,
    pub total: usize,
    pub interior: usize,
    pub boundary: usize,
    pub outside: usize,
    pub interior_fraction: f64,
    pub boundary_share: f64,
    pub worst_margin: f64,
    pub passed: bool,
    pub pairs: Vec<PairSection>,
}

impl From<&ProbeReport> for ProbeSection {
    fn from(r: &ProbeReport) -> Self {
        let (mode, lambda) = match r.mode {
            ProbeMode::Cone => ("cone", None),
            ProbeMode::WeightedEnergy { lambda } => ("weighted_energy", Some(lambda)),
        };
        let total = r.total();
        ProbeSection {
            mode,
            lambda,
            n_pairs: r.pairs.len(),
            t_final: r.options.t_final,
            seed: r.options.seed,
            samples_per_pair: r.samples_per_pair,
            draws: r.draws,
            total,
            interior: r.interior,
            boundary: r.boundary,
            outside: r.outside,
            interior_fraction: if total == 0 { 0.0 } else { r.interior as f64 / total as f64 },
            boundary_share: r.boundary_share(),
            worst_margin: r.worst_margin,
            passed: r.passed(),
            pairs: r.pairs.iter().map(PairSection::from).collect(),
        }
    }
}

/// A stage of a composite run: its result, or the error that stopped it.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Stage<T> {
    Done(T),
    Failed { error: String },
}

impl<T> Stage<T> {
    pub fn from_result(r: CliResult<T>) -> Self {
        match r {
            Ok(v) => Stage::Done(v),
            Err(e) => Stage::Failed { error: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSection {
    pub certify: Stage<CertifySection>,
    pub epsilon_star: Stage<EpsilonSection>,
    pub simulate: Stage<SimulateSection>,
    pub monotone_probe: Stage<ProbeSection>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use dominion::linalg::matrix_from_rows;

    #[derive(Serialize)]
    struct Empty {}

    #[test]
    fn rows_preserve_layout() {
        let m = matrix_from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(rows(&m), vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }

    #[test]
    fn failed_check_fails_report() {
        let mut r = Report::new("certify", None, false, Empty {});
        r.check(Check::new("a", true, ""));
        assert_eq!(r.exit_code(), 0);
        r.check(Check::new("b", false, ""));
        r.check(Check::new("c", true, ""));
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn timestamp_is_optional_and_keys_are_ordered() {
        let r = Report::new("certify", None, false, Empty {});
        let text = serde_json::to_string(&r).unwrap();
        assert!(!text.contains("generated_unix"));
        let keys =
            ["\"tool\"", "\"version\"", "\"command\"", "\"passed\"", "\"checks\"", "\"tolerances\"", "\"result\""];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        let stamped = serde_json::to_string(&Report::new("certify", None, true, Empty {})).unwrap();
        assert!(stamped.contains("generated_unix"));
    }
}
