//! JSON system configuration.
//!
//! ```json
//! {
//!   "spec_version": 1,
//!   "kind": "nonlinear",
//!   "n_r": 2, "n_f": 1, "eps": 0.01,
//!   "nonlinear": { "f": ["x2", "7*tanh(x1) - 5*x1 - 5*z1"], "g": ["x2 - z1"] },
//!   "omega": [[-2, 2], [-2, 2], [-2, 2]],
//!   "certificate": { "p_r": [[-5.1987, 3.626], [3.626, 6.1987]], "p_f": [[1]],
//!                    "lambda_r": 2, "lambda_f": 0.5, "sigma_r": 0.01, "sigma_f": 1 },
//!   "hull": { "block": "A", "row": 1, "col": 0, "bounds": [-5, 2] }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dominion::builtin;
use dominion::dynamics::{Block, JacobianEntry, ScalarHull, Scope};
use dominion::linalg::matrix_from_rows;
use dominion::{
    EpsilonStarOptions, LinearSpSystem, Matrix, MatrixPolytope, NonlinearSpSystem, SpBlocks, SpCertificate, SpSystem,
    StateBox, SymMatrix,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SPEC_VERSION: u32 = 1;

/// Default per-axis grid for hull sampling and the equilibrium search.
pub const DEFAULT_HULL_GRID: usize = 41;
pub const DEFAULT_EQUILIBRIUM_GRID: usize = 5;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-3;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub spec_version: u32,
    pub kind: Kind,
    pub n_r: usize,
    pub n_f: usize,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearSpec>,
    pub omega: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<HullSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_conditions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_search: Option<EpsilonSearchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

/// `a`/`a_vertices` and `d`/`d_vertices` are alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_vertices: Option<Vec<Rows>>,
    pub b: Rows,
    pub c: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_vertices: Option<Vec<Rows>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSpec {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub f: Vec<String>,
    pub g: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub p_r: Rows,
    pub p_f: Rows,
    pub lambda_r: f64,
    pub lambda_f: f64,
    pub sigma_r: f64,
    pub sigma_f: f64,
    /// Expected rank; inferred from the inertia of `p_r` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullSpec {
    pub block: String,
    pub row: usize,
    pub col: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default = "default_hull_grid")]
    pub grid: usize,
}

fn default_hull_grid() -> usize {
    DEFAULT_HULL_GRID
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSearchSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bisection_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_bound: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium_grid: Option<usize>,
}

impl SystemConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|message| CliError::Config { path: path.to_path_buf(), message })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: SystemConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if cfg.spec_version != SPEC_VERSION {
            return Err(format!("spec_version {} is not supported (expected {SPEC_VERSION})", cfg.spec_version));
        }
        Ok(cfg)
    }

    /// The built-in oscillator with its certificate and initial conditions.
    pub fn builtin_spring(eps: f64, sigma_r: f64) -> Self {
        let p_r = builtin::spring_p_r();
        let r = builtin::SPRING_BOX_RADIUS;
        SystemConfig {
            spec_version: SPEC_VERSION,
            kind: Kind::Nonlinear,
            n_r: 2,
            n_f: 1,
            eps,
            linear: None,
            nonlinear: Some(NonlinearSpec {
                params: BTreeMap::new(),
                f: builtin::SPRING_F.iter().map(|s| s.to_string()).collect(),
                g: builtin::SPRING_G.iter().map(|s| s.to_string()).collect(),
            }),
            omega: vec![[-r, r]; 3],
            certificate: Some(CertificateSpec {
                p_r: (0..2).map(|i| (0..2).map(|j| p_r.get(i, j)).collect()).collect(),
                p_f: vec![vec![1.0]],
                lambda_r: 2.0,
                lambda_f: 0.5,
                sigma_r,
                sigma_f: 1.0,
                p: Some(1),
            }),
            hull: Some(HullSpec {
                block: "A".into(),
                row: 1,
                col: 0,
                bounds: Some([builtin::SPRING_SLOPE_BOUNDS.0, builtin::SPRING_SLOPE_BOUNDS.1]),
                grid: DEFAULT_HULL_GRID,
            }),
            initial_conditions: builtin::SPRING_INITIAL_CONDITIONS.iter().map(|c| c.to_vec()).collect(),
            epsilon_search: None,
            simulation: None,
        }
    }

    pub fn epsilon_options(&self) -> EpsilonStarOptions {
        let mut o = EpsilonStarOptions::default();
        if let Some(s) = &self.epsilon_search {
            o.eps_max = s.eps_max.unwrap_or(o.eps_max);
            o.bisection_steps = s.bisection_steps.unwrap_or(o.bisection_steps);
            o.floor = s.floor.unwrap_or(o.floor);
            o.verify_points = s.verify_points.unwrap_or(o.verify_points);
            o.coupling_bound = s.coupling_bound.or(o.coupling_bound);
        }
        o
    }

    pub fn simulation(&self) -> SimulationSpec {
        self.simulation.clone().unwrap_or_default()
    }
}

/// Vertex data used by `certify`, `decouple` and `epsilon-star`.
#[derive(Debug, Clone)]
pub struct Polytopes {
    pub vertices: Vec<SpBlocks>,
    pub slow: MatrixPolytope,
    pub fast: MatrixPolytope,
    pub hull: Option<ScalarHull>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub path: Option<PathBuf>,
    pub config: SystemConfig,
    pub system: SpSystem,
    pub omega: StateBox,
    pub certificate: Option<SpCertificate>,
}

fn matrix(what: &str, rows: &Rows, shape: (usize, usize)) -> Result<Matrix, String> {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(format!("{what} must be {}x{}", shape.0, shape.1));
    }
    if shape.0 == 0 || shape.1 == 0 {
        return Ok(Matrix::zeros(shape.0, shape.1));
    }
    matrix_from_rows(&refs).map_err(|e| format!("{what}: {e}"))
}

fn polytope(what: &str, single: &Option<Rows>, many: &Option<Vec<Rows>>, n: usize) -> Result<MatrixPolytope, String> {
    let mats = match (single, many) {
        (Some(m), None) => vec![matrix(what, m, (n, n))?],
        (None, Some(vs)) if !vs.is_empty() => vs
            .iter()
            .enumerate()
            .map(|(i, v)| matrix(&format!("{what} vertex {i}"), v, (n, n)))
            .collect::<Result<_, _>>()?,
        _ => return Err(format!("give exactly one of {what} and {what}_vertices (nonempty)")),
    };
    MatrixPolytope::new(mats).map_err(|e| e.to_string())
}

fn block_of(name: &str) -> Result<Block, String> {
    match name {
        "A" | "a" => Ok(Block::A),
        "B" | "b" => Ok(Block::B),
        "C" | "c" => Ok(Block::C),
        "D" | "d" => Ok(Block::D),
        other => Err(format!("hull block must be one of A, B, C, D, got {other:?}")),
    }
}

impl Model {
    pub fn load(path: &Path) -> CliResult<Self> {
        let config = SystemConfig::from_path(path)?;
        let mut model = Self::from_config(config).map_err(|e| match e {
            CliError::Usage(message) => CliError::Config { path: path.to_path_buf(), message },
            other => other,
        })?;
        model.path = Some(path.to_path_buf());
        Ok(model)
    }

    /// Config-level problems come back as [`CliError::Usage`]; [`Model::load`]
    /// attaches the path.
    pub fn from_config(config: SystemConfig) -> CliResult<Self> {
        Self::build(config).map_err(CliError::Usage)
    }

    fn build(config: SystemConfig) -> Result<Self, String> {
        let (n_r, n_f) = (config.n_r, config.n_f);
        if n_r == 0 || n_f == 0 {
            return Err("n_r and n_f must both be positive".into());
        }
        if config.omega.len() != n_r + n_f {
            return Err(format!("omega has {} intervals, expected {}", config.omega.len(), n_r + n_f));
        }
        let omega = StateBox::new(config.omega.iter().map(|b| (b[0], b[1])).collect()).map_err(|e| e.to_string())?;

        let system = match config.kind {
            Kind::Linear => {
                if config.nonlinear.is_some() {
                    return Err("a linear config must not have a \"nonlinear\" section".into());
                }
                let spec = config.linear.as_ref().ok_or("missing \"linear\" section")?;
                let a = polytope("a", &spec.a, &spec.a_vertices, n_r)?;
                let d = polytope("d", &spec.d, &spec.d_vertices, n_f)?;
                let b = matrix("b", &spec.b, (n_r, n_f))?;
                let c = matrix("c", &spec.c, (n_f, n_r))?;
                SpSystem::Linear(LinearSpSystem::new(a, b, c, d, config.eps).map_err(|e| e.to_string())?)
            }
            Kind::Nonlinear => {
                if config.linear.is_some() {
                    return Err("a nonlinear config must not have a \"linear\" section".into());
                }
                let spec = config.nonlinear.as_ref().ok_or("missing \"nonlinear\" section")?;
                if spec.f.len() != n_r || spec.g.len() != n_f {
                    return Err(format!(
                        "expected {n_r} f and {n_f} g expressions, got {} and {}",
                        spec.f.len(),
                        spec.g.len()
                    ));
                }
                let scope = spec.params.iter().fold(Scope::state(n_r, n_f), |s, (k, v)| s.with_param(k, *v));
                let f: Vec<&str> = spec.f.iter().map(String::as_str).collect();
                let g: Vec<&str> = spec.g.iter().map(String::as_str).collect();
                SpSystem::Nonlinear(
                    NonlinearSpSystem::new(scope, n_r, &f, &g, config.eps, omega.clone()).map_err(|e| e.to_string())?,
                )
            }
        };

        let certificate = match &config.certificate {
            None => None,
            Some(c) => {
                let p_r = SymMatrix::new(matrix("p_r", &c.p_r, (n_r, n_r))?).map_err(|e| e.to_string())?;
                let p_f = SymMatrix::new(matrix("p_f", &c.p_f, (n_f, n_f))?).map_err(|e| e.to_string())?;
                let cert = match c.p {
                    Some(p) => SpCertificate::with_rank(p_r, p_f, c.lambda_r, c.lambda_f, c.sigma_r, c.sigma_f, p),
                    None => SpCertificate::new(p_r, p_f, c.lambda_r, c.lambda_f, c.sigma_r, c.sigma_f),
                };
                Some(cert.map_err(|e| e.to_string())?)
            }
        };

        for (i, x) in config.initial_conditions.iter().enumerate() {
            if x.len() != n_r + n_f {
                return Err(format!("initial condition {i} has length {}, expected {}", x.len(), n_r + n_f));
            }
        }
        if let Some(h) = &config.hull {
            block_of(&h.block)?;
        }
        Ok(Model { path: None, config, system, omega, certificate })
    }

    pub fn certificate(&self) -> CliResult<&SpCertificate> {
        self.certificate.as_ref().ok_or_else(|| self.config_error("this command needs a \"certificate\" section"))
    }

    pub fn config_error(&self, message: impl Into<String>) -> CliError {
        match &self.path {
            Some(path) => CliError::Config { path: path.clone(), message: message.into() },
            None => CliError::Usage(message.into()),
        }
    }

    /// Linear: every `(Aᵢ, Dⱼ)` pair. Nonlinear: the scalar hull of the
    /// configured Jacobian entry, which is required.
    pub fn polytopes(&self) -> CliResult<Polytopes> {
        match &self.system {
            SpSystem::Linear(sys) => {
                let vertices = sys.vertex_systems();
                let a0 = vertices
                    .iter()
                    .map(|v| dominion::reduced_model(v).map(|r| r.a0))
                    .collect::<dominion::Result<Vec<_>>>()?;
                Ok(Polytopes { slow: MatrixPolytope::new(a0)?, fast: sys.d.clone(), vertices, hull: None })
            }
            SpSystem::Nonlinear(sys) => {
                let spec = self
                    .config
                    .hull
                    .as_ref()
                    .ok_or_else(|| self.config_error("a nonlinear config needs a \"hull\" section here"))?;
                let block = block_of(&spec.block).map_err(|m| self.config_error(m))?;
                let hull = sys.scalar_hull(
                    JacobianEntry::new(block, spec.row, spec.col),
                    spec.bounds.map(|b| (b[0], b[1])),
                    spec.grid,
                )?;
                Ok(Polytopes {
                    slow: hull.slow_polytope()?,
                    fast: hull.fast_polytope()?,
                    vertices: hull.vertices.clone(),
                    hull: Some(hull),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_round_trips_through_json() {
        let cfg = SystemConfig::builtin_spring(0.01, 0.01);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(SystemConfig::from_json(&text).unwrap(), cfg);
        let model = Model::from_config(cfg).unwrap();
        assert_eq!(model.certificate.unwrap().p, 1);
    }

    #[test]
    fn shipped_spring_config_matches_builtin() {
        let text = include_str!("../configs/spring.json");
        assert_eq!(SystemConfig::from_json(text).unwrap(), SystemConfig::builtin_spring(0.01, 0.01));
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let base = serde_json::to_value(SystemConfig::builtin_spring(0.01, 0.01)).unwrap();
        let mut extra = base.clone();
        extra["colour"] = "blue".into();
        assert!(SystemConfig::from_json(&extra.to_string()).unwrap_err().contains("colour"));
        let mut v2 = base;
        v2["spec_version"] = 2.into();
        assert!(SystemConfig::from_json(&v2.to_string()).unwrap_err().contains("spec_version"));
    }

    #[test]
    fn linear_polytopes_pair_every_vertex() {
        let text = r#"{
            "spec_version": 1, "kind": "linear", "n_r": 1, "n_f": 1, "eps": 0.1,
            "linear": { "a_vertices": [[[-1]], [[-2]]], "b": [[1]], "c": [[1]], "d_vertices": [[[-1]], [[-3]]] },
            "omega": [[-1, 1], [-1, 1]]
        }"#;
        let model = Model::from_config(SystemConfig::from_json(text).unwrap()).unwrap();
        let p = model.polytopes().unwrap();
        assert_eq!(p.vertices.len(), 4);
        // A₀ = A − B D⁻¹ C
        let a0: Vec<f64> = p.slow.vertices().iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(a0, vec![0.0, -1.0 + 1.0 / 3.0, -1.0, -2.0 + 1.0 / 3.0]);
        assert_eq!(p.fast.len(), 2);
    }

    #[test]
    fn shape_errors_are_reported() {
        let text = r#"{
            "spec_version": 1, "kind": "linear", "n_r": 2, "n_f": 1, "eps": 0.1,
            "linear": { "a": [[-1, 0]], "b": [[1], [0]], "c": [[1, 0]], "d": [[-1]] },
            "omega": [[-1, 1], [-1, 1], [-1, 1]]
        }"#;
        let err = Model::from_config(SystemConfig::from_json(text).unwrap()).unwrap_err();
        assert!(err.to_string().contains("a must be 2x2"), "{err}");
    }
}
