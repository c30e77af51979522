//! Certification of p-dominance for singularly perturbed systems
//!
//! ```text
//!   ẋ = f(x, z)
//! ε ż = g(x, z)
//! ```
//!
//! A system is p-dominant when differential trajectories are eventually
//! confined to a quadratic cone `{v : vᵀPv ≤ 0}` with `P` having `p`
//! negative eigenvalues; for `p = 1` every bounded trajectory converges to
//! an equilibrium. The crate checks the slow/fast LMI conditions on
//! Jacobian polytopes, decouples the time scales with the Chang
//! transformation, searches for the largest admissible `ε`, and validates
//! conclusions by simulation.
//!
//! Modules, bottom up: [`linalg`] and [`cone`] (symmetric eigenproblems,
//! inertia, cone membership), [`certify`] (LMI residuals on polytopes),
//! [`decouple`] (Chang equations and the `ε*` search), [`dynamics`]
//! (expression language and system types), [`integrate`] (RK4 simulation,
//! equilibria) and [`probe`] (sampled strong-monotonicity check).
//! [`builtin`] holds a ready-made oscillator example.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod certify;
pub mod cone;
pub mod decouple;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod probe;

pub use certify::{
    block_conditions, certify_polytope, certify_sp, fast_block_bounded, lmi_residual, CertResult, MatrixPolytope,
    SpCertResult, SpCertificate,
};
pub use cone::{ConeLocation, MatrixCone};
pub use decouple::{
    build_decoupling, epsilon_star, epsilon_star_vertices, reduced_model, solve_chang_lti, ChangDecoupling,
    ChangOptions, ChangSolution, EpsilonStar, EpsilonStarOptions, ReducedModel, SpBlocks,
};
pub use dynamics::{LinearSpSystem, NonlinearSpSystem, SpDynamics, SpSystem, StateBox};
pub use error::{Error, Result};
pub use integrate::{detect_convergence, find_equilibria, integrate, integrate_variational, Trajectory};
pub use linalg::{inertia, nsd_margin, Inertia, Matrix, SymMatrix, Vector};
pub use probe::{monotone_probe, ProbeOptions, ProbeReport, SplitMix64};
