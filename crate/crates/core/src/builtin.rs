//! Built-in reference system: a mechanical oscillator with a nonlinear
//! spring `v(x) = 7 tanh(x) − 5x` and a first-order actuator lag,
//!
//! ```text
//!   ẋ₁ = x₂
//!   ẋ₂ = v(x₁) − 5 z
//! ε ż  = x₂ − z
//! ```
//!
//! together with a rank-one dominance certificate for it.

use crate::certify::SpCertificate;
use crate::dynamics::{Block, JacobianEntry, NonlinearSpSystem, Scope, StateBox};
use crate::error::Result;
use crate::linalg::SymMatrix;

pub const SPRING_EPS: f64 = 0.01;
pub const SPRING_T_FINAL: f64 = 9.0;

/// `v′` ranges over this interval on the whole real line.
pub const SPRING_SLOPE_BOUNDS: (f64, f64) = (-5.0, 2.0);

pub const SPRING_F: [&str; 2] = ["x2", "7*tanh(x1) - 5*x1 - 5*z1"];
pub const SPRING_G: [&str; 1] = ["x2 - z1"];

pub const SPRING_INITIAL_CONDITIONS: [[f64; 3]; 5] =
    [[1.0, 1.0, 1.0], [-1.0, 2.0, 1.0], [-0.5, -2.0, 1.0], [-2.0, -0.5, 1.0], [0.25, 0.5, -1.0]];

/// Half-width of the cubic state box used for sampling and equilibrium search.
pub const SPRING_BOX_RADIUS: f64 = 2.0;

pub fn spring_system(eps: f64) -> Result<NonlinearSpSystem> {
    NonlinearSpSystem::new(Scope::state(2, 1), 2, &SPRING_F, &SPRING_G, eps, StateBox::symmetric(3, SPRING_BOX_RADIUS))
}

/// `∂ẋ₂/∂x₁ = v′(x₁)`, the only state-dependent Jacobian entry.
pub fn spring_hull_entry() -> JacobianEntry {
    JacobianEntry::new(Block::A, 1, 0)
}

pub fn spring_p_r() -> SymMatrix {
    SymMatrix::from_rows(&[&[-5.1987, 3.6260], &[3.6260, 6.1987]]).expect("2x2")
}

pub fn spring_certificate() -> SpCertificate {
    SpCertificate::new(spring_p_r(), SymMatrix::identity(1), 2.0, 0.5, 0.01, 1.0).expect("valid certificate")
}
