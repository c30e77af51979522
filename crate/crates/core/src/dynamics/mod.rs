//! System definitions: a small expression language with symbolic
//! differentiation, nonlinear and linear singularly perturbed systems, and
//! Jacobian polytopes over a state box.

mod expr;
mod parse;
mod system;

pub use expr::{diff_expr, Display, Expr, Func, Scope};
pub use parse::{parse_expr, parse_simplified, simplify};
pub use system::{
    Block, JacobianEntry, JacobianRanges, LinearSpSystem, ManifoldPoint, NonlinearSpSystem, ScalarHull, SpDynamics,
    SpSystem, StateBox,
};
