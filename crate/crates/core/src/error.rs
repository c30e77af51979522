use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cone matrix has {zero} eigenvalue(s) within tolerance of zero")]
    SingularP { zero: usize },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("epsilon must be positive, got {0}")]
    NonpositiveEps(f64),

    #[error("fast matrix D is numerically singular (reciprocal condition {rcond:.3e})")]
    SingularD { rcond: f64 },

    #[error("Chang iteration did not converge after {iterations} iterations (last update {last_update:.3e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("block conditions infeasible even at epsilon = {floor:e}")]
    InfeasibleAtFloor { floor: f64 },

    #[error("parse error at position {position}: expected {expected}")]
    Parse { position: usize, expected: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("more than one Jacobian entry depends on the state: {0}")]
    NotScalarParameterized(String),

    #[error("Newton solve failed: {0}")]
    NewtonFailure(String),

    #[error("dg/dz is singular at the requested point")]
    SingularDz,

    #[error("integration produced a non-finite or exploding state at t = {t}")]
    NonFinite { t: f64 },

    #[error("rejection sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what}: got {}x{}, expected {}x{}",
            got.0, got.1, want.0, want.1
        )));
    }
    Ok(())
}
