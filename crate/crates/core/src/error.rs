use thiserror::Error;

use crate::maflow::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what} at point {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("metric lost positivity: min eigenvalue {min_eigenvalue:.3e} at point {index}")]
    PositivityLost { min_eigenvalue: f64, index: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    #[error("time step underflow at t = {t}: dt = {dt:.3e} ({reason})")]
    StepFailure {
        t: f64,
        dt: f64,
        reason: String,
        partial: Option<Box<Trajectory>>,
    },

    #[error("trajectory is already in the unnormalized frame")]
    RescaleOnUnnormalized,

    #[error("volume sandwich violated at t = {t}, point {index}: ratio {ratio:.6e} outside [{lower:.6e}, {upper:.6e}]")]
    SandwichViolation {
        t: f64,
        index: usize,
        ratio: f64,
        lower: f64,
        upper: f64,
    },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("Krylov solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    KrylovStall { iterations: usize, residual: f64 },

    #[error("a priori bound violated: {what} (margin {margin:.3e})")]
    BoundViolation { what: String, margin: f64 },

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("no elliptic solution available for s = {0}")]
    MissingSolution(f64),

    #[error("differential inequality violated at t = {t}: slack {slack:.3e}")]
    InequalityViolation { t: f64, slack: f64 },

    #[error("optimality check failed: (1+s)|R| fell to {value:.3e} at s = {s}")]
    OptimalityFailure { s: f64, value: f64 },

    #[error("tolerance exceeded: error {error:.3e} > {tolerance:.3e}")]
    ToleranceExceeded { error: f64, tolerance: f64 },

    #[error("series has a non-positive value {value} at s = {s}")]
    NonpositiveValues { s: f64, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed series file: {0}")]
    Series(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
