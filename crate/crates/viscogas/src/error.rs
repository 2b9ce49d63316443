//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by the gas model, solver, monitors and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("adiabatic exponent must exceed 1, got gamma = {0}")]
    InvalidGamma(f64),

    #[error("density must be positive here, got rho = {0}")]
    NonpositiveDensity(f64),

    #[error("vacuum state rho = 0 is singular for this operation (gamma = {gamma})")]
    VacuumSingular { gamma: f64 },

    #[error("perturbation scales must be positive, got epsilon = {epsilon}, delta = {delta}")]
    InvalidApproxParams { epsilon: f64, delta: f64 },

    #[error("bounds are inconsistent: {0}")]
    InvalidBounds(String),

    #[error("grid is invalid: {0}")]
    InvalidGrid(String),

    #[error("solver configuration is invalid: {0}")]
    InvalidSolverConfig(String),

    #[error("initial data invalid: {0}")]
    InvalidInitialData(String),

    #[error("grid cannot resolve the mollifier: dx = {dx} exceeds 2*epsilon = {limit}")]
    UnresolvedMollifier { dx: f64, limit: f64 },

    #[error("quadrature rule invalid: {0}")]
    InvalidQuadrature(String),

    #[error("positivity violated at cell {index} (t = {t}): rho = {rho}")]
    PositivityViolation { index: usize, t: f64, rho: f64 },

    #[error("non-finite value at cell {index} (t = {t}) in component {component}")]
    NonFinite {
        index: usize,
        t: f64,
        component: &'static str,
    },

    #[error("monitor precondition violated: {0}")]
    MonitorPrecondition(String),

    #[error("test function unusable here: {0}")]
    InvalidTestFunction(String),

    #[error("refinement ladder invalid: {0}")]
    InvalidLadder(String),

    #[error("trajectory unusable here: {0}")]
    InvalidTrajectory(String),

    #[error("no self-similar solution: {0}")]
    RiemannFailure(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Config-error constructor used throughout the parser.
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}
