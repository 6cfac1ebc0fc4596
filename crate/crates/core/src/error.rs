use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("argument outside the moment generating function domain: {0}")]
    DomainError(String),

    #[error("slope {value} is outside the attainable range ({low}, {high})")]
    RangeError { value: f64, low: f64, high: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("generation would hold {requested} particles, above the hard bound {bound}")]
    CapacityExceeded { requested: usize, bound: usize },

    #[error("population went extinct in all {attempts} attempts")]
    RestartBudgetExhausted { attempts: usize },

    #[error("generation {0} holds no particles")]
    EmptyGeneration(u32),

    #[error("node {0} does not exist in the arena")]
    InvalidNode(usize),

    #[error("only {found} hits at x = {x}, need at least {needed}")]
    InsufficientHits { x: f64, found: usize, needed: usize },

    #[error("only {found} events, need at least {needed}: {what}")]
    InsufficientEvents {
        what: String,
        found: usize,
        needed: usize,
    },

    #[error("no accepted samples at x = {0}")]
    NoAcceptedSamples(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
