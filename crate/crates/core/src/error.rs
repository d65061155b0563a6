use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VixError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Feller condition violated: beta = {beta} < kappa^2/2 = {half_kappa_sq}")]
    FellerViolation { beta: f64, half_kappa_sq: f64 },

    #[error("model assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("root finding failed: {0}")]
    RootNotFound(String),

    #[error("boundary solver failed at t = {t}: {reason} (residual {residual:e})")]
    SolverFailure { t: f64, residual: f64, reason: String },

    #[error("price {price} outside the no-arbitrage band ({lower}, {upper})")]
    InversionDomain { price: f64, lower: f64, upper: f64 },

    #[error("unknown registry entry '{0}'")]
    UnknownEntry(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, VixError>;
