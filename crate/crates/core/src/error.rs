use thiserror::Error;

/// Errors raised while configuring or running a sampler.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode count must be positive, got {0}")]
    InvalidModeCount(usize),

    #[error("grid spacing {dx} is not of the form 1/(K+1); nearest valid spacing is {nearest} (K = {modes})")]
    InvalidSpacing { dx: f64, nearest: f64, modes: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot project onto {requested} modes, input only has {available}")]
    ProjectionTooLarge { requested: usize, available: usize },

    #[error("{scheme}: time step {dt} outside the admissible window {window}")]
    InvalidTimestep {
        scheme: String,
        dt: f64,
        window: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("final time {final_time} is not an integer multiple of dt = {dt}; nearest valid dt is {nearest}")]
    NonIntegralSteps {
        dt: f64,
        final_time: f64,
        nearest: f64,
    },

    #[error("all {0} trajectories diverged")]
    AllDiverged(usize),

    #[error("an analytic reference value requires the zero nonlinearity, got `{0}`")]
    AnalyticReferenceUnavailable(String),

    #[error("nonlinearity `{name}` is not a gradient: u'(x) + f(x) = {residual:e} at x = {at}")]
    NotGradient { name: String, at: f64, residual: f64 },

    #[error("nonlinearity `{0}` does not provide a second derivative")]
    MissingSecondDerivative(String),

    #[error("quadrature did not converge: residual moved by {change:e} between {coarse} and {fine} nodes")]
    QuadratureNotConverged {
        coarse: usize,
        fine: usize,
        change: f64,
    },

    #[error("paired reference mismatch: {0}")]
    ReferenceMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
