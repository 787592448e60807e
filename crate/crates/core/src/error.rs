use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: truncation needs at least 2 Fock levels")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("regime not supported: {0}")]
    RegimeNotSupported(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("eigensolver failure: {0}")]
    Solver(String),
    #[error("unexpected degeneracy: {0} eigenvalues within tolerance of zero")]
    UnexpectedDegeneracy(usize),
    #[error("incomplete basis: mode-sum residual {0:.3e} at t=0")]
    IncompleteBasis(f64),
    #[error("step size underflow at t={0}; use spectral propagation for stiff problems")]
    Stiffness(f64),
    #[error("no convergence after {iterations} iterations (seed {seed})")]
    NonConvergence { iterations: usize, seed: String },
    #[error("divergence at t={0}: amplitude exceeded bound")]
    Divergence(f64),
    #[error("insufficient timescale separation: gap ratio {0:.3} below 2")]
    InsufficientGap(f64),
    #[error("metastable manifold construction failed: {0}")]
    Manifold(String),
    #[error("singular dual system for quasiprobabilities")]
    SingularDualSystem,
    #[error("ill-conditioned manifold: clipped POVM mass {0:.3e}")]
    IllConditionedManifold(f64),
    #[error("overlapping lobes: inconclusive element negativity {0:.3e} exceeds clip budget")]
    OverlappingLobes(f64),
    #[error("neighbouring lobe undefined for n={0}")]
    UndefinedNeighbour(u32),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidDimension(_) => 2,
            Error::UnsupportedForm(_) | Error::DivisionByZero(_) | Error::RegimeNotSupported(_) => 2,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Solver(e.to_string())
    }
}
