use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("emitter frequency {omega} lies outside the mode window ({lo}, {hi})")]
    WindowExcludesEmitter { omega: f64, lo: f64, hi: f64 },

    #[error("waveguide grid does not match emitter configuration: {0}")]
    GridConfigMismatch(String),

    #[error("empty or inverted range: {0}")]
    EmptyRange(String),

    #[error("spectrum is flat for a single coupling point, no working point exists")]
    DegenerateSpectrum,

    #[error("fit needs at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("time step {dt} does not divide the delay {tau}")]
    StepIncompatibleWithDelay { dt: f64, tau: f64 },

    #[error("initial state is not normalized (norm {norm})")]
    NonNormalizedInitialState { norm: f64 },

    #[error("population underflow at t = {t}")]
    PopulationUnderflow { t: f64 },

    #[error("population {pe} is at the boundary of [0, 1], variance undefined")]
    BoundaryPopulation { pe: f64 },

    #[error("Fisher information must be positive, got {0}")]
    NonpositiveCfi(f64),

    #[error("finite-difference slope unstable: step and half-step estimates differ by {relative:.3e} (relative)")]
    FiniteDifferenceUnstable { relative: f64 },

    #[error("Hermitian eigendecomposition did not converge (dimension {0})")]
    EigenFailure(usize),

    #[error("config file: {0}")]
    ConfigFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::WindowExcludesEmitter { .. }
            | Error::GridConfigMismatch(_)
            | Error::EmptyRange(_)
            | Error::DegenerateSpectrum
            | Error::InsufficientPoints { .. }
            | Error::NonNormalizedInitialState { .. }
            | Error::ConfigFile(_) => 2,
            Error::StepIncompatibleWithDelay { .. }
            | Error::PopulationUnderflow { .. }
            | Error::BoundaryPopulation { .. }
            | Error::NonpositiveCfi(_)
            | Error::FiniteDifferenceUnstable { .. }
            | Error::EigenFailure(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
