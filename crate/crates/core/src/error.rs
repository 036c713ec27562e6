use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("squeezing strength r must be finite and >= 0, got {0}")]
    Squeezing(f64),
    #[error("threshold gamma must be finite and >= 0, got {0}")]
    Threshold(f64),
    #[error("transmittance {name} must lie in [0, 1], got {value}")]
    Transmittance { name: &'static str, value: f64 },
    #[error("phase {name} must be finite, got {value}")]
    Phase { name: &'static str, value: f64 },
    #[error("blocker bits must be 0 or 1, got {0:?}")]
    BlockerBits([u8; 4]),
    #[error("cannot parse blocker vector {0:?}")]
    BlockerString(String),
    #[error("samples per context must be > 0")]
    NoSamples,
    #[error("repetitions must be > 0")]
    NoRepetitions,
    #[error("sweep grid for {0} is empty")]
    EmptyGrid(&'static str),
    #[error("unknown draw mode {0:?} (expected \"independent\" or \"shared\")")]
    Mode(String),
    #[error("thread count must be > 0")]
    Threads,
    #[error("bad config file: {0}")]
    File(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no exclusive coincidences in {0}; raise samples or lower gamma")]
    ZeroCoincidences(&'static str),
    #[error("no heralding detections; raise samples or lower gamma")]
    NoHeralds,
    #[error("p12 differs from the t1,t2 marginal of the joint PMF by {0:e}")]
    InconsistentInputs(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    /// Stable machine-readable category, printed by the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "invalid_config",
            Error::Stats(StatsError::ZeroCoincidences(_)) => "zero_coincidences",
            Error::Stats(StatsError::NoHeralds) => "no_heralds",
            Error::Stats(StatsError::InconsistentInputs(_)) => "inconsistent_inputs",
            Error::Invariant(_) => "invariant_violation",
            Error::Io(_) | Error::Json(_) => "io_error",
            Error::Pool(_) => "runtime_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Json(_) => 3,
            Error::Stats(_) => 4,
            Error::Invariant(_) => 5,
            Error::Pool(_) => 6,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
