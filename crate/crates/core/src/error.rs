use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unstable system: largest drift eigenvalue real part is {max_real_part:e}")]
    UnstableSystem { max_real_part: f64 },

    #[error("imaginary residual {ratio:e} (relative) at omega = {omega:e} rad/s")]
    ComplexResidual { omega: f64, ratio: f64 },

    #[error("frequency grid is not symmetric about zero")]
    AsymmetricGrid,

    #[error("frequency grid too narrow: need |omega| up to {needed:e} rad/s, grid reaches {available:e} rad/s")]
    GridTooNarrow { needed: f64, available: f64 },

    #[error("window [{lo:e}, {hi:e}] rad/s lies outside the grid")]
    WindowOutsideGrid { lo: f64, hi: f64 },

    #[error("time step too large: dt * omega_m = {dt_omega:.4} exceeds 0.1")]
    StepTooLarge { dt_omega: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("trajectory was recorded without input noises")]
    MissingInputs,

    #[error("local oscillator aliased: omega_lo * dt = {omega_dt:.4} >= pi")]
    AliasedLo { omega_dt: f64 },

    #[error("filter is not periodic; use numeric coefficients")]
    NonPeriodicFilter,

    #[error("too few samples: {got} available, {needed} needed")]
    TooFewSamples { got: usize, needed: usize },

    #[error("max lag {max_lag} too short: need at least {needed} samples")]
    LagTooShort { max_lag: usize, needed: usize },

    #[error("max lag {max_lag} too long: at most {limit} allowed (N_T / 4)")]
    LagTooLong { max_lag: usize, limit: usize },

    #[error("phase score is flat: variation {variation:e} below 3x noise {noise:e}")]
    FlatScore { variation: f64, noise: f64 },

    #[error("heterogeneous traces: {0}")]
    HeterogeneousTraces(String),

    #[error("line {line}: parse error: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: frequency key `{key}` needs the `_hz` suffix")]
    UnitSuffixMissing { line: usize, key: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config: {0}")]
    Config(String),

    #[error("realization {realization} (seed {seed}) failed: {source}")]
    Realization {
        realization: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::UnknownKey { .. }
            | Error::UnitSuffixMissing { .. }
            | Error::UnknownPreset(_)
            | Error::Config(_)
            | Error::InvalidParams(_)
            | Error::InvalidSimConfig(_)
            | Error::Io(_) => 2,
            Error::Realization { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
