use thiserror::Error;

/// Everything that can go wrong outside of plain argument-parsing bugs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient vector has length {got}, grid with radius {radius} expects {expected}")]
    DimensionMismatch {
        radius: i64,
        expected: usize,
        got: usize,
    },

    #[error("mode {mode} lies outside the grid |n| <= {radius}")]
    ModeOutsideGrid { mode: i64, radius: i64 },

    #[error("grids disagree: radius {left} vs {right}")]
    GridMismatch { left: i64, right: i64 },

    #[error("state carries representation `{got}`, operation requires `{expected}`")]
    RepresentationMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("state is tagged with time {tagged} but the operation was asked for time {requested}")]
    TimeMismatch { tagged: f64, requested: f64 },

    #[error("non-finite coefficient at mode {mode}")]
    NonFinite { mode: i64 },

    #[error("tuple ({n}, {n1}, {n2}, {n3}) is off the hyperplane n = n1 - n2 + n3")]
    OffHyperplane { n: i64, n1: i64, n2: i64, n3: i64 },

    #[error("tuple ({n}, {n1}, {n2}, {n3}) is outside the non-resonant set for this beta")]
    NotInGamma { n: i64, n1: i64, n2: i64, n3: i64 },

    #[error(
        "the {context} requires a non-resonant dispersion coefficient; \
         2*beta/3 = {value} is within {margin:e} of an integer"
    )]
    ResonantBeta {
        context: &'static str,
        value: f64,
        margin: f64,
    },

    #[error("time step reaching t = {t} produced a non-finite coefficient at mode {mode}")]
    StepFailed { t: f64, mode: i64 },

    #[error("quadrature needs an odd number of at least 9 uniformly spaced snapshots, got {got}")]
    QuadratureTooCoarse { got: usize },

    #[error("snapshot times are not uniformly spaced: gap {left} vs {right}")]
    NonUniformSnapshots { left: f64, right: f64 },

    #[error(
        "the w-side decomposition enumerates nested frequency sums and is capped at \
         radius 16; got radius {radius} (use the v-side decomposition instead)"
    )]
    WDecompositionTooLarge { radius: i64 },

    #[error(
        "finite-difference step {step:e} fails the half-step consistency check \
         (relative disagreement {disagreement:.3e}); the probe is too large or too small"
    )]
    FdStepRejected { step: f64, disagreement: f64 },

    #[error("snapshot file, line {line}: {message}")]
    SnapshotFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
