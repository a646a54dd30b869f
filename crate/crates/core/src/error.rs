use thiserror::Error;

/// Failure modes shared across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("chart point outside configured box: |q_{index}| = {value} > {half_width}")]
    OutsideChart {
        index: usize,
        value: f64,
        half_width: f64,
    },

    #[error("non-finite state while integrating at t = {t}")]
    NonFinite { t: f64 },

    #[error("conformal exponent overflow: g = {exponent} at t = {t}")]
    ExponentOverflow { exponent: f64, t: f64 },

    #[error("Newton iteration failed to converge: |r| = {residual} after {iters} iterations")]
    NewtonStalled { iters: usize, residual: f64 },

    #[error("chord duration collapsed to t1 = {t1} <= 0, rejected as degenerate")]
    DegenerateDuration { t1: f64 },

    #[error("path too short: need at least {need} samples, got {got}")]
    PathTooShort { need: usize, got: usize },

    #[error("residual precondition violated: {what} = {value} exceeds {limit}")]
    ResidualTooLarge {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("inconsistent boundary data: {0}")]
    InconsistentBoundary(String),

    #[error("grid too small: need at least {need} intervals per side, got {got_tau}x{got_t}")]
    GridTooSmall {
        need: usize,
        got_tau: usize,
        got_t: usize,
    },

    #[error("decay window too short or below round-off: {0}")]
    DecayWindow(String),

    #[error("bad field spec: {0}")]
    BadFieldSpec(String),

    #[error("malformed solution dump: {0}")]
    MalformedDump(String),

    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
