use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("eigensolver failed for {context}")]
    Eigensolver { context: String },

    #[error("level {level} is not a parity eigenstate (<P> = {expectation:.6})")]
    NotParityEigenstate { level: usize, expectation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("time step {dt:e} exceeds the allowed maximum {max:e}")]
    StepSize { dt: f64, max: f64 },

    #[error("density matrix left the physical set at t = {time}: trace {trace:e}, min eigenvalue {min_eigenvalue:e}")]
    Unphysical {
        time: f64,
        trace: f64,
        min_eigenvalue: f64,
    },

    #[error("quasi-steady state not reached by t = {time} (period-to-period distance {metric:e})")]
    NonConvergence { time: f64, metric: f64 },

    #[error("output flux {flux:e} is too small to normalize a correlation function (is the system driven?)")]
    DenominatorUnderflow { flux: f64 },

    #[error("resonance unreachable: ω2 - ω1 = {resonance} GHz does not exceed the gap {gap} GHz")]
    ResonanceUnreachable { resonance: f64, gap: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
