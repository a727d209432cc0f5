use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or control parameter violates its validity range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Caller passed vectors or counts with inconsistent dimensions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No circulating-current offset can make P10 positive (Vdc^2 < C0).
    #[error("infeasible operating point: Vdc^2 = {vdc_sq} < C0 = {c0}")]
    InfeasibleOperatingPoint { vdc_sq: f64, c0: f64 },

    /// A state variable exceeded the divergence guard during simulation.
    #[error("simulation diverged at step {step} (t = {time} s): |{signal}| = {value:e}")]
    Diverged {
        step: usize,
        time: f64,
        signal: String,
        value: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
