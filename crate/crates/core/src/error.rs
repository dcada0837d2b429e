//! Crate error type.

use thiserror::Error;

/// Errors surfaced by data ingestion, configuration and the path drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed libsvm input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input stream held no instances.
    #[error("no instances")]
    NoInstances,

    /// Response vector cannot be standardized (zero variance).
    #[error("degenerate response")]
    DegenerateResponse,

    /// Invalid configuration or contract violation at an API boundary.
    #[error("invalid config: {0}")]
    Config(String),

    /// Every candidate feature is identically zero (or y = 0).
    #[error("lambda_max undefined: all candidate features have zero correlation")]
    LambdaMaxUndefined,

    /// Coordinate descent exceeded its sweep cap. The failing iterate is
    /// available from [`crate::solver::NonConvergence`] at the solver boundary.
    #[error("step {step} (lambda={lambda:.6e}): solver did not converge after {sweeps} sweeps (relative gap {rel_gap:.3e})")]
    SolverNonConvergence {
        step: usize,
        lambda: f64,
        sweeps: usize,
        rel_gap: f64,
    },

    /// Oracle enumeration would exceed the configured cap.
    #[error("enumeration cap exceeded: D = {d_total} itemsets > cap {cap} (the oracle is desk-scale by design)")]
    CapExceeded { d_total: u64, cap: u64 },

    /// I/O failure while reading or writing data files.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
