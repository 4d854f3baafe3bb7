//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, integration and the stochastic
/// engines. The message prefixes ("numerical blow-up", "newton-divergence",
/// ...) are part of the public contract and are matched by callers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Structural problem in a network model (disconnected graph, bad
    /// observable, capacitor not grounded, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A parameter violates its invariant (non-positive resistance, sd <= 0,
    /// quantile argument outside (0,1), ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Configuration-level violation detected before any computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Non-finite values entered the state or the assembled system.
    #[error("numerical blow-up: {0}")]
    NumericalBlowUp(String),

    /// Newton iteration exceeded its iteration budget.
    #[error("newton-divergence: {0}")]
    NewtonDivergence(String),

    /// A trajectory does not span enough cardiac cycles for the requested
    /// analysis.
    #[error("insufficient cycles: {0}")]
    InsufficientCycles(String),

    /// A sensitivity target has (numerically) zero variance.
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    /// SP/DP reconstruction produced sp <= dp.
    #[error("unphysiological pulse pressure: {0}")]
    UnphysiologicalPulse(String),

    /// Too many failed model evaluations inside a propagation study.
    #[error("model fragility: {0}")]
    ModelFragility(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
