//! Lumped-parameter (0D) ocular hemodynamics with forward uncertainty
//! propagation and variance-based global sensitivity analysis.
//!
//! The crate is organised around five layers:
//!
//! * [`network`] / [`assembly`] — the electric-analogy vascular circuit
//!   (resistors, Starling resistors, capacitors, pressure sources) and the
//!   Kirchhoff assembly of its governing ODE system.
//! * [`waveform`] / [`solver`] — the periodic arterial pressure source and a
//!   fixed-step implicit BDF integrator with Newton iteration, plus
//!   periodicity checking and extraction of the nine blood-flow quantities
//!   of interest (CRA / CRV / lamina cribrosa at peak systole, end systole,
//!   end diastole).
//! * [`dist`] / [`rng`] — the stochastic input layer: normal, lognormal
//!   (moment-matched), truncated normal and uniform distributions with
//!   analytic quantiles, plus counter-based per-sample random streams so
//!   parallel sampling is reproducible and order-independent.
//! * [`uq`] — forward Monte Carlo propagation over virtual populations and
//!   ensemble summaries (moments, histograms, KDE, Tukey boxplots).
//! * [`sensitivity`] — first-order and total Sobol' indices via the
//!   pick-freeze Monte Carlo estimator and the extended FAST spectral
//!   method, with an iterative-error convergence schedule and
//!   cross-validation between the two estimators.

pub mod assembly;
pub mod dist;
pub mod error;
pub mod linalg;
pub mod network;
pub mod normal;
pub mod rng;
pub mod sensitivity;
pub mod solver;
pub mod testfns;
pub mod uq;
pub mod waveform;

pub use assembly::{assemble_rhs, steady_state, Externals, RhsOutput};
pub use dist::{
    lognormal_from_moments, map_from_spdp, Distribution1D, DistributionSpec, InputDistributionSet,
    InputMode, SpdpModel,
};
pub use error::CoreError;
pub use network::{
    build_ocular_network, starling_resistance, Branch, BranchKind, CircuitParameters, Exposure,
    NetworkModel, NodeId,
};
pub use sensitivity::{
    converge, cross_validate, fast_indices, pick_freeze_indices, ConvergenceSchedule,
    CountingEvaluator, Estimator, ModelEvaluator, SensitivityIndices, SensitivityReport,
};
pub use solver::{
    check_periodicity, extract_qoi, integrate, BdfOrder, CycleInstants, QoIVector,
    SimulationResult, SolverConfig, QOI_NAMES,
};
pub use uq::{
    compare_populations, propagate, summarize, EnsembleSummary, Population, PropagationResult,
    PropagationStudy, QoiModel, Simulator, SimulatorEvaluator,
};
pub use waveform::Waveform;

/// Flow unit conversion: 1 cm³/s = 6e4 µl/min.
pub const CM3_PER_S_TO_UL_PER_MIN: f64 = 6.0e4;
