//! Shared fixtures for the criterion benches.

use hemo_uq_core::network::{build_ocular_network, CircuitParameters, NetworkModel};
use hemo_uq_core::solver::SolverConfig;
use hemo_uq_core::uq::Simulator;

pub fn default_model() -> NetworkModel {
    build_ocular_network(&CircuitParameters::default()).expect("default parameters build")
}

pub fn default_simulator() -> Simulator {
    Simulator::new(default_model(), SolverConfig::default(), 1.0)
}
