//! `hemo-uq validate`: schema, unit and invariant checks over the config
//! and model files, uncalibrated-parameter warnings, and a short dry run
//! of the solver. Reports every violation, not just the first.

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use hemo_uq_core::assembly::{steady_state, Externals};
use hemo_uq_core::network::CircuitParameters;
use hemo_uq_core::solver::{integrate, SolverConfig};
use hemo_uq_core::waveform::Waveform;

pub fn run(loaded: &LoadedConfig) -> CliResult<()> {
    let mut violations: Vec<String> = loaded.preflight();
    let mut warnings: Vec<String> = Vec::new();

    // Model file: schema first, then per-entry invariants.
    let params: Option<CircuitParameters> = match std::fs::read_to_string(&loaded.model_path) {
        Err(e) => {
            violations.push(format!(
                "model file {}: {e}",
                loaded.model_path.display()
            ));
            None
        }
        Ok(text) => match serde_json::from_str::<CircuitParameters>(&text) {
            Err(e) => {
                violations.push(format!(
                    "model file {}: {e}",
                    loaded.model_path.display()
                ));
                None
            }
            Ok(params) => {
                violations.extend(params.violations());
                warnings.extend(
                    params
                        .uncalibrated
                        .iter()
                        .map(|w| format!("uncalibrated parameter: {w}")),
                );
                Some(params)
            }
        },
    };

    // Dry run: build the network, steady-solve, then integrate two cycles.
    if violations.is_empty() {
        if let Some(params) = &params {
            match hemo_uq_core::build_ocular_network(params) {
                Err(e) => violations.push(format!("network build: {e}")),
                Ok(model) => {
                    let externals = Externals { iop: 14.7, rltp: 9.5 };
                    if let Err(e) = steady_state(&model, 93.3, externals) {
                        violations.push(format!("dry run (steady solve): {e}"));
                    } else {
                        let shape = loaded.wave_shape()?;
                        let period = loaded.config.solver.period;
                        match Waveform::from_shape(shape, period, 120.0, 80.0) {
                            Err(e) => violations.push(format!("waveform: {e}")),
                            Ok(source) => {
                                let cfg = SolverConfig {
                                    t_end: 2.0 * period,
                                    ..loaded.solver_config()
                                };
                                if let Err(e) = integrate(&model, &source, externals, &cfg) {
                                    violations.push(format!("dry run (integration): {e}"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    for w in &warnings {
        println!("warning: {w}");
    }
    if violations.is_empty() {
        println!(
            "valid, {} uncalibrated-parameter warning{}",
            warnings.len(),
            if warnings.len() == 1 { "" } else { "s" }
        );
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(CliError::config(
            "validate",
            format!("{} violation(s) found", violations.len()),
        ))
    }
}
