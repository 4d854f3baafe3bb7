pub mod propagate;
pub mod sensitivity;
pub mod simulate;
pub mod validate;

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use hemo_uq_core::uq::Simulator;
use std::path::{Path, PathBuf};

/// Resolves the output directory: CLI flag, then config, then a default
/// derived from the experiment kind.
pub fn resolve_out_dir(loaded: &LoadedConfig, cli_out: Option<&Path>) -> PathBuf {
    if let Some(dir) = cli_out {
        return dir.to_path_buf();
    }
    if let Some(dir) = &loaded.config.output_dir {
        return dir.clone();
    }
    PathBuf::from("out").join(loaded.config.experiment.kind.as_str())
}

/// Runs the shared preflight checks, failing on the first report with the
/// full violation list.
pub fn preflight_or_fail(loaded: &LoadedConfig) -> CliResult<()> {
    let violations = loaded.preflight();
    if violations.is_empty() {
        return Ok(());
    }
    Err(CliError::config(
        "preflight",
        format!(
            "{} violation(s):\n  - {}",
            violations.len(),
            violations.join("\n  - ")
        ),
    ))
}

/// Builds the simulator from the loaded config (model, solver, waveform
/// shape, instants).
pub fn build_simulator(loaded: &LoadedConfig) -> CliResult<Simulator> {
    let params = loaded.load_model()?;
    let model = hemo_uq_core::build_ocular_network(&params)
        .map_err(|e| CliError::from_core("model", e))?;
    let shape = loaded.wave_shape()?;
    let mut simulator = Simulator::new(model, loaded.solver_config(), loaded.config.solver.period);
    simulator.shape = shape;
    simulator.periodicity_eps = loaded.config.solver.periodicity_eps;
    // Resolve explicit instants once against a probe waveform; anchors do
    // not move the peak because the rescale is affine.
    if loaded.config.solver.instants.is_some() {
        let probe = simulator
            .waveform(120.0, 80.0)
            .map_err(|e| CliError::from_core("waveform", e))?;
        simulator.instants = Some(loaded.instants(&probe)?);
    }
    Ok(simulator)
}
