//! `hemo-uq simulate`: one deterministic transient run, dumping the full
//! trajectory and the nine QoIs.

use crate::commands::{build_simulator, preflight_or_fail, resolve_out_dir};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output;
use hemo_uq_core::assembly::Externals;
use hemo_uq_core::solver::{check_periodicity, extract_qoi, integrate};
use std::path::Path;

pub fn run(loaded: &LoadedConfig, out_dir_flag: Option<&Path>, workers: usize) -> CliResult<()> {
    preflight_or_fail(loaded)?;
    let out_dir = resolve_out_dir(loaded, out_dir_flag);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io("simulate", format!("{}: {e}", out_dir.display())))?;

    let manifest = RunManifest::begin(
        &out_dir,
        "simulate",
        &loaded.path,
        &loaded.raw_bytes,
        loaded.config.experiment.seed,
        workers,
    )?;

    let simulator = build_simulator(loaded)?;
    let values = loaded
        .config
        .experiment
        .values
        .as_ref()
        .expect("preflight checked values");
    let get = |k: &str| values.get(k).copied().unwrap();
    let (sp, dp, iop, rltp) = (get("SP"), get("DP"), get("IOP"), get("RLTp"));

    let source = simulator
        .waveform(sp, dp)
        .map_err(|e| CliError::from_core("waveform", e))?;
    let externals = Externals { iop, rltp };
    let result = integrate(&simulator.model, &source, externals, &simulator.solver)
        .map_err(|e| CliError::from_core("integrate", e))?;
    let check = check_periodicity(&result, simulator.periodicity_eps)
        .map_err(|e| CliError::from_core("periodicity", e))?;
    if !check.periodic {
        return Err(CliError::Numerical {
            stage: "periodicity".into(),
            message: format!(
                "last-cycle deviation {:.3e} mmHg exceeds {:.1e}",
                check.max_deviation, simulator.periodicity_eps
            ),
        });
    }
    let instants = simulator.instants_for(&source);
    let qoi = extract_qoi(&result, &instants).map_err(|e| CliError::from_core("extract", e))?;

    output::write_atomic(
        &out_dir.join("trajectory.csv"),
        output::trajectory_csv(&result).as_bytes(),
    )?;
    output::write_atomic(&out_dir.join("qoi.json"), output::qoi_json(&qoi)?.as_bytes())?;

    manifest.stage("simulate", 1, 0)?;
    manifest.done()?;
    println!(
        "simulate: {} steps, periodic (deviation {:.2e} mmHg), results in {}",
        result.times.len() - 1,
        check.max_deviation,
        out_dir.display()
    );
    Ok(())
}
