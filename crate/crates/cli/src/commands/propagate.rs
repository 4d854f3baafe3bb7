//! `hemo-uq propagate`: forward Monte Carlo propagation of the stochastic
//! inputs through the simulator for one virtual population.

use crate::commands::{build_simulator, preflight_or_fail, resolve_out_dir};
use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output;
use hemo_uq_core::dist::Distribution1D;
use hemo_uq_core::uq::{propagate, summarize, Population, PropagationStudy};
use std::path::Path;

/// Builds the study from the experiment block: population fixes SP/DP,
/// `stochastic` names the sampled inputs (default IOP only), `frozen`
/// pins the rest (default RLTp at its population mean).
pub fn study_from_config(loaded: &LoadedConfig, seed: u64) -> CliResult<PropagationStudy> {
    let exp = &loaded.config.experiment;
    let population = exp.population.unwrap_or(Population::Baseline);
    let n = exp.n.unwrap_or(10_000);
    let input_set = loaded
        .input_set()
        .map_err(|v| CliError::config("inputs", v.join("; ")))?;

    let stochastic_names = exp
        .stochastic
        .clone()
        .unwrap_or_else(|| vec!["IOP".to_string()]);
    let mut stochastic: Vec<(String, Distribution1D)> = Vec::new();
    for name in &stochastic_names {
        let dist = input_set.get(name).copied().ok_or_else(|| {
            CliError::config(
                "inputs",
                format!("stochastic input {name} has no distribution in the inputs block"),
            )
        })?;
        stochastic.push((name.clone(), dist));
    }

    let mut frozen: Vec<(String, f64)> = Vec::new();
    let (sp, dp) = population.spdp();
    for (name, value) in [("SP", sp), ("DP", dp), ("RLTp", 9.5)] {
        if !stochastic_names.iter().any(|s| s == name) {
            frozen.push((name.to_string(), value));
        }
    }
    if let Some(user_frozen) = &exp.frozen {
        for (name, value) in user_frozen {
            if let Some(slot) = frozen.iter_mut().find(|(n, _)| n == name) {
                slot.1 = *value;
            } else if !stochastic_names.iter().any(|s| s == name) {
                frozen.push((name.clone(), *value));
            } else {
                return Err(CliError::config(
                    "experiment",
                    format!("input {name} is both stochastic and frozen"),
                ));
            }
        }
    }

    let study = PropagationStudy {
        label: population.label(),
        stochastic,
        frozen,
        n,
        seed,
    };
    study
        .validate()
        .map_err(|e| CliError::from_core("experiment", e))?;
    Ok(study)
}

pub fn run(loaded: &LoadedConfig, out_dir_flag: Option<&Path>, workers: usize, seed: u64) -> CliResult<()> {
    preflight_or_fail(loaded)?;
    let out_dir = resolve_out_dir(loaded, out_dir_flag);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io("propagate", format!("{}: {e}", out_dir.display())))?;

    let manifest = RunManifest::begin(
        &out_dir,
        "propagate",
        &loaded.path,
        &loaded.raw_bytes,
        Some(seed),
        workers,
    )?;

    let study = study_from_config(loaded, seed)?;
    let simulator = build_simulator(loaded)?;
    println!(
        "propagate: population {}, n = {}, stochastic {:?}",
        study.label,
        study.n,
        study
            .stochastic
            .iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
    );

    let result =
        propagate(&study, &simulator).map_err(|e| CliError::from_core("propagate", e))?;
    manifest.stage(
        &format!("propagate@n={}", study.n),
        study.n as u64,
        result.failures.len() as u64,
    )?;

    let summary =
        summarize(&result.matrix()).map_err(|e| CliError::from_core("summarize", e))?;

    output::write_atomic(
        &out_dir.join("raw.csv"),
        output::raw_matrix_csv(&result).as_bytes(),
    )?;
    if !result.failures.is_empty() {
        output::write_atomic(
            &out_dir.join("failures.csv"),
            output::failures_csv(&result).as_bytes(),
        )?;
    }
    output::write_atomic(
        &out_dir.join("summary.json"),
        output::summary_json(&result, &summary)?.as_bytes(),
    )?;
    output::write_plot_data(&out_dir.join("plots"), &summary)?;

    manifest.done()?;
    println!(
        "propagate: {} samples ok, {} failed, results in {}",
        result.rows.len(),
        result.failures.len(),
        out_dir.display()
    );
    Ok(())
}
