//! `hemo-uq sobol | fast | converge`: Sobol' index estimation with the
//! pick-freeze and FAST engines, single-size or over a convergence
//! schedule.

use crate::commands::{build_simulator, preflight_or_fail, resolve_out_dir};
use crate::config::{ConvergeMethod, EvaluatorKind, ExperimentKind, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output;
use hemo_uq_core::dist::Distribution1D;
use hemo_uq_core::sensitivity::{
    converge, cross_validate, fast_indices, independent_inputs, pick_freeze_indices,
    CountingEvaluator, Estimator, ModelEvaluator, SensitivityIndices,
    SensitivityReport,
};
use hemo_uq_core::testfns::Ishigami;
use hemo_uq_core::uq::SimulatorEvaluator;
use std::path::Path;

enum EvaluatorBox {
    Simulator(SimulatorEvaluator),
    Ishigami(Ishigami),
}

impl EvaluatorBox {
    fn as_dyn(&self) -> &dyn ModelEvaluator {
        match self {
            EvaluatorBox::Simulator(e) => e,
            EvaluatorBox::Ishigami(e) => e,
        }
    }
}

fn build_evaluator(
    loaded: &LoadedConfig,
) -> CliResult<(EvaluatorBox, Vec<(String, Distribution1D)>)> {
    let kind = loaded
        .config
        .experiment
        .evaluator
        .unwrap_or(EvaluatorKind::Simulator);
    match kind {
        EvaluatorKind::Simulator => {
            let input_set = loaded
                .input_set()
                .map_err(|v| CliError::config("inputs", v.join("; ")))?;
            let inputs =
                independent_inputs(&input_set).map_err(|e| CliError::from_core("inputs", e))?;
            let simulator = build_simulator(loaded)?;
            Ok((
                EvaluatorBox::Simulator(SimulatorEvaluator {
                    simulator,
                    spdp: loaded.spdp_model(),
                }),
                inputs,
            ))
        }
        EvaluatorKind::Ishigami => {
            let f = Ishigami::default();
            let inputs = f.input_set();
            Ok((EvaluatorBox::Ishigami(f), inputs))
        }
    }
}

pub fn run(
    loaded: &LoadedConfig,
    out_dir_flag: Option<&Path>,
    workers: usize,
    seed: u64,
) -> CliResult<()> {
    preflight_or_fail(loaded)?;
    let kind = loaded.config.experiment.kind;
    let out_dir = resolve_out_dir(loaded, out_dir_flag);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io("sensitivity", format!("{}: {e}", out_dir.display())))?;

    let manifest = RunManifest::begin(
        &out_dir,
        kind.as_str(),
        &loaded.path,
        &loaded.raw_bytes,
        Some(seed),
        workers,
    )?;

    let (evaluator, inputs) = build_evaluator(loaded)?;
    let counting = CountingEvaluator::new(evaluator.as_dyn());
    let d = inputs.len();

    match kind {
        ExperimentKind::Sobol | ExperimentKind::Fast => {
            let n = loaded.config.experiment.n.unwrap_or(10_000);
            let estimator = if kind == ExperimentKind::Sobol {
                Estimator::PickFreeze
            } else {
                Estimator::Fast
            };
            println!(
                "{}: d = {d}, n = {n}, evaluation budget = {}",
                kind.as_str(),
                estimator.evaluation_budget(d, n)
            );
            let before = counting.count();
            let indices = match estimator {
                Estimator::PickFreeze => pick_freeze_indices(&counting, &inputs, n, seed),
                Estimator::Fast => fast_indices(&counting, &inputs, n, seed),
            }
            .map_err(|e| CliError::from_core(kind.as_str(), e))?;
            manifest.stage(
                &format!("{}@n={n}", estimator.as_str()),
                counting.count() - before,
                0,
            )?;
            output::write_atomic(
                &out_dir.join("indices.csv"),
                output::indices_csv(&[&indices]).as_bytes(),
            )?;
        }
        ExperimentKind::Converge => {
            let schedule = loaded
                .schedule()
                .map_err(|e| CliError::from_core("schedule", e))?;
            let method = loaded
                .config
                .experiment
                .method
                .unwrap_or(ConvergeMethod::Both);
            let early_stop = loaded.config.experiment.early_stop;
            let estimators: Vec<Estimator> = match method {
                ConvergeMethod::Sobol => vec![Estimator::PickFreeze],
                ConvergeMethod::Fast => vec![Estimator::Fast],
                ConvergeMethod::Both => vec![Estimator::PickFreeze, Estimator::Fast],
            };
            let budget: usize = estimators
                .iter()
                .flat_map(|est| schedule.sizes.iter().map(move |&n| est.evaluation_budget(d, n)))
                .sum();
            println!(
                "converge: d = {d}, schedule {:?}, threshold {}, evaluation budget <= {budget}",
                schedule.sizes, schedule.threshold
            );

            let mut reports: Vec<SensitivityReport> = Vec::new();
            for estimator in estimators {
                let before = counting.count();
                let report = converge(estimator, &counting, &inputs, &schedule, early_stop, seed)
                    .map_err(|e| CliError::from_core("converge", e))?;
                manifest.stage(
                    &format!("converge_{}", estimator.as_str()),
                    counting.count() - before,
                    0,
                )?;
                match report.converged_at {
                    Some(n) => println!(
                        "  {}: converged at n = {n} (threshold {})",
                        estimator.as_str(),
                        schedule.threshold
                    ),
                    None if report.has_evidence() => println!(
                        "  {}: not converged within the schedule",
                        estimator.as_str()
                    ),
                    None => println!(
                        "  {}: single-size schedule, no convergence evidence",
                        estimator.as_str()
                    ),
                }
                reports.push(report);
            }

            let final_runs: Vec<&SensitivityIndices> =
                reports.iter().map(|r| r.final_indices()).collect();
            output::write_atomic(
                &out_dir.join("indices.csv"),
                output::indices_csv(&final_runs).as_bytes(),
            )?;
            let report_refs: Vec<&SensitivityReport> = reports.iter().collect();
            output::write_atomic(
                &out_dir.join("convergence.csv"),
                output::convergence_csv(&report_refs).as_bytes(),
            )?;

            if reports.len() == 2 {
                let agreement = cross_validate(
                    reports[0].final_indices(),
                    reports[1].final_indices(),
                    0.08,
                )
                .map_err(|e| CliError::from_core("cross_validate", e))?;
                output::write_json(&out_dir.join("cross_validation.json"), &agreement)?;
                println!(
                    "  cross-validation: max |dS| = {:.4}, max |dS_tot| = {:.4}, {}",
                    agreement.max_diff_first,
                    agreement.max_diff_total,
                    if agreement.agreed() {
                        "estimators agree"
                    } else {
                        "disagreements flagged"
                    }
                );
            }
        }
        _ => unreachable!("dispatch guarantees a sensitivity kind"),
    }

    manifest.done()?;
    println!(
        "{}: {} model evaluations, results in {}",
        kind.as_str(),
        counting.count(),
        out_dir.display()
    );
    Ok(())
}
