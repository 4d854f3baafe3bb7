//! Experiment configuration: schema, loading, and the checks shared by
//! every command.

use crate::error::{CliError, CliResult};
use hemo_uq_core::dist::{DistributionSpec, InputDistributionSet, InputMode, SpdpModel};
use hemo_uq_core::network::CircuitParameters;
use hemo_uq_core::sensitivity::ConvergenceSchedule;
use hemo_uq_core::solver::{BdfOrder, CycleInstants, SolverConfig};
use hemo_uq_core::uq::Population;
use hemo_uq_core::waveform::WaveShape;
use hemo_uq_core::CoreError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to the circuit parameter file, relative to the config file.
    pub model: PathBuf,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub inputs: InputsBlock,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::bdf_order")]
    pub bdf_order: BdfOrder,
    /// Cardiac period (s).
    #[serde(default = "defaults::period")]
    pub period: f64,
    /// Cycle-offset instants (s); omitted fields fall back to the
    /// waveform-derived defaults (peak, 0.40 T, T).
    #[serde(default)]
    pub instants: Option<InstantsBlock>,
    #[serde(default = "defaults::periodicity_eps")]
    pub periodicity_eps: f64,
    #[serde(default)]
    pub waveform: Option<WaveformBlock>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            dt: defaults::dt(),
            tol: defaults::tol(),
            t_end: defaults::t_end(),
            bdf_order: defaults::bdf_order(),
            period: defaults::period(),
            instants: None,
            periodicity_eps: defaults::periodicity_eps(),
            waveform: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstantsBlock {
    pub t_ps: Option<f64>,
    pub t_es: Option<f64>,
    pub t_ed: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformBlock {
    TwoHarmonic {
        amp2: f64,
        phase1: f64,
        phase2: f64,
    },
    /// CSV file of `t,pressure` rows covering one period.
    TabulatedCsv { path: PathBuf },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsBlock {
    #[serde(default)]
    pub map_mode: bool,
    /// Name -> raw distribution spec. Kept raw so malformed entries can be
    /// reported per input.
    #[serde(default)]
    pub entries: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub spdp_model: Option<SpdpModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: ExperimentKind,
    /// Deterministic input values (simulate).
    #[serde(default)]
    pub values: Option<BTreeMap<String, f64>>,
    /// Virtual population fixing SP/DP (propagate).
    #[serde(default)]
    pub population: Option<Population>,
    /// Names of sampled inputs (propagate); defaults to ["IOP"].
    #[serde(default)]
    pub stochastic: Option<Vec<String>>,
    /// Frozen inputs and values (propagate); defaults to RLTp = 9.5.
    #[serde(default)]
    pub frozen: Option<BTreeMap<String, f64>>,
    /// Sample size (propagate / sobol / fast).
    #[serde(default)]
    pub n: Option<usize>,
    /// Convergence schedule (converge).
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Estimator selection for converge runs.
    #[serde(default)]
    pub method: Option<ConvergeMethod>,
    /// Stop the schedule at the first converged size (converge).
    #[serde(default)]
    pub early_stop: bool,
    /// Model evaluated by the sensitivity engines.
    #[serde(default)]
    pub evaluator: Option<EvaluatorKind>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Propagate,
    Sobol,
    Fast,
    Converge,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Propagate => "propagate",
            ExperimentKind::Sobol => "sobol",
            ExperimentKind::Fast => "fast",
            ExperimentKind::Converge => "converge",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, ExperimentKind::Simulate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeMethod {
    Sobol,
    Fast,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Simulator,
    Ishigami,
}

mod defaults {
    use hemo_uq_core::solver::BdfOrder;

    pub fn dt() -> f64 {
        1e-3
    }
    pub fn tol() -> f64 {
        1e-6
    }
    pub fn t_end() -> f64 {
        8.0
    }
    pub fn bdf_order() -> BdfOrder {
        BdfOrder::Two
    }
    pub fn period() -> f64 {
        1.0
    }
    pub fn periodicity_eps() -> f64 {
        1e-3
    }
}

/// A config loaded from disk together with everything resolved from it.
pub struct LoadedConfig {
    pub path: PathBuf,
    pub raw_bytes: Vec<u8>,
    pub config: ExperimentConfig,
    pub model_path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<LoadedConfig> {
        let raw_bytes = std::fs::read(path).map_err(|e| {
            CliError::io("config", format!("cannot read config file {}: {e}", path.display()))
        })?;
        let config: ExperimentConfig = serde_json::from_slice(&raw_bytes)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let model_path = if config.model.is_absolute() {
            config.model.clone()
        } else {
            base.join(&config.model)
        };
        Ok(LoadedConfig {
            path: path.to_path_buf(),
            raw_bytes,
            config,
            model_path,
        })
    }

    pub fn load_model(&self) -> CliResult<CircuitParameters> {
        let text = std::fs::read_to_string(&self.model_path).map_err(|e| {
            CliError::io(
                "model",
                format!("cannot read model file {}: {e}", self.model_path.display()),
            )
        })?;
        CircuitParameters::from_json(&text).map_err(|e| CliError::from_core("model", e))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.config.solver.dt,
            tol: self.config.solver.tol,
            t_end: self.config.solver.t_end,
            bdf_order: self.config.solver.bdf_order,
        }
    }

    /// Waveform shape from the config (period-independent part).
    pub fn wave_shape(&self) -> CliResult<WaveShape> {
        match &self.config.solver.waveform {
            None => Ok(WaveShape::default_two_harmonic()),
            Some(WaveformBlock::TwoHarmonic {
                amp2,
                phase1,
                phase2,
            }) => Ok(WaveShape::TwoHarmonic {
                amp2: *amp2,
                phase1: *phase1,
                phase2: *phase2,
            }),
            Some(WaveformBlock::TabulatedCsv { path }) => {
                let resolved = if path.is_absolute() {
                    path.clone()
                } else {
                    self.path
                        .parent()
                        .unwrap_or_else(|| Path::new("."))
                        .join(path)
                };
                let text = std::fs::read_to_string(&resolved).map_err(|e| {
                    CliError::io(
                        "waveform",
                        format!("cannot read waveform file {}: {e}", resolved.display()),
                    )
                })?;
                let mut samples = Vec::new();
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                        continue;
                    }
                    let mut parts = line.split(',');
                    let parse = |s: Option<&str>| -> Option<f64> {
                        s.and_then(|v| v.trim().parse::<f64>().ok())
                    };
                    match (parse(parts.next()), parse(parts.next())) {
                        (Some(t), Some(p)) => samples.push((t, p)),
                        _ => {
                            return Err(CliError::config(
                                "waveform",
                                format!("{}:{}: expected `t,pressure`", resolved.display(), lineno + 1),
                            ))
                        }
                    }
                }
                Ok(WaveShape::Tabulated { samples })
            }
        }
    }

    /// Explicit instants from the config; unspecified components use the
    /// waveform-derived defaults at run time.
    pub fn instants(&self, source: &hemo_uq_core::Waveform) -> CliResult<CycleInstants> {
        let defaults = CycleInstants::defaults_for(source);
        let block = match self.config.solver.instants {
            None => return Ok(defaults),
            Some(b) => b,
        };
        let instants = CycleInstants {
            t_ps: block.t_ps.unwrap_or(defaults.t_ps),
            t_es: block.t_es.unwrap_or(defaults.t_es),
            t_ed: block.t_ed.unwrap_or(defaults.t_ed),
        };
        instants
            .validate(source.period())
            .map_err(|e| CliError::from_core("config", e))?;
        Ok(instants)
    }

    /// Parses the input distributions, reporting one error per bad entry.
    pub fn input_set(&self) -> Result<InputDistributionSet, Vec<String>> {
        let block = &self.config.inputs;
        let mode = if block.map_mode {
            InputMode::Map
        } else {
            InputMode::SpDp
        };
        if block.entries.is_empty() {
            return Ok(match mode {
                InputMode::Map => InputDistributionSet::default_map_mode(),
                InputMode::SpDp => InputDistributionSet::default_spdp_mode(),
            });
        }
        let expected: &[&str] = match mode {
            InputMode::Map => &InputDistributionSet::MAP_INPUTS,
            InputMode::SpDp => &InputDistributionSet::SPDP_INPUTS,
        };
        let mut violations = Vec::new();
        let mut entries = Vec::new();
        for name in expected {
            match block.entries.get(*name) {
                None => violations.push(format!("input {name}: missing distribution")),
                Some(value) => match serde_json::from_value::<DistributionSpec>(value.clone()) {
                    Err(e) => violations.push(format!("input {name}: {e}")),
                    Ok(spec) => match spec.to_distribution() {
                        Err(e) => violations.push(format!("input {name}: {e}")),
                        Ok(dist) => entries.push(((*name).to_string(), dist)),
                    },
                },
            }
        }
        for name in block.entries.keys() {
            if !expected.contains(&name.as_str()) {
                violations.push(format!(
                    "input {name}: not a model input for this mode (expected {expected:?})"
                ));
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        InputDistributionSet::new(mode, entries).map_err(|e| vec![e.to_string()])
    }

    pub fn spdp_model(&self) -> SpdpModel {
        self.config.inputs.spdp_model.unwrap_or_default()
    }

    pub fn schedule(&self) -> Result<ConvergenceSchedule, CoreError> {
        let mut schedule = ConvergenceSchedule::default();
        if let Some(sizes) = &self.config.experiment.schedule {
            schedule.sizes = sizes.clone();
        }
        if let Some(threshold) = self.config.experiment.threshold {
            schedule.threshold = threshold;
        }
        schedule.validate()?;
        Ok(schedule)
    }

    /// Config-level checks shared by all commands, run before any compute.
    /// Returns the full violation list instead of stopping at the first.
    pub fn preflight(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let solver = &self.config.solver;
        if !(solver.dt > 0.0) {
            violations.push(format!("solver.dt must be positive, got {}", solver.dt));
        }
        if !(solver.tol > 0.0) {
            violations.push(format!("solver.tol must be positive, got {}", solver.tol));
        }
        if !(solver.period > 0.0) {
            violations.push(format!(
                "solver.period must be positive, got {}",
                solver.period
            ));
        }
        if solver.t_end < 2.0 * solver.period {
            violations.push(format!(
                "solver.t_end = {} must span at least two cardiac cycles (period {})",
                solver.t_end, solver.period
            ));
        }
        let exp = &self.config.experiment;
        if exp.kind.is_stochastic() && exp.seed.is_none() {
            violations.push("experiment.seed is mandatory for stochastic experiments".into());
        }
        if exp.kind == ExperimentKind::Simulate {
            match &exp.values {
                None => violations.push("simulate needs experiment.values".into()),
                Some(values) => {
                    for key in ["SP", "DP", "IOP", "RLTp"] {
                        if !values.contains_key(key) {
                            violations.push(format!("experiment.values is missing {key}"));
                        }
                    }
                }
            }
        }
        if let Err(input_violations) = self.input_set() {
            violations.extend(input_violations);
        }
        violations
    }
}
