//! Forward Monte Carlo uncertainty propagation and ensemble summaries.
//!
//! A propagation study freezes part of the model inputs (SP, DP, IOP,
//! RLTp), samples the rest, runs the simulator per sample and collects the
//! nine quantities of interest. Failed evaluations are recorded with their
//! inputs and excluded from statistics; a study aborts if more than 1% of
//! evaluations fail.

use crate::assembly::Externals;
use crate::dist::Distribution1D;
use crate::error::{CoreError, Result};
use crate::network::NetworkModel;
use crate::rng::{sample_rng, stream_id, streams};
use crate::solver::{
    check_periodicity, extract_qoi, integrate, CycleInstants, QoIVector, SolverConfig, QOI_NAMES,
};
use crate::waveform::{WaveShape, Waveform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The four model inputs in canonical order.
pub const MODEL_INPUTS: [&str; 4] = ["SP", "DP", "IOP", "RLTp"];

/// Virtual population defining the frozen blood-pressure pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    Baseline,
    Low,
    High,
    Custom { sp: f64, dp: f64 },
}

impl Population {
    pub fn spdp(&self) -> (f64, f64) {
        match *self {
            Population::Baseline => (120.0, 80.0),
            Population::Low => (100.0, 70.0),
            Population::High => (140.0, 90.0),
            Population::Custom { sp, dp } => (sp, dp),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Population::Baseline => "baseline".into(),
            Population::Low => "low".into(),
            Population::High => "high".into(),
            Population::Custom { sp, dp } => format!("custom_{sp}_{dp}"),
        }
    }
}

/// Specification of one propagation study.
#[derive(Debug, Clone)]
pub struct PropagationStudy {
    pub label: String,
    /// Inputs drawn per sample.
    pub stochastic: Vec<(String, Distribution1D)>,
    /// Inputs held at fixed values.
    pub frozen: Vec<(String, f64)>,
    pub n: usize,
    pub seed: u64,
}

impl PropagationStudy {
    /// The study design used throughout: IOP stochastic, RLTp frozen at its
    /// population mean, SP/DP frozen at the population values.
    pub fn iop_only(population: Population, iop: Distribution1D, n: usize, seed: u64) -> Self {
        let (sp, dp) = population.spdp();
        PropagationStudy {
            label: population.label(),
            stochastic: vec![("IOP".into(), iop)],
            frozen: vec![
                ("SP".into(), sp),
                ("DP".into(), dp),
                ("RLTp".into(), 9.5),
            ],
            n,
            seed,
        }
    }

    /// Checks that stochastic and frozen inputs cover SP, DP, IOP, RLTp
    /// exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(CoreError::InvalidConfig(format!(
                "propagation study needs n >= 2, got {}",
                self.n
            )));
        }
        let mut seen: Vec<&str> = Vec::new();
        for name in self
            .stochastic
            .iter()
            .map(|(n, _)| n.as_str())
            .chain(self.frozen.iter().map(|(n, _)| n.as_str()))
        {
            if !MODEL_INPUTS.contains(&name) {
                return Err(CoreError::InvalidConfig(format!(
                    "unknown model input {name}"
                )));
            }
            if seen.contains(&name) {
                return Err(CoreError::InvalidConfig(format!(
                    "model input {name} is assigned twice"
                )));
            }
            seen.push(name);
        }
        if seen.len() != MODEL_INPUTS.len() {
            let missing: Vec<&str> = MODEL_INPUTS
                .iter()
                .filter(|m| !seen.contains(m))
                .copied()
                .collect();
            return Err(CoreError::InvalidConfig(format!(
                "model inputs not covered by the study: {missing:?}"
            )));
        }
        for (name, dist) in &self.stochastic {
            dist.validate()
                .map_err(|e| CoreError::InvalidConfig(format!("input {name}: {e}")))?;
        }
        Ok(())
    }
}

/// Input values of one sample in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputValues {
    pub sp: f64,
    pub dp: f64,
    pub iop: f64,
    pub rltp: f64,
}

/// Anything that maps the four clinical inputs to the nine QoIs. The
/// production implementation is [`Simulator`]; tests substitute analytic
/// surrogates.
pub trait QoiModel: Sync {
    fn run(&self, inputs: InputValues) -> Result<QoIVector>;
}

/// The full simulator: waveform from SP/DP, transient integration,
/// periodicity check, QoI extraction at the configured instants.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub model: NetworkModel,
    pub solver: SolverConfig,
    pub period: f64,
    pub shape: WaveShape,
    /// Explicit instants; `None` derives them from the waveform (peak
    /// systole at the source peak, end systole at 0.40 T, end diastole
    /// at T).
    pub instants: Option<CycleInstants>,
    /// Largest admissible last-cycle deviation (mmHg).
    pub periodicity_eps: f64,
}

impl Simulator {
    pub fn new(model: NetworkModel, solver: SolverConfig, period: f64) -> Self {
        Simulator {
            model,
            solver,
            period,
            shape: WaveShape::default_two_harmonic(),
            instants: None,
            periodicity_eps: 1e-3,
        }
    }

    pub fn waveform(&self, sp: f64, dp: f64) -> Result<Waveform> {
        Waveform::from_shape(self.shape.clone(), self.period, sp, dp)
    }

    pub fn instants_for(&self, source: &Waveform) -> CycleInstants {
        self.instants
            .unwrap_or_else(|| CycleInstants::defaults_for(source))
    }
}

impl QoiModel for Simulator {
    fn run(&self, inputs: InputValues) -> Result<QoIVector> {
        let source = self.waveform(inputs.sp, inputs.dp)?;
        let externals = Externals {
            iop: inputs.iop,
            rltp: inputs.rltp,
        };
        let result = integrate(&self.model, &source, externals, &self.solver)?;
        let check = check_periodicity(&result, self.periodicity_eps)?;
        if !check.periodic {
            return Err(CoreError::NumericalBlowUp(format!(
                "trajectory not periodic: last-cycle deviation {:.3e} mmHg exceeds {:.1e}",
                check.max_deviation, self.periodicity_eps
            )));
        }
        extract_qoi(&result, &self.instants_for(&source))
    }
}

/// Sensitivity-analysis wrapper around the simulator: takes the
/// independent inputs (MAP, IOP, RLTp), reconstructs SP/DP from MAP, and
/// returns the nine QoIs.
pub struct SimulatorEvaluator {
    pub simulator: Simulator,
    pub spdp: crate::dist::SpdpModel,
}

impl crate::sensitivity::ModelEvaluator for SimulatorEvaluator {
    fn dimension(&self) -> usize {
        3
    }

    fn output_names(&self) -> Vec<String> {
        QOI_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (map, iop, rltp) = (x[0], x[1], x[2]);
        let (sp, dp) = self.spdp.spdp_from_map(map)?;
        let qoi = self.simulator.run(InputValues { sp, dp, iop, rltp })?;
        Ok(qoi.as_array().to_vec())
    }
}

/// One successfully evaluated sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleRow {
    pub sample: usize,
    pub inputs: InputValues,
    pub qoi: QoIVector,
}

/// One failed sample, kept for the audit trail.
#[derive(Debug, Clone)]
pub struct FailureRecord {
    pub sample: usize,
    pub inputs: InputValues,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub label: String,
    pub n_requested: usize,
    pub rows: Vec<SampleRow>,
    pub failures: Vec<FailureRecord>,
}

impl PropagationResult {
    /// Raw QoI matrix (successful rows only, sample order).
    pub fn matrix(&self) -> Vec<[f64; 9]> {
        self.rows.iter().map(|r| r.qoi.as_array()).collect()
    }
}

/// Fraction of failed evaluations above which a study aborts.
const FRAGILITY_THRESHOLD: f64 = 0.01;

fn draw_inputs(study: &PropagationStudy, sample: usize) -> Result<InputValues> {
    let mut values = [f64::NAN; 4];
    for (slot, name) in MODEL_INPUTS.iter().enumerate() {
        if let Some((_, v)) = self_find(&study.frozen, name) {
            values[slot] = *v;
        } else if let Some((_, dist)) = self_find(&study.stochastic, name) {
            let mut rng = sample_rng(
                study.seed,
                stream_id(streams::PROPAGATE, slot as u64),
                sample as u64,
            );
            values[slot] = dist.sample_with(&mut rng);
        }
    }
    Ok(InputValues {
        sp: values[0],
        dp: values[1],
        iop: values[2],
        rltp: values[3],
    })
}

fn self_find<'a, T>(list: &'a [(String, T)], name: &str) -> Option<&'a (String, T)> {
    list.iter().find(|(n, _)| n == name)
}

/// Runs the study: row `j` of the result is the QoI vector of sample `j`.
/// Deterministic given the seed, independent of the rayon worker count.
pub fn propagate<M: QoiModel>(study: &PropagationStudy, model: &M) -> Result<PropagationResult> {
    study.validate()?;

    let outcomes: Vec<std::result::Result<SampleRow, FailureRecord>> = (0..study.n)
        .into_par_iter()
        .map(|j| {
            let inputs = draw_inputs(study, j).map_err(|e| FailureRecord {
                sample: j,
                inputs: InputValues {
                    sp: f64::NAN,
                    dp: f64::NAN,
                    iop: f64::NAN,
                    rltp: f64::NAN,
                },
                message: e.to_string(),
            })?;
            match model.run(inputs) {
                Ok(qoi) => Ok(SampleRow {
                    sample: j,
                    inputs,
                    qoi,
                }),
                Err(e) => Err(FailureRecord {
                    sample: j,
                    inputs,
                    message: e.to_string(),
                }),
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(study.n);
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }

    if failures.len() as f64 > FRAGILITY_THRESHOLD * study.n as f64 {
        return Err(CoreError::ModelFragility(format!(
            "{} of {} evaluations failed (first failure, sample {}: {})",
            failures.len(),
            study.n,
            failures[0].sample,
            failures[0].message
        )));
    }

    Ok(PropagationResult {
        label: study.label.clone(),
        n_requested: study.n,
        rows,
        failures,
    })
}

/// Histogram with explicit bin edges; `counts.len() + 1 == edges.len()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Gaussian-kernel density estimate on a regular grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeCurve {
    /// Trapezoid mass of the curve; close to one when the grid covers the
    /// support.
    pub fn mass(&self) -> f64 {
        if self.grid.len() < 2 {
            return 1.0;
        }
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
        }
        acc
    }

    /// Indices of strict local maxima (modes) of the curve.
    pub fn local_maxima(&self) -> Vec<usize> {
        let mut peaks = Vec::new();
        for i in 1..self.density.len().saturating_sub(1) {
            if self.density[i] > self.density[i - 1] && self.density[i] > self.density[i + 1] {
                peaks.push(i);
            }
        }
        peaks
    }
}

/// Tukey boxplot statistics with 1.5 IQR whiskers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
    pub kde: KdeCurve,
    pub boxplot: BoxplotStats,
}

/// Per-QoI ensemble summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub qoi_names: Vec<String>,
    pub stats: Vec<SummaryStats>,
}

impl EnsembleSummary {
    pub fn stat(&self, qoi: &str) -> Option<&SummaryStats> {
        self.qoi_names
            .iter()
            .position(|n| n == qoi)
            .map(|i| &self.stats[i])
    }
}

/// Linear-interpolation quantile (type 7) of sorted data.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let i = (h.floor() as usize).min(n - 2);
    let w = h - i as f64;
    sorted[i] * (1.0 - w) + sorted[i + 1] * w
}

/// Full descriptive statistics of one sample column.
pub fn summary_stats(values: &[f64]) -> SummaryStats {
    assert!(!values.is_empty(), "summary of an empty column");
    let n = values.len();

    // Welford one-pass moments.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite QoIs"));
    let (min, max) = (sorted[0], sorted[n - 1]);
    let q1 = sorted_quantile(&sorted, 0.25);
    let median = sorted_quantile(&sorted, 0.5);
    let q3 = sorted_quantile(&sorted, 0.75);
    let iqr = q3 - q1;

    // Tukey fences; whiskers sit on the most extreme points inside them.
    let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_low = sorted
        .iter()
        .copied()
        .find(|v| *v >= fence_lo)
        .unwrap_or(min);
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|v| *v <= fence_hi)
        .unwrap_or(max);
    let outliers: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v < fence_lo || *v > fence_hi)
        .collect();

    // Freedman-Diaconis bin width with a sane fallback for degenerate IQR.
    let range = max - min;
    let histogram = if range <= 0.0 {
        Histogram {
            edges: vec![min - 0.5, min + 0.5],
            counts: vec![n],
        }
    } else {
        let fd = 2.0 * iqr / (n as f64).cbrt();
        let width = if fd > 0.0 { fd } else { range / 10.0 };
        let bins = ((range / width).ceil() as usize).clamp(1, 200);
        let mut counts = vec![0usize; bins];
        for &v in values {
            let mut b = ((v - min) / range * bins as f64) as usize;
            if b >= bins {
                b = bins - 1;
            }
            counts[b] += 1;
        }
        let edges = (0..=bins)
            .map(|i| min + range * i as f64 / bins as f64)
            .collect();
        Histogram { edges, counts }
    };

    // Silverman bandwidth; the grid spans the data plus five bandwidths so
    // the kernel mass inside the grid stays within 1e-3 of one.
    let iqr_scale = iqr / 1.34;
    let spread = if sd > 0.0 && iqr_scale > 0.0 {
        sd.min(iqr_scale)
    } else if sd > 0.0 {
        sd
    } else {
        (mean.abs() + 1.0) * 1e-9
    };
    let bandwidth = 0.9 * spread * (n as f64).powf(-0.2);
    let grid_n = 512;
    let (lo, hi) = (min - 5.0 * bandwidth, max + 5.0 * bandwidth);
    let mut grid = Vec::with_capacity(grid_n);
    let mut density = Vec::with_capacity(grid_n);
    let norm = 1.0 / (n as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    for i in 0..grid_n {
        let x = lo + (hi - lo) * i as f64 / (grid_n - 1) as f64;
        let mut acc = 0.0;
        for &v in values {
            let z = (x - v) / bandwidth;
            if z.abs() < 8.0 {
                acc += (-0.5 * z * z).exp();
            }
        }
        grid.push(x);
        density.push(acc * norm);
    }

    SummaryStats {
        n,
        mean,
        sd,
        min,
        max,
        histogram,
        kde: KdeCurve {
            grid,
            density,
            bandwidth,
        },
        boxplot: BoxplotStats {
            q1,
            median,
            q3,
            whisker_low,
            whisker_high,
            outliers,
        },
    }
}

/// Summarises an n x 9 QoI matrix column by column.
pub fn summarize(matrix: &[[f64; 9]]) -> Result<EnsembleSummary> {
    if matrix.len() < 2 {
        return Err(CoreError::InvalidConfig(format!(
            "summary needs at least 2 samples, got {}",
            matrix.len()
        )));
    }
    let mut stats = Vec::with_capacity(9);
    for k in 0..9 {
        let column: Vec<f64> = matrix.iter().map(|row| row[k]).collect();
        stats.push(summary_stats(&column));
    }
    Ok(EnsembleSummary {
        n: matrix.len(),
        qoi_names: QOI_NAMES.iter().map(|s| s.to_string()).collect(),
        stats,
    })
}

/// Mean ordering of one QoI across populations, with confidence context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QoiOrdering {
    pub qoi: String,
    /// Labels sorted by ascending mean.
    pub order: Vec<String>,
    pub means: Vec<f64>,
    /// Standard error of each mean (sd / sqrt(n)), aligned with `order`.
    pub std_errors: Vec<f64>,
    /// Label pairs whose mean +/- standard-error intervals overlap.
    pub overlaps: Vec<(String, String)>,
    /// Label pairs with exactly equal means (identical reruns).
    pub ties: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationComparison {
    pub orderings: Vec<QoiOrdering>,
}

/// Orders population means per QoI. Orderings are reported as measured;
/// no direction is assumed or enforced.
pub fn compare_populations(
    studies: &[(String, EnsembleSummary)],
) -> Result<PopulationComparison> {
    if studies.len() < 2 {
        return Err(CoreError::InvalidConfig(
            "population comparison needs at least two studies".into(),
        ));
    }
    let names = &studies[0].1.qoi_names;
    for (label, summary) in studies {
        if &summary.qoi_names != names {
            return Err(CoreError::InvalidConfig(format!(
                "mismatched QoI sets in study {label}"
            )));
        }
    }

    let mut orderings = Vec::with_capacity(names.len());
    for (k, qoi) in names.iter().enumerate() {
        let mut entries: Vec<(String, f64, f64)> = studies
            .iter()
            .map(|(label, s)| {
                let st = &s.stats[k];
                (
                    label.clone(),
                    st.mean,
                    st.sd / (st.n.max(1) as f64).sqrt(),
                )
            })
            .collect();
        entries.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite means"));

        let mut overlaps = Vec::new();
        let mut ties = Vec::new();
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let (la, ma, ea) = (&entries[i].0, entries[i].1, entries[i].2);
                let (lb, mb, eb) = (&entries[j].0, entries[j].1, entries[j].2);
                if ma == mb {
                    ties.push((la.clone(), lb.clone()));
                }
                if (ma - mb).abs() <= ea + eb {
                    overlaps.push((la.clone(), lb.clone()));
                }
            }
        }
        orderings.push(QoiOrdering {
            qoi: qoi.clone(),
            order: entries.iter().map(|(l, _, _)| l.clone()).collect(),
            means: entries.iter().map(|(_, m, _)| *m).collect(),
            std_errors: entries.iter().map(|(_, _, e)| *e).collect(),
            overlaps,
            ties,
        });
    }
    Ok(PopulationComparison { orderings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Surrogate propagating IOP straight through to every QoI.
    struct IopPassThrough;

    impl QoiModel for IopPassThrough {
        fn run(&self, inputs: InputValues) -> Result<QoIVector> {
            Ok(QoIVector::from_array([inputs.iop; 9]))
        }
    }

    fn iop_study(n: usize, seed: u64) -> PropagationStudy {
        let iop = crate::dist::lognormal_from_moments(14.7, 2.8).unwrap();
        PropagationStudy::iop_only(Population::Baseline, iop, n, seed)
    }

    #[test]
    fn frozen_study_gives_identical_rows() {
        let study = PropagationStudy {
            label: "frozen".into(),
            stochastic: vec![],
            frozen: vec![
                ("SP".into(), 120.0),
                ("DP".into(), 80.0),
                ("IOP".into(), 14.7),
                ("RLTp".into(), 9.5),
            ],
            n: 16,
            seed: 1,
        };
        let result = propagate(&study, &IopPassThrough).unwrap();
        assert_eq!(result.rows.len(), 16);
        for row in &result.rows {
            assert_eq!(row.qoi.as_array(), [14.7; 9]);
        }
    }

    #[test]
    fn passthrough_recovers_input_moments() {
        let study = iop_study(20_000, 42);
        let result = propagate(&study, &IopPassThrough).unwrap();
        let summary = summarize(&result.matrix()).unwrap();
        let stat = summary.stat("CRA_ps").unwrap();
        // 3 sigma / sqrt(n) CLT window around the analytic moments.
        let tol = 3.0 * 2.8 / (20_000f64).sqrt();
        assert_abs_diff_eq!(stat.mean, 14.7, epsilon = tol);
        assert_abs_diff_eq!(stat.sd, 2.8, epsilon = 0.06);
    }

    #[test]
    fn study_validation_catches_gaps_and_overlaps() {
        let mut study = iop_study(10, 1);
        study.frozen.retain(|(n, _)| n != "RLTp");
        assert!(study.validate().is_err());

        let mut study = iop_study(10, 1);
        study.frozen.push(("IOP".into(), 15.0));
        assert!(study.validate().is_err());

        let mut study = iop_study(10, 1);
        study.frozen.push(("XYZ".into(), 1.0));
        assert!(study.validate().is_err());
    }

    #[test]
    fn fragility_threshold_aborts_study() {
        struct Flaky;
        impl QoiModel for Flaky {
            fn run(&self, inputs: InputValues) -> Result<QoIVector> {
                if inputs.iop > 14.0 {
                    Err(CoreError::NumericalBlowUp("boom".into()))
                } else {
                    Ok(QoIVector::from_array([1.0; 9]))
                }
            }
        }
        let err = propagate(&iop_study(200, 3), &Flaky).unwrap_err();
        assert!(err.to_string().contains("model fragility"));
    }

    #[test]
    fn sparse_failures_are_recorded_not_fatal() {
        struct MostlyFine;
        impl QoiModel for MostlyFine {
            fn run(&self, inputs: InputValues) -> Result<QoIVector> {
                if inputs.iop > 25.0 {
                    // Roughly the 99.9th percentile of the IOP lognormal.
                    Err(CoreError::NumericalBlowUp("rare".into()))
                } else {
                    Ok(QoIVector::from_array([inputs.iop; 9]))
                }
            }
        }
        let result = propagate(&iop_study(2000, 7), &MostlyFine).unwrap();
        assert_eq!(result.rows.len() + result.failures.len(), 2000);
        for f in &result.failures {
            assert!(f.inputs.iop > 25.0);
        }
    }

    #[test]
    fn propagation_is_seed_deterministic() {
        let a = propagate(&iop_study(500, 9), &IopPassThrough).unwrap();
        let b = propagate(&iop_study(500, 9), &IopPassThrough).unwrap();
        let (ma, mb) = (a.matrix(), b.matrix());
        assert_eq!(ma, mb);
        let c = propagate(&iop_study(500, 10), &IopPassThrough).unwrap();
        assert_ne!(ma, c.matrix());
    }

    #[test]
    fn constant_column_summary() {
        let stat = summary_stats(&[3.25; 50]);
        assert_eq!(stat.mean, 3.25);
        assert_eq!(stat.sd, 0.0);
        assert!(stat.boxplot.outliers.is_empty());
        assert_eq!(stat.histogram.counts.iter().sum::<usize>(), 50);
    }

    #[test]
    fn normal_column_quartiles() {
        let d = Distribution1D::Normal { mean: 0.0, sd: 1.0 };
        let values: Vec<f64> = (0..100_000)
            .map(|j| d.sample_with(&mut sample_rng(21, 0, j)))
            .collect();
        let stat = summary_stats(&values);
        assert_abs_diff_eq!(stat.boxplot.q1, -0.6745, epsilon = 0.02);
        assert_abs_diff_eq!(stat.boxplot.q3, 0.6745, epsilon = 0.02);
        assert_abs_diff_eq!(stat.boxplot.median, 0.0, epsilon = 0.02);
    }

    #[test]
    fn histogram_counts_sum_to_n() {
        let values: Vec<f64> = (0..997).map(|i| (i as f64 * 0.37).sin() * 5.0).collect();
        let stat = summary_stats(&values);
        assert_eq!(stat.histogram.counts.iter().sum::<usize>(), 997);
        assert!(stat.boxplot.q1 <= stat.boxplot.median);
        assert!(stat.boxplot.median <= stat.boxplot.q3);
    }

    #[test]
    fn kde_integrates_to_one_and_finds_modes() {
        // Bimodal mixture: two Gaussians four sigma apart.
        let d1 = Distribution1D::Normal { mean: -2.0, sd: 0.5 };
        let d2 = Distribution1D::Normal { mean: 2.0, sd: 0.5 };
        let mut values = Vec::new();
        for j in 0..4000u64 {
            let d = if j % 2 == 0 { &d1 } else { &d2 };
            values.push(d.sample_with(&mut sample_rng(33, 0, j)));
        }
        let stat = summary_stats(&values);
        assert_relative_eq!(stat.kde.mass(), 1.0, epsilon = 1e-3);
        let peaks = stat.kde.local_maxima();
        let lows = peaks
            .iter()
            .filter(|&&i| stat.kde.grid[i] < 0.0)
            .count();
        let highs = peaks.len() - lows;
        assert!(lows >= 1 && highs >= 1, "expected two modes, got {peaks:?}");
    }

    #[test]
    fn outliers_lie_outside_fences() {
        let mut values: Vec<f64> = (0..500).map(|i| (i % 97) as f64 / 97.0).collect();
        values.push(50.0);
        values.push(-50.0);
        let stat = summary_stats(&values);
        let iqr = stat.boxplot.q3 - stat.boxplot.q1;
        for o in &stat.boxplot.outliers {
            assert!(
                *o < stat.boxplot.q1 - 1.5 * iqr || *o > stat.boxplot.q3 + 1.5 * iqr
            );
        }
        assert!(stat.boxplot.outliers.contains(&50.0));
    }

    #[test]
    fn population_comparison_orders_and_ties() {
        struct OffsetModel(f64);
        impl QoiModel for OffsetModel {
            fn run(&self, inputs: InputValues) -> Result<QoIVector> {
                Ok(QoIVector::from_array([inputs.iop + self.0; 9]))
            }
        }
        let study = iop_study(2000, 5);
        let low = summarize(&propagate(&study, &OffsetModel(0.0)).unwrap().matrix()).unwrap();
        let high = summarize(&propagate(&study, &OffsetModel(10.0)).unwrap().matrix()).unwrap();
        let cmp = compare_populations(&[("low".into(), low.clone()), ("high".into(), high)])
            .unwrap();
        for ordering in &cmp.orderings {
            assert_eq!(ordering.order, vec!["low".to_string(), "high".to_string()]);
            assert_abs_diff_eq!(ordering.means[1] - ordering.means[0], 10.0, epsilon = 1e-9);
            assert!(ordering.ties.is_empty());
        }

        // Identical studies tie everywhere.
        let cmp = compare_populations(&[("a".into(), low.clone()), ("b".into(), low)]).unwrap();
        for ordering in &cmp.orderings {
            assert_eq!(ordering.ties.len(), 1);
        }
    }

    use crate::rng::sample_rng;
}
