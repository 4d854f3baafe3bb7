//! Result persistence: atomic writes and the CSV/JSON emitters shared by
//! the commands. Floats are written with Rust's shortest round-trip
//! formatting, which is deterministic across runs and worker counts.

use crate::error::{CliError, CliResult};
use hemo_uq_core::sensitivity::{SensitivityIndices, SensitivityReport};
use hemo_uq_core::solver::{QoIVector, SimulationResult, QOI_NAMES};
use hemo_uq_core::uq::{EnsembleSummary, PropagationResult};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Writes via a temp file + rename so readers never see partial results.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io("write", format!("{}: {e}", dir.display())))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::io("write", format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io("write", format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io("write", e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Trajectory CSV: `t,p_<node>...,q_<observable>...`.
pub fn trajectory_csv(result: &SimulationResult) -> String {
    let mut out = String::new();
    out.push('t');
    for name in &result.node_names {
        let _ = write!(out, ",p_{name}");
    }
    for name in &result.observable_names {
        let _ = write!(out, ",q_{name}");
    }
    out.push('\n');
    for (i, t) in result.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for p in &result.node_pressures[i] {
            let _ = write!(out, ",{p}");
        }
        for q in &result.observable_flows[i] {
            let _ = write!(out, ",{q}");
        }
        out.push('\n');
    }
    out
}

/// QoI JSON keyed by the output names.
pub fn qoi_json(qoi: &QoIVector) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(qoi)
        .map_err(|e| CliError::io("write", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Raw propagation matrix: `sample_id,IOP,RLTp,SP,DP,<nine QoIs>`.
pub fn raw_matrix_csv(result: &PropagationResult) -> String {
    let mut out = String::from("sample_id,IOP,RLTp,SP,DP");
    for name in QOI_NAMES {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for row in &result.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            row.sample, row.inputs.iop, row.inputs.rltp, row.inputs.sp, row.inputs.dp
        );
        for v in row.qoi.as_array() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Failed samples: `sample_id,IOP,RLTp,SP,DP,message`.
pub fn failures_csv(result: &PropagationResult) -> String {
    let mut out = String::from("sample_id,IOP,RLTp,SP,DP,message\n");
    for f in &result.failures {
        let _ = writeln!(
            out,
            "{},{},{},{},{},\"{}\"",
            f.sample,
            f.inputs.iop,
            f.inputs.rltp,
            f.inputs.sp,
            f.inputs.dp,
            f.message.replace('"', "'")
        );
    }
    out
}

#[derive(Serialize)]
struct QoiMoments {
    mean: f64,
    sd: f64,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    label: &'a str,
    n_requested: usize,
    n_used: usize,
    n_failed: usize,
    qois: std::collections::BTreeMap<&'a str, QoiMoments>,
}

/// Summary JSON mirroring the mean/sd table layout.
pub fn summary_json(
    result: &PropagationResult,
    summary: &EnsembleSummary,
) -> CliResult<String> {
    let mut qois = std::collections::BTreeMap::new();
    for (name, stat) in summary.qoi_names.iter().zip(&summary.stats) {
        qois.insert(
            name.as_str(),
            QoiMoments {
                mean: stat.mean,
                sd: stat.sd,
            },
        );
    }
    let doc = SummaryDoc {
        label: &result.label,
        n_requested: result.n_requested,
        n_used: result.rows.len(),
        n_failed: result.failures.len(),
        qois,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::io("write", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Per-QoI plot data files (histogram, KDE, boxplot).
pub fn write_plot_data(dir: &Path, summary: &EnsembleSummary) -> CliResult<()> {
    for (name, stat) in summary.qoi_names.iter().zip(&summary.stats) {
        let mut hist = String::from("bin_lo,bin_hi,count\n");
        for (i, count) in stat.histogram.counts.iter().enumerate() {
            let _ = writeln!(
                hist,
                "{},{},{count}",
                stat.histogram.edges[i],
                stat.histogram.edges[i + 1]
            );
        }
        write_atomic(&dir.join(format!("hist_{name}.csv")), hist.as_bytes())?;

        let mut kde = String::from("x,density\n");
        for (x, d) in stat.kde.grid.iter().zip(&stat.kde.density) {
            let _ = writeln!(kde, "{x},{d}");
        }
        write_atomic(&dir.join(format!("kde_{name}.csv")), kde.as_bytes())?;

        write_json(&dir.join(format!("box_{name}.json")), &stat.boxplot)?;
    }
    Ok(())
}

/// Index report CSV:
/// `qoi,input,estimator,n,first_order,total_order,first_clipped,total_clipped`.
pub fn indices_csv(runs: &[&SensitivityIndices]) -> String {
    let mut out =
        String::from("qoi,input,estimator,n,first_order,total_order,first_clipped,total_clipped\n");
    for idx in runs {
        for (k, qoi) in idx.qoi_names.iter().enumerate() {
            for (i, input) in idx.input_names.iter().enumerate() {
                let (fc, tc) = idx.clipped(i, k);
                let _ = writeln!(
                    out,
                    "{qoi},{input},{},{},{},{},{fc},{tc}",
                    idx.estimator.as_str(),
                    idx.n,
                    idx.first(i, k),
                    idx.total(i, k)
                );
            }
        }
    }
    out
}

/// Convergence history CSV mirroring the (n, n*) pair layout.
pub fn convergence_csv(reports: &[&SensitivityReport]) -> String {
    let mut out = String::from("estimator,n_star,n,max_err_first,max_err_total,converged\n");
    for report in reports {
        for step in &report.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                report.estimator.as_str(),
                step.n_prev,
                step.n,
                step.err_first,
                step.err_total,
                step.within(report.threshold)
            );
        }
    }
    out
}
