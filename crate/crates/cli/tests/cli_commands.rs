//! End-to-end checks of the `hemo-uq` binary: command round trips, exit
//! codes, and output shapes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hemo-uq"))
}

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn base_config(kind: &str) -> serde_json::Value {
    serde_json::json!({
        "model": repo_configs().join("model.default.json"),
        "solver": { "period": 1.0 },
        "experiment": { "kind": kind, "seed": 7 }
    })
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn simulate_writes_trajectory_and_qoi() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("simulate");
    config["experiment"]["values"] =
        serde_json::json!({ "SP": 120.0, "DP": 80.0, "IOP": 14.7, "RLTp": 9.5 });
    let config_path = write_config(dir.path(), "sim.json", &config);
    let out_dir = dir.path().join("out");

    run_ok(bin().args(["simulate", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));

    let qoi: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("qoi.json")).unwrap()).unwrap();
    for key in [
        "CRA_ps", "CRA_es", "CRA_ed", "CRV_ps", "CRV_es", "CRV_ed", "LC_ps", "LC_es", "LC_ed",
    ] {
        assert!(qoi.get(key).is_some(), "qoi.json missing {key}");
    }
    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let header = trajectory.lines().next().unwrap();
    assert!(header.starts_with("t,p_ground,p_oa"));
    assert!(header.ends_with("q_CRA,q_CRV,q_LC"));
    assert_eq!(trajectory.lines().count() - 1, 8001);
    assert!(out_dir.join("manifest.jsonl").exists());
}

#[test]
fn propagate_smoke_run_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("propagate");
    config["experiment"]["population"] = "baseline".into();
    config["experiment"]["n"] = 100.into();
    let config_path = write_config(dir.path(), "prop.json", &config);
    let out_dir = dir.path().join("out");

    run_ok(bin().args(["propagate", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));

    let raw = std::fs::read_to_string(out_dir.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 101, "header + 100 sample rows");
    assert!(raw.starts_with("sample_id,IOP,RLTp,SP,DP,CRA_ps"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["qois"].as_object().unwrap().len(), 9);
    for qoi in ["CRA_ps", "LC_ed"] {
        assert!(out_dir.join("plots").join(format!("hist_{qoi}.csv")).exists());
        assert!(out_dir.join("plots").join(format!("kde_{qoi}.csv")).exists());
        assert!(out_dir.join("plots").join(format!("box_{qoi}.json")).exists());
    }
}

#[test]
fn propagate_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("propagate");
    config["experiment"]["population"] = "low".into();
    config["experiment"]["n"] = 50.into();
    let config_path = write_config(dir.path(), "prop.json", &config);

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(bin().args(["propagate", "--config"]).arg(&config_path).arg("--out").arg(&out_a));
    run_ok(bin().args(["propagate", "--config"]).arg(&config_path).arg("--out").arg(&out_b));
    let a = std::fs::read(out_a.join("raw.csv")).unwrap();
    let b = std::fs::read(out_b.join("raw.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sensitivity_commands_write_indices() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("sobol");
    config["experiment"]["evaluator"] = "ishigami".into();
    config["experiment"]["n"] = 1000.into();
    let config_path = write_config(dir.path(), "sobol.json", &config);
    let out_dir = dir.path().join("out");

    let out = run_ok(bin().args(["sobol", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("evaluation budget = 5000"),
        "budget not printed up front: {stdout}"
    );
    let indices = std::fs::read_to_string(out_dir.join("indices.csv")).unwrap();
    assert!(indices
        .starts_with("qoi,input,estimator,n,first_order,total_order,first_clipped,total_clipped"));
    assert_eq!(indices.lines().count(), 1 + 3, "header + one row per input");
}

#[test]
fn converge_on_ishigami_writes_four_error_rows_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("converge");
    config["experiment"]["evaluator"] = "ishigami".into();
    config["experiment"]["method"] = "both".into();
    let config_path = write_config(dir.path(), "conv.json", &config);
    let out_dir = dir.path().join("out");

    run_ok(bin().args(["converge", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));
    let convergence = std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let pf_rows = convergence.lines().filter(|l| l.starts_with("pick_freeze")).count();
    let fast_rows = convergence.lines().filter(|l| l.starts_with("fast")).count();
    assert_eq!(pf_rows, 4, "default 5-size schedule gives 4 consecutive pairs");
    assert_eq!(fast_rows, 4);
    assert!(out_dir.join("cross_validation.json").exists());
}

#[test]
fn missing_model_file_exits_2_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("simulate");
    config["model"] = "/nonexistent/model.json".into();
    config["experiment"]["values"] =
        serde_json::json!({ "SP": 120.0, "DP": 80.0, "IOP": 14.7, "RLTp": 9.5 });
    let config_path = write_config(dir.path(), "sim.json", &config);

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/model.json"));
}

#[test]
fn short_horizon_fails_preflight_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("simulate");
    config["solver"]["t_end"] = 1.5.into();
    config["experiment"]["values"] =
        serde_json::json!({ "SP": 120.0, "DP": 80.0, "IOP": 14.7, "RLTp": 9.5 });
    let config_path = write_config(dir.path(), "sim.json", &config);

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least two cardiac cycles"));
    // Preflight must reject before producing any results.
    assert!(!dir.path().join("out").join("trajectory.csv").exists());
}

#[test]
fn validate_reports_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    // Corrupt model: negative resistance AND bad capacitance.
    let model_text =
        std::fs::read_to_string(repo_configs().join("model.default.json")).unwrap();
    let mut model: serde_json::Value = serde_json::from_str(&model_text).unwrap();
    model["resistances"]["rv1"] = (-5.0).into();
    model["capacitances"]["lc"] = 0.0.into();
    let model_path = write_config(dir.path(), "model.json", &model);

    let mut config = base_config("propagate");
    config["model"] = model_path.display().to_string().into();
    config["experiment"]["population"] = "baseline".into();
    config["experiment"]["n"] = 10.into();
    config["inputs"] = serde_json::json!({
        "map_mode": false,
        "entries": {
            "SP": { "kind": "normal", "mean": 124.1, "sd": 11.1 },
            "DP": { "kind": "normal", "mean": 77.5, "sd": 7.1 },
            "IOP": { "kind": "unknown_kind", "x": 1.0 },
            "RLTp": { "kind": "normal", "mean": 9.5, "sd": 2.2 }
        }
    });
    let config_path = write_config(dir.path(), "bad.json", &config);

    let out = bin().args(["validate", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("non-positive resistance rv1"), "{stdout}");
    assert!(stdout.contains("non-positive capacitance lc"), "{stdout}");
    assert!(stdout.contains("input IOP"), "{stdout}");
}

#[test]
fn validate_accepts_shipped_configs() {
    for name in [
        "simulate.baseline.json",
        "propagate.baseline.json",
        "propagate.low.json",
        "propagate.high.json",
        "sobol.map.json",
        "fast.map.json",
        "converge.simulator.json",
        "converge.ishigami.json",
    ] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(repo_configs().join(name))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{name} failed validation: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(
            stdout.contains("valid, 2 uncalibrated-parameter warnings"),
            "{name}: {stdout}"
        );
    }
}

#[test]
fn kind_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("propagate");
    config["experiment"]["population"] = "baseline".into();
    let config_path = write_config(dir.path(), "prop.json", &config);
    let out = bin()
        .args(["sobol", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tabulated_waveform_csv_is_supported() {
    let dir = tempfile::tempdir().unwrap();
    // Coarse systolic-looking profile over one period.
    let wave = "t,pressure\n0.0,0.2\n0.1,0.9\n0.2,1.0\n0.35,0.7\n0.5,0.55\n0.7,0.0\n0.9,0.1\n";
    std::fs::write(dir.path().join("wave.csv"), wave).unwrap();

    let mut config = base_config("simulate");
    config["solver"]["waveform"] =
        serde_json::json!({ "kind": "tabulated_csv", "path": "wave.csv" });
    config["experiment"]["values"] =
        serde_json::json!({ "SP": 120.0, "DP": 80.0, "IOP": 14.7, "RLTp": 9.5 });
    let config_path = write_config(dir.path(), "sim.json", &config);
    let out_dir = dir.path().join("out");
    run_ok(bin().args(["simulate", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));

    // The source column peaks at the tabulated maximum (rescaled to SP).
    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let oa_col = 2; // t, p_ground, p_oa
    let max_oa = trajectory
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(oa_col).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((max_oa - 120.0).abs() < 1e-6, "OA peak {max_oa}");
}

#[test]
fn unphysiological_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("simulate");
    // SP below DP: the waveform cannot be built; numerical failure class.
    config["experiment"]["values"] =
        serde_json::json!({ "SP": 70.0, "DP": 80.0, "IOP": 14.7, "RLTp": 9.5 });
    let config_path = write_config(dir.path(), "sim.json", &config);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unphysiological pulse pressure"));
}

#[test]
fn three_population_configs_produce_comparable_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let mut keysets = Vec::new();
    let mut cra_means = Vec::new();
    for pop in ["low", "baseline", "high"] {
        let mut config = base_config("propagate");
        config["experiment"]["population"] = pop.into();
        config["experiment"]["n"] = 24.into();
        let config_path = write_config(dir.path(), &format!("{pop}.json"), &config);
        let out_dir = dir.path().join(pop);
        run_ok(bin().args(["propagate", "--config"]).arg(&config_path).arg("--out").arg(&out_dir));
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
                .unwrap();
        let mut keys: Vec<String> =
            summary["qois"].as_object().unwrap().keys().cloned().collect();
        keys.sort();
        keysets.push(keys);
        cra_means.push(summary["qois"]["CRA_ps"]["mean"].as_f64().unwrap());
    }
    // Identical QoI sets make the runs comparable; orderings are reported
    // as measured, not enforced.
    assert_eq!(keysets[0], keysets[1]);
    assert_eq!(keysets[1], keysets[2]);
    assert!(cra_means.iter().all(|m| m.is_finite()));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config("propagate");
    config["experiment"]["population"] = "baseline".into();
    config["experiment"]["n"] = 30.into();
    let config_path = write_config(dir.path(), "prop.json", &config);

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(bin().args(["propagate", "--config"]).arg(&config_path).arg("--out").arg(&out_a));
    run_ok(
        bin()
            .args(["propagate", "--config"])
            .arg(&config_path)
            .args(["--seed", "12345"])
            .arg("--out")
            .arg(&out_b),
    );
    let a = std::fs::read(out_a.join("raw.csv")).unwrap();
    let b = std::fs::read(out_b.join("raw.csv")).unwrap();
    assert_ne!(a, b, "different seeds must change the sampled inputs");
}
