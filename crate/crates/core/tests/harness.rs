use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use adam_ftrl::adversaries::{NonObliviousConfig, TightnessConfig};
use adam_ftrl::harness::output::to_json_text;
use adam_ftrl::harness::sweep::PointStatus;
use adam_ftrl::harness::{
    load_json, nonoblivious, run_experiment, run_sweep, tightness, write_outputs, ExperimentConfig,
    OutputFormat, SweepConfig,
};
use adam_ftrl::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adam-ftrl"))
}

/// JSON with the crate version blanked, so fixtures survive version bumps.
fn without_version(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v["library_version"] = serde_json::Value::Null;
    v
}

#[test]
fn two_round_csv_header() {
    let cfg: ExperimentConfig = load_json(&configs().join("simulate_two_rounds.json")).unwrap();
    let csv = run_experiment(&cfg).unwrap().table().to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,alpha_t,g_t,m_t,q_t,delta_bar_t,delta_t,clipped,loss_discounted,\
         regret_discounted,maxV_t,D_t,bound_theorem1,bound_corollary1"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: ExperimentConfig = load_json(&configs().join("simulate_random.json")).unwrap();
    let mut written = Vec::new();
    for run in ["a", "b"] {
        let res = run_experiment(&cfg).unwrap();
        let paths = write_outputs(
            &dir.path().join(run),
            OutputFormat::Both,
            &res.table(),
            &res.summary,
        )
        .unwrap();
        written.push(paths);
    }
    for (a, b) in written[0].iter().zip(&written[1]) {
        assert_eq!(
            fs::read(a).unwrap(),
            fs::read(b).unwrap(),
            "{}",
            a.display()
        );
    }
}

#[test]
fn seed_changes_random_trace() {
    let mut cfg: ExperimentConfig = load_json(&configs().join("simulate_random.json")).unwrap();
    let a = run_experiment(&cfg).unwrap().table().to_csv();
    cfg.seed += 1;
    let b = run_experiment(&cfg).unwrap().table().to_csv();
    assert_ne!(a, b);
}

#[test]
fn golden_tightness_preset() {
    let (summary, table) = tightness(&TightnessConfig::preset()).unwrap();
    assert_eq!(
        table.to_csv(),
        fs::read_to_string(fixtures().join("tightness_preset.csv")).unwrap()
    );
    assert_eq!(
        without_version(&to_json_text(&summary).unwrap()),
        without_version(&fs::read_to_string(fixtures().join("tightness_preset.json")).unwrap())
    );
}

#[test]
fn golden_nonoblivious_preset() {
    let (summary, table) = nonoblivious(&NonObliviousConfig::preset()).unwrap();
    assert_eq!(
        table.to_csv(),
        fs::read_to_string(fixtures().join("nonoblivious_preset.csv")).unwrap()
    );
    assert_eq!(
        without_version(&to_json_text(&summary).unwrap()),
        without_version(&fs::read_to_string(fixtures().join("nonoblivious_preset.json")).unwrap())
    );
}

#[test]
fn argmin_over_beta2_at_squared_beta1() {
    let cfg: SweepConfig = load_json(&configs().join("sweep_beta2.json")).unwrap();
    let res = run_sweep(&cfg).unwrap();
    let marked: Vec<f64> = res
        .rows()
        .iter()
        .filter(|r| r.annotations.iter().any(|a| a == "argmin_beta2_corollary1"))
        .map(|r| r.point["beta2"])
        .collect();
    assert_eq!(marked, vec![0.49]);
    assert!(res.summary.contracts_hold);
}

#[test]
fn separated_nonoblivious_grid() {
    let cfg: SweepConfig = load_json(&configs().join("sweep_nonoblivious.json")).unwrap();
    let res = run_sweep(&cfg).unwrap();
    assert!(res.summary.evaluated > 0);
    for r in res.rows().iter().filter(|r| r.status == PointStatus::Ok) {
        assert_eq!(r.contract_holds, Some(true), "{:?}", r.point);
    }
}

#[test]
fn single_point_sweep_matches_run() {
    let cfg: ExperimentConfig = load_json(&configs().join("simulate_random.json")).unwrap();
    let sweep: SweepConfig = serde_json::from_value(serde_json::json!({
        "mode": "simulate",
        "base": serde_json::to_value(&cfg).unwrap(),
        "grid": {"beta2": [cfg.beta2]},
    }))
    .unwrap();
    let res = run_sweep(&sweep).unwrap();
    let single = run_experiment(&cfg).unwrap().summary;
    assert_eq!(res.rows().len(), 1);
    let row = &res.rows()[0];
    let regret = row.metric("regret_discounted").unwrap();
    assert_eq!(
        serde_json::to_value(regret).unwrap(),
        serde_json::to_value(single.regret_discounted).unwrap()
    );
    let bound = serde_json::to_value(row.metric("corollary1").unwrap()).unwrap();
    let expected = single
        .bounds
        .iter()
        .find(|b| b.kind.name() == "corollary1")
        .unwrap();
    assert_eq!(
        bound,
        serde_json::to_value(expected.report.unwrap().total).unwrap()
    );
}

#[test]
fn unwritable_output_has_path_context() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let (summary, table) = tightness(&TightnessConfig::preset()).unwrap();
    let err = write_outputs(&blocker.join("out"), OutputFormat::Csv, &table, &summary).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("file"));
}

#[test]
fn cli_exit_codes() {
    let ok = bin()
        .args(["tightness", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"contract_holds\": true"));

    let missing = bin().arg("simulate").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"beta1":0.5,"beta2":0.2,"alpha":{"kind":"constant","value":1},"domain":1,
            "rounds":3,"adversary":{"kind":"random"},"bounds":["corollary1"]}"#,
    )
    .unwrap();
    let regime = bin()
        .args(["simulate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(regime.status.code(), Some(2));

    // A ratio threshold far above what the construction reaches.
    let strict = dir.path().join("strict.json");
    fs::write(&strict, r#"{"p":0.5,"D":1,"rounds":2,"min_ratio":0.9}"#).unwrap();
    let violated = bin()
        .args(["tightness", "--config"])
        .arg(&strict)
        .output()
        .unwrap();
    assert_eq!(violated.status.code(), Some(1));
}

#[test]
fn cli_writes_prefixed_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run.csv");
    let status = bin()
        .args(["simulate", "--seed", "3", "--config"])
        .arg(configs().join("simulate_random.json"))
        .arg("--out")
        .arg(&prefix)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("run.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 3);
    assert_eq!(json["schema_version"], 1);
}
