use std::fs;
use std::path::Path;

use kcm::cli::run;

const SMALL: &str = r#"
[data.generate]
num_classes = 6
feature_dim = 6
max_per_class = 120
imbalance = 12.0
val_per_class = 30
test_per_class = 30

[arch]
hidden = [8]
epochs = 10

[forgetting]
epochs_per_phase = 50
"#;

fn kcm(args: &[&str]) -> i32 {
    run(std::iter::once("kcm").chain(args.iter().copied()))
}

fn config(dir: &Path, extra: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_requires_a_seed_and_does_no_work_without_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    assert_eq!(kcm(&["generate", "--out", s(&out)]), 2);
    assert!(!out.exists());
}

#[test]
fn generate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(kcm(&["generate", "--config", &cfg, "--seed", "3", "--out", s(&a)]), 0);
    assert_eq!(kcm(&["generate", "--config", &cfg, "--seed", "3", "--out", s(&b)]), 0);
    for f in ["dataset.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["spec"]["seed"], 3);
    assert!(fs::read_to_string(a.join("config.resolved.toml")).unwrap().contains("seed = 3"));
}

#[test]
fn train_then_eval_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out = dir.path().join("run");
    assert_eq!(kcm(&["train", "--config", &cfg, "--seed", "1", "--out", s(&out)]), 0);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("train_summary.json")).unwrap()).unwrap();
    let p = &summary["partition"];
    let total = p["x1"].as_u64().unwrap() + p["x2"].as_u64().unwrap() + p["x3"].as_u64().unwrap();
    assert_eq!(total, 6 * 30);
    assert_eq!(summary["warnings"], 0);

    assert_eq!(kcm(&["eval", "--config", &cfg, "--epsilon", "1.0", "--out", s(&out)]), 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kcm"]["lm_rate"], 100.0);
    assert_eq!(report["small"]["lm_rate"], 0.0);
    assert!(out.join("report.txt").exists() && out.join("decisions.csv").exists());

    assert_eq!(kcm(&["infer", "--config", &cfg, "--out", s(&out)]), 0);
    let log = fs::read_to_string(out.join("decisions.ndjson")).unwrap();
    assert_eq!(log.lines().count(), 6 * 30);
}

#[test]
fn eval_without_models_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    assert_eq!(kcm(&["eval", "--config", &cfg, "--out", s(&dir.path().join("empty"))]), 1);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(kcm(&["train", "--seed", "1", "--backend", "carrier-pigeon", "--out", s(&out)]), 2);
    assert_eq!(kcm(&["eval", "--epsilon", "1.5", "--out", s(&out)]), 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[kcm]\nepsilon = \"high\"\n").unwrap();
    assert_eq!(kcm(&["eval", "--config", s(&bad), "--out", s(&out)]), 2);
    assert_eq!(kcm(&["teleport"]), 2);
}

#[test]
fn unreadable_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "id,f0,label\n0,zero,a\n").unwrap();
    let cfg = config(dir.path(), &format!("\n[data]\npath = {:?}\n", s(&csv)));
    assert_eq!(kcm(&["train", "--config", &cfg, "--seed", "0", "--out", s(&dir.path().join("o"))]), 3);
}

#[test]
fn unreachable_backend_still_trains_with_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = config(dir.path(), "\n[backend.http]\nmax_retries = 0\ntimeout_ms = 500\n");
    let out = dir.path().join("o");
    let url = format!("http://127.0.0.1:{port}/");
    assert_eq!(kcm(&["train", "--config", &cfg, "--seed", "0", "--backend", &url, "--out", s(&out)]), 0);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("train_summary.json")).unwrap()).unwrap();
    assert!(summary["warnings"].as_u64().unwrap() > 0);
    assert_eq!(summary["partition"]["x2"], 0);
    let snapshot = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(snapshot.contains("kind = \"http\""));
}

#[test]
fn forget_with_one_phase_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "phases = 1\n");
    let out = dir.path().join("f");
    assert_eq!(kcm(&["forget", "--config", &cfg, "--seed", "2", "--out", s(&out)]), 0);
    let reports: serde_json::Value = serde_json::from_slice(&fs::read(out.join("forgetting.json")).unwrap()).unwrap();
    for r in reports.as_array().unwrap() {
        assert_eq!(r["score"], 0.0);
    }
}

#[test]
fn ablate_writes_paired_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out = dir.path().join("ab");
    assert_eq!(kcm(&["ablate", "--config", &cfg, "--seed", "2", "--out", s(&out)]), 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(out.join("ablation.json")).unwrap()).unwrap();
    assert_eq!(r["kcm"]["kind"], "kan");
    assert_eq!(r["mcm"]["kind"], "mlp");
    assert_eq!(r["kcm"]["pool_hash"], r["mcm"]["pool_hash"]);
}
