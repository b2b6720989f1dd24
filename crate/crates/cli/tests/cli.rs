use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn same(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_same")).args(args).output().unwrap()
}

fn small_circle_config(dir: &Path) -> std::path::PathBuf {
    let text = r#"{
        "schema": "config_v1",
        "seed": 5,
        "dataset": {"builtin": {"model": {"name": "circle"}, "n": 300,
                    "noise": {"kind": "orthogonal_uniform", "magnitude": 0.05}}},
        "same": {"h0": 0.3, "a": 1.25, "K": 2, "tau": 0.5, "gamma": 2.0, "d": 1},
        "evaluation": {"hausdorff_resolution": 0.02}
    }"#;
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_artifacts_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_circle_config(tmp.path());
    let out = tmp.path().join("out");
    let o = same(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 9);
    assert!(out.join("denoised.csv").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("rms to manifold"));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_circle_config(tmp.path());
    let out = tmp.path().join("out");
    let files = ["noisy.csv", "denoised.csv", "metrics.json", "plot_data.csv"];
    let mut runs = Vec::new();
    for t in ["1", "3"] {
        let o = same(&["--threads", t, "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        runs.push(files.map(|f| fs::read_to_string(out.join(f)).unwrap()));
    }
    for (f, (a, b)) in files.iter().zip(runs[0].iter().zip(&runs[1])) {
        assert!(a == b, "{f} differs between thread counts");
    }
}

#[test]
fn invalid_config_exits_with_2_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_circle_config(tmp.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("\"a\": 1.25", "\"a\": 0.5");
    fs::write(&cfg, text).unwrap();
    let o = same(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("same.a"));
    let missing = same(&["run", "--config", tmp.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn verify_statuses_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let params = tmp.path().join("p.json");

    fs::write(&params, r#"{"seeds": 1, "n": 400}"#).unwrap();
    let pass = same(&["verify", "--suite", "lemma1", "--params", params.to_str().unwrap()]);
    assert_eq!(pass.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&pass.stdout).unwrap();
    assert_eq!(r["status"], "pass");

    fs::write(&params, r#"{"magnitude": 0.5}"#).unwrap();
    let skipped = same(&["verify", "--suite", "lemma1", "--params", params.to_str().unwrap()]);
    assert_eq!(skipped.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&skipped.stdout).unwrap();
    assert_eq!(r["status"], "skipped");

    fs::write(&params, r#"{"seeds": 1, "n": 400, "lemma2_constant": 1.0}"#).unwrap();
    let fail = same(&["verify", "--suite", "lemma2", "--params", params.to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(3));

    let unknown = same(&["verify", "--suite", "lemma7"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn rates_writes_table_with_null_slope_for_one_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_circle_config(tmp.path());
    let out = tmp.path().join("rates");
    let o = same(&[
        "rates", "--config", cfg.to_str().unwrap(), "--n", "300", "--repeats", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rates.json")).unwrap()).unwrap();
    assert!(t["slope_hausdorff"].is_null());
    assert_eq!(t["rows"][0]["runs"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_to_string(out.join("rates.csv")).unwrap().lines().count(), 2);
    let few = same(&["rates", "--config", cfg.to_str().unwrap(), "--n", "300", "--repeats", "2"]);
    assert_eq!(few.status.code(), Some(2));
}

#[test]
fn knn_on_a_small_labelled_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::new();
    for i in 0..120 {
        let l = if i % 2 == 0 { 1 } else { -1 };
        let t = i as f64 * 0.37;
        csv.push_str(&format!("{},{},{},{l}\n", l as f64 + 0.3 * t.sin(), 0.3 * t.cos(), 0.1 * (3.0 * t).sin()));
    }
    let data = tmp.path().join("toy.csv");
    fs::write(&data, csv).unwrap();
    let cfg = tmp.path().join("knn.json");
    fs::write(
        &cfg,
        r#"{"split": {"n_train": 40, "n_test": 80, "seed": 1},
            "same": {"h0": 0.5, "a": 1.2, "K": 1, "tau": 1.0, "gamma": 2.0, "d": 1},
            "k_max": 10}"#,
    )
    .unwrap();
    let out = tmp.path().join("knn");
    let o = same(&["knn", "--data", data.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("knn.json")).unwrap()).unwrap();
    assert_eq!(r["schema"], "knn_v1");
    assert_eq!(r["curve_raw"].as_array().unwrap().len(), 10);
    assert_eq!(r["config"]["k_max"], 10);
}

#[test]
fn config_presets_print_valid_json() {
    for p in ["swiss-roll", "s-shape", "noiseless-circle", "g241c", "g241n"] {
        let o = same(&["config", "--preset", p]);
        assert!(o.status.success());
        let _: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    }
}
