//! End-to-end tests of the `treeguard` binary: exit codes, artifact layout,
//! output-directory precedence, configuration overrides, stage isolation,
//! and report consistency. Every invocation spawns the real executable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// Fresh command for the built binary with a hermetic environment: the
/// out-dir env var is always cleared so the host environment cannot leak in.
fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_treeguard"));
    c.env_remove("TREEGUARD_OUT_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawning the treeguard binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("binary terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a small synthetic-dataset manifest and returns its path.
fn write_manifest(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("manifest.json");
    let body = format!(
        r#"{{"datasets": [{{"name": "blobs", "synthetic": {{"n": {n}, "features": 3, "classes": 2, "spread": 0.3, "seed": 7}}}}]}}"#
    );
    fs::write(&path, body).unwrap();
    path
}

/// Common fast-experiment arguments: one grid cell, one method, two reps.
fn fast_args(manifest: &Path, out: &Path) -> Vec<String> {
    [
        "--manifest",
        &manifest.display().to_string(),
        "--datasets",
        "blobs",
        "--methods",
        "rf",
        "--reps",
        "2",
        "--depths",
        "3",
        "--trees",
        "5",
        "--budget",
        "2",
        "--out",
        &out.display().to_string(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn read_value(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| {
        panic!("reading {}: {e}", path.display());
    }))
    .unwrap()
}

/// Asserts that every numeric field whose key ends with "seconds" is zero.
fn assert_times_stripped(v: &Value, path: &str) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if k.ends_with("seconds") {
                    if let Some(f) = child.as_f64() {
                        assert_eq!(f, 0.0, "{path}.{k} not zeroed in canonical output");
                    }
                }
                assert_times_stripped(child, &format!("{path}.{k}"));
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                assert_times_stripped(child, &format!("{path}[{i}]"));
            }
        }
        _ => {}
    }
}

fn median_of(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

#[test]
fn experiment_succeeds_and_writes_the_full_artifact_tree() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out = tmp.path().join("out");

    let res = run(bin().args(fast_args(&manifest, &out)).arg("experiment"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));

    for f in [
        "blobs/splits.json",
        "blobs/search.json",
        "blobs/train.json",
        "blobs/verify.json",
        "blobs/models/rf-rep0.json",
        "blobs/models/rf-rep1.json",
        "blobs/hpo/calibration-rf.json",
        "blobs/hpo/rf-rep0.json",
        "blobs/hpo/rf-rep1.json",
        "report/report.json",
        "report/report_canonical.json",
        "report/report.csv",
        "report/report_canonical.csv",
        "report/grid.csv",
        "report/grid_canonical.csv",
    ] {
        assert!(out.join(f).is_file(), "missing artifact {f}");
    }

    // The recorded medians must equal a recomputation from the row data.
    let train = read_value(&out.join("blobs/train.json"));
    let rows = train["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2, "expected 2 completed rows");
    for metric in ["acc", "adv_acc"] {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r["method"] == "rf")
            .map(|r| r[metric].as_f64().unwrap())
            .collect();
        let medians = train["medians"].as_array().unwrap();
        let rec = medians.iter().find(|m| m["method"] == "rf").unwrap();
        assert_eq!(rec["reps_completed"].as_u64(), Some(2));
        assert_eq!(
            rec[metric].as_f64().unwrap(),
            median_of(vals),
            "median of {metric} disagrees with its rows"
        );
    }

    // Canonical twins carry no wall-clock noise; primary files keep it.
    let canonical = read_value(&out.join("report/report_canonical.json"));
    assert_times_stripped(&canonical, "report");
    let primary = read_value(&out.join("report/report.json"));
    let total = primary["datasets"][0]["grid"][0]["solve_seconds"]
        .as_f64()
        .unwrap();
    assert!(total >= 0.0);

    // The report names the two methods without recorded runs as empty slots.
    let methods = primary["datasets"][0]["methods"].as_array().unwrap();
    let notes: Vec<(&str, Option<&str>)> = methods
        .iter()
        .map(|m| (m["method"].as_str().unwrap(), m["note"].as_str()))
        .collect();
    assert!(notes.contains(&("treant", Some("no runs recorded"))));
    assert!(notes.contains(&("robust-boost", Some("no runs recorded"))));
}

#[test]
fn starved_wall_caps_degrade_to_exit_code_2() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out = tmp.path().join("out");

    let res = run(bin()
        .args(fast_args(&manifest, &out))
        .args(["--cap-search", "0.000001", "--cap-cell", "0.000001"])
        .arg("experiment"));
    assert_eq!(code(&res), 2, "stderr: {}", stderr(&res));
    assert!(
        stderr(&res).contains("timeout(s)/exclusion(s)"),
        "stderr should summarize the partial run: {}",
        stderr(&res)
    );

    // The starved cells are on record rather than silently absent.
    let search = read_value(&out.join("blobs/search.json"));
    assert_eq!(search["grid"][0]["timed_out"], Value::Bool(true));
    assert!(search["eps_hat"].is_null());
    let train = read_value(&out.join("blobs/train.json"));
    let excluded = train["excluded"].as_array().unwrap();
    assert_eq!(excluded.len(), 2, "both repetitions must be excluded");
    assert!(excluded[0]["reason"]
        .as_str()
        .unwrap()
        .contains("no calibrated radius"));
    // Verification of nothing is an empty verification, not a crash.
    let verify = read_value(&out.join("blobs/verify.json"));
    assert_eq!(verify["rows"].as_array().unwrap().len(), 0);
}

#[test]
fn stage_isolation_errors_name_the_missing_stage() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out = tmp.path().join("out");

    // train before split: the split artifact is the missing piece.
    let res = run(bin().args(fast_args(&manifest, &out)).arg("train"));
    assert_eq!(code(&res), 1);
    assert!(
        stderr(&res).contains("treeguard split"),
        "stderr: {}",
        stderr(&res)
    );

    // split, then train without the search stage: the radius is missing.
    let res = run(bin().args(fast_args(&manifest, &out)).arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let res = run(bin().args(fast_args(&manifest, &out)).arg("train"));
    assert_eq!(code(&res), 1);
    let err = stderr(&res);
    assert!(err.contains("treeguard search-eps"), "stderr: {err}");
    assert!(err.contains("--eps-hat"), "stderr: {err}");

    // verify before train.
    let res = run(bin().args(fast_args(&manifest, &out)).arg("verify"));
    assert_eq!(code(&res), 1);
    assert!(
        stderr(&res).contains("treeguard train"),
        "stderr: {}",
        stderr(&res)
    );

    // report with no stage outputs at all.
    let empty = tmp.path().join("empty");
    let res = run(bin().args(fast_args(&manifest, &empty)).arg("report"));
    assert_eq!(code(&res), 1);
    assert!(
        stderr(&res).contains("no stage outputs"),
        "stderr: {}",
        stderr(&res)
    );
}

#[test]
fn bad_inputs_exit_with_code_1() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out = tmp.path().join("out");

    // A dataset name the manifest does not know.
    let res = run(bin()
        .args([
            "--manifest",
            &manifest.display().to_string(),
            "--datasets",
            "nope",
            "--out",
            &out.display().to_string(),
        ])
        .arg("split"));
    assert_eq!(code(&res), 1);
    assert!(
        stderr(&res).contains("not in the manifest"),
        "stderr: {}",
        stderr(&res)
    );

    // A config file with an unknown key is rejected, not ignored.
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"bogus_knob": 1}"#).unwrap();
    let res = run(bin()
        .args(["--config", &bad.display().to_string()])
        .arg("split"));
    assert_eq!(code(&res), 1);
    assert!(
        stderr(&res).contains("bogus_knob"),
        "stderr: {}",
        stderr(&res)
    );
}

#[test]
fn out_dir_precedence_is_flag_then_env_then_config() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let from_config = tmp.path().join("from_config");
    let from_env = tmp.path().join("from_env");
    let from_flag = tmp.path().join("from_flag");

    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"manifest": "{}", "datasets": ["blobs"], "repetitions": 2,
                "grid": {{"depths": [3], "trees": [5]}},
                "out_dir": "{}"}}"#,
            manifest.display(),
            from_config.display()
        ),
    )
    .unwrap();

    // Config alone: artifacts land in the configured directory.
    let res = run(bin()
        .args(["--config", &config.display().to_string()])
        .arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(from_config.join("blobs/splits.json").is_file());

    // Environment variable beats the config file.
    let res = run(bin()
        .args(["--config", &config.display().to_string()])
        .env("TREEGUARD_OUT_DIR", &from_env)
        .arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(from_env.join("blobs/splits.json").is_file());

    // The --out flag beats both.
    let res = run(bin()
        .args(["--config", &config.display().to_string()])
        .env("TREEGUARD_OUT_DIR", tmp.path().join("unused"))
        .args(["--out", &from_flag.display().to_string()])
        .arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(from_flag.join("blobs/splits.json").is_file());
    assert!(!tmp.path().join("unused").exists());
}

#[test]
fn flags_override_config_file_values() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"manifest": "{}", "datasets": ["blobs"], "repetitions": 3,
                "grid": {{"depths": [3], "trees": [5]}}}}"#,
            manifest.display()
        ),
    )
    .unwrap();

    // The config's repetition count applies when no flag is given...
    let out_a = tmp.path().join("a");
    let res = run(bin()
        .args(["--config", &config.display().to_string()])
        .args(["--out", &out_a.display().to_string()])
        .arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let splits = read_value(&out_a.join("blobs/splits.json"));
    assert_eq!(splits["reps"].as_array().unwrap().len(), 3);

    // ...and the flag wins when it is.
    let out_b = tmp.path().join("b");
    let res = run(bin()
        .args(["--config", &config.display().to_string()])
        .args(["--reps", "2", "--out", &out_b.display().to_string()])
        .arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let splits = read_value(&out_b.join("blobs/splits.json"));
    assert_eq!(splits["reps"].as_array().unwrap().len(), 2);
}

#[test]
fn schema_version_mismatches_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out = tmp.path().join("out");

    let res = run(bin().args(fast_args(&manifest, &out)).arg("split"));
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));

    // Forge a future schema version into the splits artifact.
    let path = out.join("blobs/splits.json");
    let mut v = read_value(&path);
    v["schema_version"] = Value::from(999);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();

    let res = run(bin().args(fast_args(&manifest, &out)).arg("search-eps"));
    assert_eq!(code(&res), 1);
    let err = stderr(&res);
    assert!(
        err.contains("schema version 999") && err.contains("expects 1"),
        "stderr: {err}"
    );
}

#[test]
fn split_artifacts_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_manifest(tmp.path(), 160);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    for out in [&out_a, &out_b] {
        let res = run(bin().args(fast_args(&manifest, out)).arg("split"));
        assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    }
    let a = fs::read(out_a.join("blobs/splits.json")).unwrap();
    let b = fs::read(out_b.join("blobs/splits.json")).unwrap();
    assert_eq!(a, b, "identical seeds must give identical split artifacts");
}
