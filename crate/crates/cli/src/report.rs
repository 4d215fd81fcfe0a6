//! Report assembly: merges stage artifacts into one JSON tree plus
//! plot-ready long-format CSVs. Every file is written in two variants — the
//! full one and a canonical one with all wall-clock fields zeroed, which is
//! the target of byte-identity determinism checks.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::artifacts::{
    strip_times, write_json, Exclusion, GridCell, HeadlineSearch, MethodMedian, TrainRow,
    VerifyRow, SCHEMA_VERSION,
};
use crate::config::ExperimentConfig;
use crate::stages::{load_artifacts, DatasetArtifacts, StageOutcome};

/// Methods the benchmark literature compares against that this pipeline does
/// not train; the report schema reserves a slot for each so downstream
/// tables keep a stable column set.
const EMPTY_SLOTS: [&str; 2] = ["treant", "robust-boost"];

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    datasets: Vec<DatasetReport>,
}

#[derive(Serialize)]
struct DatasetReport {
    dataset: String,
    /// Calibrated radius used by training and verification.
    eps_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    headline: Option<HeadlineSearch>,
    grid: Vec<GridCell>,
    methods: Vec<MethodReport>,
    excluded: Vec<Exclusion>,
}

#[derive(Serialize)]
struct MethodReport {
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    train_rows: Vec<TrainRow>,
    verify_rows: Vec<VerifyRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    median: Option<MethodMedian>,
}

fn dataset_report(cfg: &ExperimentConfig, arts: &DatasetArtifacts) -> DatasetReport {
    let mut methods = Vec::new();
    for m in &cfg.methods {
        let name = m.name();
        let train_rows: Vec<TrainRow> = arts
            .train
            .iter()
            .flat_map(|t| t.rows.iter().filter(|r| r.method == name).cloned())
            .collect();
        let verify_rows: Vec<VerifyRow> = arts
            .verify
            .iter()
            .flat_map(|v| v.rows.iter().filter(|r| r.method == name).cloned())
            .collect();
        let median = arts
            .train
            .iter()
            .flat_map(|t| t.medians.iter())
            .find(|md| md.method == name)
            .cloned();
        methods.push(MethodReport {
            method: name.to_string(),
            note: None,
            train_rows,
            verify_rows,
            median,
        });
    }
    for slot in EMPTY_SLOTS {
        methods.push(MethodReport {
            method: slot.to_string(),
            note: Some("no runs recorded".to_string()),
            train_rows: Vec::new(),
            verify_rows: Vec::new(),
            median: None,
        });
    }

    DatasetReport {
        dataset: arts.name.clone(),
        eps_hat: arts.search.as_ref().and_then(|s| s.eps_hat),
        headline: arts.search.as_ref().and_then(|s| s.headline.clone()),
        grid: arts
            .search
            .as_ref()
            .map(|s| s.grid.clone())
            .unwrap_or_default(),
        methods,
        excluded: arts
            .train
            .as_ref()
            .map(|t| t.excluded.clone())
            .unwrap_or_default(),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Long-format metric rows: dataset, method, repetition, metric, value.
fn metric_rows(report: &Report) -> Vec<[String; 5]> {
    let mut rows = Vec::new();
    let mut push = |ds: &str, method: &str, rep: String, metric: &str, value: String| {
        rows.push([
            ds.to_string(),
            method.to_string(),
            rep,
            metric.to_string(),
            value,
        ]);
    };
    for d in &report.datasets {
        for m in &d.methods {
            for r in &m.train_rows {
                let rep = r.rep.to_string();
                push(&d.dataset, &m.method, rep.clone(), "acc", fmt_f64(r.acc));
                push(&d.dataset, &m.method, rep.clone(), "adv_acc", fmt_f64(r.adv_acc));
                push(&d.dataset, &m.method, rep.clone(), "n_timeouts", r.n_timeouts.to_string());
                push(&d.dataset, &m.method, rep.clone(), "train_seconds", fmt_f64(r.train_seconds));
                push(&d.dataset, &m.method, rep.clone(), "hpo_seconds", fmt_f64(r.hpo_seconds));
                push(&d.dataset, &m.method, rep, "verify_seconds", fmt_f64(r.verify_seconds));
            }
            for r in &m.verify_rows {
                let rep = r.rep.to_string();
                push(&d.dataset, &m.method, rep.clone(), "verify_n_timeouts", r.n_timeouts.to_string());
                push(&d.dataset, &m.method, rep.clone(), "verify_solve_seconds", fmt_f64(r.solve_seconds));
                push(&d.dataset, &m.method, rep.clone(), "verify_sample_p50_seconds", fmt_f64(r.sample_seconds.p50_seconds));
                push(&d.dataset, &m.method, rep.clone(), "verify_sample_p90_seconds", fmt_f64(r.sample_seconds.p90_seconds));
                push(&d.dataset, &m.method, rep, "verify_sample_max_seconds", fmt_f64(r.sample_seconds.max_seconds));
            }
            if let Some(md) = &m.median {
                let rep = "median".to_string();
                push(&d.dataset, &m.method, rep.clone(), "acc", fmt_f64(md.acc));
                push(&d.dataset, &m.method, rep.clone(), "adv_acc", fmt_f64(md.adv_acc));
                push(&d.dataset, &m.method, rep.clone(), "train_seconds", fmt_f64(md.train_seconds));
                push(&d.dataset, &m.method, rep, "verify_seconds", fmt_f64(md.verify_seconds));
            }
        }
    }
    rows
}

/// Grid rows for the calibration table: one per (dataset, depth, trees).
fn grid_rows(report: &Report) -> Vec<[String; 9]> {
    let mut rows = Vec::new();
    for d in &report.datasets {
        for c in &d.grid {
            rows.push([
                d.dataset.clone(),
                c.depth.to_string(),
                c.trees.to_string(),
                c.eps_hat.map(fmt_f64).unwrap_or_default(),
                c.eta.map(fmt_f64).unwrap_or_default(),
                c.converged.to_string(),
                c.timed_out.to_string(),
                c.verifier_calls.to_string(),
                fmt_f64(c.solve_seconds),
            ]);
        }
    }
    rows
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: &[[String; N]],
    canonical: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    let time_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.ends_with("seconds"))
        .map(|(i, _)| i)
        .collect();
    let metric_col = header.iter().position(|h| *h == "metric");
    for row in rows {
        let mut row = row.clone();
        if canonical {
            for &i in &time_cols {
                row[i] = "0".to_string();
            }
            if let Some(mc) = metric_col {
                if row[mc].ends_with("seconds") {
                    row[N - 1] = "0".to_string();
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Merges every stage output under `out` into `out/report/`: a JSON tree,
/// the long-format metric CSV and the calibration-grid CSV, each with a
/// canonical strip-times twin.
pub fn cmd_report(out: &Path, cfg: &ExperimentConfig) -> Result<StageOutcome> {
    let arts = load_artifacts(out, cfg)?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        datasets: arts.iter().map(|a| dataset_report(cfg, a)).collect(),
    };

    let dir = out.join("report");
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("report.json"), &report)?;
    let mut canonical = serde_json::to_value(&report)?;
    strip_times(&mut canonical);
    write_json(&dir.join("report_canonical.json"), &canonical)?;

    let metrics = metric_rows(&report);
    let metric_header = ["dataset", "method", "repetition", "metric", "value"];
    write_csv(&dir.join("report.csv"), metric_header, &metrics, false)?;
    write_csv(&dir.join("report_canonical.csv"), metric_header, &metrics, true)?;

    let grid = grid_rows(&report);
    let grid_header = [
        "dataset",
        "depth",
        "trees",
        "eps_hat",
        "eta",
        "converged",
        "timed_out",
        "verifier_calls",
        "solve_seconds",
    ];
    write_csv(&dir.join("grid.csv"), grid_header, &grid, false)?;
    write_csv(&dir.join("grid_canonical.csv"), grid_header, &grid, true)?;

    // The exit code reflects everything visible in the merged artifacts.
    let mut partial = 0;
    for a in &arts {
        if let Some(s) = &a.search {
            partial += s.timed_out_cells;
        }
        if let Some(t) = &a.train {
            partial += t.excluded.len();
            partial += t.rows.iter().map(|r| r.n_timeouts).sum::<usize>();
        }
        if let Some(v) = &a.verify {
            partial += v.rows.iter().map(|r| r.n_timeouts).sum::<usize>();
        }
    }
    println!(
        "report written to {} ({} dataset(s), {} metric rows)",
        dir.display(),
        report.datasets.len(),
        metrics.len()
    );
    Ok(StageOutcome { partial })
}
