//! Stage implementations behind the commands: fold computation, radius
//! calibration over the model grid, tuned training per method × repetition,
//! and solve-time verification of the trained models.
//!
//! Stages communicate only through their on-disk artifacts: training
//! consumes nothing from calibration but the radius, and verification
//! consumes nothing from training but the model files. Every wall-clock
//! budget overrun is annotated and skipped rather than failing the run.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use treeguard::data::split_64_20_20;
use treeguard::epsearch::{search_epsilon, SearchConfig};
use treeguard::exec;
use treeguard::hpo::{optimize, HpoConfig, SearchSpace};
use treeguard::rng::derive_seed;
use treeguard::train::{fit, Method, TrainConfig};
use treeguard::trees::Ensemble;
use treeguard::verify::adversarial_accuracy;

use crate::artifacts::{
    check_schema, median, read_json, write_json, Exclusion, GridCell, HeadlineSearch,
    MethodMedian, RepSplit, SearchArtifact, SecondsSummary, SplitsArtifact, TrainArtifact,
    TrainRow, VerifyArtifact, VerifyRow, SCHEMA_VERSION,
};
use crate::config::ExperimentConfig;
use crate::manifest::{prepare, Prepared};

/// What a stage reports upward: how many cells/samples ran out of budget.
/// Any nonzero count turns the process exit code into "partial".
#[derive(Clone, Copy, Debug, Default)]
pub struct StageOutcome {
    pub partial: usize,
}

impl StageOutcome {
    pub fn absorb(&mut self, other: StageOutcome) {
        self.partial += other.partial;
    }
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

fn splits_path(out: &Path, dataset: &str) -> std::path::PathBuf {
    out.join(dataset).join("splits.json")
}

fn search_path(out: &Path, dataset: &str) -> std::path::PathBuf {
    out.join(dataset).join("search.json")
}

fn train_path(out: &Path, dataset: &str) -> std::path::PathBuf {
    out.join(dataset).join("train.json")
}

fn verify_path(out: &Path, dataset: &str) -> std::path::PathBuf {
    out.join(dataset).join("verify.json")
}

fn load_splits(out: &Path, p: &Prepared, cfg: &ExperimentConfig) -> Result<SplitsArtifact> {
    let art: SplitsArtifact = read_json(&splits_path(out, &p.name), "treeguard split")?;
    check_schema(art.schema_version, "splits artifact")?;
    ensure!(
        art.n_samples == p.d.n_samples() && art.n_features == p.d.n_features(),
        "splits for '{}' were computed on different data ({}x{} vs {}x{}); re-run split",
        p.name,
        art.n_samples,
        art.n_features,
        p.d.n_samples(),
        p.d.n_features()
    );
    ensure!(
        art.test_seed == cfg.test_seed,
        "splits for '{}' used test seed {}, config says {}; re-run split",
        p.name,
        art.test_seed,
        cfg.test_seed
    );
    ensure!(
        art.reps.len() == cfg.repetitions,
        "splits for '{}' hold {} repetitions, config asks for {}; re-run split",
        p.name,
        art.reps.len(),
        cfg.repetitions
    );
    Ok(art)
}

/// Computes and stores the folds: one shared stratified test fifth plus a
/// per-repetition train/validation cut of the remainder.
pub fn cmd_split(out: &Path, cfg: &ExperimentConfig) -> Result<StageOutcome> {
    for p in &prepare(cfg)? {
        let fold_base = derive_seed(p.ds_seed, 1);
        let mut test: Option<Vec<usize>> = None;
        let mut reps = Vec::with_capacity(cfg.repetitions);
        for r in 0..cfg.repetitions {
            let rep_seed = derive_seed(fold_base, r as u64);
            let s = split_64_20_20(&p.d, cfg.test_seed, rep_seed)
                .with_context(|| format!("splitting dataset '{}'", p.name))?;
            match &test {
                None => test = Some(s.test.clone()),
                Some(t) => debug_assert_eq!(t, &s.test, "test fold must not move across reps"),
            }
            reps.push(RepSplit {
                rep: r,
                rep_seed,
                train: s.train,
                valid: s.valid,
            });
        }
        let test = test.expect("at least one repetition");
        println!(
            "{}: {} rows, {} classes; test fold {} rows, {} repetitions",
            p.name,
            p.d.n_samples(),
            p.d.n_classes,
            test.len(),
            cfg.repetitions
        );
        write_json(
            &splits_path(out, &p.name),
            &SplitsArtifact {
                schema_version: SCHEMA_VERSION,
                dataset: p.name.clone(),
                n_samples: p.d.n_samples(),
                n_features: p.d.n_features(),
                n_classes: p.d.n_classes,
                test_seed: cfg.test_seed,
                test,
                reps,
            },
        )?;
    }
    Ok(StageOutcome::default())
}

/// Calibrates the perturbation radius. Per grid cell: a standard forest at
/// that (depth, trees) is trained on the 80% side and the radius search runs
/// against the test fold, seeded with the smallest cell's result. The
/// dataset's headline radius comes from the same search on an
/// accuracy-tuned standard forest.
pub fn cmd_search(out: &Path, cfg: &ExperimentConfig) -> Result<StageOutcome> {
    let mut outcome = StageOutcome::default();
    for p in &prepare(cfg)? {
        let stage_started = Instant::now();
        let splits = load_splits(out, p, cfg)?;
        let rep0 = &splits.reps[0];
        let fit_rows = union_sorted(&rep0.train, &rep0.valid);
        let cell_base = derive_seed(p.ds_seed, 2);

        let mut grid = Vec::new();
        let mut warm: Option<f64> = None;
        let mut timed_out_cells = 0usize;
        for (idx, (depth, trees)) in cfg.grid.cells().into_iter().enumerate() {
            let spent = stage_started.elapsed().as_secs_f64();
            let cell_cap = cfg.caps.cell_seconds.min(cfg.caps.search_seconds - spent);
            if cell_cap <= 0.0 {
                grid.push(GridCell {
                    depth,
                    trees,
                    eps_hat: None,
                    eta: None,
                    converged: false,
                    timed_out: true,
                    verifier_calls: 0,
                    solve_seconds: 0.0,
                });
                timed_out_cells += 1;
                continue;
            }
            let cell_started = Instant::now();
            let tc = TrainConfig {
                method: Method::Rf,
                n_trees: trees,
                max_depth: depth,
                seed: derive_seed(cell_base, idx as u64),
                ..TrainConfig::default()
            };
            let model = fit(&p.d, &fit_rows, &tc)
                .with_context(|| format!("fitting the {depth}x{trees} calibration forest"))?;
            let search_cap = cell_cap - cell_started.elapsed().as_secs_f64();
            let cell = if search_cap <= 0.0 {
                timed_out_cells += 1;
                GridCell {
                    depth,
                    trees,
                    eps_hat: None,
                    eta: None,
                    converged: false,
                    timed_out: true,
                    verifier_calls: 0,
                    solve_seconds: 0.0,
                }
            } else {
                let sc = SearchConfig {
                    eta_star: cfg.eta_star,
                    band: cfg.band,
                    margin: cfg.margin,
                    eps0: warm.unwrap_or(SearchConfig::default().eps0),
                    wall_cap_seconds: search_cap,
                    node_budget: cfg.node_budget,
                    ..SearchConfig::default()
                };
                let o = search_epsilon(&model, &p.d, &splits.test, &sc)
                    .with_context(|| format!("calibrating the {depth}x{trees} cell"))?;
                let timed_out = cell_started.elapsed().as_secs_f64() > cell_cap;
                if timed_out {
                    timed_out_cells += 1;
                }
                if idx == 0 {
                    warm = Some(o.eps_hat);
                }
                GridCell {
                    depth,
                    trees,
                    eps_hat: Some(o.eps_hat),
                    eta: Some(o.eta),
                    converged: o.converged,
                    timed_out,
                    verifier_calls: o.state.verifier_calls,
                    solve_seconds: o.state.verifier_seconds,
                }
            };
            if let (Some(e), Some(h)) = (cell.eps_hat, cell.eta) {
                println!(
                    "{}: cell depth={depth} trees={trees}: eps {e:.4} (eta {h:.3}), {} calls, {:.2}s solve{}",
                    p.name,
                    cell.verifier_calls,
                    cell.solve_seconds,
                    if cell.timed_out { ", timed out" } else { "" }
                );
            } else {
                println!("{}: cell depth={depth} trees={trees}: timed out before calibration", p.name);
            }
            grid.push(cell);
        }

        // Headline radius: tune a standard forest for plain accuracy, retrain
        // it on the full 80%, and calibrate on that.
        let headline = {
            let remaining = cfg.caps.search_seconds - stage_started.elapsed().as_secs_f64();
            if remaining <= 0.0 {
                timed_out_cells += 1;
                None
            } else {
                let nominal = warm.unwrap_or(SearchConfig::default().eps0).clamp(1e-4, 0.5);
                let hpo_cfg = HpoConfig {
                    budget: cfg.hpo_budget,
                    final_lambda: [1.0, 0.0],
                    node_budget: cfg.node_budget,
                    config_cap_seconds: cfg.caps.config_seconds,
                    seed: derive_seed(p.ds_seed, 3),
                    ..HpoConfig::default()
                };
                let space = SearchSpace::default_for(nominal);
                match headline_search(
                    cfg, p, &space, &hpo_cfg, rep0, &fit_rows, &splits.test, nominal, remaining,
                ) {
                    Ok((h, trace_json)) => {
                        let trace_rel = format!("{}/hpo/calibration-rf.json", p.name);
                        std::fs::create_dir_all(out.join(&p.name).join("hpo"))?;
                        std::fs::write(out.join(&trace_rel), trace_json)?;
                        println!(
                            "{}: headline eps {:.4} (eta {:.3}) from the tuned standard forest",
                            p.name, h.eps_hat, h.eta
                        );
                        Some(HeadlineSearch {
                            hpo_trace: trace_rel,
                            ..h
                        })
                    }
                    Err(e) => {
                        eprintln!("{}: headline calibration failed: {e:#}", p.name);
                        timed_out_cells += 1;
                        None
                    }
                }
            }
        };

        let artifact = SearchArtifact {
            schema_version: SCHEMA_VERSION,
            dataset: p.name.clone(),
            eta_star: cfg.eta_star,
            band: cfg.band,
            margin: cfg.margin,
            eps_hat: headline.as_ref().map(|h| h.eps_hat),
            headline,
            grid,
            timed_out_cells,
            total_seconds: stage_started.elapsed().as_secs_f64(),
        };
        write_json(&search_path(out, &p.name), &artifact)?;
        outcome.partial += timed_out_cells;
    }
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn headline_search(
    cfg: &ExperimentConfig,
    p: &Prepared,
    space: &SearchSpace,
    hpo_cfg: &HpoConfig,
    rep0: &RepSplit,
    fit_rows: &[usize],
    test: &[usize],
    nominal: f64,
    budget_seconds: f64,
) -> Result<(HeadlineSearch, String)> {
    let hpo = optimize(
        Method::Rf,
        space,
        hpo_cfg,
        &p.d,
        &rep0.train,
        &rep0.valid,
        nominal,
    )?;
    let winner = hpo.best().config.clone();
    let model = fit(&p.d, fit_rows, &winner)?;
    let sc = SearchConfig {
        eta_star: cfg.eta_star,
        band: cfg.band,
        margin: cfg.margin,
        eps0: nominal,
        wall_cap_seconds: budget_seconds.max(1.0),
        node_budget: cfg.node_budget,
        ..SearchConfig::default()
    };
    let o = search_epsilon(&model, &p.d, test, &sc)?;
    let mut trace_json = serde_json::to_string_pretty(&hpo.trace)?;
    trace_json.push('\n');
    Ok((
        HeadlineSearch {
            config: winner,
            hpo_trace: String::new(),
            eps_hat: o.eps_hat,
            eta: o.eta,
            converged: o.converged,
            unreachable: o.unreachable,
            evaluations: o.state.evaluated.len(),
            verifier_calls: o.state.verifier_calls,
            solve_seconds: o.state.verifier_seconds,
        },
        trace_json,
    ))
}

/// One training cell's result, produced in parallel and reduced
/// sequentially.
enum CellOut {
    Row {
        row: TrainRow,
        model_json: String,
        trace_json: String,
    },
    Excluded(Exclusion),
}

/// Tunes, retrains and test-evaluates every method × repetition at the
/// calibrated radius.
pub fn cmd_train(
    out: &Path,
    cfg: &ExperimentConfig,
    eps_override: Option<f64>,
) -> Result<StageOutcome> {
    let mut outcome = StageOutcome::default();
    for p in &prepare(cfg)? {
        let stage_started = Instant::now();
        let splits = load_splits(out, p, cfg)?;
        let eps_hat = match eps_override {
            Some(e) => Some(e),
            None => {
                let search: SearchArtifact =
                    read_json(&search_path(out, &p.name), "treeguard search-eps")
                        .context("no radius given: pass --eps-hat or run the search stage")?;
                check_schema(search.schema_version, "search artifact")?;
                search.eps_hat
            }
        };
        if let Some(e) = eps_hat {
            ensure!(
                e > 0.0 && e.is_finite(),
                "calibrated radius must be positive and finite, got {e}"
            );
        }

        let cells: Vec<(usize, usize)> = (0..cfg.methods.len())
            .flat_map(|m| (0..cfg.repetitions).map(move |r| (m, r)))
            .collect();

        let mut rows = Vec::new();
        let mut excluded = Vec::new();
        match eps_hat {
            None => {
                // Honest annotation instead of a hard failure: the search
                // stage ran but never produced a radius.
                for &(m, r) in &cells {
                    excluded.push(Exclusion {
                        method: cfg.methods[m].name().to_string(),
                        rep: r,
                        reason: "no calibrated radius from the search stage".into(),
                    });
                }
            }
            Some(eh) => {
                let space = SearchSpace::default_for(eh);
                let cell_base = derive_seed(p.ds_seed, 4);
                let results = exec::map_indexed(cells.len(), |i| {
                    let (m_idx, rep) = cells[i];
                    run_train_cell(cfg, p, &splits, &space, cell_base, m_idx, rep, eh)
                });
                for r in results {
                    match r {
                        CellOut::Row {
                            row,
                            model_json,
                            trace_json,
                        } => {
                            let model_path = out.join(&row.model);
                            let trace_path = out.join(&row.hpo_trace);
                            std::fs::create_dir_all(model_path.parent().unwrap())?;
                            std::fs::create_dir_all(trace_path.parent().unwrap())?;
                            std::fs::write(model_path, model_json)?;
                            std::fs::write(trace_path, trace_json)?;
                            println!(
                                "{}: {} rep {}: acc {:.3} adv_acc {:.3} ({:.2}s fit)",
                                p.name, row.method, row.rep, row.acc, row.adv_acc, row.train_seconds
                            );
                            outcome.partial += row.n_timeouts;
                            rows.push(row);
                        }
                        CellOut::Excluded(x) => {
                            eprintln!(
                                "{}: {} rep {} excluded: {}",
                                p.name, x.method, x.rep, x.reason
                            );
                            excluded.push(x);
                        }
                    }
                }
            }
        }
        outcome.partial += excluded.len();

        let mut medians = Vec::new();
        for m in &cfg.methods {
            let of_method: Vec<&TrainRow> =
                rows.iter().filter(|r| r.method == m.name()).collect();
            if of_method.is_empty() {
                continue;
            }
            let pick = |f: &dyn Fn(&TrainRow) -> f64| {
                median(&of_method.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            medians.push(MethodMedian {
                method: m.name().to_string(),
                reps_completed: of_method.len(),
                acc: pick(&|r| r.acc),
                adv_acc: pick(&|r| r.adv_acc),
                train_seconds: pick(&|r| r.train_seconds),
                verify_seconds: pick(&|r| r.verify_seconds),
            });
        }
        for m in &medians {
            println!(
                "{}: {} median over {} reps: acc {:.3} adv_acc {:.3}",
                p.name, m.method, m.reps_completed, m.acc, m.adv_acc
            );
        }

        write_json(
            &train_path(out, &p.name),
            &TrainArtifact {
                schema_version: SCHEMA_VERSION,
                dataset: p.name.clone(),
                eps_hat: eps_hat.unwrap_or(0.0),
                rows,
                excluded,
                medians,
                total_seconds: stage_started.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn run_train_cell(
    cfg: &ExperimentConfig,
    p: &Prepared,
    splits: &SplitsArtifact,
    space: &SearchSpace,
    cell_base: u64,
    m_idx: usize,
    rep: usize,
    eps_hat: f64,
) -> CellOut {
    let method = cfg.methods[m_idx];
    let rs = &splits.reps[rep];
    let cell_started = Instant::now();
    let exclude = |reason: String| {
        CellOut::Excluded(Exclusion {
            method: method.name().to_string(),
            rep,
            reason,
        })
    };

    let hpo_cfg = HpoConfig {
        budget: cfg.hpo_budget,
        node_budget: cfg.node_budget,
        config_cap_seconds: cfg.caps.config_seconds,
        seed: derive_seed(cell_base, (rep * 8 + m_idx) as u64),
        ..HpoConfig::default()
    };
    let hpo = match optimize(method, space, &hpo_cfg, &p.d, &rs.train, &rs.valid, eps_hat) {
        Ok(h) => h,
        Err(e) => return exclude(format!("hyperparameter search failed: {e}")),
    };
    let hpo_seconds = cell_started.elapsed().as_secs_f64();

    let winner = hpo.best().config.clone();
    let model = match fit(&p.d, &rs.train, &winner) {
        Ok(m) => m,
        Err(e) => return exclude(format!("final fit failed: {e}")),
    };
    let eval = match adversarial_accuracy(&model, &p.d, &splits.test, eps_hat, cfg.node_budget) {
        Ok(a) => a,
        Err(e) => return exclude(format!("test evaluation failed: {e}")),
    };

    let wall = cell_started.elapsed().as_secs_f64();
    if wall > cfg.caps.cell_seconds {
        return exclude(format!(
            "could not finish within the {:.0}s cell budget (took {wall:.0}s)",
            cfg.caps.cell_seconds
        ));
    }

    let model_json = match model.to_json(false) {
        Ok(j) => j,
        Err(e) => return exclude(format!("serializing the model failed: {e}")),
    };
    let mut trace_json = match serde_json::to_string_pretty(&hpo.trace) {
        Ok(j) => j,
        Err(e) => return exclude(format!("serializing the tuning trace failed: {e}")),
    };
    trace_json.push('\n');

    CellOut::Row {
        row: TrainRow {
            method: method.name().to_string(),
            rep,
            acc: eval.acc,
            adv_acc: eval.adv_acc,
            n_timeouts: eval.n_timeouts,
            winner_index: hpo.winner,
            train_seconds: model.meta.train_seconds,
            hpo_seconds,
            verify_seconds: eval.solve_seconds,
            model: format!("{}/models/{}-rep{}.json", p.name, method.name(), rep),
            hpo_trace: format!("{}/hpo/{}-rep{}.json", p.name, method.name(), rep),
        },
        model_json,
        trace_json,
    }
}

/// Re-verifies the stage-2 models on the test fold at the calibrated radius,
/// recording pure solve time per sample.
pub fn cmd_verify(
    out: &Path,
    cfg: &ExperimentConfig,
    eps_override: Option<f64>,
) -> Result<StageOutcome> {
    let mut outcome = StageOutcome::default();
    for p in &prepare(cfg)? {
        let stage_started = Instant::now();
        let splits = load_splits(out, p, cfg)?;
        let train: TrainArtifact = read_json(&train_path(out, &p.name), "treeguard train")?;
        check_schema(train.schema_version, "train artifact")?;
        if train.rows.is_empty() {
            // Every (method, repetition) cell was excluded upstream; the
            // exclusions are already on record, so an empty verification is
            // the honest result rather than an error.
            println!("{}: no trained models to verify", p.name);
            write_json(
                &verify_path(out, &p.name),
                &VerifyArtifact {
                    schema_version: SCHEMA_VERSION,
                    dataset: p.name.clone(),
                    eps_hat: train.eps_hat,
                    rows: Vec::new(),
                    total_seconds: stage_started.elapsed().as_secs_f64(),
                },
            )?;
            continue;
        }
        let eps_hat = eps_override.unwrap_or(train.eps_hat);
        ensure!(
            eps_hat > 0.0 && eps_hat.is_finite(),
            "no usable radius: the train artifact records {}, pass --eps-hat",
            train.eps_hat
        );

        let rows: Vec<Result<VerifyRow>> = exec::map_indexed(train.rows.len(), |i| {
            let tr = &train.rows[i];
            let model = Ensemble::load_json(&out.join(&tr.model))
                .with_context(|| format!("loading model {}", tr.model))?;
            model.validate()?;
            let eval = adversarial_accuracy(&model, &p.d, &splits.test, eps_hat, cfg.node_budget)?;
            let seconds: Vec<f64> = eval.records.iter().map(|r| r.seconds).collect();
            Ok(VerifyRow {
                method: tr.method.clone(),
                rep: tr.rep,
                model: tr.model.clone(),
                n_test: splits.test.len(),
                acc: eval.acc,
                adv_acc: eval.adv_acc,
                n_timeouts: eval.n_timeouts,
                solve_seconds: eval.solve_seconds,
                sample_seconds: SecondsSummary::from_samples(seconds),
            })
        });
        let rows: Vec<VerifyRow> = rows.into_iter().collect::<Result<_>>()?;
        for r in &rows {
            println!(
                "{}: {} rep {}: adv_acc {:.3}, {:.3}s solve over {} samples{}",
                p.name,
                r.method,
                r.rep,
                r.adv_acc,
                r.solve_seconds,
                r.n_test,
                if r.n_timeouts > 0 {
                    format!(", {} timeouts", r.n_timeouts)
                } else {
                    String::new()
                }
            );
            outcome.partial += r.n_timeouts;
        }

        write_json(
            &verify_path(out, &p.name),
            &VerifyArtifact {
                schema_version: SCHEMA_VERSION,
                dataset: p.name.clone(),
                eps_hat,
                rows,
                total_seconds: stage_started.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(outcome)
}

/// Runs every stage in order, honoring the total wall-clock budget between
/// stages. The report stage always runs so partial results stay visible.
pub fn cmd_experiment(
    out: &Path,
    cfg: &ExperimentConfig,
    eps_override: Option<f64>,
) -> Result<StageOutcome> {
    let started = Instant::now();
    let mut outcome = StageOutcome::default();
    let mut skipped = false;

    type Stage<'a> = (&'a str, Box<dyn FnOnce() -> Result<StageOutcome> + 'a>);
    let stages: Vec<Stage> = vec![
        ("split", Box::new(|| cmd_split(out, cfg))),
        ("search-eps", Box::new(|| cmd_search(out, cfg))),
        ("train", Box::new(move || cmd_train(out, cfg, eps_override))),
        ("verify", Box::new(move || cmd_verify(out, cfg, eps_override))),
    ];
    for (name, run) in stages {
        if started.elapsed().as_secs_f64() > cfg.caps.total_seconds {
            eprintln!("total budget exhausted; skipping the {name} stage");
            outcome.partial += 1;
            skipped = true;
            continue;
        }
        outcome.absorb(run()?);
    }
    if skipped {
        eprintln!("reporting whatever completed");
    }
    // The report recounts everything visible in the artifacts, which already
    // covers the per-stage tallies; take whichever view is larger.
    let report = crate::report::cmd_report(out, cfg)?;
    outcome.partial = outcome.partial.max(report.partial);
    Ok(outcome)
}

/// Stage artifacts present for a dataset, as the report stage sees them.
pub struct DatasetArtifacts {
    pub name: String,
    pub search: Option<SearchArtifact>,
    pub train: Option<TrainArtifact>,
    pub verify: Option<VerifyArtifact>,
}

/// Loads whatever stage outputs exist for the configured datasets, erroring
/// only on unreadable or schema-mismatched files.
pub fn load_artifacts(out: &Path, cfg: &ExperimentConfig) -> Result<Vec<DatasetArtifacts>> {
    let mut all = Vec::new();
    for p in &prepare(cfg)? {
        let mut arts = DatasetArtifacts {
            name: p.name.clone(),
            search: None,
            train: None,
            verify: None,
        };
        let sp = search_path(out, &p.name);
        if sp.exists() {
            let a: SearchArtifact = read_json(&sp, "treeguard search-eps")?;
            check_schema(a.schema_version, "search artifact")?;
            arts.search = Some(a);
        }
        let tp = train_path(out, &p.name);
        if tp.exists() {
            let a: TrainArtifact = read_json(&tp, "treeguard train")?;
            check_schema(a.schema_version, "train artifact")?;
            arts.train = Some(a);
        }
        let vp = verify_path(out, &p.name);
        if vp.exists() {
            let a: VerifyArtifact = read_json(&vp, "treeguard verify")?;
            check_schema(a.schema_version, "verify artifact")?;
            arts.verify = Some(a);
        }
        all.push(arts);
    }
    if all
        .iter()
        .all(|a| a.search.is_none() && a.train.is_none() && a.verify.is_none())
    {
        bail!(
            "no stage outputs under {} — run the pipeline stages first",
            out.display()
        );
    }
    Ok(all)
}
