//! `treeguard` — pipeline runner for adversarially robust tree ensembles:
//! data splits, perturbation-radius calibration, tuned training per method,
//! exact robustness verification, and consolidated reports.

mod artifacts;
mod config;
mod manifest;
mod report;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{load, resolve_out_dir, Overrides};
use stages::StageOutcome;

#[derive(Parser)]
#[command(
    name = "treeguard",
    version,
    about = "Robust tree-ensemble pipeline: splits, radius calibration, tuned training, exact verification, reports"
)]
struct Cli {
    /// JSON experiment config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact/report directory (beats TREEGUARD_OUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset manifest path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Comma-separated manifest datasets to run (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    /// Comma-separated methods (rf, groot-rf, robust-rf, noisy-rf, gbt, robust-trees).
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated grid depths.
    #[arg(long, global = true, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Comma-separated grid tree counts.
    #[arg(long, global = true, value_delimiter = ',')]
    trees: Option<Vec<usize>>,
    /// Repetitions per (dataset, method).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seed fixing the held-out test fold.
    #[arg(long, global = true)]
    test_seed: Option<u64>,
    /// Target adversarial success rate for calibration.
    #[arg(long, global = true)]
    eta_star: Option<f64>,
    /// Acceptance half-width around the target rate.
    #[arg(long, global = true)]
    band: Option<f64>,
    /// Bracket width at which calibration settles.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Hyperparameter candidates per (method, repetition) cell.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Verifier node budget per robustness query.
    #[arg(long, global = true)]
    node_budget: Option<u64>,
    /// Use the benchmark-scale wall-clock budgets (12 h calibration, 48 h total).
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Calibration budget per dataset, seconds.
    #[arg(long, global = true)]
    cap_search: Option<f64>,
    /// Whole-experiment budget, seconds.
    #[arg(long, global = true)]
    cap_total: Option<f64>,
    /// Budget per grid/training cell, seconds.
    #[arg(long, global = true)]
    cap_cell: Option<f64>,
    /// Budget per hyperparameter candidate, seconds.
    #[arg(long, global = true)]
    cap_config: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute and store the train/validation/test folds
    Split,
    /// Calibrate the perturbation radius per grid cell (stage 1)
    SearchEps,
    /// Tune, train and test-evaluate every method x repetition (stage 2)
    Train {
        /// Radius override; skips reading the search artifact.
        #[arg(long)]
        eps_hat: Option<f64>,
    },
    /// Re-verify the trained models, recording per-sample solve time (stage 3)
    Verify {
        /// Radius override; skips the radius recorded by the train stage.
        #[arg(long)]
        eps_hat: Option<f64>,
    },
    /// Merge stage outputs into consolidated JSON + CSV reports
    Report,
    /// Run every stage in order: split, search-eps, train, verify, report
    Experiment {
        /// Radius override handed to the train and verify stages.
        #[arg(long)]
        eps_hat: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<StageOutcome> {
    let ov = Overrides {
        manifest: cli.manifest,
        datasets: cli.datasets,
        depths: cli.depths,
        trees: cli.trees,
        methods: cli.methods,
        repetitions: cli.reps,
        eta_star: cli.eta_star,
        band: cli.band,
        margin: cli.margin,
        seed: cli.seed,
        test_seed: cli.test_seed,
        hpo_budget: cli.budget,
        node_budget: cli.node_budget,
        paper_scale: cli.paper_scale,
        cap_search: cli.cap_search,
        cap_total: cli.cap_total,
        cap_cell: cli.cap_cell,
        cap_config: cli.cap_config,
    };
    let cfg = load(cli.config.as_deref(), &ov)?;
    let out = resolve_out_dir(cli.out.as_deref(), &cfg);

    match cli.cmd {
        Cmd::Split => stages::cmd_split(&out, &cfg),
        Cmd::SearchEps => stages::cmd_search(&out, &cfg),
        Cmd::Train { eps_hat } => stages::cmd_train(&out, &cfg, eps_hat),
        Cmd::Verify { eps_hat } => stages::cmd_verify(&out, &cfg, eps_hat),
        Cmd::Report => report::cmd_report(&out, &cfg),
        Cmd::Experiment { eps_hat } => stages::cmd_experiment(&out, &cfg, eps_hat),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) if outcome.partial > 0 => {
            eprintln!(
                "completed with {} timeout(s)/exclusion(s); see the report for details",
                outcome.partial
            );
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
