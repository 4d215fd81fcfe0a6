//! Adversarially robust decision-tree ensembles.
//!
//! The crate trains standard and robust tree ensembles (`train`), verifies
//! their l-infinity robustness exactly with a specialized branch-and-bound
//! (`verify`), calibrates the perturbation size at which a model's accuracy
//! degrades by a target fraction (`epsearch`), and tunes hyperparameters
//! against the two competing objectives (`hpo`). `data` handles ingestion
//! and splits; `trees` holds the shared model representation.
//!
//! Batch work (tree fitting, per-sample verification) is data-parallel via
//! rayon when the default `parallel` feature is on, with a sequential
//! fallback that produces bit-identical results.

pub mod data;
pub mod epsearch;
pub mod exec;
pub mod hpo;
pub mod rng;
pub mod train;
pub mod trees;
pub mod verify;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("model: {0}")]
    Model(String),
    #[error("training: {0}")]
    Train(String),
    #[error("search: {0}")]
    Search(String),
}

pub type Result<T> = std::result::Result<T, Error>;
