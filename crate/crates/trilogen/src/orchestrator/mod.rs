//! The closed optimization loop: sample prompt choices from the current
//! policy, render and score each sample (`r = w_s·r_s + w_a·r_a`), build a
//! preference dataset by reward ordering, take one KTO gradient step, and
//! repeat — persisting a manifest, FID curves, per-iteration best-video
//! frame dumps, and policy checkpoints so a rerun with the same
//! configuration is byte-identical.

mod config;
mod run;

pub use config::RunConfig;
pub use run::{
    run_iteration, run_loop, run_loop_with, score_prompt, IterationOutcome, IterationRecord,
    PromptScore, RunManifest, SampleRecord, ScoreCache,
};

use std::path::PathBuf;

use crate::imagekit::ImageError;
use crate::prefopt::PrefOptError;
use crate::realism::RealismError;
use crate::script::ScriptError;
use crate::simgen::SimError;
use crate::smoothness::SmoothnessError;

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("bad run config: {0}")]
    Config(String),
    #[error("reference corpus at {0} is empty")]
    EmptyCorpus(PathBuf),
    #[error("non-finite reward for context {context:?} prompt {text:?}")]
    NonFiniteReward { context: String, text: String },
    #[error("iteration {index} failed: {source}")]
    Iteration {
        index: usize,
        #[source]
        source: Box<OrchestratorError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Smoothness(#[from] SmoothnessError),
    #[error(transparent)]
    Realism(#[from] RealismError),
    #[error(transparent)]
    PrefOpt(#[from] PrefOptError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
