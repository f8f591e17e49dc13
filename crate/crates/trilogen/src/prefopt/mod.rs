//! Preference optimization over a factored categorical prompt policy.
//!
//! The "script writer" is deliberately not a language model: each context
//! owns a few categorical slots (movement verb, detail phrase, transition
//! adverb), and a prompt choice picks one vocabulary entry per slot. That
//! makes every quantity of interest — log-probabilities, the reference KL
//! `z₀`, DPO and KTO losses, and their gradients — exact and sampling-free,
//! so the loss laws are assertable to machine precision.
//!
//! The KTO loss implemented here is
//! `L(θ) = E[λ_y − v(x, y)]` with `r_θ = log π_θ(y|x) − log π_ref(y|x)`,
//! `v = λ_D·σ(β(r_θ − z₀))` for desirable examples,
//! `v = λ_U·σ(β(z₀ − r_θ))` for undesirable ones, and `z₀` the exact mean
//! categorical KL between policy and reference over the batch's contexts,
//! held constant within a gradient step.

mod dataset;
mod losses;
mod policy;

pub use dataset::{build_preference_dataset, PreferenceDataset, ScoredPrompt};
pub use losses::{
    bradley_terry, dpo_loss, exact_reference_kl, kl_objective_value, kto_loss,
    kto_loss_with_baseline, reward_model_nll, sigmoid,
};
pub use policy::{
    gradient_step, load_checkpoint, log_prob, save_checkpoint, ContextPolicy, PolicyGrad,
    PolicyParams, SlotPolicy,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrefOptError {
    #[error("unknown context '{0}'")]
    UnknownContext(String),
    #[error("policy structures differ: {0}")]
    StructureMismatch(String),
    #[error("selection index {index} out of range for slot {slot} of context '{context}' ({len} options)")]
    BadSelection { context: String, slot: usize, index: usize, len: usize },
    #[error("choice has {got} selections but context '{context}' has {want} slots")]
    WrongSlotCount { context: String, got: usize, want: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("context '{context}' has {got} scored samples; at least 2 are required")]
    TooFewSamples { context: String, got: usize },
    #[error("a preference pair must compare choices from one context (got '{winner}' vs '{loser}')")]
    MixedPair { winner: String, loser: String },
    #[error("mean KL must be nonnegative, got {0}")]
    NegativeKl(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("learning rate must be finite and nonnegative, got {0}")]
    BadLearningRate(f64),
    #[error("invalid policy: {0}")]
    BadPolicy(String),
    #[error("{path}: {source}")]
    File {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Checkpoint {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// One concrete prompt choice: a vocabulary index per slot of one context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptChoice {
    pub context: String,
    pub selections: Vec<usize>,
}

/// A labeled example for KTO: a choice marked desirable or undesirable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub choice: PromptChoice,
    pub desirable: bool,
}

/// A winner/loser pair for DPO; both choices share one context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub winner: PromptChoice,
    pub loser: PromptChoice,
}

/// KTO hyperparameters; all must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KtoConfig {
    pub beta: f64,
    pub lambda_d: f64,
    pub lambda_u: f64,
}

impl Default for KtoConfig {
    fn default() -> Self {
        Self { beta: 0.1, lambda_d: 1.0, lambda_u: 1.0 }
    }
}

impl KtoConfig {
    pub fn validate(&self) -> Result<(), PrefOptError> {
        for (name, v) in [
            ("beta", self.beta),
            ("lambda_d", self.lambda_d),
            ("lambda_u", self.lambda_u),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PrefOptError::BadConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}
