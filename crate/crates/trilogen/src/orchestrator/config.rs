//! Run configuration: a single JSON file mirroring these field names,
//! with every field optional (missing fields take the defaults below).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::prefopt::KtoConfig;
use crate::simgen::{RenderConfig, TokenVocab};
use crate::util::{fnv1a64, mix_seed};

fn d_corpus_count() -> usize {
    16
}
fn d_corpus_seed() -> u64 {
    7
}
fn d_contexts() -> Vec<String> {
    vec!["a trilobite crossing the seabed".to_string()]
}
fn d_clip_count() -> u32 {
    2
}
fn d_frames_per_clip() -> u32 {
    24
}
fn d_width() -> u32 {
    128
}
fn d_height() -> u32 {
    128
}
fn d_base_jitter() -> f64 {
    1.5
}
fn d_samples_per_context() -> usize {
    8
}
fn d_iterations() -> usize {
    30
}
fn d_learning_rate() -> f64 {
    40.0
}
fn d_master_seed() -> u64 {
    42
}
fn d_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn d_weight() -> f64 {
    1.0
}

/// Everything a loop run depends on. Deserializes from JSON with
/// per-field defaults so `{}` is a complete, runnable configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of reference stills. When absent, a synthetic corpus of
    /// `corpus_count` renders is generated under `<output_dir>/corpus`.
    #[serde(default)]
    pub corpus_dir: Option<PathBuf>,
    #[serde(default = "d_corpus_count")]
    pub corpus_count: usize,
    #[serde(default = "d_corpus_seed")]
    pub corpus_seed: u64,
    /// Independent optimization contexts; each gets its own categorical
    /// policy over the token grid.
    #[serde(default = "d_contexts")]
    pub contexts: Vec<String>,
    #[serde(default)]
    pub vocab: TokenVocab,
    #[serde(default = "d_clip_count")]
    pub clip_count: u32,
    #[serde(default = "d_frames_per_clip")]
    pub frames_per_clip: u32,
    #[serde(default = "d_width")]
    pub width: u32,
    #[serde(default = "d_height")]
    pub height: u32,
    #[serde(default = "d_base_jitter")]
    pub base_jitter: f64,
    #[serde(default = "d_samples_per_context")]
    pub samples_per_context: usize,
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub kto: KtoConfig,
    #[serde(default = "d_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d_master_seed")]
    pub master_seed: u64,
    #[serde(default = "d_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "d_weight")]
    pub weight_smoothness: f64,
    #[serde(default = "d_weight")]
    pub weight_realism: f64,
    /// When set, the reference policy follows the trained policy after
    /// each iteration instead of staying frozen at the initial policy.
    #[serde(default)]
    pub refresh_reference: bool,
    /// Optional early stop: the loop ends after the first iteration
    /// whose mean reward reaches this value.
    #[serde(default)]
    pub reward_threshold: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes via field defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| OrchestratorError::Io { path: path.to_path_buf(), source })?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|source| OrchestratorError::Json { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |msg: String| Err(OrchestratorError::Config(msg));
        if self.contexts.is_empty() {
            return bad("at least one context is required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for ctx in &self.contexts {
            if !seen.insert(ctx) {
                return bad(format!("duplicate context {ctx:?}"));
            }
        }
        if self.corpus_dir.is_none() && self.corpus_count == 0 {
            return bad("corpus_count must be positive when synthesizing a corpus".into());
        }
        if self.clip_count == 0 || self.frames_per_clip == 0 {
            return bad("clip_count and frames_per_clip must be positive".into());
        }
        if self.clip_count.checked_mul(self.frames_per_clip).is_none() {
            return bad("clip_count x frames_per_clip overflows the frame budget".into());
        }
        if self.samples_per_context < 2 {
            return bad("samples_per_context must be at least 2 to form preferences".into());
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad(format!("learning_rate must be finite and >= 0, got {}", self.learning_rate));
        }
        for (name, w) in [
            ("weight_smoothness", self.weight_smoothness),
            ("weight_realism", self.weight_realism),
        ] {
            if !w.is_finite() || w < 0.0 {
                return bad(format!("{name} must be finite and >= 0, got {w}"));
            }
        }
        if let Some(th) = self.reward_threshold {
            if !th.is_finite() {
                return bad(format!("reward_threshold must be finite, got {th}"));
            }
        }
        self.kto.validate().map_err(OrchestratorError::PrefOpt)?;
        self.render_config_for("").validate().map_err(OrchestratorError::Sim)?;
        Ok(())
    }

    /// Total frames each rendered video carries.
    pub fn total_frames(&self) -> u32 {
        self.clip_count * self.frames_per_clip
    }

    /// The render configuration for one context. The seed mixes the
    /// master seed with a hash of the context name, so different contexts
    /// render on different trajectories while repeated scorings of the
    /// same (context, prompt) pair stay bit-identical across iterations.
    pub fn render_config_for(&self, context: &str) -> RenderConfig {
        RenderConfig {
            width: self.width,
            height: self.height,
            total_frames: self.total_frames(),
            base_jitter: self.base_jitter,
            seed: mix_seed(self.master_seed, fnv1a64(context.as_bytes())),
        }
    }
}
