//! The deterministic stand-in for the video generator: a procedural
//! trilobite renderer whose fidelity and jitter respond to prompt tokens,
//! plus the diffusion-style forward-noising utility and synthetic
//! reference-corpus generation.
//!
//! The token-to-rendering mapping is an explicit simulation contract:
//!
//! * detail adjectives raise segment-line count and texture contrast,
//!   which raises ORB matchability against the reference corpus;
//! * transition phrases scale positional jitter ("smoothly" 0.2×,
//!   "gradually" 0.6×, "abruptly" 2×) and decide whether the sprite's
//!   position carries across a clip boundary;
//! * movement verbs set the horizontal cruise speed.
//!
//! Everything is a pure function of (inputs, seed): identical calls give
//! bit-identical outputs.

mod noise;
mod render;

use serde::{Deserialize, Serialize};

use crate::imagekit::ImageError;
use crate::prefopt::{ContextPolicy, PolicyParams, PrefOptError, PromptChoice, SlotPolicy};
use crate::script::{PromptScript, ScriptError};

pub use noise::{forward_noise, forward_noise_with_eps, noise_mix, NoiseSchedule};
pub use render::{
    detail_level, jitter_scale, keeps_continuity, make_reference_corpus, movement_speed,
    render_script, render_still, DetailLevel,
};

/// Errors from the simulated generator.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("selection index {index} out of range for slot {slot} ({len} tokens)")]
    BadSelection { slot: usize, index: usize, len: usize },
    #[error("choice has {got} selections but the vocabulary has {want} slots")]
    WrongSlotCount { got: usize, want: usize },
    #[error("diffusion step {t} outside 1..={max}")]
    BadStep { t: usize, max: usize },
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One categorical slot of the prompt template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSlot {
    name: String,
    tokens: Vec<String>,
}

impl TokenSlot {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// The fixed prompt vocabulary: a movement verb, a detail adjective, and
/// a transition phrase. Every prompt choice selects exactly one token
/// per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    slots: Vec<TokenSlot>,
}

impl Default for TokenVocab {
    fn default() -> Self {
        Self::standard()
    }
}

impl TokenVocab {
    /// The standard 3 × 4 × 3 vocabulary used throughout the pipeline.
    pub fn standard() -> Self {
        let slot = |name: &str, tokens: &[&str]| TokenSlot {
            name: name.to_string(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        };
        Self {
            slots: vec![
                slot("movement", &["glides", "crawls", "darts"]),
                slot(
                    "detail",
                    &["hard shell", "longitudinal lobes", "segmented", "plain"],
                ),
                slot("transition", &["smoothly", "abruptly", "gradually"]),
            ],
        }
    }

    pub fn slots(&self) -> &[TokenSlot] {
        &self.slots
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Total number of distinct prompts (the product of slot sizes).
    pub fn grid_size(&self) -> usize {
        self.slots.iter().map(|s| s.tokens.len()).product()
    }

    /// Maps a selection vector to its tokens.
    pub fn tokens_of(&self, selections: &[usize]) -> Result<Vec<&str>, SimError> {
        if selections.len() != self.slots.len() {
            return Err(SimError::WrongSlotCount {
                got: selections.len(),
                want: self.slots.len(),
            });
        }
        selections
            .iter()
            .zip(&self.slots)
            .enumerate()
            .map(|(slot, (&index, s))| {
                s.tokens
                    .get(index)
                    .map(String::as_str)
                    .ok_or(SimError::BadSelection { slot, index, len: s.tokens.len() })
            })
            .collect()
    }

    /// The clip text for a selection: tokens joined by single spaces,
    /// e.g. `"glides hard shell smoothly"`.
    pub fn phrase(&self, selections: &[usize]) -> Result<String, SimError> {
        Ok(self.tokens_of(selections)?.join(" "))
    }

    /// A uniform policy over this vocabulary for the given contexts:
    /// one categorical slot per token slot, all logits zero.
    pub fn uniform_policy(&self, contexts: &[String]) -> Result<PolicyParams, PrefOptError> {
        let contexts = contexts
            .iter()
            .map(|ctx| {
                ContextPolicy::new(
                    ctx.clone(),
                    self.slots
                        .iter()
                        .map(|s| SlotPolicy::uniform(s.name.clone(), s.tokens.clone()))
                        .collect(),
                )
            })
            .collect();
        PolicyParams::new(contexts)
    }

    /// Every selection vector in lexicographic order (first slot
    /// slowest) — the exhaustive prompt grid.
    pub fn enumerate_selections(&self) -> Vec<Vec<usize>> {
        let mut all: Vec<Vec<usize>> = vec![vec![]];
        for slot in &self.slots {
            let mut next = Vec::with_capacity(all.len() * slot.tokens.len());
            for prefix in &all {
                for v in 0..slot.tokens.len() {
                    let mut sel = prefix.clone();
                    sel.push(v);
                    next.push(sel);
                }
            }
            all = next;
        }
        all
    }
}

/// Rendering parameters for [`render_script`] and the corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Frame width in pixels.
    pub width: u32,
    /// Frame height in pixels.
    pub height: u32,
    /// Total frames of the rendered video; clip extents are derived
    /// from the script against this budget.
    pub total_frames: u32,
    /// Base positional jitter amplitude in pixels, scaled per clip by
    /// the transition token.
    pub base_jitter: f64,
    /// Seed for all trajectory and background randomness.
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { width: 128, height: 128, total_frames: 48, base_jitter: 2.5, seed: 0 }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.width == 0 || self.height == 0 {
            return Err(SimError::BadConfig(format!(
                "frame dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if self.total_frames == 0 {
            return Err(SimError::BadConfig("total_frames must be positive".into()));
        }
        if !self.base_jitter.is_finite() || self.base_jitter < 0.0 {
            return Err(SimError::BadConfig(format!(
                "base_jitter must be finite and nonnegative, got {}",
                self.base_jitter
            )));
        }
        Ok(())
    }
}

/// Expands a prompt choice into a deterministic script: clip `n`
/// (0-based) starts at frame `1 + n * frames_per_clip` and every clip
/// carries the phrase built from the chosen tokens.
pub fn expand_prompt(
    vocab: &TokenVocab,
    choice: &PromptChoice,
    clip_count: u32,
    frames_per_clip: u32,
) -> Result<PromptScript, SimError> {
    if clip_count == 0 {
        return Err(SimError::BadConfig("clip_count must be positive".into()));
    }
    if frames_per_clip == 0 {
        return Err(SimError::BadConfig("frames_per_clip must be positive".into()));
    }
    let text = vocab.phrase(&choice.selections)?;
    let clips = (0..clip_count)
        .map(|n| crate::script::Clip { start_frame: 1 + n * frames_per_clip, text: text.clone() })
        .collect();
    Ok(PromptScript::new(clips)?)
}
