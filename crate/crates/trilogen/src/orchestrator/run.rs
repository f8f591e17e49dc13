//! Scoring, per-iteration optimization, and the outer loop with its
//! persisted artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OrchestratorError, RunConfig};
use crate::imagekit::{write_frames_dir, Video};
use crate::prefopt::{
    build_preference_dataset, gradient_step, kto_loss, save_checkpoint, PolicyParams,
    PreferenceDataset, PromptChoice, ScoredPrompt,
};
use crate::realism::{build_corpus, realism_reward, RealismReport, ReferenceCorpus};
use crate::simgen::{expand_prompt, make_reference_corpus, render_script};
use crate::smoothness::{fid_adjacent, smoothness_reward, EmbedderSpec, FidCurve};
use crate::util::mix_seed;

/// Full scoring result for one prompt choice.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptScore {
    pub r_s: f64,
    pub r_a: f64,
    /// `weight_smoothness · r_s + weight_realism · r_a`.
    pub r_total: f64,
    pub fid: FidCurve,
    pub realism: RealismReport,
}

/// Renders the expanded script for `choice` under the run configuration.
fn render_choice(choice: &PromptChoice, cfg: &RunConfig) -> Result<Video, OrchestratorError> {
    let script = expand_prompt(&cfg.vocab, choice, cfg.clip_count, cfg.frames_per_clip)?;
    let render_cfg = cfg.render_config_for(&choice.context);
    Ok(render_script(&script, &render_cfg)?)
}

/// Expand → render → score. Deterministic: the render seed depends only
/// on (master seed, context), so rescoring a choice reproduces the exact
/// same video and rewards.
pub fn score_prompt(
    choice: &PromptChoice,
    cfg: &RunConfig,
    corpus: &ReferenceCorpus,
) -> Result<PromptScore, OrchestratorError> {
    let video = render_choice(choice, cfg)?;
    let fid = fid_adjacent(&video, &EmbedderSpec::default())?;
    let r_s = smoothness_reward(&fid);
    let realism = realism_reward(&video, corpus);
    let r_a = realism.reward();
    let r_total = cfg.weight_smoothness * r_s + cfg.weight_realism * r_a;
    if !r_total.is_finite() {
        return Err(OrchestratorError::NonFiniteReward {
            context: choice.context.clone(),
            text: cfg.vocab.phrase(&choice.selections)?,
        });
    }
    Ok(PromptScore { r_s, r_a, r_total, fid, realism })
}

/// Memo of prompt scores keyed by (context, selections). Valid across
/// iterations because scoring is a pure function of the run config.
#[derive(Debug, Default)]
pub struct ScoreCache {
    map: BTreeMap<(String, Vec<usize>), PromptScore>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, choice: &PromptChoice) -> Option<&PromptScore> {
        self.map.get(&(choice.context.clone(), choice.selections.clone()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Scores every choice not yet cached, in parallel, inserting results
    /// in input order so the cache contents are deterministic.
    pub fn fill(
        &mut self,
        choices: &[PromptChoice],
        cfg: &RunConfig,
        corpus: &ReferenceCorpus,
    ) -> Result<(), OrchestratorError> {
        let mut seen = BTreeSet::new();
        let missing: Vec<&PromptChoice> = choices
            .iter()
            .filter(|c| {
                let key = (c.context.clone(), c.selections.clone());
                !self.map.contains_key(&key) && seen.insert(key)
            })
            .collect();
        let scores: Vec<Result<PromptScore, OrchestratorError>> =
            missing.par_iter().map(|c| score_prompt(c, cfg, corpus)).collect();
        for (choice, score) in missing.into_iter().zip(scores) {
            self.map.insert((choice.context.clone(), choice.selections.clone()), score?);
        }
        Ok(())
    }
}

/// One sampled prompt and its rewards, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub context: String,
    pub text: String,
    pub selections: Vec<usize>,
    pub r_s: f64,
    pub r_a: f64,
    pub r_total: f64,
}

/// Everything `run_iteration` produces for the caller.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    /// Scored samples in draw order (contexts outer, samples inner).
    pub samples: Vec<SampleRecord>,
    pub dataset: PreferenceDataset,
    /// The policy after one KTO gradient step.
    pub policy: PolicyParams,
    pub loss_before: f64,
    pub loss_after: f64,
}

/// Samples `samples_per_context` choices per context from `policy`,
/// scores them (memoized), builds the preference dataset, and applies one
/// KTO step. Pure given (policy, reference, cfg, corpus, iteration_seed).
pub fn run_iteration(
    policy: &PolicyParams,
    reference: &PolicyParams,
    cfg: &RunConfig,
    corpus: &ReferenceCorpus,
    iteration_seed: u64,
    cache: &mut ScoreCache,
) -> Result<IterationOutcome, OrchestratorError> {
    let mut rng = ChaCha12Rng::seed_from_u64(iteration_seed);
    let mut choices = Vec::with_capacity(cfg.contexts.len() * cfg.samples_per_context);
    for context in &cfg.contexts {
        for _ in 0..cfg.samples_per_context {
            choices.push(policy.sample_choice(context, &mut rng)?);
        }
    }
    cache.fill(&choices, cfg, corpus)?;

    let mut samples = Vec::with_capacity(choices.len());
    let mut scored = Vec::with_capacity(choices.len());
    for choice in &choices {
        let score = cache.get(choice).expect("filled above");
        let text = cfg.vocab.phrase(&choice.selections)?;
        samples.push(SampleRecord {
            context: choice.context.clone(),
            text: text.clone(),
            selections: choice.selections.clone(),
            r_s: score.r_s,
            r_a: score.r_a,
            r_total: score.r_total,
        });
        scored.push(ScoredPrompt { choice: choice.clone(), text, reward: score.r_total });
    }

    let dataset = build_preference_dataset(&scored)?;
    let (loss_before, grad, _) = kto_loss(policy, reference, &dataset, cfg.kto)?;
    let updated = gradient_step(policy, &grad, cfg.learning_rate)?;
    let (loss_after, _, _) = kto_loss(&updated, reference, &dataset, cfg.kto)?;
    Ok(IterationOutcome { samples, dataset, policy: updated, loss_before, loss_after })
}

/// One iteration's row in the manifest. Paths are relative to the output
/// directory so reruns into different directories stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub samples: Vec<SampleRecord>,
    pub mean_reward: f64,
    pub max_reward: f64,
    pub loss_before: f64,
    pub loss_after: f64,
    /// Index into `samples` of the best (highest `r_total`) sample; ties
    /// resolve to the earliest draw.
    pub best_sample: usize,
    pub fid_csv: String,
    pub best_frames_dir: String,
}

/// The persisted record of a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub master_seed: u64,
    pub contexts: Vec<String>,
    pub samples_per_context: usize,
    pub iterations: Vec<IterationRecord>,
    pub initial_checkpoint: String,
    pub final_checkpoint: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = fs::read_to_string(path)
            .map_err(|source| OrchestratorError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text)
            .map_err(|source| OrchestratorError::Json { path: path.to_path_buf(), source })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), OrchestratorError> {
    fs::write(path, contents)
        .map_err(|source| OrchestratorError::Io { path: path.to_path_buf(), source })
}

fn load_or_build_corpus(cfg: &RunConfig) -> Result<ReferenceCorpus, OrchestratorError> {
    let dir: PathBuf = match &cfg.corpus_dir {
        Some(dir) => dir.clone(),
        None => {
            let dir = cfg.output_dir.join("corpus");
            make_reference_corpus(&dir, &cfg.render_config_for(""), cfg.corpus_count, cfg.corpus_seed)?;
            dir
        }
    };
    let corpus = build_corpus(&dir)?;
    if corpus.is_empty() {
        return Err(OrchestratorError::EmptyCorpus(dir));
    }
    Ok(corpus)
}

/// [`run_loop`] with a per-iteration callback (used by the CLI for
/// progress lines).
pub fn run_loop_with<F>(cfg: &RunConfig, mut on_iteration: F) -> Result<RunManifest, OrchestratorError>
where
    F: FnMut(&IterationRecord),
{
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)
        .map_err(|source| OrchestratorError::Io { path: out.clone(), source })?;
    let corpus = load_or_build_corpus(cfg)?;

    let initial = cfg.vocab.uniform_policy(&cfg.contexts)?;
    save_checkpoint(&initial, &out.join("policy_initial.json"))?;

    let mut reference = initial.clone();
    let mut policy = initial;
    let mut cache = ScoreCache::new();
    let mut records: Vec<IterationRecord> = Vec::with_capacity(cfg.iterations);

    for index in 1..=cfg.iterations {
        let record = (|| -> Result<IterationRecord, OrchestratorError> {
            let seed = mix_seed(cfg.master_seed, index as u64);
            let outcome = run_iteration(&policy, &reference, cfg, &corpus, seed, &mut cache)?;

            let mut best_sample = 0;
            for (i, s) in outcome.samples.iter().enumerate() {
                if s.r_total > outcome.samples[best_sample].r_total {
                    best_sample = i;
                }
            }
            let best = &outcome.samples[best_sample];

            let iter_rel = format!("iter_{index:03}");
            let iter_dir = out.join(&iter_rel);
            fs::create_dir_all(&iter_dir)
                .map_err(|source| OrchestratorError::Io { path: iter_dir.clone(), source })?;

            let best_choice = PromptChoice {
                context: best.context.clone(),
                selections: best.selections.clone(),
            };
            let best_score = cache.get(&best_choice).expect("best sample was scored");
            let fid_rel = format!("{iter_rel}/fid.csv");
            write_file(&out.join(&fid_rel), &best_score.fid.to_csv())?;
            let frames_rel = format!("{iter_rel}/best_frames");
            write_frames_dir(&out.join(&frames_rel), &render_choice(&best_choice, cfg)?)?;

            let n = outcome.samples.len() as f64;
            let mean_reward = outcome.samples.iter().map(|s| s.r_total).sum::<f64>() / n;
            let max_reward = best.r_total;

            policy = outcome.policy;
            if cfg.refresh_reference {
                reference = policy.clone();
            }
            Ok(IterationRecord {
                iteration: index,
                samples: outcome.samples,
                mean_reward,
                max_reward,
                loss_before: outcome.loss_before,
                loss_after: outcome.loss_after,
                best_sample,
                fid_csv: fid_rel,
                best_frames_dir: frames_rel,
            })
        })()
        .map_err(|e| OrchestratorError::Iteration { index, source: Box::new(e) })?;

        on_iteration(&record);
        let stop = cfg.reward_threshold.is_some_and(|th| record.mean_reward >= th);
        records.push(record);
        if stop {
            break;
        }
    }

    let final_checkpoint = if records.is_empty() {
        "policy_initial.json".to_string()
    } else {
        save_checkpoint(&policy, &out.join("policy_final.json"))?;
        "policy_final.json".to_string()
    };

    let manifest = RunManifest {
        master_seed: cfg.master_seed,
        contexts: cfg.contexts.clone(),
        samples_per_context: cfg.samples_per_context,
        iterations: records,
        initial_checkpoint: "policy_initial.json".to_string(),
        final_checkpoint,
    };
    write_file(&out.join("manifest.json"), &manifest.to_json())?;
    Ok(manifest)
}

/// Runs the full configured loop: per-iteration sampling, scoring, and
/// KTO updates, with all artifacts written under `cfg.output_dir`.
pub fn run_loop(cfg: &RunConfig) -> Result<RunManifest, OrchestratorError> {
    run_loop_with(cfg, |_| {})
}
