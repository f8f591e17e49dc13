//! Turning reward-scored prompts into a preference dataset: per context,
//! the top half of the reward ranking becomes desirable, the bottom half
//! undesirable (the median sample of an odd-sized group is dropped), and
//! rank `i` of each half is paired for pairwise objectives.

use serde::{Deserialize, Serialize};

use super::{PrefOptError, PreferenceExample, PreferencePair, PromptChoice};

/// One sampled prompt with the total reward its rendered video earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrompt {
    pub choice: PromptChoice,
    /// The serialized prompt text; ties in reward are broken by this,
    /// ascending, so ranking is deterministic.
    pub text: String,
    pub reward: f64,
}

/// Labeled examples plus rank-matched pairs derived from one scoring round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct PreferenceDataset {
    examples: Vec<PreferenceExample>,
    pairs: Vec<PreferencePair>,
}

/// Deserialization shadow for [`PreferenceDataset`]; funnels loaded data
/// through [`PreferenceDataset::new`] so the non-empty invariant holds.
#[derive(Deserialize)]
struct RawDataset {
    examples: Vec<PreferenceExample>,
    pairs: Vec<PreferencePair>,
}

impl TryFrom<RawDataset> for PreferenceDataset {
    type Error = PrefOptError;

    fn try_from(raw: RawDataset) -> Result<Self, Self::Error> {
        Self::new(raw.examples, raw.pairs)
    }
}

impl PreferenceDataset {
    pub fn new(
        examples: Vec<PreferenceExample>,
        pairs: Vec<PreferencePair>,
    ) -> Result<Self, PrefOptError> {
        if examples.is_empty() {
            return Err(PrefOptError::EmptyDataset);
        }
        Ok(Self { examples, pairs })
    }

    pub fn examples(&self) -> &[PreferenceExample] {
        &self.examples
    }

    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    /// Number of desirable examples (the undesirable count is equal by
    /// construction when built by [`build_preference_dataset`]).
    pub fn desirable_count(&self) -> usize {
        self.examples.iter().filter(|e| e.desirable).count()
    }
}

/// Builds the preference dataset from scored prompts.
///
/// Contexts are processed in order of first appearance. Within a context
/// the prompts are ranked by reward, descending, with ties broken by the
/// prompt text ascending. With `n` samples and `half = n / 2`, ranks
/// `0..half` become desirable, ranks `n-half..n` undesirable (for odd
/// `n` the median is excluded), and pair `i` matches rank `i` of each
/// half. Every context must contribute at least two samples.
pub fn build_preference_dataset(
    scored: &[ScoredPrompt],
) -> Result<PreferenceDataset, PrefOptError> {
    if scored.is_empty() {
        return Err(PrefOptError::EmptyDataset);
    }
    let mut order: Vec<&str> = Vec::new();
    for s in scored {
        if !order.iter().any(|c| *c == s.choice.context) {
            order.push(&s.choice.context);
        }
    }
    let mut examples = Vec::new();
    let mut pairs = Vec::new();
    for ctx in order {
        let mut group: Vec<&ScoredPrompt> = scored
            .iter()
            .filter(|s| s.choice.context == ctx)
            .collect();
        let n = group.len();
        if n < 2 {
            return Err(PrefOptError::TooFewSamples { context: ctx.to_string(), got: n });
        }
        group.sort_by(|a, b| {
            b.reward
                .total_cmp(&a.reward)
                .then_with(|| a.text.cmp(&b.text))
        });
        let half = n / 2;
        for s in &group[..half] {
            examples.push(PreferenceExample { choice: s.choice.clone(), desirable: true });
        }
        for s in &group[n - half..] {
            examples.push(PreferenceExample { choice: s.choice.clone(), desirable: false });
        }
        for i in 0..half {
            pairs.push(PreferencePair {
                winner: group[i].choice.clone(),
                loser: group[n - half + i].choice.clone(),
            });
        }
    }
    PreferenceDataset::new(examples, pairs)
}
