//! The factored categorical policy, its exact log-probabilities, gradient
//! containers, the descent step, and JSON checkpointing.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PrefOptError, PromptChoice};

/// One categorical slot: a vocabulary and a logit per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotPolicy {
    name: String,
    vocab: Vec<String>,
    logits: Vec<f64>,
}

impl SlotPolicy {
    /// A slot starting from the uniform distribution (all logits 0).
    pub fn uniform(name: impl Into<String>, vocab: Vec<String>) -> Self {
        let logits = vec![0.0; vocab.len()];
        Self { name: name.into(), vocab, logits }
    }

    pub fn with_logits(
        name: impl Into<String>,
        vocab: Vec<String>,
        logits: Vec<f64>,
    ) -> Result<Self, PrefOptError> {
        let slot = Self { name: name.into(), vocab, logits };
        slot.validate()?;
        Ok(slot)
    }

    fn validate(&self) -> Result<(), PrefOptError> {
        if self.vocab.is_empty() {
            return Err(PrefOptError::BadPolicy(format!(
                "slot '{}' has an empty vocabulary",
                self.name
            )));
        }
        if self.vocab.len() != self.logits.len() {
            return Err(PrefOptError::BadPolicy(format!(
                "slot '{}' has {} vocabulary entries but {} logits",
                self.name,
                self.vocab.len(),
                self.logits.len()
            )));
        }
        if let Some(bad) = self.logits.iter().find(|l| !l.is_finite()) {
            return Err(PrefOptError::BadPolicy(format!(
                "slot '{}' has non-finite logit {bad}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Softmax probabilities, computed with the max-shift for stability.
    pub fn probabilities(&self) -> Vec<f64> {
        let m = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    /// `log softmax(logits)[index]`.
    pub fn log_prob_of(&self, index: usize) -> f64 {
        let m = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = self
            .logits
            .iter()
            .map(|l| (l - m).exp())
            .sum::<f64>()
            .ln()
            + m;
        self.logits[index] - log_z
    }
}

/// All slots of one context, in slot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPolicy {
    context: String,
    slots: Vec<SlotPolicy>,
}

impl ContextPolicy {
    pub fn new(context: impl Into<String>, slots: Vec<SlotPolicy>) -> Self {
        Self { context: context.into(), slots }
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn slots(&self) -> &[SlotPolicy] {
        &self.slots
    }
}

/// The full policy: a list of contexts, each with its slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContextPolicy>", into = "Vec<ContextPolicy>")]
pub struct PolicyParams {
    contexts: Vec<ContextPolicy>,
}

impl TryFrom<Vec<ContextPolicy>> for PolicyParams {
    type Error = PrefOptError;
    fn try_from(contexts: Vec<ContextPolicy>) -> Result<Self, Self::Error> {
        Self::new(contexts)
    }
}

impl From<PolicyParams> for Vec<ContextPolicy> {
    fn from(p: PolicyParams) -> Self {
        p.contexts
    }
}

impl PolicyParams {
    pub fn new(contexts: Vec<ContextPolicy>) -> Result<Self, PrefOptError> {
        if contexts.is_empty() {
            return Err(PrefOptError::BadPolicy("policy has no contexts".into()));
        }
        for ctx in &contexts {
            if ctx.slots.is_empty() {
                return Err(PrefOptError::BadPolicy(format!(
                    "context '{}' has no slots",
                    ctx.context
                )));
            }
            for slot in &ctx.slots {
                slot.validate()?;
            }
        }
        let mut names: Vec<&str> = contexts.iter().map(|c| c.context.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != contexts.len() {
            return Err(PrefOptError::BadPolicy("duplicate context ids".into()));
        }
        Ok(Self { contexts })
    }

    pub fn contexts(&self) -> &[ContextPolicy] {
        &self.contexts
    }

    pub fn context(&self, id: &str) -> Result<&ContextPolicy, PrefOptError> {
        self.contexts
            .iter()
            .find(|c| c.context == id)
            .ok_or_else(|| PrefOptError::UnknownContext(id.to_string()))
    }

    /// Checks that `choice` is addressable in this policy.
    pub fn check_choice(&self, choice: &PromptChoice) -> Result<&ContextPolicy, PrefOptError> {
        let ctx = self.context(&choice.context)?;
        if choice.selections.len() != ctx.slots.len() {
            return Err(PrefOptError::WrongSlotCount {
                context: choice.context.clone(),
                got: choice.selections.len(),
                want: ctx.slots.len(),
            });
        }
        for (s, (&index, slot)) in choice.selections.iter().zip(&ctx.slots).enumerate() {
            if index >= slot.vocab.len() {
                return Err(PrefOptError::BadSelection {
                    context: choice.context.clone(),
                    slot: s,
                    index,
                    len: slot.vocab.len(),
                });
            }
        }
        Ok(ctx)
    }

    /// Checks that `other` has identical contexts, slots, and vocabularies
    /// (logits may differ).
    pub fn check_same_structure(&self, other: &PolicyParams) -> Result<(), PrefOptError> {
        if self.contexts.len() != other.contexts.len() {
            return Err(PrefOptError::StructureMismatch(format!(
                "{} contexts vs {}",
                self.contexts.len(),
                other.contexts.len()
            )));
        }
        for (a, b) in self.contexts.iter().zip(&other.contexts) {
            if a.context != b.context {
                return Err(PrefOptError::StructureMismatch(format!(
                    "context '{}' vs '{}'",
                    a.context, b.context
                )));
            }
            if a.slots.len() != b.slots.len() {
                return Err(PrefOptError::StructureMismatch(format!(
                    "context '{}': {} slots vs {}",
                    a.context,
                    a.slots.len(),
                    b.slots.len()
                )));
            }
            for (sa, sb) in a.slots.iter().zip(&b.slots) {
                if sa.name != sb.name || sa.vocab != sb.vocab {
                    return Err(PrefOptError::StructureMismatch(format!(
                        "context '{}', slot '{}': vocabulary differs",
                        a.context, sa.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Samples one choice for `context` from the current softmax
    /// distributions, slot by slot.
    pub fn sample_choice<R: Rng>(
        &self,
        context: &str,
        rng: &mut R,
    ) -> Result<PromptChoice, PrefOptError> {
        let ctx = self.context(context)?;
        let mut selections = Vec::with_capacity(ctx.slots.len());
        for slot in &ctx.slots {
            let probs = slot.probabilities();
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut picked = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    picked = i;
                    break;
                }
            }
            selections.push(picked);
        }
        Ok(PromptChoice { context: context.to_string(), selections })
    }

    /// Every possible selection vector for `context`, in lexicographic
    /// order (first slot slowest). Exhaustive enumeration is practical
    /// because slot vocabularies are tiny by construction.
    pub fn enumerate_selections(&self, context: &str) -> Result<Vec<Vec<usize>>, PrefOptError> {
        let ctx = self.context(context)?;
        let mut all: Vec<Vec<usize>> = vec![vec![]];
        for slot in &ctx.slots {
            let mut next = Vec::with_capacity(all.len() * slot.vocab.len());
            for prefix in &all {
                for v in 0..slot.vocab.len() {
                    let mut sel = prefix.clone();
                    sel.push(v);
                    next.push(sel);
                }
            }
            all = next;
        }
        Ok(all)
    }
}

/// Exact log-probability of a choice:
/// `Σ_slots log softmax(logits)[selection]`.
pub fn log_prob(policy: &PolicyParams, choice: &PromptChoice) -> Result<f64, PrefOptError> {
    let ctx = policy.check_choice(choice)?;
    Ok(choice
        .selections
        .iter()
        .zip(ctx.slots())
        .map(|(&sel, slot)| slot.log_prob_of(sel))
        .sum())
}

/// A gradient with the same shape as a policy's logits, indexed
/// `[context][slot][vocab entry]` in the policy's own order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrad {
    values: Vec<Vec<Vec<f64>>>,
}

impl PolicyGrad {
    pub fn zeros_like(policy: &PolicyParams) -> Self {
        let values = policy
            .contexts()
            .iter()
            .map(|c| c.slots().iter().map(|s| vec![0.0; s.vocab().len()]).collect())
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<Vec<Vec<f64>>> {
        &mut self.values
    }

    pub fn scale(&mut self, factor: f64) {
        for ctx in &mut self.values {
            for slot in ctx {
                for v in slot {
                    *v *= factor;
                }
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn matches_shape(&self, policy: &PolicyParams) -> bool {
        self.values.len() == policy.contexts().len()
            && self.values.iter().zip(policy.contexts()).all(|(vc, pc)| {
                vc.len() == pc.slots().len()
                    && vc
                        .iter()
                        .zip(pc.slots())
                        .all(|(vs, ps)| vs.len() == ps.vocab().len())
            })
    }
}

/// One plain gradient-descent step: `logits − learning_rate · gradient`,
/// returned as a new policy (the input and any reference stay untouched).
pub fn gradient_step(
    policy: &PolicyParams,
    grad: &PolicyGrad,
    learning_rate: f64,
) -> Result<PolicyParams, PrefOptError> {
    if !learning_rate.is_finite() || learning_rate < 0.0 {
        return Err(PrefOptError::BadLearningRate(learning_rate));
    }
    if !grad.matches_shape(policy) {
        return Err(PrefOptError::StructureMismatch(
            "gradient shape does not match the policy".into(),
        ));
    }
    let contexts = policy
        .contexts()
        .iter()
        .zip(grad.values())
        .map(|(ctx, gctx)| {
            let slots = ctx
                .slots()
                .iter()
                .zip(gctx)
                .map(|(slot, gslot)| SlotPolicy {
                    name: slot.name.clone(),
                    vocab: slot.vocab.clone(),
                    logits: slot
                        .logits
                        .iter()
                        .zip(gslot)
                        .map(|(l, g)| l - learning_rate * g)
                        .collect(),
                })
                .collect();
            ContextPolicy { context: ctx.context.clone(), slots }
        })
        .collect();
    PolicyParams::new(contexts)
}

/// Writes the policy as pretty JSON: contexts, slots, vocabularies, and
/// full-precision logits. Loading reproduces `log_prob` bit-exactly.
pub fn save_checkpoint(policy: &PolicyParams, path: &Path) -> Result<(), PrefOptError> {
    let text =
        serde_json::to_string_pretty(policy).expect("policy serialization cannot fail");
    std::fs::write(path, text).map_err(|source| PrefOptError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates a policy checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<PolicyParams, PrefOptError> {
    let text = std::fs::read_to_string(path).map_err(|source| PrefOptError::File {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PrefOptError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}


#[cfg(test)]
mod tests {
    use super::test_policies::{single_slot_uniform, small_random};
    use super::*;

    fn choice(ctx: &str, sels: &[usize]) -> PromptChoice {
        PromptChoice { context: ctx.into(), selections: sels.to_vec() }
    }

    #[test]
    fn uniform_single_slot_is_quarter() {
        let p = single_slot_uniform();
        for i in 0..4 {
            let lp = log_prob(&p, &choice("ctx", &[i])).unwrap();
            assert_eq!(lp, 0.25f64.ln());
        }
    }

    #[test]
    fn log_prob_factorizes_over_slots() {
        let p = small_random(7);
        let c = choice("alpha", &[2, 1, 0]);
        let lp = log_prob(&p, &c).unwrap();
        let slots = p.context("alpha").unwrap().slots();
        let manual = slots[0].log_prob_of(2) + slots[1].log_prob_of(1) + slots[2].log_prob_of(0);
        assert_eq!(lp, manual);
    }

    #[test]
    fn log_prob_is_shift_invariant() {
        let p = small_random(3);
        let c = choice("alpha", &[0, 3, 1]);
        let before = log_prob(&p, &c).unwrap();
        // Shift every logit of slot 1 by a constant.
        let mut contexts: Vec<ContextPolicy> = p.contexts().to_vec();
        let slot = &contexts[0].slots()[1];
        let shifted = SlotPolicy::with_logits(
            slot.name(),
            slot.vocab().to_vec(),
            slot.logits().iter().map(|l| l + 11.25).collect(),
        )
        .unwrap();
        let mut slots = contexts[0].slots().to_vec();
        slots[1] = shifted;
        contexts[0] = ContextPolicy::new("alpha", slots);
        let p2 = PolicyParams::new(contexts).unwrap();
        let after = log_prob(&p2, &c).unwrap();
        assert!((before - after).abs() < 1e-12, "{before} vs {after}");
    }

    #[test]
    fn bad_choices_are_rejected() {
        let p = single_slot_uniform();
        assert!(matches!(
            log_prob(&p, &choice("nope", &[0])),
            Err(PrefOptError::UnknownContext(_))
        ));
        assert!(matches!(
            log_prob(&p, &choice("ctx", &[0, 1])),
            Err(PrefOptError::WrongSlotCount { .. })
        ));
        assert!(matches!(
            log_prob(&p, &choice("ctx", &[4])),
            Err(PrefOptError::BadSelection { .. })
        ));
    }

    #[test]
    fn invalid_policies_are_rejected() {
        assert!(PolicyParams::new(vec![]).is_err());
        assert!(SlotPolicy::with_logits("s", vec![], vec![]).is_err());
        assert!(SlotPolicy::with_logits("s", vec!["a".into()], vec![0.0, 1.0]).is_err());
        assert!(SlotPolicy::with_logits("s", vec!["a".into()], vec![f64::NAN]).is_err());
        let dup = PolicyParams::new(vec![
            ContextPolicy::new("x", vec![SlotPolicy::uniform("s", vec!["a".into()])]),
            ContextPolicy::new("x", vec![SlotPolicy::uniform("s", vec!["a".into()])]),
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn zero_gradient_and_zero_rate_are_fixed_points() {
        let p = small_random(9);
        let zeros = PolicyGrad::zeros_like(&p);
        assert_eq!(gradient_step(&p, &zeros, 0.5).unwrap(), p);

        let mut grad = PolicyGrad::zeros_like(&p);
        grad.values_mut()[0][0][0] = 3.0;
        assert_eq!(gradient_step(&p, &grad, 0.0).unwrap(), p);

        let stepped = gradient_step(&p, &grad, 0.1).unwrap();
        let moved = stepped.contexts()[0].slots()[0].logits()[0];
        let orig = p.contexts()[0].slots()[0].logits()[0];
        assert!((moved - (orig - 0.3)).abs() < 1e-15);
        assert!(matches!(
            gradient_step(&p, &grad, f64::NAN),
            Err(PrefOptError::BadLearningRate(_))
        ));
        assert!(matches!(
            gradient_step(&p, &grad, -0.1),
            Err(PrefOptError::BadLearningRate(_))
        ));
    }

    #[test]
    fn gradient_shape_mismatch_is_rejected() {
        let p = small_random(9);
        let other = single_slot_uniform();
        let grad = PolicyGrad::zeros_like(&other);
        assert!(matches!(
            gradient_step(&p, &grad, 0.1),
            Err(PrefOptError::StructureMismatch(_))
        ));
    }

    #[test]
    fn structure_check_sees_vocab_differences() {
        let a = single_slot_uniform();
        assert!(a.check_same_structure(&a).is_ok());
        let b = PolicyParams::new(vec![ContextPolicy::new(
            "ctx",
            vec![SlotPolicy::uniform(
                "move",
                vec!["a".into(), "b".into(), "c".into(), "x".into()],
            )],
        )])
        .unwrap();
        assert!(matches!(
            a.check_same_structure(&b),
            Err(PrefOptError::StructureMismatch(_))
        ));
    }

    #[test]
    fn sampling_respects_support_and_determinism() {
        use rand::SeedableRng;
        let p = small_random(1);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let c1 = p.sample_choice("alpha", &mut rng).unwrap();
        p.check_choice(&c1).unwrap();
        let mut rng2 = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let c2 = p.sample_choice("alpha", &mut rng2).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn sampling_matches_probabilities_in_frequency() {
        use rand::SeedableRng;
        // One peaked slot: softmax([3, 0, 0]) puts ~0.91 on option 0.
        let p = PolicyParams::new(vec![ContextPolicy::new(
            "c",
            vec![SlotPolicy::with_logits(
                "s",
                vec!["x".into(), "y".into(), "z".into()],
                vec![3.0, 0.0, 0.0],
            )
            .unwrap()],
        )])
        .unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 4000;
        let hits = (0..n)
            .filter(|_| p.sample_choice("c", &mut rng).unwrap().selections[0] == 0)
            .count();
        let expected = p.contexts()[0].slots()[0].probabilities()[0];
        let freq = hits as f64 / n as f64;
        assert!((freq - expected).abs() < 0.03, "freq {freq} vs {expected}");
    }

    #[test]
    fn enumeration_is_exhaustive_and_ordered() {
        let p = small_random(2);
        let all = p.enumerate_selections("beta").unwrap();
        assert_eq!(all.len(), 3 * 2);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![2, 1]);
        let unique: std::collections::BTreeSet<_> = all.iter().collect();
        assert_eq!(unique.len(), all.len());
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let p = small_random(42);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        save_checkpoint(&p, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(p, back);
        let c = PromptChoice { context: "alpha".into(), selections: vec![1, 2, 1] };
        assert_eq!(log_prob(&p, &c).unwrap(), log_prob(&back, &c).unwrap());
    }

    #[test]
    fn checkpoint_load_rejects_invalid_policies() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "[]").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(PrefOptError::Checkpoint { .. })
        ));
        let missing = dir.path().join("nope.json");
        assert!(matches!(load_checkpoint(&missing), Err(PrefOptError::File { .. })));
    }
}
