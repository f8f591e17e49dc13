//! Preference optimization on the factored categorical prompt policy.
//!
//! Scored prompts are split per context into a desirable top half and an
//! undesirable bottom half; KTO pushes probability toward the desirable
//! ones relative to a frozen reference policy. This example trains on a
//! hand-made reward (favoring "smoothly" and penalizing "darts") so the
//! mechanics are visible without any rendering.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use trilogen::prefopt::{
    build_preference_dataset, dpo_loss, exact_reference_kl, gradient_step, kto_loss, KtoConfig,
    ScoredPrompt,
};
use trilogen::simgen::TokenVocab;

fn main() -> anyhow::Result<()> {
    let vocab = TokenVocab::standard();
    let contexts = vec!["a trilobite crossing the seabed".to_string()];
    let reference = vocab.uniform_policy(&contexts)?;
    let mut policy = reference.clone();
    let mut rng = ChaCha12Rng::seed_from_u64(1);

    // A synthetic reward: smooth transitions good, darting bad.
    let reward_of = |text: &str| {
        let mut r = 0.0;
        if text.contains("smoothly") {
            r += 1.0;
        }
        if text.contains("darts") {
            r -= 1.0;
        }
        r
    };

    let kto = KtoConfig::default();
    for step in 0..30 {
        // Sample a batch from the current policy and score it.
        let mut scored = Vec::new();
        for _ in 0..16 {
            let choice = policy.sample_choice(&contexts[0], &mut rng)?;
            let text = vocab.phrase(&choice.selections)?;
            let reward = reward_of(&text);
            scored.push(ScoredPrompt { choice, text, reward });
        }
        let dataset = build_preference_dataset(&scored)?;

        let (loss, grad, z0) = kto_loss(&policy, &reference, &dataset, kto)?;
        let (dpo, _) = dpo_loss(&policy, &reference, dataset.pairs(), kto.beta)?;
        if step % 5 == 0 {
            println!("step {step:>2}: KTO loss {loss:.4} (z0 {z0:.4}), DPO loss {dpo:.4}");
        }
        policy = gradient_step(&policy, &grad, 25.0)?;
    }

    // The transition slot should now prefer "smoothly", and the movement
    // slot should avoid "darts". (Reward ties break deterministically by
    // prompt text, so slots the reward ignores can still drift; only the
    // rewarded tokens' trends are meaningful.)
    for slot in policy.contexts()[0].slots() {
        let probs: Vec<String> = slot
            .vocab()
            .iter()
            .zip(slot.probabilities())
            .map(|(tok, p)| format!("{tok:?} {p:.2}"))
            .collect();
        println!("{}: {}", slot.name(), probs.join(", "));
    }

    let kl = exact_reference_kl(
        &policy,
        &reference,
        std::iter::once(contexts[0].as_str()),
    )?;
    println!("KL(policy || reference) after training: {kl:.4}");
    Ok(())
}
