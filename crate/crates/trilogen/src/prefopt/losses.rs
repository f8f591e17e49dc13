//! Loss functions and their exact analytic gradients: the Bradley–Terry
//! reward model, the KL-regularized objective value, DPO, the exact
//! categorical reference KL, and KTO.

use super::policy::{log_prob, PolicyGrad, PolicyParams};
use super::{KtoConfig, PrefOptError, PreferenceDataset, PreferencePair};

/// Numerically stable logistic function `1 / (1 + e^{-x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `σ'(x) = σ(x) (1 − σ(x))`.
fn sigmoid_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Numerically stable `softplus(x) = ln(1 + e^x)`, so that
/// `−ln σ(x) = softplus(−x)` without catastrophic cancellation.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bradley–Terry preference probability `σ(r_w − r_l)` that the first
/// reward wins the comparison.
pub fn bradley_terry(reward_winner: f64, reward_loser: f64) -> f64 {
    sigmoid(reward_winner - reward_loser)
}

/// Mean negative log-likelihood of observed comparisons `(r_w, r_l)`
/// under the Bradley–Terry model: `mean(−ln σ(r_w − r_l))`.
pub fn reward_model_nll(comparisons: &[(f64, f64)]) -> Result<f64, PrefOptError> {
    if comparisons.is_empty() {
        return Err(PrefOptError::EmptyDataset);
    }
    let total: f64 = comparisons
        .iter()
        .map(|&(w, l)| softplus(l - w))
        .sum();
    Ok(total / comparisons.len() as f64)
}

/// The KL-regularized objective `J = E[reward] − β · E[KL]`, evaluated
/// from already-aggregated means.
pub fn kl_objective_value(
    mean_reward: f64,
    mean_kl: f64,
    beta: f64,
) -> Result<f64, PrefOptError> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(PrefOptError::BadConfig(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if !mean_kl.is_finite() || mean_kl < 0.0 {
        return Err(PrefOptError::NegativeKl(mean_kl));
    }
    Ok(mean_reward - beta * mean_kl)
}

fn context_index(policy: &PolicyParams, id: &str) -> Result<usize, PrefOptError> {
    policy
        .contexts()
        .iter()
        .position(|c| c.context() == id)
        .ok_or_else(|| PrefOptError::UnknownContext(id.to_string()))
}

/// DPO loss and its exact gradient with respect to the policy logits,
/// averaged over the pairs:
///
/// `L = mean(−ln σ(h))` with
/// `h = β [(logπ_θ(w) − logπ_ref(w)) − (logπ_θ(l) − logπ_ref(l))]`.
///
/// Because winner and loser share a context, the softmax terms of
/// `∂ log π/∂θ` cancel and each pair contributes
/// `−σ(−h) · β · (1[w_s = v] − 1[l_s = v])` at logit `(c, s, v)`.
pub fn dpo_loss(
    policy: &PolicyParams,
    reference: &PolicyParams,
    pairs: &[PreferencePair],
    beta: f64,
) -> Result<(f64, PolicyGrad), PrefOptError> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(PrefOptError::BadConfig(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    policy.check_same_structure(reference)?;
    if pairs.is_empty() {
        return Err(PrefOptError::EmptyDataset);
    }
    let mut grad = PolicyGrad::zeros_like(policy);
    let mut loss_sum = 0.0;
    for pair in pairs {
        if pair.winner.context != pair.loser.context {
            return Err(PrefOptError::MixedPair {
                winner: pair.winner.context.clone(),
                loser: pair.loser.context.clone(),
            });
        }
        let ci = context_index(policy, &pair.winner.context)?;
        let ratio_w = log_prob(policy, &pair.winner)? - log_prob(reference, &pair.winner)?;
        let ratio_l = log_prob(policy, &pair.loser)? - log_prob(reference, &pair.loser)?;
        let h = beta * (ratio_w - ratio_l);
        loss_sum += softplus(-h);
        let coeff = -sigmoid(-h) * beta;
        for s in 0..policy.contexts()[ci].slots().len() {
            let w = pair.winner.selections[s];
            let l = pair.loser.selections[s];
            if w != l {
                grad.values_mut()[ci][s][w] += coeff;
                grad.values_mut()[ci][s][l] -= coeff;
            }
        }
    }
    let n = pairs.len() as f64;
    grad.scale(1.0 / n);
    Ok((loss_sum / n, grad))
}

/// Exact mean KL divergence `KL(π_θ(·|x) ∥ π_ref(·|x))`, averaged over
/// the given context ids *with multiplicity*. Because the policy
/// factorizes over slots, the joint categorical KL is the sum of the
/// per-slot KLs, computed in closed form.
pub fn exact_reference_kl<'a, I>(
    policy: &PolicyParams,
    reference: &PolicyParams,
    contexts: I,
) -> Result<f64, PrefOptError>
where
    I: IntoIterator<Item = &'a str>,
{
    policy.check_same_structure(reference)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for id in contexts {
        let ci = context_index(policy, id)?;
        let ctx = &policy.contexts()[ci];
        let ref_ctx = &reference.contexts()[ci];
        let mut kl = 0.0;
        for (slot, ref_slot) in ctx.slots().iter().zip(ref_ctx.slots()) {
            let probs = slot.probabilities();
            for (v, p) in probs.iter().enumerate() {
                kl += p * (slot.log_prob_of(v) - ref_slot.log_prob_of(v));
            }
        }
        total += kl;
        count += 1;
    }
    if count == 0 {
        return Err(PrefOptError::EmptyDataset);
    }
    Ok(total / count as f64)
}

/// KTO loss with the reference baseline `z₀` recomputed from the dataset:
/// `z₀ = mean KL(π_θ ∥ π_ref)` over the example contexts with
/// multiplicity. Returns `(loss, gradient, z₀)`; the gradient treats
/// `z₀` as a constant, matching how the baseline is used during a step.
pub fn kto_loss(
    policy: &PolicyParams,
    reference: &PolicyParams,
    dataset: &PreferenceDataset,
    config: KtoConfig,
) -> Result<(f64, PolicyGrad, f64), PrefOptError> {
    let contexts = dataset
        .examples()
        .iter()
        .map(|e| e.choice.context.as_str());
    let z0 = exact_reference_kl(policy, reference, contexts)?;
    let (loss, grad) = kto_loss_with_baseline(policy, reference, dataset, config, z0)?;
    Ok((loss, grad, z0))
}

/// KTO loss and gradient with an explicitly supplied (frozen) baseline:
///
/// * desirable:   `v = λ_D σ(β (r − z₀))`
/// * undesirable: `v = λ_U σ(β (z₀ − r))`
/// * `L = mean(λ_y − v)` with `r = logπ_θ(y|x) − logπ_ref(y|x)`.
///
/// The gradient chains `∂L/∂r` with
/// `∂r/∂θ_{c,s,v} = 1[y_s = v] − softmax(θ_{c,s})[v]` and is averaged
/// over the examples; `z₀` is held constant.
pub fn kto_loss_with_baseline(
    policy: &PolicyParams,
    reference: &PolicyParams,
    dataset: &PreferenceDataset,
    config: KtoConfig,
    z0: f64,
) -> Result<(f64, PolicyGrad), PrefOptError> {
    config.validate()?;
    if !z0.is_finite() {
        return Err(PrefOptError::BadConfig(format!(
            "baseline z0 must be finite, got {z0}"
        )));
    }
    if z0 < 0.0 {
        return Err(PrefOptError::NegativeKl(z0));
    }
    policy.check_same_structure(reference)?;
    let examples = dataset.examples();
    if examples.is_empty() {
        return Err(PrefOptError::EmptyDataset);
    }
    let mut grad = PolicyGrad::zeros_like(policy);
    let mut loss_sum = 0.0;
    for example in examples {
        let ci = context_index(policy, &example.choice.context)?;
        let r = log_prob(policy, &example.choice)?
            - log_prob(reference, &example.choice)?;
        let (loss_i, dldr) = if example.desirable {
            let z = config.beta * (r - z0);
            (
                config.lambda_d - config.lambda_d * sigmoid(z),
                -config.lambda_d * config.beta * sigmoid_prime(z),
            )
        } else {
            let z = config.beta * (z0 - r);
            (
                config.lambda_u - config.lambda_u * sigmoid(z),
                config.lambda_u * config.beta * sigmoid_prime(z),
            )
        };
        loss_sum += loss_i;
        let ctx = &policy.contexts()[ci];
        for (s, slot) in ctx.slots().iter().enumerate() {
            let sel = example.choice.selections[s];
            let probs = slot.probabilities();
            for (v, p) in probs.iter().enumerate() {
                let indicator = if v == sel { 1.0 } else { 0.0 };
                grad.values_mut()[ci][s][v] += dldr * (indicator - p);
            }
        }
    }
    let n = examples.len() as f64;
    grad.scale(1.0 / n);
    Ok((loss_sum / n, grad))
}
