use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distribution::masked_distribution;
use super::network::{clip_grad_norm, Adam, ForwardCache, MlpPolicy};
use super::rollout::{RolloutBuffer, Transition};
use super::{PpoConfig, PpoError};

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_range: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_range, 1.0 + clip_range);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub transition: &'a Transition,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub ratios: Vec<f64>,
}

fn normalize(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
}

/// Total PPO loss on one minibatch, with its gradient added to `grad` when given.
///
/// Advantages are normalized within the batch. The loss is
/// `-mean(surrogate) + vf_coef * mean((V - R)^2) - ent_coef * mean(H)`.
pub fn minibatch_loss(
    policy: &MlpPolicy,
    batch: &[Sample],
    cfg: &PpoConfig,
    mut grad: Option<&mut [f64]>,
) -> Result<BatchLoss, PpoError> {
    let m = batch.len() as f64;
    let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
    normalize(&mut adv);
    let mut cache = ForwardCache::default();
    let mut out = BatchLoss {
        loss: 0.0,
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        ratios: Vec::with_capacity(batch.len()),
    };
    for (s, &a) in batch.iter().zip(&adv) {
        let t = s.transition;
        policy.forward_cached(&t.observation, &mut cache);
        let dist = masked_distribution(&cache.logits, &t.mask)?;
        let ratio = (dist.log_prob(t.action) - t.log_prob).exp();
        let surrogate = clipped_surrogate(ratio, a, cfg.clip_range);
        let entropy = dist.entropy();
        let err = cache.value - s.ret;
        out.policy_loss -= surrogate / m;
        out.value_loss += err * err / m;
        out.entropy += entropy / m;
        out.ratios.push(ratio);
        if let Some(grad) = grad.as_deref_mut() {
            // The unclipped branch carries the gradient; the clipped one is flat.
            let d_logp = if ratio * a <= clipped_surrogate(ratio, a, cfg.clip_range) {
                -ratio * a / m
            } else {
                0.0
            };
            let mut d_logits: Vec<f64> = dist
                .grad_log_prob(t.action)
                .into_iter()
                .map(|g| g * d_logp)
                .collect();
            if cfg.ent_coef != 0.0 {
                for (d, g) in d_logits.iter_mut().zip(dist.grad_entropy()) {
                    *d -= cfg.ent_coef * g / m;
                }
            }
            let d_value = 2.0 * cfg.vf_coef * err / m;
            policy.backward(&cache, &d_logits, d_value, grad);
        }
    }
    out.loss = out.policy_loss + cfg.vf_coef * out.value_loss - cfg.ent_coef * out.entropy;
    if !out.loss.is_finite() {
        return Err(PpoError::NonFinite(format!(
            "loss (policy {}, value {}, entropy {})",
            out.policy_loss, out.value_loss, out.entropy
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
    /// Largest `|ratio - 1|` in the first minibatch of the first epoch.
    pub first_batch_ratio_dev: f64,
}

/// Runs `epochs_per_update` passes of shuffled minibatch steps over the buffer.
pub fn ppo_update<R: Rng + ?Sized>(
    buffer: &RolloutBuffer,
    policy: &mut MlpPolicy,
    optimizer: &mut Adam,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateReport, PpoError> {
    if !buffer.has_advantages() {
        return Err(PpoError::Buffer("advantages have not been computed".into()));
    }
    let samples: Vec<Sample> = buffer
        .transitions
        .iter()
        .zip(buffer.advantages.iter().zip(&buffer.returns))
        .map(|(transition, (&advantage, &ret))| Sample {
            transition,
            advantage,
            ret,
        })
        .collect();
    let mut report = UpdateReport::default();
    let mut clipped = 0usize;
    let mut seen = 0usize;
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; policy.params.len()];
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs_per_update {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| samples[k]));
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = minibatch_loss(policy, &batch, cfg, Some(&mut grad))?;
            if report.minibatches == 0 {
                report.first_batch_ratio_dev =
                    loss.ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            }
            report.grad_norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
            optimizer.step(&mut policy.params, &grad);
            clipped += loss
                .ratios
                .iter()
                .filter(|r| (*r - 1.0).abs() > cfg.clip_range)
                .count();
            seen += loss.ratios.len();
            report.policy_loss = loss.policy_loss;
            report.value_loss = loss.value_loss;
            report.entropy = loss.entropy;
            report.minibatches += 1;
        }
    }
    report.clip_fraction = if seen > 0 { clipped as f64 / seen as f64 } else { 0.0 };
    policy.validate()?;
    Ok(report)
}
