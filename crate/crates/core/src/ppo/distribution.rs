//! Categorical distribution restricted to the allowed actions.

use rand::Rng;

use super::PpoError;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCategorical {
    /// Exactly zero on masked actions.
    pub probs: Vec<f64>,
    /// `-inf` on masked actions.
    pub log_probs: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Softmax over the unmasked logits; masked actions get probability zero.
pub fn masked_distribution(logits: &[f64], mask: &[bool]) -> Result<MaskedCategorical, PpoError> {
    if logits.len() != mask.len() {
        return Err(PpoError::Shape(format!(
            "{} logits but {} mask entries",
            logits.len(),
            mask.len()
        )));
    }
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(PpoError::EmptyMask);
    }
    if !max.is_finite() {
        return Err(PpoError::NonFinite("logits".into()));
    }
    let sum: f64 = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| (l - max).exp())
        .sum();
    let lse = max + sum.ln();
    let log_probs: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { l - lse } else { f64::NEG_INFINITY })
        .collect();
    let probs = log_probs.iter().map(|lp| lp.exp()).collect();
    Ok(MaskedCategorical {
        probs,
        log_probs,
        mask: mask.to_vec(),
    })
}

impl MaskedCategorical {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, lp)| p * lp)
            .sum::<f64>()
    }

    /// Inverse-CDF sampling over the allowed actions only.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (k, (&p, &m)) in self.probs.iter().zip(&self.mask).enumerate() {
            if !m {
                continue;
            }
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
        last
    }

    /// Most probable allowed action; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = None;
        for (k, (&lp, &m)) in self.log_probs.iter().zip(&self.mask).enumerate() {
            if m && best.is_none_or(|(_, b)| lp > b) {
                best = Some((k, lp));
            }
        }
        best.map(|(k, _)| k).expect("mask has an allowed action")
    }

    /// d log π(a) / d logits.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| if j == action { 1.0 - p } else { -p })
            .collect()
    }

    /// d H / d logits.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs
            .iter()
            .zip(&self.log_probs)
            .map(|(&p, &lp)| if p > 0.0 { -p * (lp + h) } else { 0.0 })
            .collect()
    }
}
