use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest temperature accepted; sampling is meant for `0 < tau <= 1`,
/// values up to this bound are allowed for experimentation.
pub const MAX_TEMPERATURE: f64 = 2.0;

/// Categorical distribution over vocabulary indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Wraps probabilities that are non-negative and sum to one within 1e-9.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(Distribution(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the most likely outcome; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Temperature-scaled softmax:
/// `p[j] = exp(logits[j] / tau) / sum_k exp(logits[k] / tau)`.
///
/// The maximum logit is subtracted before exponentiation. Lower temperatures
/// sharpen the distribution toward the argmax; `tau = 1` is the plain
/// softmax.
///
/// ```
/// use hiermail::wordlm::apply_temperature;
///
/// let p = apply_temperature(&[1.0, 0.0], 0.5).unwrap();
/// assert!((p.probabilities()[0] - 0.88080).abs() < 1e-5);
/// assert!(apply_temperature(&[1.0, 0.0], 0.0).is_err());
/// ```
pub fn apply_temperature(logits: &[f64], tau: f64) -> Result<Distribution> {
    if !(tau > 0.0 && tau <= MAX_TEMPERATURE) {
        return Err(Error::invalid(format!(
            "temperature must lie in (0, {MAX_TEMPERATURE}], got {tau}"
        )));
    }
    if logits.is_empty() {
        return Err(Error::Empty("logits"));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("logits must be finite"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| ((l - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(Distribution(exps.into_iter().map(|e| e / sum).collect()))
}

/// Inverse-CDF draw from `dist` using one uniform from `rng`.
pub fn sample_token<R: Rng + ?Sized>(dist: &Distribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.0.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    // rounding left the cumulative sum just below u
    last_positive
}
