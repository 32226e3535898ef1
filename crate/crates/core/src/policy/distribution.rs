use serde::Serialize;

use super::{check_feature_version, extract_features, ExpertCheckpoint, PolicyError};
use crate::synth::ExplorationHistory;
use crate::Scalar;

/// Probabilities over the current frontier, index-aligned with frontier order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<T: Scalar = f64> {
    pub probabilities: Vec<T>,
    pub temperature: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confidence<T: Scalar = f64> {
    /// Shannon entropy in nats.
    pub entropy: T,
    /// Difference between the two largest probabilities.
    pub margin: T,
}

/// `softmax(logits / temperature)` with max subtraction.
pub fn softmax<T: Scalar>(logits: &[T], temperature: T) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits
        .iter()
        .map(|&l| ((l - max) / temperature).exp())
        .collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

impl<T: Scalar> ActionDistribution<T> {
    pub fn from_logits(logits: &[T], temperature: T) -> Result<Self, PolicyError> {
        if logits.is_empty() {
            return Err(PolicyError::EmptyFrontier);
        }
        if !(temperature > T::zero()) {
            return Err(PolicyError::InvalidTemperature(
                temperature.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self {
            probabilities: softmax(logits, temperature),
            temperature,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probabilities)
    }

    pub fn confidence(&self) -> Confidence<T> {
        confidence(&self.probabilities)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Entropy (natural log, `0 log 0 = 0`) and top-2 margin. A single-action
/// distribution has entropy 0 and margin 1.
pub fn confidence<T: Scalar>(p: &[T]) -> Confidence<T> {
    let entropy = p
        .iter()
        .filter(|&&x| x > T::zero())
        .fold(T::zero(), |acc, &x| acc - x * x.ln());
    let (mut first, mut second) = (T::neg_infinity(), T::neg_infinity());
    for &x in p {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    let margin = if p.len() < 2 {
        T::one()
    } else {
        first - second
    };
    Confidence {
        entropy: entropy.max(T::zero()),
        margin,
    }
}

/// The expert's Q-value for every frontier transition, in frontier order.
pub fn frontier_q_values(expert: &ExpertCheckpoint, h: &ExplorationHistory<'_>) -> Vec<f64> {
    h.frontier()
        .map(|ft| {
            expert
                .network
                .forward(extract_features::<f64>(h, ft).as_array())
        })
        .collect()
}

/// Softmax of the expert's Q-values over the whole frontier at temperature `t`.
pub fn action_distribution(
    expert: &ExpertCheckpoint,
    h: &ExplorationHistory<'_>,
    t: f64,
) -> Result<ActionDistribution, PolicyError> {
    check_feature_version(&expert.feature_version)?;
    if h.frontier_len() == 0 {
        return Err(PolicyError::EmptyFrontier);
    }
    ActionDistribution::from_logits(&frontier_q_values(expert, h), t)
}
