use serde::Serialize;

use super::HistoryDataset;
use crate::at::AtParams;
use crate::policy::softmax;
use crate::Scalar;

/// Gaussian relevance of a record at `(n, k)` for the query `(nq, kq)`.
pub fn kernel_weight<T: Scalar>(n: u32, k: u32, query: AtParams, sigma_n: T, sigma_k: T) -> T {
    let dn = (T::lit(n as f64) - T::lit(query.n as f64)) / sigma_n;
    let dk = (T::lit(k as f64) - T::lit(query.k as f64)) / sigma_k;
    (T::lit(-0.5) * (dn * dn + dk * dk)).exp()
}

/// Kernel-weighted mean of the recorded step counts, or infinity when the
/// total weight does not exceed `eps`.
pub fn estimate_step_cost<T: Scalar>(
    d: &HistoryDataset,
    query: AtParams,
    sigma_n: T,
    sigma_k: T,
    eps: T,
) -> T {
    let (mut w_sum, mut c_sum) = (T::zero(), T::zero());
    for r in &d.records {
        let w = kernel_weight(r.n, r.k, query, sigma_n, sigma_k);
        w_sum = w_sum + w;
        c_sum = c_sum + w * T::lit(r.steps as f64);
    }
    if w_sum > eps {
        c_sum / w_sum
    } else {
        T::infinity()
    }
}

/// Standardized negative step costs. Mean and population deviation are taken
/// over the experts with a finite estimate; the others sit 2 below the
/// weakest finite expert.
pub fn prior_strengths<T: Scalar>(s_hats: &[T], eps: T) -> Vec<T> {
    let finite: Vec<T> = s_hats
        .iter()
        .filter(|s| s.is_finite())
        .map(|&s| -s)
        .collect();
    if finite.is_empty() {
        return vec![T::zero(); s_hats.len()];
    }
    let m = T::lit(finite.len() as f64);
    let mu = finite.iter().fold(T::zero(), |a, &x| a + x) / m;
    let var = finite
        .iter()
        .fold(T::zero(), |a, &x| a + (x - mu) * (x - mu))
        / m;
    let sigma = var.sqrt();
    let standard = |s: T| (-s - mu) / (sigma + eps);
    let floor = s_hats
        .iter()
        .filter(|s| s.is_finite())
        .map(|&s| standard(s))
        .fold(T::infinity(), T::min)
        - T::lit(2.0);
    s_hats
        .iter()
        .map(|&s| if s.is_finite() { standard(s) } else { floor })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpertSignals<T: Scalar = f64> {
    /// Prior strength.
    pub a: T,
    /// Entropy of the expert's distribution at the initial state.
    pub entropy: T,
    /// Top-2 margin of that distribution.
    pub margin: T,
}

/// Per-episode mixture weights; fixed once computed.
#[derive(Debug, Clone, PartialEq)]
pub struct GatingWeights<T: Scalar = f64> {
    pub g: Vec<T>,
    pub logits: Vec<T>,
    pub signals: Vec<ExpertSignals<T>>,
    pub beta: T,
    pub gamma: T,
}

/// `g = softmax(a - beta H + gamma M)`.
pub fn gating_weights<T: Scalar>(
    signals: &[ExpertSignals<T>],
    beta: T,
    gamma: T,
) -> GatingWeights<T> {
    let logits: Vec<T> = signals
        .iter()
        .map(|s| s.a - beta * s.entropy + gamma * s.margin)
        .collect();
    let g = softmax(&logits, T::one());
    GatingWeights {
        g,
        logits,
        signals: signals.to_vec(),
        beta,
        gamma,
    }
}

impl<T: Scalar> GatingWeights<T> {
    /// Index of the largest weight, lowest index on ties.
    pub fn top(&self) -> usize {
        crate::policy::argmax(&self.g)
    }
}

#[derive(Serialize)]
struct LogEntry<'a, T: Scalar> {
    expert_id: &'a str,
    a: T,
    #[serde(rename = "H")]
    entropy: T,
    #[serde(rename = "M")]
    margin: T,
    logit: T,
    g: T,
}

#[derive(Serialize)]
struct Log<'a, T: Scalar> {
    beta: T,
    gamma: T,
    temperature: T,
    experts: Vec<LogEntry<'a, T>>,
}

/// Structured log of one episode's gate.
pub fn gating_log_json<T: Scalar + Serialize>(
    ids: &[String],
    w: &GatingWeights<T>,
    temperature: T,
) -> String {
    let experts = ids
        .iter()
        .zip(&w.signals)
        .zip(w.logits.iter().zip(&w.g))
        .map(|((id, s), (&logit, &g))| LogEntry {
            expert_id: id,
            a: s.a,
            entropy: s.entropy,
            margin: s.margin,
            logit,
            g,
        })
        .collect();
    let log = Log {
        beta: w.beta,
        gamma: w.gamma,
        temperature,
        experts,
    };
    serde_json::to_string_pretty(&log).expect("finite gate serializes")
}
