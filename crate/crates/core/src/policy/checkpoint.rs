use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{
    check_feature_version, PolicyError, QNetwork, DIMS, FEATURE_DIM, FEATURE_VERSION, HIDDEN,
};

/// A trained expert: network plus the provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertCheckpoint {
    pub feature_version: String,
    pub network: QNetwork<f64>,
    pub n: u32,
    pub k: u32,
    pub seed: u64,
    pub episodes_trained: u32,
    pub budget_per_episode: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    n: u32,
    k: u32,
    seed: u64,
    episodes_trained: u32,
    budget_per_episode: usize,
}

#[derive(Serialize)]
struct FileOut<'a> {
    feature_version: &'a str,
    dims: [usize; 3],
    weights: Box<RawValue>,
    biases: Box<RawValue>,
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    feature_version: String,
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    metadata: Metadata,
}

/// Nested arrays of floats with 17 significant digits.
fn float_arrays(layers: &[&[f64]]) -> Result<Box<RawValue>, PolicyError> {
    let mut s = String::from("[");
    for (i, layer) in layers.iter().enumerate() {
        s.push_str(if i == 0 { "[" } else { ",[" });
        for (j, v) in layer.iter().enumerate() {
            if !v.is_finite() {
                return Err(PolicyError::Corrupt(format!("non-finite parameter {v}")));
            }
            if j > 0 {
                s.push(',');
            }
            write!(s, "{v:.16e}").expect("write to string");
        }
        s.push(']');
    }
    s.push(']');
    RawValue::from_string(s).map_err(|e| PolicyError::Corrupt(e.to_string()))
}

impl ExpertCheckpoint {
    pub fn new(
        network: QNetwork<f64>,
        n: u32,
        k: u32,
        seed: u64,
        episodes_trained: u32,
        budget: usize,
    ) -> Self {
        Self {
            feature_version: FEATURE_VERSION.to_string(),
            network,
            n,
            k,
            seed,
            episodes_trained,
            budget_per_episode: budget,
        }
    }

    pub fn to_json(&self) -> Result<String, PolicyError> {
        let net = &self.network;
        let out = FileOut {
            feature_version: &self.feature_version,
            dims: DIMS,
            weights: float_arrays(&[&net.w1, &net.w2])?,
            biases: float_arrays(&[&net.b1, &[net.b2]])?,
            metadata: Metadata {
                n: self.n,
                k: self.k,
                seed: self.seed,
                episodes_trained: self.episodes_trained,
                budget_per_episode: self.budget_per_episode,
            },
        };
        let mut s =
            serde_json::to_string_pretty(&out).map_err(|e| PolicyError::Corrupt(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a checkpoint, rejecting other feature versions and malformed shapes.
    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let f: FileIn =
            serde_json::from_str(text).map_err(|e| PolicyError::Corrupt(e.to_string()))?;
        check_feature_version(&f.feature_version)?;
        if f.dims != DIMS {
            return Err(PolicyError::Corrupt(format!(
                "dims {:?}, expected {:?}",
                f.dims, DIMS
            )));
        }
        let shape_ok = f.weights.len() == 2
            && f.biases.len() == 2
            && f.weights[0].len() == HIDDEN * FEATURE_DIM
            && f.weights[1].len() == HIDDEN
            && f.biases[0].len() == HIDDEN
            && f.biases[1].len() == 1;
        if !shape_ok {
            return Err(PolicyError::Corrupt(
                "parameter arrays do not match dims".into(),
            ));
        }
        let [w1, w2]: [Vec<f64>; 2] = f.weights.try_into().expect("checked length");
        let [b1, b2]: [Vec<f64>; 2] = f.biases.try_into().expect("checked length");
        let network = QNetwork {
            w1,
            b1,
            w2,
            b2: b2[0],
        };
        let m = f.metadata;
        Ok(Self {
            feature_version: f.feature_version,
            network,
            n: m.n,
            k: m.k,
            seed: m.seed,
            episodes_trained: m.episodes_trained,
            budget_per_episode: m.budget_per_episode,
        })
    }
}

pub fn save_checkpoint(e: &ExpertCheckpoint, path: &Path) -> Result<(), PolicyError> {
    std::fs::write(path, e.to_json()?).map_err(|err| PolicyError::io(path, err))
}

pub fn load_checkpoint(path: &Path) -> Result<ExpertCheckpoint, PolicyError> {
    let text = std::fs::read_to_string(path).map_err(|err| PolicyError::io(path, err))?;
    ExpertCheckpoint::from_json(&text)
}
