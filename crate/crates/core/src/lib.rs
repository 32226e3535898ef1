//! Controller synthesis for discrete-event systems on the air-traffic family,
//! guided by learned exploration experts and a gated mixture of them.

pub mod at;
pub mod des;
pub mod eval;
pub mod moe;
pub mod policy;
pub mod scalar;
pub mod synth;

pub use scalar::Scalar;

pub type QNetwork64 = policy::QNetwork<f64>;
pub type QNetwork32 = policy::QNetwork<f32>;
pub type ActionDistribution64 = policy::ActionDistribution<f64>;
pub type ActionDistribution32 = policy::ActionDistribution<f32>;
pub type GatingWeights64 = moe::GatingWeights<f64>;
pub type GatingWeights32 = moe::GatingWeights<f32>;
