//! Evaluation kit: ranking metrics, the synthetic structural benchmark,
//! dataset splitting, contamination, and count-vector baselines.

pub mod baselines;
pub mod metrics;
pub mod split;
pub mod synth;
