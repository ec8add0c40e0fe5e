use serde::Serialize;
use splitgt_core::analysis::info_bound;
use splitgt_core::{test_count, SchemeParams};

use crate::config::{Decoder, ExperimentConfig};
use crate::BenchError;

/// One point of the tests-per-`k ln n` versus sparsity plot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub scheme: Decoder,
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub theta: f64,
    pub m: u64,
    pub tests_per_k_ln_n: f64,
    /// `1/ln²2`, the COMP curve's intercept.
    pub comp_reference: f64,
    /// Counting bound divided by `k ln n`.
    pub info_reference: f64,
}

pub fn rate_point(decoder: Decoder, params: &SchemeParams) -> RatePoint {
    let norm = params.k as f64 * (params.n as f64).ln();
    let m = test_count(params).m;
    RatePoint {
        scheme: decoder,
        n: params.n,
        k: params.k,
        epsilon: params.epsilon,
        theta: params.theta(),
        m,
        tests_per_k_ln_n: m as f64 / norm,
        comp_reference: 1.0 / (std::f64::consts::LN_2 * std::f64::consts::LN_2),
        info_reference: info_bound(params.n, params.k) / norm,
    }
}

pub fn emit_rate_point(config: &ExperimentConfig) -> Result<RatePoint, BenchError> {
    Ok(rate_point(config.decoder, &config.params()?))
}

/// Rate points for every power-of-two `k` the scheme accepts at `config.n`.
pub fn rate_sweep(config: &ExperimentConfig) -> Vec<RatePoint> {
    (1..64)
        .map(|e| 1u64 << e)
        .take_while(|&k| k <= config.n)
        .filter_map(|k| emit_rate_point(&ExperimentConfig { k, ..config.clone() }).ok())
        .collect()
}
