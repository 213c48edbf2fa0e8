//! Multiplicative measurement noise `f·(1 + δ·ξ)`.
//!
//! Draws come from a counter-based ChaCha stream: the seed picks the key, the
//! observation angle index picks the stream and the time index picks the
//! position inside it. Every sample is therefore fixed by
//! `(seed, angle, time)` alone, whatever order or thread generates it, and
//! the same `ξ` is reused across noise levels.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// `ξ` uniform on `[−1, 1]`.
    #[default]
    Symmetric,
    /// `ξ` uniform on `[0, 1]`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
    pub distribution: Distribution,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            delta: 0.0,
            seed: 1,
            distribution: Distribution::Symmetric,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(ConfigError(format!("noise delta must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Uniform `[0, 1)` draw number `index` of stream `stream`.
fn unit_draw(seed: u64, stream: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // one u64 occupies two 32-bit words of the stream
    rng.set_word_pos(2 * index as u128);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `ξ` for sample `time_index` of the trace at `angle_index`.
pub fn noise_factor(spec: &NoiseSpec, angle_index: usize, time_index: usize) -> f64 {
    let u = unit_draw(spec.seed, angle_index as u64, time_index as u64);
    match spec.distribution {
        Distribution::Symmetric => 2.0 * u - 1.0,
        Distribution::Positive => u,
    }
}

/// Noisy copy of one trace.
pub fn add_noise(trace: &[f64], angle_index: usize, spec: &NoiseSpec) -> Vec<f64> {
    if spec.delta == 0.0 {
        return trace.to_vec();
    }
    trace
        .iter()
        .enumerate()
        .map(|(i, &f)| f * (1.0 + spec.delta * noise_factor(spec, angle_index, i)))
        .collect()
}

/// Noisy copies of traces indexed by observation angle.
pub fn add_noise_all(traces: &[Vec<f64>], spec: &NoiseSpec) -> Vec<Vec<f64>> {
    traces.iter().enumerate().map(|(a, t)| add_noise(t, a, spec)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delta_is_identity() {
        let t = vec![-0.1, -0.2, 0.0, -3.5];
        assert_eq!(add_noise(&t, 0, &NoiseSpec::default()), t);
    }

    #[test]
    fn draws_do_not_depend_on_order() {
        let spec = NoiseSpec {
            delta: 0.1,
            seed: 99,
            distribution: Distribution::Symmetric,
        };
        let forward: Vec<f64> = (0..50).map(|i| noise_factor(&spec, 1, i)).collect();
        let backward: Vec<f64> = (0..50).rev().map(|i| noise_factor(&spec, 1, i)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert_ne!(noise_factor(&spec, 0, 3), noise_factor(&spec, 1, 3));
        assert_ne!(noise_factor(&spec, 0, 3), noise_factor(&spec.with_seed(100), 0, 3));
    }

    #[test]
    fn positive_draws_stay_in_unit_interval() {
        let spec = NoiseSpec {
            delta: 0.05,
            seed: 3,
            distribution: Distribution::Positive,
        };
        assert!((0..500).map(|i| noise_factor(&spec, 0, i)).all(|x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn symmetric_draws_are_centred() {
        let spec = NoiseSpec::default();
        let n = 20_000;
        let mean: f64 = (0..n).map(|i| noise_factor(&spec, 0, i)).sum::<f64>() / n as f64;
        // standard error of the mean is 1/sqrt(3n) ≈ 0.004
        assert!(mean.abs() < 0.02, "{mean}");
    }
}
