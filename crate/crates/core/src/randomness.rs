//! Reproducible Gaussian streams.
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key is built directly
//! from the [`StreamKey`] fields, so distinct keys give unrelated streams and
//! no state is shared between trajectories. Results therefore do not depend
//! on how trajectories are distributed over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DOMAIN_TAG: [u8; 4] = *b"WMC1";

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trajectory_index: u64,
    pub axis_index: u32,
}

impl StreamKey {
    pub fn new(seed: u64, trajectory_index: u64, axis_index: u32) -> Self {
        StreamKey {
            seed,
            trajectory_index,
            axis_index,
        }
    }

    pub fn with_axis(self, axis_index: u32) -> Self {
        StreamKey { axis_index, ..self }
    }

    fn chacha_key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trajectory_index.to_le_bytes());
        key[16..20].copy_from_slice(&self.axis_index.to_le_bytes());
        key[20..24].copy_from_slice(&DOMAIN_TAG);
        key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.chacha_key())
    }

    /// Endless stream of centred normal draws with the given variance.
    pub fn gaussians(&self, variance: f64) -> GaussianStream {
        GaussianStream {
            rng: self.rng(),
            scale: variance.sqrt(),
        }
    }
}

/// Iterator over `N(0, variance)` draws from one stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    scale: f64,
}

impl Iterator for GaussianStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Some(self.scale * z)
    }
}

/// `count` independent draws from a centred normal with the given variance.
pub fn gaussian_sequence(key: StreamKey, count: usize, variance: f64) -> Vec<f64> {
    key.gaussians(variance).take(count).collect()
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for an independent block of trajectories (one sweep row).
pub fn derive_seed(seed: u64, block: u64) -> u64 {
    mix64(seed ^ mix64(block.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 1_000_000;

    fn moments(x: &[f64]) -> (f64, f64, f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        (mean, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    }

    #[test]
    fn mean_and_variance_match_request() {
        let x = gaussian_sequence(StreamKey::new(7, 0, 0), N, 0.5);
        let (mean, var, _, _) = moments(&x);
        let sigma = 0.5f64.sqrt();
        assert!(mean.abs() < 4.0 * sigma / (N as f64).sqrt(), "mean {mean}");
        // Var of the sample variance for a normal is 2 sigma^4 / N.
        let se = (2.0 * 0.25 / N as f64).sqrt();
        assert!((var - 0.5).abs() < 4.0 * se, "var {var}");
    }

    #[test]
    fn skewness_and_kurtosis_vanish() {
        let x = gaussian_sequence(StreamKey::new(11, 3, 1), N, 1.0);
        let (_, _, skew, kurt) = moments(&x);
        let n = N as f64;
        assert!(skew.abs() < 5.0 * (6.0 / n).sqrt(), "skew {skew}");
        assert!(kurt.abs() < 5.0 * (24.0 / n).sqrt(), "kurtosis {kurt}");
    }

    #[test]
    fn same_key_is_bit_identical() {
        let k = StreamKey::new(42, 17, 2);
        let a = gaussian_sequence(k, 1000, 0.5);
        let b = gaussian_sequence(k, 1000, 0.5);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn empty_request_gives_empty_sequence() {
        assert!(gaussian_sequence(StreamKey::new(0, 0, 0), 0, 1.0).is_empty());
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let a = gaussian_sequence(StreamKey::new(5, 0, 0), N, 1.0);
        for other in [StreamKey::new(5, 1, 0), StreamKey::new(5, 0, 1), StreamKey::new(6, 0, 0)] {
            let b = gaussian_sequence(other, N, 1.0);
            let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / N as f64;
            assert!(corr.abs() < 4.0 / (N as f64).sqrt(), "{other:?}: {corr}");
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|b| derive_seed(1, b)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
