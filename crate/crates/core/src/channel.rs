//! BPSK over AWGN and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Noise level of an AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub sigma2: f64,
    pub ebn0_db: f64,
    pub rate: f64,
}

impl ChannelParams {
    pub fn from_ebn0(ebn0_db: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            sigma2: ebn0_to_sigma2(ebn0_db, rate)?,
            ebn0_db,
            rate,
        })
    }
}

/// `σ² = 1 / (2 R 10^(Eb/N0 / 10))` for unit-energy BPSK symbols.
pub fn ebn0_to_sigma2(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rate {rate} not in (0, 1]"
        )));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// Maps 0 → +1 and 1 → −1.
pub fn modulate(x: &[u8]) -> Vec<f64> {
    x.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect()
}

/// `y = s + z` with `z ~ N(0, σ²)` i.i.d.
pub fn add_awgn<R: Rng + ?Sized>(s: &[f64], sigma2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance {sigma2} must be positive"
        )));
    }
    let sigma = sigma2.sqrt();
    Ok(s.iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect())
}

/// `L = 2y / σ²`.
pub fn channel_llrs(y: &[f64], sigma2: f64) -> Vec<f64> {
    let scale = 2.0 / sigma2;
    y.iter().map(|&v| scale * v).collect()
}

/// Modulates `x`, adds noise and writes the channel LLRs into `llrs`.
/// Draws exactly one normal sample per bit, in order.
pub fn transmit_into<R: Rng + ?Sized>(x: &[u8], sigma2: f64, rng: &mut R, llrs: &mut [f64]) {
    debug_assert_eq!(x.len(), llrs.len());
    let sigma = sigma2.sqrt();
    let scale = 2.0 / sigma2;
    for (l, &b) in llrs.iter_mut().zip(x) {
        let z: f64 = rng.sample(StandardNormal);
        *l = scale * (1.0 - 2.0 * f64::from(b) + sigma * z);
    }
}

/// Independent RNG stream for one simulated frame. `tag` separates
/// experiments (e.g. grid points) sharing a seed.
pub fn frame_rng(seed: u64, tag: u64, frame: u64) -> ChaCha8Rng {
    let key = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(frame);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn frame_streams_differ() {
        let a: u64 = frame_rng(1, 0, 0).gen();
        assert_eq!(a, frame_rng(1, 0, 0).gen::<u64>());
        assert_ne!(a, frame_rng(1, 0, 1).gen::<u64>());
        assert_ne!(a, frame_rng(1, 1, 0).gen::<u64>());
        assert_ne!(a, frame_rng(2, 0, 0).gen::<u64>());
    }

    #[test]
    fn modulation() {
        assert_eq!(modulate(&[0, 0]), vec![1.0, 1.0]);
        assert_eq!(modulate(&[1, 0, 1]), vec![-1.0, 1.0, -1.0]);
        assert!(modulate(&[1; 16]).iter().all(|&v| v == -1.0));
    }

    #[test]
    fn llr_formula() {
        assert_eq!(channel_llrs(&[1.0, -1.0], 2.0), vec![1.0, -1.0]);
        assert_eq!(channel_llrs(&[0.0], 0.7), vec![0.0]);
        assert_eq!(channel_llrs(&[0.5], 0.25), vec![4.0]);
    }

    #[test]
    fn ebn0_conversion() {
        assert!((ebn0_to_sigma2(0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((ebn0_to_sigma2(5.0, 0.5).unwrap() - 10f64.powf(-0.5)).abs() < 1e-12);
        assert!((ebn0_to_sigma2(5.0, 0.5).unwrap() - 0.31623).abs() < 1e-5);
        assert!((ebn0_to_sigma2(3.0103, 1.0).unwrap() - 0.25).abs() < 1e-5);
        assert!(ebn0_to_sigma2(1.0, 0.0).is_err());
        assert!(ebn0_to_sigma2(1.0, 1.5).is_err());
    }

    #[test]
    fn degenerate_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = modulate(&[0, 1, 1, 0]);
        let y = add_awgn(&s, 1e-30, &mut rng).unwrap();
        for (a, b) in s.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(add_awgn(&s, 0.0, &mut rng).is_err());
        assert!(add_awgn(&s, -1.0, &mut rng).is_err());
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let s = vec![0.0; 64];
        let a = add_awgn(&s, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_awgn(&s, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let z = add_awgn(&vec![0.0; n], 1.0, &mut rng).unwrap();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");

        let z = add_awgn(&vec![0.0; n], 0.3, &mut rng).unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var / 0.3 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn low_noise_llr_signs() {
        let x = [0u8, 1, 1, 0, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = add_awgn(&modulate(&x), 1e-4, &mut rng).unwrap();
        let l = channel_llrs(&y, 1e-4);
        for (&b, &v) in x.iter().zip(&l) {
            assert_eq!(v > 0.0, b == 0);
        }
    }

    #[test]
    fn fused_transmit_matches_pipeline() {
        let x = [0u8, 1, 0, 0, 1, 1, 0, 1];
        let sigma2 = 0.4;
        let y = add_awgn(&modulate(&x), sigma2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let expected = channel_llrs(&y, sigma2);
        let mut got = vec![0.0; 8];
        transmit_into(&x, sigma2, &mut ChaCha8Rng::seed_from_u64(5), &mut got);
        for (a, b) in expected.iter().zip(&got) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
