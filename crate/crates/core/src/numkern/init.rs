use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Tensor;
use crate::{Error, Result};

/// Glorot/Xavier uniform initialisation of a `fan_in × fan_out` matrix.
pub fn glorot_init(fan_in: usize, fan_out: usize, seed: u64) -> Result<Tensor> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::invalid(format!(
            "glorot_init needs positive fans, got {fan_in}×{fan_out}"
        )));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Tensor::matrix(fan_in, fan_out, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn within_bound_and_deterministic() {
        let t = glorot_init(16, 16, 7).unwrap();
        let bound = (6.0f64 / 32.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= bound));
        assert_eq!(t, glorot_init(16, 16, 7).unwrap());
        assert_ne!(t, glorot_init(16, 16, 8).unwrap());
    }

    #[test]
    fn rejects_zero_fans() {
        assert!(glorot_init(0, 3, 1).is_err());
        assert!(glorot_init(3, 0, 1).is_err());
    }

    #[test]
    fn sample_mean_near_zero() {
        // 16×16 matrices concatenated until 10^5 samples; a uniform on ±b has
        // mean 0 and standard error b/sqrt(3n) ≈ 0.0008 here.
        let mut sum = 0.0;
        let mut n = 0usize;
        let mut seed = 0;
        while n < 100_000 {
            let t = glorot_init(16, 16, seed).unwrap();
            sum += t.data().iter().sum::<f64>();
            n += t.len();
            seed += 1;
        }
        assert!((sum / n as f64).abs() < 0.01);
    }
}
