use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Increments of a real Wiener process on a uniform grid of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    horizon: f64,
    increments: Vec<f64>,
    seed: u64,
}

/// Draws `steps` i.i.d. `N(0, T/steps)` increments from a ChaCha8 stream
/// seeded with `seed`.
pub fn sample_wiener(horizon: f64, steps: usize, seed: u64) -> Result<WienerPath> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::range("T", horizon, "T > 0"));
    }
    if steps == 0 {
        return Err(Error::range("steps", steps, "steps ≥ 1"));
    }
    let sd = (horizon / steps as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let increments = (0..steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect();
    Ok(WienerPath {
        horizon,
        increments,
        seed,
    })
}

impl WienerPath {
    /// The identically zero path (deterministic dynamics).
    pub fn zero(horizon: f64, steps: usize) -> Result<Self> {
        let mut w = sample_wiener(horizon, steps, 0)?;
        w.increments.iter_mut().for_each(|x| *x = 0.0);
        Ok(w)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Path on a grid `factor` times coarser, summing consecutive increments.
    pub fn coarsen(&self, factor: usize) -> Result<WienerPath> {
        if factor == 0 || self.steps() % factor != 0 {
            return Err(Error::Invalid(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.steps()
            )));
        }
        Ok(WienerPath {
            horizon: self.horizon,
            increments: self
                .increments
                .chunks(factor)
                .map(|c| c.iter().sum())
                .collect(),
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        assert_eq!(sample_wiener(1.0, 64, 5).unwrap(), sample_wiener(1.0, 64, 5).unwrap());
        assert_ne!(sample_wiener(1.0, 64, 5).unwrap(), sample_wiener(1.0, 64, 6).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(sample_wiener(0.0, 8, 1).is_err());
        assert!(sample_wiener(-1.0, 8, 1).is_err());
        assert!(sample_wiener(1.0, 0, 1).is_err());
    }

    #[test]
    fn moments_match_clt_bounds() {
        let steps = 100_000;
        let w = sample_wiener(2.0, steps, 1234).unwrap();
        let dt = w.dt();
        let n = steps as f64;
        let mean = w.increments().iter().sum::<f64>() / n;
        assert!(mean.abs() <= 4.0 * (dt / n).sqrt(), "mean {mean}");
        let var = w.increments().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / dt - 1.0).abs() < 0.05, "var {var} vs {dt}");
    }

    #[test]
    fn coarsening_sums_increments() {
        let w = sample_wiener(1.0, 16, 3).unwrap();
        let c = w.coarsen(4).unwrap();
        assert_eq!(c.steps(), 4);
        let total: f64 = w.increments().iter().sum();
        let ctotal: f64 = c.increments().iter().sum();
        assert!((total - ctotal).abs() < 1e-14);
        assert!(w.coarsen(3).is_err());
    }
}
