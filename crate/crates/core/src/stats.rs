use serde::{Deserialize, Serialize};

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub std_error: f64,
}

impl MeanStderr {
    /// Sums in slice order, on data shifted by the first sample, so identical
    /// samples give exactly that value and a zero standard error.
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let shift = samples[0];
        let nf = n as f64;
        let dmean = samples.iter().map(|x| x - shift).sum::<f64>() / nf;
        let mean = shift + dmean;
        if n < 2 {
            return Self { mean, std_error: 0.0 };
        }
        let ss: f64 = samples.iter().map(|x| (x - shift - dmean).powi(2)).sum();
        Self {
            mean,
            std_error: (ss / (nf - 1.0) / nf).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_error() {
        let x = 0.1 + 0.2;
        let s = MeanStderr::of(&[x; 7]);
        assert_eq!(s.mean, x);
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn known_values() {
        let s = MeanStderr::of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-15);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.std_error - sd / 2.0).abs() < 1e-15);
    }
}
