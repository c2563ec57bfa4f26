//! Sample statistics used by the Monte Carlo drivers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

/// A Monte Carlo mean together with its plug-in standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
}

impl<T: Scalar> Estimate<T> {
    /// Sample mean and `s / sqrt(N)`. A single sample has zero standard error.
    pub fn from_samples(samples: &[T]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("samples"));
        }
        let n = T::from_count(samples.len());
        let mean = pairwise_sum(samples) / n;
        if samples.len() == 1 {
            return Ok(Estimate {
                mean,
                std_error: T::zero(),
            });
        }
        let sq: Vec<T> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - T::one());
        Ok(Estimate {
            mean,
            std_error: (var / n).sqrt(),
        })
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: T, k: T) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}
