use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dist::DistributionSpec;
use super::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("Monte-Carlo estimate needs at least one draw")]
    NoDraws,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Streaming mean/variance (Welford).
#[derive(Debug, Default, Clone, Copy)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn estimate(&self) -> Result<McEstimate, McError> {
        if self.n == 0 {
            return Err(McError::NoDraws);
        }
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        Ok(McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            n: self.n,
        })
    }
}

/// Mean and standard error of `statistic` over `n` joint draws of `specs`
/// (sampled in list order each draw).
pub fn mc_estimate<F>(
    specs: &[DistributionSpec],
    mut statistic: F,
    n: usize,
    rng: &mut SeededRng,
) -> Result<McEstimate, McError>
where
    F: FnMut(&[f64]) -> f64,
{
    if n == 0 {
        return Err(McError::NoDraws);
    }
    let mut draw = vec![0.0; specs.len()];
    let mut stats = RunningStats::default();
    for _ in 0..n {
        for (slot, spec) in draw.iter_mut().zip(specs) {
            *slot = spec.sample(rng);
        }
        stats.push(statistic(&draw));
    }
    stats.estimate()
}
