use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

use super::quadrature::{integrate, QuadratureError};
use super::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("bounds must satisfy lower < upper, got [{lower}, {upper}]")]
    Bounds { lower: f64, upper: f64 },
    #[error("variance must be > 0, got {0}")]
    Variance(f64),
    #[error("exponential mean must be > 0, got {0}")]
    ExpMean(f64),
    #[error("exponential support starts at 0, lower bound {0} is negative")]
    ExpLower(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("untruncated density has no numerical mass on [{lower}, {upper}]")]
    NoMass { lower: f64, upper: f64 },
    #[error("E[1/X] undefined: support lower bound {0} is not positive")]
    ReciprocalSupport(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// One of the three supported laws. Truncated laws are renormalized on
/// `[lower, upper]`; `TruncExp::mean` is the mean of the *untruncated*
/// exponential and `TruncGauss::{mean, variance}` likewise describe the
/// parent normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    TruncGauss {
        mean: f64,
        variance: f64,
        lower: f64,
        upper: f64,
    },
    TruncExp {
        mean: f64,
        lower: f64,
        upper: f64,
    },
    Deterministic {
        value: f64,
    },
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// P(a < Z < b) for standard normal Z, evaluated on the tail where it
/// does not cancel.
fn norm_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), DistError> {
        match *self {
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => {
                finite(mean, "mean")?;
                finite(variance, "variance")?;
                bounds(lower, upper)?;
                if variance <= 0.0 {
                    return Err(DistError::Variance(variance));
                }
                let sd = variance.sqrt();
                if norm_mass((lower - mean) / sd, (upper - mean) / sd) <= 0.0 {
                    return Err(DistError::NoMass { lower, upper });
                }
                Ok(())
            }
            DistributionSpec::TruncExp { mean, lower, upper } => {
                finite(mean, "mean")?;
                bounds(lower, upper)?;
                if mean <= 0.0 {
                    return Err(DistError::ExpMean(mean));
                }
                if lower < 0.0 {
                    return Err(DistError::ExpLower(lower));
                }
                Ok(())
            }
            DistributionSpec::Deterministic { value } => finite(value, "value"),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, DistributionSpec::Deterministic { .. })
    }

    pub fn lower(&self) -> f64 {
        match *self {
            DistributionSpec::TruncGauss { lower, .. } | DistributionSpec::TruncExp { lower, .. } => lower,
            DistributionSpec::Deterministic { value } => value,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            DistributionSpec::TruncGauss { upper, .. } | DistributionSpec::TruncExp { upper, .. } => upper,
            DistributionSpec::Deterministic { value } => value,
        }
    }

    /// P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            _ if x <= self.lower() => 0.0,
            _ if x >= self.upper() => 1.0,
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => {
                let sd = variance.sqrt();
                let a = (lower - mean) / sd;
                let b = (upper - mean) / sd;
                let z = (x - mean) / sd;
                (norm_mass(a, z) / norm_mass(a, b)).clamp(0.0, 1.0)
            }
            DistributionSpec::TruncExp { mean, lower, upper } => {
                (((lower - x) / mean).exp_m1() / ((lower - upper) / mean).exp_m1()).clamp(0.0, 1.0)
            }
        }
    }

    /// P(X < x). Differs from [`cdf`](Self::cdf) only for the
    /// deterministic law at `x == value`.
    pub fn prob_below(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Deterministic { value } => {
                if value < x {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// Density on the support; `None` for the deterministic law.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        if self.is_deterministic() {
            return None;
        }
        if x < self.lower() || x > self.upper() {
            return Some(0.0);
        }
        Some(match *self {
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => {
                let sd = variance.sqrt();
                let mass = norm_mass((lower - mean) / sd, (upper - mean) / sd);
                norm_pdf((x - mean) / sd) / (sd * mass)
            }
            DistributionSpec::TruncExp { mean, lower, upper } => {
                ((lower - x) / mean).exp() / (-mean * ((lower - upper) / mean).exp_m1())
            }
            DistributionSpec::Deterministic { .. } => unreachable!(),
        })
    }

    /// Mean of the truncated law.
    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => {
                let sd = variance.sqrt();
                let a = (lower - mean) / sd;
                let b = (upper - mean) / sd;
                (mean + sd * (norm_pdf(a) - norm_pdf(b)) / norm_mass(a, b)).clamp(lower, upper)
            }
            DistributionSpec::TruncExp { mean, lower, upper } => {
                let width = upper - lower;
                let tail = (-width / mean).exp();
                lower + mean - width * tail / (-(-width / mean).exp_m1())
            }
            DistributionSpec::Deterministic { value } => value,
        }
    }

    /// Inverse CDF of the truncated law for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let x = match *self {
            DistributionSpec::Deterministic { value } => return value,
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => {
                let sd = variance.sqrt();
                let a = (lower - mean) / sd;
                let b = (upper - mean) / sd;
                let z = if a >= 0.0 {
                    // upper tail: interpolate survival values
                    let (sa, sb) = (norm_sf(a), norm_sf(b));
                    SQRT_2 * erfc_inv(2.0 * (sa - u * (sa - sb)))
                } else {
                    let (ca, cb) = (norm_cdf(a), norm_cdf(b));
                    -SQRT_2 * erfc_inv(2.0 * (ca + u * (cb - ca)))
                };
                mean + sd * z
            }
            DistributionSpec::TruncExp { mean, lower, upper } => {
                lower - mean * (u * ((lower - upper) / mean).exp_m1()).ln_1p()
            }
        };
        x.clamp(self.lower(), self.upper())
    }

    /// One draw by inversion of a single uniform.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self {
            DistributionSpec::Deterministic { value } => *value,
            _ => self.quantile(rng.open01()),
        }
    }

    /// E[1/X] by adaptive quadrature (relative tolerance 1e-10, tighter
    /// than the 1e-8 contract). Requires a strictly positive support.
    pub fn expected_reciprocal(&self) -> Result<f64, DistError> {
        let lower = self.lower();
        if lower <= 0.0 {
            return Err(DistError::ReciprocalSupport(lower));
        }
        if let DistributionSpec::Deterministic { value } = *self {
            return Ok(1.0 / value);
        }
        let value = integrate(|x| self.pdf(x).unwrap() / x, lower, self.upper(), 0.0, 1e-10)?;
        Ok(value)
    }
}

fn finite(x: f64, name: &'static str) -> Result<(), DistError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(DistError::NonFinite(name))
    }
}

fn bounds(lower: f64, upper: f64) -> Result<(), DistError> {
    finite(lower, "lower")?;
    finite(upper, "upper")?;
    if lower < upper {
        Ok(())
    } else {
        Err(DistError::Bounds { lower, upper })
    }
}

impl DistributionSpec {
    /// The law of `k·X` for `k > 0`, used to convert units.
    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            DistributionSpec::TruncGauss {
                mean,
                variance,
                lower,
                upper,
            } => DistributionSpec::TruncGauss {
                mean: mean * k,
                variance: variance * k * k,
                lower: lower * k,
                upper: upper * k,
            },
            DistributionSpec::TruncExp { mean, lower, upper } => DistributionSpec::TruncExp {
                mean: mean * k,
                lower: lower * k,
                upper: upper * k,
            },
            DistributionSpec::Deterministic { value } => DistributionSpec::Deterministic { value: value * k },
        }
    }
}
