//! Chance-constraint risks: completion-time overrun and contact-duration
//! shortfall.

use super::dist::{DistError, DistributionSpec};
use super::quadrature::integrate_with_breaks;

const RISK_ABS_TOL: f64 = 1e-9;

/// `P(q/f + d/r > t_max)` for independent `f`, `r`.
///
/// Conditioning on the rate `r`, the inner probability over `f` is the
/// CDF of `f` at `q / (t_max - d/r)` (or 1 when the transfer alone already
/// overruns). The outer expectation over `r` is integrated numerically,
/// split at every rate where the inner term has a jump or kink.
pub fn risk_time(
    f_spec: &DistributionSpec,
    r_spec: &DistributionSpec,
    q: f64,
    d: f64,
    t_max: f64,
) -> Result<f64, DistError> {
    f_spec.validate()?;
    r_spec.validate()?;
    if f_spec.lower() <= 0.0 {
        return Err(DistError::ReciprocalSupport(f_spec.lower()));
    }
    if d > 0.0 && r_spec.lower() <= 0.0 {
        return Err(DistError::ReciprocalSupport(r_spec.lower()));
    }
    let overrun_given_rate = |rate: f64| -> f64 {
        let remaining = t_max - d / rate;
        if remaining <= 0.0 {
            1.0
        } else {
            f_spec.prob_below(q / remaining)
        }
    };
    if d == 0.0 {
        return Ok(f_spec.prob_below(q / t_max));
    }
    if let DistributionSpec::Deterministic { value } = *r_spec {
        return Ok(overrun_given_rate(value));
    }

    let mut breaks = vec![d / t_max];
    let f_marks: &[f64] = match *f_spec {
        DistributionSpec::Deterministic { value } => &[value][..],
        _ => &[f_spec.lower(), f_spec.upper()][..],
    };
    for &fb in f_marks {
        let slack = t_max - q / fb;
        if slack > 0.0 {
            breaks.push(d / slack);
        }
    }
    let value = integrate_with_breaks(
        |rate| r_spec.pdf(rate).unwrap() * overrun_given_rate(rate),
        r_spec.lower(),
        r_spec.upper(),
        &breaks,
        RISK_ABS_TOL,
        0.0,
    )?;
    Ok(value.clamp(0.0, 1.0))
}

/// `P(t_conn < w_task)`; equals the CDF for continuous laws.
pub fn risk_struct(t_conn_spec: &DistributionSpec, w_task: f64) -> f64 {
    t_conn_spec.prob_below(w_task)
}
