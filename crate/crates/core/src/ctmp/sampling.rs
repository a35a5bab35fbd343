//! Holding-time distributions.
//!
//! Both samplers invert the CDF of a uniform draw `u ∈ [0, 1)`, so a draw is
//! a deterministic function of the generator state.

use rand::Rng;

use crate::error::{Error, Result};

fn check_rate(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(q))
    }
}

/// Inverse CDF of `Exp(q)` at `u`.
pub fn exponential_from_uniform(q: f64, u: f64) -> Result<f64> {
    check_rate(q)?;
    Ok(-(-u).ln_1p() / q)
}

/// Inverse CDF of the exponential truncated to `[0, horizon)` at `u`.
///
/// The result is strictly below `horizon` even when rounding would land on it.
pub fn truncated_exponential_from_uniform(q: f64, horizon: f64, u: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidArgument(format!("truncated exponential rate {q}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncated exponential horizon {horizon}"
        )));
    }
    // F(t) = (1 - e^{-qt}) / (1 - e^{-qh});  t = -ln(1 - u (1 - e^{-qh})) / q
    let mass = -(-q * horizon).exp_m1();
    let t = -(-u * mass).ln_1p() / q;
    Ok(t.min(horizon.next_down()).max(0.0))
}

pub fn sample_exponential<R: Rng + ?Sized>(q: f64, rng: &mut R) -> Result<f64> {
    check_rate(q)?;
    exponential_from_uniform(q, rng.gen::<f64>())
}

pub fn sample_truncated_exponential<R: Rng + ?Sized>(
    q: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<f64> {
    let u = rng.gen::<f64>();
    truncated_exponential_from_uniform(q, horizon, u)
}

/// CDF of the truncated exponential, used by goodness-of-fit checks.
pub fn truncated_exponential_cdf(q: f64, horizon: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= horizon {
        1.0
    } else {
        (-q * t).exp_m1() / (-q * horizon).exp_m1()
    }
}

/// `ln(1 - e^{-x})` for `x > 0`, accurate near 0 and for large `x`.
pub fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}
