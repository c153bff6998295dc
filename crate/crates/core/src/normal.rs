//! Standard normal distribution function and its inverse.
//!
//! Both are thin wrappers over the complementary error function and its
//! inverse, which keeps the far tails accurate (no `1 - cdf` cancellation).

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Standard normal CDF, `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, `Φ⁻¹(p)` for `p` strictly inside (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile requires p in (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p))
}
