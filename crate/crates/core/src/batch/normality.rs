use serde::{Deserialize, Serialize};

use crate::capability::summarize;
use crate::error::{Error, Result};
use crate::normal::normal_cdf;

pub const MIN_NORMALITY_N: usize = 8;

/// Anderson–Darling test for normality with mean and variance estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub statistic: f64,
    /// `A²(1 + 0.75/n + 2.25/n²)`.
    pub adjusted: f64,
    pub p_value: f64,
}

// D'Agostino & Stephens (1986) piecewise approximation.
fn p_value(a: f64) -> f64 {
    let p = if a < 0.2 {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    } else if a < 0.34 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else if a < 0.6 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    };
    p.clamp(0.0, 1.0)
}

pub fn anderson_darling(sample: &[f64]) -> Result<AndersonDarling> {
    let n = sample.len();
    if n < MIN_NORMALITY_N {
        return Err(Error::insufficient("normality test", MIN_NORMALITY_N, n));
    }
    let s = summarize(sample)?;
    if s.sd <= 0.0 {
        return Err(Error::DegenerateSample("constant sample".into()));
    }
    let mut z: Vec<f64> = sample.iter().map(|x| (x - s.mean) / s.sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let eps = 1e-300;
    let sum: f64 = (0..n)
        .map(|i| {
            let lo = normal_cdf(z[i]).max(eps).ln();
            // 1 − Φ(z) = Φ(−z), evaluated without cancellation
            let hi = normal_cdf(-z[n - 1 - i]).max(eps).ln();
            (2 * i + 1) as f64 * (lo + hi)
        })
        .sum();
    let statistic = -nf - sum / nf;
    let adjusted = statistic * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(AndersonDarling {
        statistic,
        adjusted,
        p_value: p_value(adjusted),
    })
}

/// `true` when normality is not rejected at `level`, i.e. the adjusted
/// statistic is at or below the level's critical value.
pub fn classify_normality(sample: &[f64], level: f64) -> Result<bool> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    Ok(anderson_darling(sample)?.p_value >= level)
}
