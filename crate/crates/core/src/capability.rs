//! Sample summaries, the plug-in capability estimator and its asymptotic
//! standard error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::normal_cdf;

/// Bilateral specification interval for one characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecLimits {
    lsl: f64,
    usl: f64,
}

impl SpecLimits {
    pub fn new(lsl: f64, usl: f64) -> Result<Self> {
        if !(lsl.is_finite() && usl.is_finite()) {
            return Err(Error::domain("specification limits must be finite"));
        }
        if lsl >= usl {
            return Err(Error::Consistency(format!(
                "lsl ({lsl}) must be strictly below usl ({usl})"
            )));
        }
        Ok(Self { lsl, usl })
    }

    /// Symmetric limits `(-t, t)`.
    pub fn symmetric(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    pub fn lsl(&self) -> f64 {
        self.lsl
    }

    pub fn usl(&self) -> f64 {
        self.usl
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lsl + self.usl)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.usl - self.lsl)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lsl && x < self.usl
    }

    /// Scale both limits by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.lsl * c, self.usl * c)
    }
}

/// True process location and dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    mu: f64,
    sigma: f64,
}

impl ProcessParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!(
                "process requires finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Sample size, mean and standard deviation (divisor `n - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SampleSummary {
    pub fn new(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::insufficient("sample summary", 2, n));
        }
        if !mean.is_finite() || !(sd >= 0.0 && sd.is_finite()) {
            return Err(Error::domain(format!(
                "summary requires finite mean and sd >= 0, got mean={mean}, sd={sd}"
            )));
        }
        Ok(Self { n, mean, sd })
    }
}

/// Point estimate of Cpk with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapabilityEstimate {
    pub cpk_hat: f64,
    pub se: f64,
    pub n: usize,
}

impl CapabilityEstimate {
    pub fn new(cpk_hat: f64, se: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::insufficient("capability estimate", 2, n));
        }
        if !cpk_hat.is_finite() {
            return Err(Error::domain("capability estimate must be finite"));
        }
        if !(se > 0.0 && se.is_finite()) {
            return Err(Error::domain(format!(
                "standard error must be finite and > 0, got {se}"
            )));
        }
        Ok(Self { cpk_hat, se, n })
    }

    /// Plug-in estimate and plug-in standard error from a summary.
    pub fn from_summary(summary: &SampleSummary, limits: &SpecLimits) -> Result<Self> {
        let cpk_hat = estimate_cpk(summary, limits)?;
        let se = se_plugin(cpk_hat, summary.n)?;
        Self::new(cpk_hat, se, summary.n)
    }

    pub fn from_sample(sample: &[f64], limits: &SpecLimits) -> Result<Self> {
        Self::from_summary(&summarize(sample)?, limits)
    }
}

/// Mean and `n - 1` standard deviation (two-pass).
pub fn summarize(sample: &[f64]) -> Result<SampleSummary> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::insufficient("summarize", 2, n));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("sample contains non-finite values"));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let ss: f64 = sample.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(SampleSummary { n, mean, sd })
}

#[inline]
pub(crate) fn cpk_formula(mean: f64, sd: f64, limits: &SpecLimits) -> f64 {
    let upper = (limits.usl - mean) / (3.0 * sd);
    let lower = (mean - limits.lsl) / (3.0 * sd);
    upper.min(lower)
}

/// `min((USL - μ)/3σ, (μ - LSL)/3σ)`; negative when `μ` lies outside the limits.
pub fn true_cpk(params: &ProcessParams, limits: &SpecLimits) -> f64 {
    cpk_formula(params.mu, params.sigma, limits)
}

/// Plug-in estimator: [`true_cpk`] with the sample mean and sd substituted.
pub fn estimate_cpk(summary: &SampleSummary, limits: &SpecLimits) -> Result<f64> {
    if summary.sd <= 0.0 {
        return Err(Error::DegenerateSample(
            "zero dispersion, capability undefined".into(),
        ));
    }
    Ok(cpk_formula(summary.mean, summary.sd, limits))
}

/// Asymptotic standard deviation of `√n (Ĉpk − Cpk)` with one active limit:
/// `sqrt(1/9 + Cpk²/2)`.
pub fn sigma_c(cpk: f64) -> f64 {
    (1.0 / 9.0 + 0.5 * cpk * cpk).sqrt()
}

/// Plug-in standard error `sigma_c(Ĉpk) / √n`.
pub fn se_plugin(cpk_hat: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::insufficient("se_plugin", 2, n));
    }
    Ok(sigma_c(cpk_hat) / (n as f64).sqrt())
}

/// Process sd giving capability `cpk_true` for a centered process within `(-t, t)`.
pub fn sigma_for_target(half_width: f64, cpk_true: f64) -> Result<f64> {
    if !(half_width > 0.0 && cpk_true > 0.0) {
        return Err(Error::domain(format!(
            "sigma_for_target needs positive inputs, got T={half_width}, cpk={cpk_true}"
        )));
    }
    Ok(half_width / (3.0 * cpk_true))
}

/// Normal-approximation probability that the true capability lies below `c0`:
/// `Φ((c0 − Ĉpk)/se)`.
pub fn failure_probability_analytic(cpk_hat: f64, se: f64, c0: f64) -> Result<f64> {
    if !(se > 0.0) {
        return Err(Error::domain(format!("se must be > 0, got {se}")));
    }
    Ok(normal_cdf((c0 - cpk_hat) / se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn limits4() -> SpecLimits {
        SpecLimits::new(-4.0, 4.0).unwrap()
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.n, s.mean, s.sd), (3, 1.0, 0.0));

        // Σ(x − 1)² = 4, divided by 3.
        let s = summarize(&[0.0, 2.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.mean, 1.0);
        assert!(close(s.sd, (4.0f64 / 3.0).sqrt(), 1e-15));
        assert!(close(s.sd, 1.1547, 1e-4));

        assert!(matches!(
            summarize(&[]),
            Err(Error::InsufficientData { got: 0, .. })
        ));
        assert!(summarize(&[1.0]).is_err());
    }

    #[test]
    fn limits_must_be_ordered() {
        assert!(SpecLimits::new(1.0, 1.0).is_err());
        assert!(SpecLimits::new(2.0, 1.0).is_err());
        assert!(SpecLimits::new(f64::NAN, 1.0).is_err());
        assert!(ProcessParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn true_cpk_examples() {
        let l = limits4();
        let p = |mu, sigma| ProcessParams::new(mu, sigma).unwrap();
        assert!(close(true_cpk(&p(0.0, 1.0), &l), 4.0 / 3.0, 1e-12));
        assert!(close(true_cpk(&p(1.0, 1.0), &l), 1.0, 1e-12));
        assert!(close(true_cpk(&p(5.0, 1.0), &l), -1.0 / 3.0, 1e-12));
    }

    #[test]
    fn estimate_cpk_examples() {
        let l = limits4();
        let s = SampleSummary::new(10, 0.0, 1.0).unwrap();
        assert!(close(estimate_cpk(&s, &l).unwrap(), 4.0 / 3.0, 1e-12));

        let s = summarize(&[0.0, 2.0, 0.0, 2.0]).unwrap();
        let c = estimate_cpk(&s, &l).unwrap();
        assert!(close(c, 3.0 / (3.0 * (4.0f64 / 3.0).sqrt()), 1e-12));
        assert!(close(c, 0.86603, 1e-5));

        let s = SampleSummary::new(5, 0.0, 0.0).unwrap();
        assert!(matches!(
            estimate_cpk(&s, &l),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn sigma_c_examples() {
        assert!(close(sigma_c(0.0), 1.0 / 3.0, 1e-15));
        assert!(close(sigma_c(1.33), 0.99778, 1e-5));
        assert!(close(sigma_c(2.0), 1.45297, 1e-5));
        assert_eq!(sigma_c(-1.7), sigma_c(1.7));
    }

    #[test]
    fn se_plugin_examples() {
        assert!(close(se_plugin(0.0, 100).unwrap(), 1.0 / 30.0, 1e-15));
        assert!(close(se_plugin(1.33, 32).unwrap(), 0.17639, 1e-5));
        assert!(close(se_plugin(1.5, 50).unwrap(), 0.15723, 1e-5));
        assert!(matches!(
            se_plugin(1.0, 1),
            Err(Error::InsufficientData { .. })
        ));
        let mut prev = f64::INFINITY;
        for n in 2..200 {
            let se = se_plugin(1.2, n).unwrap();
            assert!(se < prev);
            prev = se;
        }
    }

    #[test]
    fn sigma_for_target_examples() {
        assert!(close(sigma_for_target(4.0, 4.0 / 3.0).unwrap(), 1.0, 1e-12));
        assert!(close(sigma_for_target(4.0, 1.33).unwrap(), 1.00251, 1e-5));
        assert!(close(sigma_for_target(4.0, 2.0).unwrap(), 0.66667, 1e-5));
        assert!(sigma_for_target(0.0, 1.0).is_err());
        assert!(sigma_for_target(4.0, -1.0).is_err());

        let l = limits4();
        for cpk in [0.8, 1.0, 1.33, 1.9, 2.0] {
            let sigma = sigma_for_target(4.0, cpk).unwrap();
            let back = true_cpk(&ProcessParams::new(0.0, sigma).unwrap(), &l);
            assert!(close(back, cpk, 1e-12));
        }
    }

    #[test]
    fn failure_probability_examples() {
        assert_eq!(failure_probability_analytic(1.33, 0.1, 1.33).unwrap(), 0.5);
        let p = failure_probability_analytic(1.33 + 1.645 * 0.1, 0.1, 1.33).unwrap();
        assert!(close(p, 0.05, 1e-3));
        // Φ(−0.963774...) from the 40-digit reference.
        let p = failure_probability_analytic(1.5, 0.17639, 1.33).unwrap();
        assert!(close(p, 0.167580, 1e-5), "{p}");
        assert!(failure_probability_analytic(1.5, 0.0, 1.33).is_err());
    }

    /// σ_C² must equal ∇g·Σ·∇g with ∇g from central differences of the
    /// one-sided capability functional and Σ = diag(σ², σ²/2).
    #[test]
    fn sigma_c_matches_numerical_delta_method() {
        let l = limits4();
        for &(mu, sigma) in &[(0.5, 1.0), (1.0, 0.5), (2.0, 0.4), (-1.5, 0.9)] {
            let g = |m: f64, s: f64| true_cpk(&ProcessParams::new(m, s).unwrap(), &l);
            let h = 1e-5;
            let d_mu = (g(mu + h, sigma) - g(mu - h, sigma)) / (2.0 * h);
            let d_sigma = (g(mu, sigma + h) - g(mu, sigma - h)) / (2.0 * h);
            let var = d_mu * d_mu * sigma * sigma + d_sigma * d_sigma * sigma * sigma / 2.0;
            let cpk = g(mu, sigma);
            let want = sigma_c(cpk).powi(2);
            assert!(
                ((var - want) / want).abs() < 1e-6,
                "mu={mu} sigma={sigma} fd={var} closed={want}"
            );
        }
    }

    proptest! {
        #[test]
        fn scale_equivariance(
            values in proptest::collection::vec(-3.0f64..3.0, 3..40),
            c in 0.01f64..100.0,
        ) {
            let l = limits4();
            let s = summarize(&values).unwrap();
            prop_assume!(s.sd > 1e-6);
            let base = estimate_cpk(&s, &l).unwrap();
            let scaled: Vec<f64> = values.iter().map(|x| x * c).collect();
            let scaled_cpk =
                estimate_cpk(&summarize(&scaled).unwrap(), &l.scaled(c).unwrap()).unwrap();
            prop_assert!((base - scaled_cpk).abs() <= 1e-12 * base.abs().max(1.0));
        }

        #[test]
        fn failure_probability_decreasing(c0 in 0.5f64..2.0, se in 0.01f64..1.0, a in -1.0f64..3.0, d in 1e-3f64..1.0) {
            let p1 = failure_probability_analytic(a, se, c0).unwrap();
            let p2 = failure_probability_analytic(a + d, se, c0).unwrap();
            prop_assert!(p2 <= p1);
        }
    }
}
