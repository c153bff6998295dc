//! The guard-band family `accept ⇔ Ĉpk ≥ C₀ + k·SE` and the mappings between
//! its four parameterizations.
//!
//! | rule                  | calibration constant `k`        |
//! |-----------------------|---------------------------------|
//! | deterministic         | `0`                             |
//! | lower confidence bound| `z(1 − γ)`                      |
//! | failure probability   | `z(1 − α)`                      |
//! | cost sensitive        | `z(1 − 1/(1 + λ))`              |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::capability::{failure_probability_analytic, sigma_c, CapabilityEstimate};
use crate::error::{Error, Result};
use crate::normal::{normal_cdf, normal_quantile};

/// One member of the guard-band family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Deterministic,
    LowerConfidenceBound { gamma: f64 },
    FailureProbability { alpha: f64 },
    CostSensitive { lambda: f64 },
}

fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must lie in (0, 1), got {value}"
        )))
    }
}

impl Rule {
    pub fn lcb(gamma: f64) -> Result<Self> {
        check_open_unit("gamma", gamma)?;
        Ok(Rule::LowerConfidenceBound { gamma })
    }

    pub fn failure_probability(alpha: f64) -> Result<Self> {
        check_open_unit("alpha", alpha)?;
        Ok(Rule::FailureProbability { alpha })
    }

    /// Cost ratios below 1 would give a negative margin and are refused.
    pub fn cost_sensitive(lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::domain(format!(
                "cost ratio lambda must be finite and >= 1, got {lambda}"
            )));
        }
        Ok(Rule::CostSensitive { lambda })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Rule::Deterministic => Ok(()),
            Rule::LowerConfidenceBound { gamma } => Rule::lcb(gamma).map(|_| ()),
            Rule::FailureProbability { alpha } => Rule::failure_probability(alpha).map(|_| ()),
            Rule::CostSensitive { lambda } => Rule::cost_sensitive(lambda).map(|_| ()),
        }
    }

    /// Tolerated failure probability implied by the rule.
    pub fn alpha(&self) -> Result<f64> {
        match *self {
            Rule::Deterministic => Ok(0.5),
            Rule::LowerConfidenceBound { gamma } => Ok(gamma),
            Rule::FailureProbability { alpha } => Ok(alpha),
            Rule::CostSensitive { lambda } => alpha_from_lambda(lambda),
        }
    }

    /// Stable short label, used in CSV output.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Deterministic => write!(f, "deterministic"),
            Rule::LowerConfidenceBound { gamma } => write!(f, "lcb({gamma})"),
            Rule::FailureProbability { alpha } => write!(f, "alpha({alpha})"),
            Rule::CostSensitive { lambda } => write!(f, "lambda({lambda})"),
        }
    }
}

/// Outcome of applying a rule to one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub accept: bool,
    pub k: f64,
    pub margin: f64,
    pub effective_threshold: f64,
    pub p_fail: Option<f64>,
}

/// Costs of a false accept and a false reject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    c_fa: f64,
    c_fr: f64,
}

impl LossSpec {
    pub fn new(c_fa: f64, c_fr: f64) -> Result<Self> {
        if !(c_fa > 0.0 && c_fr > 0.0 && c_fa.is_finite() && c_fr.is_finite()) {
            return Err(Error::domain(format!(
                "costs must be finite and > 0, got c_fa={c_fa}, c_fr={c_fr}"
            )));
        }
        Ok(Self { c_fa, c_fr })
    }

    /// Costs normalized so that a false reject costs 1.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0)
    }

    pub fn c_fa(&self) -> f64 {
        self.c_fa
    }

    pub fn c_fr(&self) -> f64 {
        self.c_fr
    }

    pub fn lambda(&self) -> f64 {
        self.c_fa / self.c_fr
    }
}

/// Bayes acceptance cutoff `1/(1 + λ)`.
pub fn alpha_from_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
    }
    Ok(1.0 / (1.0 + lambda))
}

/// `k = z(1 − α)`.
pub fn k_from_alpha(alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    normal_quantile(1.0 - alpha)
}

pub fn k_of_rule(rule: &Rule) -> Result<f64> {
    rule.validate()?;
    match *rule {
        Rule::Deterministic => Ok(0.0),
        Rule::LowerConfidenceBound { gamma } => normal_quantile(1.0 - gamma),
        Rule::FailureProbability { alpha } => k_from_alpha(alpha),
        Rule::CostSensitive { lambda } => k_from_alpha(alpha_from_lambda(lambda)?),
    }
}

/// Apply a rule with a precomputed calibration constant.
pub fn decide_with_k(k: f64, estimate: &CapabilityEstimate, c0: f64) -> Result<Decision> {
    let margin = k * estimate.se;
    let effective_threshold = c0 + margin;
    Ok(Decision {
        accept: estimate.cpk_hat >= effective_threshold,
        k,
        margin,
        effective_threshold,
        p_fail: Some(failure_probability_analytic(
            estimate.cpk_hat,
            estimate.se,
            c0,
        )?),
    })
}

/// Accept iff `Ĉpk ≥ c0 + k(rule)·se`. The analytic failure probability is
/// attached for every rule.
pub fn decide(rule: &Rule, estimate: &CapabilityEstimate, c0: f64) -> Result<Decision> {
    if !(estimate.se > 0.0 && estimate.se.is_finite()) || !estimate.cpk_hat.is_finite() {
        return Err(Error::domain(
            "estimate must have finite cpk_hat and se > 0",
        ));
    }
    decide_with_k(k_of_rule(rule)?, estimate, c0)
}

/// One-sided lower confidence bound `Ĉpk − z(1 − γ)·se`.
pub fn lcb(estimate: &CapabilityEstimate, gamma: f64) -> Result<f64> {
    check_open_unit("gamma", gamma)?;
    Ok(estimate.cpk_hat - normal_quantile(1.0 - gamma)? * estimate.se)
}

/// Asymptotic acceptance probability `Φ(−k)` at `Cpk_true = C₀`.
pub fn boundary_acceptance(k: f64) -> f64 {
    normal_cdf(-k)
}

/// Local asymptotic acceptance `Φ(√n (Cpk − C₀)/σ_C(Cpk) − k)`.
pub fn local_acceptance(cpk_true: f64, c0: f64, n: usize, k: f64) -> f64 {
    let n = n.max(1) as f64;
    normal_cdf(n.sqrt() * (cpk_true - c0) / sigma_c(cpk_true) - k)
}

/// Expected loss at a single state: `c_fa·P_FA` below threshold, `c_fr·P_FR` otherwise.
pub fn expected_loss_point(p_fa: f64, p_fr: f64, loss: &LossSpec, state_below: bool) -> f64 {
    if state_below {
        loss.c_fa * p_fa
    } else {
        loss.c_fr * p_fr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capability::se_plugin;
    use proptest::prelude::*;

    fn est(cpk_hat: f64, se: f64) -> CapabilityEstimate {
        CapabilityEstimate::new(cpk_hat, se, 32).unwrap()
    }

    #[test]
    fn alpha_from_lambda_table() {
        assert_eq!(alpha_from_lambda(1.0).unwrap(), 0.5);
        assert!((alpha_from_lambda(19.0).unwrap() - 0.05).abs() < 1e-15);
        assert!((alpha_from_lambda(99.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(alpha_from_lambda(0.0).is_err());
        assert!(alpha_from_lambda(-2.0).is_err());
        assert!(alpha_from_lambda(3.0).unwrap() < alpha_from_lambda(2.0).unwrap());
    }

    #[test]
    fn k_from_alpha_table() {
        assert_eq!(k_from_alpha(0.5).unwrap(), 0.0);
        assert!((k_from_alpha(0.2).unwrap() - 0.842).abs() < 1e-3);
        assert!((k_from_alpha(0.01).unwrap() - 2.326).abs() < 1e-3);
        assert!(k_from_alpha(0.0).is_err());
        assert!(k_from_alpha(1.0).is_err());
    }

    #[test]
    fn k_of_rule_examples() {
        assert_eq!(k_of_rule(&Rule::Deterministic).unwrap(), 0.0);
        let lcb = Rule::lcb(0.05).unwrap();
        assert!((k_of_rule(&lcb).unwrap() - 1.645).abs() < 1e-3);
        let cs = Rule::cost_sensitive(19.0).unwrap();
        assert!((k_of_rule(&cs).unwrap() - 1.645).abs() < 1e-3);
        assert_eq!(k_of_rule(&Rule::cost_sensitive(1.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn rule_constructors_validate() {
        assert!(Rule::cost_sensitive(0.5).is_err());
        assert!(Rule::cost_sensitive(f64::INFINITY).is_err());
        assert!(Rule::lcb(0.0).is_err());
        assert!(Rule::failure_probability(1.0).is_err());
        assert!(k_of_rule(&Rule::CostSensitive { lambda: 0.2 }).is_err());
        assert!(Rule::failure_probability(0.7).is_ok());
    }

    #[test]
    fn decide_examples() {
        let d = decide(&Rule::Deterministic, &est(1.40, 0.10), 1.33).unwrap();
        assert!(d.accept);
        assert_eq!(d.k, 0.0);
        assert_eq!(d.effective_threshold, 1.33);

        let cs = Rule::cost_sensitive(19.0).unwrap();
        let d = decide(&cs, &est(1.40, 0.10), 1.33).unwrap();
        assert!(!d.accept);
        assert!((d.effective_threshold - 1.4945).abs() < 1e-3);
        assert_eq!(d.margin, d.k * 0.10);
        assert!(d.p_fail.is_some());

        let d = decide(&cs, &est(1.70, 0.10), 1.33).unwrap();
        assert!(d.accept);
    }

    #[test]
    fn decide_ties_accept() {
        let d = decide(&Rule::Deterministic, &est(1.33, 0.1), 1.33).unwrap();
        assert!(d.accept);
        assert_eq!(d.p_fail, Some(0.5));
    }

    #[test]
    fn lcb_examples() {
        assert_eq!(lcb(&est(1.5, 0.1), 0.5).unwrap(), 1.5);
        assert!((lcb(&est(1.5, 0.1), 0.05).unwrap() - 1.3355).abs() < 1e-4);
        assert!(lcb(&est(1.5, 0.1), 1.0).is_err());
    }

    #[test]
    fn boundary_acceptance_values() {
        assert_eq!(boundary_acceptance(0.0), 0.5);
        assert!((boundary_acceptance(1.645) - 0.05).abs() < 1e-3);
        assert!((boundary_acceptance(2.326) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn local_acceptance_values() {
        assert_eq!(local_acceptance(1.33, 1.33, 32, 0.0), 0.5);
        assert!((local_acceptance(1.33, 1.33, 32, 1.645) - 0.05).abs() < 1e-3);
        // h = σ_C/√n puts the drift term at exactly 1, so the result is Φ(1).
        // σ_C is evaluated at the true capability, hence the one-step fixed point.
        let n = 200usize;
        let c0 = 1.33;
        let mut c = c0 + sigma_c(c0) / (n as f64).sqrt();
        for _ in 0..50 {
            c = c0 + sigma_c(c) / (n as f64).sqrt();
        }
        assert!((local_acceptance(c, c0, n, 0.0) - 0.841344746).abs() < 1e-9);
        // the first-order shift used without iteration is already close
        let h = c0 + sigma_c(c0) / (n as f64).sqrt();
        assert!((local_acceptance(h, c0, n, 0.0) - 0.8413).abs() < 2e-2);
    }

    #[test]
    fn expected_loss_examples() {
        let loss = LossSpec::new(10.0, 1.0).unwrap();
        assert!((expected_loss_point(0.4, 0.0, &loss, true) - 4.0).abs() < 1e-12);
        let loss = LossSpec::new(3.0, 1.0).unwrap();
        assert!((expected_loss_point(0.0, 0.1, &loss, false) - 0.1).abs() < 1e-12);
        assert_eq!(expected_loss_point(0.0, 0.3, &loss, true), 0.0);
        assert!(LossSpec::new(0.0, 1.0).is_err());
        assert_eq!(LossSpec::from_lambda(19.0).unwrap().lambda(), 19.0);
    }

    #[test]
    fn margin_halves_when_n_quadruples() {
        for &cpk in &[0.5, 1.33, 2.4] {
            for &n in &[8usize, 32, 50, 125] {
                let a = est(cpk, se_plugin(cpk, n).unwrap());
                let b = est(cpk, se_plugin(cpk, 4 * n).unwrap());
                let rule = Rule::cost_sensitive(19.0).unwrap();
                let ma = decide(&rule, &a, 1.33).unwrap().margin;
                let mb = decide(&rule, &b, 1.33).unwrap().margin;
                assert!((ma / mb - 2.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn cost_sensitive_matches_failure_probability(
            cpk in -2.0f64..4.0, se in 1e-3f64..1.0, lambda in 1.0f64..500.0
        ) {
            let e = est(cpk, se);
            let a = decide(&Rule::cost_sensitive(lambda).unwrap(), &e, 1.33).unwrap();
            let b = decide(&Rule::failure_probability(1.0 / (1.0 + lambda)).unwrap(), &e, 1.33).unwrap();
            prop_assert_eq!(a.accept, b.accept);
        }

        #[test]
        fn lcb_rule_matches_bound(cpk in -2.0f64..4.0, se in 1e-3f64..1.0, gamma in 0.001f64..0.999) {
            let e = est(cpk, se);
            let d = decide(&Rule::lcb(gamma).unwrap(), &e, 1.33).unwrap();
            prop_assert_eq!(d.accept, lcb(&e, gamma).unwrap() >= 1.33);
        }

        #[test]
        fn accept_set_shrinks_with_k(cpk in -2.0f64..4.0, se in 1e-3f64..1.0, k1 in 0.0f64..4.0, dk in 0.0f64..2.0) {
            let e = est(cpk, se);
            let strict = decide_with_k(k1 + dk, &e, 1.33).unwrap();
            let loose = decide_with_k(k1, &e, 1.33).unwrap();
            let det = decide(&Rule::Deterministic, &e, 1.33).unwrap();
            if strict.accept { prop_assert!(loose.accept); }
            if loose.accept { prop_assert!(det.accept); }
        }

        #[test]
        fn probability_rule_consistency(cpk in -2.0f64..4.0, se in 1e-3f64..1.0, alpha in 0.001f64..0.999) {
            let e = est(cpk, se);
            let d = decide(&Rule::failure_probability(alpha).unwrap(), &e, 1.33).unwrap();
            let p = failure_probability_analytic(cpk, se, 1.33).unwrap();
            if (p - alpha).abs() > 1e-9 {
                prop_assert_eq!(d.accept, p <= alpha);
            }
        }
    }
}
