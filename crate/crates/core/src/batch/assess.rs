use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::DimensionRecord;
use super::normality::classify_normality;
use crate::capability::{failure_probability_analytic, CapabilityEstimate};
use crate::error::{Error, Result};
use crate::resampling::{bootstrap_p_fail, BootstrapConfig};
use crate::rng::{derive_seed, hash_str};
use crate::rules::alpha_from_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessConfig {
    pub c0: f64,
    pub lambdas: Vec<f64>,
    /// Run-level bootstrap settings; each dimension reseeds from its id.
    pub bootstrap: BootstrapConfig,
    pub normality_level: f64,
}

impl AssessConfig {
    pub fn new(
        c0: f64,
        lambdas: Vec<f64>,
        bootstrap: BootstrapConfig,
        normality_level: f64,
    ) -> Result<Self> {
        let cfg = Self {
            c0,
            lambdas,
            bootstrap,
            normality_level,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c0.is_finite() {
            return Err(Error::domain("c0 must be finite"));
        }
        if self.lambdas.is_empty() {
            return Err(Error::domain("lambda grid must be non-empty"));
        }
        for &l in &self.lambdas {
            if !(l >= 1.0 && l.is_finite()) {
                return Err(Error::domain(format!("lambda must be >= 1, got {l}")));
            }
        }
        if !(self.normality_level > 0.0 && self.normality_level < 1.0) {
            return Err(Error::domain("normality level must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaDecision {
    pub lambda: f64,
    pub alpha: f64,
    pub accept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAssessment {
    pub id: String,
    pub n: usize,
    pub cpk_hat: f64,
    pub se: f64,
    pub p_fail: f64,
    pub method: Method,
    pub normal: bool,
    /// Deterministic decision `Ĉpk ≥ C₀`.
    pub baseline_accept: bool,
    pub decisions: Vec<LambdaDecision>,
}

impl DimensionAssessment {
    pub fn accepted_at(&self, lambda: f64) -> Option<bool> {
        self.decisions
            .iter()
            .find(|d| d.lambda == lambda)
            .map(|d| d.accept)
    }
}

/// A dimension that could not be assessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionEntry {
    pub id: String,
    pub kind: String,
    pub message: String,
}

/// Plug-in estimate, analytic or bootstrap failure probability by normality,
/// and the decision `p_fail ≤ 1/(1 + λ)` for each `λ`.
///
/// The calibrated decision is also floored at the deterministic one, so no `λ`
/// can accept a dimension with `Ĉpk < C₀`. For the analytic route this is
/// already implied by `α ≤ 1/2`; for the bootstrap route it is not, because
/// the resampling distribution need not be centred on `Ĉpk`.
pub fn assess_dimension(
    record: &DimensionRecord,
    cfg: &AssessConfig,
) -> Result<DimensionAssessment> {
    let est = CapabilityEstimate::from_sample(&record.measurements, &record.limits)?;
    let normal = match classify_normality(&record.measurements, cfg.normality_level) {
        Ok(flag) => flag,
        // too few points to test: fall back to the assumption-free route
        Err(Error::InsufficientData { .. }) => false,
        Err(e) => return Err(e),
    };
    let (method, p_fail) = if normal {
        (
            Method::Analytic,
            failure_probability_analytic(est.cpk_hat, est.se, cfg.c0)?,
        )
    } else {
        let seed = derive_seed(cfg.bootstrap.seed, hash_str(&record.id));
        let boot = bootstrap_p_fail(
            &record.measurements,
            &record.limits,
            cfg.c0,
            &cfg.bootstrap.with_seed(seed),
        )?;
        (Method::Bootstrap, boot.p_fail)
    };
    let baseline_accept = est.cpk_hat >= cfg.c0;
    let decisions = cfg
        .lambdas
        .iter()
        .map(|&lambda| {
            let alpha = alpha_from_lambda(lambda)?;
            Ok(LambdaDecision {
                lambda,
                alpha,
                accept: baseline_accept && p_fail <= alpha,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionAssessment {
        id: record.id.clone(),
        n: record.n(),
        cpk_hat: est.cpk_hat,
        se: est.se,
        p_fail,
        method,
        normal,
        baseline_accept,
        decisions,
    })
}

/// Assess every record in parallel; order follows the input.
pub fn assess_all(
    records: &[DimensionRecord],
    cfg: &AssessConfig,
) -> Result<(Vec<DimensionAssessment>, Vec<ExceptionEntry>)> {
    cfg.validate()?;
    let outcomes: Vec<_> = records
        .par_iter()
        .map(|r| (r, assess_dimension(r, cfg)))
        .collect();
    let mut assessed = Vec::with_capacity(records.len());
    let mut exceptions = Vec::new();
    for (rec, out) in outcomes {
        match out {
            Ok(a) => assessed.push(a),
            Err(e) => exceptions.push(ExceptionEntry {
                id: rec.id.clone(),
                kind: e.kind().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok((assessed, exceptions))
}
