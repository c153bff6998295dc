use std::io::Write;

use serde::{Deserialize, Serialize};

use super::assess::{assess_all, AssessConfig, DimensionAssessment, ExceptionEntry, Method};
use super::dataset::DimensionRecord;
use crate::error::{Error, Result};
use crate::sim::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReclassificationRow {
    pub lambda: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub accept_to_reject: usize,
    pub reject_to_accept: usize,
}

/// Decision changes against the deterministic baseline, per `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReclassificationReport {
    pub baseline_accepted: usize,
    pub baseline_rejected: usize,
    pub rows: Vec<ReclassificationRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub lambda: f64,
    pub el_total_deterministic: f64,
    pub el_total_calibrated: f64,
    pub delta: f64,
    /// Absent when the deterministic total is zero.
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRiskReport {
    pub rows: Vec<RiskRow>,
}

fn decision_at(a: &DimensionAssessment, lambda: f64) -> Result<bool> {
    a.accepted_at(lambda).ok_or_else(|| {
        Error::Consistency(format!(
            "dimension {} has no decision for lambda {lambda}",
            a.id
        ))
    })
}

pub fn reclassification(
    assessments: &[DimensionAssessment],
    lambdas: &[f64],
) -> Result<ReclassificationReport> {
    if assessments.is_empty() {
        return Err(Error::insufficient("reclassification", 1, 0));
    }
    let baseline_accepted = assessments.iter().filter(|a| a.baseline_accept).count();
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let mut row = ReclassificationRow {
                lambda,
                accepted: 0,
                rejected: 0,
                accept_to_reject: 0,
                reject_to_accept: 0,
            };
            for a in assessments {
                let acc = decision_at(a, lambda)?;
                if acc {
                    row.accepted += 1;
                } else {
                    row.rejected += 1;
                }
                match (a.baseline_accept, acc) {
                    (true, false) => row.accept_to_reject += 1,
                    (false, true) => row.reject_to_accept += 1,
                    _ => {}
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReclassificationReport {
        baseline_accepted,
        baseline_rejected: assessments.len() - baseline_accepted,
        rows,
    })
}

/// `λ·p·δ + (1 − p)(1 − δ)` for one dimension.
pub fn empirical_risk_score(p_fail: f64, accepted: bool, lambda: f64) -> f64 {
    if accepted {
        lambda * p_fail
    } else {
        1.0 - p_fail
    }
}

pub fn empirical_risk(
    assessments: &[DimensionAssessment],
    lambdas: &[f64],
) -> Result<EmpiricalRiskReport> {
    if assessments.is_empty() {
        return Err(Error::insufficient("empirical risk", 1, 0));
    }
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let mut det = 0.0;
            let mut cal = 0.0;
            for a in assessments {
                det += empirical_risk_score(a.p_fail, a.baseline_accept, lambda);
                cal += empirical_risk_score(a.p_fail, decision_at(a, lambda)?, lambda);
            }
            let delta = det - cal;
            Ok(RiskRow {
                lambda,
                el_total_deterministic: det,
                el_total_calibrated: cal,
                delta,
                delta_pct: (det > 0.0).then(|| 100.0 * delta / det),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalRiskReport { rows })
}

/// One report over all dimensions and one per routing subset (absent when empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReports<T> {
    pub overall: Option<T>,
    pub normal: Option<T>,
    pub non_normal: Option<T>,
}

fn per_subset<T>(
    assessments: &[DimensionAssessment],
    f: impl Fn(&[DimensionAssessment]) -> Result<T>,
) -> Result<SubsetReports<T>> {
    let pick = |m: Method| -> Vec<DimensionAssessment> {
        assessments
            .iter()
            .filter(|a| a.method == m)
            .cloned()
            .collect()
    };
    let run = |set: &[DimensionAssessment]| -> Result<Option<T>> {
        if set.is_empty() {
            Ok(None)
        } else {
            f(set).map(Some)
        }
    };
    Ok(SubsetReports {
        overall: run(assessments)?,
        normal: run(&pick(Method::Analytic))?,
        non_normal: run(&pick(Method::Bootstrap))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub run_config: RunManifest,
    pub assessments: Vec<DimensionAssessment>,
    pub reclassification: SubsetReports<ReclassificationReport>,
    pub empirical_risk: SubsetReports<EmpiricalRiskReport>,
    pub exceptions: Vec<ExceptionEntry>,
}

/// Assess, then reduce into reclassification and empirical-risk reports.
pub fn run_batch(records: &[DimensionRecord], cfg: &AssessConfig) -> Result<BatchReport> {
    let (assessments, exceptions) = assess_all(records, cfg)?;
    let config = serde_json::json!({
        "c0": cfg.c0,
        "lambdas": cfg.lambdas,
        "b_boot": cfg.bootstrap.b_boot(),
        "normality_test": "anderson_darling",
        "normality_level": cfg.normality_level,
        "dimensions": records.len(),
    });
    Ok(BatchReport {
        run_config: RunManifest::new("batch", cfg.bootstrap.seed, config),
        reclassification: per_subset(&assessments, |s| reclassification(s, &cfg.lambdas))?,
        empirical_risk: per_subset(&assessments, |s| empirical_risk(s, &cfg.lambdas))?,
        assessments,
        exceptions,
    })
}

/// Flat CSV: one row per dimension, one `accept_l<λ>` column per `λ`.
pub fn write_assessments_csv<W: Write>(
    writer: W,
    assessments: &[DimensionAssessment],
    lambdas: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<String> = [
        "dimension_id",
        "n",
        "cpk_hat",
        "se",
        "p_fail",
        "method",
        "normal",
        "baseline_accept",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(lambdas.iter().map(|l| format!("accept_l{l}")));
    w.write_record(&header).map_err(io)?;
    for a in assessments {
        let mut row = vec![
            a.id.clone(),
            a.n.to_string(),
            a.cpk_hat.to_string(),
            a.se.to_string(),
            a.p_fail.to_string(),
            match a.method {
                Method::Analytic => "analytic".into(),
                Method::Bootstrap => "bootstrap".into(),
            },
            a.normal.to_string(),
            a.baseline_accept.to_string(),
        ];
        for &l in lambdas {
            row.push(decision_at(a, l)?.to_string());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
