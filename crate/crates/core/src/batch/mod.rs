//! Multi-dimension approval: ingest, per-dimension assessment, reclassification
//! against the deterministic baseline, and aggregate empirical risk.

mod assess;
mod dataset;
mod normality;
mod report;
mod synth;

pub use assess::{
    assess_all, assess_dimension, AssessConfig, DimensionAssessment, ExceptionEntry,
    LambdaDecision, Method,
};
pub use dataset::{ingest, ingest_path, write_dataset_csv, DimensionRecord};
pub use normality::{anderson_darling, classify_normality, AndersonDarling, MIN_NORMALITY_N};
pub use report::{
    empirical_risk, empirical_risk_score, reclassification, run_batch, write_assessments_csv,
    BatchReport, EmpiricalRiskReport, ReclassificationReport, ReclassificationRow, RiskRow,
    SubsetReports,
};
pub use synth::{synth_dataset, SynthSpec};

pub const DEFAULT_LAMBDAS: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
