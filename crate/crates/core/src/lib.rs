//! Risk-calibrated process capability approval.
//!
//! The crate is organised bottom-up:
//!
//! - [`capability`]: sample summaries, the plug-in `Ĉpk`, its standard error.
//! - [`normal`]: `Φ` and `Φ⁻¹`.
//! - [`rules`]: the guard-band family `Ĉpk ≥ C₀ + k·SE` and the λ ↔ α ↔ k maps.
//! - [`resampling`]: bootstrap failure probability.
//! - [`sim`]: seeded, parallel Monte Carlo operating characteristics.
//! - [`batch`]: multi-dimension assessment, reclassification and risk reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod capability;
pub mod error;
pub mod normal;
pub mod resampling;
pub mod rng;
pub mod rules;
pub mod sim;

pub use batch::{
    assess_dimension, ingest, run_batch, synth_dataset, AssessConfig, BatchReport,
    DimensionAssessment, DimensionRecord, SynthSpec,
};
pub use capability::{
    estimate_cpk, failure_probability_analytic, se_plugin, sigma_c, sigma_for_target, summarize,
    true_cpk, CapabilityEstimate, ProcessParams, SampleSummary, SpecLimits,
};
pub use error::{Error, Result};
pub use normal::{normal_cdf, normal_quantile};
pub use resampling::{bootstrap_decide, bootstrap_p_fail, BootstrapConfig, BootstrapResult};
pub use rules::{
    alpha_from_lambda, boundary_acceptance, decide, expected_loss_point, k_from_alpha, k_of_rule,
    lcb, local_acceptance, Decision, LossSpec, Rule,
};
