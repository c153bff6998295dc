//! Nonparametric bootstrap of the plug-in capability estimator.
//!
//! Each resample draws `n` values with replacement from the original sample
//! and recomputes `Ĉpk`. Resample `b` uses its own stream derived from
//! `(seed, b)`, so output is identical under any thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::{cpk_formula, estimate_cpk, summarize, SpecLimits};
use crate::error::{Error, Result};
use crate::rng;
use crate::rules::Decision;

pub const MIN_BOOTSTRAP_SAMPLE: usize = 5;
pub const MIN_RESAMPLES: usize = 100;
pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    b_boot: usize,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(b_boot: usize, seed: u64) -> Result<Self> {
        if b_boot < MIN_RESAMPLES {
            return Err(Error::domain(format!(
                "bootstrap needs at least {MIN_RESAMPLES} resamples, got {b_boot}"
            )));
        }
        Ok(Self { b_boot, seed })
    }

    pub fn b_boot(&self) -> usize {
        self.b_boot
    }

    /// Same resample count, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b_boot: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub cpk_hat: f64,
    pub p_fail: f64,
    pub se_boot: f64,
    pub n_degenerate: usize,
}

/// Replicate values sorted ascending, plus the original estimate.
struct Replicates {
    cpk_hat: f64,
    sorted: Vec<f64>,
    n_degenerate: usize,
}

fn validate_sample(sample: &[f64]) -> Result<()> {
    if sample.len() < MIN_BOOTSTRAP_SAMPLE {
        return Err(Error::insufficient(
            "bootstrap",
            MIN_BOOTSTRAP_SAMPLE,
            sample.len(),
        ));
    }
    Ok(())
}

/// One resample's capability. A resample with zero spread is scored by its
/// mean: +∞ inside the limits, −∞ outside.
fn replicate(sample: &[f64], limits: &SpecLimits, seed: u64, b: u64) -> (f64, bool) {
    let mut rng = rng::stream(seed, b);
    let n = sample.len();
    let first = sample[rng.random_range(0..n)];
    let mut sum = first;
    let mut all_same = true;
    // Welford keeps the variance stable for tightly clustered values.
    let mut mean = first;
    let mut m2 = 0.0;
    for i in 1..n {
        let x = sample[rng.random_range(0..n)];
        all_same &= x == first;
        sum += x;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if all_same {
        let centre = sum / n as f64;
        let v = if limits.contains(centre) {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return (v, true);
    }
    let sd = (m2 / (n - 1) as f64).sqrt();
    (cpk_formula(mean, sd, limits), false)
}

fn replicates(sample: &[f64], limits: &SpecLimits, cfg: &BootstrapConfig) -> Result<Replicates> {
    validate_sample(sample)?;
    let summary = summarize(sample)?;
    let cpk_hat = estimate_cpk(&summary, limits)
        .map_err(|_| Error::DegenerateSample("constant sample cannot be bootstrapped".into()))?;
    let draws: Vec<(f64, bool)> = (0..cfg.b_boot as u64)
        .into_par_iter()
        .map(|b| replicate(sample, limits, cfg.seed, b))
        .collect();
    let n_degenerate = draws.iter().filter(|d| d.1).count();
    let mut sorted: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(Replicates {
        cpk_hat,
        sorted,
        n_degenerate,
    })
}

impl Replicates {
    fn result(&self, c0: f64) -> BootstrapResult {
        let below = self.sorted.partition_point(|&v| v < c0);
        let finite: Vec<f64> = self
            .sorted
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        let se_boot = if finite.len() >= 2 {
            let m = finite.iter().sum::<f64>() / finite.len() as f64;
            let ss: f64 = finite.iter().map(|v| (v - m) * (v - m)).sum();
            (ss / (finite.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        BootstrapResult {
            cpk_hat: self.cpk_hat,
            p_fail: below as f64 / self.sorted.len() as f64,
            se_boot,
            n_degenerate: self.n_degenerate,
        }
    }
}

/// Fraction of bootstrap replicates with `Ĉpk* < c0`.
pub fn bootstrap_p_fail(
    sample: &[f64],
    limits: &SpecLimits,
    c0: f64,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    Ok(replicates(sample, limits, cfg)?.result(c0))
}

/// Accept iff the bootstrap failure probability is at most `alpha`.
///
/// The reported threshold is the one this is equivalent to: with
/// `q` the `⌊α·B⌋`-th smallest replicate (0-based), `p_fail ≤ α ⇔ q ≥ c0`,
/// i.e. `Ĉpk ≥ c0 + (Ĉpk − q)`. `margin = Ĉpk − q`, and `k = margin / se_boot`.
pub fn bootstrap_decide(
    sample: &[f64],
    limits: &SpecLimits,
    c0: f64,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<Decision> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let reps = replicates(sample, limits, cfg)?;
    let res = reps.result(c0);
    let b = reps.sorted.len();
    let idx = ((alpha * b as f64).floor() as usize).min(b - 1);
    let q = reps.sorted[idx];
    let margin = reps.cpk_hat - q;
    let k = if res.se_boot > 0.0 && margin.is_finite() {
        margin / res.se_boot
    } else {
        0.0
    };
    Ok(Decision {
        accept: res.p_fail <= alpha,
        k,
        margin,
        effective_threshold: c0 + margin,
        p_fail: Some(res.p_fail),
    })
}
