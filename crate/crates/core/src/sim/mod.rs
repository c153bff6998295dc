//! Monte Carlo operating characteristics of the approval rules.
//!
//! A cell is one `(Cpk_true, n)` configuration. All rules evaluated in a cell
//! see the same `B` simulated samples (common random numbers), so accept sets
//! of rules ordered by `k` are nested exactly. Replicate `b` of a cell draws
//! from a stream derived from `(base_seed, Cpk_true, n, b)`; results are
//! identical for any degree of parallelism.

mod lognormal;
mod output;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::{cpk_formula, sigma_c, SpecLimits};
use crate::error::{Error, Result};
use crate::normal::normal_cdf;
use crate::rng::{self, derive_seed};
use crate::rules::{
    alpha_from_lambda, expected_loss_point, k_from_alpha, k_of_rule, LossSpec, Rule,
};

pub use lognormal::{
    calibrate_lognormal, nonnormal_comparison, LognormalDGM, NonNormalMethod, NonNormalRow,
    CNPK_UPPER_PROB,
};
pub use output::{write_cells_csv, write_rows_csv, CellCsvRow, RunManifest};

pub const DEFAULT_C0: f64 = 1.33;
pub const DEFAULT_HALF_WIDTH: f64 = 4.0;
pub const MIN_REPLICATIONS: usize = 100;

/// How a true capability exactly at `C₀` is charged in the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConvention {
    /// `Cpk_true = C₀` counts as capable; rejection there is a false reject.
    Capable,
    /// `Cpk_true = C₀` counts as incapable; acceptance there is a false accept.
    Incapable,
}

/// Everything about a run except the grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimContext {
    pub c0: f64,
    pub half_width: f64,
    /// Process mean as a fraction of the half-width, in `[0, 1)`. Zero is the
    /// centered process; a positive offset makes the upper limit the only
    /// active constraint.
    pub mean_offset: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub boundary: BoundaryConvention,
}

impl Default for SimContext {
    fn default() -> Self {
        Self {
            c0: DEFAULT_C0,
            half_width: DEFAULT_HALF_WIDTH,
            mean_offset: 0.0,
            replications: 10_000,
            base_seed: 0,
            boundary: BoundaryConvention::Incapable,
        }
    }
}

impl SimContext {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::domain(format!("c0 must be > 0, got {}", self.c0)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::domain(format!(
                "half width T must be > 0, got {}",
                self.half_width
            )));
        }
        if !(0.0..1.0).contains(&self.mean_offset) {
            return Err(Error::domain(format!(
                "mean offset must lie in [0, 1), got {}",
                self.mean_offset
            )));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::domain(format!(
                "need at least {MIN_REPLICATIONS} replications, got {}",
                self.replications
            )));
        }
        Ok(())
    }

    pub fn limits(&self) -> SpecLimits {
        SpecLimits::symmetric(self.half_width).expect("validated half width")
    }

    /// `(μ, σ)` of the normal process with capability `cpk_true`.
    pub fn process(&self, cpk_true: f64) -> Result<(f64, f64)> {
        if !(cpk_true > 0.0 && cpk_true.is_finite()) {
            return Err(Error::domain(format!(
                "simulated capability must be > 0, got {cpk_true}"
            )));
        }
        let mu = self.mean_offset * self.half_width;
        Ok((mu, (self.half_width - mu) / (3.0 * cpk_true)))
    }

    pub fn state_below(&self, cpk_true: f64) -> bool {
        match self.boundary {
            BoundaryConvention::Capable => cpk_true < self.c0,
            BoundaryConvention::Incapable => cpk_true <= self.c0,
        }
    }

    fn cell_seed(&self, cpk_true: f64, n: usize) -> u64 {
        derive_seed(derive_seed(self.base_seed, cpk_true.to_bits()), n as u64)
    }
}

/// Grid axes plus run context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub cpk_true_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    pub context: SimContext,
}

impl SimGrid {
    pub fn validate(&self) -> Result<()> {
        self.context.validate()?;
        if self.cpk_true_values.is_empty()
            || self.n_values.is_empty()
            || self.lambda_values.is_empty()
        {
            return Err(Error::domain("grid axes must be non-empty"));
        }
        if self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::domain("sample sizes must be >= 2"));
        }
        for &c in &self.cpk_true_values {
            self.context.process(c)?;
        }
        for &l in &self.lambda_values {
            Rule::cost_sensitive(l)?;
        }
        Ok(())
    }

    /// Capability 0.80, 0.82, …, 2.00; n ∈ {20, 32, 50, 80, 120, 200};
    /// λ ∈ {1, 2, 5, 10, 20, 50, 100}; B = 10 000.
    pub fn standard(base_seed: u64) -> Self {
        Self {
            cpk_true_values: cpk_axis(0.80, 2.00, 0.02),
            n_values: vec![20, 32, 50, 80, 120, 200],
            lambda_values: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            context: SimContext {
                base_seed,
                ..SimContext::default()
            },
        }
    }
}

/// Evenly spaced capability values, built from integer steps so that grid
/// points are reproducible bit for bit.
pub fn cpk_axis(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| ((from + i as f64 * step) * 1e6).round() / 1e6)
        .collect()
}

/// Loss ratio implied by a rule (`(1 − α)/α`); deterministic maps to 1.
pub fn implied_lambda(rule: &Rule) -> Result<f64> {
    match *rule {
        Rule::CostSensitive { lambda } => Ok(lambda),
        _ => {
            let alpha = rule.alpha()?;
            Ok((1.0 - alpha) / alpha)
        }
    }
}

/// Operating characteristics of one rule in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cpk_true: f64,
    pub n: usize,
    pub rule: Rule,
    pub k: f64,
    pub lambda: f64,
    pub p_acc: f64,
    pub p_fa: Option<f64>,
    pub p_fr: Option<f64>,
    pub el: f64,
    pub mc_se: f64,
}

/// Binomial Monte Carlo standard error.
pub fn mc_se(p: f64, replications: usize) -> f64 {
    (p * (1.0 - p) / replications as f64).sqrt()
}

/// Draw one normal sample and return `(Ĉpk, SE)`; Welford keeps it allocation-free.
fn normal_replicate(
    seed: u64,
    b: u64,
    n: usize,
    mu: f64,
    sigma: f64,
    limits: &SpecLimits,
) -> Result<(f64, f64)> {
    let mut r = rng::stream(seed, b);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let z: f64 = StandardNormal.sample(&mut r);
        let x = mu + sigma * z;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let sd = (m2 / (n - 1) as f64).sqrt();
    let cpk = cpk_formula(mean, sd, limits);
    if !(sd > 0.0) || !cpk.is_finite() {
        return Err(Error::domain(format!(
            "arithmetic failure in replicate {b}: mean={mean}, sd={sd}"
        )));
    }
    Ok((cpk, sigma_c(cpk) / (n as f64).sqrt()))
}

/// Acceptance counts for each calibration constant in `ks`, on shared samples.
pub fn accept_counts(ctx: &SimContext, cpk_true: f64, n: usize, ks: &[f64]) -> Result<Vec<u64>> {
    ctx.validate()?;
    if n < 2 {
        return Err(Error::insufficient("simulation cell", 2, n));
    }
    let (mu, sigma) = ctx.process(cpk_true)?;
    let limits = ctx.limits();
    let seed = ctx.cell_seed(cpk_true, n);
    let c0 = ctx.c0;
    (0..ctx.replications as u64)
        .into_par_iter()
        .map(|b| normal_replicate(seed, b, n, mu, sigma, &limits))
        .try_fold(
            || vec![0u64; ks.len()],
            |mut acc, rep| {
                let (cpk, se) = rep?;
                for (slot, &k) in acc.iter_mut().zip(ks) {
                    if cpk >= c0 + k * se {
                        *slot += 1;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; ks.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

fn cell_from_count(
    ctx: &SimContext,
    cpk_true: f64,
    n: usize,
    rule: Rule,
    k: f64,
    lambda: f64,
    accepted: u64,
) -> Result<CellResult> {
    let p_acc = accepted as f64 / ctx.replications as f64;
    let below = ctx.state_below(cpk_true);
    let (p_fa, p_fr) = if below {
        (Some(p_acc), None)
    } else {
        (None, Some(1.0 - p_acc))
    };
    let loss = LossSpec::from_lambda(lambda)?;
    Ok(CellResult {
        cpk_true,
        n,
        rule,
        k,
        lambda,
        p_acc,
        p_fa,
        p_fr,
        el: expected_loss_point(p_fa.unwrap_or(0.0), p_fr.unwrap_or(0.0), &loss, below),
        mc_se: mc_se(p_acc, ctx.replications),
    })
}

/// Several rules in one cell, each paired with the loss ratio used for its
/// expected loss.
pub fn run_cells(
    ctx: &SimContext,
    cpk_true: f64,
    n: usize,
    rules: &[(Rule, f64)],
) -> Result<Vec<CellResult>> {
    let ks = rules
        .iter()
        .map(|(r, _)| k_of_rule(r))
        .collect::<Result<Vec<_>>>()?;
    let counts = accept_counts(ctx, cpk_true, n, &ks)?;
    rules
        .iter()
        .zip(ks)
        .zip(counts)
        .map(|(((rule, lambda), k), count)| {
            cell_from_count(ctx, cpk_true, n, *rule, k, *lambda, count)
        })
        .collect()
}

/// One rule in one cell; the loss uses `c_fa = loss_lambda`, `c_fr = 1`.
pub fn run_cell(
    ctx: &SimContext,
    cpk_true: f64,
    n: usize,
    rule: Rule,
    loss_lambda: f64,
) -> Result<CellResult> {
    Ok(run_cells(ctx, cpk_true, n, &[(rule, loss_lambda)])?.remove(0))
}

/// The capability at which acceptance crosses 0.5 for one `(n, rule)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub n: usize,
    pub rule: Rule,
    pub cpk_at_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub cells: Vec<CellResult>,
    pub contours: Vec<Contour>,
}

/// Linear interpolation of the first upward crossing of `level`.
pub fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        if y[0] < level && y[1] >= level {
            Some(x[0] + (level - y[0]) * (x[1] - x[0]) / (y[1] - y[0]))
        } else {
            None
        }
    })
}

/// Acceptance probability for every `(Cpk_true, n, rule)` and the 0.5 contours.
pub fn acceptance_surface(grid: &SimGrid, rules: &[Rule]) -> Result<Surface> {
    grid.validate()?;
    let ctx = &grid.context;
    let paired = rules
        .iter()
        .map(|r| Ok((*r, implied_lambda(r)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut cpks = grid.cpk_true_values.clone();
    cpks.sort_by(f64::total_cmp);

    let mut cells = Vec::with_capacity(cpks.len() * grid.n_values.len() * rules.len());
    let mut contours = Vec::new();
    for &n in &grid.n_values {
        let per_cpk = cpks
            .iter()
            .map(|&c| run_cells(ctx, c, n, &paired))
            .collect::<Result<Vec<_>>>()?;
        for (j, rule) in rules.iter().enumerate() {
            let ys: Vec<f64> = per_cpk.iter().map(|row| row[j].p_acc).collect();
            contours.push(Contour {
                n,
                rule: *rule,
                cpk_at_half: crossing(&cpks, &ys, 0.5),
            });
        }
        cells.extend(per_cpk.into_iter().flatten());
    }
    Ok(Surface { cells, contours })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub lambda: f64,
    pub cpk_true: f64,
    pub k: f64,
    pub p_acc: f64,
    pub p_fa: Option<f64>,
    pub p_fr: Option<f64>,
    pub mc_se: f64,
}

/// False-accept (below `C₀`) or false-reject (at/above) rates of the
/// cost-sensitive rule across `λ`, with samples shared across `λ`.
pub fn error_tradeoff(
    ctx: &SimContext,
    lambdas: &[f64],
    cpk_levels: &[f64],
    n: usize,
) -> Result<Vec<TradeoffRow>> {
    let rules = lambdas
        .iter()
        .map(|&l| Ok((Rule::cost_sensitive(l)?, l)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(lambdas.len() * cpk_levels.len());
    for &c in cpk_levels {
        for cell in run_cells(ctx, c, n, &rules)? {
            rows.push(TradeoffRow {
                lambda: cell.lambda,
                cpk_true: c,
                k: cell.k,
                p_acc: cell.p_acc,
                p_fa: cell.p_fa,
                p_fr: cell.p_fr,
                mc_se: cell.mc_se,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossCurveRow {
    pub cpk_true: f64,
    pub el_det: f64,
    pub el_cal: f64,
    pub p_acc_det: f64,
    pub p_acc_cal: f64,
}

/// Expected loss of the deterministic rule and of the probability rule at
/// `alpha`, both charged with `c_fa = lambda_for_cost`, `c_fr = 1`.
pub fn expected_loss_curve(
    ctx: &SimContext,
    cpk_values: &[f64],
    n: usize,
    alpha: f64,
    lambda_for_cost: f64,
) -> Result<Vec<LossCurveRow>> {
    let rules = [
        (Rule::Deterministic, lambda_for_cost),
        (Rule::failure_probability(alpha)?, lambda_for_cost),
    ];
    cpk_values
        .iter()
        .map(|&c| {
            let cells = run_cells(ctx, c, n, &rules)?;
            Ok(LossCurveRow {
                cpk_true: c,
                el_det: cells[0].el,
                el_cal: cells[1].el,
                p_acc_det: cells[0].p_acc,
                p_acc_cal: cells[1].p_acc,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub lambda: f64,
    pub alpha: f64,
    pub k: f64,
}

/// `(λ, α, k)` for the given loss ratios.
pub fn lambda_alpha_k(lambdas: &[f64]) -> Result<Vec<Table1Row>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let alpha = alpha_from_lambda(lambda)?;
            Ok(Table1Row {
                lambda,
                alpha,
                k: k_from_alpha(alpha)?,
            })
        })
        .collect()
}

pub const TABLE1_LAMBDAS: [f64; 5] = [1.0, 4.0, 9.0, 19.0, 99.0];
pub const TABLE2_LAMBDAS: [f64; 6] = [2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub lambda: f64,
    pub el_det: f64,
    pub el_cal: f64,
    pub reduction_pct: f64,
    pub p_acc_det: f64,
    pub p_acc_cal: f64,
}

/// Expected loss of the deterministic and the matching cost-sensitive rule
/// at one capability level, for each `λ`, on shared samples.
pub fn loss_by_lambda(
    ctx: &SimContext,
    cpk_true: f64,
    n: usize,
    lambdas: &[f64],
) -> Result<Vec<Table2Row>> {
    let mut rules = vec![(Rule::Deterministic, 1.0)];
    for &l in lambdas {
        rules.push((Rule::cost_sensitive(l)?, l));
    }
    let cells = run_cells(ctx, cpk_true, n, &rules)?;
    let det = cells[0];
    lambdas
        .iter()
        .zip(&cells[1..])
        .map(|(&lambda, cal)| {
            let loss = LossSpec::from_lambda(lambda)?;
            let below = ctx.state_below(cpk_true);
            let el_det = expected_loss_point(
                det.p_fa.unwrap_or(0.0),
                det.p_fr.unwrap_or(0.0),
                &loss,
                below,
            );
            let reduction_pct = if el_det > 0.0 {
                100.0 * (el_det - cal.el) / el_det
            } else {
                0.0
            };
            Ok(Table2Row {
                lambda,
                el_det,
                el_cal: cal.el,
                reduction_pct,
                p_acc_det: det.p_acc,
                p_acc_cal: cal.p_acc,
            })
        })
        .collect()
}

/// Context for the expected-loss table: centered process, B = 12 000, the
/// boundary state charged as incapable.
pub fn table2_context(base_seed: u64) -> SimContext {
    SimContext {
        replications: 12_000,
        base_seed,
        boundary: BoundaryConvention::Incapable,
        ..SimContext::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub k: f64,
    pub p_acc: f64,
    pub target: f64,
    pub mc_se: f64,
}

/// Acceptance at `Cpk_true = C₀` for each `k`, against the asymptotic `Φ(−k)`.
pub fn boundary_check(ctx: &SimContext, n: usize, ks: &[f64]) -> Result<Vec<BoundaryRow>> {
    let counts = accept_counts(ctx, ctx.c0, n, ks)?;
    Ok(ks
        .iter()
        .zip(counts)
        .map(|(&k, c)| {
            let p_acc = c as f64 / ctx.replications as f64;
            BoundaryRow {
                k,
                p_acc,
                target: normal_cdf(-k),
                mc_se: mc_se(p_acc, ctx.replications),
            }
        })
        .collect())
}

/// Context for the boundary calibration check: n = 500 with B = 20 000, and a
/// process shifted to half the half-width so a single limit is active.
pub fn boundary_context(base_seed: u64) -> SimContext {
    SimContext {
        replications: 20_000,
        base_seed,
        mean_offset: 0.5,
        ..SimContext::default()
    }
}

/// Empirical standard deviation of `Ĉpk` over the context's replications.
pub fn cpk_spread(ctx: &SimContext, cpk_true: f64, n: usize) -> Result<f64> {
    ctx.validate()?;
    let (mu, sigma) = ctx.process(cpk_true)?;
    let limits = ctx.limits();
    let seed = ctx.cell_seed(cpk_true, n);
    let values = (0..ctx.replications as u64)
        .into_par_iter()
        .map(|b| normal_replicate(seed, b, n, mu, sigma, &limits).map(|r| r.0))
        .collect::<Result<Vec<f64>>>()?;
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}
