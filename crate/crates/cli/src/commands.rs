use std::path::PathBuf;

use capgate_core::batch::{
    ingest_path, run_batch, synth_dataset, write_assessments_csv, write_dataset_csv, AssessConfig,
    SynthSpec, MIN_NORMALITY_N,
};
use capgate_core::resampling::{bootstrap_decide, BootstrapConfig};
use capgate_core::rng::{derive_seed, hash_str};
use capgate_core::rules::{decide, k_of_rule, Rule};
use capgate_core::sim::{
    acceptance_surface, boundary_check, boundary_context, calibrate_lognormal, cpk_axis,
    error_tradeoff, expected_loss_curve, implied_lambda, lambda_alpha_k, loss_by_lambda,
    nonnormal_comparison, table2_context, BoundaryConvention, CellCsvRow, RunManifest, SimContext,
    SimGrid, TABLE1_LAMBDAS, TABLE2_LAMBDAS,
};
use capgate_core::{summarize, CapabilityEstimate, Error};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BatchArgs, Cli, DecideArgs, Format, Preset, SampleArgs, SimulateArgs, SynthArgs,
};
use crate::input::{read_samples, read_text};
use crate::output::{csv_bytes, emit, emit_csv, json_bytes};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Tagged<'a, T: Serialize> {
    manifest: &'a RunManifest,
    rows: &'a [T],
}

/// Rows as JSON (with manifest) or CSV (manifest as sidecar) to a single file.
fn write_table<T: Serialize>(
    cli: &Cli,
    manifest: &RunManifest,
    rows: &[T],
) -> Result<(), CliError> {
    match cli.format {
        Format::Json => emit(cli.out.as_deref(), &json_bytes(&Tagged { manifest, rows })?),
        Format::Csv => emit_csv(cli.out.as_deref(), &csv_bytes(rows)?, manifest),
    }
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    id: String,
    n: usize,
    mean: f64,
    sd: f64,
    cpk_hat: f64,
    se: f64,
}

pub fn estimate(cli: &Cli, args: &SampleArgs) -> Result<(), CliError> {
    let records = read_samples(args)?;
    let rows = records
        .iter()
        .map(|r| {
            let s = summarize(&r.measurements)?;
            let est = CapabilityEstimate::from_summary(&s, &r.limits)?;
            Ok(EstimateRow {
                id: r.id.clone(),
                n: s.n,
                mean: s.mean,
                sd: s.sd,
                cpk_hat: est.cpk_hat,
                se: est.se,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let manifest = RunManifest::new("estimate", cli.seed, json!({ "input": args.input }));
    write_table(cli, &manifest, &rows)
}

fn rule_of(args: &DecideArgs) -> Result<Rule, Error> {
    if let Some(g) = args.lcb {
        Rule::lcb(g)
    } else if let Some(a) = args.alpha {
        Rule::failure_probability(a)
    } else if let Some(l) = args.lambda {
        Rule::cost_sensitive(l)
    } else {
        Ok(Rule::Deterministic)
    }
}

#[derive(Debug, Serialize)]
struct DecideRow {
    id: String,
    n: usize,
    cpk_hat: f64,
    se: f64,
    rule: String,
    method: &'static str,
    lambda: f64,
    alpha: f64,
    k: f64,
    margin: f64,
    effective_threshold: f64,
    p_fail: Option<f64>,
    accept: bool,
}

pub fn decide_cmd(cli: &Cli, args: &DecideArgs) -> Result<(), CliError> {
    if !args.c0.is_finite() {
        return Err(CliError::Usage("--c0 must be finite".into()));
    }
    let rule = rule_of(args)?;
    let alpha = rule.alpha()?;
    let lambda = implied_lambda(&rule)?;
    let records = read_samples(&args.sample)?;
    let boot_cfg = BootstrapConfig::new(args.b_boot, cli.seed)?;
    let rows = records
        .iter()
        .map(|r| {
            let est = CapabilityEstimate::from_sample(&r.measurements, &r.limits)?;
            let (d, method) = if args.bootstrap {
                let cfg = boot_cfg.with_seed(derive_seed(cli.seed, hash_str(&r.id)));
                let d = bootstrap_decide(&r.measurements, &r.limits, args.c0, alpha, &cfg)?;
                (d, "bootstrap")
            } else {
                (decide(&rule, &est, args.c0)?, "analytic")
            };
            Ok(DecideRow {
                id: r.id.clone(),
                n: est.n,
                cpk_hat: est.cpk_hat,
                se: est.se,
                rule: rule.label(),
                method,
                lambda,
                alpha,
                k: if args.bootstrap {
                    d.k
                } else {
                    k_of_rule(&rule)?
                },
                margin: d.margin,
                effective_threshold: d.effective_threshold,
                p_fail: d.p_fail,
                accept: d.accept,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let manifest = RunManifest::new(
        "decide",
        cli.seed,
        json!({
            "input": args.sample.input,
            "c0": args.c0,
            "rule": rule,
            "lambda": lambda,
            "alpha": alpha,
            "bootstrap": args.bootstrap,
            "b_boot": args.b_boot,
        }),
    );
    write_table(cli, &manifest, &rows)
}

/// Simulation output: under `--out DIR`, `<name>.<ext>` plus `manifest.json`;
/// otherwise stdout.
fn write_sim<T: Serialize>(
    cli: &Cli,
    name: &str,
    manifest: &RunManifest,
    rows: &[T],
) -> Result<(), CliError> {
    match &cli.out {
        None => write_table(cli, manifest, rows),
        Some(dir) => {
            let file = |ext: &str| -> PathBuf { dir.join(format!("{name}.{ext}")) };
            match cli.format {
                Format::Json => emit(
                    Some(&file("json")),
                    &json_bytes(&Tagged { manifest, rows })?,
                )?,
                Format::Csv => emit(Some(&file("csv")), &csv_bytes(rows)?)?,
            }
            emit(Some(&dir.join("manifest.json")), &json_bytes(manifest)?)
        }
    }
}

fn custom_context(cli: &Cli, args: &SimulateArgs) -> SimContext {
    SimContext {
        c0: args.c0,
        mean_offset: args.mean_offset,
        replications: args.replications,
        base_seed: cli.seed,
        boundary: if args.boundary_capable {
            BoundaryConvention::Capable
        } else {
            BoundaryConvention::Incapable
        },
        ..SimContext::default()
    }
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let seed = cli.seed;
    match args.chosen_preset() {
        Some(Preset::Table1) => {
            let rows = lambda_alpha_k(&TABLE1_LAMBDAS)?;
            let m = RunManifest::new(
                "simulate table1",
                seed,
                json!({ "lambdas": TABLE1_LAMBDAS }),
            );
            write_sim(cli, "table1", &m, &rows)
        }
        Some(Preset::Table2) => {
            let ctx = table2_context(seed);
            let rows = loss_by_lambda(&ctx, ctx.c0, 32, &TABLE2_LAMBDAS)?;
            let m = RunManifest::new(
                "simulate table2",
                seed,
                json!({ "context": ctx, "cpk_true": ctx.c0, "n": 32, "lambdas": TABLE2_LAMBDAS }),
            );
            write_sim(cli, "table2", &m, &rows)
        }
        Some(Preset::Boundary) => {
            let ctx = boundary_context(seed);
            let ks = [0.0, 0.842, 1.645, 2.326];
            let rows = boundary_check(&ctx, 500, &ks)?;
            let m = RunManifest::new(
                "simulate boundary",
                seed,
                json!({ "context": ctx, "n": 500, "k": ks }),
            );
            write_sim(cli, "boundary", &m, &rows)
        }
        Some(Preset::Surface) => {
            let grid = SimGrid::standard(seed);
            run_surface(cli, &grid, "simulate surface")
        }
        Some(Preset::Tradeoff) => {
            let ctx = custom_context(cli, args);
            let levels = [1.0, 1.2, 1.33, 1.5, 1.8];
            let n = args.n[0];
            let rows = error_tradeoff(&ctx, &args.lambdas, &levels, n)?;
            let m = RunManifest::new(
                "simulate tradeoff",
                seed,
                json!({ "context": ctx, "n": n, "lambdas": args.lambdas, "cpk_true": levels }),
            );
            write_sim(cli, "tradeoff", &m, &rows)
        }
        Some(Preset::LossCurve) => {
            let ctx = custom_context(cli, args);
            let cpks = cpk_axis(args.cpk_from, args.cpk_to, args.cpk_step);
            let n = args.n[0];
            let rows = expected_loss_curve(&ctx, &cpks, n, 0.05, 19.0)?;
            let m = RunManifest::new(
                "simulate loss-curve",
                seed,
                json!({ "context": ctx, "n": n, "alpha": 0.05, "lambda": 19.0, "cpk_true": cpks }),
            );
            write_sim(cli, "loss_curve", &m, &rows)
        }
        Some(Preset::Nonnormal) => {
            let ctx = SimContext {
                replications: 3000,
                base_seed: seed,
                ..SimContext::default()
            };
            let dgm = calibrate_lognormal(1.2, 0.5, ctx.limits())?;
            let cfg = BootstrapConfig::new(1000, derive_seed(seed, 6))?;
            let rows = nonnormal_comparison(&ctx, &dgm, 32, 10.0, &cfg)?;
            let m = RunManifest::new(
                "simulate nonnormal",
                seed,
                json!({
                    "context": ctx,
                    "n": 32,
                    "lambda": 10.0,
                    "b_boot": 1000,
                    "target_cnpk": 1.2,
                    "log_sd": 0.5,
                    "model": dgm,
                }),
            );
            write_sim(cli, "nonnormal", &m, &rows)
        }
        None => {
            let grid = match &args.grid {
                Some(path) => {
                    let mut g: SimGrid =
                        serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse {
                            line: e.line() as u64,
                            message: e.to_string(),
                        })?;
                    g.context.base_seed = seed;
                    g
                }
                None => SimGrid {
                    cpk_true_values: cpk_axis(args.cpk_from, args.cpk_to, args.cpk_step),
                    n_values: args.n.clone(),
                    lambda_values: args.lambdas.clone(),
                    context: custom_context(cli, args),
                },
            };
            run_surface(cli, &grid, "simulate grid")
        }
    }
}

fn run_surface(cli: &Cli, grid: &SimGrid, command: &str) -> Result<(), CliError> {
    let mut rules = vec![Rule::Deterministic];
    for &l in &grid.lambda_values {
        rules.push(Rule::cost_sensitive(l)?);
    }
    let surface = acceptance_surface(grid, &rules)?;
    let manifest = RunManifest::new(
        command,
        cli.seed,
        serde_json::to_value(grid).unwrap_or_default(),
    );
    let cells: Vec<CellCsvRow> = surface.cells.iter().map(CellCsvRow::from).collect();
    let contours: Vec<_> = surface
        .contours
        .iter()
        .map(|c| json!({ "n": c.n, "rule": c.rule.label(), "cpk_at_half": c.cpk_at_half }))
        .collect();
    match (&cli.out, cli.format) {
        (_, Format::Json) => {
            let doc = json!({ "manifest": manifest, "cells": cells, "contours": contours });
            match &cli.out {
                Some(dir) => {
                    emit(Some(&dir.join("surface.json")), &json_bytes(&doc)?)?;
                    emit(Some(&dir.join("manifest.json")), &json_bytes(&manifest)?)
                }
                None => emit(None, &json_bytes(&doc)?),
            }
        }
        (None, Format::Csv) => emit(None, &csv_bytes(&cells)?),
        (Some(dir), Format::Csv) => {
            #[derive(Serialize)]
            struct ContourRow {
                n: usize,
                rule: String,
                cpk_at_half: Option<f64>,
            }
            let rows: Vec<ContourRow> = surface
                .contours
                .iter()
                .map(|c| ContourRow {
                    n: c.n,
                    rule: c.rule.label(),
                    cpk_at_half: c.cpk_at_half,
                })
                .collect();
            emit(Some(&dir.join("surface.csv")), &csv_bytes(&cells)?)?;
            emit(Some(&dir.join("contours.csv")), &csv_bytes(&rows)?)?;
            emit(Some(&dir.join("manifest.json")), &json_bytes(&manifest)?)
        }
    }
}

pub fn batch(cli: &Cli, args: &BatchArgs) -> Result<(), CliError> {
    let records = ingest_path(&args.input)?;
    if records.is_empty() {
        eprintln!("warning: {} contains no dimensions", args.input.display());
    }
    let cfg = AssessConfig::new(
        args.c0,
        args.lambdas.clone(),
        BootstrapConfig::new(args.b_boot, cli.seed)?,
        args.level,
    )?;
    let report = run_batch(&records, &cfg)?;
    for a in report.assessments.iter().filter(|a| a.n < MIN_NORMALITY_N) {
        eprintln!(
            "warning: {} has n = {} < {MIN_NORMALITY_N}; normality not tested, bootstrap used",
            a.id, a.n
        );
    }
    match cli.format {
        Format::Json => emit(cli.out.as_deref(), &json_bytes(&report)?),
        Format::Csv => {
            let mut buf = Vec::new();
            write_assessments_csv(&mut buf, &report.assessments, &cfg.lambdas)?;
            emit_csv(cli.out.as_deref(), &buf, &report.run_config)
        }
    }
}

pub fn synth(cli: &Cli, args: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        dimensions: args.dimensions,
        n_per_dimension: args.n,
        c0: args.c0,
        below_fraction: args.below_fraction,
        near_fraction: args.near_fraction,
        near_halfwidth: args.near_halfwidth,
        non_normal_fraction: args.non_normal_fraction,
        seed: cli.seed,
        ..SynthSpec::default()
    };
    let records = synth_dataset(&spec)?;
    let manifest = RunManifest::new(
        "synth",
        cli.seed,
        serde_json::to_value(&spec).unwrap_or_default(),
    );
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_dataset_csv(&mut buf, &records)?;
            emit_csv(cli.out.as_deref(), &buf, &manifest)
        }
        Format::Json => emit(
            cli.out.as_deref(),
            &json_bytes(&json!({ "manifest": manifest, "dimensions": records }))?,
        ),
    }
}
