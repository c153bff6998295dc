//! Flat CSV rows and the JSON run manifest.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::CellResult;
use crate::error::{Error, Result};

/// `cpk_true,n,rule,k,lambda,p_acc,p_fa,p_fr,el,mc_se`; absent rates are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCsvRow {
    pub cpk_true: f64,
    pub n: usize,
    pub rule: String,
    pub k: f64,
    pub lambda: f64,
    pub p_acc: f64,
    pub p_fa: Option<f64>,
    pub p_fr: Option<f64>,
    pub el: f64,
    pub mc_se: f64,
}

impl From<&CellResult> for CellCsvRow {
    fn from(c: &CellResult) -> Self {
        Self {
            cpk_true: c.cpk_true,
            n: c.n,
            rule: c.rule.label(),
            k: c.k,
            lambda: c.lambda,
            p_acc: c.p_acc,
            p_fa: c.p_fa,
            p_fr: c.p_fr,
            el: c.el,
            mc_se: c.mc_se,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Serialize any row type with a header line.
pub fn write_rows_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cells_csv<W: Write>(writer: W, cells: &[CellResult]) -> Result<()> {
    let rows: Vec<CellCsvRow> = cells.iter().map(CellCsvRow::from).collect();
    write_rows_csv(writer, &rows)
}

/// Everything needed to rerun a simulation or batch job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch; the only field that differs between reruns.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "capgate".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}
