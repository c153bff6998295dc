use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capability::SpecLimits;
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["dimension_id", "lsl", "usl", "value"];

/// Measurements of one product dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub id: String,
    pub limits: SpecLimits,
    pub measurements: Vec<f64>,
}

impl DimensionRecord {
    pub fn n(&self) -> usize {
        self.measurements.len()
    }
}

fn parse_field(field: &str, name: &str, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("{name} is not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{name} is not finite: {field:?}"),
        });
    }
    Ok(v)
}

/// Long-form CSV (`dimension_id,lsl,usl,value`) grouped into records in
/// first-appearance order. An empty input yields an empty list.
pub fn ingest<R: Read>(reader: R) -> Result<Vec<DimensionRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records: Vec<DimensionRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut saw_header = false;

    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if !saw_header {
            let got: Vec<&str> = row.iter().map(str::trim).collect();
            if got != HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "expected header {}, got {}",
                        HEADER.join(","),
                        got.join(",")
                    ),
                });
            }
            saw_header = true;
            continue;
        }
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if row.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let id = row[0].trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty dimension_id".into(),
            });
        }
        let lsl = parse_field(&row[1], "lsl", line)?;
        let usl = parse_field(&row[2], "usl", line)?;
        let value = parse_field(&row[3], "value", line)?;
        let limits = SpecLimits::new(lsl, usl).map_err(|e| match e {
            Error::Consistency(m) => {
                Error::Consistency(format!("line {line}, dimension {id}: {m}"))
            }
            other => other,
        })?;

        match index.get(id) {
            Some(&i) => {
                let rec = &mut records[i];
                if rec.limits != limits {
                    return Err(Error::Consistency(format!(
                        "line {line}: dimension {id} has limits ({lsl}, {usl}) but earlier rows use ({}, {})",
                        rec.limits.lsl(),
                        rec.limits.usl()
                    )));
                }
                rec.measurements.push(value);
            }
            None => {
                index.insert(id.to_string(), records.len());
                records.push(DimensionRecord {
                    id: id.to_string(),
                    limits,
                    measurements: vec![value],
                });
            }
        }
    }

    if let Some(short) = records.iter().find(|r| r.n() < 2) {
        return Err(Error::insufficient(
            format!("dimension {}", short.id),
            2,
            short.n(),
        ));
    }
    Ok(records)
}

pub fn ingest_path(path: impl AsRef<Path>) -> Result<Vec<DimensionRecord>> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest(std::io::BufReader::new(file))
}

/// Inverse of [`ingest`]; values use the shortest round-trip representation.
pub fn write_dataset_csv<W: Write>(writer: W, records: &[DimensionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for rec in records {
        let lsl = rec.limits.lsl().to_string();
        let usl = rec.limits.usl().to_string();
        for v in &rec.measurements {
            w.write_record([rec.id.as_str(), &lsl, &usl, &v.to_string()])
                .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
