use std::fs;
use std::path::Path;

use capgate_core::batch::{ingest, DimensionRecord};
use capgate_core::{Error, SpecLimits};

use crate::args::SampleArgs;
use crate::CliError;

const LONG_HEADER: &str = "dimension_id,lsl,usl,value";

fn limits_from_flags(args: &SampleArgs) -> Result<Option<SpecLimits>, CliError> {
    match (args.lsl, args.usl) {
        (Some(l), Some(u)) => Ok(Some(SpecLimits::new(l, u)?)),
        (None, None) => Ok(None),
        _ => Err(CliError::Usage(
            "--lsl and --usl must be given together".into(),
        )),
    }
}

/// One value per line; a non-numeric first line is taken as a header.
fn parse_column(text: &str) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("not a finite number: {line:?}"),
                })
            }
        }
    }
    Ok(out)
}

fn single(
    id: &str,
    limits: Option<SpecLimits>,
    values: Vec<f64>,
) -> Result<Vec<DimensionRecord>, CliError> {
    let limits =
        limits.ok_or_else(|| CliError::Usage("plain measurements need --lsl and --usl".into()))?;
    Ok(vec![DimensionRecord {
        id: id.into(),
        limits,
        measurements: values,
    }])
}

/// Records from `--values`, a plain column file, or a long-form file. When a
/// long-form file is combined with `--lsl/--usl`, the limits must match.
pub fn read_samples(args: &SampleArgs) -> Result<Vec<DimensionRecord>, CliError> {
    let flags = limits_from_flags(args)?;
    if let Some(values) = &args.values {
        return single("sample", flags, values.clone());
    }
    let path = args
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("one of --input or --values is required".into()))?;
    let text = read_text(path)?;
    let first = text.lines().next().unwrap_or("").trim();
    if first.replace(' ', "") != LONG_HEADER {
        return single("sample", flags, parse_column(&text)?);
    }
    let records = ingest(text.as_bytes())?;
    if let Some(lim) = flags {
        if let Some(r) = records.iter().find(|r| r.limits != lim) {
            return Err(Error::Consistency(format!(
                "limits of {} in the input differ from --lsl/--usl",
                r.id
            ))
            .into());
        }
    }
    Ok(records)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}
