use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use capgate_core::sim::RunManifest;
use capgate_core::Error;
use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path, e: io::Error) -> CliError {
    Error::Io(format!("{}: {e}", path.display())).into()
}

/// Write bytes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            let mut w = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
            w.write_all(bytes)
                .and_then(|_| w.flush())
                .map_err(|e| io_err(p, e))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::Io(e.to_string()).into())
        }
    }
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    capgate_core::sim::write_rows_csv(&mut buf, rows)?;
    Ok(buf)
}

/// CSV to a file also gets a `<file>.manifest.json` sidecar.
pub fn emit_csv(path: Option<&Path>, csv: &[u8], manifest: &RunManifest) -> Result<(), CliError> {
    emit(path, csv)?;
    if let Some(p) = path {
        let mut side = p.as_os_str().to_owned();
        side.push(".manifest.json");
        emit(Some(Path::new(&side)), &json_bytes(manifest)?)?;
    }
    Ok(())
}
