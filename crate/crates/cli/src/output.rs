use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::Exit;

pub fn read_json<T: DeserializeOwned>(path: Option<&PathBuf>, what: &str) -> Result<T, Exit> {
    let path = path.ok_or_else(|| Exit::input(format!("{what} needs --input <file>")))?;
    let text = fs::read_to_string(path).map_err(|e| Exit::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Exit::input(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Exit> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Exit::input(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Exit::input(format!("cannot write to stdout: {e}"))),
    }
}

/// `path` with `suffix` appended to its file stem (`out.csv` becomes
/// `out.summary.json` for suffix `summary.json`).
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, Exit>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Exit::input(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Exit::input(format!("csv: {e}")))
}

pub fn json_bytes<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, Exit> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Exit::input(format!("json: {e}")))?;
    s.push(b'\n');
    Ok(s)
}
