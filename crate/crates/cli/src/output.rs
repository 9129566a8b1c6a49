use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use selfsim::measure::format_f64;
use selfsim::Scalar;

/// Float cell with 17 significant digits.
pub fn num(x: f64) -> String {
    format_f64(x)
}

/// Exact values as `p/q`, floats as [`num`].
pub fn scalar<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        x.literal()
    } else {
        num(x.to_f64())
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

/// A CSV table built in memory and written in one go.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, T>(&mut self, cells: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(cells)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer.into_inner().context("flushing CSV")
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// standard output when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        Some(p) => write_atomic(p, bytes)?,
    }
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
