//! CSV tables with a provenance comment line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::KitError;

/// `# config=<hash> richards-core=<v> richards-kit=<v>`
pub fn provenance(config_hash: &str) -> String {
    format!(
        "# config={config_hash} richards-core={} richards-kit={}",
        richards_core::VERSION,
        env!("CARGO_PKG_VERSION")
    )
}

/// An in-memory table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|s| s.to_string()).collect();
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self, config_hash: &str) -> Result<String, KitError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| KitError::Io(e.to_string()))?).expect("utf8 input");
        Ok(format!("{}\n{body}", provenance(config_hash)))
    }

    pub fn write(&self, dir: &Path, name: &str, config_hash: &str) -> Result<PathBuf, KitError> {
        let path = dir.join(name);
        fs::write(&path, self.to_csv(config_hash)?).map_err(|e| KitError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn csv_err(e: csv::Error) -> KitError {
    KitError::Io(e.to_string())
}

/// Formats a float with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
