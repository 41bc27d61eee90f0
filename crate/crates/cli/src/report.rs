//! Report assembly and serialization. Output bytes depend only on the report
//! contents, never on timing or execution order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: &str, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub run: Value,
    /// Input path to hex SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub tables: Vec<Table>,
    pub results: Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    /// Digest of the `path sha256` lines of all inputs, in path order.
    pub fn inputs_digest(&self) -> String {
        let mut h = Sha256::new();
        for (path, sum) in &self.inputs {
            h.update(format!("{path} {sum}\n"));
        }
        hex(&h.finalize())
    }

    fn preamble(&self) -> Result<String> {
        let mut s = format!("# continuo {} {}\n# run: {}\n", self.version, self.command, serde_json::to_string(&self.run)?);
        s.push_str(&format!("# inputs: {} files sha256:{}\n", self.inputs.len(), self.inputs_digest()));
        Ok(s)
    }

    pub fn table_csv(&self, table: &Table) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let body = String::from_utf8(w.into_inner()?)?;
        Ok(format!("{}{body}", self.preamble()?))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<command>.json` or one `<command>_<table>.csv` per table,
    /// returning the paths written. Without a directory, prints to stdout.
    pub fn emit(&self, out: Option<&Path>, format: Format) -> Result<Vec<String>> {
        let files: Vec<(String, String)> = match format {
            Format::Json => vec![(format!("{}.json", self.command), self.to_json()?)],
            Format::Csv => self
                .tables
                .iter()
                .map(|t| Ok((format!("{}_{}.csv", self.command, t.name), self.table_csv(t)?)))
                .collect::<Result<_>>()?,
        };
        match out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                files
                    .into_iter()
                    .map(|(name, text)| {
                        let path = dir.join(&name);
                        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                        Ok(path.display().to_string())
                    })
                    .collect()
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                for (i, (_, text)) in files.iter().enumerate() {
                    if i > 0 {
                        writeln!(stdout)?;
                    }
                    stdout.write_all(text.as_bytes())?;
                }
                Ok(Vec::new())
            }
        }
    }
}

/// Shortest round-trip decimal form, so equal values print equally.
pub fn num(x: f64) -> String {
    format!("{x}")
}
