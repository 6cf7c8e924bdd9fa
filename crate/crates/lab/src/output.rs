//! CSV tables, JSON sidecars, the run manifest and the summary of fitted rates.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use edgelab_core::experiments::DecayFit;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 12 significant digits, locale independent.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        w.into_inner().unwrap()
    }

    /// Column-wise series of unequal length, padded with empty cells.
    pub fn from_columns(columns: Vec<(String, Vec<String>)>) -> Self {
        let n = columns.iter().map(|c| c.1.len()).max().unwrap_or(0);
        let header = columns.iter().map(|c| c.0.clone()).collect();
        let rows = (0..n).map(|i| columns.iter().map(|c| c.1.get(i).cloned().unwrap_or_default()).collect()).collect();
        Self { header, rows }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub command: String,
    pub label: String,
    pub fit: DecayFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Property {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Property {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: BTreeMap<String, String>,
    pub parameters: serde_json::Value,
    pub files: Vec<FileRecord>,
    pub timings: BTreeMap<String, f64>,
    pub properties: Vec<Property>,
}

/// Everything written under one output directory.
pub struct Outputs {
    pub root: PathBuf,
    pub files: Vec<FileRecord>,
    pub summary: Vec<SummaryRow>,
    pub properties: Vec<Property>,
}

impl Outputs {
    pub fn new(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), summary: Vec::new(), properties: Vec::new() })
    }

    pub fn bytes(&mut self, rel: &str, data: &[u8]) -> io::Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d)?;
        }
        fs::write(&p, data)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(FileRecord { path: rel.into(), sha256: hex::encode(Sha256::digest(data)), bytes: data.len() as u64 });
        Ok(p)
    }

    pub fn table(&mut self, rel: &str, t: &Table) -> io::Result<PathBuf> {
        self.bytes(rel, &t.to_csv())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> io::Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        s.push('\n');
        self.bytes(rel, s.as_bytes())
    }

    pub fn fit(&mut self, command: &str, fit: &DecayFit) {
        self.summary.push(SummaryRow { command: command.into(), label: fit.label.clone(), fit: fit.clone() });
    }

    pub fn check(&mut self, p: Property) {
        self.properties.push(p);
    }

    pub fn failures(&self) -> Vec<&str> {
        self.properties.iter().filter(|p| !p.pass).map(|p| p.name.as_str()).collect()
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["command", "label", "sizes", "points", "slope", "slope_ci_lo", "slope_ci_hi", "intercept", "monotone", "slope_negative"]);
        for r in &self.summary {
            let mut sizes: Vec<u32> = r.fit.sizes.clone();
            sizes.dedup();
            t.push(vec![
                r.command.clone(),
                r.label.clone(),
                sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
                r.fit.fit.n.to_string(),
                num(r.fit.fit.slope),
                num(r.fit.fit.slope_ci.0),
                num(r.fit.fit.slope_ci.1),
                num(r.fit.fit.intercept),
                r.fit.monotone.to_string(),
                r.fit.slope_negative.to_string(),
            ]);
        }
        t
    }

    pub fn properties_table(&self) -> Table {
        let mut t = Table::new(&["property", "pass", "detail"]);
        for p in &self.properties {
            t.push(vec![p.name.clone(), p.pass.to_string(), p.detail.clone()]);
        }
        t
    }
}
