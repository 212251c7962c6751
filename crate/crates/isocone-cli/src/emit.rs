use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Opt(Option<f64>),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Opt(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_float(*v),
            Cell::Opt(v) => v.map(fmt_float).unwrap_or_default(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) | Cell::Opt(Some(v)) => json!(v),
            Cell::Opt(None) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Fixed columns, one row per result.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.header.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect::<Map<_, _>>()))
                .collect(),
        )
    }
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{x:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub verb: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub resolutions: Value,
    pub files: Vec<String>,
    pub verified: bool,
    pub summary: Value,
}

/// Writes every table under `dir` as `<name>.csv` or `<name>.json`, then
/// the manifest; returns the written paths.
pub fn write_all(dir: &Path, tables: &[(String, Table)], format: Format, manifest: &mut Manifest) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let mut out = Vec::new();
    for (name, table) in tables {
        let path = match format {
            Format::Csv => {
                let p = dir.join(format!("{name}.csv"));
                write_csv(&p, table)?;
                p
            }
            Format::Json => {
                let p = dir.join(format!("{name}.json"));
                let text = serde_json::to_string_pretty(&table.to_json()).expect("json");
                fs::write(&p, text + "\n").map_err(|e| format!("cannot write {}: {e}", p.display()))?;
                p
            }
        };
        manifest.files.push(path.file_name().unwrap().to_string_lossy().into_owned());
        out.push(path);
    }
    let p = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("json");
    fs::write(&p, text + "\n").map_err(|e| format!("cannot write {}: {e}", p.display()))?;
    out.push(p);
    Ok(out)
}

fn write_csv(path: &Path, table: &Table) -> Result<(), String> {
    let err = |e: csv::Error| format!("cannot write {}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(err)?;
    }
    w.flush().map_err(|e| format!("cannot write {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(0.1 + 0.2), "0.3");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(-2.0), "-2");
        assert_eq!(fmt_float(123456789.123456789), "123456789.123");
        assert_eq!(fmt_float(1.5e-7), "1.5e-7");
        assert_eq!(fmt_float(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_float(9.9999999999999e-1), "1");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
