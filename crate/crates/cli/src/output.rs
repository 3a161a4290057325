//! Artifact sink: files under `--out` plus a manifest, or stdout.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use pca_engine::EmpiricalMeasure;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// A table with string-rendered cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn from_measure(m: &EmpiricalMeasure) -> Self {
        let mut t = Table::new(&["atom", "weight"]);
        for (a, w) in m.iter() {
            t.push(vec![a.to_string(), num(w)]);
        }
        t
    }

    fn csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self.headers.iter().cloned().zip(r.iter().map(|c| cell_value(c))).collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

fn cell_value(c: &str) -> Value {
    if let Ok(i) = c.parse::<i64>() {
        return i.into();
    }
    match c.parse::<f64>() {
        Ok(f) if f.is_finite() => f.into(),
        _ => match c {
            "true" => true.into(),
            "false" => false.into(),
            _ => c.into(),
        },
    }
}

/// Shortest round-trip rendering; identical inputs give identical text.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    /// Creates the output directory and writes `manifest.toml` into it.
    pub fn open(cfg: &RunConfig) -> Result<Self, CliError> {
        if let Some(dir) = &cfg.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("manifest.toml"), cfg.manifest()?)?;
        }
        Ok(Sink { out: cfg.out.clone(), format: cfg.format })
    }

    fn emit(&self, stem: &str, ext: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(dir) => fs::write(dir.join(format!("{stem}.{ext}")), bytes)?,
            None => {
                let mut o = std::io::stdout().lock();
                match o.write_all(bytes).and_then(|_| o.flush()) {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r?,
                }
            }
        }
        Ok(())
    }

    pub fn table(&self, stem: &str, t: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.emit(stem, "csv", &t.csv()?),
            Format::Json => self.emit(stem, "json", &pretty(&t.json())?),
        }
    }

    /// Structured reports are always JSON.
    pub fn report<T: Serialize>(&self, stem: &str, r: &T) -> Result<(), CliError> {
        self.emit(stem, "json", &pretty(r)?)
    }
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_cells_are_typed() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec!["3".into(), "0.5".into(), "x|y".into()]);
        assert_eq!(t.json().to_string(), r#"[{"a":3,"b":0.5,"c":"x|y"}]"#);
    }

    proptest::proptest! {
        #[test]
        fn numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            proptest::prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
