use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const SCHEMA: &str = "hecke-sphere/1";

#[derive(Debug, Default, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a command produced: a JSON result, CSV tables keyed by file stem,
/// and the assertions that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<(String, Table)>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Shortest round-trip form, switching to exponent notation far from 1.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || v.is_nan() || v.is_infinite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn write_csv(path: &Path, config: &str, table: &Table) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().context("flushing CSV")?;
    let mut out = format!("# config: {config}\n").into_bytes();
    out.extend(body);
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Writes `<command>.json` and one CSV per table; returns the paths.
pub fn write_artifacts(cfg: &RunConfig, outcome: &Outcome) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let name = cfg.command.name();
    let config = serde_json::to_string(cfg)?;
    let doc = json!({
        "schema": SCHEMA,
        "command": name,
        "config": cfg,
        "passed": outcome.passed(),
        "failures": outcome.failures,
        "result": outcome.result,
    });
    let json_path = cfg.out.join(format!("{name}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    let mut paths = vec![json_path];
    for (stem, table) in &outcome.tables {
        let p = cfg.out.join(format!("{stem}.csv"));
        write_csv(&p, &config, table)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Failure record for a run that stopped on an error.
pub fn write_error(cfg: &RunConfig, err: &anyhow::Error) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let doc = json!({
        "schema": SCHEMA,
        "command": cfg.command.name(),
        "config": cfg,
        "passed": false,
        "failures": [format!("{err:#}")],
        "result": Value::Null,
    });
    let p = cfg.out.join(format!("{}.json", cfg.command.name()));
    fs::write(&p, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(p)
}
