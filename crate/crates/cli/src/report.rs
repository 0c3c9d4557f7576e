//! `report.jsonl` records and CSV side files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub value: Value,
    pub tolerance: Option<Value>,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub check: String,
    pub inputs_digest: String,
    pub values: BTreeMap<String, Entry>,
    pub status: Status,
}

/// JSON number, or a string for values JSON cannot hold.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub struct RecordBuilder {
    check: String,
    digest: String,
    values: BTreeMap<String, Entry>,
}

impl RecordBuilder {
    pub fn new(check: &str, digest: &str) -> Self {
        Self { check: check.into(), digest: digest.into(), values: BTreeMap::new() }
    }

    pub fn value(mut self, name: &str, value: Value, method: &str) -> Self {
        self.values.insert(name.into(), Entry { value, tolerance: None, method: method.into() });
        self
    }

    pub fn checked(mut self, name: &str, value: Value, tolerance: f64, method: &str) -> Self {
        self.values.insert(name.into(), Entry { value, tolerance: Some(num(tolerance)), method: method.into() });
        self
    }

    pub fn finish(self, ok: bool) -> Record {
        Record { check: self.check, inputs_digest: self.digest, values: self.values, status: Status::from_bool(ok) }
    }
}

/// sha256 over the canonical JSON of every input that affects a check.
pub fn digest<T: Serialize>(inputs: &T) -> String {
    let text = serde_json::to_string(inputs).expect("inputs serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct Output {
    dir: PathBuf,
    report: BufWriter<File>,
}

impl Output {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let report = BufWriter::new(File::create(dir.join("report.jsonl"))?);
        Ok(Self { dir: dir.to_path_buf(), report })
    }

    pub fn record(&mut self, r: &Record) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.report, r)?;
        self.report.write_all(b"\n")
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = R>) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let f = BufWriter::new(File::create(self.dir.join(name))?);
        serde_json::to_writer_pretty(f, value)?;
        Ok(())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.report.flush()
    }
}
