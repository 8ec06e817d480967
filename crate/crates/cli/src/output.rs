//! CSV artifacts with `#` metadata lines and their JSON mirrors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use mrlab_core::bounds::fmt_f64;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::Value;

pub const TOOL: &str = "mrlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(u64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Str(v) => s.serialize_str(v),
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            // JSON has no non-finite numbers
            Cell::Num(x) => s.serialize_str(&fmt_f64(*x)),
            Cell::Int(i) => s.serialize_u64(*i),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Prior or distribution rendered as `w0;w1;...`.
pub fn weights_cell(w: &[f64]) -> Cell {
    Cell::Str(w.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";"))
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }
}

struct JsonRow<'a>(&'a [String], &'a [Cell]);

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for r in &self.rows {
            seq.serialize_element(&JsonRow(&self.header, r))?;
        }
        seq.end()
    }
}

/// Reproducibility metadata embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub instance_hashes: Vec<String>,
    pub seeds: Vec<u64>,
    pub config: Value,
}

impl Metadata {
    fn csv_lines(&self) -> Vec<String> {
        vec![
            format!("# tool={} version={}", self.tool, self.version),
            format!("# command={}", self.command),
            format!("# instance_hash={}", self.instance_hashes.join(",")),
            format!(
                "# seeds={}",
                self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
            ),
            format!("# config={}", self.config),
        ]
    }
}

pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `{stem}.csv` and the mirror `{stem}.json`; `extra` is merged
    /// into the JSON document next to `metadata` and `rows`.
    pub fn table(&mut self, stem: &str, meta: &Metadata, table: &Table, extra: Option<Value>) -> anyhow::Result<()> {
        let csv_path = self.path(&format!("{stem}.csv"));
        let mut buf = Vec::new();
        for line in meta.csv_lines() {
            writeln!(buf, "{line}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&table.header)?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        self.write(&csv_path, &buf)?;

        let mut doc = serde_json::json!({ "metadata": meta, "rows": table });
        if let (Some(Value::Object(extra)), Value::Object(doc)) = (extra, &mut doc) {
            doc.extend(extra);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(&self.path(&format!("{stem}.json")), text.as_bytes())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        let meta = Metadata {
            tool: TOOL,
            version: VERSION,
            command: "test".into(),
            instance_hashes: vec!["abc".into()],
            seeds: vec![7],
            config: serde_json::json!({"k": 1}),
        };
        let mut t = Table::new(&["name", "value", "flag", "missing"]);
        t.push(vec!["x".into(), f64::INFINITY.into(), true.into(), Cell::Empty]);
        t.push(vec!["y".into(), 0.1.into(), false.into(), 3usize.into()]);
        a.table("out", &meta, &t, Some(serde_json::json!({"note": "n"}))).unwrap();
        let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], format!("# tool=mrlab version={VERSION}"));
        assert_eq!(lines[3], "# seeds=7");
        assert_eq!(lines[5], "name,value,flag,missing");
        assert_eq!(lines[6], "x,inf,true,");
        assert_eq!(lines[7], "y,0.1,false,3");
        let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
        assert_eq!(json["rows"][0]["value"], "inf");
        assert_eq!(json["rows"][1]["value"], 0.1);
        assert_eq!(json["rows"][0]["missing"], Value::Null);
        assert_eq!(json["note"], "n");
        assert_eq!(json["metadata"]["instance_hashes"][0], "abc");
    }
}
