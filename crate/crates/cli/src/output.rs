//! Tables, provenance headers and atomic file output.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub timestamp: Option<u64>,
}

impl Provenance {
    /// `config` must not contain anything that may vary between otherwise
    /// identical runs (thread counts, output paths).
    pub fn new(config: &impl Serialize, seed: u64, with_timestamp: bool) -> Provenance {
        let bytes = serde_json::to_vec(config).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        Provenance {
            seed,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            timestamp: with_timestamp.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        }
    }

    fn comment_block(&self) -> String {
        let mut s = format!(
            "# lensdepth {}\n# seed: {}\n# config-sha256: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash
        );
        if let Some(t) = self.timestamp {
            s.push_str(&format!("# generated-unix: {t}\n"));
        }
        s
    }

    fn json(&self) -> Value {
        let mut v = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_sha256": self.config_hash,
        });
        if let Some(t) = self.timestamp {
            v["generated_unix"] = json!(t);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Text(v)
    }
}

/// Seventeen significant digits, enough to round-trip any f64.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(format_number(*x)),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Table {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// A rendered result: a table, optionally with a structured JSON form.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub table: Table,
    pub json: Option<Value>,
}

impl From<Table> for Artifact {
    fn from(table: Table) -> Artifact {
        Artifact { table, json: None }
    }
}

impl Artifact {
    pub fn render(&self, format: Format, prov: &Provenance) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut out = prov.comment_block().into_bytes();
                out.extend(self.table.csv());
                out
            }
            Format::Json => {
                let body = self.json.clone().unwrap_or_else(|| self.table.json());
                let doc = json!({ "provenance": prov.json(), "result": body });
                let mut out = serde_json::to_vec_pretty(&doc).expect("json value serializes");
                out.push(b'\n');
                out
            }
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}
