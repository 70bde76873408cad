//! Report rendering, CSV files and potential provenance.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha1::{Digest, Sha1};
use torus_mather::potential_file::{parse_potential, to_document_string, Symmetry};
use torus_mather::FourierPotential;

/// Where and how a command writes its result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emit {
    /// Pretty JSON on stdout.
    Report,
    /// Aligned `key  value` text on stdout.
    Table,
    /// CSV file in the output directory, report on stdout.
    Csv,
    /// CSV file at the given path, report on stdout.
    CsvFile(PathBuf),
}

impl Emit {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "report" | "json" => Ok(Self::Report),
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            path if path.ends_with(".csv") => Ok(Self::CsvFile(PathBuf::from(path))),
            other => Err(format!("unknown --emit value '{other}' (report, table, csv or a .csv path)")),
        }
    }

    pub fn wants_csv(&self) -> bool {
        matches!(self, Self::Csv | Self::CsvFile(_))
    }

    /// Destination of the CSV file, if any.
    pub fn csv_path(&self, out_dir: &Path, default_name: &str) -> Option<PathBuf> {
        match self {
            Self::Csv => Some(out_dir.join(default_name)),
            Self::CsvFile(p) => Some(p.clone()),
            _ => None,
        }
    }
}

/// `git hash-object` of the given bytes.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().fold(String::with_capacity(40), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A potential with the provenance recorded in reports.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialSource {
    #[serde(skip)]
    pub potential: FourierPotential,
    /// File path, or `builtin` for the zero potential.
    pub source: String,
    /// Git-style SHA-1 of the file bytes, or of the canonical document for
    /// potentials not read from a file.
    pub sha1: String,
    pub symmetrized: bool,
    pub modes: usize,
}

impl PotentialSource {
    pub fn builtin(potential: FourierPotential) -> Self {
        let doc = to_document_string(&potential);
        Self {
            sha1: git_blob_sha1(doc.as_bytes()),
            source: "builtin".into(),
            symmetrized: false,
            modes: potential.num_modes(),
            potential,
        }
    }

    pub fn load(path: Option<&Path>, symmetrize: bool) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::builtin(FourierPotential::zero()));
        };
        let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| format!("{} is not UTF-8", path.display()))?;
        let sym = if symmetrize { Symmetry::Symmetrize } else { Symmetry::Strict };
        let loaded = parse_potential(&text, sym).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self {
            sha1: git_blob_sha1(&bytes),
            source: path.display().to_string(),
            symmetrized: loaded.symmetrized,
            modes: loaded.potential.num_modes(),
            potential: loaded.potential,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Flattens a JSON report into aligned `path  value` lines.
pub fn render_table(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| if prefix.is_empty() { key.to_string() } else { format!("{prefix}.{key}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, rows);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            rows.push((prefix.to_string(), parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes rows under a header, creating parent directories.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    let err = |e: csv::Error| format!("cannot write {}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Shortest round-trip decimal for a float cell.
pub fn cell(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // git hash-object on an empty file and on "hello\n"
        assert_eq!(git_blob_sha1(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
        assert_eq!(git_blob_sha1(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    }

    #[test]
    fn emit_values() {
        assert_eq!(Emit::parse("csv").unwrap(), Emit::Csv);
        assert_eq!(Emit::parse("out/m.csv").unwrap(), Emit::CsvFile("out/m.csv".into()));
        assert!(Emit::parse("xml").is_err());
    }

    #[test]
    fn table_flattens_nested_values() {
        let v: Value = serde_json::json!({"a": {"b": 1.5, "c": [1, 2]}, "d": "x"});
        let t = render_table(&v);
        assert!(t.contains("a.b  1.5"));
        assert!(t.contains("a.c  1, 2"));
        assert!(t.lines().any(|l| l.starts_with("d ") && l.ends_with('x')));
    }
}
