//! Report sinks: JSON to stdout or a file, CSV tables appended in place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = concat!("dirinfo ", env!("CARGO_PKG_VERSION"));

/// One CSV cell. Floats use the shortest round-trip form, so equal results
/// give equal bytes.
pub enum Cell {
    Int(usize),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

/// SHA-256 of the serialized configuration and every input file it names.
pub fn config_hash(config: &Value, inputs: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    h.update(TOOL.as_bytes());
    h.update(serde_json::to_vec(config).expect("config serializes"));
    for (name, bytes) in inputs {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_be_bytes());
        h.update(bytes);
    }
    format!("{:x}", h.finalize())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes `bytes` to `path` through a sibling temporary file, so readers
/// never see a half-written output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = PathBuf::from(path);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.set_file_name(format!(".{name}.partial"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_error(&tmp, e))?;
    f.sync_all().map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

/// Appends `table` to the CSV at `path`.
///
/// A new file gets the header row. An existing one must carry the same
/// header. Its trailing `# tool=...` line is replaced by one that also
/// lists this run's config hash.
pub fn append_csv(path: &Path, table: &Table, hash: &str) -> Result<(), CliError> {
    let header = table.header.join(",");
    let mut body: Vec<String> = Vec::new();
    let mut hashes: Vec<String> = Vec::new();
    match fs::read_to_string(path) {
        Ok(text) => {
            let mut lines: Vec<&str> = text.lines().collect();
            while let Some(last) = lines.last() {
                if let Some(meta) = last.strip_prefix('#') {
                    if let Some(list) = meta.split_whitespace().find_map(|t| t.strip_prefix("config=")) {
                        hashes.extend(list.split(';').filter(|h| !h.is_empty()).map(str::to_string));
                    }
                    lines.pop();
                } else {
                    break;
                }
            }
            match lines.first() {
                Some(first) if *first == header => body.extend(lines.iter().map(|l| l.to_string())),
                None => body.push(header.clone()),
                Some(first) => {
                    return Err(CliError::Lib(dirinfo::Error::Argument(format!(
                        "{} has header {first:?}, expected {header:?}",
                        path.display()
                    ))))
                }
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => body.push(header.clone()),
        Err(e) => return Err(io_error(path, e)),
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &table.rows {
        assert_eq!(row.len(), table.header.len(), "row width matches the header");
        w.write_record(row.iter().map(Cell::render)).expect("in-memory CSV write");
    }
    let rows = String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8");
    body.extend(rows.lines().map(str::to_string));
    if !hashes.iter().any(|h| h == hash) {
        hashes.push(hash.to_string());
    }
    body.push(format!("# tool={} config={}", TOOL.replace(' ', "/"), hashes.join(";")));
    let mut text = body.join("\n");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn to_json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
