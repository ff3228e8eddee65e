//! CSV tables and manifest sidecars, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// A numeric table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| float(x)))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Key=value sidecar: comment header, config snapshot, then `# result:` lines.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub header: Vec<(String, String)>,
    pub config: String,
    pub results: Vec<(String, String)>,
}

impl Manifest {
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&self.config);
        for (k, v) in &self.results {
            s.push_str(&format!("# result: {k} = {v}\n"));
        }
        s
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    csv.with_file_name(name)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// CSV to `path` with its manifest, or CSV alone to stdout.
pub fn emit(table: &Csv, path: Option<&Path>, manifest: &mut Manifest) -> io::Result<()> {
    let bytes = table.to_bytes()?;
    match path {
        None => io::stdout().write_all(&bytes),
        Some(p) => {
            write_atomic(p, &bytes)?;
            manifest.note("output", p.display());
            write_atomic(&manifest_path(p), manifest.render().as_bytes())
        }
    }
}
