use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use tsu_core::CurveTable;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes `text` to `path` through a sibling temp file and a rename, or to
/// standard output when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
        Some(p) => write_atomic(p, text),
    }
}

pub fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Runtime(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn render_table(table: &CurveTable, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&table.to_json()).expect("plain JSON")),
    }
}
