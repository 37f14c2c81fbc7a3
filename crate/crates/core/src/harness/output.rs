//! Writing artifacts with overwrite protection.

use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;

/// One output file held in memory until the batch is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Writes every file into `dir`. Unless `overwrite` is set, nothing is
/// written when any target already exists.
pub fn write_artifacts(
    dir: &Path,
    files: &[OutputFile],
    overwrite: bool,
) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let paths: Vec<PathBuf> = files.iter().map(|f| dir.join(&f.name)).collect();
    if !overwrite {
        let existing: Vec<PathBuf> = paths.iter().filter(|p| p.exists()).cloned().collect();
        if !existing.is_empty() {
            return Err(HarnessError::WouldOverwrite(existing));
        }
    }
    for (file, path) in files.iter().zip(&paths) {
        fs::write(path, &file.contents).map_err(io(path))?;
    }
    Ok(paths)
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(header).expect("in-memory write");
    for row in rows {
        out.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// Display formatting with empty output for missing or non-finite values.
pub fn fmt_real(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map(|x| x.to_string())
        .unwrap_or_default()
}
