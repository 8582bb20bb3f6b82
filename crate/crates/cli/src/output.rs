//! CSV tables and the JSON run manifest written next to them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::settings::Settings;
use crate::AppError;

/// In-memory table; numbers are written in shortest round-trip form.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::S(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:?}"),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    fn write(&self, dir: &Path) -> Result<PathBuf, AppError> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| AppError::Compute(format!("cannot create {}: {e}", path.display())))?;
        let io = |e: csv::Error| AppError::Compute(format!("writing {}: {e}", path.display()));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()
            .map_err(|e| AppError::Compute(format!("writing {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// `10 log10(x)`.
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Serialize)]
struct FileDigest {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a, E: Serialize> {
    subcommand: &'a str,
    tool_version: &'a str,
    seed: u64,
    nu_range: &'a str,
    parameters: &'a Settings,
    extra: E,
    outputs: Vec<FileDigest>,
}

/// Write every table, then one manifest listing their digests.
pub fn emit<E: Serialize>(
    subcommand: &str,
    settings: &Settings,
    tables: &[Table],
    extra: E,
) -> Result<Vec<PathBuf>, AppError> {
    let dir = &settings.out;
    fs::create_dir_all(dir)
        .map_err(|e| AppError::Compute(format!("cannot create {}: {e}", dir.display())))?;
    let mut outputs = Vec::new();
    let mut paths = Vec::new();
    for t in tables {
        let path = t.write(dir)?;
        let bytes = fs::read(&path)
            .map_err(|e| AppError::Compute(format!("cannot read back {}: {e}", path.display())))?;
        outputs.push(FileDigest {
            file: path.file_name().unwrap().to_string_lossy().into_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        paths.push(path);
    }
    let manifest = RunManifest {
        subcommand,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: settings.seed,
        nu_range: "[0, 4pi)",
        parameters: settings,
        extra,
        outputs,
    };
    let path = dir.join(format!("{subcommand}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| AppError::Compute(format!("manifest: {e}")))?;
    fs::write(&path, text + "\n")
        .map_err(|e| AppError::Compute(format!("cannot write {}: {e}", path.display())))?;
    paths.push(path);
    Ok(paths)
}
