//! CSV and metadata writers. CSV bodies depend only on the config so that
//! repeated runs are byte-identical; timings go to `meta.json`.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};

/// Rows of CSV cells with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> LabResult<()> {
        let file = File::create(path)
            .map_err(|e| LabError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Formats a cell; floats use the shortest representation that round-trips.
pub fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

pub fn ensure_dir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| LabError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn git_hash() -> Option<String> {
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    if !out.status.success() {
        return None;
    }
    Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

pub fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes `meta.json`: config echo, git hash, timestamps and run extras.
pub fn write_meta<E: Serialize>(
    dir: &Path,
    cfg: &ExperimentConfig,
    started: f64,
    wall_seconds: f64,
    extra: &E,
) -> LabResult<()> {
    let meta = json!({
        "config": cfg,
        "git_hash": git_hash(),
        "started_unix": started,
        "finished_unix": now_unix(),
        "wall_seconds": wall_seconds,
        "extra": serde_json::to_value(extra).unwrap_or(Value::Null),
    });
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| LabError::Io(e.to_string()))?;
    fs::write(&path, text + "\n")
        .map_err(|e| LabError::Io(format!("cannot write {}: {e}", path.display())))
}
