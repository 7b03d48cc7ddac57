use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use sdlab::acceptance::CheckRow;
use sdlab::GridFunction;
use serde::Serialize;
use serde_json::{json, Value};

pub const CHECKS_FILE: &str = "checks.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct XyRow {
    x: f64,
    y: f64,
}

/// Output directory of one run. Data files are deterministic given the
/// config; anything time-dependent goes into the manifest only.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    checks: Vec<CheckRow>,
    notes: BTreeMap<String, Value>,
    started: Instant,
    started_unix: u64,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            checks: Vec::new(),
            notes: BTreeMap::new(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        sdlab::io::write_rows(&self.dir.join(name), rows).with_context(|| format!("writing {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Plot-ready two-column file with `x,y` header.
    pub fn xy(&mut self, name: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
        let rows: Vec<XyRow> = xs.iter().zip(ys).map(|(&x, &y)| XyRow { x, y }).collect();
        self.table(name, &rows)
    }

    pub fn grid_function(&mut self, stem: &str, f: &GridFunction) -> Result<()> {
        sdlab::io::write_grid_function(&self.dir, stem, f).with_context(|| format!("writing {stem}"))?;
        self.files.push(format!("{stem}.json"));
        self.files.push(format!("{stem}.csv"));
        Ok(())
    }

    pub fn check(&mut self, row: CheckRow) {
        self.checks.push(row);
    }

    pub fn checks(&self) -> &[CheckRow] {
        &self.checks
    }

    /// Extra manifest entry (timings, calibration, …).
    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Writes `checks.csv` (if any rows) and the manifest.
    pub fn finish(mut self, experiment: &str, config: &impl Serialize, seed: u64, threads: usize) -> Result<PathBuf> {
        if !self.checks.is_empty() {
            let rows = std::mem::take(&mut self.checks);
            self.table(CHECKS_FILE, &rows)?;
        }
        let manifest = json!({
            "experiment": experiment,
            "config": config,
            "versions": {
                "sdlab": env!("CARGO_PKG_VERSION"),
                "schema": crate::config::SCHEMA,
            },
            "seed": seed,
            "threads": threads,
            "parallel": sdlab::exec::parallel_enabled(),
            "started_unix": self.started_unix,
            "wall_seconds": self.started.elapsed().as_secs_f64(),
            "files": self.files,
            "notes": self.notes,
        });
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
