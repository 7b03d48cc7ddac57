//! Grid-function files and CSV tables.
//!
//! A grid function is stored as `<stem>.json` (the grid header) next to
//! `<stem>.csv` with columns `index,re,im`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    d: usize,
    n_per_axis: usize,
    box_length: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sample {
    index: usize,
    re: f64,
    im: f64,
}

pub fn write_grid_function(dir: &Path, stem: &str, f: &GridFunction) -> Result<()> {
    let g = f.grid();
    let header = Header {
        d: g.d(),
        n_per_axis: g.n(),
        box_length: g.box_length(),
    };
    let mut hw = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
    serde_json::to_writer_pretty(&mut hw, &header)?;
    hw.write_all(b"\n")?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    for (index, v) in f.values().iter().enumerate() {
        w.serialize(Sample {
            index,
            re: v.re,
            im: v.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_function(dir: &Path, stem: &str) -> Result<GridFunction> {
    let header: Header =
        serde_json::from_reader(BufReader::new(File::open(dir.join(format!("{stem}.json")))?))?;
    let grid = Grid::new(header.d, header.n_per_axis, header.box_length)?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    for rec in r.deserialize() {
        let s: Sample = rec?;
        let slot = values
            .get_mut(s.index)
            .ok_or_else(|| Error::InvalidParameter(format!("sample index {} out of range", s.index)))?;
        *slot = Complex64::new(s.re, s.im);
    }
    GridFunction::new(grid, values)
}

/// Writes serializable rows as a CSV file with a header line.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
