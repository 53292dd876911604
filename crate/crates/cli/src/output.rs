//! CSV and JSON writers. Floats are written with the shortest round-trip
//! representation so identical runs give identical files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rsvub_core::diagnostics::CSV_HEADER;
use rsvub_core::fields;
use rsvub_core::{DiagnosticsRecord, Model, State};
use serde::Serialize;

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// Snapshot with columns `x, eta, u, h, d`.
pub fn write_snapshot(path: &Path, model: &Model, state: &State) -> io::Result<()> {
    let mut w = create(path)?;
    let h = fields::depth(state, &model.bathymetry, &model.grid);
    writeln!(w, "x,eta,u,h,d")?;
    for (i, x) in model.grid.nodes().enumerate() {
        let d = model.bathymetry.d(state.t, x);
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", x, state.eta[i], state.u[i], h[i], d)?;
    }
    w.flush()
}

/// Generic table writer: a header line then rows of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()
}

pub fn cell(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}
