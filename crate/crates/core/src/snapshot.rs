//! Field snapshots and number formatting for text output.
//!
//! Text output always uses [`sci`], scientific notation with 17 significant
//! digits, which round-trips every `f64` exactly.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Field, Grid, GridError};

const MAGIC: &[u8; 4] = b"FNLS";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("not a field snapshot (bad magic)")]
    Magic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("malformed snapshot line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// `x` with 17 significant digits; NaN and infinities as `nan`, `inf`, `-inf`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// CSV with header `index,re,im`, one row per sample in row-major order.
pub fn write_field_csv<W: Write>(mut w: W, field: &Field, config_hash: &str) -> io::Result<()> {
    let g = field.grid();
    writeln!(
        w,
        "# config_hash={config_hash} N={} M={} L={}",
        g.dim(),
        g.points(),
        sci(g.period())
    )?;
    writeln!(w, "index,re,im")?;
    for (i, z) in field.values().iter().enumerate() {
        writeln!(w, "{i},{},{}", sci(z.re), sci(z.im))?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_field_csv`] back onto `grid`.
pub fn read_field_csv<R: Read>(mut r: R, grid: &Grid) -> Result<Field, SnapshotError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut values = Vec::with_capacity(grid.len());
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("index") || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| SnapshotError::Parse {
                line: n + 1,
                reason: e.to_string(),
            })
        };
        if parts.len() != 3 {
            return Err(SnapshotError::Parse {
                line: n + 1,
                reason: format!("expected 3 columns, got {}", parts.len()),
            });
        }
        values.push(Complex64::new(parse(parts[1])?, parse(parts[2])?));
    }
    Ok(Field::new(grid, values)?)
}

/// Binary layout, little endian: magic `FNLS`, version `u32`, `N u32`,
/// `M u32`, `L f64`, sample count `u64`, then `(re, im)` pairs of `f64`.
pub fn write_field_binary<W: Write>(mut w: W, field: &Field) -> io::Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.points() as u32).to_le_bytes())?;
    w.write_all(&g.period().to_le_bytes())?;
    w.write_all(&(g.len() as u64).to_le_bytes())?;
    for z in field.values() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<Field, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::Magic);
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(SnapshotError::Version(version));
    }
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let points = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let period = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let grid = Grid::new(dim, points, period)?;
    if count != grid.len() {
        return Err(GridError::Length {
            expected: grid.len(),
            got: count,
        }
        .into());
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        values.push(Complex64::new(re, f64::from_le_bytes(b8)));
    }
    Ok(Field::new(&grid, values)?)
}
