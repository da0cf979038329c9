//! Binary field snapshots and CSV export.
//!
//! Snapshot layout (all little-endian):
//!
//! ```text
//! magic      8 bytes  "S1FIELD1"
//! nx, ny     u64, u64
//! h          f64
//! origin     f64, f64
//! topology   u8   (0 torus, 1 rectangle, 2 disk)
//! kind       u8   (0 relaxed, 1 constrained)
//! disk       f64 x 3 (center x, center y, radius; zeros otherwise)
//! values     nx * ny pairs of f64, row-major (x fastest)
//! ```

use std::io::{Read, Write};

use super::field::{FieldKind, S1Field};
use super::grid::{Grid2D, Topology};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"S1FIELD1";

pub fn write_snapshot<W: Write>(mut w: W, grid: &Grid2D, u: &S1Field) -> Result<()> {
    u.check_grid(grid)?;
    w.write_all(MAGIC)?;
    w.write_all(&(grid.nx() as u64).to_le_bytes())?;
    w.write_all(&(grid.ny() as u64).to_le_bytes())?;
    w.write_all(&grid.h().to_le_bytes())?;
    w.write_all(&grid.origin()[0].to_le_bytes())?;
    w.write_all(&grid.origin()[1].to_le_bytes())?;
    w.write_all(&[grid.topology().code()])?;
    w.write_all(&[match u.kind() {
        FieldKind::Relaxed => 0,
        FieldKind::Constrained => 1,
    }])?;
    let disk = match grid.topology() {
        Topology::Disk { center, radius } => [center[0], center[1], radius],
        _ => [0.0; 3],
    };
    for d in disk {
        w.write_all(&d.to_le_bytes())?;
    }
    for v in u.values() {
        w.write_all(&v[0].to_le_bytes())?;
        w.write_all(&v[1].to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot, rebuilding the grid from the header.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Grid2D, S1Field)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let nx = read_u64(&mut r)? as usize;
    let ny = read_u64(&mut r)? as usize;
    let h = read_f64(&mut r)?;
    let origin = [read_f64(&mut r)?, read_f64(&mut r)?];
    let mut tk = [0u8; 2];
    r.read_exact(&mut tk)?;
    let disk = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
    let grid = match tk[0] {
        0 => Grid2D::torus(nx, ny, h)?,
        1 => Grid2D::rectangle(nx, ny, h, origin)?,
        2 => {
            let g = Grid2D::disk(disk[2], h)?;
            if g.nx() != nx || g.ny() != ny {
                return Err(Error::Format("disk header inconsistent with dimensions".into()));
            }
            g
        }
        t => return Err(Error::Format(format!("unknown topology code {t}"))),
    };
    let kind = match tk[1] {
        0 => FieldKind::Relaxed,
        1 => FieldKind::Constrained,
        k => return Err(Error::Format(format!("unknown field kind {k}"))),
    };
    let mut values = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        values.push([read_f64(&mut r)?, read_f64(&mut r)?]);
    }
    // snapshots store exact bits; skip re-validation of unit moduli
    grid_check(&grid, &values)?;
    Ok((grid, S1Field::from_parts(values, kind)))
}

fn grid_check(grid: &Grid2D, values: &[[f64; 2]]) -> Result<()> {
    if values.len() != grid.num_nodes() {
        return Err(Error::ShapeMismatch { expected: grid.num_nodes(), got: values.len() });
    }
    Ok(())
}

/// CSV with columns `x,y,u1,u2`, one row per active node.
pub fn write_field_csv<W: Write>(w: W, grid: &Grid2D, u: &S1Field) -> Result<()> {
    u.check_grid(grid)?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "u1", "u2"]).map_err(csv_err)?;
    for (n, v) in u.values().iter().enumerate() {
        if !grid.node_active(n) {
            continue;
        }
        let p = grid.node_pos_of(n);
        wr.write_record(&[p[0].to_string(), p[1].to_string(), v[0].to_string(), v[1].to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
