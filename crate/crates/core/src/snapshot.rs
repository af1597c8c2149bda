//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                                  |
//! |--------------|------------------------------------------|
//! | 4            | magic `DNLS`                             |
//! | 2            | format version (`u16`, currently 1)      |
//! | 2            | dimension `n` (`u16`)                    |
//! | 8·n          | points per axis (`u64`)                  |
//! | 8·n          | half-width `L` per axis (`f64`)          |
//! | 16·Πn        | samples as `(f64 re, f64 im)`, row-major |

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::grid::GridSpec;

pub const MAGIC: &[u8; 4] = b"DNLS";
pub const VERSION: u16 = 1;

pub fn write_snapshot<W: Write>(mut w: W, f: &Field) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u16).to_le_bytes())?;
    for &n in g.points() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for &l in g.half_widths() {
        w.write_all(&l.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * f.data().len());
    for z in f.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DnlsError::Format("bad magic bytes".into()));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(DnlsError::Format(format!("unsupported version {version}")));
    }
    let dim = read_u16(&mut r)? as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(DnlsError::Format(format!("unsupported dimension {dim}")));
    }
    let mut points = Vec::with_capacity(dim);
    for _ in 0..dim {
        points.push(read_u64(&mut r)? as usize);
    }
    let mut half_widths = Vec::with_capacity(dim);
    for _ in 0..dim {
        half_widths.push(f64::from_bits(read_u64(&mut r)?));
    }
    let grid = GridSpec::new(half_widths, points).map_err(|e| DnlsError::Format(e.to_string()))?;
    let mut bytes = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Field::from_vec(Arc::new(grid), data)
}

pub fn save(path: &Path, f: &Field) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), f)
}

pub fn load(path: &Path) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
