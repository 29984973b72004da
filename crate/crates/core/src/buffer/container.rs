//! Versioned binary container for [`GreenOperator`].
//!
//! Little endian: magic `QBGO`, `u16` version, `u64` n, `f64` grid start and
//! end, the `n×n` amplitude matrix, `u64` rank `r`, `r` singular values, the
//! `n×r` input and output mode matrices, an optional factor block
//! (`u8` flag, `u64` n_z, `T`, `R`), an optional linearity residual and an
//! optional TOML metadata block (`u64` byte length).

use std::io::{Read, Write};
use std::path::Path;

use super::green::{set_metadata, GreenFactors, GreenMetadata, GreenOperator};
use crate::error::{Error, Result};
use crate::modespace::container::{read_f64, read_matrix, read_u16, read_u64, write_matrix};
use crate::modespace::TimeGrid;

const MAGIC: &[u8; 4] = b"QBGO";
pub const GREEN_FORMAT_VERSION: u16 = 1;

pub fn write_green<W: Write>(g: &GreenOperator, mut w: W) -> Result<()> {
    let grid = g.grid();
    let n = grid.len();
    w.write_all(MAGIC)?;
    w.write_all(&GREEN_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&grid.t_start().to_le_bytes())?;
    w.write_all(&grid.t_end().to_le_bytes())?;
    write_matrix(g.matrix(), &mut w)?;
    let r = g.singular_values().len();
    w.write_all(&(r as u64).to_le_bytes())?;
    for s in g.singular_values() {
        w.write_all(&s.to_le_bytes())?;
    }
    write_matrix(g.input_modes(), &mut w)?;
    write_matrix(g.output_modes(), &mut w)?;
    match g.factors() {
        Some(f) => {
            w.write_all(&[1])?;
            w.write_all(&(f.read_in.nrows() as u64).to_le_bytes())?;
            write_matrix(&f.read_in, &mut w)?;
            write_matrix(&f.read_out, &mut w)?;
        }
        None => w.write_all(&[0])?,
    }
    match g.linearity_residual() {
        Some(r) => {
            w.write_all(&[1])?;
            w.write_all(&r.to_le_bytes())?;
        }
        None => w.write_all(&[0])?,
    }
    let meta = match g.metadata() {
        Some(m) => toml::to_string(m).map_err(|e| Error::Format(e.to_string()))?,
        None => String::new(),
    };
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    Ok(())
}

pub fn read_green<R: Read>(mut r: R) -> Result<GreenOperator> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a Green-operator container".into()));
    }
    let version = read_u16(&mut r)?;
    if version != GREEN_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported Green container version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let grid = TimeGrid::new(n, read_f64(&mut r)?, read_f64(&mut r)?)?;
    let matrix = read_matrix(&mut r, n, n)?;
    let rank = read_u64(&mut r)? as usize;
    if rank > n {
        return Err(Error::Format(format!("rank {rank} exceeds grid size {n}")));
    }
    let s: Vec<f64> = (0..rank).map(|_| read_f64(&mut r)).collect::<Result<_>>()?;
    let input = read_matrix(&mut r, n, rank)?;
    let output = read_matrix(&mut r, n, rank)?;
    let factors = if read_flag(&mut r)? {
        let nz = read_u64(&mut r)? as usize;
        Some(GreenFactors {
            read_in: read_matrix(&mut r, nz, n)?,
            read_out: read_matrix(&mut r, n, nz)?,
        })
    } else {
        None
    };
    let residual = if read_flag(&mut r)? { Some(read_f64(&mut r)?) } else { None };
    let len = read_u64(&mut r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    let metadata = if len == 0 {
        None
    } else {
        let text = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
        Some(toml::from_str::<GreenMetadata>(&text).map_err(|e| Error::Format(e.to_string()))?)
    };
    let mut g = GreenOperator::from_stored(grid, matrix, s, input, output, factors);
    set_metadata(&mut g, metadata, residual);
    Ok(g)
}

fn read_flag<R: Read>(r: &mut R) -> Result<bool> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    match b[0] {
        0 => Ok(false),
        1 => Ok(true),
        x => Err(Error::Format(format!("bad flag byte {x}"))),
    }
}

pub fn save_green(g: &GreenOperator, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_green(g, std::io::BufWriter::new(f))
}

pub fn load_green(path: impl AsRef<Path>) -> Result<GreenOperator> {
    let f = std::fs::File::open(path)?;
    read_green(std::io::BufReader::new(f))
}
