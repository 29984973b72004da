//! Versioned binary container for [`ModeState`].
//!
//! Layout (little endian): magic `QBMS`, `u16` version, `u8` domain tag,
//! `u64` point count, `f64` grid start and end, then `n²` complex entries of
//! `ρ` in row-major order as `(re, im)` pairs.

use std::io::{Read, Write};
use std::path::Path;

use super::grid::TimeGrid;
use super::state::{Domain, ModeState};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;

const MAGIC: &[u8; 4] = b"QBMS";
pub const STATE_FORMAT_VERSION: u16 = 1;

pub fn write_state<W: Write>(state: &ModeState, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&STATE_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[match state.domain() {
        Domain::Time => 0u8,
        Domain::Frequency => 1u8,
    }])?;
    let g = state.grid();
    w.write_all(&(g.len() as u64).to_le_bytes())?;
    w.write_all(&g.t_start().to_le_bytes())?;
    w.write_all(&g.t_end().to_le_bytes())?;
    write_matrix(state.rho(), &mut w)?;
    Ok(())
}

pub fn read_state<R: Read>(mut r: R) -> Result<ModeState> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a mode-state container".into()));
    }
    let version = read_u16(&mut r)?;
    if version != STATE_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported state container version {version}")));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let domain = match tag[0] {
        0 => Domain::Time,
        1 => Domain::Frequency,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let n = read_u64(&mut r)? as usize;
    let grid = TimeGrid::new(n, read_f64(&mut r)?, read_f64(&mut r)?)?;
    let rho = read_matrix(&mut r, n, n)?;
    ModeState::from_parts(grid, domain, rho)
}

pub fn save_state(state: &ModeState, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_state(state, std::io::BufWriter::new(f))
}

pub fn load_state(path: impl AsRef<Path>) -> Result<ModeState> {
    let f = std::fs::File::open(path)?;
    read_state(std::io::BufReader::new(f))
}

pub(crate) fn write_matrix<W: Write>(m: &CMatrix, w: &mut W) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub(crate) fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

pub(crate) fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
