//! The TPOF binary field format.
//!
//! Layout (all little-endian): magic `TPOF`, `u32` version (= 1), `u32`
//! `n_t, n_x, n_y, n_z, ncomp`, `f64` period and box length, then the samples
//! as `f64` in `(t, component, z, y, x)` order.

use std::io::{Read, Write};
use std::sync::Arc;

use super::field::Field;
use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TPOF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpofHeader {
    pub nt: u32,
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub ncomp: u32,
    pub period: f64,
    pub box_len: f64,
}

impl TpofHeader {
    pub fn sample_count(&self) -> usize {
        self.nt as usize * self.ncomp as usize * self.nx as usize * self.ny as usize * self.nz as usize
    }

    fn matches(&self, grid: &PeriodicGrid) -> Result<()> {
        let n = grid.n();
        let checks: [(&str, bool); 6] = [
            ("n_t", self.nt as usize == grid.nt()),
            ("n_x", self.nx as usize == n[0]),
            ("n_y", self.ny as usize == n[1]),
            ("n_z", self.nz as usize == n[2]),
            ("T", self.period == grid.period()),
            ("L", self.box_len == grid.box_len()),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::Format(format!("header field {name} does not match the grid")));
            }
        }
        Ok(())
    }
}

pub fn write_field<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let grid = field.grid();
    let n = grid.n();
    w.write_all(MAGIC)?;
    for v in [VERSION, grid.nt() as u32, n[0] as u32, n[1] as u32, n[2] as u32, field.ncomp() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&grid.period().to_le_bytes())?;
    w.write_all(&grid.box_len().to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.samples().len() * 8);
    for v in field.samples() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn field_to_bytes(field: &Field) -> Vec<u8> {
    let mut out = Vec::new();
    write_field(field, &mut out).expect("writing to memory");
    out
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated while reading {what}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads and validates the header and raw samples.
pub fn read_raw<R: Read>(mut r: R) -> Result<(TpofHeader, Vec<f64>)> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format("header field magic is not TPOF".into()));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("header field version is {version}, expected {VERSION}")));
    }
    let nt = read_u32(&mut r, "n_t")?;
    let nx = read_u32(&mut r, "n_x")?;
    let ny = read_u32(&mut r, "n_y")?;
    let nz = read_u32(&mut r, "n_z")?;
    let ncomp = read_u32(&mut r, "ncomp")?;
    let period = read_f64(&mut r, "T")?;
    let box_len = read_f64(&mut r, "L")?;
    let header = TpofHeader {
        nt,
        nx,
        ny,
        nz,
        ncomp,
        period,
        box_len,
    };
    for (name, v) in [("n_t", nt), ("n_x", nx), ("n_y", ny), ("n_z", nz)] {
        if v == 0 || v % 2 != 0 {
            return Err(Error::Format(format!("header field {name} = {v} is not a positive even count")));
        }
    }
    if ncomp != 1 && ncomp != 3 {
        return Err(Error::Format(format!("header field ncomp = {ncomp} must be 1 or 3")));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::Format(format!("header field T = {period} must be positive")));
    }
    if !(box_len > 0.0 && box_len.is_finite()) {
        return Err(Error::Format(format!("header field L = {box_len} must be positive")));
    }
    let count = header.sample_count();
    let mut bytes = vec![0u8; count * 8];
    read_exact(&mut r, &mut bytes, "samples")?;
    let samples = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    Ok((header, samples))
}

/// Reads a field onto an existing grid, checking that the header matches it.
pub fn read_field<R: Read>(r: R, grid: &Arc<PeriodicGrid>) -> Result<Field> {
    let (header, samples) = read_raw(r)?;
    header.matches(grid)?;
    Field::from_samples(grid, header.ncomp as usize, samples)
}

/// Reads a field and builds a spectral-backend grid from its header.
pub fn read_field_standalone<R: Read>(r: R) -> Result<Field> {
    let (h, samples) = read_raw(r)?;
    let grid = PeriodicGrid::spectral(
        h.period,
        h.nt as usize,
        [h.nx as usize, h.ny as usize, h.nz as usize],
        h.box_len,
    )
    .map_err(|e| Error::Format(e.to_string()))?
    .into_shared();
    Field::from_samples(&grid, h.ncomp as usize, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = PeriodicGrid::spectral(2.0, 2, [4, 4, 4], 3.0).unwrap().into_shared();
        let f = Field::from_fn(&g, 1, |t, x, o| o[0] = t + x[0]);
        let bytes = field_to_bytes(&f);
        assert_eq!(&bytes[0..4], b"TPOF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 3.0);
        assert_eq!(bytes.len(), 44 + 8 * 2 * 64);
        let back = read_field(bytes.as_slice(), &g).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_headers_name_the_field() {
        let g = PeriodicGrid::spectral(2.0, 2, [4, 4, 4], 3.0).unwrap().into_shared();
        let mut bytes = field_to_bytes(&Field::zeros(&g, 3));
        bytes[0] = b'X';
        let err = read_raw(bytes.as_slice()).unwrap_err().to_string();
        assert!(err.contains("magic"), "{err}");

        let mut bytes = field_to_bytes(&Field::zeros(&g, 3));
        bytes[4] = 7;
        assert!(read_raw(bytes.as_slice()).unwrap_err().to_string().contains("version"));

        let mut bytes = field_to_bytes(&Field::zeros(&g, 3));
        bytes[24] = 2;
        assert!(read_raw(bytes.as_slice()).unwrap_err().to_string().contains("ncomp"));

        let bytes = field_to_bytes(&Field::zeros(&g, 3));
        assert!(read_raw(&bytes[..30]).unwrap_err().to_string().contains("T"));
        assert!(read_raw(&bytes[..bytes.len() - 1]).unwrap_err().to_string().contains("samples"));
    }
}
