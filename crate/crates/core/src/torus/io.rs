//! TCF1 field files.
//!
//! Layout (all little-endian):
//!
//! | offset | type    | content                                        |
//! |--------|---------|------------------------------------------------|
//! | 0      | [u8; 4] | magic `b"TCF1"`                                |
//! | 4      | u32     | dim (1 or 2)                                   |
//! | 8      | u32     | Nx                                             |
//! | 12     | u32     | Ny                                             |
//! | 16     | f64     | A                                              |
//! | 24     | f64     | B                                              |
//! | 32     | u32     | domain: 0 = grid values, 1 = Fourier coefficients |
//! | 36..64 |         | zero padding                                   |
//! | 64     | f64 × 2 | `(re, im)` pairs, `Nx·Ny` of them, index `ix·Ny + iy` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::field::{FieldRole, FourierField, SpatialField, C64};
use super::{Torus, TorusGeometry};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TCF1";
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Grid,
    Fourier,
}

pub fn write_raw<W: Write>(mut w: W, g: &TorusGeometry, domain: Domain, values: &[C64]) -> Result<()> {
    if values.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            got: values.len(),
        });
    }
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&g.dim.to_le_bytes());
    header[8..12].copy_from_slice(&(g.nx as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(g.ny as u32).to_le_bytes());
    header[16..24].copy_from_slice(&g.a.to_le_bytes());
    header[24..32].copy_from_slice(&g.b.to_le_bytes());
    let tag: u32 = match domain {
        Domain::Grid => 0,
        Domain::Fourier => 1,
    };
    header[32..36].copy_from_slice(&tag.to_le_bytes());
    w.write_all(&header)?;
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> Result<(TorusGeometry, Domain, Vec<C64>)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &header[0..4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let g = TorusGeometry {
        dim: u32_at(4),
        nx: u32_at(8) as usize,
        ny: u32_at(12) as usize,
        a: f64_at(16),
        b: f64_at(24),
    };
    g.validate()
        .map_err(|e| Error::Format(format!("header geometry rejected: {e}")))?;
    let domain = match u32_at(32) {
        0 => Domain::Grid,
        1 => Domain::Fourier,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 16 * g.len() {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {}",
            body.len(),
            16 * g.len()
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok((g, domain, values))
}

pub fn save_spatial(path: impl AsRef<Path>, field: &SpatialField) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    write_raw(w, field.geometry(), Domain::Grid, field.values())
}

pub fn save_fourier(path: impl AsRef<Path>, field: &FourierField) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    write_raw(w, field.geometry(), Domain::Fourier, field.coeffs())
}

/// Loads a grid field; Fourier payloads are transformed back to the grid.
pub fn load_spatial(path: impl AsRef<Path>, role: FieldRole) -> Result<SpatialField> {
    let (g, domain, values) = read_raw(BufReader::new(File::open(path)?))?;
    let torus = Torus::new(g)?;
    match domain {
        Domain::Grid => SpatialField::new(torus, values, role),
        Domain::Fourier => Ok(FourierField::new(torus, values)?.to_spatial(role)),
    }
}

/// Loads a field onto an existing torus, checking the header geometry.
pub fn load_spatial_on(path: impl AsRef<Path>, torus: &Arc<Torus>, role: FieldRole) -> Result<SpatialField> {
    let field = load_spatial(path, role)?;
    if field.geometry() != torus.geometry() {
        return Err(Error::Format(format!(
            "file geometry {:?} does not match {:?}",
            field.geometry(),
            torus.geometry()
        )));
    }
    SpatialField::new(torus.clone(), field.into_values(), role)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_bit_exact() {
        let g = TorusGeometry::new_2d(4, 2, 1.5, 2.5).unwrap();
        let values: Vec<C64> = (0..8).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let mut buf = Vec::new();
        write_raw(&mut buf, &g, Domain::Grid, &values).unwrap();
        assert_eq!(buf.len(), 64 + 16 * 8);
        assert_eq!(&buf[0..4], b"TCF1");
        assert_eq!(buf[4..8], 2u32.to_le_bytes());
        assert_eq!(buf[8..12], 4u32.to_le_bytes());
        assert_eq!(buf[12..16], 2u32.to_le_bytes());
        assert_eq!(buf[16..24], 1.5f64.to_le_bytes());
        assert_eq!(buf[24..32], 2.5f64.to_le_bytes());
        assert!(buf[32..64].iter().all(|&b| b == 0));
        // third value (ix=1, iy=0) sits at 64 + 2*16
        assert_eq!(buf[96..104], 2f64.to_le_bytes());
        assert_eq!(buf[104..112], (-2f64).to_le_bytes());
        let (g2, d, v2) = read_raw(&buf[..]).unwrap();
        assert_eq!(g2, g);
        assert_eq!(d, Domain::Grid);
        assert_eq!(v2, values);
    }

    #[test]
    fn loader_rejects_corruption() {
        let g = TorusGeometry::new_2d(2, 2, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_raw(&mut buf, &g, Domain::Grid, &[C64::new(1.0, 0.0); 4]).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_raw(&bad_magic[..]), Err(Error::Format(_))));

        let mut odd_grid = buf.clone();
        odd_grid[8..12].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(read_raw(&odd_grid[..]), Err(Error::Format(_))));

        let truncated = &buf[..buf.len() - 8];
        assert!(matches!(read_raw(truncated), Err(Error::Format(_))));

        assert!(matches!(read_raw(&buf[..10]), Err(Error::Format(_))));
    }
}
