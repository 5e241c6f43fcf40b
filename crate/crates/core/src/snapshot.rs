//! Binary field snapshots.
//!
//! Little-endian layout: magic `PMEF`, `u32` version, `u32` dimension,
//! `u32` cells per axis, `f64` half-width, `f64` time, `f64` exponent
//! (0 when not tied to one), then the cell values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

pub const MAGIC: &[u8; 4] = b"PMEF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 3 * 4 + 3 * 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub m: f64,
    pub field: ScalarField,
}

pub fn encode(snapshot: &Snapshot) -> Vec<u8> {
    let grid = snapshot.field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.cells() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&snapshot.t.to_le_bytes());
    out.extend_from_slice(&snapshot.m.to_le_bytes());
    for v in snapshot.field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "snapshot too short: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let grid = GridSpec::new(u32_at(8) as usize, f64_at(16), u32_at(12) as usize)?;
    let (t, m) = (f64_at(24), f64_at(32));
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "snapshot body holds {} bytes, expected {}",
            body.len(),
            8 * grid.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Snapshot {
        t,
        m,
        field: ScalarField::from_values(grid, values)?,
    })
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    fs::write(path, encode(snapshot)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = GridSpec::new(2, 1.25, 8).unwrap();
        let field = ScalarField::from_fn(g, |x| (x[0] * 3.1).sin() * 1e-300 + x[1] / 7.0).unwrap();
        let snap = Snapshot {
            t: 0.1 + 0.2,
            m: 16.0,
            field,
        };
        let back = decode(&encode(&snap)).unwrap();
        assert_eq!(encode(&back), encode(&snap));
        for (a, b) in back.field.values().iter().zip(snap.field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::new(1, 2.0, 4).unwrap();
        let bytes = encode(&Snapshot {
            t: 0.5,
            m: 0.0,
            field: ScalarField::zeros(g),
        });
        assert_eq!(&bytes[..4], b"PMEF");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 1u32.to_le_bytes());
        assert_eq!(bytes[12..16], 4u32.to_le_bytes());
        assert_eq!(bytes.len(), 40 + 32);
    }

    #[test]
    fn rejects_corruption() {
        let g = GridSpec::new(1, 2.0, 4).unwrap();
        let mut bytes = encode(&Snapshot {
            t: 0.0,
            m: 2.0,
            field: ScalarField::zeros(g),
        });
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
    }
}
