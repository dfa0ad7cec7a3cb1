//! `CSC1` data-cube files.
//!
//! Layout (little-endian): 32-byte header holding the magic `CSC1`, format
//! version, N, L and M as `u32`, then 12 zero bytes; followed by M·N·L
//! complex samples as interleaved `(re, im)` `f64` pairs, ordered by range
//! cell, then element, then pulse.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::error::{Result, StapError};
use crate::scalar::Real;
use crate::scene::DataCube;
use crate::steering::ArrayGeometry;

pub const MAGIC: &[u8; 4] = b"CSC1";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

/// Header fields of a cube file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeHeader {
    pub version: u32,
    pub n_elements: u32,
    pub n_pulses: u32,
    pub n_range_cells: u32,
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| StapError::Format(format!("{what} = {v} does not fit in u32")))
}

pub fn encode_header(header: &CubeHeader) -> [u8; HEADER_LEN] {
    let mut buf = [0u8; HEADER_LEN];
    buf[0..4].copy_from_slice(MAGIC);
    buf[4..8].copy_from_slice(&header.version.to_le_bytes());
    buf[8..12].copy_from_slice(&header.n_elements.to_le_bytes());
    buf[12..16].copy_from_slice(&header.n_pulses.to_le_bytes());
    buf[16..20].copy_from_slice(&header.n_range_cells.to_le_bytes());
    buf
}

pub fn decode_header(buf: &[u8; HEADER_LEN]) -> Result<CubeHeader> {
    if &buf[0..4] != MAGIC {
        return Err(StapError::Format("missing CSC1 magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
    let header = CubeHeader {
        version: word(4),
        n_elements: word(8),
        n_pulses: word(12),
        n_range_cells: word(16),
    };
    if header.version != FORMAT_VERSION {
        return Err(StapError::Format(format!("unsupported CSC1 version {}", header.version)));
    }
    if buf[20..32].iter().any(|&b| b != 0) {
        return Err(StapError::Format("reserved header bytes are not zero".into()));
    }
    Ok(header)
}

pub fn write_cube<T: Real, W: Write>(cube: &DataCube<T>, mut out: W) -> Result<()> {
    let header = CubeHeader {
        version: FORMAT_VERSION,
        n_elements: to_u32(cube.geometry.n_elements, "N")?,
        n_pulses: to_u32(cube.geometry.n_pulses, "L")?,
        n_range_cells: to_u32(cube.snapshots.len(), "M")?,
    };
    out.write_all(&encode_header(&header))?;
    let mut buf = Vec::with_capacity(cube.geometry.snapshot_len() * 16);
    for snap in &cube.snapshots {
        buf.clear();
        for z in snap {
            buf.extend_from_slice(&z.re.as_f64().to_le_bytes());
            buf.extend_from_slice(&z.im.as_f64().to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a cube. The file does not carry element spacing, so the caller
/// supplies it.
pub fn read_cube<T: Real, R: Read>(mut input: R, element_spacing_wavelengths: f64) -> Result<DataCube<T>> {
    let mut hb = [0u8; HEADER_LEN];
    input
        .read_exact(&mut hb)
        .map_err(|e| StapError::Format(format!("truncated CSC1 header: {e}")))?;
    let header = decode_header(&hb)?;
    let geometry = ArrayGeometry::new(
        header.n_elements as usize,
        header.n_pulses as usize,
        element_spacing_wavelengths,
    )?;
    let len = geometry.snapshot_len();
    let mut raw = vec![0u8; len * 16];
    let mut snapshots = Vec::with_capacity(header.n_range_cells as usize);
    for cell in 0..header.n_range_cells {
        input
            .read_exact(&mut raw)
            .map_err(|e| StapError::Format(format!("truncated CSC1 payload at range cell {cell}: {e}")))?;
        let snap = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
                Complex::new(T::of(re), T::of(im))
            })
            .collect();
        snapshots.push(snap);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(StapError::Format("unexpected bytes after CSC1 payload".into()));
    }
    DataCube::new(geometry, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{mountaintop_analog_preset, synthesize_cube};

    #[test]
    fn header_layout_is_exact() {
        let h = CubeHeader {
            version: 1,
            n_elements: 14,
            n_pulses: 16,
            n_range_cells: 100,
        };
        let b = encode_header(&h);
        assert_eq!(&b[..4], b"CSC1");
        assert_eq!(b[4..8], [1, 0, 0, 0]);
        assert_eq!(b[8..12], [14, 0, 0, 0]);
        assert_eq!(b[12..16], [16, 0, 0, 0]);
        assert_eq!(b[16..20], [100, 0, 0, 0]);
        assert!(b[20..].iter().all(|&x| x == 0));
        assert_eq!(decode_header(&b).unwrap(), h);
    }

    #[test]
    fn payload_order_and_encoding() {
        let g = ArrayGeometry::half_wavelength(1, 2).unwrap();
        let cube = DataCube::new(
            g,
            vec![vec![Complex::new(1.0, -2.0), Complex::new(0.5, 0.0)]],
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_cube(&cube, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 32 + 2 * 16);
        assert_eq!(bytes[32..40], 1.0f64.to_le_bytes());
        assert_eq!(bytes[40..48], (-2.0f64).to_le_bytes());
        assert_eq!(bytes[48..56], 0.5f64.to_le_bytes());
    }

    #[test]
    fn round_trip_preserves_cube() {
        let cfg = mountaintop_analog_preset(30.0, 10.0).with_seed(4);
        let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
        let mut bytes = Vec::new();
        write_cube(&cube, &mut bytes).unwrap();
        let back: DataCube<f64> = read_cube(bytes.as_slice(), 0.5).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn rejects_corrupt_files() {
        let mut bad = encode_header(&CubeHeader {
            version: 1,
            n_elements: 1,
            n_pulses: 1,
            n_range_cells: 2,
        })
        .to_vec();
        bad.extend_from_slice(&[0u8; 16]);
        assert!(read_cube::<f64, _>(bad.as_slice(), 0.5).is_err());
        let mut magic = bad.clone();
        magic[0] = b'X';
        assert!(read_cube::<f64, _>(magic.as_slice(), 0.5).is_err());
        let mut reserved = encode_header(&CubeHeader {
            version: 1,
            n_elements: 1,
            n_pulses: 1,
            n_range_cells: 0,
        });
        reserved[25] = 1;
        assert!(decode_header(&reserved).is_err());
    }
}
