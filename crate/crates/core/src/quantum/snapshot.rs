use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::lattice::LatticeSlice;
use super::state::{FullGridState, ZGrid};

const FORMAT: &str = "vardiff-state";
const VERSION: u32 = 1;

/// First line of a snapshot file. The amplitudes follow as little-endian
/// `f64` pairs `(re, im)` in flat-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub shape: Vec<usize>,
    pub tau_step: f64,
    pub grid: ZGrid,
    pub slice: LatticeSlice,
}

pub fn write_snapshot(mut w: impl Write, state: &FullGridState) -> Result<()> {
    let header = SnapshotHeader {
        format: FORMAT.into(),
        version: VERSION,
        shape: vec![state.grid.points; state.sites()],
        tau_step: state.slice.tau_step,
        grid: state.grid,
        slice: state.slice.clone(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * state.len());
    for v in &state.psi {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(r: impl Read) -> Result<FullGridState> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end()).map_err(|e| Error::Io(e.to_string()))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Io(format!(
            "unsupported snapshot {} v{}",
            header.format, header.version
        )));
    }
    let len: usize = header.shape.iter().product();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * len {
        return Err(Error::Io(format!(
            "snapshot payload has {} bytes, expected {}",
            bytes.len(),
            16 * len
        )));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8-byte chunk"));
    let psi = (0..len).map(|k| Complex64::new(f(2 * k), f(2 * k + 1))).collect();
    FullGridState::new(header.slice, header.grid, psi)
}

pub fn save_snapshot(path: impl AsRef<Path>, state: &FullGridState) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot(&mut w, state)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<FullGridState> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PolynomialPotential;

    #[test]
    fn round_trip_is_bitwise() {
        let slice = LatticeSlice::flat(2, 0.5, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let st = FullGridState::from_fn(slice, ZGrid::new(9, 2.0).unwrap(), |z| {
            Complex64::new(z[0].sin(), z[1] * 0.1 + 1e-300)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &st).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, st);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let st = FullGridState::from_fn(slice, ZGrid::new(8, 2.0).unwrap(), |_| Complex64::new(1.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &st).unwrap();
        buf.pop();
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Io(_))));
    }
}
