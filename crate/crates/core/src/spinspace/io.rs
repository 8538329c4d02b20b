//! Binary state-vector format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"STPRVEC\0"
//! 8       4     format version (u32, currently 1)
//! 12      4     endianness tag 0x01020304 (u32)
//! 16      4     n_sites (u32)
//! 20      4     sector n_up (i32, -1 for the full space)
//! 24      8     dimension (u64)
//! 32      16*d  amplitudes in basis order, (re, im) as f64
//! ```
//!
//! All integers and floats are little-endian; the tag lets a reader detect a
//! byte-swapped file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::basis::SpinBasis;
use super::state::StateVector;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 8] = *b"STPRVEC\0";
pub const FORMAT_VERSION: u32 = 1;
pub const ENDIAN_TAG: u32 = 0x0102_0304;

pub fn write_state<S: Scalar, W: Write>(state: &StateVector<S>, mut w: W) -> Result<()> {
    let basis = state.basis();
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&ENDIAN_TAG.to_le_bytes())?;
    w.write_all(&(basis.n_sites() as u32).to_le_bytes())?;
    let sector = basis.n_up().map_or(-1i32, |k| k as i32);
    w.write_all(&sector.to_le_bytes())?;
    w.write_all(&(basis.dim() as u64).to_le_bytes())?;
    for a in state.amplitudes() {
        let z = a.to_complex();
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads a state; amplitudes are renormalized only if they drift by more
/// than 1e-10 (files written by [`write_state`] round-trip bitwise).
pub fn read_state<S: Scalar, R: Read>(mut r: R) -> Result<StateVector<S>> {
    if read_array::<8, _>(&mut r)? != MAGIC {
        return invalid("not a state-vector file (bad magic)");
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != FORMAT_VERSION {
        return invalid(format!("unsupported state-vector format version {version}"));
    }
    let tag = read_array::<4, _>(&mut r)?;
    if u32::from_le_bytes(tag) != ENDIAN_TAG {
        return invalid("endianness tag mismatch: file is not little-endian");
    }
    let n_sites = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let sector = i32::from_le_bytes(read_array(&mut r)?);
    let dim = u64::from_le_bytes(read_array(&mut r)?);
    let sector = match sector {
        -1 => None,
        k if k >= 0 => Some(k as usize),
        k => return invalid(format!("bad sector field {k}")),
    };
    let basis = SpinBasis::new(n_sites, sector)?;
    if basis.dim() as u64 != dim {
        return invalid(format!(
            "header dimension {dim} disagrees with basis dimension {}",
            basis.dim()
        ));
    }
    let mut amps = Vec::with_capacity(basis.dim());
    for i in 0..basis.dim() {
        let re = f64::from_le_bytes(read_array(&mut r)?);
        let im = f64::from_le_bytes(read_array(&mut r)?);
        let a = S::from_complex(Complex64::new(re, im)).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "amplitude {i} is complex but a real state was requested"
            ))
        })?;
        amps.push(a);
    }
    let basis = std::sync::Arc::new(basis);
    let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (n2 - 1.0).abs() > 1e-10 {
        return StateVector::new(basis, amps);
    }
    Ok(StateVector::from_normalized(basis, amps))
}

pub fn save_state<S: Scalar>(state: &StateVector<S>, path: impl AsRef<Path>) -> Result<()> {
    write_state(state, BufWriter::new(File::create(path)?))
}

pub fn load_state<S: Scalar>(path: impl AsRef<Path>) -> Result<StateVector<S>> {
    read_state(BufReader::new(File::open(path)?))
}
