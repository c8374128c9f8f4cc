//! Binary dump of a [`FieldSample`].
//!
//! Layout, all little-endian: 8-byte magic whose last byte tags the
//! construction, `n1: u64`, `n2: u64`, `q1: f64`, `q2: f64`, `seed: u64`,
//! then `n1 * n2` row-major `f64` values.

use std::io::{Read, Write};

use super::{Construction, FieldSample, GridSpec};
use crate::error::{Error, Result};

/// Magic prefix; the eighth byte carries the construction tag.
pub const FIELD_MAGIC: [u8; 7] = *b"GXFIELD";

fn tag(c: Construction) -> u8 {
    match c {
        Construction::Stationary => b'S',
        Construction::BlockIndependent => b'B',
        Construction::StrongMixture => b'M',
    }
}

pub fn write_field<W: Write>(mut w: W, f: &FieldSample) -> Result<()> {
    w.write_all(&FIELD_MAGIC)?;
    w.write_all(&[tag(f.construction)])?;
    w.write_all(&(f.grid.n1 as u64).to_le_bytes())?;
    w.write_all(&(f.grid.n2 as u64).to_le_bytes())?;
    w.write_all(&f.grid.q1.to_le_bytes())?;
    w.write_all(&f.grid.q2.to_le_bytes())?;
    w.write_all(&f.seed.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn word<R: Read>(r: &mut R) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldSample> {
    let magic = word(&mut r)?;
    if magic[..7] != FIELD_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let construction = match magic[7] {
        b'S' => Construction::Stationary,
        b'B' => Construction::BlockIndependent,
        b'M' => Construction::StrongMixture,
        t => return Err(Error::Format(format!("unknown construction tag {t}"))),
    };
    let n1 = u64::from_le_bytes(word(&mut r)?) as usize;
    let n2 = u64::from_le_bytes(word(&mut r)?) as usize;
    let q1 = f64::from_le_bytes(word(&mut r)?);
    let q2 = f64::from_le_bytes(word(&mut r)?);
    let seed = u64::from_le_bytes(word(&mut r)?);
    let grid = GridSpec::new(n1, n2, q1, q2).map_err(|e| Error::Format(e.to_string()))?;
    let len =
        n1.checked_mul(n2).and_then(|n| n.checked_mul(8)).ok_or_else(|| Error::Format("grid too large".into()))?;
    let mut bytes = Vec::new();
    r.take(len as u64 + 1).read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(Error::Format(format!("expected {len} value bytes, found {}", bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok(FieldSample { grid, values, seed, construction })
}
