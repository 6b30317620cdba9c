//! CIFAR-10 binary batch reader: 3073-byte records (1 label byte, then
//! 3 x 32 x 32 pixel bytes, plane-major R, G, B).

use std::fs;
use std::path::Path;

use gemst_core::tensor::{DenseTensor, TensorShape};

use crate::error::{Error, Result};

pub const SIDE: usize = 32;
pub const RECORD_BYTES: usize = 1 + 3 * SIDE * SIDE;

#[derive(Debug)]
pub struct CifarRecord {
    pub label: u8,
    /// Plane-major pixels as read (R plane, G plane, B plane).
    pub pixels: Vec<u8>,
}

/// Read a batch file; the byte length must be an exact multiple of the
/// record size.
pub fn read_batch(path: &Path) -> Result<Vec<CifarRecord>> {
    let bytes = fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if bytes.is_empty() || bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::Input(format!(
            "{}: {} bytes is not a whole number of {RECORD_BYTES}-byte records",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(RECORD_BYTES)
        .map(|r| CifarRecord {
            label: r[0],
            pixels: r[1..].to_vec(),
        })
        .collect())
}

/// Convert up to `limit` records to an image batch `(1, B, side, side, 3)`
/// in `[0, 1]`, resized from 32x32 by nearest neighbor (source index
/// `floor(dst * 32 / side)`), chosen for determinism.
pub fn to_tensor(records: &[CifarRecord], side: usize, limit: usize) -> Result<DenseTensor> {
    let b = records.len().min(limit);
    if b == 0 {
        return Err(Error::Input("no CIFAR records to convert".into()));
    }
    let shape = TensorShape::new(1, b, side, side, 3)
        .map_err(|e| Error::Input(e.to_string()))?;
    let mut out = DenseTensor::zeros(shape);
    for (bi, rec) in records.iter().take(b).enumerate() {
        for y in 0..side {
            let sy = y * SIDE / side;
            for x in 0..side {
                let sx = x * SIDE / side;
                for c in 0..3 {
                    let v = rec.pixels[c * SIDE * SIDE + sy * SIDE + sx] as f64 / 255.0;
                    out.set(0, bi, y, x, c, v);
                }
            }
        }
    }
    Ok(out)
}
