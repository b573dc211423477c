//! `DSC1` descriptor matrices: magic, u32 count, u32 dim, then count x dim
//! little-endian f32 values, row-major.

use std::path::Path;

use super::{checked_u32, open, put_f32s, write_bytes, LeReader};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DSC1";

pub fn write_descriptors(path: &Path, dim: usize, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = Vec::with_capacity(12 + rows.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&checked_u32(path, "count", rows.len())?.to_le_bytes());
    out.extend_from_slice(&checked_u32(path, "dim", dim)?.to_le_bytes());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::format(path, format!("row {i} has {} values, expected {dim}", r.len())));
        }
        put_f32s(&mut out, r.iter().map(|&v| v as f32));
    }
    write_bytes(path, &out)
}

/// Returns `(dim, rows)`.
pub fn read_descriptors(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut r = LeReader::new(open(path)?, path);
    r.magic(MAGIC)?;
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let values = r.f32s(count * dim)?;
    r.end()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path, "non-finite descriptor value"));
    }
    let rows = if dim == 0 {
        vec![Vec::new(); count]
    } else {
        values.chunks_exact(dim).map(|c| c.iter().map(|&v| v as f64).collect()).collect()
    };
    Ok((dim, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dsc");
        let rows = vec![vec![0.5, -1.0, 0.25], vec![1.0, 2.0, 3.0]];
        write_descriptors(&path, 3, &rows).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"DSC1");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &0.5f32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 6 * 4);
        assert_eq!(read_descriptors(&path).unwrap(), (3, rows));
    }

    #[test]
    fn truncated_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dsc");
        std::fs::write(&path, b"DSC1\x01\x00\x00\x00\x02\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(read_descriptors(&path), Err(Error::Format { .. })));
        std::fs::write(&path, b"XXXX\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(read_descriptors(&path), Err(Error::Format { .. })));
    }
}
