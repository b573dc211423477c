//! `LSH1` index files: magic, u32 H, u32 D, u32 N, u64 seed, H x D
//! little-endian f32 hyperplanes, then one bit-packed code of ceil(H/8) bytes
//! per row (bit `h` at byte `h / 8`, bit `h % 8`). Row `i` belongs to the
//! `i`-th reference scene; the file does not store scene indices.

use std::path::Path;

use dsi3d_core::descindex::LshIndex;

use super::{checked_u32, open, put_f32s, write_bytes, LeReader};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LSH1";

pub fn write_lsh(path: &Path, index: &LshIndex) -> Result<()> {
    let (h, d, n) = (index.bits(), index.dim(), index.len());
    let code_bytes = h.div_ceil(8);
    let mut out = Vec::with_capacity(24 + h * d * 4 + n * (8 + code_bytes));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&checked_u32(path, "H", h)?.to_le_bytes());
    out.extend_from_slice(&checked_u32(path, "D", d)?.to_le_bytes());
    out.extend_from_slice(&checked_u32(path, "N", n)?.to_le_bytes());
    out.extend_from_slice(&index.seed().to_le_bytes());
    put_f32s(&mut out, index.hyperplanes().iter().copied());
    for row in 0..n {
        let bytes: Vec<u8> = index.code(row).iter().flat_map(|w| w.to_le_bytes()).collect();
        out.extend_from_slice(&bytes[..code_bytes]);
    }
    write_bytes(path, &out)
}

/// Reads an index whose rows belong to the scenes `ids`, in order.
pub fn read_lsh(path: &Path, ids: Vec<usize>) -> Result<LshIndex> {
    let mut r = LeReader::new(open(path)?, path);
    r.magic(MAGIC)?;
    let h = r.u32()? as usize;
    let d = r.u32()? as usize;
    let n = r.u32()? as usize;
    let seed = r.u64()?;
    let hyperplanes = r.f32s(h * d)?;
    if ids.len() != n {
        return Err(Error::format(path, format!("index has {n} rows but {} reference scenes were given", ids.len())));
    }
    let code_bytes = h.div_ceil(8);
    let words = h.div_ceil(64);
    let mut codes = Vec::with_capacity(n * words);
    for _ in 0..n {
        let mut raw = r.raw(code_bytes)?;
        raw.resize(words * 8, 0);
        codes.extend(raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk"))));
    }
    r.end()?;
    LshIndex::from_parts(h, d, seed, hyperplanes, codes, ids).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsi3d_core::descindex::{lsh_build, DescriptorMatrix};

    #[test]
    fn round_trip_and_layout() {
        let mut m = DescriptorMatrix::new(3);
        for i in 0..5 {
            m.push(10 + i, &[i as f64 - 2.0, 1.0, (i * i) as f64 * 0.1 - 0.5]).unwrap();
        }
        let idx = lsh_build(&m, 70, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.lsh");
        write_lsh(&path, &idx).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"LSH1");
        assert_eq!(&bytes[4..16], &[70, 0, 0, 0, 3, 0, 0, 0, 5, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &42u64.to_le_bytes());
        assert_eq!(bytes.len(), 24 + 70 * 3 * 4 + 5 * 9);
        assert_eq!(read_lsh(&path, idx.ids().to_vec()).unwrap(), idx);
        assert!(read_lsh(&path, vec![1, 2]).is_err());
    }
}
