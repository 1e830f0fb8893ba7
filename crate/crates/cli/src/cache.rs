//! The tool's binary dataset cache, produced by `mnist-ingest`.
//!
//! Layout (little-endian): 8-byte magic `VGCACHE1`, u32 version, u64 count,
//! u64 rows, u64 cols, `count * rows * cols` f64 pixels in `[0, 1]`,
//! `count` u8 labels.

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

const MAGIC: &[u8; 8] = b"VGCACHE1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetCache {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl DatasetCache {
    pub fn feature_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut buf = Vec::with_capacity(
            8 + 4 + 24 + self.images.len() * self.feature_dim() * 8 + self.labels.len(),
        );
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.images.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for img in &self.images {
            for &px in img {
                buf.extend_from_slice(&px.to_le_bytes());
            }
        }
        buf.extend_from_slice(&self.labels);
        crate::output::ensure_parent(path)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path)?;
        let bad = |what: &str| CliError::Data(format!("cache file {}: {what}", path.display()));
        if bytes.len() < 36 || &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad("unsupported version"));
        }
        let read_u64 =
            |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
        let count = read_u64(12);
        let rows = read_u64(20);
        let cols = read_u64(28);
        let dim = rows * cols;
        let expected = 36 + count * dim * 8 + count;
        if bytes.len() != expected {
            return Err(bad("truncated payload"));
        }
        let mut images = Vec::with_capacity(count);
        let mut at = 36;
        for _ in 0..count {
            let mut img = Vec::with_capacity(dim);
            for _ in 0..dim {
                img.push(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()));
                at += 8;
            }
            images.push(img);
        }
        let labels = bytes[at..].to_vec();
        Ok(DatasetCache {
            rows,
            cols,
            images,
            labels,
        })
    }
}
