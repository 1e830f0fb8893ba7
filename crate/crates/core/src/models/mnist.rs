//! IDX-format image/label reader (the MNIST distribution format).
//!
//! Big-endian headers: images carry magic `0x00000803` and dimensions
//! `[count, rows, cols]`, labels carry magic `0x00000801` and `[count]`.
//! Pixels are unsigned bytes, rescaled here to `[0, 1]`.

use std::fmt;
use std::io::Read;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Why an IDX stream was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxError {
    BadMagic { expected: u32, got: u32 },
    Truncated,
    CountMismatch { images: usize, labels: usize },
}

impl fmt::Display for IdxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdxError::BadMagic { expected, got } => {
                write!(
                    f,
                    "bad IDX magic: expected {expected:#010x}, got {got:#010x}"
                )
            }
            IdxError::Truncated => write!(f, "IDX stream ended before the declared payload"),
            IdxError::CountMismatch { images, labels } => {
                write!(f, "IDX count mismatch: {images} images vs {labels} labels")
            }
        }
    }
}

impl std::error::Error for IdxError {}

fn read_u32_be(reader: &mut impl Read) -> Result<u32, IdxError> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| IdxError::Truncated)?;
    Ok(u32::from_be_bytes(buf))
}

/// Parsed image payload: per-image pixel vectors and the `(rows, cols)` shape.
pub type IdxImages = (Vec<Vec<f64>>, (usize, usize));

/// Parse an IDX image stream into per-image pixel vectors scaled to `[0, 1]`.
pub fn load_idx_images(reader: &mut impl Read) -> Result<IdxImages, IdxError> {
    let magic = read_u32_be(reader)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            expected: IDX_IMAGES_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(reader)? as usize;
    let rows = read_u32_be(reader)? as usize;
    let cols = read_u32_be(reader)? as usize;
    let mut raw = vec![0u8; count * rows * cols];
    reader
        .read_exact(&mut raw)
        .map_err(|_| IdxError::Truncated)?;
    let images = raw
        .chunks_exact(rows * cols)
        .map(|px| px.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    Ok((images, (rows, cols)))
}

/// Parse an IDX label stream.
pub fn load_idx_labels(reader: &mut impl Read) -> Result<Vec<u8>, IdxError> {
    let magic = read_u32_be(reader)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            expected: IDX_LABELS_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(reader)? as usize;
    let mut labels = vec![0u8; count];
    reader
        .read_exact(&mut labels)
        .map_err(|_| IdxError::Truncated)?;
    Ok(labels)
}

/// A paired image/label dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistData {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub shape: (usize, usize),
}

impl MnistData {
    /// Parse both streams and check that the counts agree.
    pub fn from_idx(images: &mut impl Read, labels: &mut impl Read) -> Result<Self, IdxError> {
        let (images, shape) = load_idx_images(images)?;
        let labels = load_idx_labels(labels)?;
        if images.len() != labels.len() {
            return Err(IdxError::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        Ok(MnistData {
            images,
            labels,
            shape,
        })
    }

    /// Keep only the first `n` records.
    pub fn subsample(mut self, n: usize) -> Self {
        self.images.truncate(n);
        self.labels.truncate(n);
        self
    }

    /// Keep every `stride`-th pixel in each direction, reducing the feature
    /// count for desk-scale experiments.
    pub fn pixel_stride(mut self, stride: usize) -> Self {
        let stride = stride.max(1);
        let (rows, cols) = self.shape;
        let keep: Vec<usize> = (0..rows)
            .step_by(stride)
            .flat_map(|r| (0..cols).step_by(stride).map(move |c| r * cols + c))
            .collect();
        for img in &mut self.images {
            *img = keep.iter().map(|&j| img[j]).collect();
        }
        self.shape = (rows.div_ceil(stride), cols.div_ceil(stride));
        self
    }
}

/// Encode image/label IDX byte streams; used by tests and the ingest
/// round-trip check.
pub fn encode_idx_images(images: &[Vec<u8>], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

/// Encode a label IDX byte stream.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
