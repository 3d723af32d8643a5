//! IDX container: big-endian `u32` magic, one big-endian `u32` per dimension, raw bytes.

use gradconf::model::Dataset;
use std::path::{Path, PathBuf};

pub const LABELS_MAGIC: u32 = 2049;
pub const IMAGES_MAGIC: u32 = 2051;

#[derive(Debug, thiserror::Error)]
pub enum IdxError {
    #[error("{}: magic {found} where {expected} was expected", path.display())]
    MagicMismatch { path: PathBuf, expected: u32, found: u32 },
    #[error("{}: payload truncated, {actual} bytes where {expected} were declared", path.display())]
    Truncated { path: PathBuf, expected: usize, actual: usize },
    #[error("{}: {extra} bytes beyond the declared payload", path.display())]
    TrailingBytes { path: PathBuf, extra: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] gradconf::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// Parses an unsigned-byte IDX tensor whose magic must equal `expected`.
pub fn parse_idx(bytes: &[u8], expected: u32, path: &Path) -> Result<IdxTensor, IdxError> {
    let truncated = |need: usize| IdxError::Truncated { path: path.to_path_buf(), expected: need, actual: bytes.len() };
    let magic = be_u32(bytes, 0).ok_or_else(|| truncated(4))?;
    if magic != expected {
        return Err(IdxError::MagicMismatch { path: path.to_path_buf(), expected, found: magic });
    }
    // the low byte of the magic is the number of dimensions
    let ndims = (magic & 0xff) as usize;
    let header = 4 + 4 * ndims;
    let dims = (0..ndims)
        .map(|k| be_u32(bytes, 4 + 4 * k).map(|v| v as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| truncated(header))?;
    let payload: usize = dims.iter().product();
    let total = header + payload;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    if bytes.len() > total {
        return Err(IdxError::TrailingBytes { path: path.to_path_buf(), extra: bytes.len() - total });
    }
    Ok(IdxTensor { magic, dims, data: bytes[header..].to_vec() })
}

pub fn read_idx(path: &Path, expected: u32) -> Result<IdxTensor, IdxError> {
    let bytes = std::fs::read(path).map_err(|source| IdxError::Io { path: path.to_path_buf(), source })?;
    parse_idx(&bytes, expected, path)
}

/// `+1` for even digits, `−1` for odd ones.
pub fn parity_label(digit: u8) -> f64 {
    if digit.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Raw digits plus the unit-norm dataset with parity labels.
#[derive(Debug, Clone)]
pub struct IdxDataset {
    pub digits: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
    pub data: Dataset,
}

/// Loads an image/label pair, keeping the first `limit` records when given.
///
/// Pixels are scaled to `[0, 1]` and each image to unit Euclidean norm; a blank
/// image stays the zero vector.
pub fn load_idx(images: &Path, labels: &Path, limit: Option<usize>) -> Result<IdxDataset, IdxError> {
    let img = read_idx(images, IMAGES_MAGIC)?;
    let lab = read_idx(labels, LABELS_MAGIC)?;
    let (count, rows, cols) = (img.dims[0], img.dims[1], img.dims[2]);
    if count != lab.dims[0] {
        return Err(IdxError::CountMismatch { images: count, labels: lab.dims[0] });
    }
    let keep = limit.map_or(count, |l| l.min(count));
    let pixels = rows * cols;
    let mut inputs = Vec::with_capacity(keep);
    for chunk in img.data.chunks_exact(pixels.max(1)).take(keep) {
        let mut x: Vec<f64> = chunk.iter().map(|&p| p as f64 / 255.0).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        } else {
            log::warn!("blank image kept as the zero vector");
        }
        inputs.push(x);
    }
    let digits: Vec<u8> = lab.data[..keep].to_vec();
    let ys = digits.iter().map(|&d| parity_label(d)).collect();
    Ok(IdxDataset { digits, rows, cols, data: Dataset::new(inputs, ys)? })
}

/// Serializes an unsigned-byte tensor, the inverse of [`parse_idx`].
pub fn encode_idx(magic: u32, dims: &[usize], data: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for &d in dims {
        out.extend((d as u32).to_be_bytes());
    }
    out.extend_from_slice(data);
    out
}
