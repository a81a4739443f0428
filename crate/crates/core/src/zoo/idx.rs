//! Big-endian IDX files (the MNIST distribution format).

use std::fs;
use std::path::Path;

use crate::nncore::checkpoint::write_atomic;
use crate::{Dataset, Error, Result, Tensor};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| err(offset, "truncated header"))
}

/// Images as `(count, rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(err(0, format!("bad image magic {magic:#010x}")));
    }
    let n = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() < expected {
        return Err(err(bytes.len(), format!("payload truncated: expected {expected} bytes, found {}", bytes.len())));
    }
    Ok((n, rows, cols, bytes[16..expected].to_vec()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(err(0, format!("bad label magic {magic:#010x}")));
    }
    let n = read_u32(bytes, 4)? as usize;
    let expected = 8 + n;
    if bytes.len() < expected {
        return Err(err(bytes.len(), format!("payload truncated: expected {expected} bytes, found {}", bytes.len())));
    }
    Ok(bytes[8..expected].to_vec())
}

pub fn encode_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let n = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx(images_path: &Path, labels_path: &Path, rows: usize, cols: usize, pixels: &[u8], labels: &[u8]) -> Result<()> {
    write_atomic(images_path, &encode_images(rows, cols, pixels))?;
    write_atomic(labels_path, &encode_labels(labels))
}

/// Builds a dataset of `(1, rows, cols)` images scaled to `[0, 1]`.
pub fn dataset_from_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let (n, rows, cols, pixels) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if labels.len() != n {
        return Err(err(4, format!("{n} images but {} labels", labels.len())));
    }
    let classes = labels.iter().copied().max().map_or(1, |m| m as usize + 1).max(2);
    let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Dataset::new(Tensor::new(vec![n, 1, rows, cols], data)?, labels.iter().map(|&l| l as usize).collect(), classes)
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    dataset_from_idx(&fs::read(images_path)?, &fs::read(labels_path)?)
}
