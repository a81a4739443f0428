//! CIFAR binary batches: 3073-byte records, one label byte then 3072 channel-major pixels.

use std::fs;
use std::path::PathBuf;

use crate::{Dataset, Error, Result, Tensor};

pub const RECORD_BYTES: usize = 1 + 3 * 32 * 32;

pub fn parse_cifar(bytes: &[u8], classes: usize, data: &mut Vec<f64>, labels: &mut Vec<usize>) -> Result<()> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        let whole = bytes.len() / RECORD_BYTES * RECORD_BYTES;
        return Err(Error::Parse { offset: whole, message: format!("trailing partial record of {} bytes", bytes.len() - whole) });
    }
    for (r, record) in bytes.chunks(RECORD_BYTES).enumerate() {
        let label = record[0] as usize;
        if label >= classes {
            return Err(Error::Parse { offset: r * RECORD_BYTES, message: format!("label {label} outside {classes} classes") });
        }
        labels.push(label);
        data.extend(record[1..].iter().map(|&p| f64::from(p) / 255.0));
    }
    Ok(())
}

/// Concatenates one or more batch files into `(3, 32, 32)` samples.
pub fn load_cifar(files: &[PathBuf], classes: usize) -> Result<Dataset> {
    let (mut data, mut labels) = (Vec::new(), Vec::new());
    for f in files {
        let bytes = fs::read(f)?;
        parse_cifar(&bytes, classes, &mut data, &mut labels).map_err(|e| match e {
            Error::Parse { offset, message } => Error::Parse { offset, message: format!("{}: {message}", f.display()) },
            other => other,
        })?;
    }
    let n = labels.len();
    Dataset::new(Tensor::new(vec![n, 3, 32, 32], data)?, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records() {
        let mut bytes = vec![0u8; 2 * RECORD_BYTES];
        bytes[0] = 3;
        bytes[RECORD_BYTES] = 9;
        bytes[1] = 255;
        let (mut d, mut l) = (Vec::new(), Vec::new());
        parse_cifar(&bytes, 10, &mut d, &mut l).unwrap();
        assert_eq!(l, vec![3, 9]);
        assert_eq!(d.len(), 2 * 3072);
        assert_eq!(d[0], 1.0);
        assert!(parse_cifar(&bytes[..100], 10, &mut d, &mut l).is_err());
    }
}
