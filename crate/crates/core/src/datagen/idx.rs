//! IDX reader (the MNIST container format), optionally gzip-compressed.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images scaled to `[-1, 1]` with their digit labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitDataset {
    pub points: Tensor,
    pub digits: Vec<u8>,
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset: offset as u64,
            detail: "header truncated".into(),
        })
}

fn expect_magic(bytes: &[u8], want: u32) -> Result<()> {
    let got = be_u32(bytes, 0)?;
    if got != want {
        return Err(Error::Format {
            offset: 0,
            detail: format!("bad magic number {got:#010x}, expected {want:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    bytes.get(start..start + len).ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        detail: format!("payload truncated: need {len} bytes from offset {start}"),
    })
}

pub(crate) fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    expect_magic(bytes, IMAGES_MAGIC)?;
    let n = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let width = rows * cols;
    let pixels = payload(bytes, 16, n * width)?;
    let scaled = pixels.iter().map(|&p| f64::from(p) / 127.5 - 1.0).collect();
    Ok((n, width, scaled))
}

pub(crate) fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    expect_magic(bytes, LABELS_MAGIC)?;
    let n = be_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, n)?.to_vec())
}

/// Loads an IDX image/label file pair. Pixels map affinely from `0..=255`
/// onto `[-1, 1]`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<DigitDataset> {
    let (n, width, data) = parse_images(&read_maybe_gz(images_path.as_ref())?)?;
    let digits = parse_labels(&read_maybe_gz(labels_path.as_ref())?)?;
    if digits.len() != n {
        return Err(Error::Format {
            offset: 4,
            detail: format!("label file holds {} items, image file {n}", digits.len()),
        });
    }
    Ok(DigitDataset {
        points: Tensor::new(vec![n, width], data)?,
        digits,
    })
}

/// First `n_per_class` images of each digit, `pos_digit` labeled +1.
pub fn select_digit_pair(
    data: &DigitDataset,
    pos_digit: u8,
    neg_digit: u8,
    n_per_class: usize,
) -> Result<LabeledDataset> {
    if pos_digit == neg_digit {
        return Err(Error::param("positive and negative digits must differ"));
    }
    if n_per_class == 0 {
        return Err(Error::param("n_per_class must be >= 1"));
    }
    let pick = |digit: u8| -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..data.digits.len())
            .filter(|&i| data.digits[i] == digit)
            .take(n_per_class)
            .collect();
        if idx.len() < n_per_class {
            return Err(Error::param(format!(
                "digit {digit}: wanted {n_per_class} examples, found {}",
                idx.len()
            )));
        }
        Ok(idx)
    };
    let mut idx = pick(pos_digit)?;
    idx.extend(pick(neg_digit)?);
    let labels = (0..2 * n_per_class)
        .map(|i| if i < n_per_class { 1 } else { -1 })
        .collect();
    LabeledDataset::new(data.points.select_rows(&idx), labels)
}
