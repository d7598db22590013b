//! IDX reader (the MNIST-family container): big-endian `u32` magic and
//! dimensions followed by raw bytes. Files ending in `.gz` are inflated first.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::Array2;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images flattened to one row per sample, with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxSamples {
    pub pixels: Array2<u8>,
    pub labels: Vec<u8>,
    pub image_rows: usize,
    pub image_cols: usize,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    let gz = path.extension().is_some_and(|e| e == "gz");
    let res = if gz {
        GzDecoder::new(BufReader::new(file)).read_to_end(&mut bytes)
    } else {
        BufReader::new(file).read_to_end(&mut bytes)
    };
    res.map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("{what}: header ends at byte {}", bytes.len())))
}

/// Parses an in-memory IDX image file into `(count, rows, cols, pixel bytes)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::MagicNumber {
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::TruncatedFile(format!(
            "images: expected {need} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok((count, rows, cols, &body[..need]))
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::MagicNumber {
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::TruncatedFile(format!(
            "labels: expected {count} bytes, found {}",
            body.len()
        )));
    }
    Ok(&body[..count])
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<IdxSamples> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let image_bytes = read_file(ip)?;
    let label_bytes = read_file(lp)?;
    let (count, rows, cols, pixels) =
        parse_images(&image_bytes).map_err(|e| e.context(ip.display().to_string()))?;
    let labels = parse_labels(&label_bytes).map_err(|e| e.context(lp.display().to_string()))?;
    if labels.len() != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(IdxSamples {
        pixels: Array2::from_shape_vec((count, rows * cols), pixels.to_vec()).expect("sized above"),
        labels: labels.to_vec(),
        image_rows: rows,
        image_cols: cols,
    })
}

/// Serializes images in IDX layout (used for fixtures and round trips).
pub fn encode_images(pixels: &Array2<u8>, rows: usize, cols: usize) -> Vec<u8> {
    assert_eq!(rows * cols, pixels.ncols());
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, pixels.nrows() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(pixels.iter());
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
