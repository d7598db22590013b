//! Binary container for preprocessed datasets.
//!
//! ```text
//! magic      8 bytes "MOTIFDS\0"
//! version    u32 LE
//! checksum   32 bytes, SHA-256 of the payload
//! payload_len u64 LE
//! payload:
//!   n_features, n_classes, n_train, n_test          u64 LE each
//!   x_train (n_train * n_features f64 LE), train labels (n_train u32 LE)
//!   x_test  (n_test  * n_features f64 LE), test labels  (n_test  u32 LE)
//!   n_steps u64, then per step a tag u8:
//!     0 = normalize_01
//!     1 = standardize, followed by n_features means and n_features stds (f64 LE)
//! ```

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{Dataset, PreprocessStep, StandardScaler};

pub const CACHE_MAGIC: &[u8; 8] = b"MOTIFDS\0";
pub const CACHE_VERSION: u32 = 1;

fn write_payload(ds: &Dataset) -> std::io::Result<Vec<u8>> {
    let mut w = Vec::new();
    for v in [ds.n_features, ds.n_classes, ds.x_train.nrows(), ds.x_test.nrows()] {
        w.write_u64::<LittleEndian>(v as u64)?;
    }
    for (x, labels) in [(&ds.x_train, ds.train_labels()), (&ds.x_test, ds.test_labels())] {
        for &v in x.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
        for l in labels {
            w.write_u32::<LittleEndian>(l as u32)?;
        }
    }
    w.write_u64::<LittleEndian>(ds.preprocessing.len() as u64)?;
    for step in &ds.preprocessing {
        match step {
            PreprocessStep::Normalize01 => w.write_u8(0)?,
            PreprocessStep::Standardize(s) => {
                w.write_u8(1)?;
                for &v in s.mean.iter().chain(s.std.iter()) {
                    w.write_f64::<LittleEndian>(v)?;
                }
            }
        }
    }
    Ok(w)
}

pub fn save_cache(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let payload = write_payload(ds).expect("in-memory write");
    let mut out = Vec::with_capacity(payload.len() + 52);
    out.write_all(CACHE_MAGIC).unwrap();
    out.write_u32::<LittleEndian>(CACHE_VERSION).unwrap();
    out.write_all(&Sha256::digest(&payload)).unwrap();
    out.write_u64::<LittleEndian>(payload.len() as u64).unwrap();
    out.extend_from_slice(&payload);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.context(path.display().to_string()))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCache(msg.into())
}

fn decode(bytes: &[u8]) -> Result<Dataset> {
    let header = 8 + 4 + 32 + 8;
    if bytes.len() < header {
        return Err(corrupt("file shorter than header"));
    }
    if &bytes[..8] != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let checksum = &bytes[12..44];
    let len = u64::from_le_bytes(bytes[44..52].try_into().unwrap()) as usize;
    let payload = &bytes[header..];
    if payload.len() != len {
        return Err(corrupt(format!("payload length {} != recorded {len}", payload.len())));
    }
    if Sha256::digest(payload).as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Cursor::new(payload);
    let eof = |_| corrupt("payload ends early");
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        *d = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
    }
    let [n_features, n_classes, n_train, n_test] = dims;
    let mut read_split = |rows: usize| -> Result<(Array2<f64>, Vec<usize>)> {
        let count = rows
            .checked_mul(n_features)
            .filter(|&c| c * 8 <= payload.len())
            .ok_or_else(|| corrupt("implausible dimensions"))?;
        let mut x = vec![0.0; count];
        r.read_f64_into::<LittleEndian>(&mut x).map_err(eof)?;
        let mut labels = Vec::with_capacity(rows);
        for _ in 0..rows {
            labels.push(r.read_u32::<LittleEndian>().map_err(eof)? as usize);
        }
        Ok((Array2::from_shape_vec((rows, n_features), x).unwrap(), labels))
    };
    let (x_train, train_labels) = read_split(n_train)?;
    let (x_test, test_labels) = read_split(n_test)?;
    let mut ds = Dataset::from_parts(x_train, &train_labels, x_test, &test_labels, n_classes)?;
    let steps = r.read_u64::<LittleEndian>().map_err(eof)?;
    for _ in 0..steps {
        match r.read_u8().map_err(eof)? {
            0 => ds.preprocessing.push(PreprocessStep::Normalize01),
            1 => {
                let mut v = vec![0.0; 2 * n_features];
                r.read_f64_into::<LittleEndian>(&mut v).map_err(eof)?;
                let std = v.split_off(n_features);
                ds.preprocessing.push(PreprocessStep::Standardize(StandardScaler {
                    mean: Array1::from(v),
                    std: Array1::from(std),
                }));
            }
            t => return Err(corrupt(format!("unknown preprocessing tag {t}"))),
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(eof)?;
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(ds)
}
