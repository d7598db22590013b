//! Loads Fashion-MNIST IDX files (plain or gzipped), normalizes them and
//! writes a checksummed dataset container, then reads it back.
//!
//! cargo run --release --example prepare_dataset -- data/fashion-mnist /tmp/fmnist.bin

use std::path::PathBuf;

use motifset::data::{load_cache, load_idx, normalize_01, save_cache, Dataset, PreprocessStep};

fn labels(l: &[u8]) -> Vec<usize> {
    l.iter().map(|&v| v as usize).collect()
}

fn main() -> motifset::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/fashion-mnist".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "fmnist.bin".into()));
    let train = load_idx(dir.join("train-images-idx3-ubyte.gz"), dir.join("train-labels-idx1-ubyte.gz"))?;
    let test = load_idx(dir.join("t10k-images-idx3-ubyte.gz"), dir.join("t10k-labels-idx1-ubyte.gz"))?;
    println!(
        "train {} x {}x{}, test {}",
        train.pixels.nrows(),
        train.image_rows,
        train.image_cols,
        test.pixels.nrows()
    );
    let mut ds = Dataset::from_parts(
        normalize_01(&train.pixels),
        &labels(&train.labels),
        normalize_01(&test.pixels),
        &labels(&test.labels),
        10,
    )?;
    ds.preprocessing.push(PreprocessStep::Normalize01);
    save_cache(&ds, &out)?;
    let back = load_cache(&out)?;
    println!(
        "{}: {}/{} x {}, identical after reload: {}",
        out.display(),
        back.x_train.nrows(),
        back.x_test.nrows(),
        back.n_features,
        back == ds
    );
    Ok(())
}
