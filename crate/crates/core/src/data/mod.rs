//! Dataset ingestion and preprocessing.

mod cache;
mod csv;
mod idx;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

pub use self::cache::{load_cache, save_cache, CACHE_MAGIC, CACHE_VERSION};
pub use self::csv::{load_labeled_csv, parse_labeled_csv, LabelColumn, LabeledMatrix};
pub use self::idx::{
    encode_images, encode_labels, load_idx, parse_images, parse_labels, IdxSamples, IMAGES_MAGIC,
    LABELS_MAGIC,
};

/// Standard deviations below this are replaced by it when standardizing.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature affine transform fitted on training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardScaler {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl StandardScaler {
    /// Population mean and (floored) standard deviation of every column.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut var = Array1::<f64>::zeros(x.ncols());
        for row in x.outer_iter() {
            for ((v, &xi), &m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                let d = xi - m;
                *v += d * d;
            }
        }
        let std = var.mapv(|v| (v / n).sqrt().max(STD_FLOOR));
        StandardScaler { mean, std }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(self.mean.iter()).zip(self.std.iter()) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Preprocessing applied to a dataset, in order.
#[derive(Clone, Debug, PartialEq)]
pub enum PreprocessStep {
    /// Byte features divided by 255.
    Normalize01,
    Standardize(StandardScaler),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array2<f64>,
    pub n_features: usize,
    pub n_classes: usize,
    pub preprocessing: Vec<PreprocessStep>,
}

impl Dataset {
    /// Assembles a dataset from feature matrices and integer labels.
    pub fn from_parts(
        x_train: Array2<f64>,
        train_labels: &[usize],
        x_test: Array2<f64>,
        test_labels: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
        }
        if x_train.ncols() != x_test.ncols() {
            return Err(Error::Shape {
                what: "test features",
                expected: x_train.ncols().to_string(),
                found: x_test.ncols().to_string(),
            });
        }
        if x_train.nrows() != train_labels.len() || x_test.nrows() != test_labels.len() {
            return Err(Error::CountMismatch {
                images: x_train.nrows() + x_test.nrows(),
                labels: train_labels.len() + test_labels.len(),
            });
        }
        Ok(Dataset {
            n_features: x_train.ncols(),
            n_classes,
            y_train: one_hot(train_labels, n_classes)?,
            y_test: one_hot(test_labels, n_classes)?,
            x_train,
            x_test,
            preprocessing: Vec::new(),
        })
    }

    /// Fits a scaler on the training rows and applies it to both splits.
    pub fn standardize(&mut self) {
        let (train, test, scaler) = standardize(self.x_train.view(), self.x_test.view());
        self.x_train = train;
        self.x_test = test;
        self.preprocessing.push(PreprocessStep::Standardize(scaler));
    }

    pub fn train_labels(&self) -> Vec<usize> {
        labels_of(self.y_train.view())
    }

    pub fn test_labels(&self) -> Vec<usize> {
        labels_of(self.y_test.view())
    }
}

/// Argmax of each one-hot row.
pub fn labels_of(y: ArrayView2<f64>) -> Vec<usize> {
    y.outer_iter()
        .map(|row| crate::network::argmax(row.iter().copied()))
        .collect()
}

/// Byte features scaled into `[0, 1]` by the exact divisor 255.
pub fn normalize_01(x: &Array2<u8>) -> Array2<f64> {
    x.mapv(|v| v as f64 / 255.0)
}

/// Z-scores both matrices with mean and std fitted on `train` only.
pub fn standardize(
    train: ArrayView2<f64>,
    test: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, StandardScaler) {
    let scaler = StandardScaler::fit(train);
    (scaler.transform(train), scaler.transform(test), scaler)
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((labels.len(), n_classes));
    for (i, &label) in labels.iter().enumerate() {
        if label >= n_classes {
            return Err(Error::OutOfRange {
                label,
                classes: n_classes,
            });
        }
        out[[i, label]] = 1.0;
    }
    Ok(out)
}

/// Seeded shuffle of `0..n`, then the first `floor(n * test_fraction)`
/// indices form the test set. Returns `(train, test)` index lists.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n_test = (n as f64 * test_fraction).floor() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::TooFewSamples {
            samples: n,
            fraction: test_fraction,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[rng::DOMAIN_SPLIT]));
    let train = idx.split_off(n_test);
    Ok((train, idx))
}

/// Splits features and labels into a dataset (no preprocessing applied).
pub fn split(
    x: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    if x.nrows() != labels.len() {
        return Err(Error::CountMismatch {
            images: x.nrows(),
            labels: labels.len(),
        });
    }
    let (train, test) = split_indices(x.nrows(), test_fraction, seed)?;
    let pick_labels = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    Dataset::from_parts(
        x.select(Axis(0), &train),
        &pick_labels(&train),
        x.select(Axis(0), &test),
        &pick_labels(&test),
        n_classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn normalize_values() {
        let x = array![[0u8, 255, 128]];
        let n = normalize_01(&x);
        assert_eq!(n[[0, 0]], 0.0);
        assert_eq!(n[[0, 1]], 1.0);
        assert_eq!(n[[0, 2]], 128.0 / 255.0);
        assert!((n[[0, 2]] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn normalize_inverts_exactly() {
        let x = Array2::from_shape_fn((1, 256), |(_, j)| j as u8);
        let back = normalize_01(&x).mapv(|v| (v * 255.0).round() as u8);
        assert_eq!(back, x);
        // and without rounding
        assert!(normalize_01(&x)
            .iter()
            .zip(x.iter())
            .all(|(&v, &b)| v * 255.0 == b as f64));
    }

    #[test]
    fn constant_feature_becomes_zero() {
        let train = array![[1.0, 3.0], [1.0, 5.0], [1.0, 7.0]];
        let test = array![[1.0, 9.0]];
        let (t, s, sc) = standardize(train.view(), test.view());
        assert!(t.column(0).iter().all(|&v| v == 0.0));
        assert_eq!(s[[0, 0]], 0.0);
        assert_eq!(sc.std[0], STD_FLOOR);
        let mean1 = t.column(1).sum() / 3.0;
        assert!(mean1.abs() < 1e-12);
    }

    #[test]
    fn one_hot_rows() {
        assert_eq!(one_hot(&[3], 5).unwrap(), array![[0.0, 0.0, 0.0, 1.0, 0.0]]);
        assert_eq!(one_hot(&[0], 2).unwrap(), array![[1.0, 0.0]]);
        assert!(matches!(one_hot(&[5], 5), Err(Error::OutOfRange { label: 5, classes: 5 })));
    }

    #[test]
    fn split_sizes() {
        let (train, test) = split_indices(203, 1.0 / 3.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (136, 67));
        let (train, test) = split_indices(2, 0.5, 1).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
        assert!(matches!(split_indices(2, 1.0 / 3.0, 1), Err(Error::TooFewSamples { .. })));
        assert!(split_indices(10, 1.0, 1).is_err());
    }

    #[test]
    fn split_is_deterministic_partition() {
        let a = split_indices(50, 0.3, 9).unwrap();
        assert_eq!(a, split_indices(50, 0.3, 9).unwrap());
        let mut all: Vec<usize> = a.0.iter().chain(a.1.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn dataset_requires_two_classes() {
        let x = Array2::zeros((2, 3));
        assert!(Dataset::from_parts(x.clone(), &[0, 0], x, &[0, 0], 1).is_err());
    }
}
