//! Labeled numeric CSV: one sample per row, one column holding the class.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub x: Array2<f64>,
    /// Class ids, assigned by sorted order of the distinct label values.
    pub labels: Vec<usize>,
    /// Original label value of each class id.
    pub classes: Vec<String>,
}

/// Which column holds the label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

pub fn load_labeled_csv(path: impl AsRef<Path>, label_column: LabelColumn) -> Result<LabeledMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_csv(&text, label_column).map_err(|e| e.context(path.display().to_string()))
}

pub fn parse_labeled_csv(text: &str, label_column: LabelColumn) -> Result<LabeledMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("csv: {e}")))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push((i + 1, rec));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile("no rows".into()));
    }
    let width = rows[0].1.len();
    if width < 2 {
        return Err(Error::Config("csv needs at least one feature and a label column".into()));
    }
    let label_idx = match label_column {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if i < width => i,
        LabelColumn::Index(i) => {
            return Err(Error::Config(format!("label column {i} out of range for {width} columns")))
        }
    };

    // a first row whose feature fields are not all numeric is a header
    let is_header = rows[0]
        .1
        .iter()
        .enumerate()
        .any(|(c, f)| c != label_idx && f.parse::<f64>().is_err());
    if is_header {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile("header only".into()));
    }

    let n_features = width - 1;
    let mut x = Vec::with_capacity(rows.len() * n_features);
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        if rec.len() != width {
            return Err(Error::RaggedRow {
                line: *line,
                expected: width,
                found: rec.len(),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                line: *line,
                column: c,
                value: field.to_string(),
            })?;
            x.push(v);
        }
    }

    let classes = sorted_classes(&raw_labels);
    let labels = raw_labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("collected above"))
        .collect();
    Ok(LabeledMatrix {
        x: Array2::from_shape_vec((rows.len(), n_features), x).expect("rectangular"),
        labels,
        classes,
    })
}

/// Distinct label values, ordered numerically when all parse as numbers and
/// lexicographically otherwise.
fn sorted_classes(raw: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&String> = raw.iter().collect();
    let mut classes: Vec<String> = distinct.into_iter().cloned().collect();
    if classes.iter().all(|c| c.parse::<f64>().is_ok()) {
        classes.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .total_cmp(&b.parse::<f64>().unwrap())
        });
    }
    classes
}
