//! Partially labeled observations and CSV ingestion.
//!
//! Labels are 1-based class indices; `0` marks an unobserved label.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Label value used for observations whose class is unknown.
pub const UNLABELED: usize = 0;

/// `n` observations in `p` dimensions with labels in `{0, 1, ..., k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Matrix,
    y: Vec<usize>,
    k: usize,
}

impl LabeledDataset {
    pub fn new(x: Matrix, y: Vec<usize>, k: usize) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::InvalidDimension(
                "dataset needs at least one row".into(),
            ));
        }
        if k < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least two classes, got K = {k}"
            )));
        }
        if y.len() != x.rows() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len(),
            });
        }
        if let Some((row, &label)) = y.iter().enumerate().find(|(_, &l)| l > k) {
            return Err(Error::LabelOutOfRange { row, label, k });
        }
        Ok(LabeledDataset { x, y, k })
    }

    /// A dataset with every label hidden.
    pub fn unlabeled(x: Matrix, k: usize) -> Result<Self> {
        let n = x.rows();
        LabeledDataset::new(x, vec![UNLABELED; n], k)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn n_labeled(&self) -> usize {
        self.y.iter().filter(|&&l| l != UNLABELED).count()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n() - self.n_labeled()
    }

    /// Fraction of observations carrying a label.
    pub fn label_fraction(&self) -> f64 {
        self.n_labeled() as f64 / self.n() as f64
    }

    /// Same features with every label hidden.
    pub fn without_labels(&self) -> LabeledDataset {
        LabeledDataset {
            x: self.x.clone(),
            y: vec![UNLABELED; self.n()],
            k: self.k,
        }
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<LabeledDataset> {
        let p = self.p();
        if let Some(&bad) = columns.iter().find(|&&c| c >= p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad + 1,
            });
        }
        let n = self.n();
        let mut data = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            let row = self.x.row(i);
            data.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(LabeledDataset {
            x: Matrix::new(n, columns.len(), data)?,
            y: self.y.clone(),
            k: self.k,
        })
    }
}

/// Options for [`read_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Column holding observed labels; `None` means every label is missing.
    pub label_column: Option<String>,
    /// Cell content meaning "unlabeled" (an empty cell always does).
    pub unlabeled_token: String,
    /// Column holding ground-truth labels, excluded from the features.
    pub truth_column: Option<String>,
    /// Number of classes; inferred from the largest label when absent.
    pub k: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: None,
            unlabeled_token: "0".to_string(),
            truth_column: None,
            k: None,
        }
    }
}

/// Parsed CSV contents.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub dataset: LabeledDataset,
    pub feature_names: Vec<String>,
    pub truth: Option<Vec<usize>>,
}

/// Loads a dataset with the label column selected by name (`"none"` for a
/// fully unlabeled file).
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    unlabeled_token: &str,
) -> Result<LabeledDataset> {
    let options = CsvOptions {
        label_column: (label_column != "none").then(|| label_column.to_string()),
        unlabeled_token: unlabeled_token.to_string(),
        ..CsvOptions::default()
    };
    Ok(read_csv_path(path, &options)?.dataset)
}

pub fn read_csv_path(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CsvData> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<CsvData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &Option<String>| -> Result<Option<usize>> {
        match name {
            None => Ok(None),
            Some(name) => headers
                .iter()
                .position(|h| h == name)
                .map(Some)
                .ok_or_else(|| Error::Parse {
                    row: 0,
                    column: name.clone(),
                    message: "column not found in header".into(),
                }),
        }
    };
    let label_idx = find(&options.label_column)?;
    let truth_idx = find(&options.truth_column)?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != label_idx && Some(c) != truth_idx)
        .collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::InconsistentWidth {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for &c in &feature_cols {
            let cell = record[c].trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[c].clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[c].clone(),
                    message: "non-finite value".into(),
                });
            }
            data.push(value);
        }
        let parse_label = |c: usize, allow_missing: bool| -> Result<usize> {
            let cell = record[c].trim();
            if allow_missing && (cell.is_empty() || cell == options.unlabeled_token) {
                return Ok(UNLABELED);
            }
            cell.parse::<usize>().map_err(|_| Error::Parse {
                row,
                column: headers[c].clone(),
                message: format!("not a class label: {cell:?}"),
            })
        };
        labels.push(match label_idx {
            Some(c) => parse_label(c, true)?,
            None => UNLABELED,
        });
        if let Some(c) = truth_idx {
            truth.push(parse_label(c, false)?);
        }
    }

    let n = labels.len();
    let observed_max = labels.iter().chain(&truth).copied().max().unwrap_or(0);
    let k = options.k.unwrap_or(observed_max.max(2));
    if let Some((i, &label)) = labels
        .iter()
        .chain(&truth)
        .enumerate()
        .find(|(_, &l)| l > k)
    {
        return Err(Error::LabelOutOfRange {
            row: i % n.max(1) + 1,
            label,
            k,
        });
    }
    if let Some(i) = truth.iter().position(|&l| l == 0) {
        return Err(Error::LabelOutOfRange {
            row: i + 1,
            label: 0,
            k,
        });
    }
    let x = Matrix::new(n, feature_cols.len(), data)?;
    Ok(CsvData {
        dataset: LabeledDataset::new(x, labels, k)?,
        feature_names: feature_cols.iter().map(|&c| headers[c].clone()).collect(),
        truth: truth_idx.map(|_| truth),
    })
}

/// Writes features followed by a `label` column (unlabeled rows get
/// `unlabeled_token`). Floats use the shortest exact representation, so
/// reading the output back reproduces the dataset.
pub fn write_csv<W: Write>(
    ds: &LabeledDataset,
    feature_names: &[String],
    unlabeled_token: &str,
    writer: W,
) -> Result<()> {
    if feature_names.len() != ds.p() {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            found: feature_names.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
    header.push("label");
    wtr.write_record(&header).map_err(io)?;
    for i in 0..ds.n() {
        let mut record: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        let label = ds.labels()[i];
        record.push(if label == UNLABELED {
            unlabeled_token.to_string()
        } else {
            label.to_string()
        });
        wtr.write_record(&record).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Per-column location and scale removed by [`standardize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

/// Centres each column and scales it to unit sample variance (`n - 1`
/// denominator).
pub fn standardize(ds: &LabeledDataset) -> Result<(LabeledDataset, Vec<ColumnScale>)> {
    let n = ds.n();
    let p = ds.p();
    if n < 2 {
        return Err(Error::InvalidDimension(
            "standardization needs at least two rows".into(),
        ));
    }
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let mean = (0..n).map(|i| ds.x[(i, j)]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (ds.x[(i, j)] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::ZeroVarianceColumn { column: j });
        }
        scales.push(ColumnScale { mean, sd });
    }
    let mut x = ds.x.clone();
    for i in 0..n {
        for (v, s) in x.row_mut(i).iter_mut().zip(&scales) {
            *v = (*v - s.mean) / s.sd;
        }
    }
    Ok((
        LabeledDataset {
            x,
            y: ds.y.clone(),
            k: ds.k,
        },
        scales,
    ))
}

/// Greedy first-kept-wins removal of (near-)collinear columns. A column is
/// dropped when its residual after projecting out the earlier kept columns
/// has norm at most `tol` times its own norm.
pub fn drop_collinear(ds: &LabeledDataset, tol: f64) -> (LabeledDataset, Vec<usize>) {
    let n = ds.n();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..ds.p() {
        let col = ds.x.column(j);
        let original = dot(&col, &col).sqrt();
        let mut r = col;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= tol * original || rn == 0.0 {
            dropped.push(j);
            continue;
        }
        for v in &mut r {
            *v /= rn;
        }
        basis.push(r);
        kept.push(j);
    }
    debug_assert!(basis.len() <= n);
    let reduced = ds.select_columns(&kept).expect("kept columns are in range");
    (reduced, dropped)
}
