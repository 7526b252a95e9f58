//! Paired-sample containers and CSV input/output.
//!
//! A [`PairedSample`] holds two measurement matrices with matching shape and
//! feature names: row i of `x` and row i of `y` are the two measurements of
//! subject i. All validation happens at construction; downstream code can
//! assume finite values and consistent shapes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct PairedSample {
    x: Matrix,
    y: Matrix,
    feature_names: Vec<String>,
}

impl PairedSample {
    pub fn new(x: Matrix, y: Matrix, feature_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::RowCountMismatch {
                rows_x: x.rows(),
                rows_y: y.rows(),
            });
        }
        if x.cols() != y.cols() {
            return Err(Error::DimensionMismatch {
                left: x.cols(),
                right: y.cols(),
                context: "paired samples must share feature count",
            });
        }
        if feature_names.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                left: feature_names.len(),
                right: x.cols(),
                context: "feature names vs feature count",
            });
        }
        for (i, name) in feature_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::EmptyFeatureName { position: i + 1 });
            }
            if feature_names[..i].contains(name) {
                return Err(Error::DuplicateFeatureName { name: name.clone() });
            }
        }
        if let Some((row, column)) = x.find_non_finite() {
            return Err(Error::NonFinite {
                sample: "x",
                row,
                column,
            });
        }
        if let Some((row, column)) = y.find_non_finite() {
            return Err(Error::NonFinite {
                sample: "y",
                row,
                column,
            });
        }
        Ok(PairedSample {
            x,
            y,
            feature_names,
        })
    }

    /// Number of pairs.
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Number of features.
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

/// Per-pair differences `y - x`.
#[derive(Debug, Clone)]
pub struct DifferenceSample {
    z: Matrix,
}

impl DifferenceSample {
    pub fn n(&self) -> usize {
        self.z.rows()
    }

    pub fn d(&self) -> usize {
        self.z.cols()
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.z.column(k)
    }
}

/// Differences `y - x`, one row per pair.
pub fn differences(sample: &PairedSample) -> DifferenceSample {
    let z = sample
        .y
        .sub(&sample.x)
        .expect("paired matrices share a shape by construction");
    DifferenceSample { z }
}

fn read_csv_matrix(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(str::to_owned)
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut row = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row: i + 1,
                column: headers.get(j).cloned().unwrap_or_else(|| format!("#{}", j + 1)),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteCell {
                    path: path.to_path_buf(),
                    row: i + 1,
                    column: headers.get(j).cloned().unwrap_or_else(|| format!("#{}", j + 1)),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyInput {
            context: "CSV file without a header row",
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput {
            context: "CSV file without data rows",
        });
    }
    Ok((headers, Matrix::from_rows(rows)?))
}

/// Loads a paired sample from two CSV files with identical headers and row
/// counts. Row i of the first file is paired with row i of the second.
pub fn load_paired_csv(path_x: &Path, path_y: &Path) -> Result<PairedSample> {
    let (headers_x, x) = read_csv_matrix(path_x)?;
    let (headers_y, y) = read_csv_matrix(path_y)?;
    if headers_x.len() != headers_y.len() {
        return Err(Error::DimensionMismatch {
            left: headers_x.len(),
            right: headers_y.len(),
            context: "CSV header lengths",
        });
    }
    for (i, (a, b)) in headers_x.iter().zip(&headers_y).enumerate() {
        if a != b {
            return Err(Error::HeaderMismatch {
                position: i + 1,
                left: a.clone(),
                right: b.clone(),
            });
        }
    }
    if x.rows() != y.rows() {
        return Err(Error::RowCountMismatch {
            rows_x: x.rows(),
            rows_y: y.rows(),
        });
    }
    PairedSample::new(x, y, headers_x)
}

fn write_csv_matrix(path: &Path, headers: &[String], m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    // Feature names never contain separators (validated on load for our own
    // files, and generated names are plain identifiers), so plain joining is
    // enough; values use the shortest round-trip decimal form.
    writeln!(w, "{}", headers.join(",")).map_err(io_err)?;
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes a paired sample back to two CSV files. Values are written in the
/// shortest decimal form that parses back to the identical bits, so a
/// save/load cycle is exact.
pub fn save_paired_csv(sample: &PairedSample, path_x: &Path, path_y: &Path) -> Result<()> {
    write_csv_matrix(path_x, sample.feature_names(), sample.x())?;
    write_csv_matrix(path_y, sample.feature_names(), sample.y())
}

/// Standardizes each feature by the mean and population standard deviation
/// of the pooled 2N values from both samples, so that the pooled column has
/// mean 0 and standard deviation 1.
pub fn standardize(sample: &PairedSample) -> Result<PairedSample> {
    let (n, d) = (sample.n(), sample.d());
    let mut x = sample.x().clone();
    let mut y = sample.y().clone();
    for k in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for i in 0..n {
            for v in [x[(i, k)], y[(i, k)]] {
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
            }
        }
        if lo == hi {
            return Err(Error::DegenerateFeature {
                index: k,
                name: sample.feature_names()[k].clone(),
            });
        }
        let mean = sum / (2 * n) as f64;
        let mut ss = 0.0;
        for i in 0..n {
            ss += (x[(i, k)] - mean) * (x[(i, k)] - mean);
            ss += (y[(i, k)] - mean) * (y[(i, k)] - mean);
        }
        let std = (ss / (2 * n) as f64).sqrt();
        if std == 0.0 {
            return Err(Error::DegenerateFeature {
                index: k,
                name: sample.feature_names()[k].clone(),
            });
        }
        for i in 0..n {
            x[(i, k)] = (x[(i, k)] - mean) / std;
            y[(i, k)] = (y[(i, k)] - mean) / std;
        }
    }
    PairedSample::new(x, y, sample.feature_names().to_vec())
}
