//! Tabular `(y, X)` samples: loading, validation, splitting and resampling.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Response vector plus row-major state matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    feature_names: Vec<String>,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from a response vector and one row per sample.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>, feature_names: Vec<String>) -> Result<Self> {
        if y.is_empty() || feature_names.is_empty() {
            return Err(Error::EmptyData);
        }
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                found: rows.len(),
            });
        }
        let p = feature_names.len();
        let mut x = Vec::with_capacity(p * y.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::BadCell {
                        row: i + 1,
                        column: feature_names[j].clone(),
                        value: v.to_string(),
                    });
                }
            }
            x.extend(row);
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadCell {
                row: i + 1,
                column: "y".into(),
                value: y[i].to_string(),
            });
        }
        Ok(Self {
            y,
            x,
            feature_names,
            p,
        })
    }

    /// Convenience constructor for one state variable named `x`.
    pub fn from_1d(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let rows = x.into_iter().map(|v| vec![v]).collect();
        Self::new(y, rows, vec!["x".into()])
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    /// Values of state variable `j` in row order.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn y_min(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn y_max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn y_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.n() as f64
    }

    /// Rows at `indices`, in the given order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(indices.len() * self.p);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            y.push(self.y[i]);
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            y,
            x,
            feature_names: self.feature_names.clone(),
            p: self.p,
        }
    }

    /// Keeps only the state variables at `columns`.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::EmptyData);
        }
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.p) {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: bad + 1,
            });
        }
        let rows = self
            .rows()
            .map(|r| columns.iter().map(|&j| r[j]).collect())
            .collect();
        let names = columns
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect();
        Dataset::new(self.y.clone(), rows, names)
    }

    /// Writes the dataset as CSV with the response in the first column.
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`, so [`load_csv`] reproduces the dataset exactly.
    pub fn write_csv(&self, path: &Path, response_name: &str) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv_to(&mut out, response_name)
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn write_csv_to<W: Write>(&self, out: &mut W, response_name: &str) -> std::io::Result<()> {
        write!(out, "{response_name}")?;
        for name in &self.feature_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for (i, row) in self.rows().enumerate() {
            write!(out, "{}", self.y[i])?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Loads `response_column` and `feature_columns` from a headed CSV file.
///
/// Any referenced cell that is missing, unparseable or non-finite aborts the
/// load; rows are never dropped because coverage is a proportion of `n`.
pub fn load_csv(path: &Path, response_column: &str, feature_columns: &[String]) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let response_idx = find(response_column)?;
    let feature_idx = feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let parse = |record: &csv::StringRecord, row: usize, idx: usize, name: &str| -> Result<f64> {
        let raw = record.get(idx).unwrap_or("");
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::BadCell {
                row,
                column: name.to_string(),
                value: raw.to_string(),
            }),
        }
    };

    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        y.push(parse(&record, row_no, response_idx, response_column)?);
        let row = feature_idx
            .iter()
            .zip(feature_columns)
            .map(|(&idx, name)| parse(&record, row_no, idx, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(y, rows, feature_columns.to_vec())
}

/// Search box for the optimizer: per-dimension `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument(
                "domain bounds need lower < upper in every dimension".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// Observed min/max per dimension, widened by `pad_fraction` of the range
    /// on each side. Constant columns get a unit-width box.
    pub fn from_data(d: &Dataset, pad_fraction: f64) -> Self {
        let p = d.p();
        let mut lower = vec![f64::INFINITY; p];
        let mut upper = vec![f64::NEG_INFINITY; p];
        for row in d.rows() {
            for j in 0..p {
                lower[j] = lower[j].min(row[j]);
                upper[j] = upper[j].max(row[j]);
            }
        }
        for j in 0..p {
            let range = upper[j] - lower[j];
            let pad = if range > 0.0 {
                range * pad_fraction
            } else {
                0.5
            };
            lower[j] -= pad;
            upper[j] += pad;
        }
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }
}

/// Fold index per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    /// Row indices of fold `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Row indices outside fold `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    idx
}

/// Random train/test partition; each part keeps the original row order.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d.n(), train_fraction, seed)?;
    Ok((d.subset(&train), d.subset(&test)))
}

pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} rows at {train_fraction} leaves an empty part"
        )));
    }
    let perm = permutation(n, seed);
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Assigns rows to `k` folds whose sizes differ by at most one.
pub fn kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    kfold_n(d.n(), k, seed)
}

pub fn kfold_n(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} outside [2, {n}]"
        )));
    }
    let mut assignment = vec![0; n];
    for (pos, &row) in permutation(n, seed).iter().enumerate() {
        assignment[row] = pos % k;
    }
    Ok(FoldAssignment { k, assignment })
}

/// `n` row indices drawn uniformly with replacement.
pub fn resample_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap replicate of `d`.
pub fn bootstrap_resample(d: &Dataset, seed: u64) -> Dataset {
    d.subset(&resample_indices(d.n(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn toy(n: usize) -> Dataset {
        let y = (0..n).map(|i| i as f64).collect();
        let rows = (0..n).map(|i| vec![i as f64, -(i as f64)]).collect();
        Dataset::new(y, rows, vec!["a".into(), "b".into()]).unwrap()
    }

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_rows() {
        let f = write_file("quality,a,b\n1.0,2,3\n2.5,4,5\n-1,6,7e-1\n");
        let d = load_csv(f.path(), "quality", &["a".into(), "b".into()]).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.y(), &[1.0, 2.5, -1.0]);
        assert_eq!(d.row(2), &[6.0, 0.7]);
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let f = write_file("quality,a,b\n1.0,2,3\n2.5,NaN,5\n");
        let err = load_csv(f.path(), "quality", &["a".into(), "b".into()]).unwrap_err();
        match err {
            Error::BadCell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_and_column() {
        assert!(matches!(
            load_csv(Path::new("/nonexistent/x.csv"), "y", &["a".into()]),
            Err(Error::Io { .. })
        ));
        let f = write_file("quality,a\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), "quality", &["zz".into()]),
            Err(Error::MissingColumn(c)) if c == "zz"
        ));
    }

    #[test]
    fn empty_cell_is_rejected() {
        let f = write_file("quality,a\n1,\n");
        assert!(matches!(
            load_csv(f.path(), "quality", &["a".into()]),
            Err(Error::BadCell { row: 1, .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let y = vec![0.1, 1.0 / 3.0, -2.5e-12];
        let rows = vec![vec![std::f64::consts::PI], vec![1e300], vec![-0.0]];
        let d = Dataset::new(y, rows, vec!["x".into()]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path(), "y").unwrap();
        let back = load_csv(f.path(), "y", &["x".into()]).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = toy(10);
        let (a, b) = split(&d, 0.5, 3).unwrap();
        assert_eq!((a.n(), b.n()), (5, 5));
        assert_eq!(split(&d, 0.5, 3).unwrap(), (a.clone(), b.clone()));
        let mut all: Vec<f64> = a.y().iter().chain(b.y()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, d.y());
        assert!(split(&d, 1.0, 3).is_err());
        assert!(split(&d, 0.0, 3).is_err());
        let (tr, te) = split_indices(36872, 0.5, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (18436, 18436));
    }

    #[test]
    fn kfold_sizes() {
        let sizes = |n, k| {
            let mut s = kfold_n(n, k, 11).unwrap().fold_sizes();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(sizes(9, 4), vec![3, 2, 2, 2]);
        assert_eq!(sizes(1000, 4), vec![250; 4]);
        assert!(kfold_n(5, 1, 0).is_err());
        assert!(kfold_n(5, 6, 0).is_err());
        assert_eq!(kfold_n(50, 5, 9).unwrap(), kfold_n(50, 5, 9).unwrap());
    }

    #[test]
    fn kfold_partitions_indices() {
        let folds = kfold_n(37, 5, 2).unwrap();
        let mut seen = [0; 37];
        for f in 0..5 {
            for i in folds.test_indices(f) {
                seen[i] += 1;
            }
            assert_eq!(
                folds.test_indices(f).len() + folds.train_indices(f).len(),
                37
            );
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn bootstrap_single_row() {
        let d = toy(1);
        for s in 0..5 {
            assert_eq!(bootstrap_resample(&d, s), d);
        }
    }

    #[test]
    fn bootstrap_distinct_fraction_near_632() {
        let n = 1000;
        let expected = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        let mut total = 0.0;
        for seed in 0..100 {
            let idx = resample_indices(n, seed);
            total += idx.iter().collect::<HashSet<_>>().len() as f64 / n as f64;
        }
        assert!((total / 100.0 - expected).abs() < 0.05);
        assert!((expected - 0.632).abs() < 1e-3);
    }

    #[test]
    fn bootstrap_is_deterministic_and_draws_existing_rows() {
        let d = toy(20);
        let a = bootstrap_resample(&d, 5);
        assert_eq!(a, bootstrap_resample(&d, 5));
        assert_eq!(a.n(), 20);
        for (i, row) in a.rows().enumerate() {
            let src = a.y()[i] as usize;
            assert_eq!(row, d.row(src));
        }
    }

    #[test]
    fn domain_bounds_pad_one_percent() {
        let d = toy(11);
        let b = DomainBounds::from_data(&d, 0.01);
        assert!((b.lower[0] + 0.1).abs() < 1e-12);
        assert!((b.upper[0] - 10.1).abs() < 1e-12);
        assert!(DomainBounds::new(vec![1.0], vec![1.0]).is_err());
    }
}
