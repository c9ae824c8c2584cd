//! Labeled datasets, file loading and reproducible stratified splits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// First column is the integer label, the rest are features.
    Csv { header: bool },
    /// `label idx:val ...` with 1-based feature indices, densified.
    Libsvm,
}

/// n×d feature matrix with contiguous labels `1..=C`.
///
/// Labels are remapped in order of first appearance; `original_labels[c - 1]`
/// holds the label value seen in the source for class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T: Real> {
    features: DMatrix<T>,
    labels: Vec<usize>,
    n_classes: usize,
    original_labels: Vec<i64>,
}

impl<T: Real> LabeledDataset<T> {
    /// Build from raw labels, remapping them to `1..=C` by first appearance.
    pub fn from_raw(features: DMatrix<T>, raw_labels: &[i64]) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.ncols() == 0 {
            return Err(Error::ShapeMismatch("dataset has no feature columns".into()));
        }
        if raw_labels.len() != features.nrows() {
            return Err(Error::LengthMismatch(raw_labels.len(), features.nrows()));
        }
        if let Some(pos) = features.iter().position(|x| !x.is_finite_value()) {
            return Err(Error::Parse {
                line: pos % features.nrows() + 1,
                message: "non-finite feature value".into(),
            });
        }
        let mut original_labels = Vec::new();
        let mut map = BTreeMap::new();
        let labels = raw_labels
            .iter()
            .map(|&raw| {
                *map.entry(raw).or_insert_with(|| {
                    original_labels.push(raw);
                    original_labels.len()
                })
            })
            .collect();
        Ok(Self {
            features,
            labels,
            n_classes: original_labels.len(),
            original_labels,
        })
    }

    /// Build from labels that are already contiguous in `1..=C`.
    pub fn new(features: DMatrix<T>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().copied().max().unwrap_or(0);
        if labels.contains(&0) {
            return Err(Error::InvalidParameter("labels must be in 1..=C".into()));
        }
        let raw: Vec<i64> = labels.iter().map(|&c| c as i64).collect();
        let mut ds = Self::from_raw(features, &raw)?;
        // Keep the caller's numbering instead of first-appearance order.
        ds.labels = labels;
        ds.n_classes = n_classes;
        ds.original_labels = (1..=n_classes as i64).collect();
        Ok(ds)
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn original_label(&self, class: usize) -> i64 {
        self.original_labels[class - 1]
    }

    pub fn original_labels(&self) -> &[i64] {
        &self.original_labels
    }

    /// Class → number of points, for classes `1..=C`.
    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts: BTreeMap<usize, usize> = (1..=self.n_classes).map(|c| (c, 0)).collect();
        for &c in &self.labels {
            *counts.get_mut(&c).expect("label within 1..=C") += 1;
        }
        counts
    }

    /// Row indices of each class, ascending, indexed by `class - 1`.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c - 1].push(i);
        }
        out
    }

    /// Rows `idx` in the given order. Class numbering is preserved.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let features = self.features.select_rows(idx.iter());
        Self {
            features,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            original_labels: self.original_labels.clone(),
        }
    }

    /// Same labels, different features (e.g. after preprocessing).
    pub fn with_features(&self, features: DMatrix<T>) -> Result<Self> {
        if features.nrows() != self.n() {
            return Err(Error::LengthMismatch(features.nrows(), self.n()));
        }
        Ok(Self {
            features,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            original_labels: self.original_labels.clone(),
        })
    }
}

pub fn load_dataset<T: Real>(path: impl AsRef<Path>, format: Format) -> Result<LabeledDataset<T>> {
    let file = File::open(path.as_ref())?;
    match format {
        Format::Csv { header } => read_csv(BufReader::new(file), header),
        Format::Libsvm => read_libsvm(BufReader::new(file)),
    }
}

pub fn read_csv<T: Real, R: std::io::Read>(reader: R, header: bool) -> Result<LabeledDataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (row, record) in rdr.records().enumerate() {
        let line = row + 1 + usize::from(header);
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected a label and at least one feature".into(),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        labels.push(parse_label(&record[0], line)?);
        for field in record.iter().skip(1) {
            values.push(parse_value::<T>(field, line)?);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyDataset);
    };
    let features = DMatrix::from_row_slice(labels.len(), width - 1, &values);
    LabeledDataset::from_raw(features, &labels)
}

pub fn read_libsvm<T: Real, R: BufRead>(reader: R) -> Result<LabeledDataset<T>> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut dim = 0;
    for (row, text) in reader.lines().enumerate() {
        let line = row + 1;
        let text = text?;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut parts = text.split_whitespace();
        let label = parts.next().expect("non-empty line has a token");
        labels.push(parse_label(label, line)?);
        let mut entries = Vec::new();
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected idx:val, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    message: "feature indices are 1-based".into(),
                });
            }
            dim = dim.max(idx);
            entries.push((idx - 1, parse_value::<T>(val, line)?));
        }
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut features = DMatrix::zeros(rows.len(), dim.max(1));
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            features[(i, j)] = v;
        }
    }
    LabeledDataset::from_raw(features, &labels)
}

fn parse_label(s: &str, line: usize) -> Result<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    // Accept "1.0"-style labels as long as they are integral.
    match s.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            message: format!("label {s:?} is not an integer"),
        }),
    }
}

fn parse_value<T: Real>(s: &str, line: usize) -> Result<T> {
    T::parse_str(s.trim())
        .filter(|v| v.is_finite_value())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("feature {s:?} is not a finite number"),
        })
}

/// Index sets of a train/test split, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split indices.
///
/// One [`SplitMix64`] stream seeded with `seed` is consumed class by class in
/// ascending class order: the ascending row indices of the class are shuffled
/// and the first `round(n_c * train_fraction)` (half away from zero) go to
/// the training set.
pub fn split_indices(labels: &[usize], n_classes: usize, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c - 1].push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        let take = (members.len() as f64 * train_fraction).round() as usize;
        if take == 0 {
            return Err(Error::DegenerateSplit { class: c + 1 });
        }
        rng.shuffle(&mut members);
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Stratified, seeded train/test split. Rows keep their original relative order.
pub fn train_test_split<T: Real>(
    ds: &LabeledDataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let idx = split_indices(ds.labels(), ds.n_classes(), train_fraction, seed)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.test)))
}

/// Stratified fold assignment: within each class (ascending class order, one
/// shared stream) the shuffled members are dealt round-robin to folds.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter("need at least two folds".into()));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c - 1].push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let mut fold_of = vec![0; labels.len()];
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.len() < folds {
            return Err(Error::DegenerateFolds {
                class: c + 1,
                count: members.len(),
                folds,
            });
        }
        rng.shuffle(&mut members);
        for (pos, i) in members.into_iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    Ok(fold_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_three_rows() {
        let ds: LabeledDataset<f64> = read_csv("1,0,0,0\n1,1,0,0\n2,0,1,0".as_bytes(), false).unwrap();
        assert_eq!((ds.n(), ds.dim(), ds.n_classes()), (3, 3, 2));
        let counts = ds.class_counts();
        assert_eq!(counts[&1], 2);
        assert_eq!(counts[&2], 1);
    }

    #[test]
    fn csv_ragged_row_is_parse_error() {
        let r: Result<LabeledDataset<f64>> = read_csv("1,0,0,0\n2,1\n1,0,1,0".as_bytes(), false);
        assert!(matches!(r, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_non_numeric_feature() {
        let r: Result<LabeledDataset<f64>> = read_csv("1,0,x\n".as_bytes(), false);
        assert!(matches!(r, Err(Error::Parse { .. })));
        let r: Result<LabeledDataset<f64>> = read_csv("a,0,1\n".as_bytes(), false);
        assert!(matches!(r, Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_empty_and_header() {
        let r: Result<LabeledDataset<f64>> = read_csv("".as_bytes(), false);
        assert!(matches!(r, Err(Error::EmptyDataset)));
        let ds: LabeledDataset<f64> = read_csv("label,a,b\n7,1,2\n3,4,5\n".as_bytes(), true).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.labels(), &[1, 2]);
        assert_eq!(ds.original_labels(), &[7, 3]);
    }

    #[test]
    fn libsvm_is_densified() {
        let text = "+1 1:0.5 3:2\n-1 2:1\n";
        let ds: LabeledDataset<f64> = read_libsvm(text.as_bytes()).unwrap();
        assert_eq!((ds.n(), ds.dim()), (2, 3));
        assert_eq!(ds.features()[(0, 2)], 2.0);
        assert_eq!(ds.features()[(1, 0)], 0.0);
        assert_eq!(ds.original_label(2), -1);
    }

    #[test]
    fn split_counts_match_rounding() {
        // 20 classes of 72, as in a COIL20-sized set.
        let labels: Vec<usize> = (0..1440).map(|i| i / 72 + 1).collect();
        let s = split_indices(&labels, 20, 0.25, 3).unwrap();
        assert_eq!(s.train.len(), 360);
        assert_eq!(s.test.len(), 1080);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let labels: Vec<usize> = (0..97).map(|i| i % 3 + 1).collect();
        let a = split_indices(&labels, 3, 0.4, 11).unwrap();
        let b = split_indices(&labels, 3, 0.4, 11).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..97).collect::<Vec<_>>());
    }

    #[test]
    fn split_reference_permutation_seed_7() {
        // Procedure written out independently of SplitMix64::shuffle.
        let mut state: u64 = 7;
        let mut next = || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        };
        let mut perm = [0usize, 1, 2, 3];
        for i in (1..4usize).rev() {
            let j = ((next() as u128 * (i as u128 + 1)) >> 64) as usize;
            perm.swap(i, j);
        }
        let mut expected = perm[..2].to_vec();
        expected.sort_unstable();

        let s = split_indices(&[1, 1, 1, 1], 1, 0.5, 7).unwrap();
        assert_eq!(s.train, expected);
    }

    #[test]
    fn split_degenerate_class() {
        let labels = [1, 1, 1, 1, 2];
        assert!(matches!(
            split_indices(&labels, 2, 0.3, 0),
            Err(Error::DegenerateSplit { class: 2 })
        ));
    }

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2 + 1).collect();
        let f = stratified_folds(&labels, 2, 4, 5).unwrap();
        for fold in 0..4 {
            assert_eq!(f.iter().filter(|&&x| x == fold).count(), 10);
        }
        assert!(stratified_folds(&[1, 1, 2], 2, 2, 0).is_err());
    }
}
