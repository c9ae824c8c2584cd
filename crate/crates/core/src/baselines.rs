//! PCA and LDA baselines.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{laplacian, lda_graphs};
use crate::linalg::solve_symmetric_definite;
use crate::mpda::transform_with;
use crate::scalar::Real;
use crate::tangent::{energy_dimension, principal_directions, RANK_TOLERANCE};
use crate::Algorithm;

/// Relative Tikhonov shrinkage of the LDA within-class scatter.
pub const LDA_SHRINKAGE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LinearModel<T: Real> {
    pub algorithm: Algorithm,
    /// d×m.
    pub projection: DMatrix<T>,
    /// Subtracted before projecting (PCA only).
    pub mean: Option<DVector<T>>,
    pub eigenvalues: Vec<T>,
    pub hyperparams: BTreeMap<String, f64>,
}

impl<T: Real> LinearModel<T> {
    pub fn m(&self) -> usize {
        self.projection.ncols()
    }

    pub fn transform(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        match &self.mean {
            None => transform_with(&self.projection, x),
            Some(mean) => {
                if x.ncols() != mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: mean.len(),
                        got: x.ncols(),
                    });
                }
                let mut centered = x.clone();
                let mt = mean.transpose();
                for mut row in centered.row_iter_mut() {
                    row -= &mt;
                }
                transform_with(&self.projection, &centered)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaSpec {
    Components(usize),
    Energy(f64),
}

pub fn fit_pca<T: Real>(x: &DMatrix<T>, spec: PcaSpec) -> Result<LinearModel<T>> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two points".into()));
    }
    let (vals, dirs) = principal_directions(x)?;
    let top = vals[0];
    let rank = vals.iter().take_while(|&&v| v > top * T::of(RANK_TOLERANCE)).count();
    let available = if d <= n { d } else { rank };
    let m = match spec {
        PcaSpec::Components(m) => {
            if m == 0 || m > d {
                return Err(Error::InvalidParameter(format!("m = {m} outside 1..={d}")));
            }
            m.min(available)
        }
        PcaSpec::Energy(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidParameter(format!("energy = {e} outside (0, 1]")));
            }
            energy_dimension(&vals, e).max(1).min(available.max(1))
        }
    };
    let mut hyperparams = BTreeMap::new();
    if let PcaSpec::Energy(e) = spec {
        hyperparams.insert("energy".to_string(), e);
    }
    Ok(LinearModel {
        algorithm: Algorithm::Pca,
        projection: dirs.columns(0, m).into_owned(),
        mean: Some(x.row_mean().transpose()),
        eigenvalues: vals[..m].to_vec(),
        hyperparams,
    })
}

/// Within- and between-class scatter from the Laplacian weights:
/// `(S_b, S_w) = (Xᵀ L^b X, Xᵀ L^w X)`.
pub fn lda_scatters<T: Real>(ds: &LabeledDataset<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (wb, ww) = lda_graphs::<T>(ds.labels())?;
    let x = ds.features();
    Ok((laplacian(&wb).scatter(x), laplacian(&ww).scatter(x)))
}

/// Top `m` eigenvectors of `S_b t = λ (S_w + εI) t`, unit norm.
pub fn fit_lda<T: Real>(train: &LabeledDataset<T>, m: usize) -> Result<LinearModel<T>> {
    let d = train.dim();
    if m == 0 || m > d {
        return Err(Error::InvalidParameter(format!("m = {m} outside 1..={d}")));
    }
    let (sb, sw) = lda_scatters(train)?;
    let mut eps = T::of(LDA_SHRINKAGE) * sw.trace() / T::of_usize(d);
    if eps <= T::zero() {
        eps = T::of(LDA_SHRINKAGE);
    }
    let sol = solve_symmetric_definite(&sb, &sw, eps, m)?;
    Ok(LinearModel {
        algorithm: Algorithm::Lda,
        projection: sol.vectors,
        mean: None,
        eigenvalues: sol.values.iter().copied().collect(),
        hyperparams: BTreeMap::from([("epsilon".to_string(), eps.as_f64())]),
    })
}
