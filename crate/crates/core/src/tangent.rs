//! PCA tangent bases with energy-adaptive dimensionality.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{fix_sign, symmetric_eigen_desc};
use crate::scalar::Real;

/// Eigenvalues below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// d×m basis with orthonormal columns; `m` may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis<T: Real> {
    pub basis: DMatrix<T>,
}

impl<T: Real> TangentBasis<T> {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn empty(d: usize) -> Self {
        Self {
            basis: DMatrix::zeros(d, 0),
        }
    }
}

/// Principal directions of the rows of `points`, mean-centered, with the
/// variance spectrum, largest first.
pub(crate) fn principal_directions<T: Real>(points: &DMatrix<T>) -> Result<(Vec<T>, DMatrix<T>)> {
    let (n, d) = points.shape();
    let mean = points.row_mean();
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    if d <= n {
        let cov = centered.transpose() * &centered;
        let (vals, vecs) = symmetric_eigen_desc(cov)?;
        Ok((vals.iter().map(|&v| v.max(T::zero())).collect(), vecs))
    } else {
        // Gram trick: eigenvectors u of Xc Xcᵀ map to Xcᵀ u / sqrt(λ).
        let gram = &centered * centered.transpose();
        let (vals, u) = symmetric_eigen_desc(gram)?;
        let vals: Vec<T> = vals.iter().map(|&v| v.max(T::zero())).collect();
        let top = vals.first().copied().unwrap_or(T::zero());
        let mut dirs = DMatrix::zeros(d, n);
        for (k, &lam) in vals.iter().enumerate() {
            if lam > top * T::of(RANK_TOLERANCE) && lam > T::zero() {
                let v = centered.transpose() * u.column(k) / lam.sqrt();
                dirs.set_column(k, &v);
            }
        }
        Ok((vals, dirs))
    }
}

/// Smallest count of leading eigenvalues holding `energy` of the total,
/// capped at the numerical rank.
pub fn energy_dimension<T: Real>(eigenvalues: &[T], energy: f64) -> usize {
    let total: T = eigenvalues.iter().fold(T::zero(), |a, &b| a + b);
    if total <= T::zero() {
        return 0;
    }
    let top = eigenvalues[0];
    let rank = eigenvalues
        .iter()
        .take_while(|&&v| v > top * T::of(RANK_TOLERANCE))
        .count();
    let target = T::of(energy) * total - total * T::of(RANK_TOLERANCE);
    let mut cum = T::zero();
    let mut m = eigenvalues.len();
    for (k, &v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum >= target {
            m = k + 1;
            break;
        }
    }
    m.min(rank)
}

/// Tangent basis of a point set: leading principal directions holding
/// `energy` of the variance, at most `cap` of them.
pub fn fit_tangent_basis<T: Real>(points: &DMatrix<T>, energy: f64, cap: Option<usize>) -> Result<TangentBasis<T>> {
    let (n, d) = points.shape();
    if n <= 1 {
        return Ok(TangentBasis::empty(d));
    }
    let (vals, dirs) = principal_directions(points)?;
    let mut m = energy_dimension(&vals, energy).min(d).min(n - 1);
    if let Some(cap) = cap {
        m = m.min(cap);
    }
    let mut basis = dirs.columns(0, m).into_owned();
    reorthonormalize(&mut basis);
    for mut col in basis.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok(TangentBasis { basis })
}

/// Two passes of modified Gram-Schmidt.
fn reorthonormalize<T: Real>(q: &mut DMatrix<T>) {
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).into_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-proj, &qi, T::one());
            }
            let norm = q.column(j).norm();
            if norm > T::zero() {
                q.column_mut(j).unscale_mut(norm);
            }
        }
    }
}
