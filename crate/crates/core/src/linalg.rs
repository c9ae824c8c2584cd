//! Dense symmetric eigen-solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 10_000;

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is signed so that its largest-magnitude entry is positive.
pub fn symmetric_eigen_desc<T: Real>(a: DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let sym = (&a + a.transpose()) * T::of(0.5);
    let eig = SymmetricEigen::try_new(sym, T::eps(), MAX_SWEEPS)
        .ok_or_else(|| Error::SolverFailure("symmetric eigen did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = eig.eigenvectors.select_columns(order.iter());
    for mut col in vectors.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok((values, vectors))
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Generalized eigenpairs of a symmetric-definite pencil, sorted by
/// eigenvalue descending. Columns of `vectors` are the eigenvectors.
#[derive(Debug, Clone)]
pub struct GepSolution<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

fn cholesky<T: Real>(b: DMatrix<T>, what: &str) -> Result<Cholesky<T, Dyn>> {
    Cholesky::new(b).ok_or_else(|| Error::SolverFailure(format!("{what} is not positive definite")))
}

/// Top `m` eigenpairs of `numer · f = λ (denom + alpha·I) · f`.
///
/// Solved by Cholesky reduction to a standard symmetric problem. Vectors are
/// returned unit-norm in the ambient metric (callers rescale as needed).
pub fn solve_symmetric_definite<T: Real>(
    numer: &DMatrix<T>,
    denom: &DMatrix<T>,
    alpha: T,
    m: usize,
) -> Result<GepSolution<T>> {
    let n = numer.nrows();
    if numer.shape() != (n, n) || denom.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "pencil shapes {:?} and {:?}",
            numer.shape(),
            denom.shape()
        )));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("requested {m} eigenpairs of a {n}x{n} pencil")));
    }
    let mut b = denom.clone();
    for i in 0..n {
        b[(i, i)] += alpha;
    }
    let chol = cholesky(b, "denominator + alpha I")?;
    let l = chol.l();
    // C = L^-1 A L^-T
    let left = l
        .solve_lower_triangular(numer)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
    let (values, u) = symmetric_eigen_desc(c)?;
    let u = u.columns(0, m).into_owned();
    let mut vectors = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
    let mut values = values.rows(0, m).into_owned();
    let mut b = denom.clone();
    for i in 0..n {
        b[(i, i)] += alpha;
    }
    for k in 0..m {
        let mut f = vectors.column(k).into_owned();
        refine_pair(numer, &b, &mut values[k], &mut f);
        let norm = f.norm();
        if norm > T::zero() {
            f /= norm;
        }
        fix_sign(f.as_mut_slice());
        vectors.set_column(k, &f);
    }
    Ok(GepSolution { values, vectors }.sorted())
}

fn pair_residual<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, lambda: T, f: &DVector<T>) -> T {
    let bf = b * f;
    let scale = bf.norm();
    let r = (a * f - bf * lambda).norm();
    if scale > T::zero() {
        r / scale
    } else {
        r
    }
}

/// Rayleigh-quotient iteration on one eigenpair of `a f = λ b f`, run only
/// when the residual is above 1e-10 and kept only while it shrinks. Large λ
/// with an ill-conditioned `b` loses accuracy in the Cholesky back-substitution.
fn refine_pair<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, lambda: &mut T, f: &mut DVector<T>) {
    let mut best = pair_residual(a, b, *lambda, f);
    for _ in 0..3 {
        if best <= T::of(1e-10) || *lambda == T::zero() {
            return;
        }
        let shifted = a - b * *lambda;
        let Some(y) = shifted.lu().solve(&(b * &*f)) else {
            return;
        };
        let norm = y.norm();
        if !norm.is_finite() || norm <= T::zero() {
            return;
        }
        let y = y / norm;
        let rq = y.dot(&(a * &y)) / y.dot(&(b * &y));
        let res = pair_residual(a, b, rq, &y);
        if !res.is_finite() || res >= best {
            return;
        }
        best = res;
        *lambda = rq;
        *f = y;
    }
}

/// Top `m` eigenpairs of the pencil `(N ⊕ 0) f = λ (S + alpha·I) f` where
/// the numerator is nonzero only on its leading `t_dim × t_dim` block `N`.
///
/// Writing `f = (t; v)` and `B = S + alpha·I`, the nonzero spectrum comes from
/// the small pencil `N t = λ Σ t` with the Schur complement
/// `Σ = B_tt − B_tv B_vv⁻¹ B_vt`, and `v = −B_vv⁻¹ B_vt t`. Eigenpairs with
/// λ = 0 are built the same way and still satisfy the full equation.
pub fn solve_block_numerator<T: Real>(
    numer_tt: &DMatrix<T>,
    denom: &DMatrix<T>,
    alpha: T,
    m: usize,
) -> Result<GepSolution<T>> {
    let d = numer_tt.nrows();
    let total = denom.nrows();
    if numer_tt.shape() != (d, d) || denom.shape() != (total, total) || total < d {
        return Err(Error::ShapeMismatch(format!(
            "numerator block {:?} vs denominator {:?}",
            numer_tt.shape(),
            denom.shape()
        )));
    }
    if m > d {
        return Err(Error::InvalidParameter(format!("requested {m} eigenpairs, numerator rank ≤ {d}")));
    }
    let nv = total - d;
    let mut b_tt = denom.view((0, 0), (d, d)).into_owned();
    for i in 0..d {
        b_tt[(i, i)] += alpha;
    }
    let (schur, gain) = if nv == 0 {
        (b_tt, DMatrix::zeros(0, d))
    } else {
        let mut b_vv = denom.view((d, d), (nv, nv)).into_owned();
        for i in 0..nv {
            b_vv[(i, i)] += alpha;
        }
        let b_vt = denom.view((d, 0), (nv, d)).into_owned();
        let chol = cholesky(b_vv, "tangent block + alpha I")?;
        // gain = B_vv^-1 B_vt, so v = -gain t
        let gain = chol.solve(&b_vt);
        let schur = b_tt - b_vt.transpose() * &gain;
        (schur, gain)
    };
    let schur = (&schur + schur.transpose()) * T::of(0.5);
    let small = solve_symmetric_definite(numer_tt, &schur, T::zero(), m)?;
    let mut vectors = DMatrix::zeros(total, m);
    for k in 0..m {
        let t = small.vectors.column(k);
        vectors.view_mut((0, k), (d, 1)).copy_from(&t);
        if nv > 0 {
            let v = -(&gain * t);
            vectors.view_mut((d, k), (nv, 1)).copy_from(&v);
        }
    }
    Ok(GepSolution {
        values: small.values,
        vectors,
    })
}

impl<T: Real> GepSolution<T> {
    fn sorted(self) -> Self {
        let m = self.values.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| {
            self.values[j]
                .partial_cmp(&self.values[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        Self {
            values: DVector::from_iterator(m, order.iter().map(|&i| self.values[i])),
            vectors: self.vectors.select_columns(order.iter()),
        }
    }

    /// Rescale every eigenvector so its leading `t_dim` entries have unit
    /// norm (whole vector unit norm if that part vanishes), then fix signs on
    /// the leading part.
    pub fn normalize_leading(&mut self, t_dim: usize) {
        for mut col in self.vectors.column_iter_mut() {
            let lead = col.rows(0, t_dim).norm();
            let scale = if lead > T::eps() * col.norm() && lead > T::zero() {
                lead
            } else {
                col.norm()
            };
            if scale > T::zero() {
                col /= scale;
            }
            let mut best = 0;
            for i in 1..t_dim {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            let pivot = if t_dim > 0 { col[best] } else { T::zero() };
            if pivot < T::zero() {
                col.neg_mut();
            }
        }
    }

    /// Largest relative residual ‖A f − λ B f‖ / ‖B f‖ over the eigenpairs,
    /// with `B = denom + alpha I`.
    pub fn max_relative_residual(&self, numer: &DMatrix<T>, denom: &DMatrix<T>, alpha: T) -> T {
        let mut worst = T::zero();
        for (k, f) in self.vectors.column_iter().enumerate() {
            let bf = denom * f + f * alpha;
            let r = numer * f - &bf * self.values[k];
            let scale = bf.norm();
            let rel = if scale > T::zero() { r.norm() / scale } else { r.norm() };
            if rel > worst {
                worst = rel;
            }
        }
        worst
    }
}

/// Pairwise Euclidean distance matrix between the rows of `x`.
pub fn pairwise_distances<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = row_distance(x, i, x, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Euclidean distance between row `i` of `a` and row `j` of `b`.
#[inline]
pub fn row_distance<T: Real>(a: &DMatrix<T>, i: usize, b: &DMatrix<T>, j: usize) -> T {
    row_distance_sq(a, i, b, j).sqrt()
}

#[inline]
pub fn row_distance_sq<T: Real>(a: &DMatrix<T>, i: usize, b: &DMatrix<T>, j: usize) -> T {
    let mut s = T::zero();
    for c in 0..a.ncols() {
        let diff = a[(i, c)] - b[(j, c)];
        s += diff * diff;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut g = crate::rng::SplitMix64::new(seed);
        let a = DMatrix::from_fn(n, n + 2, |_, _| (g.next_u64() as f64 / u64::MAX as f64) - 0.5);
        &a * a.transpose()
    }

    #[test]
    fn identity_pencil() {
        let a = DMatrix::<f64>::identity(4, 4);
        let s = solve_symmetric_definite(&a, &DMatrix::zeros(4, 4), 1.0, 4).unwrap();
        for v in s.values.iter() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let gram = s.vectors.transpose() * &s.vectors;
        assert!((gram - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_pencil_closed_form() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0f64, 1.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let s = solve_symmetric_definite(&a, &b, 1.0, 2).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-14);
        assert!((s.values[1] - 1.0).abs() < 1e-14);
        assert!((s.vectors[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((s.vectors[(1, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_solver_matches_dense() {
        let d = 3;
        let total = 9;
        let s = random_spd(total, 1);
        let k = random_spd(d, 2);
        let mut full = DMatrix::zeros(total, total);
        full.view_mut((0, 0), (d, d)).copy_from(&k);
        let alpha = 1e-2;
        let dense = solve_symmetric_definite(&full, &s, alpha, d).unwrap();
        let block = solve_block_numerator(&k, &s, alpha, d).unwrap();
        for i in 0..d {
            assert!((dense.values[i] - block.values[i]).abs() < 1e-10 * dense.values[0]);
        }
        assert!(block.max_relative_residual(&full, &s, alpha) < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let mut v = [0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.3]);
    }
}
