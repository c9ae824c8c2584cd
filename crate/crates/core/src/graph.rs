//! Neighbor graphs and graph Laplacians.
//!
//! The within-class graph links same-class k-nearest neighbors with unit
//! weight. The between-class graph pushes different-class pairs apart with
//! weight `1/n` and locally down-weights same-class neighbors with
//! `A_ij (1/n − 1/n_c)`, where `A_ij` is a heat kernel with local scaling.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::row_distance;
use crate::scalar::Real;

/// k nearest neighbors of every point: `(index, distance)` sorted by distance,
/// ties by index, never containing the point itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists<T: Real> {
    k: usize,
    lists: Vec<Vec<(usize, T)>>,
}

impl<T: Real> NeighborLists<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn of(&self, i: usize) -> &[(usize, T)] {
        &self.lists[i]
    }

    /// Distance from `i` to its k-th nearest neighbor.
    pub fn kth_distance(&self, i: usize) -> T {
        self.lists[i].last().map_or(T::zero(), |&(_, d)| d)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.lists[i].iter().any(|&(p, _)| p == j)
    }

    /// Undirected edge list `(i, j, dist)` with `i < j`, each edge once.
    pub fn undirected_edges(&self) -> Vec<(usize, usize, T)> {
        let mut edges: Vec<(usize, usize, T)> = self
            .lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |&(j, d)| (i.min(j), i.max(j), d)))
            .collect();
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        edges
    }
}

/// Exact k-NN by exhaustive search over the rows of `x`.
pub fn knn_neighbors<T: Real>(x: &DMatrix<T>, k: usize) -> Result<NeighborLists<T>> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let lists = (0..n)
        .map(|i| {
            let mut cand: Vec<(usize, T)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, row_distance(x, i, x, j)))
                .collect();
            cand.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            cand
        })
        .collect();
    Ok(NeighborLists { k, lists })
}

/// k-NN restricted to points sharing a label; `k` is capped per class at
/// `n_c − 1`.
pub fn knn_within_class<T: Real>(x: &DMatrix<T>, labels: &[usize], k: usize) -> Result<NeighborLists<T>> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::LengthMismatch(labels.len(), n));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let lists = (0..n)
        .map(|i| {
            let mut cand: Vec<(usize, T)> = (0..n)
                .filter(|&j| j != i && labels[j] == labels[i])
                .map(|j| (j, row_distance(x, i, x, j)))
                .collect();
            cand.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            cand
        })
        .collect();
    Ok(NeighborLists { k, lists })
}

#[derive(Debug, Clone, PartialEq)]
enum Storage<T: Real> {
    /// Row adjacency lists sorted by column, symmetric.
    Sparse(Vec<Vec<(usize, T)>>),
    Dense(DMatrix<T>),
}

/// Symmetric weight matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Real> {
    n: usize,
    storage: Storage<T>,
}

impl<T: Real> WeightMatrix<T> {
    /// Dense weights. Fails if `w` is not square and symmetric; the diagonal
    /// is cleared.
    pub fn from_dense(mut w: DMatrix<T>) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(Error::ShapeMismatch(format!("{}x{} weight matrix", n, w.ncols())));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if w[(i, j)] != w[(j, i)] {
                    return Err(Error::AsymmetricInput { i, j });
                }
            }
            w[(i, i)] = T::zero();
        }
        Ok(Self {
            n,
            storage: Storage::Dense(w),
        })
    }

    /// Sparse weights from undirected edges; later duplicates overwrite.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, w) in edges {
            if i == j {
                continue;
            }
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|&(j, _)| j);
            // keep the last value written for each column
            let mut dedup: Vec<(usize, T)> = Vec::with_capacity(r.len());
            for &(j, w) in r.iter() {
                match dedup.last_mut() {
                    Some(last) if last.0 == j => last.1 = w,
                    _ => dedup.push((j, w)),
                }
            }
            *r = dedup;
        }
        Self {
            n,
            storage: Storage::Sparse(rows),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match &self.storage {
            Storage::Dense(w) => w[(i, j)],
            Storage::Sparse(rows) => rows[i]
                .binary_search_by_key(&j, |&(c, _)| c)
                .map_or(T::zero(), |p| rows[i][p].1),
        }
    }

    /// Nonzero entries of row `i` as `(j, w)`, ascending `j`.
    pub fn row(&self, i: usize) -> Vec<(usize, T)> {
        match &self.storage {
            Storage::Dense(w) => (0..self.n)
                .filter(|&j| w[(i, j)] != T::zero())
                .map(|j| (j, w[(i, j)]))
                .collect(),
            Storage::Sparse(rows) => rows[i].iter().copied().filter(|&(_, w)| w != T::zero()).collect(),
        }
    }

    /// All nonzero ordered pairs `(i, j, w)` in row-major order.
    pub fn ordered_entries(&self) -> Vec<(usize, usize, T)> {
        (0..self.n)
            .flat_map(|i| self.row(i).into_iter().map(move |(j, w)| (i, j, w)))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match &self.storage {
            Storage::Dense(w) => w.clone(),
            Storage::Sparse(rows) => {
                let mut w = DMatrix::zeros(self.n, self.n);
                for (i, r) in rows.iter().enumerate() {
                    for &(j, v) in r {
                        w[(i, j)] = v;
                    }
                }
                w
            }
        }
    }

    /// Coordinate-triplet dump `i,j,w` of the nonzero entries.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, w) in self.ordered_entries() {
            writeln!(out, "{i},{j},{w}")?;
        }
        Ok(())
    }
}

/// `W_ij = 1` iff `i ∈ N_k(j)` or `j ∈ N_k(i)`, and `y_i = y_j`.
pub fn within_class_graph<T: Real>(nb: &NeighborLists<T>, labels: &[usize]) -> Result<WeightMatrix<T>> {
    if labels.len() != nb.n() {
        return Err(Error::LengthMismatch(labels.len(), nb.n()));
    }
    let edges = nb
        .undirected_edges()
        .into_iter()
        .filter(|&(i, j, _)| labels[i] == labels[j])
        .map(|(i, j, _)| (i, j, T::one()));
    Ok(WeightMatrix::from_edges(nb.n(), edges))
}

/// Local scale of every point: distance to its k-th nearest neighbor, or,
/// when that is zero, the smallest positive neighbor distance (zero if all k
/// neighbors coincide with the point).
pub fn local_scales<T: Real>(nb: &NeighborLists<T>) -> Vec<T> {
    (0..nb.n())
        .map(|i| {
            let s = nb.kth_distance(i);
            if s > T::zero() {
                s
            } else {
                nb.of(i)
                    .iter()
                    .map(|&(_, d)| d)
                    .find(|&d| d > T::zero())
                    .unwrap_or(T::zero())
            }
        })
        .collect()
}

/// Heat-kernel affinity `exp(−‖x_i − x_j‖² / (σ_i σ_j))`, with the zero-scale
/// limit: 1 for coincident points, 0 otherwise.
pub fn affinity<T: Real>(dist: T, sigma_i: T, sigma_j: T) -> T {
    let denom = sigma_i * sigma_j;
    if denom > T::zero() {
        (-(dist * dist) / denom).exp()
    } else if dist == T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// Dense between-class weights `W′` using the global k-NN lists `nb` of `x`.
pub fn between_class_graph<T: Real>(
    x: &DMatrix<T>,
    labels: &[usize],
    nb: &NeighborLists<T>,
) -> Result<WeightMatrix<T>> {
    let n = x.nrows();
    if labels.len() != n || nb.n() != n {
        return Err(Error::LengthMismatch(labels.len(), n));
    }
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; n_classes + 1];
    for &c in labels {
        counts[c] += 1;
    }
    let sigma = local_scales(nb);
    let inv_n = T::one() / T::of_usize(n);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && labels[i] != labels[j] {
                w[(i, j)] = inv_n;
            }
        }
    }
    for (i, j, dist) in nb.undirected_edges() {
        let c = labels[i];
        if labels[j] != c {
            continue;
        }
        let a = affinity(dist, sigma[i], sigma[j]);
        let v = a * (inv_n - T::one() / T::of_usize(counts[c]));
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    WeightMatrix::from_dense(w)
}

/// Convenience wrapper computing the global k-NN lists first.
pub fn between_class_graph_knn<T: Real>(x: &DMatrix<T>, labels: &[usize], k: usize) -> Result<WeightMatrix<T>> {
    let nb = knn_neighbors(x, k)?;
    between_class_graph(x, labels, &nb)
}

/// Pairwise weights whose Laplacians give the classical LDA scatters:
/// `(W^b, W^w)`.
pub fn lda_graphs<T: Real>(labels: &[usize]) -> Result<(WeightMatrix<T>, WeightMatrix<T>)> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; n_classes + 1];
    for &c in labels {
        counts[c] += 1;
    }
    let inv_n = T::one() / T::of_usize(n);
    let mut wb = DMatrix::zeros(n, n);
    let mut ww = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if labels[i] == labels[j] {
                let inv_c = T::one() / T::of_usize(counts[labels[i]]);
                ww[(i, j)] = inv_c;
                wb[(i, j)] = inv_n - inv_c;
            } else {
                wb[(i, j)] = inv_n;
            }
        }
    }
    Ok((WeightMatrix::from_dense(wb)?, WeightMatrix::from_dense(ww)?))
}

/// `L = D − W` with `D_ii = Σ_{j≠i} W_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix<T: Real>(pub DMatrix<T>);

impl<T: Real> LaplacianMatrix<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    /// `Xᵀ L X` for a row-major point matrix `x` (n×d), i.e. the d×d
    /// matrix written `X L Xᵀ` when points are columns.
    pub fn scatter(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let lx = &self.0 * x;
        let s = x.transpose() * lx;
        (&s + s.transpose()) * T::of(0.5)
    }
}

pub fn laplacian<T: Real>(w: &WeightMatrix<T>) -> LaplacianMatrix<T> {
    let n = w.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut degree = T::zero();
        for (j, v) in w.row(i) {
            if j != i {
                l[(i, j)] = -v;
                degree += v;
            }
        }
        l[(i, i)] = degree;
    }
    LaplacianMatrix(l)
}

/// Laplacian of a dense matrix, checking symmetry first.
pub fn laplacian_dense<T: Real>(w: &DMatrix<T>) -> Result<LaplacianMatrix<T>> {
    Ok(laplacian(&WeightMatrix::from_dense(w.clone())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(points.len(), 1, points)
    }

    #[test]
    fn nearest_on_a_line() {
        let nb = knn_neighbors(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(nb.of(0)[0].0, 1);
        assert_eq!(nb.of(1)[0].0, 0);
        assert_eq!(nb.of(2)[0].0, 1);
        assert!(matches!(knn_neighbors(&line(&[0.0, 1.0, 3.0]), 3), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn ties_break_by_index() {
        let nb = knn_neighbors(&line(&[0.0, -1.0, 1.0]), 1).unwrap();
        assert_eq!(nb.of(0)[0].0, 1);
    }

    #[test]
    fn within_graph_mutual_same_class() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let w = within_class_graph(&nb, &[1, 1, 2, 2]).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(1, 0), 1.0);
        assert_eq!(w.get(2, 3), 1.0);
        assert_eq!(w.get(1, 2), 0.0);
    }

    #[test]
    fn within_graph_drops_cross_class_neighbors() {
        let x = line(&[0.0, 1.0, 5.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let w = within_class_graph(&nb, &[1, 2, 2]).unwrap();
        assert_eq!(w.get(0, 1), 0.0);
        assert_eq!(w.get(1, 2), 1.0);
    }

    #[test]
    fn between_graph_cross_class_weight() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * 3 + j) as f64);
        let labels = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let w = between_class_graph_knn(&x, &labels, 2).unwrap();
        assert_eq!(w.get(0, 9), 0.1);
        assert_eq!(w.get(7, 2), 0.1);
        // same class, far apart: not neighbors
        assert_eq!(w.get(0, 4), 0.0);
    }

    #[test]
    fn between_graph_kernel_at_unit_scale() {
        // Two same-class points at distance 1, each the other's only neighbor
        // with k = 1, so σ_i = σ_j = 1 and A = e^-1. A far point of another class.
        let x = line(&[0.0, 1.0, 100.0]);
        let labels = [1, 1, 2];
        let w = between_class_graph_knn(&x, &labels, 1).unwrap();
        let expected = (-1.0f64).exp() * (1.0 / 3.0 - 1.0 / 2.0);
        assert!((w.get(0, 1) - expected).abs() < 1e-15);
    }

    #[test]
    fn duplicate_points_use_limit() {
        let x = line(&[0.0, 0.0, 0.0, 5.0]);
        let labels = [1, 1, 1, 2];
        let w = between_class_graph_knn(&x, &labels, 2).unwrap();
        // all of point 0's neighbors coincide with it: A = 1
        assert!((w.get(0, 1) - (0.25 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn lda_weights() {
        let (wb, ww) = lda_graphs::<f64>(&[1, 1, 2, 2]).unwrap();
        assert_eq!(ww.get(0, 1), 0.5);
        assert_eq!(wb.get(0, 2), 0.25);
        assert_eq!(wb.get(0, 1), 0.25 - 0.5);
        assert_eq!(ww.get(0, 0), 0.0);
    }

    #[test]
    fn two_node_laplacian() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let l = laplacian_dense(&w).unwrap();
        assert_eq!(l.0, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let z = laplacian_dense(&DMatrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(z.0, DMatrix::zeros(3, 3));
    }

    #[test]
    fn asymmetric_rejected() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(laplacian_dense(&w), Err(Error::AsymmetricInput { .. })));
    }

    #[test]
    fn triplet_dump() {
        let w = WeightMatrix::from_edges(3, [(0, 2, 1.5f64)]);
        let mut out = Vec::new();
        w.write_triplets(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0,2,1.5\n2,0,1.5\n");
    }
}
