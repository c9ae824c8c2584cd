//! Graph-approximated geodesic distances and patch linearity (tortuosity).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{knn_neighbors, NeighborLists};
use crate::linalg::pairwise_distances;
use crate::scalar::Real;

/// Shortest-path distances `D^G` over a neighbor graph together with the
/// Euclidean distances `D^E` of the same points. Unreachable pairs hold +∞.
#[derive(Debug, Clone)]
pub struct GeodesicMatrix<T: Real> {
    pub geodesic: DMatrix<T>,
    pub euclidean: DMatrix<T>,
}

impl<T: Real> GeodesicMatrix<T> {
    pub fn n(&self) -> usize {
        self.geodesic.nrows()
    }

    pub fn reachable(&self, i: usize, j: usize) -> bool {
        self.geodesic[(i, j)].is_finite_value()
    }

    /// Tortuosity `R_ij = D^G_ij / D^E_ij`, with 1 on the diagonal and for
    /// coincident points.
    pub fn tortuosity(&self, i: usize, j: usize) -> T {
        let de = self.euclidean[(i, j)];
        if i == j || de == T::zero() {
            T::one()
        } else {
            self.geodesic[(i, j)] / de
        }
    }

    /// Connected components (by finite geodesic distance), each ascending,
    /// ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let comp: Vec<usize> = (0..n).filter(|&j| self.reachable(i, j)).collect();
            for &j in &comp {
                seen[j] = true;
            }
            out.push(comp);
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Entry<T> {}
impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Entry<T> {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Undirected adjacency from neighbor lists (edge length = Euclidean distance).
fn adjacency<T: Real>(nb: &NeighborLists<T>) -> Vec<Vec<(usize, T)>> {
    let mut adj = vec![Vec::new(); nb.n()];
    for (i, j, d) in nb.undirected_edges() {
        adj[i].push((j, d));
        adj[j].push((i, d));
    }
    adj
}

fn dijkstra<T: Real>(adj: &[Vec<(usize, T)>], source: usize) -> Vec<T> {
    let inf = T::of(f64::INFINITY);
    let mut dist = vec![inf; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Entry {
        dist: T::zero(),
        node: source,
    });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let cand = d + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(Entry { dist: cand, node: next });
            }
        }
    }
    dist
}

/// Shortest-path distances from every node of the (undirected) neighbor
/// graph `nb` built over the rows of `x`.
pub fn geodesic_distances<T: Real>(x: &DMatrix<T>, nb: &NeighborLists<T>) -> Result<GeodesicMatrix<T>> {
    let n = x.nrows();
    if nb.n() != n {
        return Err(Error::LengthMismatch(nb.n(), n));
    }
    let adj = adjacency(nb);
    let mut geodesic = DMatrix::zeros(n, n);
    for s in 0..n {
        let row = dijkstra(&adj, s);
        for (t, v) in row.into_iter().enumerate() {
            geodesic[(s, t)] = v;
        }
    }
    // symmetrize away round-off between the two directions
    for i in 0..n {
        for j in (i + 1)..n {
            let v = geodesic[(i, j)].min(geodesic[(j, i)]);
            geodesic[(i, j)] = v;
            geodesic[(j, i)] = v;
        }
    }
    Ok(GeodesicMatrix {
        geodesic,
        euclidean: pairwise_distances(x),
    })
}

/// Geodesics over the k′-NN graph of `x`; k′ is capped at `n − 1`.
pub fn knn_geodesics<T: Real>(x: &DMatrix<T>, k_prime: usize) -> Result<GeodesicMatrix<T>> {
    let n = x.nrows();
    if n <= 1 {
        return Ok(GeodesicMatrix {
            geodesic: DMatrix::zeros(n, n),
            euclidean: DMatrix::zeros(n, n),
        });
    }
    let nb = knn_neighbors(x, k_prime.clamp(1, n - 1))?;
    geodesic_distances(x, &nb)
}

/// Mean tortuosity over all ordered member pairs, diagonal included.
pub fn patch_linearity<T: Real>(members: &[usize], g: &GeodesicMatrix<T>) -> Result<T> {
    if members.is_empty() {
        return Err(Error::InvalidParameter("empty patch".into()));
    }
    let mut sum = T::zero();
    for &i in members {
        for &j in members {
            if !g.reachable(i, j) {
                return Err(Error::InvalidParameter(format!(
                    "points {i} and {j} are not connected in the neighbor graph"
                )));
            }
            sum += g.tortuosity(i, j);
        }
    }
    let np = T::of_usize(members.len());
    Ok(sum / (np * np))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::knn_neighbors;

    #[test]
    fn chain_path_sum() {
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let g = geodesic_distances(&x, &nb).unwrap();
        assert_eq!(g.geodesic[(0, 2)], 2.0);
    }

    #[test]
    fn disconnected_is_infinite() {
        // k = 1 on {0, 1, 10, 11}: two components
        let x = DMatrix::from_column_slice(4, 1, &[0.0f64, 1.0, 10.0, 11.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let g = geodesic_distances(&x, &nb).unwrap();
        assert!(g.geodesic[(0, 3)].is_infinite());
        assert_eq!(g.components(), vec![vec![0, 1], vec![2, 3]]);
        assert!(patch_linearity(&[0, 3], &g).is_err());
    }

    #[test]
    fn collinear_linearity_is_one() {
        let x = DMatrix::from_column_slice(3, 1, &[0.0f64, 1.0, 2.0]);
        let nb = knn_neighbors(&x, 2).unwrap();
        let g = geodesic_distances(&x, &nb).unwrap();
        assert!((patch_linearity(&[0, 1, 2], &g).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(patch_linearity(&[1], &g).unwrap(), 1.0);
    }

    #[test]
    fn elbow_linearity() {
        // (0,0), (1,0), (1,1) linked only along the elbow (k = 1).
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let g = geodesic_distances(&x, &nb).unwrap();
        let r13 = g.tortuosity(0, 2);
        assert!((r13 - 2f64.sqrt()).abs() < 1e-15);
        // hand sum: 3 diagonal ones + 4 unit off-diagonal + 2·√2
        let expected = (7.0 + 2.0 * 2f64.sqrt()) / 9.0;
        assert!((patch_linearity(&[0, 1, 2], &g).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_tortuosity_one() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        let nb = knn_neighbors(&x, 1).unwrap();
        let g = geodesic_distances(&x, &nb).unwrap();
        assert_eq!(g.tortuosity(0, 1), 1.0);
    }
}
