//! Top-down divisive partitioning of one class into near-linear patches.
//!
//! The patch with the largest `R^p · N_p` among those above the size bound is
//! repeatedly split in two. A split seeds two sides with the pair of members
//! farthest apart along the neighbor graph, then grows both sides by their k′
//! nearest remaining points; points claimed by both sides in the same round go
//! to the side with the smaller `R · N`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::geodesy::{knn_geodesics, patch_linearity, GeodesicMatrix};
use crate::linalg::pairwise_distances;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    /// Neighborhood size for the geodesic graph and for growing split sides.
    pub k_prime: usize,
    /// Maximum patch size.
    pub max_patch: usize,
    /// Rank patches by size alone and skip geodesics (treat every `R^p` as 1).
    pub euclidean_only: bool,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            k_prime: 6,
            max_patch: 10,
            euclidean_only: false,
        }
    }
}

/// Disjoint patches covering one point set. Member indices are local to the
/// matrix given to [`partition_class`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub patches: Vec<Vec<usize>>,
    pub linearity: Vec<f64>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.patches.iter().map(Vec::len).collect()
    }

    /// `patch_of[i]` = index of the patch containing point `i`.
    pub fn patch_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (p, members) in self.patches.iter().enumerate() {
            for &i in members {
                out[i] = p;
            }
        }
        out
    }
}

/// Distances the splitter works with: graph geodesics, or plain Euclidean
/// distances in the shortcut mode.
struct Metric<T: Real> {
    geo: GeodesicMatrix<T>,
    euclidean_only: bool,
}

impl<T: Real> Metric<T> {
    fn linearity(&self, members: &[usize]) -> T {
        if self.euclidean_only {
            T::one()
        } else {
            // components are split up front, so members are always connected
            patch_linearity(members, &self.geo).expect("patch members are connected")
        }
    }

    fn far(&self, i: usize, j: usize) -> T {
        self.geo.geodesic[(i, j)]
    }

    fn euclid(&self, i: usize, j: usize) -> T {
        self.geo.euclidean[(i, j)]
    }
}

/// Partition the rows of `x` (one class) into patches of at most
/// `params.max_patch` points.
pub fn partition_class<T: Real>(x: &DMatrix<T>, params: &PartitionParams) -> Result<Partition> {
    let n = x.nrows();
    if n == 0 {
        return Ok(Partition {
            patches: Vec::new(),
            linearity: Vec::new(),
        });
    }
    let max_patch = params.max_patch.max(1);
    let geo = if params.euclidean_only {
        let e = pairwise_distances(x);
        GeodesicMatrix {
            geodesic: e.clone(),
            euclidean: e,
        }
    } else {
        knn_geodesics(x, params.k_prime)?
    };
    let metric = Metric {
        geo,
        euclidean_only: params.euclidean_only,
    };

    let mut patches = if params.euclidean_only {
        vec![(0..n).collect::<Vec<_>>()]
    } else {
        metric.geo.components()
    };
    let mut scores: Vec<T> = patches.iter().map(|p| metric.linearity(p)).collect();

    loop {
        let mut pick: Option<(usize, T)> = None;
        for (p, members) in patches.iter().enumerate() {
            if members.len() <= max_patch {
                continue;
            }
            let score = scores[p] * T::of_usize(members.len());
            if pick.is_none_or(|(_, best)| score > best) {
                pick = Some((p, score));
            }
        }
        let Some((p, _)) = pick else { break };
        let (left, right) = split_with(&patches[p], &metric, params.k_prime.max(1));
        scores[p] = metric.linearity(&left);
        patches[p] = left;
        scores.push(metric.linearity(&right));
        patches.push(right);
    }

    Ok(Partition {
        patches,
        linearity: scores.iter().map(|s| s.as_f64()).collect(),
    })
}

/// Split one patch into two disjoint, covering halves using the class-level
/// geodesic matrix `geo`.
pub fn split_patch<T: Real>(patch: &[usize], geo: &GeodesicMatrix<T>, k_prime: usize) -> (Vec<usize>, Vec<usize>) {
    let metric = Metric {
        geo: geo.clone(),
        euclidean_only: false,
    };
    split_with(patch, &metric, k_prime.max(1))
}

fn split_with<T: Real>(patch: &[usize], metric: &Metric<T>, k_prime: usize) -> (Vec<usize>, Vec<usize>) {
    let mut members = patch.to_vec();
    members.sort_unstable();
    if members.len() < 2 {
        return (members, Vec::new());
    }

    // seeds: farthest pair, lowest indices on ties
    let mut seeds = (members[0], members[1]);
    let mut best = -T::one();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let d = metric.far(i, j);
            if d > best {
                best = d;
                seeds = (i, j);
            }
        }
    }
    let (l, r) = seeds;
    let mut left = vec![l];
    let mut right = vec![r];
    let mut rest: Vec<usize> = members.into_iter().filter(|&i| i != l && i != r).collect();

    // distance from each remaining point to the nearest member of each side
    let mut to_left: Vec<T> = rest.iter().map(|&i| metric.euclid(i, l)).collect();
    let mut to_right: Vec<T> = rest.iter().map(|&i| metric.euclid(i, r)).collect();

    while !rest.is_empty() {
        let near_l = nearest_k(&rest, &to_left, k_prime);
        let near_r = nearest_k(&rest, &to_right, k_prime);
        let joint: Vec<usize> = near_l.iter().copied().filter(|i| near_r.contains(i)).collect();

        let mut taken = Vec::new();
        for &i in near_l.iter().filter(|i| !joint.contains(i)) {
            left.push(i);
            taken.push((i, true));
        }
        for &i in near_r.iter().filter(|i| !joint.contains(i)) {
            right.push(i);
            taken.push((i, false));
        }
        if !joint.is_empty() {
            let score_l = metric.linearity(&left) * T::of_usize(left.len());
            let score_r = metric.linearity(&right) * T::of_usize(right.len());
            let to_left_side = score_l <= score_r;
            for &i in &joint {
                if to_left_side {
                    left.push(i);
                } else {
                    right.push(i);
                }
                taken.push((i, to_left_side));
            }
        }

        for (i, side_left) in taken {
            let pos = rest.iter().position(|&x| x == i).expect("taken point is in rest");
            rest.swap_remove(pos);
            to_left.swap_remove(pos);
            to_right.swap_remove(pos);
            for (q, &other) in rest.iter().enumerate() {
                let d = metric.euclid(other, i);
                if side_left {
                    if d < to_left[q] {
                        to_left[q] = d;
                    }
                } else if d < to_right[q] {
                    to_right[q] = d;
                }
            }
        }
    }
    (left, right)
}

/// The `k` entries of `points` with the smallest `dist`, ties by point index.
fn nearest_k<T: Real>(points: &[usize], dist: &[T], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        dist[a]
            .partial_cmp(&dist[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(points[a].cmp(&points[b]))
    });
    order.truncate(k);
    order.into_iter().map(|q| points[q]).collect()
}
