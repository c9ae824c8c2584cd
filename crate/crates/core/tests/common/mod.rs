//! Brute-force oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use mpda::dataset::LabeledDataset;
use mpda::mpda::Charts;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn dist(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (x.row(i) - x.row(j)).norm()
}

/// k nearest other points of every row, sorted by (distance, index).
pub fn brute_knn(x: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(x, i, j), j)).collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

fn neighbors(nb: &[Vec<usize>], i: usize, j: usize) -> bool {
    nb[i].contains(&j) || nb[j].contains(&i)
}

pub fn oracle_within(x: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let nb = brute_knn(x, k);
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j && labels[i] == labels[j] && neighbors(&nb, i, j) {
            1.0
        } else {
            0.0
        }
    })
}

pub fn oracle_between(x: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let nb = brute_knn(x, k);
    let n = x.nrows();
    let sigma: Vec<f64> = (0..n).map(|i| dist(x, i, nb[i][k - 1])).collect();
    let count = |c: usize| labels.iter().filter(|&&l| l == c).count() as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if labels[i] != labels[j] {
            1.0 / n as f64
        } else if neighbors(&nb, i, j) {
            let a = (-dist(x, i, j).powi(2) / (sigma[i] * sigma[j])).exp();
            a * (1.0 / n as f64 - 1.0 / count(labels[i]))
        } else {
            0.0
        }
    })
}

pub fn oracle_laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut l = -w.clone();
    for i in 0..w.nrows() {
        l[(i, i)] += w.row(i).sum();
    }
    l
}

/// Σ_ij W_ij [ (tᵀd − v_Pᵀ T_Pᵀ d)² + γ ‖v_Q − T_Qᵀ T_P v_P‖² ], d = x_i − x_j,
/// P = chart of j, Q = chart of i.
pub fn direct_within(x: &DMatrix<f64>, w: &DMatrix<f64>, charts: &Charts<f64>, gamma: f64, f: &DVector<f64>) -> f64 {
    let d = x.ncols();
    let t = f.rows(0, d);
    let block = |p: usize| {
        let (s, m) = charts.layout.block(p);
        f.rows(s, m).into_owned()
    };
    let mut total = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.nrows() {
            let wij = w[(i, j)];
            if wij == 0.0 {
                continue;
            }
            let diff: DVector<f64> = (x.row(i) - x.row(j)).transpose();
            let p = charts.chart_of[j];
            let q = charts.chart_of[i];
            let tp = &charts.bases[p].basis;
            let tq = &charts.bases[q].basis;
            let vp = block(p);
            let vq = block(q);
            let r = t.dot(&diff) - vp.dot(&(tp.transpose() * &diff));
            let s = (&vq - tq.transpose() * tp * &vp).norm_squared();
            total += wij * (r * r + gamma * s);
        }
    }
    total
}

/// Σ_ij W′_ij (tᵀx_i − tᵀx_j)².
pub fn direct_between(x: &DMatrix<f64>, w: &DMatrix<f64>, t: &DVector<f64>) -> f64 {
    let proj = x * t;
    let mut total = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.nrows() {
            let diff = proj[i] - proj[j];
            total += w[(i, j)] * diff * diff;
        }
    }
    total
}

/// All-pairs shortest paths on the undirected k-NN graph with Euclidean edge lengths.
pub fn floyd_warshall(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let nb = brute_knn(x, k);
    let mut g = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        g[(i, i)] = 0.0;
        for &j in &nb[i] {
            let dij = dist(x, i, j);
            g[(i, j)] = g[(i, j)].min(dij);
            g[(j, i)] = g[(j, i)].min(dij);
        }
    }
    for via in 0..n {
        for i in 0..n {
            for j in 0..n {
                let alt = g[(i, via)] + g[(via, j)];
                if alt < g[(i, j)] {
                    g[(i, j)] = alt;
                }
            }
        }
    }
    g
}

/// Classical mean-based (S_b, S_w).
pub fn classical_scatter(x: &DMatrix<f64>, labels: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = x.ncols();
    let mu = x.row_mean();
    let mut sb = DMatrix::zeros(d, d);
    let mut sw = DMatrix::zeros(d, d);
    let classes = labels.iter().copied().max().unwrap();
    for c in 1..=classes {
        let rows: Vec<usize> = (0..x.nrows()).filter(|&i| labels[i] == c).collect();
        if rows.is_empty() {
            continue;
        }
        let xc = x.select_rows(rows.iter());
        let mc = xc.row_mean();
        let diff = (&mc - &mu).transpose();
        sb += &diff * diff.transpose() * rows.len() as f64;
        for r in xc.row_iter() {
            let e = (r - &mc).transpose();
            sw += &e * e.transpose();
        }
    }
    (sb, sw)
}

/// Label of the nearest training row by exhaustive scan, ties to the lowest index.
pub fn brute_nn(train: &DMatrix<f64>, labels: &[usize], test: &DMatrix<f64>) -> Vec<usize> {
    (0..test.nrows())
        .map(|q| {
            let mut best = (f64::INFINITY, 0);
            for i in 0..train.nrows() {
                let d2 = (test.row(q) - train.row(i)).norm_squared();
                if d2 < best.0 {
                    best = (d2, i);
                }
            }
            labels[best.1]
        })
        .collect()
}

/// Points on noisy curves, one curve per class.
pub fn curved_classes(r: &mut ChaCha8Rng, n: usize, d: usize, classes: usize) -> (DMatrix<f64>, Vec<usize>) {
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes + 1).collect();
    // shuffle labels so classes interleave in index order
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        labels.swap(i, j);
    }
    let offsets: Vec<Vec<f64>> = (0..classes).map(|_| (0..d).map(|_| normal(r) * 2.0).collect()).collect();
    let freq: Vec<f64> = (0..d).map(|_| r.random_range(0.3..2.0)).collect();
    let x = DMatrix::from_fn(n, d, |_, _| 0.0);
    let mut x = x;
    for i in 0..n {
        let s: f64 = r.random_range(-2.0..2.0);
        let c = labels[i] - 1;
        for j in 0..d {
            x[(i, j)] = offsets[c][j] + (freq[j] * s + j as f64).sin() * 1.5 + 0.1 * normal(r);
        }
    }
    (x, labels)
}

pub fn dataset(x: DMatrix<f64>, labels: Vec<usize>) -> LabeledDataset<f64> {
    LabeledDataset::new(x, labels).expect("valid dataset")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Entrywise relative error, entries far below the matrix scale compared absolutely.
pub fn max_entry_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(a.amax());
    a.iter()
        .zip(b.iter())
        .map(|(&p, &q)| {
            let denom = p.abs().max(q.abs()).max(scale * 1e-6);
            if denom == 0.0 {
                0.0
            } else {
                (p - q).abs() / denom
            }
        })
        .fold(0.0, f64::max)
}
