mod common;

use common::*;
use mpda::graph::{between_class_graph, knn_neighbors, within_class_graph};
use mpda::linalg::solve_symmetric_definite;
use mpda::mpda::{
    assemble_between, assemble_within, fit_mpda, fit_pmpda, patch_charts, pmpda_charts, solve_gep, MpdaParams,
    PmpdaParams, prepare, NeighborScope,
};
use mpda::partition::PartitionParams;
use nalgebra::{DMatrix, SymmetricEigen};

fn toy(seed: u64, n: usize, d: usize, c: usize) -> mpda::Dataset {
    let (x, labels) = curved_classes(&mut rng(seed), n, d, c);
    dataset(x, labels)
}

fn params(m: usize) -> MpdaParams {
    MpdaParams {
        k: 4,
        partition: PartitionParams {
            k_prime: 3,
            max_patch: 6,
            euclidean_only: false,
        },
        gamma: 0.5,
        alpha: 1e-2,
        m,
        ..MpdaParams::default()
    }
}

#[test]
fn reduced_solver_matches_dense_pencil() {
    for seed in 0..8 {
        let ds = toy(seed, 45, 5, 3);
        let p = params(2);
        let x = ds.features();
        let charts = patch_charts(&ds, &p.partition, p.energy).unwrap();
        let nb = knn_neighbors(x, p.k).unwrap();
        let s = assemble_within(x, &within_class_graph(&nb, ds.labels()).unwrap(), &charts, p.gamma).unwrap();
        let sp = assemble_between(x, &between_class_graph(x, ds.labels(), &nb).unwrap(), &charts.layout).unwrap();
        let dense = solve_gep(&sp, &s, p.alpha, 2, 5).unwrap();
        let reduced = prepare(&ds, charts, p.k, NeighborScope::GlobalThenFilter)
            .unwrap()
            .solve(p.gamma, p.alpha, 2)
            .unwrap();
        for k in 0..2 {
            assert!(rel_err(dense.values[k], reduced.values[k]) < 1e-9);
            let diff = (dense.vectors.column(k) - reduced.vectors.column(k)).amax();
            assert!(diff < 1e-7 * dense.vectors.column(k).amax(), "seed {seed} vector {k} differs by {diff}");
        }
    }
}

#[test]
fn pencil_eigenvalues_match_symmetric_square_root_route() {
    let mut r = rng(42);
    for n in [1usize, 3, 6, 10] {
        let g = DMatrix::from_fn(n, n, |_, _| normal(&mut r));
        let h = DMatrix::from_fn(n, n, |_, _| normal(&mut r));
        let a = &g * g.transpose();
        let s = &h * h.transpose();
        let alpha = 0.3;
        let sol = solve_symmetric_definite(&a, &s, alpha, n).unwrap();
        // B^{-1/2} A B^{-1/2} through the eigen-decomposition of B
        let b = &s + DMatrix::identity(n, n) * alpha;
        let eb = SymmetricEigen::new(b);
        let inv_sqrt = &eb.eigenvectors
            * DMatrix::from_diagonal(&eb.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * eb.eigenvectors.transpose();
        let mut want: Vec<f64> = SymmetricEigen::new(&inv_sqrt * &a * &inv_sqrt).eigenvalues.iter().copied().collect();
        want.sort_by(|p, q| q.partial_cmp(p).unwrap());
        for (k, w) in want.iter().enumerate() {
            assert!(rel_err(sol.values[k], *w) < 1e-9, "n {n}: {} vs {w}", sol.values[k]);
        }
        assert!(sol.max_relative_residual(&a, &s, alpha) < 1e-9);
    }
}

#[test]
fn class_relabelling_leaves_projection_unchanged() {
    let (x, labels) = curved_classes(&mut rng(3), 40, 4, 3);
    let a = dataset(x.clone(), labels.clone());
    let swapped: Vec<usize> = labels.iter().map(|&l| [0, 3, 1, 2][l]).collect();
    let b = dataset(x, swapped);
    let ma = fit_mpda(&a, &params(2)).unwrap();
    let mb = fit_mpda(&b, &params(2)).unwrap();
    for k in 0..2 {
        assert!(rel_err(ma.eigenvalues[k], mb.eigenvalues[k]) < 1e-9);
    }
    assert!((&ma.projection - &mb.projection).amax() < 1e-7);
}

#[test]
fn pmpda_has_one_chart_per_point() {
    let ds = toy(5, 30, 4, 2);
    let p = PmpdaParams { k: 4, m: 2, ..PmpdaParams::default() };
    let charts = pmpda_charts(&ds, &p).unwrap();
    assert_eq!(charts.layout.patches(), ds.n());
    assert_eq!(charts.chart_of, (0..ds.n()).collect::<Vec<_>>());
    assert!(charts.layout.total() <= p.max_total);
    let model = fit_pmpda(&ds, &p).unwrap();
    assert_eq!(model.projection.shape(), (4, 2));
}

#[test]
fn pmpda_respects_total_size_cap() {
    let ds = toy(6, 30, 4, 2);
    let p = PmpdaParams { k: 4, m: 1, max_total: 4 + 10, ..PmpdaParams::default() };
    assert!(fit_pmpda(&ds, &p).is_err());
}

#[test]
fn transform_is_linear() {
    let ds = toy(7, 40, 5, 2);
    let model = fit_mpda(&ds, &params(3)).unwrap();
    let mut r = rng(8);
    let u = DMatrix::from_fn(6, 5, |_, _| normal(&mut r));
    let v = DMatrix::from_fn(6, 5, |_, _| normal(&mut r));
    let lhs = model.transform(&(&u * 2.5 - &v * 0.5)).unwrap();
    let rhs = model.transform(&u).unwrap() * 2.5 - model.transform(&v).unwrap() * 0.5;
    assert!((lhs - rhs).amax() < 1e-10);
}

#[test]
fn fitting_is_deterministic() {
    let ds = toy(9, 50, 6, 3);
    let a = fit_mpda(&ds, &params(2)).unwrap();
    let b = fit_mpda(&ds, &params(2)).unwrap();
    assert_eq!(a.projection, b.projection);
    assert_eq!(a.eigenvalues, b.eigenvalues);
}

#[test]
fn single_precision_fit_tracks_double() {
    let ds = toy(10, 40, 4, 2);
    let p = MpdaParams { alpha: 1.0, ..params(1) };
    let f64_model = fit_mpda(&ds, &p).unwrap();
    let x32 = ds.features().map(|v| v as f32);
    let ds32 = mpda::dataset::LabeledDataset::new(x32, ds.labels().to_vec()).unwrap();
    let f32_model = fit_mpda(&ds32, &p).unwrap();
    let diff = (f32_model.projection.map(|v| v as f64) - &f64_model.projection).amax();
    assert!(diff < 1e-2, "f32 and f64 projections differ by {diff}");
}

#[test]
fn rejects_bad_parameters() {
    let ds = toy(11, 20, 3, 2);
    assert!(fit_mpda(&ds, &MpdaParams { alpha: 0.0, ..params(1) }).is_err());
    assert!(fit_mpda(&ds, &MpdaParams { m: 4, ..params(1) }).is_err());
    assert!(fit_mpda(&ds, &MpdaParams { gamma: -1.0, ..params(1) }).is_err());
}
