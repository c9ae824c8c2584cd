mod common;

use std::collections::BTreeMap;

use mpda::dataset::{split_indices, stratified_folds};
use mpda::partition::{partition_class, PartitionParams};
use mpda::tangent::fit_tangent_basis;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn points() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..50, 1usize..5).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| DMatrix::from_row_slice(n, d, &v))
    })
}

/// Every class of 1..=C has at least 5 members, in shuffled order.
fn labels() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(5usize..40, 1..=4)
        .prop_map(|counts| {
            counts
                .iter()
                .enumerate()
                .flat_map(|(c, &n)| std::iter::repeat_n(c + 1, n))
                .collect::<Vec<_>>()
        })
        .prop_shuffle()
}

proptest! {
    #[test]
    fn partition_is_a_bounded_disjoint_cover(x in points(), k_prime in 1usize..7, max_patch in 1usize..12, euclid in any::<bool>()) {
        let params = PartitionParams { k_prime, max_patch, euclidean_only: euclid };
        let p = partition_class(&x, &params).unwrap();
        let mut seen = vec![0; x.nrows()];
        for patch in &p.patches {
            prop_assert!(!patch.is_empty() && patch.len() <= max_patch);
            for &i in patch {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn tangent_bases_are_orthonormal(x in points(), energy in 0.05f64..=1.0) {
        let t = fit_tangent_basis(&x, energy, None).unwrap();
        prop_assert!(t.dim() < x.nrows().max(1));
        let gram = t.basis.transpose() * &t.basis;
        prop_assert!((gram - DMatrix::identity(t.dim(), t.dim())).amax() < 1e-10);
    }

    #[test]
    fn splits_are_stratified_and_reproducible(labels in labels(), seed in any::<u64>(), frac in 0.2f64..0.8) {
        let c = *labels.iter().max().unwrap();
        let a = split_indices(&labels, c, frac, seed).unwrap();
        prop_assert_eq!(&a, &split_indices(&labels, c, frac, seed).unwrap());
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let mut per_class = BTreeMap::new();
        for &l in &labels {
            *per_class.entry(l).or_insert(0usize) += 1;
        }
        for (&class, &n_c) in &per_class {
            let got = a.train.iter().filter(|&&i| labels[i] == class).count();
            prop_assert_eq!(got, (n_c as f64 * frac).round() as usize);
        }
    }

    #[test]
    fn folds_balance_every_class(labels in labels(), seed in any::<u64>(), folds in 2usize..5) {
        let c = *labels.iter().max().unwrap();
        let fold_of = stratified_folds(&labels, c, folds, seed).unwrap();
        prop_assert_eq!(&fold_of, &stratified_folds(&labels, c, folds, seed).unwrap());
        for class in 1..=c {
            let counts: Vec<usize> = (0..folds)
                .map(|f| (0..labels.len()).filter(|&i| labels[i] == class && fold_of[i] == f).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} fold sizes {:?}", class, counts);
        }
    }
}
