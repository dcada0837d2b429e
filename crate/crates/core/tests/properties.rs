//! Property tests for the tree engine, screening bounds and data layer,
//! checked against exhaustive enumeration at desk scale.

use proptest::prelude::*;
use std::collections::{BTreeMap, HashSet};
use std::io::Cursor;

use treelasso::data::{binarize, synth_generate, CovariateMatrix, ProblemConfig, RawMatrix};
use treelasso::libsvm::{load_libsvm, write_libsvm};
use treelasso::oracle::enumerate_all;
use treelasso::screening::{build_context, feature_screen_bounds, node_prune_bounds};
use treelasso::solver::SparseSolution;
use treelasso::tree::{feature_vector, tree_max_abs_inner, weighted_bounds, Itemset};

/// A random covariate matrix in [0,1]: binary or continuous-valued entries.
fn matrix_strategy(
    max_n: usize,
    max_d: usize,
    binary: bool,
) -> impl Strategy<Value = CovariateMatrix<f64>> {
    let entry = if binary {
        prop_oneof![2 => Just(0.0), 1 => Just(1.0)].boxed()
    } else {
        prop_oneof![2 => Just(0.0), 1 => 0.05f64..=1.0].boxed()
    };
    (1..=max_n, 1..=max_d)
        .prop_flat_map(move |(n, d)| {
            proptest::collection::vec(proptest::collection::vec(entry.clone(), d), n)
        })
        .prop_map(|rows| CovariateMatrix::from_dense_rows(&rows).unwrap())
}

/// All itemsets of size ≤ r with dense columns, via the oracle's dense route.
fn dense_expansion(z: &CovariateMatrix<f64>, r: usize) -> Vec<(Itemset, Vec<f64>)> {
    enumerate_all(z, r, 1_000_000).unwrap().columns
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Descendant features never exceed ancestors elementwise; zero ancestors
    /// have zero descendants.
    #[test]
    fn anti_monotone_features(z in matrix_strategy(12, 6, false)) {
        let r = 3usize.min(z.d());
        let expansion = dense_expansion(&z, r);
        let by_itemset: BTreeMap<&Itemset, &Vec<f64>> =
            expansion.iter().map(|(its, col)| (its, col)).collect();
        for (its, col) in &expansion {
            if its.order() >= r { continue; }
            for (child, ccol) in &expansion {
                let is_desc = child.order() > its.order()
                    && child.indices()[..its.order()] == *its.indices();
                if !is_desc { continue; }
                for (a, b) in col.iter().zip(ccol.iter()) {
                    prop_assert!(b <= a, "descendant exceeds ancestor");
                }
                if col.iter().all(|v| *v == 0.0) {
                    prop_assert!(ccol.iter().all(|v| *v == 0.0));
                }
            }
        }
        let _ = by_itemset;
    }

    /// max(pos, neg) of a node bounds |x'ᵀv| for every descendant x'.
    #[test]
    fn weighted_bound_dominates_descendants(
        z in matrix_strategy(10, 6, false),
        seed in 0u64..1000,
    ) {
        let r = 3usize.min(z.d());
        let v: Vec<f64> = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..z.n()).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()
        };
        let expansion = dense_expansion(&z, r);
        for (its, _) in &expansion {
            let feat = feature_vector(its, &z);
            let (pos, neg) = weighted_bounds(&feat, &v);
            prop_assert!(pos >= 0.0 && neg >= 0.0);
            let bound = pos.max(neg);
            for (child, ccol) in &expansion {
                let is_desc = child.order() > its.order()
                    && child.indices()[..its.order()] == *its.indices();
                if !is_desc { continue; }
                let inner: f64 = ccol.iter().zip(&v).map(|(x, w)| x * w).sum();
                prop_assert!(inner.abs() <= bound + 1e-12,
                    "descendant {child} value {} exceeds bound {} at node {its}", inner.abs(), bound);
            }
        }
    }

    /// The pruned tree search equals brute force over the dense expansion,
    /// including the lexicographic tie-break and exclusion sets.
    #[test]
    fn tree_max_equals_brute_force(
        z in matrix_strategy(14, 7, true),
        seed in 0u64..1000,
        exclude_mask in 0usize..8,
    ) {
        let r = 3usize.min(z.d());
        let v: Vec<f64> = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..z.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        };
        let expansion = dense_expansion(&z, r);
        // exclude a few arbitrary itemsets
        let exclude: HashSet<Itemset> = expansion
            .iter()
            .enumerate()
            .filter(|(i, _)| exclude_mask >> (i % 3) & 1 == 1 && i % 5 == 0)
            .map(|(_, (its, _))| its.clone())
            .collect();

        let mut best_val = 0.0f64;
        let mut best_its: Option<&Itemset> = None;
        for (its, col) in &expansion {
            if exclude.contains(its) { continue; }
            let inner: f64 = col.iter().zip(&v).map(|(x, w)| x * w).sum();
            if inner.abs() > best_val {
                best_val = inner.abs();
                best_its = Some(its);
            }
        }

        let got = tree_max_abs_inner(&z, &v, r, &exclude);
        prop_assert!((got.value - best_val).abs() <= 1e-12,
            "value mismatch: tree {} vs brute {best_val}", got.value);
        prop_assert_eq!(got.itemset.as_ref(), best_its, "argmax mismatch");
    }

    /// Node bounds dominate every descendant's per-feature screen bound for
    /// arbitrary (not necessarily optimal) warm solutions.
    #[test]
    fn node_bounds_dominate_feature_bounds(
        z in matrix_strategy(10, 6, true),
        seed in 0u64..1000,
        with_warm in proptest::bool::ANY,
    ) {
        let r = 3usize.min(z.d());
        let y: Vec<f64> = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..z.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        };
        let expansion = dense_expansion(&z, r);
        let prev = if with_warm {
            // arbitrary sparse coefficients on a couple of nonzero features
            let mut coef = BTreeMap::new();
            for (k, (its, col)) in expansion.iter().enumerate() {
                if k % 4 == 1 && col.iter().any(|v| *v != 0.0) && coef.len() < 3 {
                    coef.insert(its.clone(), if k % 8 < 4 { 0.37 } else { -0.81 });
                }
            }
            SparseSolution::from_parts(1.0, 0.0, coef)
        } else {
            SparseSolution::empty(1.0)
        };
        let cfg = ProblemConfig::<f64>::new(r);
        let ctx = build_context(&prev, 1.0, 0.62, &z, &y, &cfg).unwrap();

        for (its, col) in &expansion {
            if its.order() >= r || col.iter().all(|v| *v == 0.0) { continue; }
            let feat = feature_vector(its, &z);
            let (up, um) = node_prune_bounds(&ctx, &feat);
            for (child, _) in &expansion {
                let is_desc = child.order() > its.order()
                    && child.indices()[..its.order()] == *its.indices();
                if !is_desc { continue; }
                let cfeat = feature_vector(child, &z);
                let (fp, fm) = feature_screen_bounds(&ctx, &cfeat);
                prop_assert!(up >= fp - 1e-12, "U+ {up} < u+ {fp} at {its}->{child}");
                prop_assert!(um >= fm - 1e-12, "U- {um} < u- {fm} at {its}->{child}");
            }
        }
    }

    /// libsvm round trip preserves the matrix exactly (last column pinned
    /// nonempty so d survives the format).
    #[test]
    fn libsvm_round_trip(z in matrix_strategy(10, 5, false), seed in 0u64..100) {
        let n = z.n();
        let mut columns: Vec<_> = z.columns().to_vec();
        if columns.last().is_some_and(|c| c.is_empty()) {
            *columns.last_mut().unwrap() = treelasso::SparseVec::new(vec![0], vec![1.0]);
        }
        let z = CovariateMatrix::from_columns(n, columns).unwrap();
        let y: Vec<f64> = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        };
        let y = treelasso::ResponseVector::new(y).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&mut buf, &z, &y).unwrap();
        let (z2, y2) = load_libsvm::<f64, _>(Cursor::new(buf.as_slice())).unwrap();
        prop_assert_eq!(z.n(), z2.n());
        prop_assert_eq!(z.d(), z2.d());
        prop_assert_eq!(y.as_slice(), y2.as_slice());
        for j in 0..z.d() {
            prop_assert_eq!(z.column(j), z2.column(j));
        }
    }

    /// Binarization doubles the column count and always yields binary output.
    #[test]
    fn binarize_shape_and_flag(
        rows in proptest::collection::vec(
            proptest::collection::vec(-3.0f64..3.0, 1..6), 2..12),
        delta in 0.5f64..2.5,
    ) {
        let d = rows[0].len();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.resize(d, 0.0); r }).collect();
        let raw = RawMatrix::from_dense_rows(&rows);
        let z = binarize(&raw, delta).unwrap();
        prop_assert_eq!(z.d(), 2 * d);
        prop_assert!(z.is_binary());
        prop_assert_eq!(z.n(), rows.len());
    }

    /// Synthetic sparsity concentrates near eta.
    #[test]
    fn synth_sparsity_concentrates(seed in 0u64..50, eta_pct in 50u32..99) {
        let eta = eta_pct as f64 / 100.0;
        let (n, d) = (80usize, 25usize);
        let (z, _) = synth_generate::<f64>(n, d, eta, 0.1, seed).unwrap();
        let empirical = 1.0 - z.nnz() as f64 / (n * d) as f64;
        let slack = 3.0 * (eta * (1.0 - eta) / (n * d) as f64).sqrt();
        prop_assert!((empirical - eta).abs() < slack.max(1e-3) * 1.7,
            "empirical {empirical} vs eta {eta} (slack {slack})");
    }
}

/// Zero features prune soundly: a zero node implies every descendant is zero
/// (direct check, not sampled).
#[test]
fn empty_feature_subtrees_are_zero() {
    let z = CovariateMatrix::from_dense_rows(&[
        vec![1.0, 0.0, 1.0, 0.5],
        vec![0.0, 1.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.25],
    ])
    .unwrap();
    let expansion = dense_expansion(&z, 3);
    for (its, col) in &expansion {
        if col.iter().all(|v| *v == 0.0) {
            for (child, ccol) in &expansion {
                let is_desc = child.order() > its.order()
                    && child.indices()[..its.order()] == *its.indices();
                if is_desc {
                    assert!(ccol.iter().all(|v| *v == 0.0));
                }
            }
        }
    }
}

/// Zero weight vector returns (none, 0) regardless of matrix shape.
#[test]
fn tree_max_zero_vector() {
    let (z, _) = synth_generate::<f64>(9, 5, 0.6, 0.1, 3).unwrap();
    let got = tree_max_abs_inner(&z, &[0.0; 9], 3, &HashSet::new());
    assert_eq!(got.itemset, None);
    assert_eq!(got.value, 0.0);
}
