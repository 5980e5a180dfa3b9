//! Metrics, assignment, clustering, enumeration and aggregation checked
//! against the brute-force references in `support`.

mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::oracle_suite as suite;
use support::*;
use triad_coref_core::clustering::{agglomerate, cut, Linkage};
use triad_coref_core::document::Document;
use triad_coref_core::metrics::{b_cubed, ceaf_phi4, max_weight_assignment, muc};
use triad_coref_core::polyads::{enumerate_eval_triads, enumerate_training_triads, triad_count, PolyadSpec};

#[test]
fn hand_examples() {
    suite::hand_examples();
}

#[test]
fn metrics_match_references_on_random_partitions() {
    suite::metrics_match_references_on_random_partitions();
}

#[test]
fn swapping_roles_swaps_precision_and_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (k, r) = random_partitions(&mut rng, 8);
        for f in [muc, b_cubed, ceaf_phi4] {
            let a = f(&k, &r);
            let b = f(&r, &k);
            assert!((a.precision - b.recall).abs() < 1e-12 && (a.recall - b.precision).abs() < 1e-12);
        }
    }
}

#[test]
fn hungarian_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..300 {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=6);
        let sim: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen::<f64>()).collect()).collect();
        let (assignment, total) = max_weight_assignment(&sim);
        assert!((total - best_assignment_exhaustive(&sim)).abs() < 1e-9);
        let mut used: Vec<usize> = assignment.iter().flatten().copied().collect();
        let matched = used.len();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), matched, "assignment reuses a column");
        assert_eq!(matched, rows.min(cols));
    }
}


#[test]
fn nn_chain_upgma_matches_brute_force() {
    suite::nn_chain_upgma_matches_brute_force();
}

#[test]
fn cut_is_monotone_and_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let dist = random_distance_matrix(&mut rng, 12);
        let dg = agglomerate(&dist, Linkage::Average).unwrap();
        let mut previous = cut(&dg, 0.0);
        for step in 1..=24 {
            let p = cut(&dg, step as f64 * 0.5);
            assert!(previous.refines(&p));
            assert!(p.covers(12));
            previous = p;
        }
        let scaled = triad_coref_core::affinity::DistanceMatrix::from_fn(12, |a, b| 2.5 * dist.get(a, b));
        let dg2 = agglomerate(&scaled, Linkage::Average).unwrap();
        assert_eq!(cut(&dg, 3.5), cut(&dg2, 2.5 * 3.5));
    }
}

#[test]
fn triad_counts_match_closed_form() {
    for n in 0..=30 {
        for w in [2, 3, 5, 15, 40] {
            let mut brute = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in (j + 1)..n {
                        if k - i < w {
                            brute += 1;
                        }
                    }
                }
            }
            assert_eq!(triad_count(n, w), brute, "n={n} w={w}");
            let doc = chain_document(n);
            let spec = PolyadSpec {
                train_window: w,
                ..PolyadSpec::default()
            };
            assert_eq!(enumerate_training_triads(&doc, &spec).len(), brute);
        }
    }
    assert_eq!(triad_count(100, 100), 161_700);
}

fn chain_document(n: usize) -> Document {
    let tokens = (0..n).map(|i| token(i, "w", "NN", None, 0)).collect();
    let spans = (0..n).map(|i| (i, i, Some((i % 4) as i64))).collect();
    Document::new("chain", 0, tokens, spans).unwrap()
}

#[test]
fn eval_triads_do_not_depend_on_orientation() {
    let spec = PolyadSpec {
        eval_window: 6,
        max_third_members: Some(4),
        ..PolyadSpec::default()
    };
    for (a, b) in [(3, 7), (0, 5), (10, 11)] {
        let thirds = |x, y| {
            let mut v: Vec<usize> = enumerate_eval_triads(20, x, y, &spec).unwrap().iter().map(|t| t[2]).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(thirds(a, b), thirds(b, a));
    }
}

#[test]
fn aggregation_matches_pairwise_mean() {
    suite::aggregation_matches_pairwise_mean();
}

#[test]
fn distance_bounds_hold_for_random_affinities() {
    suite::distance_bounds_hold_for_random_affinities();
}

#[test]
fn gold_labels_are_transitive() {
    suite::gold_labels_are_transitive();
}
