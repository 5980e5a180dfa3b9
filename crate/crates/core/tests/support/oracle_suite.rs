//! Oracle comparisons for metrics, clustering, aggregation, distances and
//! gold labels. Each function panics on the first disagreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use triad_coref_core::affinity::{aggregate, to_distances, AffinityMatrix, Aggregation, DistanceConfig};
use triad_coref_core::clustering::{agglomerate, cut, Linkage, Merge};
use triad_coref_core::document::Document;
use triad_coref_core::metrics::{b_cubed, ceaf_phi4, muc, MetricScore};
use triad_coref_core::partition::EntityPartition;
use triad_coref_core::polyads::{enumerate_training_triads, PolyadSpec};

pub fn assert_matches(name: &str, got: MetricScore, want: (f64, f64, f64)) {
    let ok = (got.precision - want.0).abs() < 1e-9 && (got.recall - want.1).abs() < 1e-9 && (got.f1 - want.2).abs() < 1e-9;
    assert!(ok, "{name}: got {got:?}, reference {want:?}");
}

fn members(n: usize, merges: &[Merge], id: usize, cache: &mut Vec<Vec<usize>>) -> Vec<usize> {
    if cache.is_empty() {
        cache.extend((0..n).map(|i| vec![i]));
        for m in merges {
            let mut joined = cache[m.left].clone();
            joined.extend(cache[m.right].iter().copied());
            joined.sort_unstable();
            cache.push(joined);
        }
    }
    cache[id].clone()
}

pub fn metrics_match_references_on_random_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let (key, response) = random_partitions(&mut rng, 8);
        assert_matches("muc", muc(&key, &response), muc_reference(&key, &response));
        assert_matches("b3", b_cubed(&key, &response), b_cubed_reference(&key, &response));
        assert_matches("ceaf", ceaf_phi4(&key, &response), ceaf_reference(&key, &response));
    }
}

pub fn nn_chain_upgma_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let dist = random_distance_matrix(&mut rng, 10);
        let reference = upgma_reference(&dist);
        let dendrogram = agglomerate(&dist, Linkage::Average).unwrap();
        assert_eq!(dendrogram.merges().len(), reference.len());
        let mut cache = Vec::new();
        for (step, (m, (u, v, d))) in dendrogram.merges().iter().zip(&reference).enumerate() {
            let left = members(10, dendrogram.merges(), m.left, &mut cache);
            let right = members(10, dendrogram.merges(), m.right, &mut cache);
            let mut got = [left, right];
            got.sort();
            let mut want = [u.clone(), v.clone()];
            want.sort();
            assert_eq!(got, want, "case {case} step {step}");
            assert!((m.distance - d).abs() < 1e-9, "case {case} step {step}");
        }
        for t in [0.5, 2.0, 3.5, 4.5, 6.0, 11.0] {
            assert_eq!(cut(&dendrogram, t).clusters(), reference_cut(10, &reference, t).as_slice());
        }
    }
}

pub fn aggregation_matches_pairwise_mean() {
    for (n, window, salt) in [(2, 40, 1), (3, 40, 2), (9, 4, 3), (25, 6, 4), (30, 40, 5)] {
        let spec = PolyadSpec {
            eval_window: window,
            ..PolyadSpec::default()
        };
        let scorer = HashScorer { salt };
        let aff = aggregate(n, &scorer, &spec, Aggregation::Mean).unwrap();
        let reference = affinity_reference(n, &scorer, &spec);
        for a in 0..n {
            for b in (a + 1)..n {
                match reference.get(&(a, b)) {
                    Some(&want) => {
                        assert!(aff.in_window(a, b));
                        assert!((aff.get(a, b) - want).abs() < 1e-9, "n={n} ({a},{b})");
                        assert_eq!(aff.get(a, b), aff.get(b, a));
                    }
                    None => assert!(!aff.in_window(a, b)),
                }
            }
        }
        let max = aggregate(n, &scorer, &spec, Aggregation::Max).unwrap();
        if n > 3 {
            assert_ne!(max, aff, "max aggregation must differ from the mean");
        }
    }
}

pub fn distance_bounds_hold_for_random_affinities() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let config = DistanceConfig::default();
    let mut remaining = 100_000;
    while remaining > 0 {
        let n = 50;
        let mut aff = AffinityMatrix::new(n);
        for a in 0..n {
            for b in (a + 1)..n {
                if remaining > 0 && b - a < 40 {
                    let phi = match remaining % 97 {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.gen::<f64>(),
                    };
                    aff.set(a, b, phi);
                    remaining -= 1;
                }
            }
        }
        let d = to_distances(&aff, &config).unwrap();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let v = d.get(a, b);
                assert!((1.0..=10.0).contains(&v));
                if aff.in_window(a, b) {
                    assert_eq!(v, (1.0 / aff.get(a, b)).min(10.0));
                } else {
                    assert_eq!(v, 3.7);
                }
            }
        }
    }
}

pub fn gold_labels_are_transitive() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let n = rng.gen_range(3..40);
        let tokens = (0..n).map(|i| token(i, "w", "NN", None, 0)).collect();
        let spans = (0..n).map(|i| (i, i, Some(rng.gen_range(0..5)))).collect();
        let doc = Document::new("r", 0, tokens, spans).unwrap();
        assert!(enumerate_training_triads(&doc, &PolyadSpec::default()).iter().all(|t| t.is_transitive()));
    }
}

fn partition(clusters: &[&[usize]]) -> EntityPartition {
    EntityPartition::new(clusters.iter().map(|c| c.to_vec()).collect()).unwrap()
}

/// Hand-computed split examples: one key entity answered in two parts.
pub fn hand_examples() {
    let key = partition(&[&[0, 1, 2, 3]]);
    let split = partition(&[&[0, 1], &[2, 3]]);
    assert_matches("muc", muc(&key, &split), (1.0, 2.0 / 3.0, 0.8));
    // Mention 2 keeps only itself of its three-mention key entity.
    let s = b_cubed(&partition(&[&[0, 1, 2]]), &partition(&[&[0, 1], &[2]]));
    assert_matches("b3", s, (1.0, 5.0 / 9.0, 2.0 * (5.0 / 9.0) / (1.0 + 5.0 / 9.0)));
    assert_matches("ceaf", ceaf_phi4(&key, &split), (1.0 / 3.0, 2.0 / 3.0, 4.0 / 9.0));
}
