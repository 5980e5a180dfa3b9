//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the code it checks, apart from
//! reading partition and matrix contents.
#![allow(dead_code)]

pub mod gradient_suite;
pub mod oracle_suite;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triad_coref_core::affinity::{DistanceMatrix, TriadScorer};
use triad_coref_core::autodiff::{Gradients, ParamStore};
use triad_coref_core::document::{Document, Token};
use triad_coref_core::partition::EntityPartition;
use triad_coref_core::polyads::{enumerate_eval_triads, PolyadSpec};

// ---------------------------------------------------------------- gradients

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Worst relative error between `grads` and central differences of `loss`,
/// over at most `per_param` coordinates of every parameter.
pub fn gradient_check(
    store: &mut ParamStore,
    grads: &Gradients,
    per_param: usize,
    eps: f64,
    seed: u64,
    loss: impl Fn(&ParamStore) -> f64,
) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let mut worst = (0.0, String::new());
    for id in ids {
        let len = store.value(id).len();
        let coords: Vec<usize> = if len <= per_param {
            (0..len).collect()
        } else {
            let mut set = BTreeSet::new();
            while set.len() < per_param {
                set.insert(rng.gen_range(0..len));
            }
            set.into_iter().collect()
        };
        for k in coords {
            let original = store.value(id).data()[k];
            store.get_mut(id).value.data_mut()[k] = original + eps;
            let up = loss(store);
            store.get_mut(id).value.data_mut()[k] = original - eps;
            let down = loss(store);
            store.get_mut(id).value.data_mut()[k] = original;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.get(id).map_or(0.0, |g| g[k]);
            let e = rel_err(analytic, numeric);
            if e > worst.0 {
                worst = (e, format!("{}[{k}]: analytic {analytic:e}, numeric {numeric:e}", store.get(id).name));
            }
        }
    }
    worst
}

// ------------------------------------------------------------------ metrics

/// Random key and response over up to `max_mentions` mentions; either side
/// may omit mentions or be empty.
pub fn random_partitions(rng: &mut ChaCha8Rng, max_mentions: usize) -> (EntityPartition, EntityPartition) {
    let n = rng.gen_range(0..=max_mentions);
    let side = |rng: &mut ChaCha8Rng| {
        let groups = rng.gen_range(1..=n.max(1));
        let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for m in 0..n {
            if rng.gen_bool(0.85) {
                clusters.entry(rng.gen_range(0..groups)).or_default().push(m);
            }
        }
        EntityPartition::new(clusters.into_values().collect()).unwrap()
    };
    let key = side(rng);
    let response = side(rng);
    (key, response)
}

fn cluster_containing(p: &EntityPartition, m: usize) -> BTreeSet<usize> {
    p.clusters()
        .iter()
        .find(|c| c.contains(&m))
        .map(|c| c.iter().copied().collect())
        .unwrap_or_default()
}

fn prf(p_num: f64, p_den: f64, r_num: f64, r_den: f64) -> (f64, f64, f64) {
    let p = if p_den > 0.0 { p_num / p_den } else { 0.0 };
    let r = if r_den > 0.0 { r_num / r_den } else { 0.0 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// `(|K| - p(K)) / (|K| - 1)` summed over clusters, with missing mentions
/// forming their own parts.
fn muc_ratio(a: &EntityPartition, b: &EntityPartition) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in a.clusters() {
        let ks: BTreeSet<usize> = k.iter().copied().collect();
        let touching = b
            .clusters()
            .iter()
            .filter(|r| r.iter().any(|m| ks.contains(m)))
            .count();
        let covered: BTreeSet<usize> = b.clusters().iter().flatten().copied().collect();
        let missing = ks.iter().filter(|m| !covered.contains(m)).count();
        num += (k.len() - (touching + missing)) as f64;
        den += (k.len() - 1) as f64;
    }
    (num, den)
}

pub fn muc_reference(key: &EntityPartition, response: &EntityPartition) -> (f64, f64, f64) {
    let (rn, rd) = muc_ratio(key, response);
    let (pn, pd) = muc_ratio(response, key);
    prf(pn, pd, rn, rd)
}

/// Per-mention `|K_m ∩ R_m| / |K_m|`, with `R_m` empty for missing mentions.
fn b3_ratio(a: &EntityPartition, b: &EntityPartition) -> (f64, f64) {
    let mut num = 0.0;
    let mut count = 0.0;
    for k in a.clusters() {
        for &m in k {
            let km: BTreeSet<usize> = k.iter().copied().collect();
            let rm = cluster_containing(b, m);
            num += km.intersection(&rm).count() as f64 / km.len() as f64;
            count += 1.0;
        }
    }
    (num, count)
}

pub fn b_cubed_reference(key: &EntityPartition, response: &EntityPartition) -> (f64, f64, f64) {
    let (rn, rd) = b3_ratio(key, response);
    let (pn, pd) = b3_ratio(response, key);
    prf(pn, pd, rn, rd)
}

/// Best total of `sim[i][assign[i]]` over every injective assignment.
pub fn best_assignment_exhaustive(sim: &[Vec<f64>]) -> f64 {
    fn go(sim: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == sim.len() {
            return 0.0;
        }
        let cols = used.len();
        let rows_left = sim.len() - row;
        let free = used.iter().filter(|u| !**u).count();
        // A row may stay unmatched only when rows outnumber columns.
        let mut best = if rows_left > free { go(sim, row + 1, used) } else { f64::NEG_INFINITY };
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                best = best.max(sim[row][c] + go(sim, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    if sim.is_empty() || sim[0].is_empty() {
        return 0.0;
    }
    go(sim, 0, &mut vec![false; sim[0].len()])
}

pub fn ceaf_reference(key: &EntityPartition, response: &EntityPartition) -> (f64, f64, f64) {
    let sim: Vec<Vec<f64>> = key
        .clusters()
        .iter()
        .map(|k| {
            let ks: BTreeSet<usize> = k.iter().copied().collect();
            response
                .clusters()
                .iter()
                .map(|r| {
                    let shared = r.iter().filter(|m| ks.contains(m)).count();
                    2.0 * shared as f64 / (k.len() + r.len()) as f64
                })
                .collect()
        })
        .collect();
    let best = best_assignment_exhaustive(&sim);
    prf(best, response.len() as f64, best, key.len() as f64)
}

// --------------------------------------------------------------- clustering

pub fn random_distance_matrix(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = rng.gen_range(1.0..10.0);
            values[a * n + b] = d;
            values[b * n + a] = d;
        }
    }
    DistanceMatrix::from_rows(n, values).unwrap()
}

/// One merge of the reference procedure: the two member sets and their distance.
pub type ReferenceMerge = (Vec<usize>, Vec<usize>, f64);

/// UPGMA by exhaustive search: every step recomputes the mean pairwise
/// distance of all cluster pairs from the original matrix and merges the
/// smallest, ties to the lexicographically smallest pair of minimum ids.
pub fn upgma_reference(dist: &DistanceMatrix) -> Vec<ReferenceMerge> {
    let n = dist.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in (x + 1)..clusters.len() {
                let (u, v) = (&clusters[x], &clusters[y]);
                let total: f64 = u.iter().flat_map(|&i| v.iter().map(move |&j| dist.get(i, j))).sum();
                let d = total / (u.len() * v.len()) as f64;
                let ids = (u[0].min(v[0]), u[0].max(v[0]));
                let better = match best {
                    None => true,
                    Some((bd, bids, _, _)) => d < bd || (d == bd && ids < bids),
                };
                if better {
                    best = Some((d, ids, x, y));
                }
            }
        }
        let (d, _, x, y) = best.unwrap();
        let v = clusters.remove(y);
        let u = clusters.remove(x);
        merges.push((u.clone(), v.clone(), d));
        let mut joined = u;
        joined.extend(v);
        joined.sort_unstable();
        clusters.push(joined);
        clusters.sort_by_key(|c| c[0]);
    }
    merges
}

/// Partition after applying the reference merges with distance `<= t`.
pub fn reference_cut(n: usize, merges: &[ReferenceMerge], t: f64) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..n).collect();
    for (u, v, d) in merges {
        if *d <= t {
            let target = label[u[0]];
            let source = label[v[0]];
            for l in label.iter_mut() {
                if *l == source {
                    *l = target;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in label.into_iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

// ----------------------------------------------------------------- affinity

/// Deterministic pseudo-random slot values in `[0, 1]` keyed by the triad.
pub struct HashScorer {
    pub salt: u64,
}

impl HashScorer {
    pub fn value(&self, t: [usize; 3], slot: usize) -> f64 {
        let mut h = self.salt ^ 0x9E37_79B9_7F4A_7C15;
        for x in [t[0] as u64, t[1] as u64, t[2] as u64, slot as u64] {
            h = (h ^ x).wrapping_mul(0x100_0000_01B3);
            h ^= h >> 29;
        }
        (h % 1_000_003) as f64 / 1_000_002.0
    }
}

impl TriadScorer for HashScorer {
    fn score_triads(&self, triads: &[[usize; 3]]) -> triad_coref_core::Result<Vec<[f64; 3]>> {
        Ok(triads
            .iter()
            .map(|&t| [self.value(t, 0), self.value(t, 1), self.value(t, 2)])
            .collect())
    }
}

/// Mean slot value of every in-window pair, computed pair by pair.
pub fn affinity_reference(n: usize, scorer: &HashScorer, spec: &PolyadSpec) -> BTreeMap<(usize, usize), f64> {
    let mut out = BTreeMap::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if b - a > spec.eval_window - 1 {
                continue;
            }
            let triads = enumerate_eval_triads(n, a, b, spec).unwrap();
            if triads.is_empty() {
                out.insert((a, b), scorer.value([a, b, a], 0));
                continue;
            }
            let mut total = 0.0;
            for t in &triads {
                let mut s = *t;
                s.sort_unstable();
                let slot = if (s[0], s[1]) == (a, b) {
                    0
                } else if (s[1], s[2]) == (a, b) {
                    1
                } else {
                    2
                };
                total += scorer.value(s, slot);
            }
            out.insert((a, b), total / triads.len() as f64);
        }
    }
    out
}

// ----------------------------------------------------------------- fixtures

pub fn token(i: usize, surface: &str, pos: &str, speaker: Option<&str>, sentence: usize) -> Token {
    Token {
        surface: surface.to_string(),
        pos: pos.to_string(),
        speaker: speaker.map(str::to_string),
        sentence_index: sentence,
        doc_token_index: i,
    }
}

/// A short document with proper names, pronouns and two speakers.
pub fn small_document() -> Document {
    let words = [
        ("John", "NNP"),
        ("met", "VBD"),
        ("Mary", "NNP"),
        ("today", "NN"),
        (".", "."),
        ("He", "PRP"),
        ("said", "VBD"),
        ("she", "PRP"),
        ("was", "VBD"),
        ("late", "JJ"),
        (".", "."),
        ("John", "NNP"),
        ("left", "VBD"),
        ("her", "PRP$"),
        ("office", "NN"),
        (".", "."),
    ];
    let tokens = words
        .iter()
        .enumerate()
        .map(|(i, &(w, p))| token(i, w, p, Some(if i < 11 { "A" } else { "B" }), if i < 5 { 0 } else if i < 11 { 1 } else { 2 }))
        .collect();
    let spans = vec![
        (0, 0, Some(1)),
        (2, 2, Some(2)),
        (5, 5, Some(1)),
        (7, 7, Some(2)),
        (11, 11, Some(1)),
        (13, 13, Some(2)),
        (13, 14, Some(3)),
    ];
    Document::new("fixture", 0, tokens, spans).unwrap()
}
