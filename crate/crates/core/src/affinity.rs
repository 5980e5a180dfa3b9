//! Pairwise affinities from triad outputs and the distances derived from them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::polyads::{degenerate_triad, enumerate_eval_triads, PolyadSpec};
use crate::{Error, Result};

/// Scores triads `[i, j, k]`, returning the outputs for `(i,j), (j,k), (k,i)`.
pub trait TriadScorer {
    fn score_triads(&self, triads: &[[usize; 3]]) -> Result<Vec<[f64; 3]>>;
}

/// Scores mention pairs directly.
pub trait PairScorer {
    fn score_pairs(&self, pairs: &[[usize; 2]]) -> Result<Vec<f64>>;
}

impl<F> TriadScorer for F
where
    F: Fn(&[[usize; 3]]) -> Result<Vec<[f64; 3]>>,
{
    fn score_triads(&self, triads: &[[usize; 3]]) -> Result<Vec<[f64; 3]>> {
        self(triads)
    }
}

/// How the slot values collected for one pair are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
    /// Mean of the `k` largest values.
    TopK(usize),
}

impl Aggregation {
    fn reduce(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::TopK(k) => {
                values.sort_unstable_by(|a, b| b.total_cmp(a));
                let k = k.clamp(1, values.len());
                values[..k].iter().sum::<f64>() / k as f64
            }
        }
    }
}

/// Symmetric matrix of affinity scores. Pairs outside the evaluation window
/// carry no score and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    scores: Vec<f64>,
    counts: Vec<u32>,
    in_window: Vec<bool>,
}

impl AffinityMatrix {
    /// All pairs out of window.
    pub fn new(n: usize) -> Self {
        AffinityMatrix {
            n,
            scores: vec![0.0; n * n],
            counts: vec![0; n * n],
            in_window: vec![false; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.scores[a * self.n + b]
    }

    /// Number of slot values that went into the score.
    pub fn count(&self, a: usize, b: usize) -> u32 {
        self.counts[a * self.n + b]
    }

    pub fn in_window(&self, a: usize, b: usize) -> bool {
        self.in_window[a * self.n + b]
    }

    /// Symmetric write that also marks the pair in-window.
    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        self.set_with_count(a, b, value, self.count(a, b));
    }

    fn set_with_count(&mut self, a: usize, b: usize, value: f64, count: u32) {
        for (x, y) in [(a, b), (b, a)] {
            let idx = x * self.n + y;
            self.scores[idx] = value;
            self.counts[idx] = count;
            self.in_window[idx] = true;
        }
    }

    /// In-window pairs `(a, b)` with `a < b`.
    pub fn window_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| ((a + 1)..self.n).filter(move |&b| self.in_window(a, b)).map(move |b| (a, b)))
    }
}

/// Returns a copy of `aff` with `(a, b)` and `(b, a)` set to `value`.
pub fn override_affinity(aff: &AffinityMatrix, a: usize, b: usize, value: f64) -> Result<AffinityMatrix> {
    if a >= aff.n || b >= aff.n || a == b {
        return Err(Error::Input(format!("cannot override pair ({a}, {b}) of a {}-mention matrix", aff.n)));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::AffinityRange { a, b, value });
    }
    let mut out = aff.clone();
    out.set(a, b, value);
    Ok(out)
}

/// The evaluation plan: each unordered triple once in ascending order, plus
/// the pairs that need a degenerate triad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationPlan {
    pub triples: Vec<[usize; 3]>,
    pub degenerate: Vec<(usize, usize)>,
    /// For each in-window pair `(a, b)` with `a < b`, its admitted third members.
    pub thirds: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

pub fn evaluation_plan(n: usize, spec: &PolyadSpec) -> Result<EvaluationPlan> {
    let mut thirds = BTreeMap::new();
    let mut triples = BTreeSet::new();
    let mut degenerate = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !spec.in_eval_window(a, b) {
                continue;
            }
            let set: BTreeSet<usize> = enumerate_eval_triads(n, a, b, spec)?.into_iter().map(|t| t[2]).collect();
            if set.is_empty() {
                degenerate.push((a, b));
            }
            for &c in &set {
                let mut t = [a, b, c];
                t.sort_unstable();
                triples.insert(t);
            }
            thirds.insert((a, b), set);
        }
    }
    Ok(EvaluationPlan {
        triples: triples.into_iter().collect(),
        degenerate,
        thirds,
    })
}

fn check_range(a: usize, b: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::AffinityRange { a, b, value })
    }
}

/// Affinity of every in-window pair from triad outputs.
///
/// A triple `i < j < k` feeds its slot `(i,j)` to the pair `(i,j)`, slot
/// `(j,k)` to `(j,k)` and slot `(k,i)` to `(i,k)`, each only when the pair is
/// in-window and the remaining member is one of the pair's third members.
pub fn aggregate<S: TriadScorer + ?Sized>(
    n: usize,
    scorer: &S,
    spec: &PolyadSpec,
    mode: Aggregation,
) -> Result<AffinityMatrix> {
    let plan = evaluation_plan(n, spec)?;
    let mut collected: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();

    let outputs = if plan.triples.is_empty() {
        Vec::new()
    } else {
        scorer.score_triads(&plan.triples)?
    };
    if outputs.len() != plan.triples.len() {
        return Err(Error::Model(format!(
            "scorer returned {} outputs for {} triads",
            outputs.len(),
            plan.triples.len()
        )));
    }
    for (t, y) in plan.triples.iter().zip(&outputs) {
        let [i, j, k] = *t;
        for ((a, b, c), value) in [((i, j, k), y[0]), ((j, k, i), y[1]), ((i, k, j), y[2])] {
            if plan.thirds.get(&(a, b)).is_some_and(|s| s.contains(&c)) {
                check_range(a, b, value)?;
                collected.entry((a, b)).or_default().push(value);
            }
        }
    }

    if !plan.degenerate.is_empty() {
        let triads: Vec<[usize; 3]> = plan.degenerate.iter().map(|&(a, b)| degenerate_triad(a, b)).collect();
        let outputs = scorer.score_triads(&triads)?;
        if outputs.len() != triads.len() {
            return Err(Error::Model("scorer output count mismatch on degenerate triads".into()));
        }
        for (&(a, b), y) in plan.degenerate.iter().zip(&outputs) {
            check_range(a, b, y[0])?;
            collected.entry((a, b)).or_default().push(y[0]);
        }
    }

    let mut aff = AffinityMatrix::new(n);
    for ((a, b), mut values) in collected {
        let count = values.len() as u32;
        aff.set_with_count(a, b, mode.reduce(&mut values), count);
    }
    Ok(aff)
}

/// Affinity of every in-window pair scored directly by a pairwise model.
pub fn pair_affinity<S: PairScorer + ?Sized>(n: usize, scorer: &S, spec: &PolyadSpec) -> Result<AffinityMatrix> {
    let pairs: Vec<[usize; 2]> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| [a, b]))
        .filter(|p| spec.in_eval_window(p[0], p[1]))
        .collect();
    let mut aff = AffinityMatrix::new(n);
    if pairs.is_empty() {
        return Ok(aff);
    }
    let scores = scorer.score_pairs(&pairs)?;
    if scores.len() != pairs.len() {
        return Err(Error::Model(format!("scorer returned {} outputs for {} pairs", scores.len(), pairs.len())));
    }
    for (p, &s) in pairs.iter().zip(&scores) {
        check_range(p[0], p[1], s)?;
        aff.set_with_count(p[0], p[1], s, 1);
    }
    Ok(aff)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceConfig {
    /// Cap on `1 / Φ`.
    pub max_distance: f64,
    /// Distance assigned to pairs never scored.
    pub out_of_window: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            max_distance: 10.0,
            out_of_window: 3.7,
        }
    }
}

/// Symmetric distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = f(a, b);
                data[a * n + b] = d;
                data[b * n + a] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    /// Builds from a full row-major matrix, checking size, symmetry and sign.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Input(format!("distance matrix needs {} entries, got {}", n * n, data.len())));
        }
        for a in 0..n {
            for b in 0..n {
                let d = data[a * n + b];
                if !d.is_finite() || d < 0.0 || d != data[b * n + a] {
                    return Err(Error::Input(format!("distance ({a}, {b}) = {d} is not a symmetric non-negative value")));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn set(&mut self, a: usize, b: usize, d: f64) {
        self.data[a * self.n + b] = d;
        self.data[b * self.n + a] = d;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `d = min(1/Φ, max)` for scored pairs, the out-of-window constant elsewhere.
pub fn to_distances(aff: &AffinityMatrix, config: &DistanceConfig) -> Result<DistanceMatrix> {
    let n = aff.len();
    for (a, b) in aff.window_pairs() {
        check_range(a, b, aff.get(a, b))?;
    }
    let floor = 1.0 / config.max_distance;
    Ok(DistanceMatrix::from_fn(n, |a, b| {
        if !aff.in_window(a, b) {
            config.out_of_window
        } else {
            let phi = aff.get(a, b);
            if phi <= floor {
                config.max_distance
            } else {
                (1.0 / phi).min(config.max_distance)
            }
        }
    }))
}
