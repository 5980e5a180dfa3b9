//! Triad and pair enumeration under mention-index windows, plus batching.
//!
//! Windows are measured in mention ids: a stretch of `w` admits pairs with at
//! most `w - 2` mentions between them. Training polyads bound the outermost
//! pair, so every pair inside a polyad respects the window.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::document::Document;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyadSpec {
    pub order: usize,
    pub train_window: usize,
    pub eval_window: usize,
    /// Keep only the nearest third members per pair at evaluation time.
    pub max_third_members: Option<usize>,
}

impl Default for PolyadSpec {
    fn default() -> Self {
        PolyadSpec {
            order: 3,
            train_window: 15,
            eval_window: 40,
            max_third_members: None,
        }
    }
}

impl PolyadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.order) {
            return Err(Error::Config(format!(
                "polyad order {} is not supported (2 or 3)",
                self.order
            )));
        }
        if self.train_window < 2 || self.eval_window < 2 {
            return Err(Error::Config("polyad windows must be at least 2".into()));
        }
        if self.max_third_members == Some(0) {
            return Err(Error::Config("max_third_members must be positive".into()));
        }
        Ok(())
    }

    /// Whether two mention ids fall inside the evaluation window.
    pub fn in_eval_window(&self, a: usize, b: usize) -> bool {
        a.abs_diff(b) < self.eval_window
    }
}

/// Three mentions `i < j < k` with labels for the pairs `(i,j), (j,k), (k,i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledTriad {
    pub ids: [usize; 3],
    pub labels: [bool; 3],
}

impl LabeledTriad {
    /// No two coreferent pairs with the third pair marked non-coreferent.
    pub fn is_transitive(&self) -> bool {
        self.labels.iter().filter(|&&l| l).count() != 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledPair {
    pub ids: [usize; 2],
    pub label: bool,
}

/// All increasing `order`-tuples of `0..n` whose first and last members
/// differ by less than `window`.
pub fn windowed_combinations(n: usize, order: usize, window: usize) -> Vec<Vec<usize>> {
    fn extend(
        n: usize,
        order: usize,
        limit: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == order {
            out.push(current.clone());
            return;
        }
        let first = current[0];
        let next = current.last().copied().unwrap_or(first) + 1;
        let last = (first + limit).min(n.saturating_sub(1));
        for m in next..=last {
            if m >= n {
                break;
            }
            current.push(m);
            extend(n, order, limit, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if order == 0 || window == 0 {
        return out;
    }
    let mut current = Vec::with_capacity(order);
    for first in 0..n {
        current.clear();
        current.push(first);
        extend(n, order, window - 1, &mut current, &mut out);
    }
    out
}

/// Closed-form number of triads from [`windowed_combinations`] with order 3.
pub fn triad_count(n: usize, window: usize) -> usize {
    let max_gap = window.saturating_sub(1).min(n.saturating_sub(1));
    (2..=max_gap).map(|g| (g - 1) * (n - g)).sum()
}

fn coreferent(doc: &Document, a: usize, b: usize) -> bool {
    match (doc.mentions[a].entity_id, doc.mentions[b].entity_id) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

/// Training triads; empty when the document has fewer than three mentions.
pub fn enumerate_training_triads(doc: &Document, spec: &PolyadSpec) -> Vec<LabeledTriad> {
    windowed_combinations(doc.mention_count(), 3, spec.train_window)
        .into_iter()
        .map(|c| {
            let (i, j, k) = (c[0], c[1], c[2]);
            let t = LabeledTriad {
                ids: [i, j, k],
                labels: [coreferent(doc, i, j), coreferent(doc, j, k), coreferent(doc, k, i)],
            };
            assert!(t.is_transitive(), "non-transitive gold labels for triad {:?}", t.ids);
            t
        })
        .collect()
}

pub fn enumerate_training_pairs(doc: &Document, spec: &PolyadSpec) -> Vec<LabeledPair> {
    windowed_combinations(doc.mention_count(), 2, spec.train_window)
        .into_iter()
        .map(|c| LabeledPair {
            ids: [c[0], c[1]],
            label: coreferent(doc, c[0], c[1]),
        })
        .collect()
}

/// Third members `c` for the pair `(a, b)`, returned as `(a, b, c)` triads.
///
/// `c` qualifies when it lies within the evaluation window of `a` or of `b`.
/// With `max_third_members` set, the nearest are kept (ties to smaller ids).
pub fn enumerate_eval_triads(
    mention_count: usize,
    a: usize,
    b: usize,
    spec: &PolyadSpec,
) -> Result<Vec<[usize; 3]>> {
    if a == b || a >= mention_count || b >= mention_count {
        return Err(Error::Input(format!("invalid mention pair ({a}, {b})")));
    }
    if !spec.in_eval_window(a, b) {
        return Err(Error::Input(format!(
            "pair ({a}, {b}) lies outside the evaluation window {}",
            spec.eval_window
        )));
    }
    let reach = spec.eval_window - 1;
    let lo = a.min(b).saturating_sub(reach);
    let hi = (a.max(b) + reach).min(mention_count - 1);
    let mut thirds: Vec<(usize, usize)> = (lo..=hi)
        .filter(|&c| c != a && c != b)
        .map(|c| (c.abs_diff(a).min(c.abs_diff(b)), c))
        .filter(|&(d, _)| d <= reach)
        .collect();
    if let Some(cap) = spec.max_third_members {
        thirds.sort_unstable();
        thirds.truncate(cap);
        thirds.sort_unstable_by_key(|&(_, c)| c);
    }
    Ok(thirds.into_iter().map(|(_, c)| [a, b, c]).collect())
}

/// Stand-in triad for a pair with no third member: `a` fills the third slot
/// and only slot 0 of the output is used.
pub fn degenerate_triad(a: usize, b: usize) -> [usize; 3] {
    [a, b, a]
}

/// Shuffles under `seed` and splits into batches of at most `batch_size`.
pub fn make_batches<T>(mut items: Vec<T>, batch_size: usize, seed: u64) -> Vec<Vec<T>> {
    let size = batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    let mut batches = Vec::with_capacity(items.len().div_ceil(size));
    let mut iter = items.into_iter().peekable();
    while iter.peek().is_some() {
        batches.push(iter.by_ref().take(size).collect());
    }
    batches
}
