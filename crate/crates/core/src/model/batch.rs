use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::features::MentionEncoding;
use crate::{Error, Result};

/// One polyad to score: member indices into [`Batch::mentions`], the joint
/// inputs of each slot pair and (for training) the pair labels.
///
/// Slot pairs are `(0,1), (1,2), (2,0)` for triads and `(0,1)` for dyads.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub members: Vec<usize>,
    pub pair_inputs: Vec<[f64; 2]>,
    pub labels: Vec<f64>,
}

/// Unique mention encodings plus the polyads that reference them. A mention
/// shared by several items is encoded once per forward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub mentions: Vec<MentionEncoding>,
    /// `(document, mention id)` per mention; orders the contexts fed to fusion.
    pub order_keys: Vec<(usize, usize)>,
    pub items: Vec<BatchItem>,
    index: BTreeMap<(usize, usize), usize>,
}

pub(crate) const TRIAD_SLOT_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
pub(crate) const DYAD_SLOT_PAIRS: [(usize, usize); 1] = [(0, 1)];

impl Batch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a mention if its key is new; returns its index either way.
    pub fn add_mention(&mut self, key: (usize, usize), encode: impl FnOnce() -> MentionEncoding) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.mentions.len();
        self.mentions.push(encode());
        self.order_keys.push(key);
        self.index.insert(key, i);
        i
    }

    pub fn push(&mut self, item: BatchItem) {
        self.items.push(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.items.iter().flat_map(|i| i.labels.iter().copied()).collect()
    }

    pub(crate) fn validate(&self, order: usize, with_labels: bool) -> Result<usize> {
        let steps = self.mentions.first().map(|m| m.len()).unwrap_or(0);
        if self.mentions.iter().any(|m| {
            m.len() != steps || m.word_ids.len() != steps || m.pos_ids.len() != steps || m.unmasked_len() == 0
        }) {
            return Err(Error::Input("mention encodings must share one window length and be non-empty".into()));
        }
        let n_pairs = if order == 3 { 3 } else { 1 };
        for (k, item) in self.items.iter().enumerate() {
            if item.members.len() != order
                || item.pair_inputs.len() != n_pairs
                || item.members.iter().any(|&m| m >= self.mentions.len())
                || (with_labels && item.labels.len() != n_pairs)
            {
                return Err(Error::Input(format!(
                    "batch item {k} does not match a polyad of order {order}"
                )));
            }
        }
        Ok(steps)
    }
}
