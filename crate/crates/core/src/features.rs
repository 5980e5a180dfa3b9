//! Mention windows and pairwise joint features.
//!
//! A mention is encoded as a fixed-length window:
//! `[left context][BEGIN][mention tokens][END][right context][padding]`.
//! The left context always occupies the first `context` slots (padded when
//! the mention sits near the document start) so the begin marker lands at
//! the same position for every mention. Mentions longer than
//! `max_mention_len` keep their final tokens. Word and POS windows share the
//! layout.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::document::{Document, Mention};
use crate::embedding::EmbeddingTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub context: usize,
    pub max_mention_len: usize,
    /// Token distance mapped to 1.0 by [`normalize_distance`].
    pub max_distance: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            context: 8,
            max_mention_len: 10,
            max_distance: 2000,
        }
    }
}

impl FeatureConfig {
    /// Window length: `2 * context + max_mention_len + 2` (28 by default).
    pub fn window_len(&self) -> usize {
        2 * self.context + self.max_mention_len + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_mention_len == 0 || self.max_distance == 0 {
            return Err(Error::Config(
                "max_mention_len and max_distance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionEncoding {
    pub word_ids: Vec<usize>,
    pub pos_ids: Vec<usize>,
    pub mask: Vec<bool>,
}

impl MentionEncoding {
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn unmasked_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

pub const POS_PAD: &str = "<pad>";
pub const POS_BEGIN: &str = "<begin>";
pub const POS_END: &str = "<end>";
pub const POS_UNKNOWN: &str = "<unk>";

/// POS tag inventory. The four reserved entries come first, then the tags
/// seen in the training corpus in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosVocabulary {
    tags: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl PosVocabulary {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut tags: Vec<String> = [POS_PAD, POS_BEGIN, POS_END, POS_UNKNOWN]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut index: BTreeMap<String, usize> =
            tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        for doc in docs {
            for tok in &doc.tokens {
                if !index.contains_key(&tok.pos) {
                    index.insert(tok.pos.clone(), tags.len());
                    tags.push(tok.pos.clone());
                }
            }
        }
        PosVocabulary { tags, index }
    }

    /// Rebuilds from a saved tag list (index = position).
    pub fn from_tags(tags: Vec<String>) -> Result<Self> {
        let reserved = [POS_PAD, POS_BEGIN, POS_END, POS_UNKNOWN];
        if tags.len() < reserved.len() || tags.iter().zip(reserved).any(|(t, r)| t != r) {
            return Err(Error::Input("POS vocabulary must start with the reserved tags".into()));
        }
        let index: BTreeMap<String, usize> =
            tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != tags.len() {
            return Err(Error::Input("duplicate tag in POS vocabulary".into()));
        }
        Ok(PosVocabulary { tags, index })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn pad(&self) -> usize {
        0
    }

    pub fn begin(&self) -> usize {
        1
    }

    pub fn end(&self) -> usize {
        2
    }

    pub fn unknown(&self) -> usize {
        3
    }

    pub fn lookup(&self, tag: &str) -> usize {
        self.index.get(tag).copied().unwrap_or(self.unknown())
    }
}

pub fn encode_mention(
    doc: &Document,
    mention: &Mention,
    emb: &EmbeddingTable,
    pos: &PosVocabulary,
    cfg: &FeatureConfig,
) -> MentionEncoding {
    let len = cfg.window_len();
    let mut word_ids = Vec::with_capacity(len);
    let mut pos_ids = Vec::with_capacity(len);
    let mut mask = Vec::with_capacity(len);
    let mut push = |w: usize, p: usize, real: bool| {
        word_ids.push(w);
        pos_ids.push(p);
        mask.push(real);
    };
    let token = |i: usize| {
        let t = &doc.tokens[i];
        (emb.lookup(&t.surface), pos.lookup(&t.pos))
    };

    let missing_left = cfg.context.saturating_sub(mention.start);
    for _ in 0..missing_left {
        push(emb.padding(), pos.pad(), false);
    }
    for i in mention.start.saturating_sub(cfg.context)..mention.start {
        let (w, p) = token(i);
        push(w, p, true);
    }
    push(emb.begin(), pos.begin(), true);
    let kept_start = (mention.end + 1)
        .saturating_sub(cfg.max_mention_len)
        .max(mention.start);
    for i in kept_start..=mention.end {
        let (w, p) = token(i);
        push(w, p, true);
    }
    push(emb.end(), pos.end(), true);
    let right_end = (mention.end + 1 + cfg.context).min(doc.tokens.len());
    for i in mention.end + 1..right_end {
        let (w, p) = token(i);
        push(w, p, true);
    }
    let missing = len - mask.len();
    word_ids.resize(len, emb.padding());
    pos_ids.resize(len, pos.pad());
    mask.extend(core::iter::repeat_n(false, missing));
    MentionEncoding {
        word_ids,
        pos_ids,
        mask,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFeatures {
    pub same_speaker: bool,
    pub token_distance: usize,
    pub mention_index_distance: usize,
}

impl PairFeatures {
    /// `[same_speaker, normalized distance]`, the scalar inputs of the pair layer.
    pub fn as_inputs(&self, max_distance: usize) -> [f64; 2] {
        [
            if self.same_speaker { 1.0 } else { 0.0 },
            normalize_distance(self.token_distance, max_distance),
        ]
    }
}

pub fn pair_features(doc: &Document, a: &Mention, b: &Mention) -> PairFeatures {
    let sa = doc.tokens[a.start].speaker.as_deref();
    let sb = doc.tokens[b.start].speaker.as_deref();
    let same_speaker = matches!((sa, sb), (Some(x), Some(y)) if !x.is_empty() && x == y);
    PairFeatures {
        same_speaker,
        token_distance: a.start.abs_diff(b.start),
        mention_index_distance: a.id.abs_diff(b.id),
    }
}

/// `log(1 + d) / log(1 + max_distance)`, clipped to 1.
pub fn normalize_distance(token_distance: usize, max_distance: usize) -> f64 {
    let v = libm::log1p(token_distance as f64) / libm::log1p(max_distance as f64);
    v.min(1.0)
}
