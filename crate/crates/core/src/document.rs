//! Documents, tokens and gold mentions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::partition::EntityPartition;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: String,
    /// `None` when the corpus marks the speaker as `-`.
    pub speaker: Option<String>,
    pub sentence_index: usize,
    pub doc_token_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mention {
    pub id: usize,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub entity_id: Option<i64>,
}

impl Mention {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_key: String,
    pub part: u32,
    pub tokens: Vec<Token>,
    pub mentions: Vec<Mention>,
}

impl Document {
    /// Builds a document from raw spans, sorting mentions by `(start, end)`
    /// and assigning dense ids in that order.
    pub fn new(
        doc_key: impl Into<String>,
        part: u32,
        tokens: Vec<Token>,
        spans: Vec<(usize, usize, Option<i64>)>,
    ) -> Result<Self> {
        let mut spans = spans;
        spans.sort_by_key(|&(s, e, ent)| (s, e, ent));
        let mentions = spans
            .into_iter()
            .enumerate()
            .map(|(id, (start, end, entity_id))| Mention {
                id,
                start,
                end,
                entity_id,
            })
            .collect();
        let doc = Document {
            doc_key: doc_key.into(),
            part,
            tokens,
            mentions,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            if t.doc_token_index != i {
                return Err(Error::Input(format!(
                    "{}: token {} has doc_token_index {}",
                    self.doc_key, i, t.doc_token_index
                )));
            }
        }
        let mut prev: Option<(usize, usize)> = None;
        for (i, m) in self.mentions.iter().enumerate() {
            if m.id != i {
                return Err(Error::Input(format!(
                    "{}: mention ids must be dense, found {} at position {}",
                    self.doc_key, m.id, i
                )));
            }
            if m.start > m.end || m.end >= self.tokens.len() {
                return Err(Error::Input(format!(
                    "{}: mention {} span [{}, {}] outside {} tokens",
                    self.doc_key,
                    m.id,
                    m.start,
                    m.end,
                    self.tokens.len()
                )));
            }
            if let Some(p) = prev {
                if (m.start, m.end) < p {
                    return Err(Error::Input(format!(
                        "{}: mentions not sorted by (start, end)",
                        self.doc_key
                    )));
                }
            }
            prev = Some((m.start, m.end));
        }
        Ok(())
    }

    pub fn mention_count(&self) -> usize {
        self.mentions.len()
    }

    pub fn mention_tokens(&self, m: &Mention) -> &[Token] {
        &self.tokens[m.start..=m.end]
    }

    /// Surface strings of a mention's tokens.
    pub fn mention_text(&self, m: &Mention) -> Vec<&str> {
        self.mention_tokens(m)
            .iter()
            .map(|t| t.surface.as_str())
            .collect()
    }

    /// Partition of the labeled mentions by gold entity id.
    pub fn gold_partition(&self) -> EntityPartition {
        let mut by_entity: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for m in &self.mentions {
            if let Some(e) = m.entity_id {
                by_entity.entry(e).or_default().push(m.id);
            }
        }
        EntityPartition::from_clusters_unchecked(by_entity.into_values().collect())
    }

    /// Distinct non-empty speaker names in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for t in &self.tokens {
            if let Some(s) = t.speaker.as_deref() {
                if !s.is_empty() && !seen.contains(&s) {
                    seen.push(s);
                }
            }
        }
        seen
    }
}
