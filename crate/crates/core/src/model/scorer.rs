use alloc::format;
use alloc::vec::Vec;

use super::{Batch, BatchItem, CorefModel, ModelKind};
use crate::affinity::{PairScorer, TriadScorer};
use crate::document::Document;
use crate::embedding::EmbeddingTable;
use crate::features::{encode_mention, pair_features, FeatureConfig, PosVocabulary};
use crate::{Error, Result};

/// Turns mention ids of one document into batch items.
#[derive(Debug, Clone, Copy)]
pub struct PolyadEncoder<'a> {
    pub embeddings: &'a EmbeddingTable,
    pub pos: &'a PosVocabulary,
    pub features: &'a FeatureConfig,
}

impl<'a> PolyadEncoder<'a> {
    pub fn new(embeddings: &'a EmbeddingTable, pos: &'a PosVocabulary, features: &'a FeatureConfig) -> Self {
        PolyadEncoder {
            embeddings,
            pos,
            features,
        }
    }

    /// Appends a triad `[i, j, k]` or a pair `[i, j]`. Labels, when given,
    /// follow the slot pairs `(0,1), (1,2), (2,0)` (one label for pairs).
    pub fn push(
        &self,
        batch: &mut Batch,
        doc_index: usize,
        doc: &Document,
        members: &[usize],
        labels: Option<&[bool]>,
    ) -> Result<()> {
        let slot_pairs: &[(usize, usize)] = match members.len() {
            3 => &[(0, 1), (1, 2), (2, 0)],
            2 => &[(0, 1)],
            n => return Err(Error::Input(format!("polyads of {n} members are not supported"))),
        };
        if let Some(&m) = members.iter().find(|&&m| m >= doc.mention_count()) {
            return Err(Error::Input(format!("{}: no mention {m}", doc.doc_key)));
        }
        let indices: Vec<usize> = members
            .iter()
            .map(|&m| {
                batch.add_mention((doc_index, m), || {
                    encode_mention(doc, &doc.mentions[m], self.embeddings, self.pos, self.features)
                })
            })
            .collect();
        let pair_inputs = slot_pairs
            .iter()
            .map(|&(a, b)| {
                pair_features(doc, &doc.mentions[members[a]], &doc.mentions[members[b]])
                    .as_inputs(self.features.max_distance)
            })
            .collect();
        let labels = match labels {
            Some(l) if l.len() == slot_pairs.len() => l.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect(),
            Some(_) => return Err(Error::Input("label count does not match the polyad".into())),
            None => Vec::new(),
        };
        batch.push(BatchItem {
            members: indices,
            pair_inputs,
            labels,
        });
        Ok(())
    }
}

/// Scores polyads of one document with a model, in bounded batches.
#[derive(Debug, Clone, Copy)]
pub struct DocumentScorer<'a> {
    pub model: &'a CorefModel,
    pub encoder: PolyadEncoder<'a>,
    pub doc: &'a Document,
    pub batch_items: usize,
}

impl<'a> DocumentScorer<'a> {
    pub fn new(model: &'a CorefModel, encoder: PolyadEncoder<'a>, doc: &'a Document) -> Self {
        DocumentScorer {
            model,
            encoder,
            doc,
            batch_items: 4096,
        }
    }

    fn score<const K: usize>(&self, polyads: &[[usize; K]], kind: ModelKind) -> Result<Vec<Vec<f64>>> {
        if self.model.kind() != kind {
            return Err(Error::Model(format!(
                "a {} model cannot score {}-member polyads",
                self.model.kind().name(),
                K
            )));
        }
        let mut out = Vec::with_capacity(polyads.len());
        for chunk in polyads.chunks(self.batch_items.max(1)) {
            let mut batch = Batch::new();
            for p in chunk {
                self.encoder.push(&mut batch, 0, self.doc, p, None)?;
            }
            out.extend(self.model.predict(&batch)?);
        }
        Ok(out)
    }
}

impl TriadScorer for DocumentScorer<'_> {
    fn score_triads(&self, triads: &[[usize; 3]]) -> Result<Vec<[f64; 3]>> {
        Ok(self
            .score(triads, ModelKind::Triad)?
            .into_iter()
            .map(|y| [y[0], y[1], y[2]])
            .collect())
    }
}

impl PairScorer for DocumentScorer<'_> {
    fn score_pairs(&self, pairs: &[[usize; 2]]) -> Result<Vec<f64>> {
        Ok(self.score(pairs, ModelKind::Dyad)?.into_iter().map(|y| y[0]).collect())
    }
}
