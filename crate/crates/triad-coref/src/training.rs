//! Sub-epoch training loop with a bounded batch queue.

use std::sync::mpsc::sync_channel;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use triad_coref_core::autodiff::{Adam, Graph};
use triad_coref_core::document::Document;
use triad_coref_core::embedding::EmbeddingTable;
use triad_coref_core::features::{FeatureConfig, PosVocabulary};
use triad_coref_core::model::{Batch, CorefModel, ModelKind, PolyadEncoder, TriadModelConfig};
use triad_coref_core::polyads::{enumerate_training_pairs, enumerate_training_triads, make_batches, PolyadSpec};

use crate::config::Settings;
use crate::corpus::corpus_vocabulary;
use crate::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub model: TriadModelConfig,
    pub features: FeatureConfig,
    pub polyads: PolyadSpec,
    pub files_per_subepoch: usize,
    pub total_subepochs: usize,
    /// `(first sub-epoch, learning rate)`, boundaries nondecreasing from 0.
    pub lr_schedule: Vec<(usize, f64)>,
    pub batch_size: usize,
    pub seed: u64,
    /// Global gradient-norm cap; `None` leaves gradients untouched.
    pub grad_clip: Option<f64>,
    pub producers: usize,
    pub queue_capacity: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: ModelKind::Triad,
            model: TriadModelConfig::default(),
            features: FeatureConfig::default(),
            polyads: PolyadSpec::default(),
            files_per_subepoch: 50,
            total_subepochs: 300,
            lr_schedule: vec![(0, 1e-3), (100, 5e-4), (200, 1e-4)],
            batch_size: 64,
            seed: 0,
            grad_clip: None,
            producers: 1,
            queue_capacity: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> AppResult<()> {
        self.model.validate()?;
        self.features.validate()?;
        self.polyad_spec().validate()?;
        if self.files_per_subepoch == 0 || self.batch_size == 0 || self.producers == 0 || self.queue_capacity == 0 {
            return Err(AppError::Config(
                "files_per_subepoch, batch_size, producers and queue_capacity must be positive".into(),
            ));
        }
        match self.lr_schedule.first() {
            Some(&(0, _)) => {}
            _ => return Err(AppError::Config("lr_schedule must start at sub-epoch 0".into())),
        }
        if self.lr_schedule.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(AppError::Config("lr_schedule boundaries must be nondecreasing".into()));
        }
        if self.lr_schedule.iter().any(|&(_, lr)| !(lr > 0.0 && lr.is_finite())) {
            return Err(AppError::Config("learning rates must be positive".into()));
        }
        if self.grad_clip.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return Err(AppError::Config("grad_clip must be positive".into()));
        }
        Ok(())
    }

    /// Polyad windows, with the order matching the model kind.
    pub fn polyad_spec(&self) -> PolyadSpec {
        PolyadSpec {
            order: self.kind.order(),
            ..self.polyads
        }
    }

    /// Learning rate of the last schedule entry starting at or before `subepoch`.
    pub fn lr_at(&self, subepoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .take_while(|&&(start, _)| start <= subepoch)
            .last()
            .map_or(self.lr_schedule[0].1, |&(_, lr)| lr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubepochLoss {
    pub subepoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub steps: usize,
}

impl SubepochLoss {
    /// `subepoch loss lr wallclock`, with wallclock in seconds.
    pub fn log_line(&self, wallclock: f64) -> String {
        format!("{} {:.6} {:e} {:.3}", self.subepoch, self.loss, self.lr, wallclock)
    }
}

/// Everything needed to continue training exactly where it stopped.
/// Data order and dropout masks are derived from the seed and the
/// sub-epoch and step counters, so no RNG state needs saving.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainState {
    pub subepoch: usize,
    pub adam: Adam,
    pub history: Vec<SubepochLoss>,
}

/// A model with the vocabularies and settings it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub settings: Settings,
    pub model: CorefModel,
    /// Word list and initial vectors; row ids index the model's embedding.
    pub vocabulary: EmbeddingTable,
    pub pos: PosVocabulary,
    pub state: TrainState,
}

impl ModelBundle {
    /// Fresh model over the vocabulary of `corpus`. Without pretrained
    /// vectors every word row is random.
    pub fn initialise(settings: Settings, corpus: &[Document], embeddings: Option<EmbeddingTable>) -> AppResult<Self> {
        settings.validate()?;
        let t = &settings.train;
        let vocabulary = match embeddings {
            Some(e) => e,
            None => EmbeddingTable::random(t.model.word_emb_dim, corpus_vocabulary(corpus), mix(t.seed, 0, 1))?,
        };
        let pos = PosVocabulary::from_documents(corpus);
        let model = CorefModel::new(t.kind, t.model.clone(), &vocabulary, pos.len(), mix(t.seed, 0, 2))?;
        Ok(ModelBundle {
            settings,
            model,
            vocabulary,
            pos,
            state: TrainState::default(),
        })
    }

    pub fn encoder(&self) -> PolyadEncoder<'_> {
        PolyadEncoder::new(&self.vocabulary, &self.pos, &self.settings.train.features)
    }
}

/// SplitMix64 over three words; used to derive independent seeds.
pub fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

struct Polyad {
    doc: usize,
    members: Vec<usize>,
    labels: Vec<bool>,
}

fn polyads_of(doc_index: usize, doc: &Document, kind: ModelKind, spec: &PolyadSpec) -> Vec<Polyad> {
    match kind {
        ModelKind::Triad => enumerate_training_triads(doc, spec)
            .into_iter()
            .map(|t| Polyad {
                doc: doc_index,
                members: t.ids.to_vec(),
                labels: t.labels.to_vec(),
            })
            .collect(),
        ModelKind::Dyad => enumerate_training_pairs(doc, spec)
            .into_iter()
            .map(|p| Polyad {
                doc: doc_index,
                members: p.ids.to_vec(),
                labels: vec![p.label],
            })
            .collect(),
    }
}

/// Documents sampled for one sub-epoch: all of them shuffled when there are
/// at most `files_per_subepoch`, otherwise that many drawn without
/// replacement. Draws are independent across sub-epochs.
pub fn sample_documents(eligible: &[usize], files_per_subepoch: usize, seed: u64, subepoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, subepoch as u64, 3));
    if eligible.len() <= files_per_subepoch {
        let mut all = eligible.to_vec();
        all.shuffle(&mut rng);
        all
    } else {
        eligible.choose_multiple(&mut rng, files_per_subepoch).copied().collect()
    }
}

/// Trains until `until` sub-epochs are complete (capped at the configured
/// total), calling `on_subepoch` after each one.
pub fn run_training(
    bundle: &mut ModelBundle,
    corpus: &[Document],
    until: usize,
    on_subepoch: &mut dyn FnMut(&ModelBundle, &SubepochLoss, f64) -> AppResult<()>,
) -> AppResult<()> {
    let config = bundle.settings.train.clone();
    config.validate()?;
    let spec = config.polyad_spec();
    let eligible: Vec<usize> = corpus
        .iter()
        .enumerate()
        .filter(|(i, d)| !polyads_of(*i, d, config.kind, &spec).is_empty())
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(AppError::Training(format!(
            "no training {}s: documents need at least {} mentions within train_window = {} (eval_window = {})",
            config.kind.name(),
            spec.order,
            spec.train_window,
            spec.eval_window
        )));
    }
    let until = until.min(config.total_subepochs);
    let started = Instant::now();
    while bundle.state.subepoch < until {
        let s = bundle.state.subepoch;
        let lr = config.lr_at(s);
        let docs = sample_documents(&eligible, config.files_per_subepoch, config.seed, s);
        let (mut total, mut steps) = (0.0, 0usize);
        let vocabulary = bundle.vocabulary.clone();
        let pos = bundle.pos.clone();
        let encoder = PolyadEncoder::new(&vocabulary, &pos, &config.features);
        let model = &mut bundle.model;
        let adam = &mut bundle.state.adam;
        std::thread::scope(|scope| -> AppResult<()> {
            let (tx, rx) = sync_channel::<AppResult<Batch>>(config.queue_capacity);
            for p in 0..config.producers {
                let tx = tx.clone();
                let mine: Vec<usize> = docs.iter().skip(p).step_by(config.producers).copied().collect();
                let (config, spec, encoder) = (&config, &spec, encoder);
                scope.spawn(move || {
                    let items: Vec<Polyad> = mine
                        .iter()
                        .flat_map(|&d| polyads_of(d, &corpus[d], config.kind, spec))
                        .collect();
                    for chunk in make_batches(items, config.batch_size, mix(config.seed, s as u64, 4 + p as u64)) {
                        let mut batch = Batch::new();
                        let built = chunk.iter().try_for_each(|item| {
                            encoder.push(&mut batch, item.doc, &corpus[item.doc], &item.members, Some(&item.labels))
                        });
                        let message = built.map(|_| batch).map_err(AppError::from);
                        let failed = message.is_err();
                        if tx.send(message).is_err() || failed {
                            return;
                        }
                    }
                });
            }
            drop(tx);
            for message in rx {
                let batch = message?;
                let mut g = Graph::new(model.params(), true, mix(config.seed, s as u64, 1_000 + steps as u64));
                let (loss, _) = model.loss(&mut g, &batch)?;
                let value = g.scalar(loss);
                let mut grads = g.backward(loss).map_err(triad_coref_core::Error::from)?;
                drop(g);
                if !value.is_finite() {
                    return Err(AppError::Training(format!("non-finite loss at sub-epoch {s}, step {steps}")));
                }
                if let Some(c) = config.grad_clip {
                    grads.clip_global_norm(c);
                }
                adam.step(model.params_mut(), &grads, lr);
                total += value;
                steps += 1;
            }
            Ok(())
        })?;
        let record = SubepochLoss {
            subepoch: s,
            loss: total / steps.max(1) as f64,
            lr,
            steps,
        };
        let wallclock = started.elapsed().as_secs_f64();
        bundle.state.subepoch = s + 1;
        bundle.state.history.push(record);
        log::info!("{}", record.log_line(wallclock));
        on_subepoch(bundle, &record, wallclock)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learning_rate_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_at(0), 1e-3);
        assert_eq!(c.lr_at(99), 1e-3);
        assert_eq!(c.lr_at(100), 5e-4);
        assert_eq!(c.lr_at(200), 1e-4);
        assert_eq!(c.lr_at(299), 1e-4);
    }

    #[test]
    fn sampling_is_seeded() {
        let eligible: Vec<usize> = (0..120).collect();
        let a = sample_documents(&eligible, 50, 7, 3);
        assert_eq!(a, sample_documents(&eligible, 50, 7, 3));
        assert_ne!(a, sample_documents(&eligible, 50, 7, 4));
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
        let mut few = sample_documents(&eligible[..10], 50, 7, 0);
        few.sort();
        assert_eq!(few, (0..10).collect::<Vec<_>>());
    }
}
