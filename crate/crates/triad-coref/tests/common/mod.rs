//! Small corpora and settings shared by the integration tests.
#![allow(dead_code)]

use triad_coref::config::Settings;
use triad_coref::core::document::Document;
use triad_coref::corpus::{generate_synthetic_corpus, SynthConfig};
use triad_coref::training::{run_training, ModelBundle};

/// Settings used for the overfit and dyad/triad runs: a narrow token window
/// and small layers so a sub-epoch over 20 documents takes well under a
/// minute on one core.
pub const DESK_CONFIG: &str = "\
word_emb_dim = 32
pos_emb_dim = 8
word_lstm_hidden = 16
pos_lstm_hidden = 8
pair_hidden = 32,32
shared_context_dim = 32
decoder_dim = 16
input_dropout = 0
pair_dropout = 0
context = 3
max_mention_len = 3
lr_schedule = 0:3e-3
";

pub fn desk_settings(kind: &str, subepochs: usize) -> Settings {
    let mut s = Settings::parse(DESK_CONFIG).unwrap();
    s.set("kind", kind).unwrap();
    s.set("total_subepochs", &subepochs.to_string()).unwrap();
    s
}

pub const TINY_CONFIG: &str = "\
word_emb_dim = 6
pos_emb_dim = 4
word_lstm_hidden = 4
pos_lstm_hidden = 4
pair_hidden = 8
shared_context_dim = 6
decoder_dim = 4
input_dropout = 0.1
pair_dropout = 0.1
context = 2
max_mention_len = 2
batch_size = 16
lr_schedule = 0:1e-2,5:5e-3
";

pub fn tiny_settings(kind: &str, subepochs: usize) -> Settings {
    let mut s = Settings::parse(TINY_CONFIG).unwrap();
    s.set("kind", kind).unwrap();
    s.set("total_subepochs", &subepochs.to_string()).unwrap();
    s
}

/// Four documents of three entities with two mentions each.
pub fn tiny_corpus(seed: u64) -> Vec<Document> {
    let config = SynthConfig {
        documents: 4,
        entities_per_doc: 3,
        mentions_per_entity: 2,
        vocab_size: 60,
        ..SynthConfig::default()
    };
    generate_synthetic_corpus(&config, seed).unwrap()
}

pub fn train(settings: Settings, corpus: &[Document], until: usize) -> ModelBundle {
    let mut bundle = ModelBundle::initialise(settings, corpus, None).unwrap();
    run_training(&mut bundle, corpus, until, &mut |_, _, _| Ok(())).unwrap();
    bundle
}
