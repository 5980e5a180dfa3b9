//! The triad network and its pairwise (dyad) reduction.
//!
//! Both networks share the same front end: one word BiLSTM and one POS
//! BiLSTM applied to every member, mutual attention between members, and a
//! fusion layer that turns each member's states plus the contexts it
//! receives into a pooled vector. A pair stack combines two pooled members
//! with the pair's speaker and distance inputs. The triad network then sums
//! its three pair representations into a shared context, decodes each pair
//! against that context and emits three sigmoid outputs from one joint
//! affine layer. The dyad network feeds the pair representation straight to
//! a single sigmoid output.

mod batch;
mod forward;
mod scorer;

pub use batch::{Batch, BatchItem};
pub use forward::{mutual_attention, ItemTrace};
pub use scorer::{DocumentScorer, PolyadEncoder};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{xavier_uniform, BiLstm, Graph, ParamId, ParamStore, Tensor, Var};
use crate::embedding::EmbeddingTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Triad,
    Dyad,
}

impl ModelKind {
    pub fn order(self) -> usize {
        match self {
            ModelKind::Triad => 3,
            ModelKind::Dyad => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Triad => "triad",
            ModelKind::Dyad => "dyad",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "triad" => Some(ModelKind::Triad),
            "dyad" => Some(ModelKind::Dyad),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriadModelConfig {
    pub word_emb_dim: usize,
    pub pos_emb_dim: usize,
    /// Per direction.
    pub word_lstm_hidden: usize,
    /// Per direction.
    pub pos_lstm_hidden: usize,
    pub pair_hidden: Vec<usize>,
    pub shared_context_dim: usize,
    pub decoder_dim: usize,
    pub input_dropout: f64,
    pub pair_dropout: f64,
}

impl Default for TriadModelConfig {
    fn default() -> Self {
        TriadModelConfig {
            word_emb_dim: 300,
            pos_emb_dim: 16,
            word_lstm_hidden: 128,
            pos_lstm_hidden: 32,
            pair_hidden: vec![256, 128],
            shared_context_dim: 128,
            decoder_dim: 64,
            input_dropout: 0.5,
            pair_dropout: 0.3,
        }
    }
}

impl TriadModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.word_emb_dim,
            self.pos_emb_dim,
            self.word_lstm_hidden,
            self.pos_lstm_hidden,
            self.shared_context_dim,
            self.decoder_dim,
        ];
        if dims.contains(&0) || self.pair_hidden.is_empty() || self.pair_hidden.contains(&0)
        {
            return Err(Error::Config("all model dimensions must be positive".into()));
        }
        for rate in [self.input_dropout, self.pair_dropout] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn pair_input_dim(&self) -> usize {
        2 + 4 * self.word_lstm_hidden + 4 * self.pos_lstm_hidden
    }

    pub fn pair_output_dim(&self) -> usize {
        *self.pair_hidden.last().expect("validated non-empty")
    }
}

/// Affine layer `x · W + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Dense {
            weight: store.add(format!("{name}.weight"), xavier_uniform(input, output, rng))?,
            bias: store.add(format!("{name}.bias"), Tensor::zeros(1, output))?,
        })
    }

    pub fn apply(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let y = g.matmul(x, w)?;
        Ok(g.add(y, b)?)
    }

    pub fn scalar_count(input: usize, output: usize) -> usize {
        input * output + output
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layers {
    word_embedding: ParamId,
    pos_embedding: ParamId,
    word_lstm: BiLstm,
    pos_lstm: BiLstm,
    word_fuse: Dense,
    pos_fuse: Dense,
    pair_stack: Vec<Dense>,
    head: Head,
}

#[derive(Debug, Clone, PartialEq)]
enum Head {
    Triad {
        context: Dense,
        decoder: Dense,
        output: Dense,
    },
    Dyad {
        output: Dense,
    },
}

/// A triad or dyad network together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CorefModel {
    kind: ModelKind,
    config: TriadModelConfig,
    params: ParamStore,
    layers: Layers,
}

impl CorefModel {
    /// Initialises a model. Word vectors are copied from `embeddings` (its
    /// dimension must match the config); POS vectors start as one-hot rows,
    /// with random rows for tags beyond the embedding dimension.
    pub fn new(
        kind: ModelKind,
        config: TriadModelConfig,
        embeddings: &EmbeddingTable,
        pos_vocab_size: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if embeddings.dim() != config.word_emb_dim {
            return Err(Error::Config(format!(
                "embedding table has dimension {}, model expects {}",
                embeddings.dim(),
                config.word_emb_dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let word_embedding = store.add("word_embedding", embeddings.vectors().clone())?;
        let dp = config.pos_emb_dim;
        let scale = libm::sqrt(6.0 / (pos_vocab_size + dp) as f64);
        let mut pos = Tensor::zeros(pos_vocab_size, dp);
        for r in 0..pos_vocab_size {
            for c in 0..dp {
                pos.data_mut()[r * dp + c] = if r < dp {
                    if r == c {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rng.gen_range(-scale..=scale)
                };
            }
        }
        let pos_embedding = store.add("pos_embedding", pos)?;

        let hw = config.word_lstm_hidden;
        let hp = config.pos_lstm_hidden;
        let word_lstm = BiLstm::new(&mut store, "word_lstm", config.word_emb_dim, hw, &mut rng)?;
        let pos_lstm = BiLstm::new(&mut store, "pos_lstm", dp, hp, &mut rng)?;
        let word_fuse = Dense::new(&mut store, "word_fuse", 6 * hw, 2 * hw, &mut rng)?;
        let pos_fuse = Dense::new(&mut store, "pos_fuse", 6 * hp, 2 * hp, &mut rng)?;
        let mut pair_stack = Vec::new();
        let mut width = config.pair_input_dim();
        for (i, &out) in config.pair_hidden.iter().enumerate() {
            pair_stack.push(Dense::new(&mut store, &format!("pair.{i}"), width, out, &mut rng)?);
            width = out;
        }
        let head = match kind {
            ModelKind::Triad => Head::Triad {
                context: Dense::new(&mut store, "shared_context", width, config.shared_context_dim, &mut rng)?,
                decoder: Dense::new(
                    &mut store,
                    "decoder",
                    width + config.shared_context_dim,
                    config.decoder_dim,
                    &mut rng,
                )?,
                output: Dense::new(&mut store, "output", 3 * config.decoder_dim, 3, &mut rng)?,
            },
            ModelKind::Dyad => Head::Dyad {
                output: Dense::new(&mut store, "output", width, 1, &mut rng)?,
            },
        };
        Ok(CorefModel {
            kind,
            config,
            params: store,
            layers: Layers {
                word_embedding,
                pos_embedding,
                word_lstm,
                pos_lstm,
                word_fuse,
                pos_fuse,
                pair_stack,
                head,
            },
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &TriadModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Number of outputs per batch item: 3 for triads, 1 for dyads.
    pub fn outputs_per_item(&self) -> usize {
        match self.kind {
            ModelKind::Triad => 3,
            ModelKind::Dyad => 1,
        }
    }

    /// Closed-form parameter count for a configuration.
    pub fn expected_scalar_count(
        kind: ModelKind,
        config: &TriadModelConfig,
        word_rows: usize,
        pos_vocab_size: usize,
    ) -> usize {
        use crate::autodiff::LstmParams;
        let hw = config.word_lstm_hidden;
        let hp = config.pos_lstm_hidden;
        let mut n = word_rows * config.word_emb_dim + pos_vocab_size * config.pos_emb_dim;
        n += 2 * LstmParams::scalar_count(config.word_emb_dim, hw);
        n += 2 * LstmParams::scalar_count(config.pos_emb_dim, hp);
        n += Dense::scalar_count(6 * hw, 2 * hw) + Dense::scalar_count(6 * hp, 2 * hp);
        let mut width = config.pair_input_dim();
        for &out in &config.pair_hidden {
            n += Dense::scalar_count(width, out);
            width = out;
        }
        n + match kind {
            ModelKind::Triad => {
                Dense::scalar_count(width, config.shared_context_dim)
                    + Dense::scalar_count(width + config.shared_context_dim, config.decoder_dim)
                    + Dense::scalar_count(3 * config.decoder_dim, 3)
            }
            ModelKind::Dyad => Dense::scalar_count(width, 1),
        }
    }

    /// Current word embedding matrix (trained values).
    pub fn word_embeddings(&self) -> &Tensor {
        self.params.value(self.layers.word_embedding)
    }

    /// Builds a model from a configuration and replaces every parameter with
    /// the given named values.
    pub fn from_named_params(
        kind: ModelKind,
        config: TriadModelConfig,
        embeddings: &EmbeddingTable,
        pos_vocab_size: usize,
        named: Vec<(String, Tensor)>,
    ) -> Result<Self> {
        let mut model = Self::new(kind, config, embeddings, pos_vocab_size, 0)?;
        if named.len() != model.params.len() {
            return Err(Error::Model(format!(
                "checkpoint holds {} parameters, model has {}",
                named.len(),
                model.params.len()
            )));
        }
        for (name, value) in named {
            let id = model
                .params
                .id(&name)
                .ok_or_else(|| Error::Model(format!("unknown parameter {name}")))?;
            model.params.set_value(id, value)?;
        }
        Ok(model)
    }
}
