use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::batch::{DYAD_SLOT_PAIRS, TRIAD_SLOT_PAIRS};
use super::{Batch, BatchItem, CorefModel, Head, ModelKind};
use crate::autodiff::{Graph, Tensor, Var};
use crate::{Error, Result};

/// Items per inference graph; bounds tape memory on long documents.
const PREDICT_CHUNK: usize = 256;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stream {
    Word,
    Pos,
}

/// Encoder states for every mention of a batch, `mentions * steps` rows,
/// and their three projections through the fusion weights.
#[derive(Clone, Copy)]
struct Encoded {
    /// Per stream: states, then projections by the state, first-context
    /// and second-context blocks of the fusion weight.
    streams: [[Var; 4]; 2],
    steps: usize,
}

const STATES: usize = 0;
const OWN: usize = 1;

#[derive(Default)]
struct Cache {
    blocks: BTreeMap<(Stream, usize, usize), Var>,
    attention: BTreeMap<(Stream, usize, usize), Var>,
    contexts: BTreeMap<(Stream, usize, usize, usize), Var>,
}

struct ItemVars {
    pairs: Vec<Var>,
    shared: Option<Var>,
    output: Var,
}

/// Intermediate values of one forward pass, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemTrace {
    /// Pair representations in slot-pair order.
    pub pair_representations: Vec<Vec<f64>>,
    /// Summed-and-projected triad context; `None` for dyads.
    pub shared_context: Option<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Stream {
    fn index(self) -> usize {
        match self {
            Stream::Word => 0,
            Stream::Pos => 1,
        }
    }
}

impl CorefModel {
    fn fuse_layer(&self, stream: Stream) -> super::Dense {
        match stream {
            Stream::Word => self.layers.word_fuse,
            Stream::Pos => self.layers.pos_fuse,
        }
    }

    fn encode(&self, g: &mut Graph, batch: &Batch, steps: usize) -> Result<Encoded> {
        let mask: Vec<bool> = batch.mentions.iter().flat_map(|m| m.mask.iter().copied()).collect();
        let n = batch.mentions.len();
        let word_ids: Vec<usize> = batch.mentions.iter().flat_map(|m| m.word_ids.iter().copied()).collect();
        let pos_ids: Vec<usize> = batch.mentions.iter().flat_map(|m| m.pos_ids.iter().copied()).collect();

        let table = g.param(self.layers.word_embedding);
        let x = g.gather_rows(table, &word_ids)?;
        let x = g.dropout(x, self.config.input_dropout);
        let word = self.layers.word_lstm.forward(g, x, n, steps, &mask)?;

        let table = g.param(self.layers.pos_embedding);
        let x = g.gather_rows(table, &pos_ids)?;
        let x = g.dropout(x, self.config.input_dropout);
        let pos = self.layers.pos_lstm.forward(g, x, n, steps, &mask)?;

        let word = self.project(g, Stream::Word, word)?;
        let pos = self.project(g, Stream::Pos, pos)?;
        Ok(Encoded {
            streams: [word, pos],
            steps,
        })
    }

    /// `W [h; c1; c2]` splits into `h W_h + c1 W_1 + c2 W_2`, and since each
    /// context is an attention-weighted sum of states, the states can be
    /// projected once per batch.
    fn project(&self, g: &mut Graph, stream: Stream, states: Var) -> Result<[Var; 4]> {
        let d = g.shape(states).1;
        let w = g.param(self.fuse_layer(stream).weight);
        let mut out = [states; 4];
        for (k, slot) in out.iter_mut().skip(1).enumerate() {
            let block = g.slice_rows(w, k * d, d)?;
            *slot = g.matmul(states, block)?;
        }
        Ok(out)
    }

    fn block(&self, g: &mut Graph, enc: Encoded, cache: &mut Cache, stream: Stream, which: usize, m: usize) -> Result<Var> {
        if let Some(&v) = cache.blocks.get(&(stream, which, m)) {
            return Ok(v);
        }
        let source = enc.streams[stream.index()][which];
        let v = g.slice_rows(source, m * enc.steps, enc.steps)?;
        cache.blocks.insert((stream, which, m), v);
        Ok(v)
    }

    /// Softmax over `h_m · h_otherᵀ` with other's padding excluded.
    #[allow(clippy::too_many_arguments)]
    fn attention(&self, g: &mut Graph, enc: Encoded, cache: &mut Cache, batch: &Batch, stream: Stream, m: usize, other: usize) -> Result<Var> {
        if let Some(&v) = cache.attention.get(&(stream, m, other)) {
            return Ok(v);
        }
        let h_m = self.block(g, enc, cache, stream, STATES, m)?;
        let h_o = self.block(g, enc, cache, stream, STATES, other)?;
        let h_o_t = g.transpose(h_o);
        let scores = g.matmul(h_m, h_o_t)?;
        let a = g.masked_softmax(scores, &batch.mentions[other].mask)?;
        cache.attention.insert((stream, m, other), a);
        Ok(a)
    }

    /// Projected context of `other` for `m`, through fusion block `which`.
    #[allow(clippy::too_many_arguments)]
    fn context(
        &self,
        g: &mut Graph,
        enc: Encoded,
        cache: &mut Cache,
        batch: &Batch,
        stream: Stream,
        which: usize,
        m: usize,
        other: usize,
    ) -> Result<Var> {
        if let Some(&v) = cache.contexts.get(&(stream, which, m, other)) {
            return Ok(v);
        }
        let a = self.attention(g, enc, cache, batch, stream, m, other)?;
        let projected = self.block(g, enc, cache, stream, which, other)?;
        let c = g.matmul(a, projected)?;
        cache.contexts.insert((stream, which, m, other), c);
        Ok(c)
    }

    /// tanh(W_c [h_m; C_m,o1; C_m,o2] + b_c), mean-pooled over real steps.
    #[allow(clippy::too_many_arguments)]
    fn fuse(
        &self,
        g: &mut Graph,
        enc: Encoded,
        cache: &mut Cache,
        batch: &Batch,
        stream: Stream,
        m: usize,
        others: [usize; 2],
    ) -> Result<Var> {
        let own = self.block(g, enc, cache, stream, OWN, m)?;
        let c1 = self.context(g, enc, cache, batch, stream, OWN + 1, m, others[0])?;
        let c2 = self.context(g, enc, cache, batch, stream, OWN + 2, m, others[1])?;
        let bias = g.param(self.fuse_layer(stream).bias);
        let pre = g.sum(&[own, c1, c2])?;
        let pre = g.add(pre, bias)?;
        let fused = g.tanh(pre);
        Ok(g.masked_mean_rows(fused, &batch.mentions[m].mask)?)
    }

    fn pair_representation(&self, g: &mut Graph, inputs: [f64; 2], x: [Var; 2], y: [Var; 2]) -> Result<Var> {
        let joint = g.constant(Tensor::row_vector(inputs.to_vec()));
        let mut h = g.concat_cols(&[joint, x[0], y[0], x[1], y[1]])?;
        let n = self.layers.pair_stack.len();
        for (i, layer) in self.layers.pair_stack.iter().enumerate() {
            let pre = layer.apply(g, h)?;
            h = g.tanh(pre);
            if i + 1 < n {
                h = g.dropout(h, self.config.pair_dropout);
            }
        }
        Ok(h)
    }

    fn item_forward(
        &self,
        g: &mut Graph,
        enc: Encoded,
        cache: &mut Cache,
        batch: &Batch,
        item: &BatchItem,
    ) -> Result<ItemVars> {
        let members = &item.members;
        // Pooled [word, pos] per slot.
        let mut pooled: Vec<[Var; 2]> = Vec::with_capacity(members.len());
        for slot in 0..members.len() {
            let m = members[slot];
            let others = match self.kind {
                ModelKind::Triad => {
                    let mut o = [members[(slot + 1) % 3], members[(slot + 2) % 3]];
                    if batch.order_keys[o[1]] < batch.order_keys[o[0]] {
                        o.swap(0, 1);
                    }
                    o
                }
                ModelKind::Dyad => {
                    let o = members[1 - slot];
                    [o, o]
                }
            };
            let w = self.fuse(g, enc, cache, batch, Stream::Word, m, others)?;
            let p = self.fuse(g, enc, cache, batch, Stream::Pos, m, others)?;
            pooled.push([w, p]);
        }
        let slot_pairs: &[(usize, usize)] = match self.kind {
            ModelKind::Triad => &TRIAD_SLOT_PAIRS,
            ModelKind::Dyad => &DYAD_SLOT_PAIRS,
        };
        let mut pairs = Vec::with_capacity(slot_pairs.len());
        for (k, &(a, b)) in slot_pairs.iter().enumerate() {
            pairs.push(self.pair_representation(g, item.pair_inputs[k], pooled[a], pooled[b])?);
        }
        match &self.layers.head {
            Head::Triad {
                context,
                decoder,
                output,
            } => {
                let summed = g.sum(&pairs)?;
                let pre = context.apply(g, summed)?;
                let shared = g.tanh(pre);
                let mut decoded = Vec::with_capacity(3);
                for &p in &pairs {
                    let joined = g.concat_cols(&[p, shared])?;
                    let pre = decoder.apply(g, joined)?;
                    decoded.push(g.tanh(pre));
                }
                let joined = g.concat_cols(&decoded)?;
                let logits = output.apply(g, joined)?;
                let out = g.sigmoid(logits);
                Ok(ItemVars {
                    pairs,
                    shared: Some(shared),
                    output: out,
                })
            }
            Head::Dyad { output } => {
                let logits = output.apply(g, pairs[0])?;
                let out = g.sigmoid(logits);
                Ok(ItemVars {
                    pairs,
                    shared: None,
                    output: out,
                })
            }
        }
    }

    /// Outputs for every item, `items × outputs_per_item`.
    pub fn forward(&self, g: &mut Graph, batch: &Batch) -> Result<Var> {
        let steps = batch.validate(self.kind.order(), false)?;
        if batch.items.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let enc = self.encode(g, batch, steps)?;
        let mut cache = Cache::default();
        let mut outputs = Vec::with_capacity(batch.items.len());
        for item in &batch.items {
            outputs.push(self.item_forward(g, enc, &mut cache, batch, item)?.output);
        }
        Ok(g.concat_rows(&outputs)?)
    }

    /// Mean binary cross-entropy of the batch against its labels; returns `(loss, outputs)`.
    pub fn loss(&self, g: &mut Graph, batch: &Batch) -> Result<(Var, Var)> {
        batch.validate(self.kind.order(), true)?;
        let out = self.forward(g, batch)?;
        let loss = g.bce(out, &batch.labels())?;
        Ok((loss, out))
    }

    /// Inference without dropout. Mentions are encoded once; items are
    /// scored in bounded chunks over the cached encoder states.
    pub fn predict(&self, batch: &Batch) -> Result<Vec<Vec<f64>>> {
        let steps = batch.validate(self.kind.order(), false)?;
        if batch.items.is_empty() {
            return Ok(Vec::new());
        }
        let encoded: Vec<Tensor> = {
            let mut g = Graph::new(&self.params, false, 0);
            let enc = self.encode(&mut g, batch, steps)?;
            enc.streams.iter().flatten().map(|&v| g.tensor(v)).collect()
        };
        let k = self.outputs_per_item();
        let mut results = Vec::with_capacity(batch.items.len());
        for chunk in batch.items.chunks(PREDICT_CHUNK) {
            let mut g = Graph::new(&self.params, false, 0);
            let mut vars = encoded.iter().map(|t| g.constant(t.clone()));
            let mut next = || vars.next().expect("eight encoder tensors");
            let enc = Encoded {
                streams: [[next(), next(), next(), next()], [next(), next(), next(), next()]],
                steps,
            };
            let mut cache = Cache::default();
            for item in chunk {
                let vars = self.item_forward(&mut g, enc, &mut cache, batch, item)?;
                let v = g.value(vars.output);
                debug_assert_eq!(v.len(), k);
                results.push(v.to_vec());
            }
        }
        Ok(results)
    }

    /// Intermediate values for one item (inference mode).
    pub fn trace(&self, batch: &Batch, item: usize) -> Result<ItemTrace> {
        let steps = batch.validate(self.kind.order(), false)?;
        let it = batch
            .items
            .get(item)
            .ok_or_else(|| Error::Input(alloc::format!("no batch item {item}")))?;
        let mut g = Graph::new(&self.params, false, 0);
        let enc = self.encode(&mut g, batch, steps)?;
        let mut cache = Cache::default();
        let vars = self.item_forward(&mut g, enc, &mut cache, batch, it)?;
        Ok(ItemTrace {
            pair_representations: vars.pairs.iter().map(|&p| g.value(p).to_vec()).collect(),
            shared_context: vars.shared.map(|s| g.value(s).to_vec()),
            output: g.value(vars.output).to_vec(),
        })
    }

    /// Encoder states of one mention for one stream, `steps × 2h` (inference mode).
    pub fn encoder_states(&self, batch: &Batch, mention: usize) -> Result<(Tensor, Tensor)> {
        let steps = batch.validate(self.kind.order(), false)?;
        let mut g = Graph::new(&self.params, false, 0);
        let enc = self.encode(&mut g, batch, steps)?;
        let mut cache = Cache::default();
        let w = self.block(&mut g, enc, &mut cache, Stream::Word, STATES, mention)?;
        let p = self.block(&mut g, enc, &mut cache, Stream::Pos, STATES, mention)?;
        Ok((g.tensor(w), g.tensor(p)))
    }
}

/// Mutual attention between two explicit state matrices: returns the
/// attention weights `A_ij` (`T_i × T_j`) and the context `C_ij` (`T_i × d`).
pub fn mutual_attention(h_i: &Tensor, h_j: &Tensor, mask_j: &[bool]) -> Result<(Tensor, Tensor)> {
    let store = crate::autodiff::ParamStore::new();
    let mut g = Graph::new(&store, false, 0);
    let a = g.constant(h_i.clone());
    let b = g.constant(h_j.clone());
    let bt = g.transpose(b);
    let scores = g.matmul(a, bt)?;
    let attn = g.masked_softmax(scores, mask_j)?;
    let ctx = g.matmul(attn, b)?;
    Ok((g.tensor(attn), g.tensor(ctx)))
}

const _: () = {
    const fn send_sync<T: Send + Sync>() {}
    send_sync::<CorefModel>();
};
