//! Central finite-difference checks of every differentiable operation, the
//! BiLSTM, and the full triad and dyad networks. Each function panics with
//! the worst relative error when a check fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gradient_check, small_document};
use triad_coref_core::autodiff::{BiLstm, Graph, ParamStore, Tensor, Var};
use triad_coref_core::embedding::EmbeddingTable;
use triad_coref_core::features::{FeatureConfig, PosVocabulary};
use triad_coref_core::model::{Batch, CorefModel, ModelKind, PolyadEncoder, TriadModelConfig};
use triad_coref_core::polyads::{enumerate_training_pairs, enumerate_training_triads, PolyadSpec};

const EPS: f64 = 1e-6;
const OP_TOLERANCE: f64 = 1e-4;
const MODEL_TOLERANCE: f64 = 1e-3;

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Reduces any output to a scalar with fixed random weights so that every
/// output entry carries a distinct gradient.
fn weighted_sum(g: &mut Graph, v: Var, seed: u64) -> Var {
    let (r, c) = g.shape(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = g.constant(random_tensor(&mut rng, r, c, 1.0));
    let prod = g.mul(v, w).unwrap();
    g.sum_all(prod)
}

/// Builds a store with the given parameter shapes and checks `build`.
fn check_op(name: &str, shapes: &[(usize, usize)], build: impl Fn(&mut Graph, &[Var]) -> Var) {
    let mut rng = ChaCha8Rng::seed_from_u64(name.len() as u64 * 7919);
    let mut store = ParamStore::new();
    let ids: Vec<_> = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| store.add(format!("p{i}"), random_tensor(&mut rng, r, c, 1.0)).unwrap())
        .collect();
    let loss = |s: &ParamStore| {
        let mut g = Graph::new(s, true, 11);
        let vars: Vec<Var> = ids.iter().map(|&id| g.param(id)).collect();
        let out = build(&mut g, &vars);
        let scalar = if g.shape(out) == (1, 1) { out } else { weighted_sum(&mut g, out, 5) };
        (g.scalar(scalar), g.backward(scalar).expect("backward succeeds"))
    };
    let (_, grads) = loss(&store);
    let (worst, at) = gradient_check(&mut store, &grads, 64, EPS, 3, |s| loss(s).0);
    assert!(worst < OP_TOLERANCE, "{name}: relative error {worst:e} at {at}");
}

pub fn matmul() {
    check_op("matmul", &[(3, 4), (4, 2)], |g, v| g.matmul(v[0], v[1]).unwrap());
}

pub fn add_sub_mul_with_broadcasting() {
    for (label, rhs) in [("same", (3, 4)), ("row", (1, 4)), ("col", (3, 1)), ("scalar", (1, 1))] {
        check_op(&format!("add-{label}"), &[(3, 4), rhs], |g, v| g.add(v[0], v[1]).unwrap());
        check_op(&format!("sub-{label}"), &[(3, 4), rhs], |g, v| g.sub(v[0], v[1]).unwrap());
        check_op(&format!("mul-{label}"), &[(3, 4), rhs], |g, v| g.mul(v[0], v[1]).unwrap());
    }
}

pub fn elementwise_activations() {
    check_op("scale", &[(2, 3)], |g, v| g.scale(v[0], -1.7));
    check_op("tanh", &[(2, 3)], |g, v| g.tanh(v[0]));
    check_op("sigmoid", &[(2, 3)], |g, v| g.sigmoid(v[0]));
}

pub fn softmax_and_masked_softmax() {
    check_op("softmax", &[(3, 5)], |g, v| g.softmax(v[0]).unwrap());
    check_op("masked_softmax", &[(3, 5)], |g, v| {
        g.masked_softmax(v[0], &[true, false, true, true, false]).unwrap()
    });
}

pub fn concatenation_and_sum() {
    check_op("concat_cols", &[(2, 3), (2, 1), (2, 2)], |g, v| g.concat_cols(v).unwrap());
    check_op("concat_rows", &[(1, 3), (2, 3)], |g, v| g.concat_rows(v).unwrap());
    check_op("sum", &[(2, 3), (2, 3), (2, 3)], |g, v| g.sum(v).unwrap());
}

pub fn reshaping_ops() {
    check_op("transpose", &[(2, 3)], |g, v| g.transpose(v[0]));
    check_op("gather_rows", &[(4, 3)], |g, v| g.gather_rows(v[0], &[2, 0, 2, 3]).unwrap());
    check_op("slice_rows", &[(4, 3)], |g, v| g.slice_rows(v[0], 1, 2).unwrap());
    check_op("slice_cols", &[(4, 3)], |g, v| g.slice_cols(v[0], 1, 2).unwrap());
    check_op("masked_mean_rows", &[(4, 3)], |g, v| {
        g.masked_mean_rows(v[0], &[true, false, true, true]).unwrap()
    });
    check_op("sum_all", &[(4, 3)], |g, v| g.sum_all(v[0]));
}

pub fn dropout_with_fixed_mask() {
    check_op("dropout", &[(4, 5)], |g, v| g.dropout(v[0], 0.4));
}

pub fn binary_cross_entropy() {
    check_op("bce", &[(2, 3)], |g, v| {
        let p = g.sigmoid(v[0]);
        g.bce(p, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap()
    });
}

pub fn composite_attention_block() {
    check_op("attention", &[(4, 3), (5, 3)], |g, v| {
        let bt = g.transpose(v[1]);
        let s = g.matmul(v[0], bt).unwrap();
        let a = g.masked_softmax(s, &[true, true, false, true, true]).unwrap();
        g.matmul(a, v[1]).unwrap()
    });
}

pub fn bilstm_with_masked_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut store = ParamStore::new();
    let lstm = BiLstm::new(&mut store, "lstm", 3, 4, &mut rng).unwrap();
    let x_id = store.add("x", random_tensor(&mut rng, 2 * 6, 3, 1.0)).unwrap();
    let mask = [
        false, true, true, true, false, false, //
        true, true, true, true, true, false,
    ];
    let run = |s: &ParamStore| {
        let mut g = Graph::new(s, false, 0);
        let x = g.param(x_id);
        let h = lstm.forward(&mut g, x, 2, 6, &mask).unwrap();
        let out = weighted_sum(&mut g, h, 9);
        (g.scalar(out), g.backward(out).unwrap())
    };
    let (_, grads) = run(&store);
    let (worst, at) = gradient_check(&mut store, &grads, 40, EPS, 5, |s| run(s).0);
    assert!(worst < OP_TOLERANCE, "bilstm: relative error {worst:e} at {at}");
}

fn tiny_config() -> TriadModelConfig {
    TriadModelConfig {
        word_emb_dim: 5,
        pos_emb_dim: 3,
        word_lstm_hidden: 4,
        pos_lstm_hidden: 4,
        pair_hidden: vec![6, 5],
        shared_context_dim: 4,
        decoder_dim: 3,
        input_dropout: 0.3,
        pair_dropout: 0.2,
    }
}

pub fn full_model(kind: ModelKind) {
    let doc = small_document();
    let words: Vec<String> = doc.tokens.iter().map(|t| t.surface.clone()).collect();
    let emb = EmbeddingTable::random(5, &words, 3).unwrap();
    let pos = PosVocabulary::from_documents([&doc]);
    let features = FeatureConfig {
        context: 1,
        max_mention_len: 2,
        max_distance: 2000,
    };
    let encoder = PolyadEncoder::new(&emb, &pos, &features);
    let mut model = CorefModel::new(kind, tiny_config(), &emb, pos.len(), 21).unwrap();
    let spec = PolyadSpec::default();
    let mut batch = Batch::new();
    match kind {
        ModelKind::Triad => {
            for t in enumerate_training_triads(&doc, &spec).iter().step_by(7).take(4) {
                encoder.push(&mut batch, 0, &doc, &t.ids, Some(&t.labels)).unwrap();
            }
        }
        ModelKind::Dyad => {
            for p in enumerate_training_pairs(&doc, &spec).iter().step_by(3).take(5) {
                encoder.push(&mut batch, 0, &doc, &p.ids, Some(&[p.label])).unwrap();
            }
        }
    }
    let run = |s: &ParamStore, m: &CorefModel| {
        let mut g = Graph::new(s, true, 99);
        let (loss, _) = m.loss(&mut g, &batch).unwrap();
        (g.scalar(loss), g.backward(loss).unwrap())
    };
    let (_, grads) = run(model.params(), &model);
    let probe = model.clone();
    let (worst, at) = gradient_check(model.params_mut(), &grads, 12, EPS, 13, |s| run(s, &probe).0);
    assert!(worst < MODEL_TOLERANCE, "{} model: relative error {worst:e} at {at}", kind.name());
}

/// Every operation check in turn.
pub fn all_ops() {
    matmul();
    add_sub_mul_with_broadcasting();
    elementwise_activations();
    softmax_and_masked_softmax();
    concatenation_and_sum();
    reshaping_ops();
    dropout_with_fixed_mask();
    binary_cross_entropy();
    composite_attention_block();
    bilstm_with_masked_steps();
}
