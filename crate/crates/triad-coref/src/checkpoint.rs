//! Binary checkpoints: settings, vocabularies, parameters with their Adam
//! moments, and the training state. All numbers are little-endian; floats
//! are stored bit-exactly.

use std::path::Path;

use triad_coref_core::autodiff::{Adam, Tensor};
use triad_coref_core::embedding::EmbeddingTable;
use triad_coref_core::features::PosVocabulary;
use triad_coref_core::model::CorefModel;

use crate::config::Settings;
use crate::training::{ModelBundle, SubepochLoss, TrainState};
use crate::{AppError, AppResult};

const MAGIC: &[u8; 8] = b"TRIADCK\0";
const VERSION: u32 = 1;
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn floats(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
    fn text(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn texts(&mut self, items: &[String]) {
        self.u64(items.len() as u64);
        for s in items {
            self.text(s);
        }
    }
    fn tensor(&mut self, t: &Tensor) {
        self.u64(t.rows() as u64);
        self.u64(t.cols() as u64);
        self.floats(t.data());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

fn corrupt(what: &str) -> AppError {
    AppError::Checkpoint(format!("truncated or corrupt data while reading {what}"))
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> AppResult<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| corrupt(what))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u32(&mut self, what: &str) -> AppResult<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self, what: &str) -> AppResult<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self, what: &str) -> AppResult<usize> {
        let n = self.u64(what)?;
        usize::try_from(n).ok().filter(|&n| n <= self.bytes.len()).ok_or_else(|| corrupt(what))
    }
    fn f64(&mut self, what: &str) -> AppResult<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
    fn floats(&mut self, n: usize, what: &str) -> AppResult<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| corrupt(what))?, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
    fn text(&mut self, what: &str) -> AppResult<String> {
        let n = self.len(what)?;
        String::from_utf8(self.take(n, what)?.to_vec()).map_err(|_| corrupt(what))
    }
    fn texts(&mut self, what: &str) -> AppResult<Vec<String>> {
        let n = self.len(what)?;
        (0..n).map(|_| self.text(what)).collect()
    }
    fn tensor(&mut self, what: &str) -> AppResult<Tensor> {
        let rows = self.len(what)?;
        let cols = self.len(what)?;
        let data = self.floats(rows.checked_mul(cols).ok_or_else(|| corrupt(what))?, what)?;
        Tensor::from_vec(rows, cols, data).map_err(|_| corrupt(what))
    }
}

pub fn encode(bundle: &ModelBundle) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.text(&bundle.settings.render());
    w.texts(bundle.vocabulary.words());
    w.tensor(bundle.vocabulary.vectors());
    w.texts(bundle.pos.tags());

    let state = &bundle.state;
    w.u64(state.subepoch as u64);
    w.f64(state.adam.beta1);
    w.f64(state.adam.beta2);
    w.f64(state.adam.epsilon);
    w.u64(state.adam.step);
    w.u64(state.history.len() as u64);
    for h in &state.history {
        w.u64(h.subepoch as u64);
        w.f64(h.loss);
        w.f64(h.lr);
        w.u64(h.steps as u64);
    }

    let params = bundle.model.params();
    w.u64(params.len() as u64);
    for (_, p) in params.iter() {
        w.text(&p.name);
        w.tensor(&p.value);
        w.floats(&p.first_moment);
        w.floats(&p.second_moment);
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> AppResult<ModelBundle> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(MAGIC.len(), "header")? != MAGIC {
        return Err(AppError::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(AppError::Checkpoint(format!("unsupported version {version}")));
    }
    let settings = Settings::parse(&r.text("settings")?)?;
    let words = r.texts("vocabulary")?;
    let vectors = r.tensor("vocabulary vectors")?;
    let vocabulary = EmbeddingTable::from_parts(words, vectors)?;
    let pos = PosVocabulary::from_tags(r.texts("POS tags")?)?;

    let subepoch = r.len("training state")?;
    let adam = Adam {
        beta1: r.f64("optimizer")?,
        beta2: r.f64("optimizer")?,
        epsilon: r.f64("optimizer")?,
        step: r.u64("optimizer")?,
    };
    let n = r.len("loss history")?;
    let history = (0..n)
        .map(|_| {
            Ok(SubepochLoss {
                subepoch: r.len("loss history")?,
                loss: r.f64("loss history")?,
                lr: r.f64("loss history")?,
                steps: r.len("loss history")?,
            })
        })
        .collect::<AppResult<Vec<_>>>()?;

    let count = r.len("parameters")?;
    let mut named = Vec::with_capacity(count);
    let mut moments = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.text("parameter name")?;
        let value = r.tensor(&name)?;
        let first = r.floats(value.len(), &name)?;
        let second = r.floats(value.len(), &name)?;
        moments.push((name.clone(), first, second));
        named.push((name, value));
    }
    if r.at != bytes.len() {
        return Err(AppError::Checkpoint("trailing bytes after the last parameter".into()));
    }
    let t = &settings.train;
    let mut model = CorefModel::from_named_params(t.kind, t.model.clone(), &vocabulary, pos.len(), named)?;
    for (name, first, second) in moments {
        let id = model.params().id(&name).expect("names checked by from_named_params");
        let p = model.params_mut().get_mut(id);
        p.first_moment = first;
        p.second_moment = second;
    }
    Ok(ModelBundle {
        settings,
        model,
        vocabulary,
        pos,
        state: TrainState {
            subepoch,
            adam,
            history,
        },
    })
}

/// Writes `checkpoint.bin` in `dir` through a temporary file and a rename.
pub fn save(bundle: &ModelBundle, dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    let path = dir.join(CHECKPOINT_FILE);
    std::fs::write(&tmp, encode(bundle)).map_err(|e| AppError::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| AppError::io(&path, e))
}

/// Loads a checkpoint from a model directory or a checkpoint file path.
pub fn load(path: &Path) -> AppResult<ModelBundle> {
    let file = if path.is_dir() { path.join(CHECKPOINT_FILE) } else { path.to_path_buf() };
    let bytes = std::fs::read(&file).map_err(|e| AppError::io(&file, e))?;
    decode(&bytes)
}
