//! Word embedding table with the four reserved rows used by mention windows.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::{Error, Result};

pub const DEFAULT_EMBEDDING_DIM: usize = 300;
/// Half-width of the uniform range used for rows without pretrained values.
pub const OOV_INIT_RANGE: f64 = 0.05;
pub const SPECIAL_ROWS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    vocab: BTreeMap<String, usize>,
    vectors: Tensor,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` rows; the special rows are
    /// appended after them. `None` vectors and the special rows are drawn
    /// uniformly from ±[`OOV_INIT_RANGE`]; the padding row is zero.
    pub fn from_rows(dim: usize, rows: Vec<(String, Option<Vec<f64>>)>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = Vec::with_capacity(rows.len());
        let mut vocab = BTreeMap::new();
        let mut data = Vec::with_capacity((rows.len() + SPECIAL_ROWS) * dim);
        for (word, vector) in rows {
            if vocab.contains_key(&word) {
                continue;
            }
            match vector {
                Some(v) => {
                    if v.len() != dim {
                        return Err(Error::Input(alloc::format!(
                            "vector for {word:?} has {} values, expected {dim}",
                            v.len()
                        )));
                    }
                    data.extend_from_slice(&v);
                }
                None => data.extend((0..dim).map(|_| rng.gen_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE))),
            }
            vocab.insert(word.clone(), words.len());
            words.push(word);
        }
        // unknown, padding, begin, end
        for special in 0..SPECIAL_ROWS {
            if special == 1 {
                data.extend(core::iter::repeat_n(0.0, dim));
            } else {
                data.extend((0..dim).map(|_| rng.gen_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE)));
            }
        }
        let n_rows = words.len() + SPECIAL_ROWS;
        Ok(EmbeddingTable {
            dim,
            words,
            vocab,
            vectors: Tensor::from_vec(n_rows, dim, data)?,
        })
    }

    /// Randomly initialised table over `words` (first occurrence wins).
    pub fn random<I, S>(dim: usize, words: I, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let rows = words
            .into_iter()
            .map(|w| (w.as_ref().to_string(), None))
            .collect();
        Self::from_rows(dim, rows, seed)
    }

    /// Rebuilds a table from a saved word list and matrix (special rows included).
    pub fn from_parts(words: Vec<String>, vectors: Tensor) -> Result<Self> {
        if vectors.rows() != words.len() + SPECIAL_ROWS {
            return Err(Error::Input(alloc::format!(
                "embedding matrix has {} rows for {} words",
                vectors.rows(),
                words.len()
            )));
        }
        let vocab = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect::<BTreeMap<_, _>>();
        if vocab.len() != words.len() {
            return Err(Error::Input("duplicate word in embedding vocabulary".into()));
        }
        Ok(EmbeddingTable {
            dim: vectors.cols(),
            words,
            vocab,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vectors.rows()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vectors(&self) -> &Tensor {
        &self.vectors
    }

    pub fn unknown(&self) -> usize {
        self.words.len()
    }

    pub fn padding(&self) -> usize {
        self.words.len() + 1
    }

    pub fn begin(&self) -> usize {
        self.words.len() + 2
    }

    pub fn end(&self) -> usize {
        self.words.len() + 3
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.vocab.get(word).copied()
    }

    /// Exact match, then lowercase, then the unknown row.
    pub fn lookup(&self, surface: &str) -> usize {
        if let Some(&i) = self.vocab.get(surface) {
            return i;
        }
        let lower = surface.to_lowercase();
        self.vocab.get(&lower).copied().unwrap_or(self.unknown())
    }

    /// Surface string for a row, `None` for the special rows.
    pub fn word(&self, row: usize) -> Option<&str> {
        self.words.get(row).map(String::as_str)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        self.vectors.row(row)
    }
}
