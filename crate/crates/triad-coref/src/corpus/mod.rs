//! Corpus input and output: CoNLL column files, word vectors and synthetic
//! documents.

mod conll;
mod embeddings;
mod synth;

use std::path::{Path, PathBuf};

pub use conll::{parse_conll, write_conll};
pub use embeddings::{corpus_vocabulary, load_embeddings, EmbeddingLoad};
pub use synth::{generate_synthetic_corpus, SynthConfig};

use triad_coref_core::document::Document;

use crate::{AppError, AppResult};

/// Reads one CoNLL file, or every `*.conll` file of a directory in name order.
pub fn read_corpus(path: &Path) -> AppResult<Vec<Document>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| AppError::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "conll"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut docs = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| AppError::io(&file, e))?;
        docs.extend(parse_conll(&text).map_err(|e| match e {
            AppError::Parse { line, message } => AppError::Format(format!("{}:{line}: {message}", file.display())),
            other => other,
        })?);
    }
    Ok(docs)
}
