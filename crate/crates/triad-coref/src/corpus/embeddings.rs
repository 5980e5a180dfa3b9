use std::collections::{BTreeMap, BTreeSet};

use triad_coref_core::document::Document;
use triad_coref_core::embedding::EmbeddingTable;

use crate::{AppError, AppResult};

/// A loaded table with the loader's warning counts.
#[derive(Debug, Clone)]
pub struct EmbeddingLoad {
    pub table: EmbeddingTable,
    pub pretrained: usize,
    pub skipped_lines: usize,
    pub duplicate_lines: usize,
}

/// Surfaces and speaker names of a corpus. Speaker names are included so
/// that substituted first and second person pronouns have their own rows.
pub fn corpus_vocabulary<'a>(docs: impl IntoIterator<Item = &'a Document>) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    for doc in docs {
        for t in &doc.tokens {
            vocab.insert(t.surface.clone());
            if let Some(s) = &t.speaker {
                vocab.insert(s.clone());
            }
        }
    }
    vocab
}

/// Reads `word v1 .. v_dim` lines for the words in `vocab_filter`. Words the
/// file lacks get random rows; the table lists words in filter order.
pub fn load_embeddings(
    text: &str,
    vocab_filter: &BTreeSet<String>,
    dim: usize,
    seed: u64,
) -> AppResult<EmbeddingLoad> {
    let mut found: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut skipped_lines = 0;
    let mut duplicate_lines = 0;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(' ').collect();
        if fields.len() != dim + 1 {
            skipped_lines += 1;
            continue;
        }
        let word = fields[0];
        if !vocab_filter.contains(word) {
            continue;
        }
        if found.contains_key(word) {
            duplicate_lines += 1;
            continue;
        }
        match fields[1..].iter().map(|v| v.parse::<f64>()).collect::<Result<Vec<_>, _>>() {
            Ok(values) if values.iter().all(|v| v.is_finite()) => {
                found.insert(word, values);
            }
            _ => skipped_lines += 1,
        }
    }
    if found.is_empty() {
        return Err(AppError::Format(
            "no word of the corpus vocabulary has a vector in the embedding file".into(),
        ));
    }
    if skipped_lines > 0 {
        log::warn!("skipped {skipped_lines} malformed embedding lines");
    }
    if duplicate_lines > 0 {
        log::warn!("ignored {duplicate_lines} repeated embedding lines");
    }
    let pretrained = found.len();
    let rows = vocab_filter
        .iter()
        .map(|w| (w.clone(), found.remove(w.as_str())))
        .collect();
    Ok(EmbeddingLoad {
        table: EmbeddingTable::from_rows(dim, rows, seed)?,
        pretrained,
        skipped_lines,
        duplicate_lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filter(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn one_word_file() {
        let load = load_embeddings("cat 0.5 -0.25 1\n", &filter(&["cat"]), 3, 0).unwrap();
        assert_eq!(load.table.rows(), 1 + 4);
        assert_eq!(load.table.row(load.table.lookup("cat")), &[0.5, -0.25, 1.0]);
    }

    #[test]
    fn missing_words_are_random_and_small() {
        let load = load_embeddings("cat 1 1 1\n", &filter(&["cat", "dog"]), 3, 0).unwrap();
        let row = load.table.row(load.table.lookup("dog"));
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 0.05 * 3f64.sqrt());
        assert_eq!(load.pretrained, 1);
    }

    #[test]
    fn duplicates_and_bad_lines() {
        let text = "cat 1 2 3\ncat 4 5 6\nbad 1 2\n";
        let load = load_embeddings(text, &filter(&["cat"]), 3, 0).unwrap();
        assert_eq!(load.table.row(load.table.lookup("cat")), &[1.0, 2.0, 3.0]);
        assert_eq!(load.duplicate_lines, 1);
        assert_eq!(load.skipped_lines, 1);
    }

    #[test]
    fn empty_intersection_is_an_error() {
        assert!(load_embeddings("cat 1 2 3\n", &filter(&["dog"]), 3, 0).is_err());
    }
}
