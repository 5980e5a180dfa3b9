use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triad_coref_core::document::{Document, Token};

use crate::{AppError, AppResult};

const SUBJECT: [&str; 4] = ["he", "she", "it", "they"];
const POSSESSIVE: [&str; 4] = ["his", "her", "its", "their"];
const VERBS: usize = 12;

/// Shape of a synthetic corpus.
///
/// Each entity has a proper name (`Name<k>`, tagged NNP) and one or more
/// cue words that appear just before its mentions. In the default mode all
/// mentions of an entity share one cue. With `chain` set, the name's
/// sentence carries a distinct cue per later mention and each pronoun sees
/// only its own cue, so pronouns of one entity are linked only through the
/// name.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub documents: usize,
    pub entities_per_doc: usize,
    pub mentions_per_entity: usize,
    /// Size of the filler, cue and name pools.
    pub vocab_size: usize,
    /// Chance that a non-first mention is a pronoun rather than the name.
    pub pronoun_rate: f64,
    /// Speakers per document. In the default mode the first entities are
    /// the speakers and may be referred to as "I" and "you".
    pub speakers: usize,
    pub chain: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 20,
            entities_per_doc: 6,
            mentions_per_entity: 4,
            vocab_size: 200,
            pronoun_rate: 0.5,
            speakers: 2,
            chain: false,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> AppResult<()> {
        if self.entities_per_doc == 0 || self.mentions_per_entity == 0 {
            return Err(AppError::Config(
                "synthetic corpora need at least one entity and one mention per entity".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.pronoun_rate) {
            return Err(AppError::Config(format!("pronoun rate {} outside [0, 1]", self.pronoun_rate)));
        }
        let cues = if self.chain {
            self.entities_per_doc * self.mentions_per_entity
        } else {
            self.entities_per_doc
        };
        if self.vocab_size < cues.max(self.entities_per_doc).max(4) {
            return Err(AppError::Config(format!(
                "vocabulary size {} is too small for {cues} distinct cues",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

struct Builder {
    tokens: Vec<Token>,
    spans: Vec<(usize, usize, Option<i64>)>,
    sentence: usize,
}

impl Builder {
    fn push(&mut self, surface: String, pos: &str, speaker: &Option<String>) -> usize {
        let i = self.tokens.len();
        self.tokens.push(Token {
            surface,
            pos: pos.to_string(),
            speaker: speaker.clone(),
            sentence_index: self.sentence,
            doc_token_index: i,
        });
        i
    }
}

enum Form {
    Name,
    Pronoun { surface: String, pos: &'static str },
}

/// Generates `config.documents` documents; the same seed gives the same corpus.
pub fn generate_synthetic_corpus(config: &SynthConfig, seed: u64) -> AppResult<Vec<Document>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.documents)
        .map(|d| generate_document(config, d, &mut rng))
        .collect()
}

fn generate_document(config: &SynthConfig, index: usize, rng: &mut ChaCha8Rng) -> AppResult<Document> {
    let e = config.entities_per_doc;
    let m = config.mentions_per_entity;
    let pool: Vec<usize> = (0..config.vocab_size).collect();
    let names: Vec<String> = pool.choose_multiple(rng, e).map(|k| format!("Name{k}")).collect();
    let cue_count = if config.chain { e * m } else { e };
    let cues: Vec<String> = pool.choose_multiple(rng, cue_count).map(|k| format!("k{k}")).collect();
    let forms: Vec<usize> = (0..e).map(|_| rng.gen_range(0..SUBJECT.len())).collect();

    // Speaker names: the first entities in the default mode, anonymous
    // participants in chain mode.
    let speakers: Vec<String> = (0..config.speakers)
        .map(|s| {
            if !config.chain && s < e {
                names[s].clone()
            } else {
                format!("Speaker{s}")
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..e).flat_map(|x| std::iter::repeat_n(x, m)).collect();
    order.shuffle(rng);

    let mut b = Builder {
        tokens: Vec::new(),
        spans: Vec::new(),
        sentence: 0,
    };
    let mut seen = vec![0usize; e];
    for &entity in &order {
        let nth = seen[entity];
        seen[entity] += 1;
        let is_speaker = !config.chain && entity < config.speakers;
        let mut speaker = speakers.choose(rng).cloned();
        let form = if nth == 0 || (!config.chain && !rng.gen_bool(config.pronoun_rate)) {
            Form::Name
        } else if is_speaker && rng.gen_bool(0.5) {
            speaker = Some(speakers[entity].clone());
            Form::Pronoun {
                surface: "I".into(),
                pos: "PRP",
            }
        } else if is_speaker && config.speakers == 2 && rng.gen_bool(0.5) {
            speaker = Some(speakers[1 - entity].clone());
            Form::Pronoun {
                surface: "you".into(),
                pos: "PRP",
            }
        } else {
            let f = if config.chain { rng.gen_range(0..SUBJECT.len()) } else { forms[entity] };
            if rng.gen_bool(0.3) {
                Form::Pronoun {
                    surface: POSSESSIVE[f].into(),
                    pos: "PRP$",
                }
            } else {
                Form::Pronoun {
                    surface: SUBJECT[f].into(),
                    pos: "PRP",
                }
            }
        };

        let sentence_cues: Vec<&String> = match (config.chain, &form) {
            (false, _) => vec![&cues[entity]],
            (true, Form::Name) => cues[entity * m + 1..(entity + 1) * m].iter().collect(),
            (true, Form::Pronoun { .. }) => vec![&cues[entity * m + nth]],
        };
        for _ in 0..rng.gen_range(1..=2) {
            b.push(format!("w{}", rng.gen_range(0..config.vocab_size)), "NN", &speaker);
        }
        for cue in sentence_cues {
            b.push(cue.clone(), "NN", &speaker);
        }
        let at = match form {
            Form::Name => b.push(names[entity].clone(), "NNP", &speaker),
            Form::Pronoun { surface, pos } => b.push(surface, pos, &speaker),
        };
        b.spans.push((at, at, Some(entity as i64)));
        b.push(format!("v{}", rng.gen_range(0..VERBS)), "VBD", &speaker);
        for _ in 0..rng.gen_range(2..=3) {
            b.push(format!("w{}", rng.gen_range(0..config.vocab_size)), "NN", &speaker);
        }
        b.push(".".into(), ".", &speaker);
        b.sentence += 1;
    }
    Ok(Document::new(format!("synth/{index:04}"), 0, b.tokens, b.spans)?)
}
