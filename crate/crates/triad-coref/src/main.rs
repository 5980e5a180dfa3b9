use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triad_coref::checkpoint;
use triad_coref::config::Settings;
use triad_coref::core::clustering::Linkage;
use triad_coref::core::document::Document;
use triad_coref::core::postprocess::{cluster_document, PostprocessFlags};
use triad_coref::corpus::{
    corpus_vocabulary, generate_synthetic_corpus, load_embeddings, read_corpus, write_conll, SynthConfig,
};
use triad_coref::pipeline::{
    compare, evaluate, parallel_map, prepare_document, read_affinities, render_cluster_listing, render_comparison,
    render_histogram, render_key_values, render_table, score_document, with_response, write_affinities,
};
use triad_coref::training::{run_training, ModelBundle};
use triad_coref::{AppError, AppResult};

/// Triad-based coreference resolution: synthetic data, training, scoring,
/// clustering and evaluation.
#[derive(Parser)]
#[command(name = "triad-coref", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus in CoNLL column format.
    Synth(SynthArgs),
    /// Train a triad or dyad model; checkpoints after every sub-epoch.
    Train(TrainArgs),
    /// Write pairwise affinities and distances for every document.
    Score(ScoreArgs),
    /// Cluster an affinity file into entities.
    Cluster(ClusterArgs),
    /// Run the full pipeline and print MUC, B3 and CEAF-phi4 scores.
    Evaluate(EvaluateArgs),
    /// Show dyad and triad affinities for one mention pair.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    docs: usize,
    #[arg(long, default_value_t = 6)]
    entities: usize,
    /// Mentions per entity.
    #[arg(long, default_value_t = 4)]
    mentions: usize,
    /// Size of the filler, cue and name pools.
    #[arg(long, default_value_t = 200)]
    vocab: usize,
    #[arg(long, default_value_t = 0.5)]
    pronoun_rate: f64,
    #[arg(long, default_value_t = 2)]
    speakers: usize,
    /// Pronouns of an entity share no cue; only the name links them.
    #[arg(long)]
    chain: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Settings file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CoNLL file or directory of `.conll` files.
    #[arg(long)]
    corpus: PathBuf,
    /// Model directory for checkpoint.bin and loss.log.
    #[arg(long)]
    out: PathBuf,
    /// Word vectors, one `word v1 .. vd` line each.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Stop once this many sub-epochs are complete.
    #[arg(long)]
    until: Option<usize>,
}

#[derive(Args, Clone, Copy)]
struct RuleFlags {
    /// Disable the same-proper-name distance rule.
    #[arg(long)]
    no_propername: bool,
    /// Disable replacing "I" and "you" by speaker names.
    #[arg(long)]
    no_speaker_sub: bool,
    /// Disable the pronoun-only cluster fix.
    #[arg(long)]
    no_pronoun_fix: bool,
}

impl RuleFlags {
    fn flags(self) -> PostprocessFlags {
        PostprocessFlags {
            proper_names: !self.no_propername,
            speaker_substitution: !self.no_speaker_sub,
            pronoun_fix: !self.no_pronoun_fix,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable replacing "I" and "you" by speaker names before scoring.
    #[arg(long)]
    no_speaker_sub: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct ClusterArgs {
    /// File written by `score`.
    #[arg(long)]
    affinity: PathBuf,
    /// Corpus the affinities came from; needed for the postprocessing rules.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Cutoff distance.
    #[arg(long = "t", default_value_t = 3.5)]
    threshold: f64,
    /// average, single or complete.
    #[arg(long, default_value = "average")]
    linkage: String,
    #[command(flatten)]
    rules: RuleFlags,
    /// Write the response as a CoNLL file (requires --corpus).
    #[arg(long)]
    conll_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model directory; repeat to print systems side by side.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    rules: RuleFlags,
    /// Cutoff distance; the model's setting when absent.
    #[arg(long = "t")]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Print entity-size histograms of key and response.
    #[arg(long)]
    histogram: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    dyad: PathBuf,
    #[arg(long)]
    triad: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Document key.
    #[arg(long)]
    doc: String,
    #[arg(long, default_value_t = 0)]
    part: u32,
    /// Mention ids as `a,b`.
    #[arg(long)]
    pair: String,
    #[arg(long)]
    no_speaker_sub: bool,
}

fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> AppResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn synth(a: SynthArgs) -> AppResult<()> {
    let config = SynthConfig {
        documents: a.docs,
        entities_per_doc: a.entities,
        mentions_per_entity: a.mentions,
        vocab_size: a.vocab,
        pronoun_rate: a.pronoun_rate,
        speakers: a.speakers,
        chain: a.chain,
    };
    let docs = generate_synthetic_corpus(&config, a.seed)?;
    emit(a.out.as_deref(), &write_conll(&docs)?)
}

fn train(a: TrainArgs) -> AppResult<()> {
    let corpus = read_corpus(&a.corpus)?;
    let mut bundle = if a.resume {
        checkpoint::load(&a.out)?
    } else {
        let settings = match &a.config {
            Some(p) => Settings::parse(&read_text(p)?)?,
            None => Settings::default(),
        };
        let embeddings = match &a.embeddings {
            Some(p) => {
                let load = load_embeddings(
                    &read_text(p)?,
                    &corpus_vocabulary(&corpus),
                    settings.train.model.word_emb_dim,
                    settings.train.seed,
                )?;
                eprintln!(
                    "embeddings: {} pretrained rows, {} malformed lines skipped, {} repeats ignored",
                    load.pretrained, load.skipped_lines, load.duplicate_lines
                );
                Some(load.table)
            }
            None => None,
        };
        ModelBundle::initialise(settings, &corpus, embeddings)?
    };
    std::fs::create_dir_all(&a.out).map_err(|e| AppError::io(&a.out, e))?;
    let log_path = a.out.join("loss.log");
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| AppError::io(&log_path, e))?;
    let until = a.until.unwrap_or(bundle.settings.train.total_subepochs);
    let out = a.out.clone();
    run_training(&mut bundle, &corpus, until, &mut |b, record, wallclock| {
        let line = record.log_line(wallclock);
        println!("{line}");
        writeln!(log, "{line}").map_err(|e| AppError::io(&log_path, e))?;
        checkpoint::save(b, &out)
    })
}

fn score(a: ScoreArgs) -> AppResult<()> {
    let bundle = checkpoint::load(&a.model)?;
    let corpus = read_corpus(&a.corpus)?;
    let flags = PostprocessFlags {
        speaker_substitution: !a.no_speaker_sub,
        ..PostprocessFlags::default()
    };
    let scored = parallel_map(&corpus, a.workers, |doc| {
        let prepared = prepare_document(doc, &flags);
        Ok((prepared.clone(), score_document(&bundle, &prepared)?))
    })?;
    let entries: Vec<_> = scored.iter().map(|(d, aff)| (d, aff)).collect();
    emit(a.out.as_deref(), &write_affinities(&entries, &bundle.settings.cluster)?)
}

fn cluster(a: ClusterArgs) -> AppResult<()> {
    let scored = read_affinities(&read_text(&a.affinity)?).map_err(|e| match e {
        AppError::Parse { line, message } => AppError::Format(format!("{}:{line}: {message}", a.affinity.display())),
        other => other,
    })?;
    let mut settings = Settings::default();
    settings.cluster.threshold = a.threshold;
    settings.cluster.linkage = Linkage::parse(&a.linkage).ok_or_else(|| AppError::Usage {
        message: format!("unknown linkage {:?}", a.linkage),
    })?;
    settings.validate()?;
    let corpus = match &a.corpus {
        Some(p) => Some(read_corpus(p)?),
        None => None,
    };
    if a.conll_out.is_some() && corpus.is_none() {
        return Err(AppError::Usage {
            message: "--conll-out needs --corpus".into(),
        });
    }
    let mut listing = String::new();
    let mut responses: Vec<Document> = Vec::new();
    for s in &scored {
        let (doc, flags) = match &corpus {
            Some(docs) => {
                let doc = docs
                    .iter()
                    .find(|d| d.doc_key == s.doc_key && d.part == s.part)
                    .ok_or_else(|| AppError::Format(format!("document {} part {} not in corpus", s.doc_key, s.part)))?;
                if doc.mention_count() != s.affinity.len() {
                    return Err(AppError::Format(format!(
                        "{}: affinity file has {} mentions, corpus has {}",
                        s.doc_key,
                        s.affinity.len(),
                        doc.mention_count()
                    )));
                }
                let flags = a.rules.flags();
                (Some(prepare_document(doc, &flags)), flags)
            }
            None => (None, PostprocessFlags::none()),
        };
        let partition = match &doc {
            Some(d) => cluster_document(d, &s.affinity, &settings.cluster, &flags)?,
            None => {
                let dist = triad_coref::core::affinity::to_distances(&s.affinity, &settings.cluster.distances)?;
                triad_coref::core::clustering::cluster(&dist, settings.cluster.linkage, settings.cluster.threshold)?
            }
        };
        listing.push_str(&render_cluster_listing(&s.doc_key, s.part, &partition));
        if let (Some(docs), Some(_)) = (&corpus, &a.conll_out) {
            let original = docs.iter().find(|d| d.doc_key == s.doc_key && d.part == s.part).expect("found above");
            responses.push(with_response(original, &partition));
        }
    }
    emit(None, &listing)?;
    if let Some(p) = &a.conll_out {
        emit(Some(p), &write_conll(&responses)?)?;
    }
    Ok(())
}

fn system_name(kind: &str, flags: &PostprocessFlags) -> String {
    let on: Vec<&str> = [
        (flags.proper_names, "propername"),
        (flags.speaker_substitution, "speaker-sub"),
        (flags.pronoun_fix, "pronoun-fix"),
    ]
    .iter()
    .filter(|(f, _)| *f)
    .map(|(_, n)| *n)
    .collect();
    match on.len() {
        0 => kind.to_string(),
        3 => format!("{kind} + post"),
        _ => format!("{kind} + {}", on.join(",")),
    }
}

fn evaluate_cmd(a: EvaluateArgs) -> AppResult<()> {
    let corpus = read_corpus(&a.corpus)?;
    let flags = a.rules.flags();
    let mut rows = Vec::new();
    let mut details = String::new();
    for (i, path) in a.model.iter().enumerate() {
        let mut bundle = checkpoint::load(path)?;
        if let Some(t) = a.threshold {
            bundle.settings.cluster.threshold = t;
            bundle.settings.validate()?;
        }
        let result = evaluate(&bundle, &corpus, &flags, a.workers)?;
        let kind = bundle.model.kind().name();
        let prefix = if a.model.len() > 1 { format!("{i}.{kind}.") } else { format!("{kind}.") };
        details.push_str(&render_key_values(&prefix, &result.report));
        if a.histogram {
            if i == 0 {
                details.push_str(&render_histogram("key entity sizes", &result.key_sizes));
            }
            details.push_str(&render_histogram(&format!("{kind} response entity sizes"), &result.response_sizes));
        }
        rows.push((system_name(kind, &flags), result.report));
    }
    emit(None, &format!("{}{details}", render_table(&rows)))
}

fn compare_cmd(a: CompareArgs) -> AppResult<()> {
    let (x, y) = a
        .pair
        .split_once(',')
        .and_then(|(x, y)| Some((x.trim().parse::<usize>().ok()?, y.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| AppError::Usage {
            message: format!("--pair expects `a,b`, got {:?}", a.pair),
        })?;
    let dyad = checkpoint::load(&a.dyad)?;
    let triad = checkpoint::load(&a.triad)?;
    let corpus = read_corpus(&a.corpus)?;
    let doc = corpus
        .iter()
        .find(|d| d.doc_key == a.doc && d.part == a.part)
        .ok_or_else(|| AppError::Usage {
            message: format!("document {} part {} not in corpus", a.doc, a.part),
        })?;
    let flags = PostprocessFlags {
        speaker_substitution: !a.no_speaker_sub,
        ..PostprocessFlags::default()
    };
    let doc = prepare_document(doc, &flags);
    let c = compare(&dyad, &triad, &doc, x, y)?;
    emit(None, &render_comparison(&doc, &c))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Score(a) => score(a),
        Command::Cluster(a) => cluster(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
