//! Scoring, clustering and evaluation of whole corpora, plus the text
//! formats the command line reads and writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use triad_coref_core::affinity::{aggregate, pair_affinity, to_distances, AffinityMatrix, PairScorer, TriadScorer};
use triad_coref_core::document::Document;
use triad_coref_core::metrics::{entity_size_histogram, MetricAccumulator, MetricReport};
use triad_coref_core::model::{DocumentScorer, ModelKind};
use triad_coref_core::partition::EntityPartition;
use triad_coref_core::polyads::enumerate_eval_triads;
use triad_coref_core::postprocess::{cluster_document, substitute_speakers, ClusterSettings, PostprocessFlags};

use crate::training::ModelBundle;
use crate::{AppError, AppResult};

/// Applies `f` to every item on up to `workers` threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> AppResult<R> + Sync,
) -> AppResult<Vec<R>> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<AppResult<R>>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    (w..items.len())
                        .step_by(workers)
                        .map(|i| (i, f(&items[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every index visited")).collect()
}

/// The document as the model sees it: speaker substitution applied when enabled.
pub fn prepare_document(doc: &Document, flags: &PostprocessFlags) -> Document {
    if flags.speaker_substitution {
        substitute_speakers(doc)
    } else {
        doc.clone()
    }
}

/// Pairwise affinities for one (prepared) document.
pub fn score_document(bundle: &ModelBundle, doc: &Document) -> AppResult<AffinityMatrix> {
    let spec = bundle.settings.train.polyad_spec();
    let scorer = DocumentScorer::new(&bundle.model, bundle.encoder(), doc);
    let n = doc.mention_count();
    Ok(match bundle.model.kind() {
        ModelKind::Triad => aggregate(n, &scorer, &spec, bundle.settings.aggregation)?,
        ModelKind::Dyad => pair_affinity(n, &scorer, &spec)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    /// Per document, singletons kept.
    pub responses: Vec<EntityPartition>,
    pub response_sizes: BTreeMap<usize, usize>,
    pub key_sizes: BTreeMap<usize, usize>,
}

/// Full pipeline over a corpus with a caller-supplied scorer. Metrics are
/// summed over documents before the ratios are taken.
pub fn evaluate_with(
    docs: &[Document],
    cluster: &ClusterSettings,
    flags: &PostprocessFlags,
    workers: usize,
    score: impl Fn(&Document) -> AppResult<AffinityMatrix> + Sync,
) -> AppResult<Evaluation> {
    let responses = parallel_map(docs, workers, |doc| {
        let prepared = prepare_document(doc, flags);
        let aff = score(&prepared)?;
        Ok(cluster_document(&prepared, &aff, cluster, flags)?)
    })?;
    let mut acc = MetricAccumulator::new();
    let mut response_sizes = BTreeMap::new();
    let mut key_sizes = BTreeMap::new();
    for (doc, response) in docs.iter().zip(&responses) {
        let key = doc.gold_partition();
        acc.add(&key, response);
        for (size, count) in entity_size_histogram(response) {
            *response_sizes.entry(size).or_insert(0) += count;
        }
        for (size, count) in entity_size_histogram(&key) {
            *key_sizes.entry(size).or_insert(0) += count;
        }
    }
    Ok(Evaluation {
        report: acc.report(),
        responses,
        response_sizes,
        key_sizes,
    })
}

pub fn evaluate(bundle: &ModelBundle, docs: &[Document], flags: &PostprocessFlags, workers: usize) -> AppResult<Evaluation> {
    evaluate_with(docs, &bundle.settings.cluster, flags, workers, |d| score_document(bundle, d))
}

const COLUMNS: [&str; 11] = [
    "MUC-R", "MUC-P", "MUC-F1", "B3-R", "B3-P", "B3-F1", "CEAF-R", "CEAF-P", "CEAF-F1", "Avg-F1", "MenRec",
];

/// Result table: one row per named system, columns as in [`COLUMNS`].
pub fn render_table(rows: &[(String, MetricReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("system".len());
    let mut out = format!("{:<width$}", "system");
    for c in COLUMNS {
        write!(out, " {c:>8}").expect("string write");
    }
    out.push('\n');
    for (name, r) in rows {
        write!(out, "{name:<width$}").expect("string write");
        let values = [
            r.muc.recall,
            r.muc.precision,
            r.muc.f1,
            r.b_cubed.recall,
            r.b_cubed.precision,
            r.b_cubed.f1,
            r.ceaf_phi4.recall,
            r.ceaf_phi4.precision,
            r.ceaf_phi4.f1,
            r.average_f1,
            r.mention_recall,
        ];
        for v in values {
            write!(out, " {v:>8.2}").expect("string write");
        }
        out.push('\n');
    }
    out
}

pub fn render_key_values(prefix: &str, report: &MetricReport) -> String {
    report
        .key_values(prefix)
        .into_iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
}

/// Size, count and a bar whose length grows with log10 of the count.
pub fn render_histogram(title: &str, hist: &BTreeMap<usize, usize>) -> String {
    let mut out = format!("{title}\nsize count\n");
    for (&size, &count) in hist {
        let bar = 1 + (10.0 * (count as f64).log10()).round() as usize;
        writeln!(out, "{size:>4} {count:>5} {}", "#".repeat(bar)).expect("string write");
    }
    out
}

/// Scored documents as text: a `doc <key> <part> <n>` line, then one
/// `i j phi d` line per in-window pair. Values print in shortest
/// round-trip form.
pub fn write_affinities(entries: &[(&Document, &AffinityMatrix)], cluster: &ClusterSettings) -> AppResult<String> {
    let mut out = String::new();
    for (doc, aff) in entries {
        let dist = to_distances(aff, &cluster.distances)?;
        writeln!(out, "doc {} {} {}", doc.doc_key, doc.part, aff.len()).expect("string write");
        for (a, b) in aff.window_pairs() {
            writeln!(out, "{a} {b} {} {}", aff.get(a, b), dist.get(a, b)).expect("string write");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub doc_key: String,
    pub part: u32,
    pub affinity: AffinityMatrix,
}

pub fn read_affinities(text: &str) -> AppResult<Vec<ScoredDocument>> {
    let mut out: Vec<ScoredDocument> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |m: &str| AppError::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["doc", key, part, n] => out.push(ScoredDocument {
                doc_key: key.to_string(),
                part: part.parse().map_err(|_| err("bad part number"))?,
                affinity: AffinityMatrix::new(n.parse().map_err(|_| err("bad mention count"))?),
            }),
            [a, b, phi, _d] => {
                let doc = out.last_mut().ok_or_else(|| err("pair line before any doc line"))?;
                let a: usize = a.parse().map_err(|_| err("bad mention id"))?;
                let b: usize = b.parse().map_err(|_| err("bad mention id"))?;
                let phi: f64 = phi.parse().map_err(|_| err("bad affinity"))?;
                let n = doc.affinity.len();
                if a >= n || b >= n || a == b {
                    return Err(err("mention id out of range"));
                }
                if !(0.0..=1.0).contains(&phi) {
                    return Err(err("affinity outside [0, 1]"));
                }
                doc.affinity.set(a, b, phi);
            }
            _ => return Err(err("expected `doc <key> <part> <n>` or `i j phi d`")),
        }
    }
    Ok(out)
}

/// One line per document: `{"doc": key, "part": p, "clusters": [[..], ..]}`.
pub fn render_cluster_listing(key: &str, part: u32, partition: &EntityPartition) -> String {
    let clusters: Vec<String> = partition
        .clusters()
        .iter()
        .map(|c| format!("[{}]", c.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("{{\"doc\": {key:?}, \"part\": {part}, \"clusters\": [{}]}}\n", clusters.join(", "))
}

/// A copy of `doc` whose mention entity ids are the response cluster indices.
pub fn with_response(doc: &Document, partition: &EntityPartition) -> Document {
    let mut out = doc.clone();
    let membership = partition.membership();
    for m in &mut out.mentions {
        m.entity_id = membership.get(&m.id).map(|&c| c as i64);
    }
    out
}

/// Affinity of one pair under a dyad and a triad model, with the triad slot
/// value obtained from each third member.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pair: (usize, usize),
    pub dyad: f64,
    pub triad: f64,
    /// `(third member, slot value)`, highest first.
    pub thirds: Vec<(usize, f64)>,
}

fn slot_of(sorted: [usize; 3], a: usize, b: usize) -> usize {
    let (lo, hi) = (a.min(b), a.max(b));
    match (sorted.iter().position(|&x| x == lo), sorted.iter().position(|&x| x == hi)) {
        (Some(0), Some(1)) => 0,
        (Some(1), Some(2)) => 1,
        _ => 2,
    }
}

pub fn compare(dyad: &ModelBundle, triad: &ModelBundle, doc: &Document, a: usize, b: usize) -> AppResult<Comparison> {
    if dyad.model.kind() != ModelKind::Dyad || triad.model.kind() != ModelKind::Triad {
        return Err(AppError::Usage {
            message: "compare needs a dyad model and a triad model".into(),
        });
    }
    let n = doc.mention_count();
    if a == b || a >= n || b >= n {
        return Err(AppError::Usage {
            message: format!("pair ({a}, {b}) is not a pair of distinct mentions of {} (n = {n})", doc.doc_key),
        });
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let dyad_score = DocumentScorer::new(&dyad.model, dyad.encoder(), doc).score_pairs(&[[lo, hi]])?[0];
    let spec = triad.settings.train.polyad_spec();
    let triads = enumerate_eval_triads(n, lo, hi, &spec)?;
    let ordered: Vec<[usize; 3]> = triads
        .iter()
        .map(|t| {
            let mut s = *t;
            s.sort_unstable();
            s
        })
        .collect();
    let scorer = DocumentScorer::new(&triad.model, triad.encoder(), doc);
    let outputs = scorer.score_triads(&ordered)?;
    let mut thirds: Vec<(usize, f64)> = triads
        .iter()
        .zip(&ordered)
        .zip(&outputs)
        .map(|((t, s), y)| (t[2], y[slot_of(*s, lo, hi)]))
        .collect();
    thirds.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let triad_score = score_document(triad, doc)?.get(lo, hi);
    Ok(Comparison {
        pair: (lo, hi),
        dyad: dyad_score,
        triad: triad_score,
        thirds,
    })
}

pub fn render_comparison(doc: &Document, c: &Comparison) -> String {
    let text = |m: usize| doc.mention_text(&doc.mentions[m]).join(" ");
    let mut out = format!(
        "pair {} {} ({:?}, {:?})\ndyad affinity  {:.3}\ntriad affinity {:.3}\nthird member slot values:\n",
        c.pair.0,
        c.pair.1,
        text(c.pair.0),
        text(c.pair.1),
        c.dyad,
        c.triad
    );
    for &(m, v) in &c.thirds {
        writeln!(out, "{m:>5} {v:.3} {:?}", text(m)).expect("string write");
    }
    out
}
