//! MUC, B-cubed and CEAF-φ4 scores, their average, mention recall, and the
//! entity-size histogram.
//!
//! Scores are computed from additive counts so that corpus-level results sum
//! numerators and denominators over documents. Mentions present on only one
//! side follow the reference scorer: for MUC they split a cluster as their
//! own partitions, for B-cubed they contribute no overlap, and for CEAF they
//! are simply absent from the other side's entities.

mod hungarian;

pub use hungarian::max_weight_assignment;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::partition::EntityPartition;
use crate::postprocess::strip_singletons;

/// Additive numerators and denominators for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricCounts {
    pub recall_num: f64,
    pub recall_den: f64,
    pub precision_num: f64,
    pub precision_den: f64,
}

impl MetricCounts {
    pub fn add(&mut self, other: &MetricCounts) {
        self.recall_num += other.recall_num;
        self.recall_den += other.recall_den;
        self.precision_num += other.precision_num;
        self.precision_den += other.precision_den;
    }

    pub fn score(&self) -> MetricScore {
        let ratio = |n: f64, d: f64| if d > 0.0 { n / d } else { 0.0 };
        MetricScore::new(
            ratio(self.precision_num, self.precision_den),
            ratio(self.recall_num, self.recall_den),
        )
        .with_defined(self.precision_den > 0.0 && self.recall_den > 0.0)
    }
}

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when either side was empty and the zeros are a convention.
    pub defined: bool,
}

impl MetricScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricScore {
            precision,
            recall,
            f1,
            defined: true,
        }
    }

    fn with_defined(mut self, defined: bool) -> Self {
        self.defined = defined;
        self
    }
}

fn muc_side(a: &EntityPartition, b: &EntityPartition) -> (f64, f64) {
    let membership = b.membership();
    let mut num = 0.0;
    let mut den = 0.0;
    for cluster in a.clusters() {
        let mut parts: Vec<usize> = Vec::new();
        let mut twinless = 0usize;
        for m in cluster {
            match membership.get(m) {
                Some(&c) => {
                    if !parts.contains(&c) {
                        parts.push(c);
                    }
                }
                None => twinless += 1,
            }
        }
        num += (cluster.len() - parts.len() - twinless) as f64;
        den += (cluster.len() - 1) as f64;
    }
    (num, den)
}

pub fn muc_counts(key: &EntityPartition, response: &EntityPartition) -> MetricCounts {
    let (recall_num, recall_den) = muc_side(key, response);
    let (precision_num, precision_den) = muc_side(response, key);
    MetricCounts {
        recall_num,
        recall_den,
        precision_num,
        precision_den,
    }
}

fn overlap_sizes(a: &EntityPartition, b: &EntityPartition) -> Vec<BTreeMap<usize, usize>> {
    let membership = b.membership();
    a.clusters()
        .iter()
        .map(|cluster| {
            let mut counts = BTreeMap::new();
            for m in cluster {
                if let Some(&c) = membership.get(m) {
                    *counts.entry(c).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect()
}

fn b_cubed_side(a: &EntityPartition, b: &EntityPartition) -> (f64, f64) {
    let mut num = 0.0;
    for (cluster, overlaps) in a.clusters().iter().zip(overlap_sizes(a, b)) {
        let squares: usize = overlaps.values().map(|&o| o * o).sum();
        num += squares as f64 / cluster.len() as f64;
    }
    (num, a.mention_count() as f64)
}

pub fn b_cubed_counts(key: &EntityPartition, response: &EntityPartition) -> MetricCounts {
    let (recall_num, recall_den) = b_cubed_side(key, response);
    let (precision_num, precision_den) = b_cubed_side(response, key);
    MetricCounts {
        recall_num,
        recall_den,
        precision_num,
        precision_den,
    }
}

/// `2 |K ∩ R| / (|K| + |R|)` for every key/response entity pair.
pub fn phi4_matrix(key: &EntityPartition, response: &EntityPartition) -> Vec<Vec<f64>> {
    let overlaps = overlap_sizes(key, response);
    key.clusters()
        .iter()
        .zip(overlaps)
        .map(|(k, o)| {
            response
                .clusters()
                .iter()
                .enumerate()
                .map(|(j, r)| 2.0 * *o.get(&j).unwrap_or(&0) as f64 / (k.len() + r.len()) as f64)
                .collect()
        })
        .collect()
}

pub fn ceaf_phi4_counts(key: &EntityPartition, response: &EntityPartition) -> MetricCounts {
    let (_, best) = max_weight_assignment(&phi4_matrix(key, response));
    MetricCounts {
        recall_num: best,
        recall_den: key.len() as f64,
        precision_num: best,
        precision_den: response.len() as f64,
    }
}

pub fn muc(key: &EntityPartition, response: &EntityPartition) -> MetricScore {
    muc_counts(key, response).score()
}

pub fn b_cubed(key: &EntityPartition, response: &EntityPartition) -> MetricScore {
    b_cubed_counts(key, response).score()
}

pub fn ceaf_phi4(key: &EntityPartition, response: &EntityPartition) -> MetricScore {
    ceaf_phi4_counts(key, response).score()
}

/// Scores in percent, as printed in result tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub muc: MetricScore,
    pub b_cubed: MetricScore,
    pub ceaf_phi4: MetricScore,
    pub average_f1: f64,
    pub mention_recall: f64,
}

impl MetricReport {
    const HEADER: &'static str = "MUC Rec.  MUC Prec.  MUC F1  B3 Rec.  B3 Prec.  B3 F1  CEAF Rec.  CEAF Prec.  CEAF F1  Avg. F1  Men. Rec.";

    pub fn table_header() -> &'static str {
        Self::HEADER
    }

    /// One row in the column order of [`MetricReport::table_header`].
    pub fn table_row(&self) -> String {
        let s = [&self.muc, &self.b_cubed, &self.ceaf_phi4];
        let mut row = String::new();
        for m in s {
            row.push_str(&format!("{:.2} {:.2} {:.2} ", m.recall, m.precision, m.f1));
        }
        row.push_str(&format!("{:.2} {:.2}", self.average_f1, self.mention_recall));
        row
    }

    pub fn key_values(&self, prefix: &str) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, m) in [("muc", &self.muc), ("bcub", &self.b_cubed), ("ceafe", &self.ceaf_phi4)] {
            out.push((format!("{prefix}{name}_recall"), format!("{:.2}", m.recall)));
            out.push((format!("{prefix}{name}_precision"), format!("{:.2}", m.precision)));
            out.push((format!("{prefix}{name}_f1"), format!("{:.2}", m.f1)));
        }
        out.push((format!("{prefix}avg_f1"), format!("{:.2}", self.average_f1)));
        out.push((format!("{prefix}mention_recall"), format!("{:.2}", self.mention_recall)));
        out
    }
}

/// Sums counts over documents; the response is stripped of singletons first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricAccumulator {
    pub muc: MetricCounts,
    pub b_cubed: MetricCounts,
    pub ceaf_phi4: MetricCounts,
    pub key_mentions: usize,
    pub found_mentions: usize,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: &EntityPartition, response: &EntityPartition) {
        let response = strip_singletons(response);
        self.muc.add(&muc_counts(key, &response));
        self.b_cubed.add(&b_cubed_counts(key, &response));
        self.ceaf_phi4.add(&ceaf_phi4_counts(key, &response));
        let found = response.membership();
        self.key_mentions += key.mention_count();
        self.found_mentions += key.mentions().filter(|m| found.contains_key(m)).count();
    }

    pub fn report(&self) -> MetricReport {
        let percent = |s: MetricScore| MetricScore {
            precision: 100.0 * s.precision,
            recall: 100.0 * s.recall,
            f1: 100.0 * s.f1,
            defined: s.defined,
        };
        let muc = percent(self.muc.score());
        let b_cubed = percent(self.b_cubed.score());
        let ceaf_phi4 = percent(self.ceaf_phi4.score());
        let mention_recall = if self.key_mentions > 0 {
            100.0 * self.found_mentions as f64 / self.key_mentions as f64
        } else {
            0.0
        };
        MetricReport {
            muc,
            b_cubed,
            ceaf_phi4,
            average_f1: (muc.f1 + b_cubed.f1 + ceaf_phi4.f1) / 3.0,
            mention_recall,
        }
    }
}

/// Single-document report.
pub fn report(key: &EntityPartition, response: &EntityPartition) -> MetricReport {
    let mut acc = MetricAccumulator::new();
    acc.add(key, response);
    acc.report()
}

/// Number of clusters of each size, singletons included.
pub fn entity_size_histogram(partition: &EntityPartition) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for c in partition.clusters() {
        *hist.entry(c.len()).or_insert(0) += 1;
    }
    hist
}
