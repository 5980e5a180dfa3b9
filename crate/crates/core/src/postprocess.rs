//! Rules applied around clustering: proper-name linking, speaker
//! substitution for first and second person pronouns, and the pronoun-only
//! cluster fix. The same rules serve the triad and the dyad pipelines.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::affinity::{override_affinity, to_distances, AffinityMatrix, DistanceConfig, DistanceMatrix};
use crate::clustering::{cluster, Linkage};
use crate::document::{Document, Mention};
use crate::partition::EntityPartition;
use crate::Result;

/// Candidates considered on each side of a pronoun-only cluster's first mention.
pub const PRONOUN_CANDIDATES_PER_SIDE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostprocessFlags {
    pub proper_names: bool,
    pub speaker_substitution: bool,
    pub pronoun_fix: bool,
}

impl Default for PostprocessFlags {
    fn default() -> Self {
        PostprocessFlags {
            proper_names: true,
            speaker_substitution: true,
            pronoun_fix: true,
        }
    }
}

impl PostprocessFlags {
    pub fn none() -> Self {
        PostprocessFlags {
            proper_names: false,
            speaker_substitution: false,
            pronoun_fix: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSettings {
    pub threshold: f64,
    pub linkage: Linkage,
    pub distances: DistanceConfig,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            threshold: 3.5,
            linkage: Linkage::Average,
            distances: DistanceConfig::default(),
        }
    }
}

pub fn is_proper_name(doc: &Document, m: &Mention) -> bool {
    doc.mention_tokens(m).iter().all(|t| t.pos == "NNP" || t.pos == "NNPS")
}

pub fn is_pronoun(doc: &Document, m: &Mention) -> bool {
    m.len() == 1 && matches!(doc.tokens[m.start].pos.as_str(), "PRP" | "PRP$")
}

fn folded_text(doc: &Document, m: &Mention) -> Vec<String> {
    doc.mention_tokens(m).iter().map(|t| t.surface.to_lowercase()).collect()
}

/// Sets distance 1 between proper-name mentions with the same token
/// sequence (case-insensitive), whatever their prior distance.
pub fn link_same_proper_names(doc: &Document, dist: &DistanceMatrix) -> DistanceMatrix {
    let mut out = dist.clone();
    let names: Vec<(usize, Vec<String>)> = doc
        .mentions
        .iter()
        .filter(|m| is_proper_name(doc, m))
        .map(|m| (m.id, folded_text(doc, m)))
        .collect();
    for (x, (a, ta)) in names.iter().enumerate() {
        for (b, tb) in &names[x + 1..] {
            if ta == tb {
                out.set(*a, *b, 1.0);
            }
        }
    }
    out
}

/// Replaces single-token "I" mentions by the token's speaker, and "you" by
/// the other speaker when the document has exactly two. Substituted tokens
/// are tagged NNP so the proper-name rule treats them as names.
pub fn substitute_speakers(doc: &Document) -> Document {
    let speakers: Vec<String> = doc.speakers().into_iter().map(ToString::to_string).collect();
    let mut out = doc.clone();
    for m in &doc.mentions {
        if m.len() != 1 {
            continue;
        }
        let token = &doc.tokens[m.start];
        let Some(speaker) = token.speaker.as_deref().filter(|s| !s.is_empty()) else {
            continue;
        };
        let replacement = match token.surface.to_lowercase().as_str() {
            "i" => Some(speaker.to_string()),
            "you" if speakers.len() == 2 => speakers.iter().find(|s| s.as_str() != speaker).cloned(),
            _ => None,
        };
        if let Some(name) = replacement {
            let t = &mut out.tokens[m.start];
            t.surface = name;
            t.pos = "NNP".to_string();
        }
    }
    out
}

/// Non-singleton clusters made only of pronouns.
pub fn pronoun_only_clusters<'p>(partition: &'p EntityPartition, doc: &Document) -> Vec<&'p [usize]> {
    partition
        .clusters()
        .iter()
        .filter(|c| c.len() > 1 && c.iter().all(|&m| is_pronoun(doc, &doc.mentions[m])))
        .map(|c| c.as_slice())
        .collect()
}

/// Distances, proper-name rule when enabled, then agglomeration and cut.
pub fn cluster_affinities(
    doc: &Document,
    aff: &AffinityMatrix,
    settings: &ClusterSettings,
    proper_names: bool,
) -> Result<EntityPartition> {
    let mut dist = to_distances(aff, &settings.distances)?;
    if proper_names {
        dist = link_same_proper_names(doc, &dist);
    }
    cluster(&dist, settings.linkage, settings.threshold)
}

/// The `(target, antecedent)` pairs whose affinity the pronoun fix raises.
///
/// The target is the first mention of each pronoun-only cluster; the
/// antecedent is the best-scoring of the nearest non-pronoun mentions on
/// either side, ties going to the nearer and then to the earlier.
pub fn pronoun_fix_links(partition: &EntityPartition, doc: &Document, aff: &AffinityMatrix) -> Vec<(usize, usize)> {
    let mut links = Vec::new();
    for c in pronoun_only_clusters(partition, doc) {
        let target = c[0];
        let before = (0..target)
            .rev()
            .filter(|&m| !is_pronoun(doc, &doc.mentions[m]))
            .take(PRONOUN_CANDIDATES_PER_SIDE);
        let after = (target + 1..doc.mention_count())
            .filter(|&m| !is_pronoun(doc, &doc.mentions[m]))
            .take(PRONOUN_CANDIDATES_PER_SIDE);
        let score = |m: usize| if aff.in_window(target, m) { aff.get(target, m) } else { 0.0 };
        let best = before.chain(after).min_by(|&x, &y| {
            score(y)
                .total_cmp(&score(x))
                .then(x.abs_diff(target).cmp(&y.abs_diff(target)))
                .then(x.cmp(&y))
        });
        if let Some(antecedent) = best {
            links.push((target, antecedent));
        }
    }
    links
}

/// One pass of the pronoun-only cluster fix: raise each target's best
/// antecedent affinity to 1 and re-cluster once. See [`pronoun_fix`] for
/// when the input is returned instead.
pub fn resolve_pronoun_only_clusters(
    partition: &EntityPartition,
    doc: &Document,
    aff: &AffinityMatrix,
    settings: &ClusterSettings,
    proper_names: bool,
) -> Result<EntityPartition> {
    Ok(pronoun_fix(partition, doc, aff, settings, proper_names)?.0)
}

/// [`resolve_pronoun_only_clusters`] that also returns the affinities the
/// partition was clustered from: raised where the fix was kept, the input
/// otherwise.
///
/// The re-clustered partition is kept only when it has no more pronoun-only
/// clusters than the input and every pronoun-only cluster it leaves would
/// pick an antecedent link that was already raised. Feeding the output back
/// in therefore returns it unchanged.
pub fn pronoun_fix(
    partition: &EntityPartition,
    doc: &Document,
    aff: &AffinityMatrix,
    settings: &ClusterSettings,
    proper_names: bool,
) -> Result<(EntityPartition, AffinityMatrix)> {
    let links = pronoun_fix_links(partition, doc, aff);
    if links.is_empty() {
        return Ok((partition.clone(), aff.clone()));
    }
    let mut updated = aff.clone();
    for &(a, b) in &links {
        updated = override_affinity(&updated, a, b, 1.0)?;
    }
    let reclustered = cluster_affinities(doc, &updated, settings, proper_names)?;
    let more = pronoun_only_clusters(&reclustered, doc).len() > pronoun_only_clusters(partition, doc).len();
    let unresolved = pronoun_fix_links(&reclustered, doc, &updated)
        .iter()
        .any(|link| !links.contains(link));
    if more || unresolved {
        return Ok((partition.clone(), aff.clone()));
    }
    Ok((reclustered, updated))
}

/// Full clustering path for one document. `doc` should already carry
/// speaker substitutions when that rule is enabled.
pub fn cluster_document(
    doc: &Document,
    aff: &AffinityMatrix,
    settings: &ClusterSettings,
    flags: &PostprocessFlags,
) -> Result<EntityPartition> {
    let partition = cluster_affinities(doc, aff, settings, flags.proper_names)?;
    if flags.pronoun_fix {
        resolve_pronoun_only_clusters(&partition, doc, aff, settings, flags.proper_names)
    } else {
        Ok(partition)
    }
}

/// Drops clusters of size one.
pub fn strip_singletons(partition: &EntityPartition) -> EntityPartition {
    let kept: Vec<Vec<usize>> = partition.clusters().iter().filter(|c| c.len() > 1).cloned().collect();
    EntityPartition::new(kept).expect("subset of a valid partition")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Token;
    use alloc::vec;

    fn doc(words: &[(&str, &str, Option<&str>)], spans: Vec<(usize, usize, Option<i64>)>) -> Document {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, &(w, p, s))| Token {
                surface: w.to_string(),
                pos: p.to_string(),
                speaker: s.map(ToString::to_string),
                sentence_index: 0,
                doc_token_index: i,
            })
            .collect();
        Document::new("t", 0, tokens, spans).unwrap()
    }

    #[test]
    fn proper_names_link_only_full_matches() {
        let d = doc(
            &[
                ("Saddam", "NNP", None),
                ("Hussein", "NNP", None),
                ("saddam", "NNP", None),
                ("hussein", "NNP", None),
                ("Saddam", "NNP", None),
                ("the", "DT", None),
                ("company", "NN", None),
                ("the", "DT", None),
                ("company", "NN", None),
            ],
            vec![(0, 1, None), (2, 3, None), (4, 4, None), (5, 6, None), (7, 8, None)],
        );
        let dist = DistanceMatrix::from_fn(5, |_, _| 3.7);
        let out = link_same_proper_names(&d, &dist);
        assert_eq!(out.get(0, 1), 1.0);
        assert_eq!(out.get(0, 2), 3.7);
        assert_eq!(out.get(3, 4), 3.7);
        assert_eq!(link_same_proper_names(&d, &out), out);
    }

    #[test]
    fn speaker_substitution() {
        let d = doc(
            &[
                ("I", "PRP", Some("Jim_Lehrer")),
                ("I", "PRP", None),
                ("you", "PRP", Some("Jim_Lehrer")),
                ("said", "VBD", Some("Ann")),
            ],
            vec![(0, 0, None), (1, 1, None), (2, 2, None)],
        );
        let s = substitute_speakers(&d);
        assert_eq!(s.tokens[0].surface, "Jim_Lehrer");
        assert_eq!(s.tokens[0].pos, "NNP");
        assert_eq!(s.tokens[1].surface, "I");
        assert_eq!(s.tokens[2].surface, "Ann");
        assert_eq!(s.tokens.len(), d.tokens.len());
        assert_eq!(s.mentions, d.mentions);
        assert_eq!(substitute_speakers(&s), s);
    }

    #[test]
    fn you_with_three_speakers_is_kept() {
        let d = doc(
            &[("you", "PRP", Some("A")), ("x", "NN", Some("B")), ("y", "NN", Some("C"))],
            vec![(0, 0, None)],
        );
        assert_eq!(substitute_speakers(&d).tokens[0].surface, "you");
    }

    #[test]
    fn pronoun_cluster_joins_its_antecedent() {
        let d = doc(
            &[("John", "NNP", None), ("he", "PRP", None), ("he", "PRP", None)],
            vec![(0, 0, Some(1)), (1, 1, Some(1)), (2, 2, Some(1))],
        );
        let mut aff = AffinityMatrix::new(3);
        aff.set(0, 1, 0.2);
        aff.set(0, 2, 0.2);
        aff.set(1, 2, 0.9);
        let settings = ClusterSettings::default();
        let before = cluster_affinities(&d, &aff, &settings, true).unwrap();
        assert_eq!(before.clusters(), &[vec![0], vec![1, 2]]);
        let after = resolve_pronoun_only_clusters(&before, &d, &aff, &settings, true).unwrap();
        assert_eq!(after.clusters(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn pronoun_cluster_without_candidates_is_untouched() {
        let d = doc(&[("he", "PRP", None), ("him", "PRP", None)], vec![(0, 0, None), (1, 1, None)]);
        let mut aff = AffinityMatrix::new(2);
        aff.set(0, 1, 0.9);
        let p = EntityPartition::new(vec![vec![0, 1]]).unwrap();
        let out = resolve_pronoun_only_clusters(&p, &d, &aff, &ClusterSettings::default(), true).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn singleton_stripping() {
        assert!(strip_singletons(&EntityPartition::singletons(4)).is_empty());
        let p = EntityPartition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(strip_singletons(&p), p);
    }
}
