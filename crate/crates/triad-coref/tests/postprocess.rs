//! Properties of the three rules over generated documents and random
//! affinities.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triad_coref::core::affinity::{to_distances, AffinityMatrix};
use triad_coref::core::document::Document;
use triad_coref::core::postprocess::{
    cluster_affinities, link_same_proper_names, pronoun_fix, pronoun_only_clusters, substitute_speakers, ClusterSettings,
};
use triad_coref::corpus::{generate_synthetic_corpus, SynthConfig};

fn document(seed: u64, rate: f64) -> Document {
    let config = SynthConfig {
        documents: 1,
        entities_per_doc: 4,
        mentions_per_entity: 4,
        pronoun_rate: rate,
        ..SynthConfig::default()
    };
    generate_synthetic_corpus(&config, seed).unwrap().remove(0)
}

/// Affinities that favour pronoun-pronoun pairs, so pronoun-only clusters
/// are common.
fn affinities(doc: &Document, seed: u64) -> AffinityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = doc.mention_count();
    let pronoun = |m: usize| doc.tokens[doc.mentions[m].start].pos.starts_with("PRP");
    let mut aff = AffinityMatrix::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            let v: f64 = rng.gen();
            aff.set(a, b, if pronoun(a) && pronoun(b) { 0.3 + 0.7 * v } else { 0.6 * v });
        }
    }
    aff
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pronoun_fix_never_adds_pronoun_only_clusters(seed in 0u64..10_000, rate in 0.3f64..=1.0, proper in any::<bool>()) {
        let doc = substitute_speakers(&document(seed, rate));
        let aff = affinities(&doc, seed ^ 0xA5);
        let settings = ClusterSettings::default();
        let before = cluster_affinities(&doc, &aff, &settings, proper).unwrap();
        let (after, _) = pronoun_fix(&before, &doc, &aff, &settings, proper).unwrap();
        prop_assert!(pronoun_only_clusters(&after, &doc).len() <= pronoun_only_clusters(&before, &doc).len());
        prop_assert!(after.covers(doc.mention_count()));
    }

    #[test]
    fn pronoun_fix_is_idempotent_on_its_output(seed in 0u64..10_000, rate in 0.3f64..=1.0) {
        let doc = document(seed, rate);
        let aff = affinities(&doc, seed ^ 0x5A);
        let settings = ClusterSettings::default();
        let p0 = cluster_affinities(&doc, &aff, &settings, true).unwrap();
        let (p1, a1) = pronoun_fix(&p0, &doc, &aff, &settings, true).unwrap();
        let (p2, a2) = pronoun_fix(&p1, &doc, &a1, &settings, true).unwrap();
        prop_assert_eq!(p2, p1);
        prop_assert_eq!(a2, a1);
    }

    #[test]
    fn proper_name_rule_is_idempotent(seed in 0u64..10_000) {
        let doc = substitute_speakers(&document(seed, 0.2));
        let dist = to_distances(&affinities(&doc, seed), &ClusterSettings::default().distances).unwrap();
        let once = link_same_proper_names(&doc, &dist);
        prop_assert_eq!(link_same_proper_names(&doc, &once), once.clone());
        for a in 0..doc.mention_count() {
            for b in 0..doc.mention_count() {
                prop_assert!(once.get(a, b) <= dist.get(a, b) || once.get(a, b) == 1.0);
            }
        }
    }

    #[test]
    fn speaker_substitution_is_idempotent_and_keeps_spans(seed in 0u64..10_000, rate in 0.0f64..=1.0) {
        let doc = document(seed, rate);
        let once = substitute_speakers(&doc);
        prop_assert_eq!(substitute_speakers(&once), once.clone());
        prop_assert_eq!(once.tokens.len(), doc.tokens.len());
        prop_assert_eq!(&once.mentions, &doc.mentions);
        for (t, u) in doc.tokens.iter().zip(&once.tokens) {
            if t.surface != u.surface {
                prop_assert!(matches!(t.surface.to_lowercase().as_str(), "i" | "you"));
                prop_assert_eq!(u.speaker.clone(), t.speaker.clone());
            }
        }
    }
}

#[test]
fn pronoun_fix_still_removes_pronoun_only_clusters() {
    let settings = ClusterSettings::default();
    let (mut before_total, mut after_total, mut changed) = (0, 0, 0);
    for seed in 0..200 {
        let doc = document(seed, 0.8);
        let aff = affinities(&doc, seed ^ 0x77);
        let p0 = cluster_affinities(&doc, &aff, &settings, true).unwrap();
        let (p1, _) = pronoun_fix(&p0, &doc, &aff, &settings, true).unwrap();
        before_total += pronoun_only_clusters(&p0, &doc).len();
        after_total += pronoun_only_clusters(&p1, &doc).len();
        changed += usize::from(p1 != p0);
    }
    println!("pronoun-only clusters {before_total} -> {after_total}, {changed} of 200 documents changed");
    assert!(after_total < before_total);
}
