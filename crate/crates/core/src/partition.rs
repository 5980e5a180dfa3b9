//! Partitions of mention ids into entities.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Disjoint, non-empty clusters of mention ids, kept in canonical order:
/// members ascending, clusters ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityPartition {
    clusters: Vec<Vec<usize>>,
}

impl EntityPartition {
    pub fn new(clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::Input("empty cluster in partition".into()));
            }
            for &m in c {
                if !seen.insert(m) {
                    return Err(Error::Input(format!(
                        "mention {m} appears in more than one cluster"
                    )));
                }
            }
        }
        Ok(Self::from_clusters_unchecked(clusters))
    }

    pub(crate) fn from_clusters_unchecked(mut clusters: Vec<Vec<usize>>) -> Self {
        clusters.retain(|c| !c.is_empty());
        for c in clusters.iter_mut() {
            c.sort_unstable();
            c.dedup();
        }
        clusters.sort_by_key(|c| c[0]);
        EntityPartition { clusters }
    }

    /// Every mention `0..n` in its own cluster.
    pub fn singletons(n: usize) -> Self {
        EntityPartition {
            clusters: (0..n).map(|i| alloc::vec![i]).collect(),
        }
    }

    /// Groups mention `i` by `labels[i]`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        Self::from_clusters_unchecked(groups.into_values().collect())
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn mention_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn mentions(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters.iter().flatten().copied()
    }

    /// Map from mention id to cluster index.
    pub fn membership(&self) -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for (ci, c) in self.clusters.iter().enumerate() {
            for &m in c {
                map.insert(m, ci);
            }
        }
        map
    }

    /// True when the clusters cover exactly the mentions `0..n`.
    pub fn covers(&self, n: usize) -> bool {
        self.mention_count() == n && self.mentions().all(|m| m < n)
    }

    pub fn cluster_of(&self, mention: usize) -> Option<&[usize]> {
        self.clusters
            .iter()
            .find(|c| c.binary_search(&mention).is_ok())
            .map(Vec::as_slice)
    }

    /// Whether every cluster of `self` is contained in a cluster of `coarser`.
    pub fn refines(&self, coarser: &EntityPartition) -> bool {
        let owner = coarser.membership();
        self.clusters.iter().all(|c| {
            let first = owner.get(&c[0]);
            first.is_some() && c.iter().all(|m| owner.get(m) == first)
        })
    }
}
