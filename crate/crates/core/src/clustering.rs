//! Agglomerative clustering over a distance matrix and the threshold cut.
//!
//! Merges are found with the nearest-neighbour chain, which is exact for
//! reducible linkages (average, single, complete). Cluster distances are
//! updated with the Lance-Williams recurrences.

use alloc::vec;
use alloc::vec::Vec;

use crate::affinity::DistanceMatrix;
use crate::partition::EntityPartition;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// Unweighted average over all cross pairs.
    #[default]
    Average,
    Single,
    Complete,
}

impl Linkage {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "average" => Some(Linkage::Average),
            "single" => Some(Linkage::Single),
            "complete" => Some(Linkage::Complete),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        }
    }

    fn update(self, d_ik: f64, d_jk: f64, size_i: usize, size_j: usize) -> f64 {
        match self {
            Linkage::Average => (size_i as f64 * d_ik + size_j as f64 * d_jk) / (size_i + size_j) as f64,
            Linkage::Single => d_ik.min(d_jk),
            Linkage::Complete => d_ik.max(d_jk),
        }
    }
}

/// One merge. Clusters `0..n` are the points; merge `s` creates cluster `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    points: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn points(&self) -> usize {
        self.points
    }

    /// Merges in nondecreasing distance order.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

/// Builds the full dendrogram. Among equal distances the pair with the
/// lexicographically smallest `(min id, min id)` merges first.
pub fn agglomerate(dist: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut d = dist.data().to_vec();
    let mut size = vec![1usize; n];
    let mut min_id: Vec<usize> = (0..n).collect();
    let mut active = vec![true; n];
    // (representative a, representative b, distance); representatives are
    // point slots reused for merged clusters.
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    for _ in 1..n {
        if chain.is_empty() {
            let start = (0..n).find(|&i| active[i]).expect("at least two active clusters");
            chain.push(start);
        }
        loop {
            let x = *chain.last().expect("chain is non-empty");
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            // Nearest active neighbour of x; prefer the previous chain element
            // on ties so the chain terminates, then the smallest min id.
            let mut best: Option<usize> = prev;
            let mut best_d = prev.map(|p| d[x * n + p]).unwrap_or(f64::INFINITY);
            for y in 0..n {
                if y == x || !active[y] || Some(y) == prev {
                    continue;
                }
                let dy = d[x * n + y];
                let better = match best {
                    None => true,
                    Some(b) => dy < best_d || (dy == best_d && Some(b) != prev && min_id[y] < min_id[b]),
                };
                if better {
                    best = Some(y);
                    best_d = dy;
                }
            }
            let y = best.expect("another active cluster exists");
            if Some(y) == prev {
                chain.pop();
                chain.pop();
                let (a, b) = if min_id[x] < min_id[y] { (x, y) } else { (y, x) };
                raw.push((a, b, best_d));
                // Merge b into a.
                for k in 0..n {
                    if active[k] && k != a && k != b {
                        let v = linkage.update(d[a * n + k], d[b * n + k], size[a], size[b]);
                        d[a * n + k] = v;
                        d[k * n + a] = v;
                    }
                }
                size[a] += size[b];
                min_id[a] = min_id[a].min(min_id[b]);
                active[b] = false;
                break;
            }
            chain.push(y);
        }
    }

    // Stable sort keeps discovery order among equal distances; for reducible
    // linkages this yields a valid sequential order.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&p, &q| raw[p].2.total_cmp(&raw[q].2));

    let mut uf = UnionFind::new(n);
    let mut label: Vec<usize> = (0..n).collect();
    let mut cluster_size = vec![1usize; n];
    let mut merges = Vec::with_capacity(raw.len());
    for (s, &idx) in order.iter().enumerate() {
        let (a, b, distance) = raw[idx];
        let (ra, rb) = (uf.find(a), uf.find(b));
        let (la, lb) = (label[ra], label[rb]);
        let size = cluster_size[ra] + cluster_size[rb];
        let root = uf.union(ra, rb);
        label[root] = n + s;
        cluster_size[root] = size;
        merges.push(Merge {
            left: la.min(lb),
            right: la.max(lb),
            distance,
            size,
        });
    }
    Ok(Dendrogram { points: n, merges })
}

/// Applies every merge with distance `<= threshold`.
pub fn cut(dendrogram: &Dendrogram, threshold: f64) -> EntityPartition {
    let n = dendrogram.points;
    let mut uf = UnionFind::new(n);
    // Representative point of every cluster id.
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &dendrogram.merges {
        let (a, b) = (rep[m.left], rep[m.right]);
        if m.distance <= threshold {
            uf.union(a, b);
        }
        rep.push(a);
    }
    let mut labels = vec![0usize; n];
    for (i, l) in labels.iter_mut().enumerate() {
        *l = uf.find(i);
    }
    EntityPartition::from_labels(&labels)
}

/// Clusters a distance matrix at `threshold`.
pub fn cluster(dist: &DistanceMatrix, linkage: Linkage, threshold: f64) -> Result<EntityPartition> {
    if dist.is_empty() {
        return Ok(EntityPartition::singletons(0));
    }
    Ok(cut(&agglomerate(dist, linkage)?, threshold))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let root = ra.min(rb);
        self.parent[ra.max(rb)] = root;
        root
    }
}
