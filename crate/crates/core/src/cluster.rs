//! Average-linkage agglomerative clustering, dendrogram cuts and silhouettes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::DistanceMatrix;

/// One agglomeration step. Leaves have ids `0..k`; the cluster created by
/// merge `i` has id `k + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.labels.len()
    }

    /// Leaves in plotting order: depth-first from the root, left before right.
    pub fn leaf_order(&self) -> Vec<usize> {
        let k = self.n_leaves();
        if self.merges.is_empty() {
            return (0..k).collect();
        }
        let mut order = Vec::with_capacity(k);
        let mut stack = vec![k + self.merges.len() - 1];
        while let Some(id) = stack.pop() {
            if id < k {
                order.push(id);
            } else {
                let m = &self.merges[id - k];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        order
    }
}

/// Unweighted average linkage (UPGMA): repeatedly merge the two clusters whose
/// mean cross-pair distance is smallest. Equal distances are resolved toward
/// the lexicographically smallest `(smaller id, larger id)` pair.
pub fn average_linkage(matrix: &DistanceMatrix) -> Result<Dendrogram> {
    let k = matrix.len();
    if k < 2 {
        return Err(Error::insufficient(format!("need at least 2 items to cluster, got {k}")));
    }
    // Slot-indexed working distances; slot s holds cluster ids[s].
    let mut dist: Vec<f64> = matrix.values().to_vec();
    let mut ids: Vec<usize> = (0..k).collect();
    let mut sizes: Vec<usize> = vec![1; k];
    let mut active: Vec<bool> = vec![true; k];
    let mut merges = Vec::with_capacity(k - 1);
    let mut last_height = 0.0f64;

    for step in 0..k - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..k {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..k {
                if !active[b] {
                    continue;
                }
                let d = dist[a * k + b];
                let key = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                let better = match best {
                    None => true,
                    Some((bd, _, _, lo, hi)) => d < bd || (d == bd && key < (lo, hi)),
                };
                if better {
                    best = Some((d, a, b, key.0, key.1));
                }
            }
        }
        let (d, a, b, lo, hi) = best.expect("two active clusters");
        // Cross-pair means of values >= d cannot fall below d; only rounding can.
        let height = d.max(last_height);
        last_height = height;
        let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
        for c in 0..k {
            if !active[c] || c == a || c == b {
                continue;
            }
            let merged = (na * dist[a * k + c] + nb * dist[b * k + c]) / (na + nb);
            dist[a * k + c] = merged;
            dist[c * k + a] = merged;
        }
        sizes[a] += sizes[b];
        active[b] = false;
        ids[a] = k + step;
        merges.push(Merge {
            left: lo,
            right: hi,
            height,
            size: sizes[a],
        });
    }
    Ok(Dendrogram {
        labels: matrix.labels().to_vec(),
        merges,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Flat clusters from the maximal subtrees whose merge heights are all below
/// `threshold`. Group ids are numbered by first appearance in leaf order.
pub fn cut(dendrogram: &Dendrogram, threshold: f64) -> Vec<usize> {
    let k = dendrogram.n_leaves();
    let mut parent: Vec<usize> = (0..k).collect();
    // Representative leaf of each complete cluster, None once a merge is refused.
    let mut rep: Vec<Option<usize>> = (0..k).map(Some).collect();
    for m in &dendrogram.merges {
        let joined = match (rep[m.left], rep[m.right]) {
            (Some(l), Some(r)) if m.height < threshold => {
                let (rl, rr) = (find(&mut parent, l), find(&mut parent, r));
                parent[rr] = rl;
                Some(rl)
            }
            _ => None,
        };
        rep.push(joined);
    }
    relabel(&(0..k).map(|i| find(&mut parent, i)).collect::<Vec<_>>())
}

/// Renumber arbitrary group keys by first appearance.
fn relabel(keys: &[usize]) -> Vec<usize> {
    let mut seen: Vec<(usize, usize)> = Vec::new();
    keys.iter()
        .map(|&key| match seen.iter().find(|(k, _)| *k == key) {
            Some(&(_, g)) => g,
            None => {
                let g = seen.len();
                seen.push((key, g));
                g
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// Mean distance to the other members of the own cluster (0 for singletons).
    pub a: Vec<f64>,
    /// Smallest mean distance to the members of another cluster.
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    pub mean: f64,
}

/// Silhouette of every item; singletons score 0.
pub fn silhouette(matrix: &DistanceMatrix, labels: &[usize]) -> Result<Silhouette> {
    let k = matrix.len();
    if labels.len() != k {
        return Err(Error::invalid(format!("{} labels for {k} items", labels.len())));
    }
    let n_groups = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; n_groups];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!("group {g} has no members")));
    }
    if n_groups < 2 {
        return Err(Error::insufficient("silhouette needs at least 2 clusters"));
    }
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    let mut s = vec![0.0; k];
    let mut sums = vec![0.0; n_groups];
    for i in 0..k {
        sums.iter_mut().for_each(|v| *v = 0.0);
        for (j, &d) in matrix.row(i).iter().enumerate() {
            if j != i {
                sums[labels[j]] += d;
            }
        }
        let own = labels[i];
        a[i] = if sizes[own] > 1 {
            sums[own] / (sizes[own] - 1) as f64
        } else {
            0.0
        };
        b[i] = (0..n_groups)
            .filter(|&g| g != own)
            .map(|g| sums[g] / sizes[g] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a[i].max(b[i]);
        s[i] = if sizes[own] == 1 || denom == 0.0 {
            0.0
        } else {
            (b[i] - a[i]) / denom
        };
    }
    let mean = s.iter().sum::<f64>() / k as f64;
    Ok(Silhouette { a, b, s, mean })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub threshold: f64,
    pub n_clusters: usize,
    pub silhouette: Silhouette,
}

/// Candidate cut heights: midpoints between consecutive distinct merge
/// heights, then one above the highest merge. Sorted ascending.
pub fn candidate_thresholds(dendrogram: &Dendrogram) -> Vec<f64> {
    let mut heights: Vec<f64> = dendrogram.merges.iter().map(|m| m.height).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let mut out: Vec<f64> = heights.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if let Some(&top) = heights.last() {
        out.push(top + top.abs().max(1.0));
    }
    out
}

/// Cut with the highest mean silhouette over all candidates that give at
/// least two clusters; ties go to the cut with fewer clusters.
pub fn optimal_cut(dendrogram: &Dendrogram, matrix: &DistanceMatrix) -> Result<ClusterAssignment> {
    let k = matrix.len();
    if k < 3 {
        return Err(Error::insufficient(format!("need at least 3 items for an optimal cut, got {k}")));
    }
    if dendrogram.n_leaves() != k {
        return Err(Error::invalid("dendrogram and matrix sizes differ"));
    }
    let mut best: Option<ClusterAssignment> = None;
    // Highest threshold first so that ties keep the coarser cut.
    for threshold in candidate_thresholds(dendrogram).into_iter().rev() {
        let labels = cut(dendrogram, threshold);
        let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
        if n_clusters < 2 {
            continue;
        }
        let sil = silhouette(matrix, &labels)?;
        if best.as_ref().is_none_or(|b| sil.mean > b.silhouette.mean) {
            best = Some(ClusterAssignment {
                labels,
                threshold,
                n_clusters,
                silhouette: sil,
            });
        }
    }
    best.ok_or_else(|| Error::insufficient("no dendrogram cut yields at least 2 clusters"))
}
