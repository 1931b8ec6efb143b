//! Sequence-constrained complete-link agglomeration, dendrogram cuts, and
//! permutation-test-gated segmentation of ordered point sequences.
//!
//! Only chronologically adjacent clusters may merge, so every cluster at
//! every stage is a contiguous interval and the merge heights are monotone
//! (complete linkage guarantees this). Segmentation runs the same
//! agglomeration but executes a merge only when a permutation test of the
//! mean inter-group distance fails to separate the two sides; refused
//! boundaries become segment boundaries.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};

/// One agglomeration step. Cluster ids follow the usual stepwise convention:
/// leaves are `0..n`, the cluster created by merge `t` is `n + t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Number of leaves in the merged cluster.
    pub size: usize,
    /// First leaf index of the merged interval.
    pub first: usize,
    /// Last leaf index of the merged interval.
    pub last: usize,
    /// The sequence boundary this merge removed (first leaf of the right
    /// part).
    pub boundary: usize,
}

/// A stepwise dendrogram over a contiguous sequence; leaf order is input
/// order and heights are non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Labels for the partition into `k` clusters: contiguous integers in
    /// sequence order, starting at 1.
    pub fn cut_k(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n_leaves {
            return Err(Error::Cluster(format!(
                "cannot cut into {k} clusters with {} leaves",
                self.n_leaves
            )));
        }
        self.labels_after(self.n_leaves - k)
    }

    /// Labels for the partition obtained by applying every merge with height
    /// at most `h`.
    pub fn cut_height(&self, h: f64) -> Result<Vec<usize>> {
        if !(h >= 0.0) {
            return Err(Error::Cluster(format!("cut height {h} must be >= 0")));
        }
        let applied = self.merges.partition_point(|m| m.height <= h);
        self.labels_after(applied)
    }

    fn labels_after(&self, n_merges: usize) -> Result<Vec<usize>> {
        let mut removed = vec![false; self.n_leaves];
        for merge in &self.merges[..n_merges] {
            removed[merge.boundary] = true;
        }
        let mut labels = Vec::with_capacity(self.n_leaves);
        let mut label = 0usize;
        for i in 0..self.n_leaves {
            if i == 0 || !removed[i] {
                label += 1;
            }
            labels.push(label);
        }
        Ok(labels)
    }

    /// Indented text rendering of the merge tree.
    pub fn outline(&self, ids: &[String]) -> String {
        let mut out = String::new();
        let root = if self.merges.is_empty() {
            0
        } else {
            self.n_leaves + self.merges.len() - 1
        };
        self.outline_node(ids, root, 0, &mut out);
        out
    }

    fn outline_node(&self, ids: &[String], id: usize, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        if id < self.n_leaves {
            out.push_str(&ids[id]);
            out.push('\n');
        } else {
            let m = &self.merges[id - self.n_leaves];
            out.push_str(&format!(
                "+ height {:.6} [{}..{}]\n",
                m.height, ids[m.first], ids[m.last]
            ));
            self.outline_node(ids, m.left, depth + 1, out);
            self.outline_node(ids, m.right, depth + 1, out);
        }
    }
}

/// Flat symmetric Euclidean distance matrix over a point list.
struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    fn from_points(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistMatrix { n, data }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dimensions(points: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::Cluster(format!(
                "dimension mismatch: expected {}, found {}",
                first.len(),
                bad.len()
            )));
        }
    }
    Ok(())
}

/// Builds the sequence-constrained complete-link dendrogram of an ordered
/// point list. At each step the adjacent pair with the smallest complete-link
/// distance (maximum pairwise point distance across the two clusters) merges;
/// ties break toward the lowest left index.
pub fn constrained_cluster(points: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Cluster("no points to cluster".into()));
    }
    check_dimensions(points)?;
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    if n == 1 {
        return Ok(Dendrogram {
            n_leaves: 1,
            merges,
        });
    }
    let d = DistMatrix::from_points(points);
    // Complete-link distances between all active cluster pairs; adjacency is
    // positional. Merging clusters takes the elementwise max of their rows.
    let mut cluster_dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| d.get(i, j)).collect())
        .collect();
    let mut clusters: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, i, i)).collect();

    for t in 0..n - 1 {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for b in 0..clusters.len() - 1 {
            let dist = cluster_dist[b][b + 1];
            if dist < best_dist {
                best_dist = dist;
                best = b;
            }
        }
        let (left_id, first, _) = clusters[best];
        let (right_id, boundary, last) = clusters[best + 1];
        debug_assert!(merges.last().is_none_or(|m: &Merge| m.height <= best_dist));
        merges.push(Merge {
            left: left_id,
            right: right_id,
            height: best_dist,
            size: last - first + 1,
            first,
            last,
            boundary,
        });
        for x in 0..clusters.len() {
            let combined = cluster_dist[best][x].max(cluster_dist[best + 1][x]);
            cluster_dist[best][x] = combined;
            cluster_dist[x][best] = combined;
        }
        cluster_dist.remove(best + 1);
        for row in cluster_dist.iter_mut() {
            row.remove(best + 1);
        }
        clusters[best] = (n + t, first, last);
        clusters.remove(best + 1);
    }
    Ok(Dendrogram {
        n_leaves: n,
        merges,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn derive_test_seed(master: u64, counter: u64) -> u64 {
    splitmix64(master ^ splitmix64(counter))
}

fn mean_cross_distance(d: &DistMatrix, group_a: &[usize], group_b: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in group_a {
        for &j in group_b {
            sum += d.get(i, j);
        }
    }
    sum / (group_a.len() * group_b.len()) as f64
}

/// Core of the permutation test over a shared distance matrix. Trials are
/// independent ChaCha streams of the seed, so parallel and sequential
/// execution count exceedances identically.
fn permutation_test_on_matrix(
    d: &DistMatrix,
    group_a: &[usize],
    group_b: &[usize],
    n_perm: usize,
    seed: u64,
) -> f64 {
    let t_obs = mean_cross_distance(d, group_a, group_b);
    let pool: Vec<usize> = group_a.iter().chain(group_b).copied().collect();
    let size_a = group_a.len();
    let exceed: usize = (0..n_perm)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64 + 1);
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            usize::from(mean_cross_distance(d, &shuffled[..size_a], &shuffled[size_a..]) >= t_obs)
        })
        .sum();
    (1 + exceed) as f64 / (n_perm + 1) as f64
}

/// Permutation test of the separation between two point groups.
///
/// The statistic is the mean pairwise Euclidean distance between members of
/// the two groups; `n_perm` random reassignments of the pooled membership
/// (group sizes preserved) give the null distribution, and the add-one
/// estimator `p = (1 + #{T* >= T}) / (n_perm + 1)` keeps p strictly positive.
/// Deterministic for a given seed.
pub fn permutation_merge_test(
    group_a: &[Vec<f64>],
    group_b: &[Vec<f64>],
    n_perm: usize,
    seed: u64,
) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Cluster("both groups must be nonempty".into()));
    }
    if n_perm < 99 {
        return Err(Error::Cluster(format!(
            "n_perm {n_perm} too small; need at least 99"
        )));
    }
    let pooled: Vec<Vec<f64>> = group_a.iter().chain(group_b).cloned().collect();
    check_dimensions(&pooled)?;
    let d = DistMatrix::from_points(&pooled);
    let indices_a: Vec<usize> = (0..group_a.len()).collect();
    let indices_b: Vec<usize> = (group_a.len()..pooled.len()).collect();
    Ok(permutation_test_on_matrix(
        &d, &indices_a, &indices_b, n_perm, seed,
    ))
}

/// A contiguous partition of the unit sequence with the permutation-test
/// p-value recorded at every refused boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Inclusive `(first, last)` unit index ranges, in order.
    pub segments: Vec<(usize, usize)>,
    /// Cut positions: the first unit index of each segment after the first.
    pub boundaries: Vec<usize>,
    /// p-value at each boundary, parallel to `boundaries`; all <= alpha.
    pub boundary_p_values: Vec<f64>,
    pub alpha: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Segmentation {
    /// CSV export: `segment_id,first_id,last_id,size,boundary_p` with the
    /// p-value of the segment's left boundary (empty for the first segment).
    pub fn write_csv<W: Write>(&self, unit_ids: &[String], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map_err = |source: csv::Error| Error::Csv {
            path: "<writer>".into(),
            source,
        };
        w.write_record(["segment_id", "first_id", "last_id", "size", "boundary_p"])
            .map_err(map_err)?;
        for (idx, &(first, last)) in self.segments.iter().enumerate() {
            let p = if idx == 0 {
                String::new()
            } else {
                format!("{}", self.boundary_p_values[idx - 1])
            };
            w.write_record([
                &format!("s{}", idx + 1),
                &unit_ids[first],
                &unit_ids[last],
                &(last - first + 1).to_string(),
                &p,
            ])
            .map_err(map_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Segments an ordered point sequence bottom-up.
///
/// Repeatedly takes the smallest adjacent complete-link merge whose boundary
/// is not currently refused and runs the permutation test on it; the merge
/// executes only when `p > alpha`. A refused boundary is re-tested only after
/// either side changes. Per-test seeds derive from the master seed and a test
/// counter, so the whole procedure is deterministic.
pub fn segment(
    points: &[Vec<f64>],
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<Segmentation> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Cluster(format!("need at least 2 points, got {n}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Cluster(format!("alpha {alpha} must be in [0, 1)")));
    }
    if n_perm < 99 {
        return Err(Error::Cluster(format!(
            "n_perm {n_perm} too small; need at least 99"
        )));
    }
    check_dimensions(points)?;
    let d = DistMatrix::from_points(points);
    let mut cluster_dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| d.get(i, j)).collect())
        .collect();
    let mut clusters: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    // Per-boundary state: None = untested or invalidated, Some(p) = refused.
    let mut refused: Vec<Option<f64>> = vec![None; n - 1];
    let mut test_counter = 0u64;

    loop {
        let mut candidate: Option<usize> = None;
        for b in 0..clusters.len().saturating_sub(1) {
            if refused[b].is_none()
                && candidate.is_none_or(|c| cluster_dist[b][b + 1] < cluster_dist[c][c + 1])
            {
                candidate = Some(b);
            }
        }
        let Some(b) = candidate else { break };
        let members_a: Vec<usize> = (clusters[b].0..=clusters[b].1).collect();
        let members_b: Vec<usize> = (clusters[b + 1].0..=clusters[b + 1].1).collect();
        let p = permutation_test_on_matrix(
            &d,
            &members_a,
            &members_b,
            n_perm,
            derive_test_seed(seed, test_counter),
        );
        test_counter += 1;
        if p > alpha {
            for x in 0..clusters.len() {
                let combined = cluster_dist[b][x].max(cluster_dist[b + 1][x]);
                cluster_dist[b][x] = combined;
                cluster_dist[x][b] = combined;
            }
            cluster_dist.remove(b + 1);
            for row in cluster_dist.iter_mut() {
                row.remove(b + 1);
            }
            clusters[b] = (clusters[b].0, clusters[b + 1].1);
            clusters.remove(b + 1);
            refused.remove(b);
            // both neighbors of the merged cluster changed a side
            if b > 0 {
                refused[b - 1] = None;
            }
            if b < refused.len() {
                refused[b] = None;
            }
        } else {
            refused[b] = Some(p);
        }
    }

    let boundaries: Vec<usize> = clusters.iter().skip(1).map(|&(first, _)| first).collect();
    let boundary_p_values: Vec<f64> = refused.iter().map(|p| p.expect("tested")).collect();
    Ok(Segmentation {
        segments: clusters,
        boundaries,
        boundary_p_values,
        alpha,
        n_permutations: n_perm,
        seed,
    })
}

/// Removes singleton segments, re-aggregates counts by the remaining
/// segments, and drops words that lose all support.
///
/// The returned segmentation keeps the original unit index ranges of the
/// retained segments (with each retained internal boundary carrying its
/// original p-value); the returned table has one row per retained segment.
pub fn drop_singleton_segments(
    seg: &Segmentation,
    table: &ContingencyTable,
) -> Result<(Segmentation, ContingencyTable)> {
    let n = table.n_rows();
    let covers = !seg.segments.is_empty()
        && seg.segments[0].0 == 0
        && seg.segments.last().unwrap().1 == n - 1
        && seg.segments.windows(2).all(|w| w[1].0 == w[0].1 + 1);
    if !covers {
        return Err(Error::Cluster(format!(
            "segmentation does not cover the table's {n} rows"
        )));
    }
    let retained: Vec<(usize, (usize, usize))> = seg
        .segments
        .iter()
        .enumerate()
        .filter(|(_, &(first, last))| last > first)
        .map(|(idx, &range)| (idx, range))
        .collect();
    if retained.is_empty() {
        return Err(Error::Cluster(
            "all segments are singletons; nothing left to aggregate".into(),
        ));
    }
    let groups: Vec<(String, usize, usize)> = retained
        .iter()
        .map(|(idx, (first, last))| (format!("s{}", idx + 1), *first, *last))
        .collect();
    let aggregated = table.aggregate_rows(&groups)?;

    let mut boundaries = Vec::new();
    let mut boundary_p_values = Vec::new();
    for pair in retained.windows(2) {
        let start_of_right = pair[1].1 .0;
        let pos = seg
            .boundaries
            .binary_search(&start_of_right)
            .expect("retained segment start is an original boundary");
        boundaries.push(start_of_right);
        boundary_p_values.push(seg.boundary_p_values[pos]);
    }
    let filtered = Segmentation {
        segments: retained.into_iter().map(|(_, range)| range).collect(),
        boundaries,
        boundary_p_values,
        alpha: seg.alpha,
        n_permutations: seg.n_permutations,
        seed: seg.seed,
    };
    Ok((filtered, aggregated))
}
