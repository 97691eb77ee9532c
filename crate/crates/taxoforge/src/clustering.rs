//! Hierarchical density-based clustering: core distances, the minimum
//! spanning tree under mutual reachability, the condensed cluster hierarchy,
//! excess-of-mass cluster extraction with membership probabilities, and
//! per-cluster representative selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduction::euclidean;

/// Label for points assigned to no cluster.
pub const NOISE: i32 = -1;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("min_samples = {min_samples} must be < n = {n} and >= 1")]
    BadMinSamples { min_samples: usize, n: usize },
    #[error("min_cluster_size = {0} must be >= 2")]
    BadMinClusterSize(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub cluster_id: i32,
    pub size: usize,
    pub stability: f64,
    /// Up to k member point indices, by descending membership probability,
    /// ties broken by ascending point id.
    pub representatives: Vec<usize>,
}

/// Full clustering output: per-point labels and probabilities plus
/// per-cluster summaries. Cluster ids are dense from 0; noise is -1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub labels: Vec<i32>,
    pub probabilities: Vec<f64>,
    pub clusters: Vec<ClusterInfo>,
    pub params: ClusterParams,
}

impl ClusterModel {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn members(&self, cluster_id: i32) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster_id)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances(points: &[Vec<f64>], min_samples: usize) -> Result<Vec<f64>, ClusterError> {
    let n = points.len();
    if min_samples == 0 || min_samples >= n {
        return Err(ClusterError::BadMinSamples { min_samples, n });
    }
    let mut cores = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let mut dists: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| euclidean(p, q))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        cores.push(dists[min_samples - 1]);
    }
    Ok(cores)
}

/// One edge of the mutual-reachability minimum spanning tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn mreach(points: &[Vec<f64>], core: &[f64], a: usize, b: usize) -> f64 {
    euclidean(&points[a], &points[b]).max(core[a]).max(core[b])
}

/// Edge ordering key: weight first, then (min id, max id) lexicographic.
/// The total order makes the MST unique, so runs are bit-reproducible and
/// Prim here agrees with a Kruskal oracle edge-for-edge.
fn edge_key(weight: f64, a: usize, b: usize) -> (f64, usize, usize) {
    (weight, a.min(b), a.max(b))
}

fn key_less(x: (f64, usize, usize), y: (f64, usize, usize)) -> bool {
    x.0 < y.0 || (x.0 == y.0 && (x.1, x.2) < (y.1, y.2))
}

/// Prim's algorithm over the complete mutual-reachability graph, never
/// materializing the full edge set.
pub fn mutual_reachability_mst(points: &[Vec<f64>], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best_weight = vec![f64::INFINITY; n];
    let mut best_from = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut latest = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = mreach(points, core, latest, v);
            if best_from[v] == usize::MAX
                || key_less(edge_key(w, latest, v), edge_key(best_weight[v], best_from[v], v))
            {
                best_weight[v] = w;
                best_from[v] = latest;
            }
        }
        let mut pick = usize::MAX;
        for v in 0..n {
            if in_tree[v] || best_from[v] == usize::MAX {
                continue;
            }
            if pick == usize::MAX
                || key_less(
                    edge_key(best_weight[v], best_from[v], v),
                    edge_key(best_weight[pick], best_from[pick], pick),
                )
            {
                pick = v;
            }
        }
        edges.push(MstEdge {
            a: best_from[pick],
            b: pick,
            weight: best_weight[pick],
        });
        in_tree[pick] = true;
        latest = pick;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    /// dendrogram node currently representing each set
    node: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            node: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

struct DendroNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

/// Single-linkage dendrogram from MST edges processed in ascending
/// (weight, min id, max id) order. Internal node i represents merge i and
/// has id n + i.
fn single_linkage(n: usize, mst: &[MstEdge]) -> Vec<DendroNode> {
    let mut edges: Vec<&MstEdge> = mst.iter().collect();
    edges.sort_by(|x, y| {
        edge_key(x.weight, x.a, x.b)
            .partial_cmp(&edge_key(y.weight, y.a, y.b))
            .expect("finite weights")
    });
    let mut uf = UnionFind::new(n);
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    for edge in edges {
        let ra = uf.find(edge.a);
        let rb = uf.find(edge.b);
        debug_assert_ne!(ra, rb, "MST edges never close a cycle");
        let node_id = n + nodes.len();
        nodes.push(DendroNode {
            left: uf.node[ra],
            right: uf.node[rb],
            distance: edge.weight,
            size: uf.size[ra] + uf.size[rb],
        });
        // union by attaching rb under ra
        uf.parent[rb] = ra;
        uf.size[ra] += uf.size[rb];
        uf.node[ra] = node_id;
    }
    nodes
}

/// One row of the condensed hierarchy. `child < n` means a point exiting its
/// parent cluster at `lambda`; otherwise a child cluster born at `lambda`.
#[derive(Debug, Clone)]
pub struct CondensedRow {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub size: usize,
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Collapse the dendrogram: splits survive only when both sides have at
/// least `min_cluster_size` points, otherwise points fall out at
/// `lambda = 1/distance`.
fn condense(n: usize, dendro: &[DendroNode], min_cluster_size: usize) -> Vec<CondensedRow> {
    if dendro.is_empty() {
        return Vec::new();
    }
    let root = n + dendro.len() - 1;
    let mut rows = Vec::new();
    let mut next_cluster = n + 1;
    // (dendrogram node, condensed cluster id it belongs to)
    let mut stack = vec![(root, n)];
    while let Some((node_id, cluster)) = stack.pop() {
        let node = &dendro[node_id - n];
        let lambda = lambda_of(node.distance);
        let side_size = |child: usize| -> usize {
            if child < n {
                1
            } else {
                dendro[child - n].size
            }
        };
        let left_size = side_size(node.left);
        let right_size = side_size(node.right);
        let left_big = left_size >= min_cluster_size;
        let right_big = right_size >= min_cluster_size;
        match (left_big, right_big) {
            (true, true) => {
                for (child, size) in [(node.left, left_size), (node.right, right_size)] {
                    let id = next_cluster;
                    next_cluster += 1;
                    rows.push(CondensedRow {
                        parent: cluster,
                        child: id,
                        lambda,
                        size,
                    });
                    stack.push((child, id));
                }
            }
            (false, false) => {
                for child in [node.left, node.right] {
                    for leaf in leaves_under(n, dendro, child) {
                        rows.push(CondensedRow {
                            parent: cluster,
                            child: leaf,
                            lambda,
                            size: 1,
                        });
                    }
                }
            }
            (true, false) | (false, true) => {
                let (big, small) = if left_big {
                    (node.left, node.right)
                } else {
                    (node.right, node.left)
                };
                for leaf in leaves_under(n, dendro, small) {
                    rows.push(CondensedRow {
                        parent: cluster,
                        child: leaf,
                        lambda,
                        size: 1,
                    });
                }
                debug_assert!(big >= n, "a surviving side has >= min_cluster_size >= 2 points");
                stack.push((big, cluster));
            }
        }
    }
    rows
}

fn leaves_under(n: usize, dendro: &[DendroNode], node: usize) -> Vec<usize> {
    let mut leaves = Vec::new();
    let mut stack = vec![node];
    while let Some(id) = stack.pop() {
        if id < n {
            leaves.push(id);
        } else {
            let node = &dendro[id - n];
            stack.push(node.right);
            stack.push(node.left);
        }
    }
    leaves.sort_unstable();
    leaves
}

/// Condense the hierarchy and extract clusters by excess-of-mass stability.
pub fn condense_and_extract(
    n: usize,
    mst: &[MstEdge],
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<ClusterModel, ClusterError> {
    if min_cluster_size < 2 {
        return Err(ClusterError::BadMinClusterSize(min_cluster_size));
    }
    let params = ClusterParams {
        min_cluster_size,
        min_samples,
    };
    if n == 0 || mst.len() + 1 != n {
        return Ok(ClusterModel {
            labels: vec![NOISE; n],
            probabilities: vec![0.0; n],
            clusters: Vec::new(),
            params,
        });
    }
    let dendro = single_linkage(n, mst);
    let rows = condense(n, &dendro, min_cluster_size);
    let max_cluster = rows
        .iter()
        .flat_map(|r| [r.parent, r.child])
        .filter(|&id| id >= n)
        .max()
        .unwrap_or(n);

    // birth lambda per cluster: the lambda of the row where it is the child
    let mut birth = vec![0.0f64; max_cluster - n + 1];
    for row in &rows {
        if row.child >= n {
            birth[row.child - n] = row.lambda;
        }
    }
    // excess-of-mass stability
    let mut stability = vec![0.0f64; max_cluster - n + 1];
    for row in &rows {
        stability[row.parent - n] += (row.lambda - birth[row.parent - n]) * row.size as f64;
    }

    // bottom-up selection; the root cluster (id n) is never selectable
    let mut selected = vec![false; max_cluster - n + 1];
    let mut subtree_stability = stability.clone();
    let mut child_clusters: Vec<Vec<usize>> = vec![Vec::new(); max_cluster - n + 1];
    for row in &rows {
        if row.child >= n {
            child_clusters[row.parent - n].push(row.child);
        }
    }
    for id in (n + 1..=max_cluster).rev() {
        let child_sum: f64 = child_clusters[id - n]
            .iter()
            .map(|c| subtree_stability[c - n])
            .sum();
        if stability[id - n] > child_sum {
            selected[id - n] = true;
            // deselect all descendants
            let mut stack = child_clusters[id - n].clone();
            while let Some(d) = stack.pop() {
                selected[d - n] = false;
                stack.extend(child_clusters[d - n].iter().copied());
            }
        } else {
            subtree_stability[id - n] = child_sum;
        }
    }

    let mut chosen: Vec<usize> = (n + 1..=max_cluster).filter(|&id| selected[id - n]).collect();
    chosen.sort_unstable();

    // per-point rows for lambda lookup
    let mut point_lambda = vec![0.0f64; n];
    let mut point_parent = vec![usize::MAX; n];
    for row in &rows {
        if row.child < n {
            point_lambda[row.child] = row.lambda;
            point_parent[row.child] = row.parent;
        }
    }
    // map each condensed cluster to its selected ancestor (if any)
    let mut owner = vec![None::<usize>; max_cluster - n + 1];
    for (slot, &cluster) in chosen.iter().enumerate() {
        owner[cluster - n] = Some(slot);
        let mut stack = child_clusters[cluster - n].clone();
        while let Some(d) = stack.pop() {
            owner[d - n] = Some(slot);
            stack.extend(child_clusters[d - n].iter().copied());
        }
    }

    let mut labels = vec![NOISE; n];
    let mut probabilities = vec![0.0f64; n];
    let mut member_lists: Vec<Vec<usize>> = vec![Vec::new(); chosen.len()];
    for p in 0..n {
        if point_parent[p] == usize::MAX {
            continue;
        }
        if let Some(slot) = owner[point_parent[p] - n] {
            labels[p] = slot as i32;
            member_lists[slot].push(p);
        }
    }
    for (slot, members) in member_lists.iter().enumerate() {
        let max_lambda = members
            .iter()
            .map(|&p| point_lambda[p])
            .fold(0.0f64, f64::max);
        for &p in members {
            probabilities[p] = if max_lambda <= 0.0 || !max_lambda.is_finite() {
                1.0
            } else {
                (point_lambda[p].min(max_lambda)) / max_lambda
            };
        }
        let _ = slot;
    }

    let clusters: Vec<ClusterInfo> = chosen
        .iter()
        .enumerate()
        .map(|(slot, &cluster)| ClusterInfo {
            cluster_id: slot as i32,
            size: member_lists[slot].len(),
            stability: stability[cluster - n],
            representatives: Vec::new(),
        })
        .collect();

    let mut model = ClusterModel {
        labels,
        probabilities,
        clusters,
        params,
    };
    attach_representatives(&mut model, 5);
    Ok(model)
}

/// Select the top-k members of each cluster by membership probability,
/// ties broken by ascending point id.
pub fn representatives(model: &ClusterModel, k: usize) -> Vec<Vec<usize>> {
    model
        .clusters
        .iter()
        .map(|info| {
            let mut members = model.members(info.cluster_id);
            members.sort_by(|&x, &y| {
                model.probabilities[y]
                    .partial_cmp(&model.probabilities[x])
                    .expect("finite probabilities")
                    .then(x.cmp(&y))
            });
            members.truncate(k);
            members
        })
        .collect()
}

pub fn attach_representatives(model: &mut ClusterModel, k: usize) {
    let reps = representatives(model, k);
    for (info, reps) in model.clusters.iter_mut().zip(reps) {
        info.representatives = reps;
    }
}

/// End-to-end HDBSCAN on an already-reduced matrix.
pub fn hdbscan(
    points: &[Vec<f64>],
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<ClusterModel, ClusterError> {
    if min_cluster_size < 2 {
        return Err(ClusterError::BadMinClusterSize(min_cluster_size));
    }
    let n = points.len();
    if n < 2 {
        return Ok(ClusterModel {
            labels: vec![NOISE; n],
            probabilities: vec![0.0; n],
            clusters: Vec::new(),
            params: ClusterParams {
                min_cluster_size,
                min_samples,
            },
        });
    }
    let core = core_distances(points, min_samples)?;
    let mst = mutual_reachability_mst(points, &core);
    condense_and_extract(n, &mst, min_cluster_size, min_samples)
}

/// Adjusted Rand Index between two labelings (noise treated as its own
/// class). 1.0 for identical partitions, ~0 for random agreement.
pub fn adjusted_rand_index(a: &[i32], b: &[i32]) -> f64 {
    assert_eq!(a.len(), b.len(), "label lists must align");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    use std::collections::HashMap;
    let mut table: HashMap<(i32, i32), u64> = HashMap::new();
    let mut row: HashMap<i32, u64> = HashMap::new();
    let mut col: HashMap<i32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *row.entry(x).or_insert(0) += 1;
        *col.entry(y).or_insert(0) += 1;
    }
    let choose2 = |m: u64| -> f64 { (m * m.saturating_sub(1)) as f64 / 2.0 };
    let sum_table: f64 = table.values().map(|&m| choose2(m)).sum();
    let sum_row: f64 = row.values().map(|&m| choose2(m)).sum();
    let sum_col: f64 = col.values().map(|&m| choose2(m)).sum();
    let total = choose2(n as u64);
    let expected = sum_row * sum_col / total;
    let max_index = (sum_row + sum_col) / 2.0;
    if (max_index - expected).abs() < 1e-30 {
        return 1.0;
    }
    (sum_table - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn blob(center: &[f64], count: usize, radius: f64, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + rng.gen_range(-radius..radius))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn core_distances_equilateral_triangle() {
        let s3 = 3.0f64.sqrt() / 2.0;
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, s3]];
        let core = core_distances(&points, 1).unwrap();
        for c in core {
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn core_distances_match_brute_force_on_line() {
        let points: Vec<Vec<f64>> = [0.0, 1.0, 3.0, 6.0, 10.0]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let core = core_distances(&points, 2).unwrap();
        // oracle: sort each row of the full distance matrix
        for (i, p) in points.iter().enumerate() {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| euclidean(p, q))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((core[i] - d[1]).abs() < 1e-12, "point {i}");
        }
    }

    #[test]
    fn core_distances_reject_min_samples_ge_n() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            core_distances(&points, 2),
            Err(ClusterError::BadMinSamples { .. })
        ));
    }

    #[test]
    fn mst_two_points() {
        let points = vec![vec![0.0], vec![3.0]];
        let core = vec![3.0, 3.0]; // min_samples = 1
        let mst = mutual_reachability_mst(&points, &core);
        assert_eq!(mst.len(), 1);
        assert_eq!(mst[0].weight, 3.0);
    }

    #[test]
    fn mst_weight_matches_kruskal_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let points: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let core = core_distances(&points, 3).unwrap();
        let mst = mutual_reachability_mst(&points, &core);
        let total: f64 = mst.iter().map(|e| e.weight).sum();

        // oracle: Kruskal over all pairs
        let n = points.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((mreach(&points, &core, i, j), i, j));
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut oracle_total = 0.0;
        let mut taken = 0;
        for (w, i, j) in edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                oracle_total += w;
                taken += 1;
            }
        }
        assert_eq!(taken, n - 1);
        assert!((total - oracle_total).abs() < 1e-9);
    }

    #[test]
    fn mst_duplicate_points_use_max_core() {
        let points = vec![vec![0.0], vec![0.0], vec![5.0]];
        let core = core_distances(&points, 1).unwrap();
        // duplicates: core 0 for both duplicate points, 5 for the far one
        assert_eq!(core[0], 0.0);
        assert_eq!(core[1], 0.0);
        let mst = mutual_reachability_mst(&points, &core);
        let dup_edge = mst
            .iter()
            .find(|e| (e.a.min(e.b), e.a.max(e.b)) == (0, 1))
            .unwrap();
        assert_eq!(dup_edge.weight, 0.0f64.max(core[0]).max(core[1]));
    }

    #[test]
    fn two_far_blobs_give_two_clusters() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut points = blob(&[0.0, 0.0], 100, 0.5, &mut rng);
        points.extend(blob(&[50.0, 50.0], 100, 0.5, &mut rng));
        let model = hdbscan(&points, 15, 15).unwrap();
        assert_eq!(model.n_clusters(), 2);
        // blob cores assigned, not noise
        let noise = model.labels.iter().filter(|&&l| l == NOISE).count();
        assert_eq!(noise, 0, "far-separated tight blobs leave no noise");
        // all of blob 1 shares a label distinct from blob 2
        let first: std::collections::HashSet<i32> = model.labels[..100].iter().copied().collect();
        let second: std::collections::HashSet<i32> = model.labels[100..].iter().copied().collect();
        assert_eq!(first.len(), 1);
        assert_eq!(second.len(), 1);
        assert_ne!(first, second);
    }

    #[test]
    fn uniform_points_never_split_below_min_cluster_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let points: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..2).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let model = hdbscan(&points, 25, 5).unwrap();
        // 30 points cannot split into two clusters of >= 25
        assert!(model.n_clusters() <= 1);
    }

    #[test]
    fn far_outlier_is_noise_with_zero_probability() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut points = blob(&[0.0, 0.0], 60, 0.5, &mut rng);
        points.extend(blob(&[10.0, 0.0], 60, 0.5, &mut rng));
        points.push(vec![500.0, 500.0]);
        let model = hdbscan(&points, 10, 10).unwrap();
        let outlier = points.len() - 1;
        assert_eq!(model.labels[outlier], NOISE);
        assert_eq!(model.probabilities[outlier], 0.0);
    }

    #[test]
    fn noise_probability_zero_and_members_probability_positive_clusters() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut points = blob(&[0.0, 0.0], 40, 1.0, &mut rng);
        points.extend(blob(&[30.0, 0.0], 40, 1.0, &mut rng));
        points.push(vec![1000.0, 0.0]);
        let model = hdbscan(&points, 15, 15).unwrap();
        for (i, &label) in model.labels.iter().enumerate() {
            if label == NOISE {
                assert_eq!(model.probabilities[i], 0.0);
            } else {
                let info = &model.clusters[label as usize];
                assert!(info.size >= model.params.min_cluster_size);
                assert!(model.probabilities[i] >= 0.0 && model.probabilities[i] <= 1.0);
            }
        }
    }

    #[test]
    fn representatives_clamp_and_tiebreak() {
        let model = ClusterModel {
            labels: vec![0, 0, 0, 1, 1],
            probabilities: vec![0.5, 0.5, 0.9, 1.0, 1.0],
            clusters: vec![
                ClusterInfo {
                    cluster_id: 0,
                    size: 3,
                    stability: 1.0,
                    representatives: Vec::new(),
                },
                ClusterInfo {
                    cluster_id: 1,
                    size: 2,
                    stability: 1.0,
                    representatives: Vec::new(),
                },
            ],
            params: ClusterParams {
                min_cluster_size: 2,
                min_samples: 2,
            },
        };
        let reps = representatives(&model, 5);
        // cluster of 3 with k=5 returns all 3; equal probabilities resolve
        // to lower ids first
        assert_eq!(reps[0], vec![2, 0, 1]);
        assert_eq!(reps[1], vec![3, 4]);
        let reps2 = representatives(&model, 1);
        assert_eq!(reps2[0], vec![2]);
    }

    #[test]
    fn representatives_match_sort_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let probabilities: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
        let model = ClusterModel {
            labels: vec![0; 20],
            probabilities: probabilities.clone(),
            clusters: vec![ClusterInfo {
                cluster_id: 0,
                size: 20,
                stability: 1.0,
                representatives: Vec::new(),
            }],
            params: ClusterParams {
                min_cluster_size: 2,
                min_samples: 2,
            },
        };
        let reps = representatives(&model, 5);
        let mut oracle: Vec<usize> = (0..20).collect();
        oracle.sort_by(|&x, &y| {
            probabilities[y]
                .partial_cmp(&probabilities[x])
                .unwrap()
                .then(x.cmp(&y))
        });
        assert_eq!(reps[0], oracle[..5]);
    }

    #[test]
    fn label_permutation_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut points = blob(&[0.0, 0.0], 25, 0.6, &mut rng);
        points.extend(blob(&[12.0, 0.0], 25, 0.6, &mut rng));
        points.extend(blob(&[0.0, 12.0], 5, 3.0, &mut rng));
        let base = hdbscan(&points, 8, 8).unwrap();

        let mut order: Vec<usize> = (0..points.len()).collect();
        // deterministic shuffle
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
        let perm_model = hdbscan(&permuted, 8, 8).unwrap();
        assert!(
            (adjusted_rand_index(
                &order.iter().map(|&i| base.labels[i]).collect::<Vec<_>>(),
                &perm_model.labels
            ) - 1.0)
                .abs()
                < 1e-12
        );
        for (out_idx, &src) in order.iter().enumerate() {
            assert!(
                (perm_model.probabilities[out_idx] - base.probabilities[src]).abs() < 1e-9,
                "probability of point {src}"
            );
        }
    }

    #[test]
    fn ari_hand_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]), 1.0);
        // hand-computed: splitting one of two pairs
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 0, 1]);
        // contingency: {(0,0):2, (1,0):1, (1,1):1}; sum_table = 1,
        // sum_row = 2, sum_col = 3+0 = 3, total = 6
        // expected = 1.0, max = 2.5 -> (1-1)/(2.5-1) = 0
        assert!((ari - 0.0).abs() < 1e-12);
    }
}
