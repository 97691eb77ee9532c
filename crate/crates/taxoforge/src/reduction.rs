#![allow(clippy::needless_range_loop)] // index loops over parallel arrays

//! Dimensionality reduction before clustering: a from-scratch UMAP
//! (exact k-NN graph, smooth-kNN fuzzy simplicial set, negative-sampling SGD
//! layout) and a deterministic PCA fallback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("k = {k} must be < n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("target dimension {target} exceeds input dimension {dim}")]
    TargetTooLarge { target: usize, dim: usize },
    #[error("input matrix is empty")]
    EmptyInput,
    #[error("input rows have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMethod {
    Umap,
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub n_components: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    pub seed: u64,
}

impl Default for UmapParams {
    fn default() -> Self {
        UmapParams {
            n_neighbors: 15,
            n_components: 5,
            min_dist: 0.0,
            spread: 1.0,
            n_epochs: 200,
            learning_rate: 1.0,
            negative_sample_rate: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ReductionParams {
    Umap(UmapParams),
    Pca { n_components: usize },
}

/// Reduced coordinates, one row per input point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedMatrix {
    pub rows: Vec<Vec<f64>>,
    pub method: ReductionMethod,
    pub params: ReductionParams,
    pub seed: u64,
}

/// Exact k-nearest-neighbour graph under Euclidean distance. Each node gets
/// exactly `k` out-edges, sorted by (distance, index).
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub neighbors: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
    pub k: usize,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn knn_graph(points: &[Vec<f64>], k: usize) -> Result<KnnGraph, ReduceError> {
    let n = points.len();
    if n == 0 {
        return Err(ReduceError::EmptyInput);
    }
    if k >= n {
        return Err(ReduceError::KTooLarge { k, n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ReduceError::RaggedInput);
    }
    let mut neighbors = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, q)| (euclidean(p, q), j))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        dists.truncate(k);
        neighbors.push(dists.iter().map(|(_, j)| *j).collect());
        distances.push(dists.iter().map(|(d, _)| *d).collect());
    }
    Ok(KnnGraph {
        neighbors,
        distances,
        k,
    })
}

/// Symmetric weighted graph from the smooth-kNN calibration. Edges stored
/// once with `a < b`, sorted.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    /// Nodes whose sigma bisection did not converge (fell back to the mean
    /// neighbour distance).
    pub sigma_fallbacks: Vec<usize>,
}

const SIGMA_BISECTION_STEPS: usize = 64;
const SIGMA_TOLERANCE: f64 = 1e-5;

/// Solve for per-node bandwidths and build the fuzzy simplicial set.
///
/// For node i with neighbour distances d_ij: rho_i is the nearest-neighbour
/// distance, sigma_i solves sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)
/// by bisection, and the symmetrized weight is `w = a + b - a*b`.
pub fn fuzzy_set(graph: &KnnGraph) -> FuzzyGraph {
    let n = graph.neighbors.len();
    let k = graph.k;
    let target = (k as f64).log2();
    let mut sigma_fallbacks = Vec::new();
    let mut directed: std::collections::BTreeMap<(usize, usize), f64> = Default::default();

    for i in 0..n {
        let dists = &graph.distances[i];
        let rho = dists[0];
        let sum_for = |sigma: f64| -> f64 {
            dists
                .iter()
                .map(|d| (-((d - rho).max(0.0)) / sigma).exp())
                .sum()
        };
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        let mut mid = 1.0f64;
        let mut converged = false;
        for _ in 0..SIGMA_BISECTION_STEPS {
            let value = sum_for(mid);
            if (value - target).abs() < SIGMA_TOLERANCE {
                converged = true;
                break;
            }
            if value > target {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
            }
        }
        let sigma = if converged {
            mid
        } else {
            sigma_fallbacks.push(i);
            let mean: f64 = dists.iter().sum::<f64>() / dists.len() as f64;
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        };
        for (j, d) in graph.neighbors[i].iter().zip(dists) {
            let w = (-((d - rho).max(0.0)) / sigma).exp();
            directed.insert((i, *j), w);
        }
    }

    let mut edges = Vec::new();
    for (&(i, j), &w_ij) in &directed {
        if i < j {
            let w_ji = directed.get(&(j, i)).copied().unwrap_or(0.0);
            edges.push((i, j, w_ij + w_ji - w_ij * w_ji));
        } else if !directed.contains_key(&(j, i)) {
            // only the reverse direction exists; emit once with (min, max)
            let w_ji = directed.get(&(j, i)).copied().unwrap_or(0.0);
            edges.push((j, i, w_ij + w_ji - w_ij * w_ji));
        }
    }
    edges.sort_by_key(|e| (e.0, e.1));
    FuzzyGraph {
        n,
        edges,
        sigma_fallbacks,
    }
}

/// Fit the low-dimensional kernel parameters (a, b) so that
/// `1/(1 + a x^(2b))` approximates the target membership curve for the given
/// `min_dist` and `spread`. Deterministic coarse-to-fine grid search.
pub fn fit_ab(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (1..=300).map(|i| i as f64 * (3.0 * spread) / 300.0).collect();
    let target: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x <= min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let loss = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&target)
            .map(|(&x, &t)| {
                let y = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (y - t) * (y - t)
            })
            .sum()
    };
    let mut best = (1.0, 1.0);
    let mut best_loss = f64::INFINITY;
    let mut a_range = (0.05f64, 10.0f64);
    let mut b_range = (0.3f64, 2.5f64);
    for _ in 0..3 {
        let (a_lo, a_hi) = a_range;
        let (b_lo, b_hi) = b_range;
        for ai in 0..=60 {
            let a = a_lo * (a_hi / a_lo).powf(ai as f64 / 60.0);
            for bi in 0..=60 {
                let b = b_lo + (b_hi - b_lo) * bi as f64 / 60.0;
                let l = loss(a, b);
                if l < best_loss {
                    best_loss = l;
                    best = (a, b);
                }
            }
        }
        a_range = (best.0 / 1.5, best.0 * 1.5);
        b_range = ((best.1 / 1.3).max(0.05), best.1 * 1.3);
    }
    best
}

fn clip4(x: f64) -> f64 {
    x.clamp(-4.0, 4.0)
}

/// SGD layout over the fuzzy graph: per-epoch linearly decaying learning
/// rate, edge sampling proportional to membership weight, and negative
/// sampling (default 5 per positive). Single-threaded and bit-deterministic
/// for a fixed seed.
pub fn optimize_layout(graph: &FuzzyGraph, params: &UmapParams) -> ReducedMatrix {
    let n = graph.n;
    let d = params.n_components;
    let make = |rows: Vec<Vec<f64>>| ReducedMatrix {
        rows,
        method: ReductionMethod::Umap,
        params: ReductionParams::Umap(params.clone()),
        seed: params.seed,
    };
    if n == 1 {
        return make(vec![vec![0.0; d]]);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut pos: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .collect();
    if graph.edges.is_empty() {
        return make(pos);
    }

    let (a, b) = fit_ab(params.min_dist, params.spread);
    // process each undirected edge in both directions, like the reference
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(graph.edges.len() * 2);
    for &(i, j, w) in &graph.edges {
        edges.push((i, j, w));
        edges.push((j, i, w));
    }
    edges.sort_by_key(|e| (e.0, e.1));
    let max_w = edges
        .iter()
        .map(|e| e.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let n_epochs = params.n_epochs.max(1);
    // edges sampled proportional to weight; too-weak edges never fire
    let keep: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .filter(|e| e.2 >= max_w / n_epochs as f64)
        .collect();
    let epochs_per_sample: Vec<f64> = keep.iter().map(|e| max_w / e.2).collect();
    let epochs_per_negative: Vec<f64> = epochs_per_sample
        .iter()
        .map(|e| e / params.negative_sample_rate as f64)
        .collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative: Vec<f64> = vec![0.0; keep.len()];

    for epoch in 0..n_epochs {
        let alpha = params.learning_rate * (1.0 - epoch as f64 / n_epochs as f64);
        for (e, &(i, j, _)) in keep.iter().enumerate() {
            if next_sample[e] > (epoch + 1) as f64 {
                continue;
            }
            // attraction between the edge endpoints
            let d2: f64 = (0..d)
                .map(|c| (pos[i][c] - pos[j][c]) * (pos[i][c] - pos[j][c]))
                .sum();
            if d2 > 0.0 {
                let coeff = (-2.0 * a * b * d2.powf(b - 1.0)) / (1.0 + a * d2.powf(b));
                for c in 0..d {
                    let g = clip4(coeff * (pos[i][c] - pos[j][c]));
                    pos[i][c] += alpha * g;
                    pos[j][c] -= alpha * g;
                }
            }
            next_sample[e] += epochs_per_sample[e];

            let n_neg = (((epoch + 1) as f64 - next_negative[e]) / epochs_per_negative[e])
                .floor()
                .max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.gen_range(0..n);
                if k == i || k == j {
                    continue;
                }
                let d2: f64 = (0..d)
                    .map(|c| (pos[i][c] - pos[k][c]) * (pos[i][c] - pos[k][c]))
                    .sum();
                let coeff = (2.0 * b) / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                for c in 0..d {
                    let g = clip4(coeff * (pos[i][c] - pos[k][c]));
                    pos[i][c] += alpha * g;
                }
            }
            next_negative[e] += n_neg as f64 * epochs_per_negative[e];
        }
    }

    debug_assert!(pos.iter().all(|row| row.iter().all(|v| v.is_finite())));
    make(pos)
}

/// Full UMAP: k-NN graph, fuzzy set, SGD layout.
pub fn umap_reduce(points: &[Vec<f64>], params: &UmapParams) -> Result<ReducedMatrix, ReduceError> {
    if points.len() == 1 {
        return Ok(ReducedMatrix {
            rows: vec![vec![0.0; params.n_components]],
            method: ReductionMethod::Umap,
            params: ReductionParams::Umap(params.clone()),
            seed: params.seed,
        });
    }
    let k = params.n_neighbors.min(points.len() - 1).max(1);
    let graph = knn_graph(points, k)?;
    let fuzzy = fuzzy_set(&graph);
    Ok(optimize_layout(&fuzzy, params))
}

/// PCA onto the top `target` principal directions of the mean-centered data.
/// Sign convention: the largest-magnitude loading of each component is made
/// positive, so results are reproducible across runs.
pub fn pca_reduce(points: &[Vec<f64>], target: usize) -> Result<ReducedMatrix, ReduceError> {
    let n = points.len();
    if n == 0 {
        return Err(ReduceError::EmptyInput);
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ReduceError::RaggedInput);
    }
    if target > dim {
        return Err(ReduceError::TargetTooLarge { target, dim });
    }
    let mut mean = vec![0.0f64; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    // covariance (unnormalized; scaling does not change eigenvectors)
    let mut cov = vec![vec![0.0f64; dim]; dim];
    for row in &centered {
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let (eigenvalues, mut eigenvectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| {
        eigenvalues[y]
            .partial_cmp(&eigenvalues[x])
            .expect("finite eigenvalues")
            .then(x.cmp(&y))
    });
    // fix signs: largest-magnitude loading positive (lowest index on ties)
    for col in order.iter().take(target) {
        let mut best = 0usize;
        for r in 1..dim {
            if eigenvectors[r][*col].abs() > eigenvectors[best][*col].abs() + 1e-15 {
                best = r;
            }
        }
        if eigenvectors[best][*col] < 0.0 {
            for r in 0..dim {
                eigenvectors[r][*col] = -eigenvectors[r][*col];
            }
        }
    }
    let rows: Vec<Vec<f64>> = centered
        .iter()
        .map(|row| {
            order
                .iter()
                .take(target)
                .map(|&col| (0..dim).map(|r| row[r] * eigenvectors[r][col]).sum())
                .collect()
        })
        .collect();
    Ok(ReducedMatrix {
        rows,
        method: ReductionMethod::Pca,
        params: ReductionParams::Pca {
            n_components: target,
        },
        seed: 0,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvector columns); always orthogonal, even for
/// degenerate spectra.
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0f64; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = matrix
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_collinear_middle_point() {
        let points = vec![vec![0.0], vec![1.0], vec![3.0]];
        let graph = knn_graph(&points, 1).unwrap();
        assert_eq!(graph.neighbors[1], vec![0]); // nearer endpoint
        assert_eq!(graph.neighbors[0], vec![1]);
        assert_eq!(graph.neighbors[2], vec![1]);
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let points: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let graph = knn_graph(&points, 3).unwrap();
        for i in 0..points.len() {
            // oracle: full sort of all other points
            let mut all: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (euclidean(&points[i], &points[j]), j))
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expected: Vec<usize> = all.iter().take(3).map(|(_, j)| *j).collect();
            assert_eq!(graph.neighbors[i], expected, "node {i}");
        }
    }

    #[test]
    fn knn_matches_oracle_up_to_two_hundred_points() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for fixture in 0..20 {
            let n = rng.gen_range(2..=200);
            let dims = rng.gen_range(1..=4);
            let k = rng.gen_range(1..n);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dims).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let graph = knn_graph(&points, k).unwrap();
            for i in 0..n {
                let mut all: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (euclidean(&points[i], &points[j]), j))
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let expected: Vec<usize> = all.iter().take(k).map(|(_, j)| *j).collect();
                assert_eq!(graph.neighbors[i], expected, "fixture {fixture}, node {i}");
            }
        }
    }

    #[test]
    fn knn_rejects_k_equal_n() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            knn_graph(&points, 2),
            Err(ReduceError::KTooLarge { .. })
        ));
    }

    #[test]
    fn fuzzy_two_point_edge_is_one() {
        let points = vec![vec![0.0], vec![2.0]];
        let graph = knn_graph(&points, 1).unwrap();
        let fuzzy = fuzzy_set(&graph);
        assert_eq!(fuzzy.edges.len(), 1);
        let (i, j, w) = fuzzy.edges[0];
        assert_eq!((i, j), (0, 1));
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fuzzy_nearest_neighbor_weight_is_one() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0], vec![5.0, 5.0]];
        let graph = knn_graph(&points, 2).unwrap();
        let fuzzy = fuzzy_set(&graph);
        // node 0's nearest neighbour is 1 (distance = rho_0) so the edge
        // carries weight 1.0 even after symmetrization
        let w01 = fuzzy
            .edges
            .iter()
            .find(|(i, j, _)| (*i, *j) == (0, 1))
            .unwrap()
            .2;
        assert!((w01 - 1.0).abs() < 1e-9);
    }

    /// Independent transcription of the smooth-kNN formulas over a dense
    /// matrix, used as the oracle for the adjacency-list implementation.
    fn fuzzy_oracle(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
        let n = points.len();
        let mut w = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (euclidean(&points[i], &points[j]), j))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            dists.truncate(k);
            let rho = dists[0].0;
            let target = (k as f64).log2();
            let f = |sigma: f64| -> f64 {
                dists
                    .iter()
                    .map(|(d, _)| (-((d - rho).max(0.0)) / sigma).exp())
                    .sum()
            };
            let mut lo = 1e-12;
            let mut hi = 1e12;
            for _ in 0..200 {
                let mid = (lo + hi) / 2.0;
                if f(mid) > target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut sigma = (lo + hi) / 2.0;
            // same non-convergence clause as the contract: an unreachable
            // target falls back to the mean neighbour distance
            if (f(sigma) - target).abs() >= 1e-5 {
                sigma = dists.iter().map(|(d, _)| d).sum::<f64>() / dists.len() as f64;
            }
            for (d, j) in &dists {
                w[i][*j] = (-((d - rho).max(0.0)) / sigma).exp();
            }
        }
        let mut sym = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                sym[i][j] = w[i][j] + w[j][i] - w[i][j] * w[j][i];
            }
        }
        sym
    }

    #[test]
    fn fuzzy_matches_independent_oracle_on_fixture() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 1.1],
            vec![4.0, 4.2],
            vec![4.4, 3.9],
        ];
        let graph = knn_graph(&points, 3).unwrap();
        let fuzzy = fuzzy_set(&graph);
        let oracle = fuzzy_oracle(&points, 3);
        // the fixture deliberately includes a point equidistant from two
        // others (node 2), exercising the sigma fallback in both routes
        assert_eq!(fuzzy.sigma_fallbacks, vec![2]);
        for (i, j, w) in &fuzzy.edges {
            assert!(
                (w - oracle[*i][*j]).abs() < 2e-3,
                "edge ({i},{j}): {w} vs oracle {}",
                oracle[*i][*j]
            );
        }
        // no oracle edge missing from the implementation
        for i in 0..5 {
            for j in (i + 1)..5 {
                if oracle[i][j] > 1e-9 {
                    assert!(fuzzy.edges.iter().any(|(a, b, _)| (*a, *b) == (i, j)));
                }
            }
        }
    }

    #[test]
    fn layout_single_point_is_origin() {
        let params = UmapParams {
            n_components: 3,
            ..Default::default()
        };
        let reduced = umap_reduce(&[vec![1.0, 2.0, 3.0, 4.0]], &params).unwrap();
        assert_eq!(reduced.rows, vec![vec![0.0, 0.0, 0.0]]);
    }

    #[test]
    fn layout_is_deterministic_for_fixed_seed() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let cx = if i < 20 { 0.0 } else { 8.0 };
                vec![cx + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]
            })
            .collect();
        let params = UmapParams {
            n_neighbors: 5,
            n_components: 2,
            n_epochs: 50,
            seed: 42,
            ..Default::default()
        };
        let a = umap_reduce(&points, &params).unwrap();
        let b = umap_reduce(&points, &params).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn layout_separates_two_blobs() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let points: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let cx = if i < 50 { 0.0 } else { 20.0 };
                (0..5)
                    .map(|c| if c == 0 { cx } else { 0.0 } + rng.gen_range(-0.5..0.5))
                    .collect()
            })
            .collect();
        let params = UmapParams {
            n_neighbors: 10,
            n_components: 2,
            n_epochs: 100,
            seed: 7,
            ..Default::default()
        };
        let reduced = umap_reduce(&points, &params).unwrap();
        let centroid = |range: std::ops::Range<usize>| -> Vec<f64> {
            let mut c = [0.0; 2];
            for i in range.clone() {
                for d in 0..2 {
                    c[d] += reduced.rows[i][d];
                }
            }
            c.iter().map(|v| v / range.len() as f64).collect()
        };
        let c0 = centroid(0..50);
        let c1 = centroid(50..100);
        let inter = euclidean(&c0, &c1);
        let mut intra = 0.0;
        let mut count = 0;
        for blob in [0..50usize, 50..100] {
            for i in blob.clone() {
                for j in blob.clone() {
                    if i < j {
                        intra += euclidean(&reduced.rows[i], &reduced.rows[j]);
                        count += 1;
                    }
                }
            }
        }
        intra /= count as f64;
        assert!(
            inter > 2.0 * intra,
            "inter {inter} should exceed 2x intra {intra}"
        );
    }

    #[test]
    fn pca_recovers_planar_subspace() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        // points on a 2-D plane embedded in 10-D
        let basis: Vec<Vec<f64>> = vec![
            (0..10).map(|i| if i == 2 { 3.0 } else { 0.1 * i as f64 }).collect(),
            (0..10).map(|i| if i == 7 { -2.0 } else { 0.05 * i as f64 }).collect(),
        ];
        let points: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                let v: f64 = rng.gen_range(-1.0..1.0);
                (0..10).map(|c| u * basis[0][c] + v * basis[1][c]).collect()
            })
            .collect();
        let reduced = pca_reduce(&points, 2).unwrap();
        // distances in the plane must be preserved exactly
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let original = euclidean(&points[i], &points[j]);
                let projected = euclidean(&reduced.rows[i], &reduced.rows[j]);
                assert!(
                    (original - projected).abs() < 1e-9,
                    "pair ({i},{j}): {original} vs {projected}"
                );
            }
        }
    }

    #[test]
    fn pca_full_rank_is_isometry() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let points: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let reduced = pca_reduce(&points, 4).unwrap();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let original = euclidean(&points[i], &points[j]);
                let projected = euclidean(&reduced.rows[i], &reduced.rows[j]);
                assert!((original - projected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pca_matches_hand_fixture() {
        // mean-zero rows; covariance diag(8, 2, 0): PCs are the coordinate
        // axes with positive orientation, so the projection is just (x, y)
        let points = vec![
            vec![2.0, 0.0, 0.0],
            vec![-2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ];
        let reduced = pca_reduce(&points, 2).unwrap();
        let expected = [[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        for (row, want) in reduced.rows.iter().zip(expected) {
            for (got, want) in row.iter().zip(want) {
                assert!((got - want).abs() < 1e-9, "{row:?}");
            }
        }
    }

    #[test]
    fn pca_rejects_oversized_target() {
        let points = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(
            pca_reduce(&points, 3),
            Err(ReduceError::TargetTooLarge { .. })
        ));
    }

    #[test]
    fn pca_row_permutation_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let points: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let base = pca_reduce(&points, 2).unwrap();
        let perm: Vec<usize> = vec![5, 2, 9, 0, 11, 7, 1, 3, 10, 4, 8, 6];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let reduced = pca_reduce(&permuted, 2).unwrap();
        for (out_idx, &src) in perm.iter().enumerate() {
            for d in 0..2 {
                assert!(
                    (reduced.rows[out_idx][d] - base.rows[src][d]).abs() < 1e-9,
                    "row {src}"
                );
            }
        }
    }

    #[test]
    fn fit_ab_defaults_are_near_reference() {
        // the reference fit for (min_dist 0, spread 1) lands near a=1.93 b=0.79
        let (a, b) = fit_ab(0.0, 1.0);
        assert!(a > 1.0 && a < 3.0, "a = {a}");
        assert!(b > 0.6 && b < 1.0, "b = {b}");
    }
}
