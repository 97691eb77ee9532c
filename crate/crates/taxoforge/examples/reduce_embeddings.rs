//! The two reduction routes side by side: UMAP (k-NN graph, fuzzy set, SGD
//! layout) and the deterministic PCA fallback, with neighbor-preservation
//! numbers for each.
//!
//! ```bash
//! cargo run -p taxoforge --example reduce_embeddings
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use taxoforge::reduction::{fuzzy_set, knn_graph, pca_reduce, umap_reduce, UmapParams};

fn neighbor_preservation(input: &[Vec<f64>], output: &[Vec<f64>], k: usize) -> f64 {
    let knn = |data: &[Vec<f64>], i: usize| -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = data
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, q)| {
                let dist: f64 = data[i].iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
                (dist, j)
            })
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.into_iter().take(k).map(|(_, j)| j).collect()
    };
    let mut total = 0.0;
    for i in 0..input.len() {
        let before: std::collections::HashSet<usize> = knn(input, i).into_iter().collect();
        let kept = knn(output, i).into_iter().filter(|j| before.contains(j)).count();
        total += kept as f64 / k as f64;
    }
    total / input.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let mut points = Vec::new();
    for blob in 0..3 {
        for _ in 0..70 {
            points.push(
                (0..24)
                    .map(|d| {
                        let center = if d % 3 == blob { 6.0 } else { 0.0 };
                        center + rng.gen_range(-0.7..0.7)
                    })
                    .collect::<Vec<f64>>(),
            );
        }
    }

    // peek at the intermediate graph structures
    let graph = knn_graph(&points, 15)?;
    let fuzzy = fuzzy_set(&graph);
    println!(
        "k-NN graph: {} nodes x {} neighbors; fuzzy set: {} symmetric edges ({} sigma fallbacks)",
        graph.neighbors.len(),
        graph.k,
        fuzzy.edges.len(),
        fuzzy.sigma_fallbacks.len()
    );

    let params = UmapParams {
        n_components: 2,
        seed: 31,
        ..UmapParams::default()
    };
    let umap = umap_reduce(&points, &params)?;
    let pca = pca_reduce(&points, 2)?;

    println!(
        "10-NN preservation: umap {:.3}, pca {:.3}",
        neighbor_preservation(&points, &umap.rows, 10),
        neighbor_preservation(&points, &pca.rows, 10),
    );
    println!("first rows:");
    for i in 0..3 {
        println!(
            "  point {i}: umap ({:+.3}, {:+.3})  pca ({:+.3}, {:+.3})",
            umap.rows[i][0], umap.rows[i][1], pca.rows[i][0], pca.rows[i][1]
        );
    }
    Ok(())
}
