//! Reduce synthetic high-dimensional blobs with UMAP and cluster them with
//! HDBSCAN, then compare against the planted labels.
//!
//! ```bash
//! cargo run -p taxoforge --example cluster_blobs
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use taxoforge::clustering::{adjusted_rand_index, hdbscan, NOISE};
use taxoforge::reduction::{umap_reduce, UmapParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(19);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for blob in 0..4i32 {
        for _ in 0..80 {
            let point: Vec<f64> = (0..16)
                .map(|d| {
                    let center = if d == blob as usize * 3 { 8.0 } else { 0.0 };
                    center + rng.gen_range(-0.6..0.6)
                })
                .collect();
            points.push(point);
            truth.push(blob);
        }
    }

    let params = UmapParams {
        n_components: 2,
        seed: 19,
        ..UmapParams::default()
    };
    let reduced = umap_reduce(&points, &params)?;
    println!(
        "reduced {} points from 16-D to {}-D (umap, {} epochs)",
        reduced.rows.len(),
        reduced.rows[0].len(),
        params.n_epochs
    );

    let model = hdbscan(&reduced.rows, 15, 15)?;
    println!("found {} clusters:", model.n_clusters());
    for info in &model.clusters {
        println!(
            "  cluster {:>2}: {:>3} members, stability {:.3}, representatives {:?}",
            info.cluster_id, info.size, info.stability, info.representatives
        );
    }
    let noise = model.labels.iter().filter(|&&l| l == NOISE).count();
    println!("noise points: {noise}");
    println!(
        "adjusted rand index vs planted labels: {:.4}",
        adjusted_rand_index(&model.labels, &truth)
    );
    Ok(())
}
