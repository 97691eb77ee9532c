//! Train the multinomial logistic-regression topic classifier with k-fold
//! cross-validation over an L2 grid, and score it with the bundled metrics.
//!
//! ```bash
//! cargo run -p taxoforge --example train_classifier
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use taxoforge::classifier::{
    cohens_kappa, cross_validate, predict, train, TrainingSet, DEFAULT_LAMBDA_GRID,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let topics = ["abortion", "economy", "voting rights"];
    let mut examples = Vec::new();
    for (class, topic) in topics.iter().enumerate() {
        for _ in 0..30 {
            let x: Vec<f64> = (0..8)
                .map(|d| {
                    let center = if d == class * 2 { 1.0 } else { 0.0 };
                    center + 0.25 * rng.gen_range(-1.0..1.0)
                })
                .collect();
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            examples.push((
                x.iter().map(|v| v / norm).collect::<Vec<f64>>(),
                topic.to_string(),
            ));
        }
    }
    let training = TrainingSet::from_examples(examples, 0.98);
    println!("class histogram: {:?}", training.class_histogram());

    let (best_lambda, report) = cross_validate(&training, &DEFAULT_LAMBDA_GRID, 5, 42)?;
    println!("\n5-fold cross-validation, lambda grid {DEFAULT_LAMBDA_GRID:?}");
    println!("best lambda: {best_lambda}");
    println!("{}", report.to_table());

    let model = train(&training, best_lambda, 500, 1e-6)?;
    let queries: Vec<Vec<f64>> = training.examples.iter().take(5).map(|(x, _)| x.clone()).collect();
    let predictions = predict(&model, &queries)?;
    println!("sample predictions:");
    for ((label, probs), (_, gold)) in predictions.iter().zip(&training.examples) {
        let confidence = probs.iter().cloned().fold(0.0, f64::max);
        println!("  predicted {label:<14} (p = {confidence:.3}), gold {gold}");
    }

    // inter-rater agreement utility on the same predictions
    let gold: Vec<String> = training.examples.iter().map(|(_, l)| l.clone()).collect();
    let predicted: Vec<String> = predict(&model, &training.examples.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>())?
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    println!("\ncohen's kappa vs gold: {:.4}", cohens_kappa(&gold, &predicted)?);
    Ok(())
}
