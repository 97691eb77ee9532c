//! Multinomial logistic-regression topic classifier trained on
//! high-confidence cluster members, plus the evaluation metrics used to
//! score it: macro-F1, accuracy, confusion matrix, Cohen's kappa, and
//! stratified k-fold cross-validation over an L2 grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterModel;
use crate::embedding::EmbeddedCorpus;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no training examples above threshold {0}")]
    EmptyTrainingSet(f64),
    #[error("cluster {0} has no topic annotation")]
    MissingAnnotation(i32),
    #[error("training requires at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("non-finite loss during training")]
    NonFiniteLoss,
    #[error("feature dimension mismatch: model {model}, input {input}")]
    DimMismatch { model: usize, input: usize },
    #[error("label lists have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("k-fold requires k >= 2, got {0}")]
    BadFoldCount(usize),
    #[error("degenerate fold: {0}")]
    DegenerateFold(String),
    #[error("cluster model covers {model} points but corpus has {corpus}")]
    AlignmentMismatch { model: usize, corpus: usize },
}

/// Labeled embedding vectors drawn from cluster members whose membership
/// probability strictly exceeds the threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSet {
    pub examples: Vec<(Vec<f64>, String)>,
    pub threshold: f64,
    pub label_vocab: Vec<String>,
}

impl TrainingSet {
    pub fn from_examples(examples: Vec<(Vec<f64>, String)>, threshold: f64) -> Self {
        let mut vocab: Vec<String> = examples.iter().map(|(_, l)| l.clone()).collect();
        vocab.sort();
        vocab.dedup();
        TrainingSet {
            examples,
            threshold,
            label_vocab: vocab,
        }
    }

    /// Examples per class, in vocab order.
    pub fn class_histogram(&self) -> Vec<(String, usize)> {
        self.label_vocab
            .iter()
            .map(|label| {
                (
                    label.clone(),
                    self.examples.iter().filter(|(_, l)| l == label).count(),
                )
            })
            .collect()
    }
}

/// Build the training set from cluster membership probabilities and the
/// per-cluster topic annotations. Features are the L2-normalized raw
/// embeddings, not the reduced coordinates.
pub fn build_training_set(
    model: &ClusterModel,
    annotations: &[(i32, String)],
    embedded: &EmbeddedCorpus,
    threshold: f64,
) -> Result<TrainingSet, ClassifierError> {
    if model.labels.len() != embedded.len() {
        return Err(ClassifierError::AlignmentMismatch {
            model: model.labels.len(),
            corpus: embedded.len(),
        });
    }
    let topic_of = |cluster_id: i32| -> Result<&String, ClassifierError> {
        annotations
            .iter()
            .find(|(id, _)| *id == cluster_id)
            .map(|(_, t)| t)
            .ok_or(ClassifierError::MissingAnnotation(cluster_id))
    };
    // every cluster must be annotated, used or not
    for info in &model.clusters {
        topic_of(info.cluster_id)?;
    }
    let mut examples = Vec::new();
    for (i, (&label, &prob)) in model
        .labels
        .iter()
        .zip(&model.probabilities)
        .enumerate()
    {
        if label == crate::clustering::NOISE || prob <= threshold {
            continue;
        }
        let topic = topic_of(label)?.clone();
        examples.push((normalized_features(&embedded.vectors[i].values), topic));
    }
    if examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet(threshold));
    }
    Ok(TrainingSet::from_examples(examples, threshold))
}

/// L2-normalize an f32 embedding into f64 features; zero vectors stay zero.
pub fn normalized_features(values: &[f32]) -> Vec<f64> {
    let norm: f64 = values
        .iter()
        .map(|v| (*v as f64) * (*v as f64))
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return values.iter().map(|v| *v as f64).collect();
    }
    values.iter().map(|v| *v as f64 / norm).collect()
}

/// Trained model: one weight row per class over (dim + 1) columns, the last
/// being the unpenalized bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<Vec<f64>>,
    pub label_vocab: Vec<String>,
    pub l2_lambda: f64,
}

impl LogRegModel {
    pub fn dim(&self) -> usize {
        self.weights[0].len() - 1
    }
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy plus `(lambda/2)||W||^2` (bias unpenalized), with its
/// gradient. Public so finite-difference oracles can drive it directly.
pub fn loss_and_gradient(
    weights: &[Vec<f64>],
    examples: &[(Vec<f64>, usize)],
    lambda: f64,
) -> (f64, Vec<Vec<f64>>) {
    let n_classes = weights.len();
    let n_cols = weights[0].len();
    let dim = n_cols - 1;
    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![vec![0.0f64; n_cols]; n_classes];
    for (x, y) in examples {
        let logits: Vec<f64> = weights
            .iter()
            .map(|w| {
                let mut z = w[dim]; // bias
                for (wi, xi) in w[..dim].iter().zip(x) {
                    z += wi * xi;
                }
                z
            })
            .collect();
        let probs = softmax_row(&logits);
        loss += -(probs[*y].max(1e-300)).ln();
        for c in 0..n_classes {
            let delta = probs[c] - if c == *y { 1.0 } else { 0.0 };
            for (g, xi) in grad[c][..dim].iter_mut().zip(x) {
                *g += delta * xi;
            }
            grad[c][dim] += delta;
        }
    }
    loss /= n;
    for row in &mut grad {
        for g in row.iter_mut() {
            *g /= n;
        }
    }
    // ridge on everything but the bias column
    for (w_row, g_row) in weights.iter().zip(&mut grad) {
        for (w, g) in w_row[..dim].iter().zip(&mut g_row[..dim]) {
            loss += 0.5 * lambda * w * w;
            *g += lambda * w;
        }
    }
    (loss, grad)
}

fn grad_inf_norm(grad: &[Vec<f64>]) -> f64 {
    grad.iter()
        .flat_map(|row| row.iter())
        .map(|g| g.abs())
        .fold(0.0, f64::max)
}

/// Full-batch gradient descent with Armijo backtracking line search. The
/// loss never increases across accepted steps; training stops when the
/// gradient infinity-norm drops below `tol` or at `max_iter`.
pub fn train(
    training: &TrainingSet,
    l2_lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LogRegModel, ClassifierError> {
    let n_classes = training.label_vocab.len();
    if n_classes < 2 {
        return Err(ClassifierError::TooFewClasses(n_classes));
    }
    let dim = training.examples[0].0.len();
    let class_index = |label: &str| -> usize {
        training
            .label_vocab
            .iter()
            .position(|l| l == label)
            .expect("label in vocab")
    };
    let examples: Vec<(Vec<f64>, usize)> = training
        .examples
        .iter()
        .map(|(x, l)| (x.clone(), class_index(l)))
        .collect();

    let mut weights = vec![vec![0.0f64; dim + 1]; n_classes];
    let (mut loss, mut grad) = loss_and_gradient(&weights, &examples, l2_lambda);
    let mut step = 1.0f64;
    for _ in 0..max_iter {
        if !loss.is_finite() {
            return Err(ClassifierError::NonFiniteLoss);
        }
        if grad_inf_norm(&grad) < tol {
            break;
        }
        let grad_sq: f64 = grad
            .iter()
            .flat_map(|row| row.iter())
            .map(|g| g * g)
            .sum();
        // Armijo backtracking from a step that grows after easy accepts
        step = (step * 2.0).min(1e4);
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<Vec<f64>> = weights
                .iter()
                .zip(&grad)
                .map(|(w_row, g_row)| {
                    w_row
                        .iter()
                        .zip(g_row)
                        .map(|(w, g)| w - step * g)
                        .collect()
                })
                .collect();
            let (cand_loss, cand_grad) = loss_and_gradient(&candidate, &examples, l2_lambda);
            if cand_loss.is_finite() && cand_loss <= loss - 1e-4 * step * grad_sq {
                weights = candidate;
                loss = cand_loss;
                grad = cand_grad;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break; // no descent direction at machine precision
        }
    }
    Ok(LogRegModel {
        weights,
        label_vocab: training.label_vocab.clone(),
        l2_lambda,
    })
}

/// Softmax prediction. Probabilities sum to 1 within 1e-9; the label is the
/// argmax, ties resolving to the earlier vocab entry.
pub fn predict(
    model: &LogRegModel,
    vectors: &[Vec<f64>],
) -> Result<Vec<(String, Vec<f64>)>, ClassifierError> {
    let dim = model.dim();
    let mut out = Vec::with_capacity(vectors.len());
    for x in vectors {
        if x.len() != dim {
            return Err(ClassifierError::DimMismatch {
                model: dim,
                input: x.len(),
            });
        }
        let logits: Vec<f64> = model
            .weights
            .iter()
            .map(|w| {
                let mut z = w[dim];
                for (wi, xi) in w[..dim].iter().zip(x) {
                    z += wi * xi;
                }
                z
            })
            .collect();
        let probs = softmax_row(&logits);
        let mut best = 0usize;
        for (c, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = c;
            }
        }
        out.push((model.label_vocab[best].clone(), probs));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Rows = true class, columns = predicted class, in vocab order.
    pub confusion: Vec<Vec<usize>>,
    pub label_vocab: Vec<String>,
    pub fold_count: usize,
}

impl EvalReport {
    /// Plain-text table for terminal output.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "accuracy {:.4}  macro-F1 {:.4}  ({} folds)\n",
            self.accuracy, self.macro_f1, self.fold_count
        ));
        out.push_str(&format!(
            "{:<24} {:>9} {:>9} {:>9} {:>9}\n",
            "class", "precision", "recall", "f1", "support"
        ));
        for m in &self.per_class {
            out.push_str(&format!(
                "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
                m.label, m.precision, m.recall, m.f1, m.support
            ));
        }
        out
    }
}

/// Score predictions against gold labels over a fixed vocab. Classes absent
/// from the data contribute an F1 of 0 to the macro average.
pub fn evaluate(
    gold: &[String],
    predicted: &[String],
    vocab: &[String],
    fold_count: usize,
) -> Result<EvalReport, ClassifierError> {
    if gold.len() != predicted.len() {
        return Err(ClassifierError::LengthMismatch {
            a: gold.len(),
            b: predicted.len(),
        });
    }
    let index = |label: &str| vocab.iter().position(|v| v == label);
    let k = vocab.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut correct = 0usize;
    for (g, p) in gold.iter().zip(predicted) {
        if g == p {
            correct += 1;
        }
        if let (Some(gi), Some(pi)) = (index(g), index(p)) {
            confusion[gi][pi] += 1;
        }
    }
    let mut per_class = Vec::with_capacity(k);
    let mut f1_sum = 0.0;
    for c in 0..k {
        let tp = confusion[c][c];
        let fp: usize = (0..k).filter(|&r| r != c).map(|r| confusion[r][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        f1_sum += f1;
        per_class.push(ClassMetrics {
            label: vocab[c].clone(),
            precision,
            recall,
            f1,
            support: confusion[c].iter().sum(),
        });
    }
    Ok(EvalReport {
        macro_f1: if k > 0 { f1_sum / k as f64 } else { 0.0 },
        accuracy: if gold.is_empty() {
            0.0
        } else {
            correct as f64 / gold.len() as f64
        },
        per_class,
        confusion,
        label_vocab: vocab.to_vec(),
        fold_count,
    })
}

/// Cohen's kappa: `(p_o - p_e) / (1 - p_e)` with chance agreement from the
/// marginal products. Two identical constant lists score 1.
pub fn cohens_kappa(a: &[String], b: &[String]) -> Result<f64, ClassifierError> {
    if a.len() != b.len() {
        return Err(ClassifierError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len() as f64;
    if a.is_empty() {
        return Err(ClassifierError::LengthMismatch { a: 0, b: 0 });
    }
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut labels: Vec<&String> = a.iter().chain(b.iter()).collect();
    labels.sort();
    labels.dedup();
    let expected: f64 = labels
        .iter()
        .map(|label| {
            let pa = a.iter().filter(|x| x == label).count() as f64 / n;
            let pb = b.iter().filter(|x| x == label).count() as f64 / n;
            pa * pb
        })
        .sum();
    if (1.0 - expected).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Stratified fold assignment: per class, a seeded shuffle dealt round-robin,
/// so fold class proportions deviate from the global ones by at most one
/// example.
pub fn stratified_folds(
    training: &TrainingSet,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, ClassifierError> {
    if k < 2 {
        return Err(ClassifierError::BadFoldCount(k));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; training.examples.len()];
    for label in &training.label_vocab {
        let mut members: Vec<usize> = training
            .examples
            .iter()
            .enumerate()
            .filter(|(_, (_, l))| l == label)
            .map(|(i, _)| i)
            .collect();
        for i in (1..members.len()).rev() {
            let j = rng.gen_range(0..=i);
            members.swap(i, j);
        }
        for (slot, &example) in members.iter().enumerate() {
            folds[example] = slot % k;
        }
    }
    Ok(folds)
}

/// Grid-search lambda by stratified k-fold cross-validation: best mean
/// macro-F1 wins, ties going to the larger lambda. The report pools the
/// held-out predictions of the winning lambda.
pub fn cross_validate(
    training: &TrainingSet,
    grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<(f64, EvalReport), ClassifierError> {
    if training.label_vocab.len() < 2 {
        return Err(ClassifierError::TooFewClasses(training.label_vocab.len()));
    }
    let folds = stratified_folds(training, k, seed)?;
    let mut best: Option<(f64, f64)> = None; // (mean macro f1, lambda)
    let mut best_pooled: Option<(Vec<String>, Vec<String>)> = None;

    for &lambda in grid {
        let mut fold_scores = Vec::with_capacity(k);
        let mut pooled_gold = Vec::new();
        let mut pooled_pred = Vec::new();
        for fold in 0..k {
            let train_examples: Vec<(Vec<f64>, String)> = training
                .examples
                .iter()
                .zip(&folds)
                .filter(|(_, &f)| f != fold)
                .map(|(e, _)| e.clone())
                .collect();
            let held_out: Vec<&(Vec<f64>, String)> = training
                .examples
                .iter()
                .zip(&folds)
                .filter(|(_, &f)| f == fold)
                .map(|(e, _)| e)
                .collect();
            if train_examples.is_empty() || held_out.is_empty() {
                return Err(ClassifierError::DegenerateFold(format!(
                    "fold {fold} of {k} is empty"
                )));
            }
            let fold_training = TrainingSet {
                examples: train_examples,
                threshold: training.threshold,
                label_vocab: training.label_vocab.clone(),
            };
            let model = train(&fold_training, lambda, 500, 1e-6)?;
            let vectors: Vec<Vec<f64>> = held_out.iter().map(|(x, _)| x.clone()).collect();
            let predictions = predict(&model, &vectors)?;
            let gold: Vec<String> = held_out.iter().map(|(_, l)| l.clone()).collect();
            let pred: Vec<String> = predictions.into_iter().map(|(l, _)| l).collect();
            let report = evaluate(&gold, &pred, &training.label_vocab, 1)?;
            fold_scores.push(report.macro_f1);
            pooled_gold.extend(gold);
            pooled_pred.extend(pred);
        }
        let mean: f64 = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        let better = match best {
            None => true,
            Some((best_score, best_lambda)) => {
                mean > best_score || (mean == best_score && lambda > best_lambda)
            }
        };
        if better {
            best = Some((mean, lambda));
            best_pooled = Some((pooled_gold, pooled_pred));
        }
    }
    let (_, best_lambda) = best.expect("non-empty grid");
    let (gold, pred) = best_pooled.expect("non-empty grid");
    let report = evaluate(&gold, &pred, &training.label_vocab, k)?;
    Ok((best_lambda, report))
}

/// Default lambda grid.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];
