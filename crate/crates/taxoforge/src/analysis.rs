//! Downstream analytics over an annotated corpus: spend/impression
//! aggregation by topic, top-funder breakdowns with moral splits, the
//! topic-by-foundation Pearson (phi) matrix, and PPMI association between
//! features and demographic cells.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{demographic_cells, Ad, Corpus, DemographicScheme};
use crate::taxonomy::MoralFoundation;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("empty weight table: no ad in the corpus carries {scheme} shares")]
    EmptyWeightTable { scheme: DemographicScheme },
    #[error("corpus has {ads} ads but {annotations} annotations")]
    AlignmentMismatch { ads: usize, annotations: usize },
    #[error("need at least 2 ads, got {0}")]
    TooFewAds(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Cluster,
    Classifier,
    Manual,
}

/// Per-ad annotation: topic, moral foundation, and where the label came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdAnnotation {
    pub ad_id: String,
    pub topic: String,
    pub moral_foundation: MoralFoundation,
    pub provenance: Provenance,
}

/// A corpus with one annotation per ad, aligned by index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub corpus: Corpus,
    pub annotations: Vec<AdAnnotation>,
}

impl AnnotatedCorpus {
    pub fn new(corpus: Corpus, annotations: Vec<AdAnnotation>) -> Result<Self, AnalysisError> {
        if corpus.ads.len() != annotations.len() {
            return Err(AnalysisError::AlignmentMismatch {
                ads: corpus.ads.len(),
                annotations: annotations.len(),
            });
        }
        Ok(AnnotatedCorpus {
            corpus,
            annotations,
        })
    }

    pub fn len(&self) -> usize {
        self.corpus.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.ads.is_empty()
    }

    fn pairs(&self) -> impl Iterator<Item = (&Ad, &AdAnnotation)> {
        self.corpus.ads.iter().zip(&self.annotations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Ppmi,
    Pearson,
}

/// Labeled real matrix; `zero_variance` flags Pearson entries that were
/// undefined and reported as 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssociationMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub kind: MatrixKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_variance: Vec<(usize, usize)>,
}

impl AssociationMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.row_labels.iter().position(|l| l == row)?;
        let c = self.col_labels.iter().position(|l| l == col)?;
        Some(self.values[r][c])
    }

    /// CSV with a fixed column order and 6-decimal fixed-point values.
    /// Byte-identical for identical inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for col in &self.col_labels {
            out.push(',');
            out.push_str(&csv_escape(col));
        }
        out.push('\n');
        for (row_label, row) in self.row_labels.iter().zip(&self.values) {
            out.push_str(&csv_escape(row_label));
            for value in row {
                out.push_str(&format!(",{value:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

// ---------------------------------------------------------------------------
// Spend and funder reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicSpendRow {
    pub topic: String,
    pub mean_spend: f64,
    pub mean_impressions: f64,
    pub ad_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicSpendReport {
    pub rows: Vec<TopicSpendRow>,
    /// Taxonomy topics with zero ads, noted rather than silently dropped.
    pub omitted_topics: Vec<String>,
}

impl TopicSpendReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,mean_spend,mean_impressions,ad_count\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                csv_escape(&row.topic),
                row.mean_spend,
                row.mean_impressions,
                row.ad_count
            ));
        }
        out
    }
}

/// Mean spend/impression midpoints per topic, sorted by topic. Topics from
/// `taxonomy` that received no ads are listed in `omitted_topics`.
pub fn topic_spend_report(ac: &AnnotatedCorpus, taxonomy: &[String]) -> TopicSpendReport {
    let mut groups: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for (ad, note) in ac.pairs() {
        let entry = groups.entry(&note.topic).or_insert((0.0, 0.0, 0));
        entry.0 += ad.spend_midpoint();
        entry.1 += ad.impressions_midpoint();
        entry.2 += 1;
    }
    let rows = groups
        .iter()
        .map(|(topic, (spend, impressions, count))| TopicSpendRow {
            topic: topic.to_string(),
            mean_spend: spend / *count as f64,
            mean_impressions: impressions / *count as f64,
            ad_count: *count,
        })
        .collect();
    let omitted_topics = taxonomy
        .iter()
        .filter(|t| !groups.contains_key(t.as_str()))
        .cloned()
        .collect();
    TopicSpendReport {
        rows,
        omitted_topics,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunderRow {
    pub funding_entity: String,
    pub total_spend: f64,
    /// Spend split by moral foundation; sums to `total_spend`.
    pub by_foundation: Vec<(MoralFoundation, f64)>,
}

/// Top-k funding entities by total spend midpoint for one topic, descending,
/// ties broken by entity name.
pub fn top_funders(
    ac: &AnnotatedCorpus,
    topic: &str,
    k: usize,
) -> Result<Vec<FunderRow>, AnalysisError> {
    let mut totals: BTreeMap<&str, (f64, BTreeMap<MoralFoundation, f64>)> = BTreeMap::new();
    let mut seen_topic = false;
    for (ad, note) in ac.pairs() {
        if note.topic != topic {
            continue;
        }
        seen_topic = true;
        let entry = totals
            .entry(ad.funding_entity.as_str())
            .or_insert((0.0, BTreeMap::new()));
        let spend = ad.spend_midpoint();
        entry.0 += spend;
        *entry.1.entry(note.moral_foundation).or_insert(0.0) += spend;
    }
    if !seen_topic {
        return Err(AnalysisError::UnknownTopic(topic.to_string()));
    }
    let mut rows: Vec<FunderRow> = totals
        .into_iter()
        .map(|(entity, (total, split))| FunderRow {
            funding_entity: entity.to_string(),
            total_spend: total,
            by_foundation: split.into_iter().collect(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.total_spend
            .partial_cmp(&a.total_spend)
            .expect("finite spend")
            .then_with(|| a.funding_entity.cmp(&b.funding_entity))
    });
    rows.truncate(k);
    Ok(rows)
}

pub fn funders_to_csv(rows: &[FunderRow]) -> String {
    let mut out = String::from("funding_entity,total_spend");
    for f in MoralFoundation::ALL {
        out.push(',');
        out.push_str(&f.display_name().to_lowercase().replace('/', "_"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&csv_escape(&row.funding_entity));
        out.push_str(&format!(",{:.6}", row.total_spend));
        for f in MoralFoundation::ALL {
            let v = row
                .by_foundation
                .iter()
                .find(|(g, _)| *g == f)
                .map(|(_, v)| *v)
                .unwrap_or(0.0);
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Pearson (phi) correlation between topic and foundation indicators
// ---------------------------------------------------------------------------

/// Pearson correlation between per-ad topic indicators and moral-foundation
/// indicators. Binary indicators make each entry the phi coefficient of the
/// corresponding 2x2 table. Zero-variance entries are 0, flagged.
pub fn topic_mf_correlation(ac: &AnnotatedCorpus) -> Result<AssociationMatrix, AnalysisError> {
    if ac.len() < 2 {
        return Err(AnalysisError::TooFewAds(ac.len()));
    }
    let topics: Vec<String> = ac
        .annotations
        .iter()
        .map(|a| a.topic.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = ac.len() as f64;
    let mut values = Vec::with_capacity(topics.len());
    let mut zero_variance = Vec::new();
    for (r, topic) in topics.iter().enumerate() {
        let x: Vec<f64> = ac
            .annotations
            .iter()
            .map(|a| if &a.topic == topic { 1.0 } else { 0.0 })
            .collect();
        let mut row = Vec::with_capacity(MoralFoundation::ALL.len());
        for (c, foundation) in MoralFoundation::ALL.iter().enumerate() {
            let y: Vec<f64> = ac
                .annotations
                .iter()
                .map(|a| if a.moral_foundation == *foundation { 1.0 } else { 0.0 })
                .collect();
            let sum_x: f64 = x.iter().sum();
            let sum_y: f64 = y.iter().sum();
            let sum_xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let var_x = n * sum_x - sum_x * sum_x;
            let var_y = n * sum_y - sum_y * sum_y;
            if var_x <= 0.0 || var_y <= 0.0 {
                zero_variance.push((r, c));
                row.push(0.0);
            } else {
                row.push((n * sum_xy - sum_x * sum_y) / (var_x * var_y).sqrt());
            }
        }
        values.push(row);
    }
    Ok(AssociationMatrix {
        row_labels: topics,
        col_labels: MoralFoundation::ALL
            .iter()
            .map(|f| f.display_name().to_string())
            .collect(),
        values,
        kind: MatrixKind::Pearson,
        zero_variance,
    })
}

// ---------------------------------------------------------------------------
// PPMI between features and demographic cells
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Word,
    Topic,
    Moral,
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "word" => Ok(FeatureKind::Word),
            "topic" => Ok(FeatureKind::Topic),
            "moral" => Ok(FeatureKind::Moral),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Cell weight = impressions midpoint x share product (the default).
    Impressions,
    /// Sensitivity check: each ad counts once, split by shares only.
    PerAd,
}

/// Positive pointwise mutual information between ad features and demographic
/// cells: `max(0, ln((c_fd + s) N / ((c_f + s)(c_d + s))))` with `N` the
/// smoothed grand total. Ads missing the scheme's share families are
/// skipped; rows with a zero marginal are dropped.
pub fn ppmi(
    ac: &AnnotatedCorpus,
    feature_kind: FeatureKind,
    scheme: DemographicScheme,
    smoothing: f64,
    weight_mode: WeightMode,
    stopwords: &HashSet<String>,
) -> Result<AssociationMatrix, AnalysisError> {
    let mut joint: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (ad, note) in ac.pairs() {
        let cells = match demographic_cells(ad, scheme) {
            Ok(cells) => cells,
            Err(_) => continue, // shares not reported for this ad
        };
        let scale = match weight_mode {
            WeightMode::Impressions => 1.0,
            WeightMode::PerAd => {
                let midpoint = ad.impressions_midpoint();
                if midpoint > 0.0 {
                    1.0 / midpoint
                } else {
                    1.0
                }
            }
        };
        let features: Vec<String> = match feature_kind {
            FeatureKind::Word => tokenize(&ad.body, stopwords)
                .into_iter()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            FeatureKind::Topic => vec![note.topic.clone()],
            FeatureKind::Moral => vec![note.moral_foundation.display_name().to_string()],
        };
        for (cell, weight) in &cells {
            if *weight == 0.0 {
                continue;
            }
            for feature in &features {
                *joint
                    .entry((feature.clone(), cell.clone()))
                    .or_insert(0.0) += weight * scale;
            }
        }
    }
    if joint.is_empty() {
        return Err(AnalysisError::EmptyWeightTable { scheme });
    }

    let rows: Vec<String> = joint
        .keys()
        .map(|(f, _)| f.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cols: Vec<String> = joint
        .keys()
        .map(|(_, d)| d.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut row_marginal: BTreeMap<&str, f64> = BTreeMap::new();
    let mut col_marginal: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ((f, d), w) in &joint {
        *row_marginal.entry(f.as_str()).or_insert(0.0) += w;
        *col_marginal.entry(d.as_str()).or_insert(0.0) += w;
        total += w;
    }
    let kept_rows: Vec<String> = rows
        .into_iter()
        .filter(|f| row_marginal.get(f.as_str()).copied().unwrap_or(0.0) > 0.0)
        .collect();
    let smoothed_total = total + smoothing * (kept_rows.len() * cols.len()) as f64;

    let values: Vec<Vec<f64>> = kept_rows
        .iter()
        .map(|f| {
            cols.iter()
                .map(|d| {
                    let c_fd = joint.get(&(f.clone(), d.clone())).copied().unwrap_or(0.0);
                    let c_f = row_marginal[f.as_str()] + smoothing;
                    let c_d = col_marginal[d.as_str()] + smoothing;
                    let numerator = (c_fd + smoothing) * smoothed_total;
                    if numerator <= 0.0 || c_f <= 0.0 || c_d <= 0.0 {
                        return 0.0;
                    }
                    (numerator / (c_f * c_d)).ln().max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(AssociationMatrix {
        row_labels: kept_rows,
        col_labels: cols,
        values,
        kind: MatrixKind::Ppmi,
        zero_variance: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Unicode-aware word tokenization: lowercase, split on non-alphanumeric,
/// drop tokens under 2 characters and stopwords. Returns the multiset.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !stopwords.contains(*t))
        .map(str::to_string)
        .collect()
}

/// Compact English stopword list applied by default; configurable upstream.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "did", "do", "does", "for",
    "from", "had", "has", "have", "he", "her", "his", "if", "in", "into", "is", "it", "its",
    "me", "my", "no", "not", "of", "on", "or", "our", "she", "so", "than", "that", "the",
    "their", "them", "then", "these", "they", "this", "those", "to", "up", "us", "was", "we",
    "were", "what", "when", "which", "who", "will", "with", "you", "your",
];

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}
