//! End-to-end and stepwise pipeline orchestration: run configuration, stage
//! execution with hash-based caching, the run manifest, and the output-dir
//! lock. Every stage reads its inputs from disk and writes its artifacts
//! back, so a stepwise run and a full run produce identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    default_stopwords, funders_to_csv, ppmi, topic_mf_correlation, topic_spend_report,
    AdAnnotation, AnnotatedCorpus, FeatureKind, Provenance, WeightMode,
};
use crate::classifier::{
    build_training_set, cross_validate, predict, train, EvalReport, LogRegModel, TrainingSet,
};
use crate::clustering::{hdbscan, ClusterModel, NOISE};
use crate::corpus::{Ad, Corpus, CorpusFormat, DemographicScheme};
use crate::embedding::{
    cache_key, dedup, embed_corpus, hex, load_cached, DedupRemoval, EmbeddedCorpus,
    EmbeddingProvider, HttpEmbedder, MockEmbedder,
};
use crate::llm::{HttpBackend, LlmGateway, ReplayBackend, ScriptedBackend, Transcript};
use crate::reduction::{pca_reduce, umap_reduce, ReducedMatrix, UmapParams};
use crate::taxonomy::{
    annotate_topics, classify_moral, summarize, synthesize, ClusterAnnotation,
    ClusterRepresentatives, MoralFoundation, PromptConfig, SynthesisEvent, Taxonomy,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("missing upstream artifact `{missing}` for stage {stage}; run `{run_first}` first")]
    MissingUpstream {
        stage: &'static str,
        missing: String,
        run_first: &'static str,
    },
    #[error("output directory is locked by another run ({0})")]
    Locked(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// CLI contract: 2 config error, 3 stage failure, 4 missing upstream.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingUpstream { .. } => 4,
            _ => 3,
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingProviderConfig {
    Mock { dim: usize },
    Http { model: String },
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig::Mock { dim: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmBackendConfig {
    Scripted { path: PathBuf },
    Replay { path: PathBuf },
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMethodConfig {
    Umap,
    Pca,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionConfig {
    #[serde(default = "default_reduction_method")]
    pub method: ReductionMethodConfig,
    #[serde(default = "default_n_neighbors")]
    pub n_neighbors: usize,
    #[serde(default = "default_n_components")]
    pub n_components: usize,
    #[serde(default)]
    pub min_dist: f64,
    #[serde(default = "default_n_epochs")]
    pub n_epochs: usize,
}

fn default_reduction_method() -> ReductionMethodConfig {
    ReductionMethodConfig::Umap
}
fn default_n_neighbors() -> usize {
    15
}
fn default_n_components() -> usize {
    5
}
fn default_n_epochs() -> usize {
    200
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            method: default_reduction_method(),
            n_neighbors: default_n_neighbors(),
            n_components: default_n_components(),
            min_dist: 0.0,
            n_epochs: default_n_epochs(),
        }
    }
}

/// Full run configuration. File values load from TOML; every field has a
/// default matching the reference pipeline settings, and the CLI can
/// override any of the common ones (flag > file > default).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    #[serde(default = "default_format")]
    pub corpus_format: CorpusFormat,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub embedding: EmbeddingProviderConfig,
    #[serde(default = "default_batch_size")]
    pub embed_batch_size: usize,
    #[serde(default = "default_parallelism")]
    pub embed_parallelism: usize,
    #[serde(default = "default_dedup_threshold")]
    pub dedup_threshold: f64,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default = "default_min_cluster_size")]
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    #[serde(default = "default_representatives_k")]
    pub representatives_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmBackendConfig>,
    /// Optional seed labels for taxonomy synthesis.
    #[serde(default)]
    pub seed_labels: Vec<String>,
    #[serde(default = "default_ads_char_budget")]
    pub ads_char_budget: usize,
    #[serde(default = "default_training_threshold")]
    pub training_threshold: f64,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_ppmi_schemes")]
    pub ppmi_schemes: Vec<DemographicScheme>,
    #[serde(default = "default_ppmi_feature")]
    pub ppmi_feature: FeatureKind,
    #[serde(default = "default_ppmi_smoothing")]
    pub ppmi_smoothing: f64,
    #[serde(default = "default_true")]
    pub ppmi_impression_weighted: bool,
    #[serde(default = "default_top_funders_k")]
    pub top_funders_k: usize,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::Jsonl
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("taxoforge_out")
}
fn default_batch_size() -> usize {
    64
}
fn default_parallelism() -> usize {
    4
}
fn default_dedup_threshold() -> f64 {
    0.95
}
fn default_min_cluster_size() -> usize {
    15
}
fn default_representatives_k() -> usize {
    5
}
fn default_ads_char_budget() -> usize {
    4000
}
fn default_training_threshold() -> f64 {
    0.98
}
fn default_lambda_grid() -> Vec<f64> {
    crate::classifier::DEFAULT_LAMBDA_GRID.to_vec()
}
fn default_cv_folds() -> usize {
    5
}
fn default_ppmi_schemes() -> Vec<DemographicScheme> {
    vec![
        DemographicScheme::State,
        DemographicScheme::Gender,
        DemographicScheme::Age,
        DemographicScheme::StateGender,
        DemographicScheme::StateAge,
    ]
}
fn default_ppmi_feature() -> FeatureKind {
    FeatureKind::Topic
}
fn default_ppmi_smoothing() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_top_funders_k() -> usize {
    5
}

impl RunConfig {
    pub fn new(corpus_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus_path: corpus_path.into(),
            corpus_format: default_format(),
            out_dir: default_out_dir(),
            seed: 0,
            embedding: EmbeddingProviderConfig::default(),
            embed_batch_size: default_batch_size(),
            embed_parallelism: default_parallelism(),
            dedup_threshold: default_dedup_threshold(),
            reduction: ReductionConfig::default(),
            min_cluster_size: default_min_cluster_size(),
            min_samples: None,
            representatives_k: default_representatives_k(),
            llm: None,
            seed_labels: Vec::new(),
            ads_char_budget: default_ads_char_budget(),
            training_threshold: default_training_threshold(),
            lambda_grid: default_lambda_grid(),
            cv_folds: default_cv_folds(),
            ppmi_schemes: default_ppmi_schemes(),
            ppmi_feature: default_ppmi_feature(),
            ppmi_smoothing: default_ppmi_smoothing(),
            ppmi_impression_weighted: true,
            top_funders_k: default_top_funders_k(),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |message: String| Err(PipelineError::Config(message));
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return bad(format!(
                "dedup_threshold {} outside (0, 1]",
                self.dedup_threshold
            ));
        }
        if !(self.training_threshold > 0.0 && self.training_threshold <= 1.0) {
            return bad(format!(
                "training_threshold {} outside (0, 1]",
                self.training_threshold
            ));
        }
        if self.min_cluster_size < 2 {
            return bad(format!(
                "min_cluster_size {} must be >= 2",
                self.min_cluster_size
            ));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds {} must be >= 2", self.cv_folds));
        }
        if self.embed_batch_size == 0 {
            return bad("embed_batch_size must be >= 1".to_string());
        }
        Ok(())
    }
}

/// Per-stage seed derived from the global seed and the stage name, so
/// stages can be rerun independently with stable randomness.
pub fn stage_seed(global: u64, stage: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash ^ global
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Embed,
    Dedup,
    Reduce,
    Cluster,
    Synthesize,
    Annotate,
    Moral,
    Train,
    Predict,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Ingest,
        Stage::Embed,
        Stage::Dedup,
        Stage::Reduce,
        Stage::Cluster,
        Stage::Synthesize,
        Stage::Annotate,
        Stage::Moral,
        Stage::Train,
        Stage::Predict,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Dedup => "dedup",
            Stage::Reduce => "reduce",
            Stage::Cluster => "cluster",
            Stage::Synthesize => "synthesize",
            Stage::Annotate => "annotate",
            Stage::Moral => "moral",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }

    /// Upstream artifacts this stage reads, with the stage that produces each.
    fn dependencies(self) -> &'static [(&'static str, Stage)] {
        match self {
            Stage::Ingest => &[],
            Stage::Embed => &[("corpus.jsonl", Stage::Ingest)],
            Stage::Dedup => &[
                ("corpus.jsonl", Stage::Ingest),
                ("embeddings.json", Stage::Embed),
            ],
            Stage::Reduce => &[
                ("embeddings.json", Stage::Embed),
                ("dedup.json", Stage::Dedup),
            ],
            Stage::Cluster => &[("reduced.json", Stage::Reduce)],
            Stage::Synthesize => &[
                ("cluster_model.json", Stage::Cluster),
                ("corpus_dedup.jsonl", Stage::Dedup),
            ],
            Stage::Annotate => &[
                ("taxonomy.json", Stage::Synthesize),
                ("cluster_model.json", Stage::Cluster),
                ("corpus_dedup.jsonl", Stage::Dedup),
            ],
            Stage::Moral => &[
                ("cluster_topics.json", Stage::Annotate),
                ("cluster_model.json", Stage::Cluster),
                ("corpus_dedup.jsonl", Stage::Dedup),
            ],
            Stage::Train => &[
                ("cluster_model.json", Stage::Cluster),
                ("cluster_topics.json", Stage::Annotate),
                ("embeddings.json", Stage::Embed),
                ("dedup.json", Stage::Dedup),
            ],
            Stage::Predict => &[
                ("model.json", Stage::Train),
                ("cluster_annotations.json", Stage::Moral),
                ("cluster_model.json", Stage::Cluster),
                ("embeddings.json", Stage::Embed),
                ("dedup.json", Stage::Dedup),
                ("corpus_dedup.jsonl", Stage::Dedup),
            ],
            Stage::Analyze => &[
                ("annotated_corpus.jsonl", Stage::Predict),
                ("corpus_dedup.jsonl", Stage::Dedup),
                ("taxonomy.json", Stage::Synthesize),
            ],
            Stage::Report => &[
                ("annotated_corpus.jsonl", Stage::Predict),
                ("taxonomy.json", Stage::Synthesize),
                ("cluster_model.json", Stage::Cluster),
                ("training_report.json", Stage::Train),
            ],
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub input_hash: String,
    pub outputs: Vec<ArtifactRecord>,
    pub duration_ms: u64,
    pub cache_hit: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineState {
    pub stages: BTreeMap<String, StageRecord>,
}

/// Hash-complete record of one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub global_seed: u64,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub cluster_processing_order: Vec<i32>,
    pub transcripts: Vec<String>,
    pub started_at: i64,
    pub finished_at: i64,
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

// ---------------------------------------------------------------------------
// Serialized artifact shapes
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EmbeddingsArtifact {
    provider_id: String,
    dim: usize,
    count: usize,
    cache_key: String,
}

#[derive(Serialize, Deserialize)]
struct DedupArtifact {
    threshold: f64,
    kept_indices: Vec<usize>,
    removed: Vec<DedupRemoval>,
    zero_norm_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyArtifact {
    taxonomy: Taxonomy,
    events: Vec<SynthesisEvent>,
}

#[derive(Serialize, Deserialize)]
struct ClusterAnnotationsArtifact {
    annotations: Vec<ClusterAnnotation>,
    trimmed_summaries: Vec<i32>,
}

#[derive(Serialize, Deserialize)]
struct TrainingReportArtifact {
    class_histogram: Vec<(String, usize)>,
    best_lambda: f64,
    cv_report: EvalReport,
    training_examples: usize,
}

#[derive(Serialize, Deserialize)]
struct GoldRecord {
    ad_id: String,
    topic: String,
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

pub struct Pipeline {
    config: RunConfig,
    state: PipelineState,
    /// Optional gold-labels file consumed by the report stage.
    pub gold_path: Option<PathBuf>,
    _lock: LockGuard,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let out_dir = config.out_dir.clone();
        fs::create_dir_all(&out_dir).map_err(|source| PipelineError::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        let lock_path = out_dir.join(".lock");
        let lock = match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock_path)
        {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                LockGuard { path: lock_path }
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(PipelineError::Locked(lock_path.display().to_string()));
            }
            Err(source) => {
                return Err(PipelineError::Io {
                    path: lock_path.display().to_string(),
                    source,
                })
            }
        };
        let state_path = out_dir.join("pipeline_state.json");
        let state = if state_path.exists() {
            serde_json::from_slice(&fs::read(&state_path).map_err(|source| PipelineError::Io {
                path: state_path.display().to_string(),
                source,
            })?)
            .unwrap_or_default()
        } else {
            PipelineState::default()
        };
        Ok(Pipeline {
            config,
            state,
            gold_path: None,
            _lock: lock,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn read_bytes(&self, name: &str) -> Result<Vec<u8>, PipelineError> {
        let path = self.out_path(name);
        fs::read(&path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, PipelineError> {
        let path = self.out_path(name);
        fs::write(&path, bytes).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    }

    fn read_json<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<T, PipelineError> {
        let bytes = self.read_bytes(name)?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Stage {
            stage: "artifact",
            message: format!("{name} is corrupt: {e}"),
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, PipelineError> {
        let json = serde_json::to_vec_pretty(value).expect("artifact serializes");
        self.write_bytes(name, &json)
    }

    fn save_state(&self) -> Result<(), PipelineError> {
        let json = serde_json::to_vec_pretty(&self.state).expect("state serializes");
        self.write_bytes("pipeline_state.json", &json)?;
        Ok(())
    }

    fn file_sha256(&self, name: &str) -> Result<String, PipelineError> {
        let bytes = self.read_bytes(name)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        Ok(hex(&hasher.finalize()))
    }

    fn input_hash(&self, stage: Stage) -> Result<String, PipelineError> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.config).expect("config serializes"));
        hasher.update(stage.name().as_bytes());
        for (artifact, _) in stage.dependencies() {
            hasher.update(artifact.as_bytes());
            hasher.update(self.file_sha256(artifact)?.as_bytes());
        }
        if stage == Stage::Ingest {
            // ingest has no upstream artifacts; its input is the source file
            let bytes = fs::read(&self.config.corpus_path).map_err(|source| PipelineError::Io {
                path: self.config.corpus_path.display().to_string(),
                source,
            })?;
            hasher.update(&bytes);
        }
        if stage == Stage::Report {
            if let Some(gold) = &self.gold_path {
                hasher.update(b"gold");
                let bytes = fs::read(gold).map_err(|source| PipelineError::Io {
                    path: gold.display().to_string(),
                    source,
                })?;
                hasher.update(&bytes);
            }
        }
        Ok(hex(&hasher.finalize()))
    }

    fn check_dependencies(&self, stage: Stage) -> Result<(), PipelineError> {
        for (artifact, producer) in stage.dependencies() {
            if !self.out_path(artifact).exists() {
                return Err(PipelineError::MissingUpstream {
                    stage: stage.name(),
                    missing: artifact.to_string(),
                    run_first: producer.name(),
                });
            }
        }
        Ok(())
    }

    /// Run one stage, reusing recorded outputs when the inputs are unchanged.
    pub fn run_stage(&mut self, stage: Stage) -> Result<StageRecord, PipelineError> {
        self.check_dependencies(stage)?;
        let input_hash = self.input_hash(stage)?;
        if let Some(record) = self.state.stages.get(stage.name()) {
            if record.input_hash == input_hash {
                let intact = record.outputs.iter().all(|artifact| {
                    self.file_sha256(&artifact.path)
                        .map(|h| h == artifact.sha256)
                        .unwrap_or(false)
                });
                if intact {
                    let mut cached = record.clone();
                    cached.cache_hit = true;
                    self.state
                        .stages
                        .insert(stage.name().to_string(), cached.clone());
                    self.save_state()?;
                    return Ok(cached);
                }
            }
        }
        let started = Instant::now();
        let outputs = self.execute(stage)?;
        let mut records = Vec::with_capacity(outputs.len());
        for name in outputs {
            records.push(ArtifactRecord {
                sha256: self.file_sha256(&name)?,
                path: name,
            });
        }
        let record = StageRecord {
            stage: stage.name().to_string(),
            input_hash,
            outputs: records,
            duration_ms: started.elapsed().as_millis() as u64,
            cache_hit: false,
        };
        self.state
            .stages
            .insert(stage.name().to_string(), record.clone());
        self.save_state()?;
        Ok(record)
    }

    /// Run every stage in order and write the manifest.
    pub fn run_all(&mut self) -> Result<RunManifest, PipelineError> {
        let started_at = chrono::Utc::now().timestamp();
        let mut stages = Vec::with_capacity(Stage::ALL.len());
        for stage in Stage::ALL {
            stages.push(self.run_stage(stage)?);
        }
        let cluster_processing_order = self
            .read_json::<ClusterModel>("cluster_model.json")
            .map(|m| {
                let mut ids: Vec<i32> = m.clusters.iter().map(|c| c.cluster_id).collect();
                ids.sort_unstable();
                ids
            })
            .unwrap_or_default();
        let manifest = RunManifest {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            global_seed: self.config.seed,
            config: self.config.clone(),
            stages,
            cluster_processing_order,
            transcripts: vec![
                "transcript_synthesize.jsonl".to_string(),
                "transcript_annotate.jsonl".to_string(),
                "transcript_moral.jsonl".to_string(),
            ],
            started_at,
            finished_at: chrono::Utc::now().timestamp(),
        };
        self.write_json("run_manifest.json", &manifest)?;
        Ok(manifest)
    }

    // -- stage bodies -------------------------------------------------------

    fn execute(&self, stage: Stage) -> Result<Vec<String>, PipelineError> {
        match stage {
            Stage::Ingest => self.stage_ingest(),
            Stage::Embed => self.stage_embed(),
            Stage::Dedup => self.stage_dedup(),
            Stage::Reduce => self.stage_reduce(),
            Stage::Cluster => self.stage_cluster(),
            Stage::Synthesize => self.stage_synthesize(),
            Stage::Annotate => self.stage_annotate(),
            Stage::Moral => self.stage_moral(),
            Stage::Train => self.stage_train(),
            Stage::Predict => self.stage_predict(),
            Stage::Analyze => self.stage_analyze(),
            Stage::Report => self.stage_report(),
        }
    }

    fn load_ads(&self, name: &str) -> Result<Vec<Ad>, PipelineError> {
        let bytes = self.read_bytes(name)?;
        let text = String::from_utf8_lossy(&bytes);
        let mut ads = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            ads.push(
                serde_json::from_str(line).map_err(|e| PipelineError::Stage {
                    stage: "artifact",
                    message: format!("{name} line unparseable: {e}"),
                })?,
            );
        }
        Ok(ads)
    }

    fn corpus_from(&self, name: &str) -> Result<Corpus, PipelineError> {
        Ok(Corpus {
            ads: self.load_ads(name)?,
            source_path: name.to_string(),
            ingested_at: 0,
        })
    }

    fn load_embedded(&self) -> Result<EmbeddedCorpus, PipelineError> {
        let artifact: EmbeddingsArtifact = self.read_json("embeddings.json")?;
        load_cached(&self.out_path("cache"), &artifact.cache_key).map_err(|e| {
            PipelineError::Stage {
                stage: "embed",
                message: format!("embedding cache unreadable: {e}"),
            }
        })
    }

    fn stage_ingest(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "ingest",
            message,
        };
        let outcome = crate::corpus::ingest(&self.config.corpus_path, self.config.corpus_format)
            .map_err(|e| err(e.to_string()))?;
        self.write_bytes("corpus.jsonl", outcome.corpus.to_jsonl().as_bytes())?;
        let mut rejects = String::new();
        for record in &outcome.rejects {
            rejects.push_str(&serde_json::to_string(record).expect("reject serializes"));
            rejects.push('\n');
        }
        self.write_bytes("rejects.jsonl", rejects.as_bytes())?;
        self.write_json("ingest_warnings.json", &outcome.warnings)?;
        Ok(vec![
            "corpus.jsonl".to_string(),
            "rejects.jsonl".to_string(),
            "ingest_warnings.json".to_string(),
        ])
    }

    fn make_provider(&self) -> Result<Box<dyn EmbeddingProvider>, PipelineError> {
        match &self.config.embedding {
            EmbeddingProviderConfig::Mock { dim } => Ok(Box::new(MockEmbedder::new(
                *dim,
                stage_seed(self.config.seed, "embed"),
            ))),
            EmbeddingProviderConfig::Http { model } => {
                HttpEmbedder::from_env(model).map(|p| Box::new(p) as Box<dyn EmbeddingProvider>).ok_or_else(|| {
                    PipelineError::Config(
                        "http embedding provider needs TAXOFORGE_EMBED_URL".to_string(),
                    )
                })
            }
        }
    }

    fn stage_embed(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "embed",
            message,
        };
        let corpus = self.corpus_from("corpus.jsonl")?;
        let provider = self.make_provider()?;
        let cache_dir = self.out_path("cache");
        let embedded = embed_corpus(
            &corpus,
            provider.as_ref(),
            self.config.embed_batch_size,
            self.config.embed_parallelism,
            Some(&cache_dir),
        )
        .map_err(|e| err(e.to_string()))?;
        let texts: Vec<String> = corpus.ads.iter().map(|ad| ad.body.clone()).collect();
        let key = cache_key(&embedded.provider_id, &texts);
        let artifact = EmbeddingsArtifact {
            provider_id: embedded.provider_id.clone(),
            dim: embedded.dim,
            count: embedded.len(),
            cache_key: key.clone(),
        };
        self.write_json("embeddings.json", &artifact)?;
        // the cache pair counts as stage output so deleting it invalidates
        // the cache-hit check and forces a recompute
        Ok(vec![
            "embeddings.json".to_string(),
            format!("cache/{key}.f32"),
            format!("cache/{key}.json"),
        ])
    }

    fn stage_dedup(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "dedup",
            message,
        };
        let corpus = self.corpus_from("corpus.jsonl")?;
        let embedded = self.load_embedded()?;
        let outcome = dedup(&embedded, self.config.dedup_threshold).map_err(|e| err(e.to_string()))?;
        let artifact = DedupArtifact {
            threshold: self.config.dedup_threshold,
            kept_indices: outcome.kept_indices.clone(),
            removed: outcome.removed,
            zero_norm_indices: outcome.zero_norm_indices,
        };
        self.write_json("dedup.json", &artifact)?;
        let kept = Corpus {
            ads: artifact
                .kept_indices
                .iter()
                .map(|&i| corpus.ads[i].clone())
                .collect(),
            source_path: String::new(),
            ingested_at: 0,
        };
        self.write_bytes("corpus_dedup.jsonl", kept.to_jsonl().as_bytes())?;
        Ok(vec!["dedup.json".to_string(), "corpus_dedup.jsonl".to_string()])
    }

    /// Kept-subset embeddings, L2-normalized into f64 rows for the
    /// geometric stages.
    fn kept_unit_rows(&self) -> Result<(Vec<Vec<f64>>, EmbeddedCorpus), PipelineError> {
        let embedded = self.load_embedded()?;
        let dedup_artifact: DedupArtifact = self.read_json("dedup.json")?;
        let rows: Vec<Vec<f64>> = dedup_artifact
            .kept_indices
            .iter()
            .map(|&i| {
                let vector = &embedded.vectors[i];
                vector
                    .unit()
                    .unwrap_or_else(|| vec![0.0; vector.dim()])
            })
            .collect();
        let kept = EmbeddedCorpus {
            ad_ids: dedup_artifact
                .kept_indices
                .iter()
                .map(|&i| embedded.ad_ids[i].clone())
                .collect(),
            vectors: dedup_artifact
                .kept_indices
                .iter()
                .map(|&i| embedded.vectors[i].clone())
                .collect(),
            provider_id: embedded.provider_id.clone(),
            dim: embedded.dim,
        };
        Ok((rows, kept))
    }

    fn stage_reduce(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "reduce",
            message,
        };
        let (rows, _) = self.kept_unit_rows()?;
        let input_dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if self.config.reduction.n_components >= input_dim {
            return Err(err(format!(
                "n_components {} must be below the embedding dim {input_dim}",
                self.config.reduction.n_components
            )));
        }
        let reduced = match self.config.reduction.method {
            ReductionMethodConfig::Umap => {
                let params = UmapParams {
                    n_neighbors: self.config.reduction.n_neighbors,
                    n_components: self.config.reduction.n_components,
                    min_dist: self.config.reduction.min_dist,
                    n_epochs: self.config.reduction.n_epochs,
                    seed: stage_seed(self.config.seed, "reduce"),
                    ..UmapParams::default()
                };
                umap_reduce(&rows, &params).map_err(|e| err(e.to_string()))?
            }
            ReductionMethodConfig::Pca => {
                pca_reduce(&rows, self.config.reduction.n_components)
                    .map_err(|e| err(e.to_string()))?
            }
        };
        self.write_json("reduced.json", &reduced)?;
        Ok(vec!["reduced.json".to_string()])
    }

    fn stage_cluster(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "cluster",
            message,
        };
        let reduced: ReducedMatrix = self.read_json("reduced.json")?;
        let min_samples = self
            .config
            .min_samples
            .unwrap_or(self.config.min_cluster_size);
        let mut model = hdbscan(&reduced.rows, self.config.min_cluster_size, min_samples)
            .map_err(|e| err(e.to_string()))?;
        crate::clustering::attach_representatives(&mut model, self.config.representatives_k);
        self.write_json("cluster_model.json", &model)?;
        Ok(vec!["cluster_model.json".to_string()])
    }

    fn make_gateway(&self, stage: &'static str) -> Result<LlmGateway, PipelineError> {
        let backend = match &self.config.llm {
            None => {
                return Err(PipelineError::Stage {
                    stage,
                    message: "no LLM backend configured; set [llm] in the config or pass \
                              --llm-script"
                        .to_string(),
                })
            }
            Some(LlmBackendConfig::Scripted { path }) => Box::new(
                ScriptedBackend::from_file(path).map_err(|e| PipelineError::Stage {
                    stage,
                    message: e.to_string(),
                })?,
            ) as Box<dyn crate::llm::LlmBackend>,
            Some(LlmBackendConfig::Replay { path }) => {
                let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let transcript = Transcript::from_jsonl(&text).map_err(|e| {
                    PipelineError::Stage {
                        stage,
                        message: format!("replay transcript unparseable: {e}"),
                    }
                })?;
                Box::new(ReplayBackend::new(&transcript))
            }
            Some(LlmBackendConfig::Http) => Box::new(HttpBackend::from_env().ok_or_else(|| {
                PipelineError::Config(
                    "http llm backend needs TAXOFORGE_LLM_URL and TAXOFORGE_LLM_MODEL".to_string(),
                )
            })?),
        };
        Ok(LlmGateway::new(backend))
    }

    fn cluster_representatives(&self) -> Result<Vec<ClusterRepresentatives>, PipelineError> {
        let model: ClusterModel = self.read_json("cluster_model.json")?;
        let ads = self.load_ads("corpus_dedup.jsonl")?;
        let mut clusters = Vec::with_capacity(model.clusters.len());
        for info in &model.clusters {
            let texts: Vec<String> = info
                .representatives
                .iter()
                .map(|&i| {
                    let ad = &ads[i];
                    if ad.title.is_empty() {
                        ad.body.clone()
                    } else {
                        format!("{}\n{}", ad.title, ad.body)
                    }
                })
                .collect();
            clusters.push(ClusterRepresentatives {
                cluster_id: info.cluster_id,
                texts,
            });
        }
        clusters.sort_by_key(|c| c.cluster_id);
        Ok(clusters)
    }

    fn prompt_config(&self) -> PromptConfig {
        PromptConfig {
            ads_char_budget: self.config.ads_char_budget,
            ..PromptConfig::default()
        }
    }

    fn stage_synthesize(&self) -> Result<Vec<String>, PipelineError> {
        let clusters = self.cluster_representatives()?;
        if clusters.is_empty() {
            return Err(PipelineError::Stage {
                stage: "synthesize",
                message: "no clusters to synthesize from (all points were noise)".to_string(),
            });
        }
        let gateway = self.make_gateway("synthesize")?;
        let seeds = if self.config.seed_labels.is_empty() {
            None
        } else {
            Some(self.config.seed_labels.as_slice())
        };
        let outcome = synthesize(&clusters, &gateway, seeds, &self.prompt_config()).map_err(|e| {
            PipelineError::Stage {
                stage: "synthesize",
                message: e.to_string(),
            }
        })?;
        self.write_json(
            "taxonomy.json",
            &TaxonomyArtifact {
                taxonomy: outcome.taxonomy,
                events: outcome.events,
            },
        )?;
        self.write_bytes(
            "transcript_synthesize.jsonl",
            gateway.transcript().to_jsonl().as_bytes(),
        )?;
        Ok(vec![
            "taxonomy.json".to_string(),
            "transcript_synthesize.jsonl".to_string(),
        ])
    }

    fn stage_annotate(&self) -> Result<Vec<String>, PipelineError> {
        let clusters = self.cluster_representatives()?;
        let artifact: TaxonomyArtifact = self.read_json("taxonomy.json")?;
        let gateway = self.make_gateway("annotate")?;
        let topics = annotate_topics(&clusters, &artifact.taxonomy, &gateway, &self.prompt_config())
            .map_err(|e| PipelineError::Stage {
                stage: "annotate",
                message: e.to_string(),
            })?;
        self.write_json("cluster_topics.json", &topics)?;
        self.write_bytes(
            "transcript_annotate.jsonl",
            gateway.transcript().to_jsonl().as_bytes(),
        )?;
        Ok(vec![
            "cluster_topics.json".to_string(),
            "transcript_annotate.jsonl".to_string(),
        ])
    }

    fn stage_moral(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "moral",
            message,
        };
        let clusters = self.cluster_representatives()?;
        let topics: Vec<(i32, String)> = self.read_json("cluster_topics.json")?;
        let gateway = self.make_gateway("moral")?;
        let mut annotations = Vec::with_capacity(clusters.len());
        let mut trimmed_summaries = Vec::new();
        for cluster in &clusters {
            let topic = topics
                .iter()
                .find(|(id, _)| *id == cluster.cluster_id)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| err(format!("cluster {} has no topic", cluster.cluster_id)))?;
            let summary = summarize(cluster, &topic, &gateway, &self.prompt_config())
                .map_err(|e| err(e.to_string()))?;
            if summary.trimmed {
                trimmed_summaries.push(cluster.cluster_id);
            }
            let foundation = classify_moral(&summary.text, &topic, &gateway, cluster.cluster_id)
                .map_err(|e| err(e.to_string()))?;
            annotations.push(ClusterAnnotation {
                cluster_id: cluster.cluster_id,
                topic,
                summary: summary.text,
                moral_foundation: foundation,
            });
        }
        self.write_json(
            "cluster_annotations.json",
            &ClusterAnnotationsArtifact {
                annotations,
                trimmed_summaries,
            },
        )?;
        self.write_bytes(
            "transcript_moral.jsonl",
            gateway.transcript().to_jsonl().as_bytes(),
        )?;
        Ok(vec![
            "cluster_annotations.json".to_string(),
            "transcript_moral.jsonl".to_string(),
        ])
    }

    fn stage_train(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "train",
            message,
        };
        let model: ClusterModel = self.read_json("cluster_model.json")?;
        let topics: Vec<(i32, String)> = self.read_json("cluster_topics.json")?;
        let (_, kept) = self.kept_unit_rows()?;
        let training = build_training_set(&model, &topics, &kept, self.config.training_threshold)
            .map_err(|e| err(e.to_string()))?;
        let (best_lambda, cv_report) = cross_validate(
            &training,
            &self.config.lambda_grid,
            self.config.cv_folds.min(smallest_class(&training).max(2)),
            stage_seed(self.config.seed, "train"),
        )
        .map_err(|e| err(e.to_string()))?;
        let final_model = train(&training, best_lambda, 500, 1e-6).map_err(|e| err(e.to_string()))?;
        self.write_json("model.json", &final_model)?;
        self.write_json(
            "training_report.json",
            &TrainingReportArtifact {
                class_histogram: training.class_histogram(),
                best_lambda,
                cv_report,
                training_examples: training.examples.len(),
            },
        )?;
        Ok(vec![
            "model.json".to_string(),
            "training_report.json".to_string(),
        ])
    }

    fn stage_predict(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "predict",
            message,
        };
        let cluster_model: ClusterModel = self.read_json("cluster_model.json")?;
        let annotations: ClusterAnnotationsArtifact = self.read_json("cluster_annotations.json")?;
        let logreg: LogRegModel = self.read_json("model.json")?;
        let (_, kept) = self.kept_unit_rows()?;
        let ads = self.load_ads("corpus_dedup.jsonl")?;
        if ads.len() != cluster_model.labels.len() {
            return Err(err(format!(
                "cluster model covers {} points, corpus has {}",
                cluster_model.labels.len(),
                ads.len()
            )));
        }
        let annotation_for = |cluster_id: i32| {
            annotations
                .annotations
                .iter()
                .find(|a| a.cluster_id == cluster_id)
        };
        let mut lines = String::new();
        for (i, ad) in ads.iter().enumerate() {
            let label = cluster_model.labels[i];
            let note = if label != NOISE {
                let cluster = annotation_for(label)
                    .ok_or_else(|| err(format!("cluster {label} missing annotation")))?;
                AdAnnotation {
                    ad_id: ad.ad_id.clone(),
                    topic: cluster.topic.clone(),
                    moral_foundation: cluster.moral_foundation,
                    provenance: Provenance::Cluster,
                }
            } else {
                let features = crate::classifier::normalized_features(&kept.vectors[i].values);
                let prediction = predict(&logreg, &[features]).map_err(|e| err(e.to_string()))?;
                let topic = prediction[0].0.clone();
                AdAnnotation {
                    ad_id: ad.ad_id.clone(),
                    moral_foundation: majority_foundation(&annotations.annotations, &topic),
                    topic,
                    provenance: Provenance::Classifier,
                }
            };
            lines.push_str(&serde_json::to_string(&note).expect("annotation serializes"));
            lines.push('\n');
        }
        self.write_bytes("annotated_corpus.jsonl", lines.as_bytes())?;
        Ok(vec!["annotated_corpus.jsonl".to_string()])
    }

    fn annotated_corpus(&self) -> Result<AnnotatedCorpus, PipelineError> {
        let ads = self.load_ads("corpus_dedup.jsonl")?;
        let bytes = self.read_bytes("annotated_corpus.jsonl")?;
        let text = String::from_utf8_lossy(&bytes);
        let mut annotations = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            annotations.push(
                serde_json::from_str(line).map_err(|e| PipelineError::Stage {
                    stage: "artifact",
                    message: format!("annotated_corpus.jsonl unparseable: {e}"),
                })?,
            );
        }
        AnnotatedCorpus::new(
            Corpus {
                ads,
                source_path: String::new(),
                ingested_at: 0,
            },
            annotations,
        )
        .map_err(|e| PipelineError::Stage {
            stage: "analyze",
            message: e.to_string(),
        })
    }

    fn stage_analyze(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "analyze",
            message,
        };
        let ac = self.annotated_corpus()?;
        let taxonomy: TaxonomyArtifact = self.read_json("taxonomy.json")?;
        let mut outputs = Vec::new();

        let spend = topic_spend_report(&ac, &taxonomy.taxonomy.label_texts());
        self.write_bytes("topic_spend.csv", spend.to_csv().as_bytes())?;
        self.write_json("topic_spend.json", &spend)?;
        outputs.push("topic_spend.csv".to_string());
        outputs.push("topic_spend.json".to_string());

        let pearson = topic_mf_correlation(&ac).map_err(|e| err(e.to_string()))?;
        self.write_bytes("topic_mf_pearson.csv", pearson.to_csv().as_bytes())?;
        self.write_json("topic_mf_pearson.json", &pearson)?;
        outputs.push("topic_mf_pearson.csv".to_string());
        outputs.push("topic_mf_pearson.json".to_string());

        let mut funder_map: BTreeMap<String, Vec<crate::analysis::FunderRow>> = BTreeMap::new();
        for row in &spend.rows {
            let funders = crate::analysis::top_funders(&ac, &row.topic, self.config.top_funders_k)
                .map_err(|e| err(e.to_string()))?;
            let name = format!("top_funders_{}.csv", slug(&row.topic));
            self.write_bytes(&name, funders_to_csv(&funders).as_bytes())?;
            outputs.push(name);
            funder_map.insert(row.topic.clone(), funders);
        }
        self.write_json("top_funders.json", &funder_map)?;
        outputs.push("top_funders.json".to_string());

        let stopwords = default_stopwords();
        let weight_mode = if self.config.ppmi_impression_weighted {
            WeightMode::Impressions
        } else {
            WeightMode::PerAd
        };
        for scheme in &self.config.ppmi_schemes {
            let matrix = match ppmi(
                &ac,
                self.config.ppmi_feature,
                *scheme,
                self.config.ppmi_smoothing,
                weight_mode,
                &stopwords,
            ) {
                Ok(matrix) => matrix,
                Err(crate::analysis::AnalysisError::EmptyWeightTable { .. }) => continue,
                Err(e) => return Err(err(e.to_string())),
            };
            let csv_name = format!("ppmi_{scheme}.csv");
            self.write_bytes(&csv_name, matrix.to_csv().as_bytes())?;
            let json_name = format!("ppmi_{scheme}.json");
            self.write_json(&json_name, &matrix)?;
            outputs.push(csv_name);
            outputs.push(json_name);
        }
        Ok(outputs)
    }

    fn stage_report(&self) -> Result<Vec<String>, PipelineError> {
        let err = |message: String| PipelineError::Stage {
            stage: "report",
            message,
        };
        let ac = self.annotated_corpus()?;
        let taxonomy: TaxonomyArtifact = self.read_json("taxonomy.json")?;
        let cluster_model: ClusterModel = self.read_json("cluster_model.json")?;
        let training: TrainingReportArtifact = self.read_json("training_report.json")?;
        let noise = cluster_model
            .labels
            .iter()
            .filter(|&&l| l == NOISE)
            .count();
        let mut provenance_counts: BTreeMap<String, usize> = BTreeMap::new();
        for note in &ac.annotations {
            let key = match note.provenance {
                Provenance::Cluster => "cluster",
                Provenance::Classifier => "classifier",
                Provenance::Manual => "manual",
            };
            *provenance_counts.entry(key.to_string()).or_insert(0) += 1;
        }
        let report = serde_json::json!({
            "ads": ac.len(),
            "clusters": cluster_model.n_clusters(),
            "noise_points": noise,
            "taxonomy": taxonomy.taxonomy.label_texts(),
            "seed_count": taxonomy.taxonomy.seed_count,
            "training_examples": training.training_examples,
            "best_lambda": training.best_lambda,
            "cv_macro_f1": training.cv_report.macro_f1,
            "cv_accuracy": training.cv_report.accuracy,
            "class_histogram": training.class_histogram,
            "annotation_provenance": provenance_counts,
        });
        self.write_bytes(
            "run_report.json",
            serde_json::to_string_pretty(&report)
                .expect("report serializes")
                .as_bytes(),
        )?;
        let mut outputs = vec!["run_report.json".to_string()];

        if let Some(gold_path) = &self.gold_path {
            let text = fs::read_to_string(gold_path).map_err(|source| PipelineError::Io {
                path: gold_path.display().to_string(),
                source,
            })?;
            let gold_records: Vec<GoldRecord> = parse_gold(&text).map_err(err)?;
            let mut gold_labels = Vec::new();
            let mut predicted = Vec::new();
            for record in &gold_records {
                if let Some(idx) = ac
                    .annotations
                    .iter()
                    .position(|a| a.ad_id == record.ad_id)
                {
                    gold_labels.push(record.topic.clone());
                    predicted.push(ac.annotations[idx].topic.clone());
                }
            }
            if gold_labels.is_empty() {
                return Err(err("gold file shares no ad_ids with the corpus".to_string()));
            }
            let mut vocab = taxonomy.taxonomy.label_texts();
            vocab.push(crate::taxonomy::OTHER_LABEL.to_string());
            let eval = crate::classifier::evaluate(&gold_labels, &predicted, &vocab, 1)
                .map_err(|e| err(e.to_string()))?;
            self.write_json("metrics_gold.json", &eval)?;
            self.write_bytes("metrics_gold.txt", eval.to_table().as_bytes())?;
            outputs.push("metrics_gold.json".to_string());
            outputs.push("metrics_gold.txt".to_string());
        }
        Ok(outputs)
    }
}

fn smallest_class(training: &TrainingSet) -> usize {
    training
        .class_histogram()
        .iter()
        .map(|(_, count)| *count)
        .min()
        .unwrap_or(2)
}

/// Majority moral foundation among cluster annotations sharing `topic`;
/// falls back to the overall majority. Ties resolve in foundation order.
fn majority_foundation(annotations: &[ClusterAnnotation], topic: &str) -> MoralFoundation {
    let count_in = |subset: Vec<&ClusterAnnotation>| -> Option<MoralFoundation> {
        if subset.is_empty() {
            return None;
        }
        let mut best = None;
        let mut best_count = 0usize;
        for foundation in MoralFoundation::ALL {
            let count = subset
                .iter()
                .filter(|a| a.moral_foundation == foundation)
                .count();
            if count > best_count {
                best_count = count;
                best = Some(foundation);
            }
        }
        best
    };
    count_in(annotations.iter().filter(|a| a.topic == topic).collect())
        .or_else(|| count_in(annotations.iter().collect()))
        .unwrap_or(MoralFoundation::CareHarm)
}

fn parse_gold(text: &str) -> Result<Vec<GoldRecord>, String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| format!("gold file unparseable: {e}"))
    } else {
        let mut records = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            records.push(
                serde_json::from_str(line).map_err(|e| format!("gold line unparseable: {e}"))?,
            );
        }
        Ok(records)
    }
}

/// Filename-safe topic slug.
pub fn slug(topic: &str) -> String {
    topic
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}
