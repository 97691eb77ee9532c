//! Document embeddings behind a pluggable provider: a deterministic offline
//! mock (seeded 3-gram feature hashing), an HTTP provider speaking the common
//! embeddings wire shape, a content-addressed disk cache, plus cosine
//! similarity and greedy near-duplicate filtering.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding dimension mismatch: batch produced dim {got}, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("vector dimension mismatch: {a} vs {b}")]
    VectorDimMismatch { a: usize, b: usize },
    #[error("cosine undefined for zero-norm input")]
    ZeroNorm,
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("dedup threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("embedding provider transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("embedding cache io: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("embedding cache corrupt: {0}")]
    CacheCorrupt(String),
}

/// A fixed-dimension embedding for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (*v as f64) * (*v as f64))
            .sum::<f64>()
            .sqrt()
    }

    /// L2-normalized copy in f64, or `None` for a zero-norm vector.
    pub fn unit(&self) -> Option<Vec<f64>> {
        let norm = self.norm();
        if norm == 0.0 {
            return None;
        }
        Some(self.values.iter().map(|v| *v as f64 / norm).collect())
    }
}

/// Embeddings aligned 1:1 with a corpus, by index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedCorpus {
    pub ad_ids: Vec<String>,
    pub vectors: Vec<EmbeddingVector>,
    pub provider_id: String,
    pub dim: usize,
}

impl EmbeddedCorpus {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Anything that can turn a batch of texts into vectors.
pub trait EmbeddingProvider: Sync {
    /// Stable identifier used in cache keys and run metadata.
    fn provider_id(&self) -> String;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

/// Deterministic offline embedder: character 3-grams feature-hashed into
/// `dim` signed buckets, L2-normalized. Same text, same vector, on every
/// platform; no model download.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dim must be positive");
        MockEmbedder { dim, seed }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f32> {
        let mut acc = vec![0.0f64; self.dim];
        let chars: Vec<char> = text.chars().collect();
        if chars.is_empty() {
            return vec![0.0; self.dim]; // zero-text convention
        }
        let add_gram = |gram: &[char], acc: &mut Vec<f64>| {
            let mut h = fnv1a64(&self.seed.to_le_bytes());
            for c in gram {
                let mut buf = [0u8; 4];
                h = fnv1a64_continue(h, c.encode_utf8(&mut buf).as_bytes());
            }
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            acc[bucket] += sign;
        };
        if chars.len() < 3 {
            add_gram(&chars, &mut acc);
        } else {
            for window in chars.windows(3) {
                add_gram(window, &mut acc);
            }
        }
        let norm: f64 = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // opposing-sign collisions cancelled everything; fall back to a
            // single deterministic bucket so non-empty text keeps norm > 0
            let h = fnv1a64_continue(fnv1a64(&self.seed.to_le_bytes()), text.as_bytes());
            acc[(h % self.dim as u64) as usize] = 1.0;
            return acc.iter().map(|v| *v as f32).collect();
        }
        acc.iter().map(|v| (v / norm) as f32).collect()
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn provider_id(&self) -> String {
        format!("mock-3gram-d{}-s{}", self.dim, self.seed)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_continue(0xcbf2_9ce4_8422_2325, bytes)
}

fn fnv1a64_continue(mut hash: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// HTTP provider for a remote embeddings endpoint:
/// `POST {model, input: [texts]}` returning `{data: [{embedding: [...]}]}`.
pub struct HttpEmbedder {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl HttpEmbedder {
    /// Configure from `TAXOFORGE_EMBED_URL` / `TAXOFORGE_EMBED_KEY`.
    pub fn from_env(model: &str) -> Option<Self> {
        let url = std::env::var("TAXOFORGE_EMBED_URL").ok()?;
        Some(HttpEmbedder {
            url,
            model: model.to_string(),
            api_key: std::env::var("TAXOFORGE_EMBED_KEY").ok(),
            max_retries: 3,
            backoff_base_ms: 500,
        })
    }
}

#[derive(Deserialize)]
struct EmbedResponseItem {
    embedding: Vec<f32>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedResponseItem>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn provider_id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let delay = self.backoff_base_ms << (attempt - 1);
                std::thread::sleep(std::time::Duration::from_millis(delay));
            }
            let mut req = ureq::post(&self.url).set("content-type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.set("authorization", &format!("Bearer {key}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    let parsed: EmbedResponse = resp.into_json().map_err(|e| {
                        EmbedError::Transport {
                            attempts: attempt + 1,
                            message: format!("bad response body: {e}"),
                        }
                    })?;
                    return Ok(parsed.data.into_iter().map(|d| d.embedding).collect());
                }
                Err(ureq::Error::Status(code, _)) if code >= 500 => {
                    last_err = format!("server status {code}");
                }
                Err(ureq::Error::Status(code, resp)) => {
                    return Err(EmbedError::Transport {
                        attempts: attempt + 1,
                        message: format!(
                            "status {code}: {}",
                            resp.into_string().unwrap_or_default()
                        ),
                    });
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(EmbedError::Transport {
            attempts: self.max_retries + 1,
            message: last_err,
        })
    }
}

/// Embed every ad body in corpus order, with bounded parallel batches and a
/// content-addressed disk cache keyed by `(provider_id, content hash)`.
pub fn embed_corpus(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
    parallelism: usize,
    cache_dir: Option<&Path>,
) -> Result<EmbeddedCorpus, EmbedError> {
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let parallelism = parallelism.max(1);
    let texts: Vec<String> = corpus.ads.iter().map(|ad| ad.body.clone()).collect();
    let ad_ids: Vec<String> = corpus.ads.iter().map(|ad| ad.ad_id.clone()).collect();
    let provider_id = provider.provider_id();
    let key = cache_key(&provider_id, &texts);

    if let Some(dir) = cache_dir {
        if let Some(cached) = load_cache(dir, &key, &provider_id, &ad_ids)? {
            return Ok(cached);
        }
    }

    let batches: Vec<&[String]> = texts.chunks(batch_size).collect();
    let mut vectors: Vec<Vec<f32>> = Vec::with_capacity(texts.len());
    for group in batches.chunks(parallelism) {
        let results: Vec<Result<Vec<Vec<f32>>, EmbedError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|batch| scope.spawn(move || provider.embed_batch(batch)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("embed worker panicked"))
                .collect()
        });
        for (batch, result) in group.iter().zip(results) {
            let got = result?;
            if got.len() != batch.len() {
                return Err(EmbedError::CountMismatch {
                    expected: batch.len(),
                    got: got.len(),
                });
            }
            vectors.extend(got);
        }
    }

    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    for v in &vectors {
        if v.len() != dim {
            return Err(EmbedError::DimMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }

    let embedded = EmbeddedCorpus {
        ad_ids,
        vectors: vectors
            .into_iter()
            .map(|values| EmbeddingVector { values })
            .collect(),
        provider_id,
        dim,
    };
    if let Some(dir) = cache_dir {
        store_cache(dir, &key, &embedded)?;
    }
    Ok(embedded)
}

/// Cache key: sha256 over the provider id and every text, length-prefixed.
pub fn cache_key(provider_id: &str, texts: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((provider_id.len() as u64).to_le_bytes());
    hasher.update(provider_id.as_bytes());
    for t in texts {
        hasher.update((t.len() as u64).to_le_bytes());
        hasher.update(t.as_bytes());
    }
    hex(&hasher.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct CacheSidecar {
    provider_id: String,
    dim: usize,
    count: usize,
    ad_ids: Vec<String>,
}

fn cache_paths(dir: &Path, key: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{key}.f32")), dir.join(format!("{key}.json")))
}

fn load_cache(
    dir: &Path,
    key: &str,
    provider_id: &str,
    ad_ids: &[String],
) -> Result<Option<EmbeddedCorpus>, EmbedError> {
    let (bin_path, sidecar_path) = cache_paths(dir, key);
    if !bin_path.exists() || !sidecar_path.exists() {
        return Ok(None);
    }
    let sidecar: CacheSidecar = serde_json::from_slice(&fs::read(&sidecar_path)?)
        .map_err(|e| EmbedError::CacheCorrupt(format!("sidecar: {e}")))?;
    if sidecar.provider_id != provider_id || sidecar.ad_ids != ad_ids {
        return Ok(None);
    }
    read_cache_files(&bin_path, sidecar)
        .map(Some)
}

/// Load a cache entry knowing only its key (used by downstream stages that
/// read the sidecar for provenance).
pub fn load_cached(dir: &Path, key: &str) -> Result<EmbeddedCorpus, EmbedError> {
    let (bin_path, sidecar_path) = cache_paths(dir, key);
    if !bin_path.exists() || !sidecar_path.exists() {
        return Err(EmbedError::CacheCorrupt(format!(
            "cache entry {key} not found under {}",
            dir.display()
        )));
    }
    let sidecar: CacheSidecar = serde_json::from_slice(&fs::read(&sidecar_path)?)
        .map_err(|e| EmbedError::CacheCorrupt(format!("sidecar: {e}")))?;
    read_cache_files(&bin_path, sidecar)
}

fn read_cache_files(
    bin_path: &Path,
    sidecar: CacheSidecar,
) -> Result<EmbeddedCorpus, EmbedError> {
    let raw = fs::read(bin_path)?;
    let expected_bytes = sidecar.count * sidecar.dim * 4;
    if raw.len() != expected_bytes {
        return Err(EmbedError::CacheCorrupt(format!(
            "{} has {} bytes, expected {expected_bytes}",
            bin_path.display(),
            raw.len()
        )));
    }
    let mut vectors = Vec::with_capacity(sidecar.count);
    for row in raw.chunks_exact(sidecar.dim * 4) {
        let values = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        vectors.push(EmbeddingVector { values });
    }
    Ok(EmbeddedCorpus {
        ad_ids: sidecar.ad_ids,
        vectors,
        provider_id: sidecar.provider_id,
        dim: sidecar.dim,
    })
}

fn store_cache(dir: &Path, key: &str, embedded: &EmbeddedCorpus) -> Result<(), EmbedError> {
    fs::create_dir_all(dir)?;
    let (bin_path, sidecar_path) = cache_paths(dir, key);
    let mut bin = fs::File::create(&bin_path)?;
    for v in &embedded.vectors {
        for value in &v.values {
            bin.write_all(&value.to_le_bytes())?;
        }
    }
    let sidecar = CacheSidecar {
        provider_id: embedded.provider_id.clone(),
        dim: embedded.dim,
        count: embedded.vectors.len(),
        ad_ids: embedded.ad_ids.clone(),
    };
    fs::write(
        &sidecar_path,
        serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(())
}

/// Cosine similarity computed in f64. Symmetric by construction.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::VectorDimMismatch {
            a: a.dim(),
            b: b.dim(),
        });
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// One removal decision from the dedup scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DedupRemoval {
    pub kept_id: String,
    pub removed_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub embedded: EmbeddedCorpus,
    /// Indices into the original corpus, in original order.
    pub kept_indices: Vec<usize>,
    pub removed: Vec<DedupRemoval>,
    /// Zero-norm vectors (empty bodies): kept, never compared.
    pub zero_norm_indices: Vec<usize>,
}

/// Greedy near-duplicate filter in corpus order: an ad is removed iff its
/// cosine similarity to some earlier-kept ad exceeds `threshold` (strict).
/// The earliest ad of a near-duplicate group always survives.
pub fn dedup(ec: &EmbeddedCorpus, threshold: f64) -> Result<DedupOutcome, EmbedError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(EmbedError::BadThreshold(threshold));
    }
    let mut kept_indices: Vec<usize> = Vec::new();
    let mut kept_units: Vec<Vec<f64>> = Vec::new();
    let mut kept_unit_owner: Vec<usize> = Vec::new(); // index into kept_indices
    let mut removed = Vec::new();
    let mut zero_norm_indices = Vec::new();

    for (i, vector) in ec.vectors.iter().enumerate() {
        let unit = match vector.unit() {
            Some(u) => u,
            None => {
                zero_norm_indices.push(i);
                kept_indices.push(i);
                continue;
            }
        };
        let mut removal: Option<DedupRemoval> = None;
        // scan earlier-kept in order; first offender is recorded
        for (slot, kept_unit) in kept_units.iter().enumerate() {
            let sim: f64 = kept_unit.iter().zip(&unit).map(|(x, y)| x * y).sum();
            if sim > threshold {
                let kept_original = kept_indices[kept_unit_owner[slot]];
                removal = Some(DedupRemoval {
                    kept_id: ec.ad_ids[kept_original].clone(),
                    removed_id: ec.ad_ids[i].clone(),
                    similarity: sim,
                });
                break;
            }
        }
        match removal {
            Some(r) => removed.push(r),
            None => {
                kept_unit_owner.push(kept_indices.len());
                kept_indices.push(i);
                kept_units.push(unit);
            }
        }
    }

    let embedded = EmbeddedCorpus {
        ad_ids: kept_indices.iter().map(|&i| ec.ad_ids[i].clone()).collect(),
        vectors: kept_indices.iter().map(|&i| ec.vectors[i].clone()).collect(),
        provider_id: ec.provider_id.clone(),
        dim: ec.dim,
    };
    Ok(DedupOutcome {
        embedded,
        kept_indices,
        removed,
        zero_norm_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecf(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector {
            values: values.to_vec(),
        }
    }

    fn ec_from(vectors: Vec<EmbeddingVector>) -> EmbeddedCorpus {
        let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
        EmbeddedCorpus {
            ad_ids: (0..vectors.len()).map(|i| format!("ad{i}")).collect(),
            vectors,
            provider_id: "test".into(),
            dim,
        }
    }

    #[test]
    fn cosine_identity_and_orthogonal() {
        let v = vecf(&[0.3, -1.2, 2.0]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        let e1 = vecf(&[1.0, 0.0]);
        let e2 = vecf(&[0.0, 1.0]);
        assert!(cosine(&e1, &e2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cosine_hand_value() {
        // dot = 32, |a| = sqrt(14), |b| = sqrt(77): 32/sqrt(1078)
        let a = vecf(&[1.0, 2.0, 3.0]);
        let b = vecf(&[4.0, 5.0, 6.0]);
        let expected = 32.0 / (14.0f64 * 77.0).sqrt();
        assert!((cosine(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((cosine(&a, &b).unwrap() - 0.9746318461970762).abs() < 1e-12);
    }

    #[test]
    fn cosine_exact_power_of_two_scaling() {
        // power-of-two scales are exact in f32, so self-similarity holds to
        // full double precision
        let v = vecf(&[0.3, -1.2, 2.0, 0.7]);
        for scale in [0.5f32, 2.0, 4.0, 1024.0] {
            let scaled = vecf(&v.values.iter().map(|x| x * scale).collect::<Vec<_>>());
            assert!((cosine(&v, &scaled).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_rejects_zero_norm_and_dim_mismatch() {
        let z = vecf(&[0.0, 0.0]);
        let v = vecf(&[1.0, 0.0]);
        assert!(matches!(cosine(&z, &v), Err(EmbedError::ZeroNorm)));
        let w = vecf(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            cosine(&v, &w),
            Err(EmbedError::VectorDimMismatch { .. })
        ));
    }

    #[test]
    fn mock_embedder_is_deterministic() {
        let provider = MockEmbedder::new(32, 7);
        let a = provider.embed_text("Vote for better schools in Florida");
        let b = provider.embed_text("Vote for better schools in Florida");
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
        let other = provider.embed_text("Completely different message");
        assert_ne!(a, other);
        // non-empty text keeps positive norm
        let tiny = provider.embed_text("a");
        assert!(tiny.iter().any(|v| *v != 0.0));
        let empty = provider.embed_text("");
        assert!(empty.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn embed_corpus_shape_and_cache_roundtrip() {
        let corpus = crate::corpus::Corpus {
            ads: vec![test_ad("a", "first body"), test_ad("b", "second body")],
            source_path: "test".into(),
            ingested_at: 0,
        };
        let provider = MockEmbedder::new(32, 1);
        let dir = tempfile::tempdir().unwrap();
        let first = embed_corpus(&corpus, &provider, 1, 4, Some(dir.path())).unwrap();
        assert_eq!(first.len(), 2);
        assert_eq!(first.dim, 32);
        let second = embed_corpus(&corpus, &provider, 1, 4, Some(dir.path())).unwrap();
        assert_eq!(first.vectors, second.vectors); // bit-identical via cache
        let third = embed_corpus(&corpus, &provider, 2, 1, None).unwrap();
        assert_eq!(first.vectors, third.vectors); // and without cache
    }

    struct FlakyDimProvider;

    impl EmbeddingProvider for FlakyDimProvider {
        fn provider_id(&self) -> String {
            "flaky".into()
        }
        fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
            // first text gets dim 3, the rest dim 4
            Ok(texts
                .iter()
                .map(|t| {
                    if t.contains("first") {
                        vec![1.0, 0.0, 0.0]
                    } else {
                        vec![1.0, 0.0, 0.0, 0.0]
                    }
                })
                .collect())
        }
    }

    #[test]
    fn dim_mismatch_across_batches_errors() {
        let corpus = crate::corpus::Corpus {
            ads: vec![test_ad("a", "first body"), test_ad("b", "second body")],
            source_path: "test".into(),
            ingested_at: 0,
        };
        let err = embed_corpus(&corpus, &FlakyDimProvider, 1, 1, None).unwrap_err();
        assert!(matches!(err, EmbedError::DimMismatch { .. }));
    }

    fn test_ad(id: &str, body: &str) -> crate::corpus::Ad {
        crate::corpus::Ad {
            ad_id: id.into(),
            title: String::new(),
            body: body.into(),
            url: None,
            created_at: 0,
            campaign_start: 0,
            campaign_end: None,
            page_name: String::new(),
            funding_entity: String::new(),
            spend_lo: 0.0,
            spend_hi: 0.0,
            impressions_lo: 0.0,
            impressions_hi: 0.0,
            gender_shares: Default::default(),
            age_shares: Default::default(),
            region_shares: Default::default(),
            language: "en".into(),
        }
    }

    /// Build a pair of unit vectors with an exact target cosine.
    fn pair_with_cosine(target: f64) -> (EmbeddingVector, EmbeddingVector) {
        let u = [1.0f64, 0.0, 0.0];
        let s = (1.0 - target * target).sqrt();
        let v = [target, s, 0.0];
        (
            vecf(&[u[0] as f32, u[1] as f32, u[2] as f32]),
            vecf(&[v[0] as f32, v[1] as f32, v[2] as f32]),
        )
    }

    #[test]
    fn dedup_removes_second_of_identical_pair() {
        let v = vecf(&[0.5, 0.5, 0.1]);
        let ec = ec_from(vec![v.clone(), v]);
        let out = dedup(&ec, 0.95).unwrap();
        assert_eq!(out.kept_indices, vec![0]);
        assert_eq!(out.removed.len(), 1);
        assert_eq!(out.removed[0].kept_id, "ad0");
        assert_eq!(out.removed[0].removed_id, "ad1");
        assert!((out.removed[0].similarity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dedup_threshold_is_strict() {
        let (a, b) = pair_with_cosine(0.96);
        let ec = ec_from(vec![a, b]);
        let out = dedup(&ec, 0.95).unwrap();
        assert_eq!(out.kept_indices, vec![0]);
        assert_eq!(out.removed.len(), 1);

        let (a, b) = pair_with_cosine(0.90);
        let ec = ec_from(vec![a, b]);
        let out = dedup(&ec, 0.95).unwrap();
        assert_eq!(out.kept_indices, vec![0, 1]);
        assert!(out.removed.is_empty());
    }

    #[test]
    fn dedup_rejects_bad_threshold() {
        let ec = ec_from(vec![vecf(&[1.0, 0.0])]);
        assert!(matches!(
            dedup(&ec, 0.0),
            Err(EmbedError::BadThreshold(_))
        ));
        assert!(matches!(
            dedup(&ec, 1.5),
            Err(EmbedError::BadThreshold(_))
        ));
    }

    #[test]
    fn dedup_keeps_zero_norm_vectors_uncompared() {
        let z = vecf(&[0.0, 0.0, 0.0]);
        let v = vecf(&[1.0, 0.0, 0.0]);
        let ec = ec_from(vec![z.clone(), v.clone(), z, v]);
        let out = dedup(&ec, 0.95).unwrap();
        assert_eq!(out.zero_norm_indices, vec![0, 2]);
        // both zero vectors kept; second copy of v removed
        assert_eq!(out.kept_indices, vec![0, 1, 2]);
        assert_eq!(out.removed.len(), 1);
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_and_scale_invariant(
            a in proptest::collection::vec(-10.0f32..10.0, 4),
            b in proptest::collection::vec(-10.0f32..10.0, 4),
            scale in 0.01f32..100.0,
        ) {
            let va = vecf(&a);
            let vb = vecf(&b);
            if let (Ok(ab), Ok(ba)) = (cosine(&va, &vb), cosine(&vb, &va)) {
                prop_assert_eq!(ab, ba);
                let scaled = vecf(&a.iter().map(|x| x * scale).collect::<Vec<_>>());
                if let Ok(self_sim) = cosine(&va, &scaled) {
                    prop_assert!((self_sim - 1.0).abs() < 1e-5);
                }
            }
        }

        #[test]
        fn dedup_kept_set_has_no_over_threshold_pair(
            seeds in proptest::collection::vec(0u64..1000, 2..40),
            threshold in 0.5f64..0.999,
        ) {
            let provider = MockEmbedder::new(16, 3);
            let vectors: Vec<EmbeddingVector> = seeds
                .iter()
                .map(|s| EmbeddingVector { values: provider.embed_text(&format!("text {s} {}", s % 7)) })
                .collect();
            let ec = ec_from(vectors);
            let out = dedup(&ec, threshold).unwrap();
            // exhaustive pairwise verification over the kept set
            for (i, &ki) in out.kept_indices.iter().enumerate() {
                for &kj in &out.kept_indices[i + 1..] {
                    if let Ok(sim) = cosine(&ec.vectors[ki], &ec.vectors[kj]) {
                        prop_assert!(sim <= threshold, "kept pair {ki},{kj} sim {sim}");
                    }
                }
            }
            prop_assert_eq!(out.kept_indices.len() + out.removed.len(), ec.len());
        }
    }
}
