//! Corpus-to-taxonomy pipeline: ingest an ad corpus, embed and
//! near-duplicate-filter it, reduce and cluster the embeddings, grow an
//! interpretable topic taxonomy through a constrained LLM loop, annotate
//! clusters with topics and moral foundations, train a topic classifier on
//! high-confidence cluster members, and emit demographic-targeting and
//! moral-framing reports.
//!
//! Each capability has a runnable example under `examples/`; the `taxoforge`
//! binary drives the full pipeline and its individual stages.

pub mod analysis;
pub mod classifier;
pub mod clustering;
pub mod corpus;
pub mod demo;
pub mod embedding;
pub mod llm;
pub mod pipeline;
pub mod reduction;
pub mod taxonomy;
