//! The whole pipeline, offline: bundled mini-corpus, mock embedder, and
//! scripted LLM, from ingest through the report files, then a cache-hit
//! rerun.
//!
//! ```bash
//! cargo run -p taxoforge --example full_pipeline
//! ```

use taxoforge::pipeline::{EmbeddingProviderConfig, LlmBackendConfig, Pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let (corpus_path, script_path) = taxoforge::demo::write_demo_files(dir.path(), 300, 7)?;

    let mut config = RunConfig::new(&corpus_path);
    config.out_dir = dir.path().join("out");
    config.seed = 7;
    config.embedding = EmbeddingProviderConfig::Mock { dim: 64 };
    config.llm = Some(LlmBackendConfig::Scripted { path: script_path });

    let manifest = {
        let mut pipeline = Pipeline::new(config.clone())?;
        pipeline.run_all()?
    };
    println!("pipeline v{} over seed {}:", manifest.library_version, manifest.global_seed);
    for record in &manifest.stages {
        println!(
            "  {:<10} {:>6} ms  {} file(s)",
            record.stage,
            record.duration_ms,
            record.outputs.len()
        );
    }
    println!(
        "cluster processing order: {:?}",
        manifest.cluster_processing_order
    );

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(
        config.out_dir.join("run_report.json"),
    )?)?;
    println!("\nrun report:\n{}", serde_json::to_string_pretty(&report)?);

    println!("\ntopic spend:");
    print!(
        "{}",
        std::fs::read_to_string(config.out_dir.join("topic_spend.csv"))?
    );

    // second run: everything cache-hits
    let manifest2 = {
        let mut pipeline = Pipeline::new(config.clone())?;
        pipeline.run_all()?
    };
    let hits = manifest2.stages.iter().filter(|s| s.cache_hit).count();
    println!("\nrerun: {hits}/{} stages cache-hit", manifest2.stages.len());
    Ok(())
}
