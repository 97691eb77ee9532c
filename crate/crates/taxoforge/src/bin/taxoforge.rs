//! Pipeline driver: `taxoforge <stage|run> --config <path> [...]`.
//!
//! Exit codes: 0 success, 2 config error, 3 stage failure, 4 missing
//! upstream artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use taxoforge::corpus::CorpusFormat;
use taxoforge::pipeline::{
    EmbeddingProviderConfig, LlmBackendConfig, Pipeline, PipelineError, RunConfig, Stage,
};

#[derive(Parser)]
#[command(name = "taxoforge", version, about = "Corpus-to-taxonomy pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline end-to-end.
    Run(StageArgs),
    /// Parse and normalize the corpus export.
    Ingest(StageArgs),
    /// Embed ad bodies with the configured provider.
    Embed(StageArgs),
    /// Remove near-duplicate ads above the cosine threshold.
    Dedup(StageArgs),
    /// Reduce embedding dimensionality before clustering.
    Reduce(StageArgs),
    /// Cluster the reduced embeddings.
    Cluster(StageArgs),
    /// Grow the topic taxonomy over cluster representatives.
    Synthesize(StageArgs),
    /// Assign each cluster a taxonomy topic or `other`.
    Annotate(StageArgs),
    /// Summarize clusters and classify moral foundations.
    Moral(StageArgs),
    /// Train the topic classifier on high-confidence members.
    Train(StageArgs),
    /// Label the remaining (noise) ads with the classifier.
    Predict(StageArgs),
    /// Emit the CSV/JSON report families.
    Analyze(StageArgs),
    /// Summarize the run; score against gold labels when given.
    Report(StageArgs),
    /// Write the bundled demo corpus, LLM script, and a ready config.
    Demo(DemoArgs),
}

#[derive(Args)]
struct StageArgs {
    /// TOML run configuration; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus export path (required when no config file is given).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Corpus format: jsonl or csv.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global random seed; stages derive their own from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Drive the LLM stages from a script file (offline).
    #[arg(long)]
    llm_script: Option<PathBuf>,
    /// Replay a recorded gateway transcript.
    #[arg(long)]
    llm_replay: Option<PathBuf>,
    /// Forbid network use: mock embedder, scripted/replay LLM only.
    #[arg(long)]
    offline: bool,
    /// Gold labels file for the report stage (JSON or JSONL of
    /// {ad_id, topic}).
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    dedup_threshold: Option<f64>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    training_threshold: Option<f64>,
    /// Mock embedder dimension (with --offline or the mock provider).
    #[arg(long)]
    mock_dim: Option<usize>,
}

#[derive(Args)]
struct DemoArgs {
    /// Directory for the demo corpus, script, and config.
    #[arg(long, default_value = "demo")]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    docs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn build_config(args: &StageArgs) -> Result<(RunConfig, Option<PathBuf>), PipelineError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => {
            let corpus = args.corpus.clone().ok_or_else(|| {
                PipelineError::Config("either --config or --corpus is required".to_string())
            })?;
            RunConfig::new(corpus)
        }
    };
    if let Some(corpus) = &args.corpus {
        config.corpus_path = corpus.clone();
    }
    if let Some(format) = &args.format {
        config.corpus_format = format
            .parse::<CorpusFormat>()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(script) = &args.llm_script {
        config.llm = Some(LlmBackendConfig::Scripted {
            path: script.clone(),
        });
    }
    if let Some(replay) = &args.llm_replay {
        config.llm = Some(LlmBackendConfig::Replay {
            path: replay.clone(),
        });
    }
    if let Some(threshold) = args.dedup_threshold {
        config.dedup_threshold = threshold;
    }
    if let Some(mcs) = args.min_cluster_size {
        config.min_cluster_size = mcs;
    }
    if let Some(threshold) = args.training_threshold {
        config.training_threshold = threshold;
    }
    if let Some(dim) = args.mock_dim {
        config.embedding = EmbeddingProviderConfig::Mock { dim };
    }
    if args.offline {
        if let EmbeddingProviderConfig::Http { .. } = config.embedding {
            config.embedding = EmbeddingProviderConfig::Mock {
                dim: args.mock_dim.unwrap_or(64),
            };
        }
        if matches!(config.llm, Some(LlmBackendConfig::Http)) {
            return Err(PipelineError::Config(
                "offline run cannot use the http LLM backend; pass --llm-script or --llm-replay"
                    .to_string(),
            ));
        }
    }
    Ok((config, args.gold.clone()))
}

fn print_record(record: &taxoforge::pipeline::StageRecord) {
    let cache = if record.cache_hit { " (cache hit)" } else { "" };
    println!(
        "stage {:<10} {:>6} ms  {} file(s){}",
        record.stage,
        record.duration_ms,
        record.outputs.len(),
        cache
    );
}

fn run_stage(args: &StageArgs, stage: Stage) -> Result<(), PipelineError> {
    let (config, gold) = build_config(args)?;
    let mut pipeline = Pipeline::new(config)?;
    pipeline.gold_path = gold;
    let record = pipeline.run_stage(stage)?;
    print_record(&record);
    Ok(())
}

fn run_all(args: &StageArgs) -> Result<(), PipelineError> {
    let (config, gold) = build_config(args)?;
    let out_dir = config.out_dir.clone();
    let mut pipeline = Pipeline::new(config)?;
    pipeline.gold_path = gold;
    let manifest = pipeline.run_all()?;
    for record in &manifest.stages {
        print_record(record);
    }
    println!(
        "run complete: {} stages, manifest at {}",
        manifest.stages.len(),
        out_dir.join("run_manifest.json").display()
    );
    Ok(())
}

fn run_demo(args: &DemoArgs) -> Result<(), PipelineError> {
    let (corpus_path, script_path) =
        taxoforge::demo::write_demo_files(&args.out, args.docs, args.seed).map_err(|source| {
            PipelineError::Io {
                path: args.out.display().to_string(),
                source,
            }
        })?;
    let mut config = RunConfig::new(&corpus_path);
    config.out_dir = args.out.join("out");
    config.seed = args.seed;
    config.embedding = EmbeddingProviderConfig::Mock { dim: 64 };
    config.llm = Some(LlmBackendConfig::Scripted {
        path: script_path.clone(),
    });
    let config_path = args.out.join("config.toml");
    let toml = toml::to_string_pretty(&config)
        .map_err(|e| PipelineError::Config(format!("demo config: {e}")))?;
    std::fs::write(&config_path, toml).map_err(|source| PipelineError::Io {
        path: config_path.display().to_string(),
        source,
    })?;
    println!("wrote {}", corpus_path.display());
    println!("wrote {}", script_path.display());
    println!("wrote {}", config_path.display());
    println!("next: taxoforge run --config {}", config_path.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run(args) => run_all(&args),
        Command::Ingest(args) => run_stage(&args, Stage::Ingest),
        Command::Embed(args) => run_stage(&args, Stage::Embed),
        Command::Dedup(args) => run_stage(&args, Stage::Dedup),
        Command::Reduce(args) => run_stage(&args, Stage::Reduce),
        Command::Cluster(args) => run_stage(&args, Stage::Cluster),
        Command::Synthesize(args) => run_stage(&args, Stage::Synthesize),
        Command::Annotate(args) => run_stage(&args, Stage::Annotate),
        Command::Moral(args) => run_stage(&args, Stage::Moral),
        Command::Train(args) => run_stage(&args, Stage::Train),
        Command::Predict(args) => run_stage(&args, Stage::Predict),
        Command::Analyze(args) => run_stage(&args, Stage::Analyze),
        Command::Report(args) => run_stage(&args, Stage::Report),
        Command::Demo(args) => run_demo(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
