//! Grow a topic taxonomy over cluster representatives with a scripted LLM,
//! then annotate clusters, summarize them, and classify moral foundations.
//! Shows the constrained-choice gateway and the audit transcript.
//!
//! ```bash
//! cargo run -p taxoforge --example synthesize_taxonomy
//! ```

use taxoforge::llm::{LlmGateway, ScriptEntry, ScriptedBackend};
use taxoforge::taxonomy::{
    annotate_topics, classify_moral, summarize, synthesize, ClusterRepresentatives, PromptConfig,
};

fn bare(response: &str) -> ScriptEntry {
    ScriptEntry {
        substring: None,
        substrings: None,
        position: None,
        response: response.to_string(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clusters = vec![
        ClusterRepresentatives {
            cluster_id: 0,
            texts: vec![
                "Defend reproductive freedom - VOTE on Tuesday!".into(),
                "Your choice, your voice. Protect access to care.".into(),
            ],
        },
        ClusterRepresentatives {
            cluster_id: 1,
            texts: vec!["Abortion rights are on the ballot this year.".into()],
        },
        ClusterRepresentatives {
            cluster_id: 2,
            texts: vec!["Prices are too high. Cut taxes and rein in spending.".into()],
        },
    ];

    // the script plays the LLM: generate, reuse, generate
    let gateway = LlmGateway::new(Box::new(ScriptedBackend::new(vec![
        bare("abortion\""),
        bare("yes"),
        bare("no"),
        bare("economy\""),
        bare("abortion"),
        bare("abortion"),
        bare("economy"),
        bare("They argue that reproductive decisions belong to patients. And more!"),
        bare("Liberty/Oppression"),
    ])));

    let config = PromptConfig::default();
    let outcome = synthesize(&clusters, &gateway, None, &config)?;
    println!("taxonomy after synthesis:");
    for label in outcome.taxonomy.labels() {
        println!(
            "  {:<12} origin {:?}, from cluster {:?}",
            label.text, label.origin, label.created_from_cluster
        );
    }
    for event in &outcome.events {
        println!("  event: {event:?}");
    }

    let topics = annotate_topics(&clusters, &outcome.taxonomy, &gateway, &config)?;
    println!("\ncluster annotations: {topics:?}");

    let summary = summarize(&clusters[0], &topics[0].1, &gateway, &config)?;
    println!(
        "\nsummary of cluster 0: {:?} (trimmed to one sentence: {})",
        summary.text, summary.trimmed
    );
    let foundation = classify_moral(&summary.text, &topics[0].1, &gateway, 0)?;
    println!("moral foundation: {}", foundation.display_name());

    println!("\ngateway transcript ({} calls):", gateway.transcript().entries.len());
    for entry in &gateway.transcript().entries {
        println!(
            "  #{:<2} {:?} -> {:?} via {:?} ({} attempt(s))",
            entry.index, entry.kind, entry.resolved, entry.resolution, entry.attempts
        );
    }
    Ok(())
}
