//! Embed ad bodies with the deterministic offline provider and filter
//! near-duplicates above a cosine threshold.
//!
//! ```bash
//! cargo run -p taxoforge --example embed_and_dedup
//! ```

use taxoforge::corpus::Corpus;
use taxoforge::embedding::{cosine, dedup, embed_corpus, MockEmbedder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut ads = taxoforge::demo::generate_mini_corpus(40, 11);
    // plant an exact duplicate and a light paraphrase of ad 0
    let mut copy = ads[0].clone();
    copy.ad_id = "dup-exact".into();
    ads.push(copy);
    let mut paraphrase = ads[0].clone();
    paraphrase.ad_id = "dup-close".into();
    paraphrase.body = format!("{} Paid for by the committee.", ads[0].body);
    ads.push(paraphrase);

    let corpus = Corpus {
        ads,
        source_path: "generated".into(),
        ingested_at: 0,
    };
    let provider = MockEmbedder::new(64, 11);
    let embedded = embed_corpus(&corpus, &provider, 16, 4, None)?;
    println!(
        "embedded {} ads at dim {} with provider {}",
        embedded.len(),
        embedded.dim,
        embedded.provider_id
    );

    let v0 = &embedded.vectors[0];
    let v_exact = &embedded.vectors[embedded.len() - 2];
    let v_close = &embedded.vectors[embedded.len() - 1];
    println!("cosine(original, exact copy)  = {:.6}", cosine(v0, v_exact)?);
    println!("cosine(original, paraphrase)  = {:.6}", cosine(v0, v_close)?);

    let outcome = dedup(&embedded, 0.95)?;
    println!(
        "\ndedup at 0.95: kept {}, removed {}",
        outcome.kept_indices.len(),
        outcome.removed.len()
    );
    for removal in &outcome.removed {
        println!(
            "  removed {} (kept {}, similarity {:.4})",
            removal.removed_id, removal.kept_id, removal.similarity
        );
    }
    Ok(())
}
