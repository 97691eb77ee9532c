//! Parse a platform ad export into canonical records, with a rejects report
//! and share renormalization warnings.
//!
//! ```bash
//! cargo run -p taxoforge --example ingest_corpus
//! ```

use std::io::Write;

use taxoforge::corpus::{demographic_cells, ingest, CorpusFormat, DemographicScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A miniature export in the platform wire shape: one good row, one with
    // drifting shares, one missing its ad_id, and one duplicate.
    let export = r#"
{"ad_id":"101","ad_creative_link_title":"Vote Tuesday","ad_creative_body":"Defend reproductive freedom - VOTE on Tuesday, November 5th!","ad_creation_time":"2024-10-01T09:30:00+0000","page_name":"Campaign Page","bylines":"Liberty Fund","spend":{"lower_bound":"100","upper_bound":"199"},"impressions":{"lower_bound":"10000","upper_bound":"14999"},"demographic_distribution":[{"percentage":"0.4","age":"25-34","gender":"female"},{"percentage":"0.35","age":"35-44","gender":"male"},{"percentage":"0.25","age":"65+","gender":"female"}],"delivery_by_region":[{"percentage":"0.8","region":"Florida"},{"percentage":"0.2","region":"Georgia"}],"languages":["en"]}
{"ad_id":"102","ad_creative_body":"Lower taxes now.","spend":{"lower_bound":"0","upper_bound":"99"},"impressions":{"lower_bound":"500","upper_bound":"999"},"demographic_distribution":[{"percentage":"0.5","gender":"male"},{"percentage":"0.3","gender":"female"}]}
{"ad_creative_body":"this row has no ad_id"}
{"ad_id":"101","ad_creative_body":"duplicate of the first ad"}
"#;
    let mut file = tempfile::NamedTempFile::new()?;
    file.write_all(export.trim_start().as_bytes())?;

    let outcome = ingest(file.path(), CorpusFormat::Jsonl)?;
    println!("ingested {} ads", outcome.corpus.len());
    for reject in &outcome.rejects {
        println!("  reject line {}: {}", reject.line, reject.reason);
    }
    for warning in &outcome.warnings {
        println!(
            "  renormalized {} shares of ad {} (sum was {:.2})",
            warning.family, warning.ad_id, warning.original_sum
        );
    }

    let ad = &outcome.corpus.ads[0];
    println!("\nad {}:", ad.ad_id);
    println!("  spend midpoint       {:>10.1}", ad.spend_midpoint());
    println!("  impressions midpoint {:>10.1}", ad.impressions_midpoint());
    println!("  state x gender cells:");
    for (cell, weight) in demographic_cells(ad, DemographicScheme::StateGender)? {
        println!("    {cell:<12} {weight:>10.1}");
    }
    println!("\ncanonical record:\n{}", serde_json::to_string_pretty(ad)?);
    Ok(())
}
