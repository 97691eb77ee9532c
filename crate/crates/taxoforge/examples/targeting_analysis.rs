//! Downstream analytics on an annotated corpus: spend by topic, top
//! funders with moral splits, the topic x foundation correlation matrix,
//! and PPMI against demographic cells.
//!
//! ```bash
//! cargo run -p taxoforge --example targeting_analysis
//! ```

use taxoforge::analysis::{
    default_stopwords, ppmi, topic_mf_correlation, topic_spend_report, top_funders, AdAnnotation,
    AnnotatedCorpus, FeatureKind, Provenance, WeightMode,
};
use taxoforge::corpus::{Corpus, DemographicScheme};
use taxoforge::demo::THEMES;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // annotate the demo corpus with its planted themes
    let ads = taxoforge::demo::generate_mini_corpus(300, 7);
    let annotations: Vec<AdAnnotation> = ads
        .iter()
        .enumerate()
        .map(|(i, ad)| {
            let theme = &THEMES[i % THEMES.len()];
            AdAnnotation {
                ad_id: ad.ad_id.clone(),
                topic: theme.label.to_string(),
                moral_foundation: theme.foundation,
                provenance: Provenance::Manual,
            }
        })
        .collect();
    let ac = AnnotatedCorpus::new(
        Corpus {
            ads,
            source_path: "generated".into(),
            ingested_at: 0,
        },
        annotations,
    )?;

    let spend = topic_spend_report(&ac, &[]);
    println!("topic spend report:");
    print!("{}", spend.to_csv());

    println!("\ntop funders for `economy`:");
    for row in top_funders(&ac, "economy", 5)? {
        let split: Vec<String> = row
            .by_foundation
            .iter()
            .map(|(f, v)| format!("{} {:.0}", f.display_name(), v))
            .collect();
        println!(
            "  {:<24} {:>10.1}  [{}]",
            row.funding_entity,
            row.total_spend,
            split.join(", ")
        );
    }

    let pearson = topic_mf_correlation(&ac)?;
    println!("\ntopic x moral-foundation correlation (phi):");
    print!("{}", pearson.to_csv());

    let matrix = ppmi(
        &ac,
        FeatureKind::Topic,
        DemographicScheme::State,
        0.5,
        WeightMode::Impressions,
        &default_stopwords(),
    )?;
    println!("\nPPMI of topics against states (impression-weighted, s = 0.5):");
    print!("{}", matrix.to_csv());

    let words = ppmi(
        &ac,
        FeatureKind::Word,
        DemographicScheme::Gender,
        0.5,
        WeightMode::Impressions,
        &default_stopwords(),
    )?;
    println!(
        "\nword-level PPMI computed over {} distinct words x {} gender cells",
        words.row_labels.len(),
        words.col_labels.len()
    );
    Ok(())
}
