//! The iterative topic-synthesis loop and cluster annotation: grow a short
//! topic taxonomy over cluster representatives, assign each cluster a topic
//! (or `other`), summarize its talking point, and classify the dominant
//! moral foundation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatRequest, ConstrainedChoice, LlmError, LlmGateway};

/// The reserved annotation label; never stored inside a taxonomy.
pub const OTHER_LABEL: &str = "other";

/// Maximum words in a synthesized topic label.
pub const MAX_LABEL_WORDS: usize = 3;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("gateway error while processing cluster {cluster_id}: {source}")]
    Gateway {
        cluster_id: i32,
        #[source]
        source: LlmError,
    },
    #[error("cluster {0} has no representative texts")]
    NoRepresentatives(i32),
    #[error("taxonomy is empty; run synthesis first")]
    EmptyTaxonomy,
    #[error("invalid seed label `{0}`")]
    BadSeed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelOrigin {
    Seed,
    Synthesized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub text: String,
    pub origin: LabelOrigin,
    pub created_from_cluster: Option<i32>,
}

/// Ordered, case-fold-deduplicated list of short topic labels.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Taxonomy {
    labels: Vec<TopicLabel>,
    pub seed_count: usize,
}

impl Taxonomy {
    pub fn new() -> Self {
        Taxonomy::default()
    }

    pub fn from_seeds(seeds: &[String]) -> Result<Self, TaxonomyError> {
        let mut taxonomy = Taxonomy::new();
        for seed in seeds {
            let text = seed.trim();
            if text.is_empty() || fold(text) == OTHER_LABEL {
                return Err(TaxonomyError::BadSeed(seed.clone()));
            }
            if !taxonomy.try_add(TopicLabel {
                text: text.to_string(),
                origin: LabelOrigin::Seed,
                created_from_cluster: None,
            }) {
                return Err(TaxonomyError::BadSeed(seed.clone()));
            }
        }
        taxonomy.seed_count = taxonomy.labels.len();
        Ok(taxonomy)
    }

    pub fn labels(&self) -> &[TopicLabel] {
        &self.labels
    }

    pub fn label_texts(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.text.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains_folded(&self, text: &str) -> bool {
        let needle = fold(text);
        self.labels.iter().any(|l| fold(&l.text) == needle)
    }

    /// Insert unless a case-folded duplicate (or the reserved label) exists.
    pub fn try_add(&mut self, label: TopicLabel) -> bool {
        if label.text.trim().is_empty()
            || fold(&label.text) == OTHER_LABEL
            || self.contains_folded(&label.text)
        {
            return false;
        }
        self.labels.push(label);
        true
    }
}

fn fold(text: &str) -> String {
    text.trim().to_lowercase()
}

/// The six moral foundations, with their bundled definition text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoralFoundation {
    CareHarm,
    FairnessCheating,
    LoyaltyBetrayal,
    AuthoritySubversion,
    SanctityDegradation,
    LibertyOppression,
}

impl MoralFoundation {
    pub const ALL: [MoralFoundation; 6] = [
        MoralFoundation::CareHarm,
        MoralFoundation::FairnessCheating,
        MoralFoundation::LoyaltyBetrayal,
        MoralFoundation::AuthoritySubversion,
        MoralFoundation::SanctityDegradation,
        MoralFoundation::LibertyOppression,
    ];

    pub fn display_name(&self) -> &'static str {
        match self {
            MoralFoundation::CareHarm => "Care/Harm",
            MoralFoundation::FairnessCheating => "Fairness/Cheating",
            MoralFoundation::LoyaltyBetrayal => "Loyalty/Betrayal",
            MoralFoundation::AuthoritySubversion => "Authority/Subversion",
            MoralFoundation::SanctityDegradation => "Sanctity/Degradation",
            MoralFoundation::LibertyOppression => "Liberty/Oppression",
        }
    }

    pub fn definition(&self) -> &'static str {
        match self {
            MoralFoundation::CareHarm => {
                "It suggests that someone other than the speaker is worthy of compassion or is \
                 experiencing harm, grounded in the values of kindness, tenderness, and care."
            }
            MoralFoundation::FairnessCheating => {
                "Emphasizes justice, personal rights, and independence; involves comparing with \
                 other groups. Advocates for equal opportunity and resists those who benefit \
                 without contributing (\"Free Riders\")."
            }
            MoralFoundation::LoyaltyBetrayal => {
                "Based on the values of loyalty to one's country and willingness to sacrifice \
                 for the group. Activated by a sense of unity and collective \
                 responsibility\u{2014}\"one for all, and all for one\"."
            }
            MoralFoundation::AuthoritySubversion => {
                "Centers on showing respect (or resistance) toward established authority and \
                 following long-standing traditions. It includes maintaining social order and \
                 fulfilling the duties tied to hierarchical roles, such as obedience, respect, \
                 and role-based responsibilities."
            }
            MoralFoundation::SanctityDegradation => {
                "Beyond religion, this value highlights respect for human dignity and aversion \
                 to moral or physical corruption, promoting purity, self-control, and the belief \
                 that the body is sacred and vulnerable to defilement."
            }
            MoralFoundation::LibertyOppression => {
                "Captures the feelings of reactance and resentment people experience when their \
                 freedom is restricted, often leading to collective disdain for authoritarian \
                 figures and motivating unity and resistance against oppression."
            }
        }
    }

    pub fn from_display(name: &str) -> Option<MoralFoundation> {
        let folded = name.trim().to_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.display_name().to_lowercase() == folded)
    }
}

/// One cluster's topic, summary, and moral foundation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAnnotation {
    pub cluster_id: i32,
    pub topic: String,
    pub summary: String,
    pub moral_foundation: MoralFoundation,
}

/// The texts the LLM sees for one cluster: its top members by membership
/// probability, title and body joined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRepresentatives {
    pub cluster_id: i32,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SynthesisEvent {
    LabelAdded { cluster_id: i32, label: String },
    CoveredByExisting { cluster_id: i32 },
    DuplicateSkipped { cluster_id: i32, label: String },
    ReservedSkipped { cluster_id: i32 },
    Truncated {
        cluster_id: i32,
        original: String,
        label: String,
    },
    PromptTruncated {
        cluster_id: i32,
        original_chars: usize,
    },
    SummaryTrimmed { cluster_id: i32 },
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub taxonomy: Taxonomy,
    pub events: Vec<SynthesisEvent>,
}

/// Prompt templates, stored verbatim as files with named `{{slot}}`s.
pub mod prompts {
    pub const SYSTEM_SYNTHESIS: &str = include_str!("../prompts/system_synthesis.txt");
    pub const SYSTEM_ANNOTATION: &str = include_str!("../prompts/system_annotation.txt");
    pub const ADS_BLOCK: &str = include_str!("../prompts/ads_block.txt");
    pub const SYNTHESIS_BINARY: &str = include_str!("../prompts/synthesis_binary.txt");
    pub const SYNTHESIS_GENERATE: &str = include_str!("../prompts/synthesis_generate.txt");
    pub const SYNTHESIS_GENERATE_PREFIX: &str =
        include_str!("../prompts/synthesis_generate_prefix.txt");
    pub const ANNOTATE_SELECT: &str = include_str!("../prompts/annotate_select.txt");
    pub const SUMMARIZE: &str = include_str!("../prompts/summarize.txt");
    pub const MORAL_SELECT: &str = include_str!("../prompts/moral_select.txt");

    pub fn render(template: &str, slots: &[(&str, &str)]) -> String {
        let mut out = template.to_string();
        for (name, value) in slots {
            out = out.replace(&format!("{{{{{name}}}}}"), value);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PromptConfig {
    /// Character budget for the rendered representatives block.
    pub ads_char_budget: usize,
    pub max_tokens: u32,
    pub generate_temperature: f64,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            ads_char_budget: 4000,
            max_tokens: 256,
            generate_temperature: 0.2,
        }
    }
}

fn render_ads(texts: &[String], budget: usize) -> (String, bool) {
    let mut block = String::new();
    for (i, text) in texts.iter().enumerate() {
        if i > 0 {
            block.push_str("\n\n");
        }
        block.push_str(&format!("{}. {}", i + 1, text));
    }
    if block.chars().count() > budget {
        let truncated: String = block.chars().take(budget).collect();
        (truncated, true)
    } else {
        (block, false)
    }
}

fn render_topics(taxonomy: &Taxonomy) -> String {
    taxonomy
        .labels()
        .iter()
        .map(|l| format!("- {}", l.text))
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_options(options: &[String]) -> String {
    options
        .iter()
        .map(|o| format!("- {o}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn moral_definitions_block() -> String {
    MoralFoundation::ALL
        .iter()
        .map(|f| format!("{}: {}", f.display_name(), f.definition()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn gateway_err(cluster_id: i32) -> impl FnOnce(LlmError) -> TaxonomyError {
    move |source| TaxonomyError::Gateway { cluster_id, source }
}

fn generate_label(
    gateway: &LlmGateway,
    ads_block: &str,
    config: &PromptConfig,
    cluster_id: i32,
) -> Result<String, TaxonomyError> {
    let user = format!(
        "{}\n\n{}",
        prompts::render(prompts::ADS_BLOCK, &[("ads", ads_block)]),
        prompts::SYNTHESIS_GENERATE
    );
    let request = ChatRequest::new(prompts::SYSTEM_SYNTHESIS, user)
        .with_assistant_prefix(prompts::SYNTHESIS_GENERATE_PREFIX)
        .with_stop("\"")
        .with_temperature(config.generate_temperature);
    gateway.generate(&request).map_err(gateway_err(cluster_id))
}

/// Grow the taxonomy over clusters in ascending cluster-id order: the first
/// cluster (or an empty taxonomy) generates a label directly; afterwards a
/// yes/no gate asks whether any existing label fits, and a "no" triggers
/// generation of a new label. Duplicates are skipped and logged; labels over
/// three words get one regeneration, then truncation.
pub fn synthesize(
    clusters: &[ClusterRepresentatives],
    gateway: &LlmGateway,
    seeds: Option<&[String]>,
    config: &PromptConfig,
) -> Result<SynthesisOutcome, TaxonomyError> {
    let mut taxonomy = match seeds {
        Some(seeds) => Taxonomy::from_seeds(seeds)?,
        None => Taxonomy::new(),
    };
    let mut events = Vec::new();
    let mut ordered: Vec<&ClusterRepresentatives> = clusters.iter().collect();
    ordered.sort_by_key(|c| c.cluster_id);

    for cluster in ordered {
        let cluster_id = cluster.cluster_id;
        if cluster.texts.is_empty() {
            return Err(TaxonomyError::NoRepresentatives(cluster_id));
        }
        let (ads_block, prompt_truncated) = render_ads(&cluster.texts, config.ads_char_budget);
        if prompt_truncated {
            events.push(SynthesisEvent::PromptTruncated {
                cluster_id,
                original_chars: cluster.texts.iter().map(|t| t.chars().count()).sum(),
            });
        }

        let needs_new = if taxonomy.is_empty() {
            true
        } else {
            let user = format!(
                "{}\n\n{}",
                prompts::render(prompts::ADS_BLOCK, &[("ads", &ads_block)]),
                prompts::render(
                    prompts::SYNTHESIS_BINARY,
                    &[("topics", render_topics(&taxonomy).as_str())]
                )
            );
            let request = ChatRequest::new(prompts::SYSTEM_SYNTHESIS, user);
            let choice = ConstrainedChoice::new(vec!["yes".into(), "no".into()])
                .expect("yes/no options are valid");
            let answer = gateway
                .choose(&request, &choice)
                .map_err(gateway_err(cluster_id))?;
            answer == "no"
        };

        if !needs_new {
            events.push(SynthesisEvent::CoveredByExisting { cluster_id });
            continue;
        }

        let mut label = generate_label(gateway, &ads_block, config, cluster_id)?;
        if label.split_whitespace().count() > MAX_LABEL_WORDS {
            // one regeneration attempt, then truncate
            let retry = generate_label(gateway, &ads_block, config, cluster_id)?;
            if retry.split_whitespace().count() <= MAX_LABEL_WORDS {
                label = retry;
            } else {
                let truncated = retry
                    .split_whitespace()
                    .take(MAX_LABEL_WORDS)
                    .collect::<Vec<_>>()
                    .join(" ");
                events.push(SynthesisEvent::Truncated {
                    cluster_id,
                    original: retry,
                    label: truncated.clone(),
                });
                label = truncated;
            }
        }

        if fold(&label) == OTHER_LABEL {
            events.push(SynthesisEvent::ReservedSkipped { cluster_id });
            continue;
        }
        if taxonomy.contains_folded(&label) {
            events.push(SynthesisEvent::DuplicateSkipped { cluster_id, label });
            continue;
        }
        events.push(SynthesisEvent::LabelAdded {
            cluster_id,
            label: label.clone(),
        });
        taxonomy.try_add(TopicLabel {
            text: label,
            origin: LabelOrigin::Synthesized,
            created_from_cluster: Some(cluster_id),
        });
    }

    Ok(SynthesisOutcome { taxonomy, events })
}

/// Annotate each cluster with one taxonomy label or `other`. The result is
/// always drawn from the option set.
pub fn annotate_topics(
    clusters: &[ClusterRepresentatives],
    taxonomy: &Taxonomy,
    gateway: &LlmGateway,
    config: &PromptConfig,
) -> Result<Vec<(i32, String)>, TaxonomyError> {
    if taxonomy.is_empty() {
        return Err(TaxonomyError::EmptyTaxonomy);
    }
    let mut options = taxonomy.label_texts();
    options.push(OTHER_LABEL.to_string());
    let choice = ConstrainedChoice::new(options.clone()).expect("taxonomy labels are distinct");

    let mut ordered: Vec<&ClusterRepresentatives> = clusters.iter().collect();
    ordered.sort_by_key(|c| c.cluster_id);
    let mut annotations = Vec::with_capacity(ordered.len());
    for cluster in ordered {
        if cluster.texts.is_empty() {
            return Err(TaxonomyError::NoRepresentatives(cluster.cluster_id));
        }
        let (ads_block, _) = render_ads(&cluster.texts, config.ads_char_budget);
        let system = prompts::render(prompts::SYSTEM_ANNOTATION, &[("ads", ads_block.as_str())]);
        let user = prompts::render(
            prompts::ANNOTATE_SELECT,
            &[("topics", render_options(&options).as_str())],
        );
        let request = ChatRequest::new(system, user);
        let topic = gateway
            .choose(&request, &choice)
            .map_err(gateway_err(cluster.cluster_id))?;
        annotations.push((cluster.cluster_id, topic));
    }
    Ok(annotations)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub text: String,
    pub trimmed: bool,
}

/// Summarize the primary talking point in one sentence. Content after the
/// first sentence terminator is trimmed and flagged.
pub fn summarize(
    cluster: &ClusterRepresentatives,
    _topic: &str,
    gateway: &LlmGateway,
    config: &PromptConfig,
) -> Result<Summary, TaxonomyError> {
    if cluster.texts.is_empty() {
        return Err(TaxonomyError::NoRepresentatives(cluster.cluster_id));
    }
    let (ads_block, _) = render_ads(&cluster.texts, config.ads_char_budget);
    let system = prompts::render(prompts::SYSTEM_ANNOTATION, &[("ads", ads_block.as_str())]);
    let request = ChatRequest::new(system, prompts::SUMMARIZE)
        .with_temperature(config.generate_temperature);
    let text = gateway
        .generate(&request)
        .map_err(gateway_err(cluster.cluster_id))?;
    Ok(first_sentence(&text))
}

fn first_sentence(text: &str) -> Summary {
    let trimmed_input = text.trim();
    let mut end = None;
    for (idx, c) in trimmed_input.char_indices() {
        if matches!(c, '.' | '!' | '?') {
            end = Some(idx + c.len_utf8());
            break;
        }
    }
    match end {
        Some(end) if end < trimmed_input.len() => {
            let rest = trimmed_input[end..].trim();
            Summary {
                text: trimmed_input[..end].to_string(),
                trimmed: !rest.is_empty(),
            }
        }
        _ => Summary {
            text: trimmed_input.to_string(),
            trimmed: false,
        },
    }
}

/// Classify the most strongly aligned moral foundation for a cluster
/// summary. Always one of the six.
pub fn classify_moral(
    summary: &str,
    topic: &str,
    gateway: &LlmGateway,
    cluster_id: i32,
) -> Result<MoralFoundation, TaxonomyError> {
    let options: Vec<String> = MoralFoundation::ALL
        .iter()
        .map(|f| f.display_name().to_string())
        .collect();
    let choice = ConstrainedChoice::new(options).expect("foundation names are distinct");
    let definitions = moral_definitions_block();
    let user = prompts::render(
        prompts::MORAL_SELECT,
        &[
            ("topic", topic),
            ("moral_foundations_with_definitions", definitions.as_str()),
        ],
    );
    let system = format!("{}\n\nSummary: {}", prompts::SYSTEM_SYNTHESIS, summary);
    let request = ChatRequest::new(system, user);
    let name = gateway
        .choose(&request, &choice)
        .map_err(gateway_err(cluster_id))?;
    Ok(MoralFoundation::from_display(&name).expect("choose returns a listed foundation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptEntry, ScriptedBackend};

    fn bare(response: &str) -> ScriptEntry {
        ScriptEntry {
            substring: None,
            substrings: None,
            position: None,
            response: response.to_string(),
        }
    }

    fn reps(id: i32, texts: &[&str]) -> ClusterRepresentatives {
        ClusterRepresentatives {
            cluster_id: id,
            texts: texts.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn gateway(entries: Vec<ScriptEntry>) -> LlmGateway {
        LlmGateway::new(Box::new(ScriptedBackend::new(entries)))
    }

    #[test]
    fn synthesize_four_cluster_scripted_run() {
        // cluster 0: empty taxonomy -> generate "abortion"
        // cluster 1: yes (covered)
        // cluster 2: no -> generate "economy"
        // cluster 3: yes (covered)
        let gw = gateway(vec![
            bare("abortion\""),
            bare("yes"),
            bare("no"),
            bare("economy\""),
            bare("yes"),
        ]);
        let clusters = vec![
            reps(0, &["Defend reproductive freedom"]),
            reps(1, &["Protect the right to choose"]),
            reps(2, &["Taxes are too high"]),
            reps(3, &["Inflation is hurting families"]),
        ];
        let outcome = synthesize(&clusters, &gw, None, &PromptConfig::default()).unwrap();
        assert_eq!(
            outcome.taxonomy.label_texts(),
            vec!["abortion".to_string(), "economy".to_string()]
        );
        assert_eq!(outcome.taxonomy.labels()[0].origin, LabelOrigin::Synthesized);
        assert_eq!(outcome.taxonomy.labels()[0].created_from_cluster, Some(0));
        assert_eq!(outcome.taxonomy.labels()[1].created_from_cluster, Some(2));
    }

    #[test]
    fn synthesize_single_cluster_base_case() {
        let gw = gateway(vec![bare("voting rights\"")]);
        let clusters = vec![reps(0, &["Register to vote today"])];
        let outcome = synthesize(&clusters, &gw, None, &PromptConfig::default()).unwrap();
        assert_eq!(outcome.taxonomy.len(), 1);
        assert_eq!(outcome.taxonomy.label_texts()[0], "voting rights");
    }

    #[test]
    fn synthesize_skips_duplicate_labels() {
        let gw = gateway(vec![bare("abortion\""), bare("no"), bare("Abortion\"")]);
        let clusters = vec![reps(0, &["a"]), reps(1, &["b"])];
        let outcome = synthesize(&clusters, &gw, None, &PromptConfig::default()).unwrap();
        assert_eq!(outcome.taxonomy.len(), 1);
        assert!(outcome
            .events
            .iter()
            .any(|e| matches!(e, SynthesisEvent::DuplicateSkipped { cluster_id: 1, .. })));
    }

    #[test]
    fn synthesize_truncates_long_labels_after_one_retry() {
        let gw = gateway(vec![
            bare("a very long topic label indeed\""),
            bare("still a very long label\""),
        ]);
        let clusters = vec![reps(0, &["text"])];
        let outcome = synthesize(&clusters, &gw, None, &PromptConfig::default()).unwrap();
        assert_eq!(outcome.taxonomy.label_texts(), vec!["still a very".to_string()]);
        assert!(outcome
            .events
            .iter()
            .any(|e| matches!(e, SynthesisEvent::Truncated { .. })));
    }

    #[test]
    fn synthesize_with_seeds_counts_them() {
        let gw = gateway(vec![bare("yes")]);
        let seeds = vec!["economy".to_string()];
        let clusters = vec![reps(0, &["Taxes are too high"])];
        let outcome = synthesize(&clusters, &gw, Some(&seeds), &PromptConfig::default()).unwrap();
        assert_eq!(outcome.taxonomy.seed_count, 1);
        assert_eq!(outcome.taxonomy.labels()[0].origin, LabelOrigin::Seed);
    }

    #[test]
    fn annotate_other_and_scripted_mapping() {
        let taxonomy = {
            let mut t = Taxonomy::new();
            t.try_add(TopicLabel {
                text: "economy".into(),
                origin: LabelOrigin::Synthesized,
                created_from_cluster: Some(0),
            });
            t
        };
        let gw = gateway(vec![bare("other")]);
        let clusters = vec![reps(0, &["Gloucester sewer sale facts"])];
        let notes = annotate_topics(&clusters, &taxonomy, &gw, &PromptConfig::default()).unwrap();
        assert_eq!(notes, vec![(0, "other".to_string())]);

        let gw = gateway(vec![bare("economy"), bare("other"), bare("economy")]);
        let clusters = vec![reps(0, &["a"]), reps(1, &["b"]), reps(2, &["c"])];
        let notes = annotate_topics(&clusters, &taxonomy, &gw, &PromptConfig::default()).unwrap();
        assert_eq!(
            notes,
            vec![
                (0, "economy".to_string()),
                (1, "other".to_string()),
                (2, "economy".to_string())
            ]
        );
    }

    #[test]
    fn annotate_requires_taxonomy() {
        let gw = gateway(vec![]);
        let clusters = vec![reps(0, &["a"])];
        assert!(matches!(
            annotate_topics(&clusters, &Taxonomy::new(), &gw, &PromptConfig::default()),
            Err(TaxonomyError::EmptyTaxonomy)
        ));
    }

    #[test]
    fn summarize_passthrough_and_trim() {
        let gw = gateway(vec![bare("They argue X.")]);
        let summary = summarize(
            &reps(0, &["ad"]),
            "economy",
            &gw,
            &PromptConfig::default(),
        )
        .unwrap();
        assert_eq!(summary.text, "They argue X.");
        assert!(!summary.trimmed);

        let gw = gateway(vec![bare("First sentence. Second sentence.")]);
        let summary = summarize(
            &reps(0, &["ad"]),
            "economy",
            &gw,
            &PromptConfig::default(),
        )
        .unwrap();
        assert_eq!(summary.text, "First sentence.");
        assert!(summary.trimmed);
    }

    #[test]
    fn classify_moral_maps_display_names() {
        let gw = gateway(vec![bare("Liberty/Oppression")]);
        let foundation = classify_moral("They argue X.", "abortion", &gw, 0).unwrap();
        assert_eq!(foundation, MoralFoundation::LibertyOppression);
    }

    #[test]
    fn classify_moral_off_list_resolves_via_fallback() {
        let gw = gateway(vec![ScriptEntry {
            substring: Some("moral foundations".into()),
            substrings: None,
            position: None,
            response: "definitely the one about liberty and oppression themes".into(),
        }]);
        let foundation = classify_moral("summary", "abortion", &gw, 0).unwrap();
        assert_eq!(foundation, MoralFoundation::LibertyOppression);
        let transcript = gw.transcript();
        assert_eq!(
            transcript.entries.last().unwrap().resolution,
            crate::llm::Resolution::TokenOverlapFallback
        );
    }

    #[test]
    fn taxonomy_rejects_reserved_and_duplicates() {
        let mut t = Taxonomy::new();
        assert!(t.try_add(TopicLabel {
            text: "Economy".into(),
            origin: LabelOrigin::Synthesized,
            created_from_cluster: None,
        }));
        assert!(!t.try_add(TopicLabel {
            text: " economy ".into(),
            origin: LabelOrigin::Synthesized,
            created_from_cluster: None,
        }));
        assert!(!t.try_add(TopicLabel {
            text: "Other".into(),
            origin: LabelOrigin::Synthesized,
            created_from_cluster: None,
        }));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn replaying_transcript_reproduces_taxonomy() {
        let gw = gateway(vec![
            bare("abortion\""),
            bare("no"),
            bare("economy\""),
            bare("yes"),
        ]);
        let clusters = vec![reps(0, &["a"]), reps(1, &["b"]), reps(2, &["c"])];
        let first = synthesize(&clusters, &gw, None, &PromptConfig::default()).unwrap();
        let transcript = gw.transcript();

        let replay = LlmGateway::new(Box::new(crate::llm::ReplayBackend::new(&transcript)));
        let second = synthesize(&clusters, &replay, None, &PromptConfig::default()).unwrap();
        assert_eq!(first.taxonomy.label_texts(), second.taxonomy.label_texts());
        assert_eq!(
            serde_json::to_string(&first.taxonomy).unwrap(),
            serde_json::to_string(&second.taxonomy).unwrap()
        );
    }
}
