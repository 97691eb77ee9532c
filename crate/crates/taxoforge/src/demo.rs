//! Bundled synthetic mini-corpus: ~300 ad-like documents over five planted
//! themes, plus the matching scripted-LLM routing table. Everything here is
//! deterministic for a given seed, so offline end-to-end runs are
//! reproducible bit-for-bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::corpus::Ad;
use crate::llm::ScriptEntry;
use crate::taxonomy::MoralFoundation;

/// One planted theme: the topic label the script synthesizes, a marker word
/// present in every document of the theme (and nowhere else), the scripted
/// moral foundation, and the scripted one-sentence summary.
pub struct ThemeSpec {
    pub label: &'static str,
    pub marker: &'static str,
    pub foundation: MoralFoundation,
    pub summary: &'static str,
}

pub const THEMES: [ThemeSpec; 5] = [
    ThemeSpec {
        label: "economy",
        marker: "inflation",
        foundation: MoralFoundation::FairnessCheating,
        summary: "They argue that reckless spending fuels inflation and hurts working families.",
    },
    ThemeSpec {
        label: "abortion",
        marker: "reproductive",
        foundation: MoralFoundation::LibertyOppression,
        summary: "They argue that reproductive decisions belong to patients, not the government.",
    },
    ThemeSpec {
        label: "immigration",
        marker: "asylum",
        foundation: MoralFoundation::LoyaltyBetrayal,
        summary: "They argue that the asylum system is overwhelmed and needs secure, orderly rules.",
    },
    ThemeSpec {
        label: "education",
        marker: "classrooms",
        foundation: MoralFoundation::CareHarm,
        summary: "They argue that classrooms need funding and teachers deserve real support.",
    },
    ThemeSpec {
        label: "crime/justice",
        marker: "sheriff",
        foundation: MoralFoundation::AuthoritySubversion,
        summary: "They argue that backing the sheriff and the courts keeps neighborhoods safe.",
    },
];

const NAMES: [&str; 12] = [
    "Morgan Hale", "Riley Voss", "Jordan Pike", "Casey Trent", "Avery Stone", "Quinn Marsh",
    "Rowan Ellis", "Dana Frost", "Jamie Larkin", "Taylor Reeve", "Skyler Nash", "Emery Cole",
];

const CITIES: [&str; 10] = [
    "Riverton", "Oak Falls", "Cedar Bluff", "Lakewood", "Granite City", "Fairmont",
    "Springdale", "Harborview", "Milltown", "Crestview",
];

/// Theme-weighted state pools so the targeting analyses have structure.
const THEME_STATES: [[&str; 3]; 5] = [
    ["MT", "IA", "OH"],
    ["FL", "AZ", "NV"],
    ["TX", "CO", "NM"],
    ["MN", "WI", "MI"],
    ["VA", "PA", "GA"],
];

const THEME_FUNDERS: [[&str; 3]; 5] = [
    ["Prosperity Now PAC", "Taxpayers First Fund", "Main Street Growth PAC"],
    ["Freedom of Choice Coalition", "Patients Rights Fund", "Family Values Alliance"],
    ["Secure Borders Council", "New Arrivals Welcome Fund", "Heartland Priorities PAC"],
    ["Teachers United PAC", "Strong Schools Fund", "Parents for Progress"],
    ["Safe Streets Committee", "Judicial Fairness Project", "Community Watch PAC"],
];

fn openings(theme: usize) -> [&'static str; 4] {
    match theme {
        0 => [
            "Grocery bills keep climbing while wages stand still.",
            "Small businesses in {city} are squeezed from every side.",
            "Families across {state} feel the pinch at the pump and the register.",
            "The cost of living in {city} has never been higher.",
        ],
        1 => [
            "Politicians keep inserting themselves into private medical decisions.",
            "Voters in {state} face a stark choice about personal freedom.",
            "Doctors in {city} warn about government interference in care.",
            "A patient and a doctor should make decisions together, nobody else.",
        ],
        2 => [
            "The border situation touches every community, including {city}.",
            "Processing backlogs leave {state} communities without answers.",
            "Our immigration courts are years behind schedule.",
            "Communities in {state} deserve an honest conversation about migration.",
        ],
        3 => [
            "Every child in {city} deserves a great public school.",
            "Teachers in {state} are buying supplies out of pocket.",
            "Class sizes keep growing while funding shrinks.",
            "Our public schools are the heart of {city}.",
        ],
        _ => [
            "Families in {city} deserve to feel safe on every street.",
            "Court backlogs let repeat offenders back out in {state}.",
            "Neighborhood patrols in {city} are stretched thin.",
            "Public safety is on the ballot across {state}.",
        ],
    }
}

fn cores(theme: usize) -> [&'static str; 4] {
    match theme {
        0 => [
            "{name} has a real plan to fight inflation and cut wasteful spending.",
            "{name} will tackle inflation head on and lower costs for working families.",
            "Runaway inflation is a tax on everyone, and {name} will treat it that way.",
            "{name} backs an inflation audit of every state agency.",
        ],
        1 => [
            "{name} will defend reproductive freedom in every vote.",
            "{name} trusts patients to make their own reproductive choices.",
            "Our reproductive rights in {state} are on the line this year.",
            "{name} opposes any ban that strips away reproductive care.",
        ],
        2 => [
            "{name} supports fixing the asylum process with more judges and clear rules.",
            "{name} wants asylum cases heard in months, not years.",
            "The asylum backlog is a failure of leadership, and {name} will end it.",
            "{name} backs a fair but firm asylum standard.",
        ],
        3 => [
            "{name} will get funding out of bureaucracy and into classrooms.",
            "{name} wants smaller classrooms and better pay for teachers.",
            "The classrooms of {state} deserve current textbooks and working technology.",
            "{name} pledges every new education dollar goes straight to classrooms.",
        ],
        _ => [
            "{name} is endorsed by the county sheriff and local firefighters.",
            "{name} will fund the sheriff and fix the court backlog.",
            "The county sheriff trusts {name} to keep {city} safe.",
            "{name} stands with the sheriff on accountability and safety.",
        ],
    }
}

fn closings(theme: usize) -> [&'static str; 4] {
    match theme {
        0 => [
            "Vote {name} to put {state} budgets back on track.",
            "On November 5th, choose lower costs. Choose {name}.",
            "Send {name} to the capitol and send the bill collectors packing.",
            "It is time for prices families can plan around.",
        ],
        1 => [
            "Vote {name} on November 5th.",
            "Your voice decides this in {state}.",
            "Stand with {name} and with patients everywhere.",
            "This November, freedom is on the ballot.",
        ],
        2 => [
            "Vote {name} for order and fairness.",
            "{state} needs a workable system, not slogans.",
            "Send {name} a mandate for real reform.",
            "Ballots decide this on November 5th.",
        ],
        3 => [
            "Vote for students. Vote {name}.",
            "Stand with teachers across {state}.",
            "Our kids cannot wait another term.",
            "On November 5th, put schools first.",
        ],
        _ => [
            "Vote {name} for safer streets.",
            "{city} deserves leaders who back the badge.",
            "Send {name} to keep our courts honest.",
            "Safety first on November 5th.",
        ],
    }
}

/// Deterministically generate the mini corpus. Every document of a theme
/// contains that theme's marker word; spends, impressions, and demographic
/// shares are theme-skewed so the downstream reports are non-trivial.
pub fn generate_mini_corpus(n_docs: usize, seed: u64) -> Vec<Ad> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ads = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let theme = i % THEMES.len();
        let name = NAMES[rng.gen_range(0..NAMES.len())];
        let city = CITIES[rng.gen_range(0..CITIES.len())];
        let states = THEME_STATES[theme];
        let primary_state = states[rng.gen_range(0..states.len())];
        let secondary_state = states[(states.iter().position(|s| *s == primary_state).unwrap()
            + 1 + rng.gen_range(0..2))
            % states.len()];

        let fill = |template: &str| {
            template
                .replace("{name}", name)
                .replace("{city}", city)
                .replace("{state}", primary_state)
        };
        let body = format!(
            "{} {} {}",
            fill(openings(theme)[rng.gen_range(0..4)]),
            fill(cores(theme)[rng.gen_range(0..4)]),
            fill(closings(theme)[rng.gen_range(0..4)]),
        );

        // theme-skewed targeting
        let male = 0.25 + 0.1 * theme as f64 + rng.gen_range(-0.05..0.05);
        let unknown = 0.05;
        let female = 1.0 - male - unknown;
        let older_bias = matches!(theme, 1 | 4);
        let mut age_weights = if older_bias {
            vec![0.02, 0.06, 0.10, 0.14, 0.20, 0.24, 0.24]
        } else {
            vec![0.06, 0.22, 0.24, 0.18, 0.14, 0.10, 0.06]
        };
        for w in &mut age_weights {
            *w *= 1.0 + rng.gen_range(-0.1..0.1);
        }
        let age_total: f64 = age_weights.iter().sum();
        let age_shares: BTreeMap<String, f64> = crate::corpus::AGE_BUCKETS
            .iter()
            .zip(&age_weights)
            .map(|(bucket, w)| (bucket.to_string(), w / age_total))
            .collect();

        let primary_share = rng.gen_range(0.55..0.8);
        let region_shares: BTreeMap<String, f64> = [
            (primary_state.to_string(), primary_share),
            (secondary_state.to_string(), 1.0 - primary_share),
        ]
        .into_iter()
        .collect();

        let spend_base = 50.0 * (theme as f64 + 1.0) + rng.gen_range(0.0..50.0);
        let impressions_base = 1000.0 * (theme as f64 + 1.0) + rng.gen_range(0.0..1000.0);
        let funders = THEME_FUNDERS[theme];

        ads.push(Ad {
            ad_id: format!("mini-{i:04}"),
            title: format!("{name} for {state}", state = primary_state),
            body,
            url: None,
            created_at: 1_727_740_800 + i as i64 * 60,
            campaign_start: 1_727_740_800,
            campaign_end: if i % 3 == 0 {
                None
            } else {
                Some(1_730_764_800)
            },
            page_name: format!("{name} Campaign"),
            funding_entity: funders[i / THEMES.len() % funders.len()].to_string(),
            spend_lo: (spend_base / 10.0).floor() * 10.0,
            spend_hi: (spend_base / 10.0).floor() * 10.0 + 99.0,
            impressions_lo: (impressions_base / 100.0).floor() * 100.0,
            impressions_hi: (impressions_base / 100.0).floor() * 100.0 + 999.0,
            gender_shares: [
                ("male".to_string(), male),
                ("female".to_string(), female),
                ("unknown".to_string(), unknown),
            ]
            .into_iter()
            .collect(),
            age_shares,
            region_shares,
            language: "en".to_string(),
        });
    }
    ads
}

fn route(substrings: &[&str], response: &str) -> ScriptEntry {
    ScriptEntry {
        substring: None,
        substrings: Some(substrings.iter().map(|s| s.to_string()).collect()),
        position: None,
        response: response.to_string(),
    }
}

/// The scripted-LLM routing table matching [`generate_mini_corpus`]. Routes
/// key on the theme marker words that appear in every representative text,
/// so the script works for any clustering of the corpus.
pub fn mini_corpus_script() -> Vec<ScriptEntry> {
    let mut entries = Vec::new();
    for theme in &THEMES {
        // synthesis gate: label already present -> yes, else no + generate
        entries.push(route(
            &["Answer with \"yes\"", &format!("- {}", theme.label), theme.marker],
            "yes",
        ));
        entries.push(route(&["Answer with \"yes\"", theme.marker], "no"));
        entries.push(route(
            &["In three words or less", theme.marker],
            &format!("{}\"", theme.label),
        ));
        // annotation, summary, moral foundation
        entries.push(route(
            &["Which of the following topics", theme.marker],
            theme.label,
        ));
        entries.push(route(
            &["Summarize the main talking point", theme.marker],
            theme.summary,
        ));
        entries.push(route(
            &["moral foundations", &format!("about {}", theme.label)],
            theme.foundation.display_name(),
        ));
    }
    // catch-alls keep mixed clusters moving instead of erroring out
    entries.push(route(&["Answer with \"yes\""], "no"));
    entries.push(route(&["In three words or less"], "other\""));
    entries.push(route(&["Which of the following topics"], "other"));
    entries.push(route(
        &["Summarize the main talking point"],
        "They discuss local ballot questions.",
    ));
    entries.push(route(&["moral foundations"], "Care/Harm"));
    entries
}

/// Write `mini_corpus.jsonl` and `llm_script.json` under `dir`, returning
/// their paths.
pub fn write_demo_files(
    dir: &Path,
    n_docs: usize,
    seed: u64,
) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let ads = generate_mini_corpus(n_docs, seed);
    let corpus_path = dir.join("mini_corpus.jsonl");
    let mut jsonl = String::new();
    for ad in &ads {
        jsonl.push_str(&serde_json::to_string(ad).expect("ad serializes"));
        jsonl.push('\n');
    }
    std::fs::write(&corpus_path, jsonl)?;
    let script_path = dir.join("llm_script.json");
    std::fs::write(
        &script_path,
        serde_json::to_string_pretty(&mini_corpus_script()).expect("script serializes"),
    )?;
    Ok((corpus_path, script_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_marked() {
        let a = generate_mini_corpus(300, 7);
        let b = generate_mini_corpus(300, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
        for (i, ad) in a.iter().enumerate() {
            let theme = &THEMES[i % THEMES.len()];
            assert!(
                ad.body.contains(theme.marker),
                "ad {i} missing marker {}: {}",
                theme.marker,
                ad.body
            );
            // no other theme's marker bleeds in
            for other in THEMES.iter().filter(|t| t.marker != theme.marker) {
                assert!(!ad.body.contains(other.marker), "ad {i}: {}", ad.body);
            }
            let gender_sum: f64 = ad.gender_shares.values().sum();
            assert!((gender_sum - 1.0).abs() < 1e-9);
            let age_sum: f64 = ad.age_shares.values().sum();
            assert!((age_sum - 1.0).abs() < 1e-9);
            let region_sum: f64 = ad.region_shares.values().sum();
            assert!((region_sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn markers_never_appear_in_labels() {
        for theme in &THEMES {
            for other in &THEMES {
                assert!(!other.label.contains(theme.marker));
            }
        }
    }

    #[test]
    fn script_parses_and_routes() {
        use crate::llm::{ChatRequest, LlmBackend, ScriptedBackend};
        let backend = ScriptedBackend::new(mini_corpus_script());
        // generation for an economy cluster
        let generate = ChatRequest::new(
            "You are a political analyst.",
            "Ads:\n1. inflation is up\n\nIn three words or less, describe the issue",
        );
        assert_eq!(backend.complete(&generate).unwrap(), "economy\"");
        // existing-label gate answers yes once "- economy" is listed
        let gate_yes = ChatRequest::new(
            "system",
            "Ads: inflation talk\nTopics:\n- economy\n\nAnswer with \"yes\" or \"no\".",
        );
        assert_eq!(backend.complete(&gate_yes).unwrap(), "yes");
        let gate_no = ChatRequest::new(
            "system",
            "Ads: inflation talk\nTopics:\n- abortion\n\nAnswer with \"yes\" or \"no\".",
        );
        assert_eq!(backend.complete(&gate_no).unwrap(), "no");
        // moral routing keys on the annotated topic
        let moral = ChatRequest::new(
            "system",
            "Which of the following moral foundations best describes the arguments used in the ads about abortion?",
        );
        assert_eq!(backend.complete(&moral).unwrap(), "Liberty/Oppression");
    }
}
