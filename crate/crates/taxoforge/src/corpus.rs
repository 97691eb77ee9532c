//! Ad-corpus ingestion: parse JSON-lines or CSV exports into canonical [`Ad`]
//! records, validate ranges and demographic shares, and expose the
//! range-midpoint and demographic-cell computations used downstream.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The seven canonical age buckets, in reporting order.
pub const AGE_BUCKETS: [&str; 7] = [
    "13-17", "18-24", "25-34", "35-44", "45-54", "55-64", "65+",
];

/// The three gender buckets. `unknown` is a first-class cell, never dropped.
pub const GENDER_BUCKETS: [&str; 3] = ["male", "female", "unknown"];

/// Share families may drift slightly from 1.0 in platform exports; anything
/// inside this band is accepted as-is, anything outside is renormalized.
pub const SHARE_SUM_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("zero valid rows in {0}")]
    ZeroValidRows(String),
    #[error("unknown corpus format tag `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("ad {ad_id}: missing share family `{family}` for scheme {scheme}")]
    MissingShareFamily {
        ad_id: String,
        family: &'static str,
        scheme: DemographicScheme,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One advertisement record, normalized from a platform export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ad {
    pub ad_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub url: Option<String>,
    /// UTC epoch seconds.
    #[serde(default)]
    pub created_at: i64,
    #[serde(default)]
    pub campaign_start: i64,
    /// Absent means the campaign is still running.
    #[serde(default)]
    pub campaign_end: Option<i64>,
    #[serde(default)]
    pub page_name: String,
    #[serde(default)]
    pub funding_entity: String,
    pub spend_lo: f64,
    pub spend_hi: f64,
    pub impressions_lo: f64,
    pub impressions_hi: f64,
    /// Fractions over {male, female, unknown}; empty when not reported.
    #[serde(default)]
    pub gender_shares: BTreeMap<String, f64>,
    /// Fractions over the seven [`AGE_BUCKETS`]; empty when not reported.
    #[serde(default)]
    pub age_shares: BTreeMap<String, f64>,
    /// Fractions keyed by state code; empty when not reported.
    #[serde(default)]
    pub region_shares: BTreeMap<String, f64>,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "en".to_string()
}

impl Ad {
    /// Average of the spend range endpoints.
    pub fn spend_midpoint(&self) -> f64 {
        (self.spend_lo + self.spend_hi) / 2.0
    }

    /// Average of the impressions range endpoints.
    pub fn impressions_midpoint(&self) -> f64 {
        (self.impressions_lo + self.impressions_hi) / 2.0
    }
}

/// An ordered, duplicate-free collection of ads. Immutable after ingest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub ads: Vec<Ad>,
    pub source_path: String,
    pub ingested_at: i64,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    /// Serialize the ads as canonical JSON-lines. Byte-deterministic for a
    /// given ad list; ingesting the output yields the same ads back.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ad in &self.ads {
            out.push_str(&serde_json::to_string(ad).expect("ad serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// A row that failed validation, kept for the rejects report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectRecord {
    pub line: usize,
    pub ad_id: Option<String>,
    pub reason: String,
}

/// A share family whose sum fell outside the tolerance band and was
/// renormalized (or emptied when the sum was zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShareWarning {
    pub ad_id: String,
    pub family: String,
    pub original_sum: f64,
}

/// Everything `ingest` produces: the corpus plus the audit trail.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    pub rejects: Vec<RejectRecord>,
    pub warnings: Vec<ShareWarning>,
}

/// Demographic cell schemes supported by [`demographic_cells`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemographicScheme {
    StateGender,
    StateAge,
    State,
    Gender,
    Age,
}

impl fmt::Display for DemographicScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DemographicScheme::StateGender => "state_gender",
            DemographicScheme::StateAge => "state_age",
            DemographicScheme::State => "state",
            DemographicScheme::Gender => "gender",
            DemographicScheme::Age => "age",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for DemographicScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "state_gender" | "state-gender" => Ok(DemographicScheme::StateGender),
            "state_age" | "state-age" => Ok(DemographicScheme::StateAge),
            "state" => Ok(DemographicScheme::State),
            "gender" => Ok(DemographicScheme::Gender),
            "age" => Ok(DemographicScheme::Age),
            other => Err(format!("unknown demographic scheme `{other}`")),
        }
    }
}

/// Expand one ad into weighted demographic cells.
///
/// Each cell weight is `impressions_midpoint × product of the relevant
/// shares`, so the weights over a complete scheme sum to the midpoint times
/// the product of the family share sums. Cell ids are `state`, `gender`,
/// `age`, or `state|gender` / `state|age` for the cross schemes.
pub fn demographic_cells(
    ad: &Ad,
    scheme: DemographicScheme,
) -> Result<Vec<(String, f64)>, CorpusError> {
    let need = |family: &'static str, map: &BTreeMap<String, f64>| {
        if map.is_empty() {
            Err(CorpusError::MissingShareFamily {
                ad_id: ad.ad_id.clone(),
                family,
                scheme,
            })
        } else {
            Ok(())
        }
    };
    let imp = ad.impressions_midpoint();
    let mut cells = Vec::new();
    match scheme {
        DemographicScheme::State => {
            need("region", &ad.region_shares)?;
            for (state, share) in &ad.region_shares {
                cells.push((state.clone(), imp * share));
            }
        }
        DemographicScheme::Gender => {
            need("gender", &ad.gender_shares)?;
            for (g, share) in &ad.gender_shares {
                cells.push((g.clone(), imp * share));
            }
        }
        DemographicScheme::Age => {
            need("age", &ad.age_shares)?;
            for (a, share) in &ad.age_shares {
                cells.push((a.clone(), imp * share));
            }
        }
        DemographicScheme::StateGender => {
            need("region", &ad.region_shares)?;
            need("gender", &ad.gender_shares)?;
            for (state, rs) in &ad.region_shares {
                for (g, gs) in &ad.gender_shares {
                    cells.push((format!("{state}|{g}"), imp * rs * gs));
                }
            }
        }
        DemographicScheme::StateAge => {
            need("region", &ad.region_shares)?;
            need("age", &ad.age_shares)?;
            for (state, rs) in &ad.region_shares {
                for (a, as_) in &ad.age_shares {
                    cells.push((format!("{state}|{a}"), imp * rs * as_));
                }
            }
        }
    }
    Ok(cells)
}

/// Parse and validate a corpus export. Malformed rows land in the rejects
/// report instead of being dropped; duplicate ad_ids keep the first
/// occurrence and reject the rest.
pub fn ingest(path: &Path, format: CorpusFormat) -> Result<IngestOutcome, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Unreadable {
        path: display.clone(),
        source,
    })?;
    let mut ads: Vec<Ad> = Vec::new();
    let mut rejects = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = std::collections::HashSet::new();

    let mut push = |raw: Result<RawAd, String>, line: usize| {
        let raw = match raw {
            Ok(raw) => raw,
            Err(reason) => {
                rejects.push(RejectRecord {
                    line,
                    ad_id: None,
                    reason,
                });
                return;
            }
        };
        match validate(raw, &mut warnings) {
            Ok(ad) => {
                if seen.insert(ad.ad_id.clone()) {
                    ads.push(ad);
                } else {
                    rejects.push(RejectRecord {
                        line,
                        ad_id: Some(ad.ad_id),
                        reason: "duplicate ad_id (first occurrence kept)".to_string(),
                    });
                }
            }
            Err((ad_id, reason)) => rejects.push(RejectRecord {
                line,
                ad_id,
                reason,
            }),
        }
    };

    match format {
        CorpusFormat::Jsonl => {
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|source| CorpusError::Unreadable {
                    path: display.clone(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                push(parse_jsonl_row(&line), idx + 1);
            }
        }
        CorpusFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(file);
            let headers: Vec<String> = rdr
                .headers()?
                .iter()
                .map(|h| h.trim().to_ascii_lowercase())
                .collect();
            for (idx, record) in rdr.records().enumerate() {
                let record = record?;
                push(parse_csv_row(&headers, &record), idx + 2);
            }
        }
    }

    if ads.is_empty() {
        return Err(CorpusError::ZeroValidRows(display));
    }
    let ingested_at = chrono::Utc::now().timestamp();
    Ok(IngestOutcome {
        corpus: Corpus {
            ads,
            source_path: display,
            ingested_at,
        },
        rejects,
        warnings,
    })
}

/// A parsed-but-unvalidated ad, shared by the JSONL and CSV paths.
struct RawAd {
    ad_id: String,
    title: String,
    body: String,
    url: Option<String>,
    created_at: i64,
    campaign_start: i64,
    campaign_end: Option<i64>,
    page_name: String,
    funding_entity: String,
    spend_lo: f64,
    spend_hi: f64,
    impressions_lo: f64,
    impressions_hi: f64,
    gender_shares: BTreeMap<String, f64>,
    age_shares: BTreeMap<String, f64>,
    region_shares: BTreeMap<String, f64>,
    language: String,
}

fn validate(
    raw: RawAd,
    warnings: &mut Vec<ShareWarning>,
) -> Result<Ad, (Option<String>, String)> {
    if raw.ad_id.trim().is_empty() {
        return Err((None, "missing ad_id".to_string()));
    }
    let id = raw.ad_id.trim().to_string();
    let fail = |reason: String| Err((Some(id.clone()), reason));
    for (name, lo, hi) in [
        ("spend", raw.spend_lo, raw.spend_hi),
        ("impressions", raw.impressions_lo, raw.impressions_hi),
    ] {
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi < 0.0 {
            return fail(format!("{name} range not finite and non-negative"));
        }
        if lo > hi {
            return fail(format!("{name} range inverted ({lo} > {hi})"));
        }
    }
    let mut check_family = |family: &str,
                            shares: BTreeMap<String, f64>|
     -> Result<BTreeMap<String, f64>, String> {
        if shares.is_empty() {
            return Ok(shares);
        }
        for (k, v) in &shares {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 {
                return Err(format!("{family} share `{k}` = {v} outside [0,1]"));
            }
        }
        let sum: f64 = shares.values().sum();
        if sum == 0.0 {
            warnings.push(ShareWarning {
                ad_id: id.clone(),
                family: family.to_string(),
                original_sum: 0.0,
            });
            return Ok(BTreeMap::new());
        }
        if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
            warnings.push(ShareWarning {
                ad_id: id.clone(),
                family: family.to_string(),
                original_sum: sum,
            });
            return Ok(shares.into_iter().map(|(k, v)| (k, v / sum)).collect());
        }
        Ok(shares)
    };
    let gender_shares = match check_family("gender", raw.gender_shares) {
        Ok(s) => s,
        Err(reason) => return fail(reason),
    };
    let age_shares = match check_family("age", raw.age_shares) {
        Ok(s) => s,
        Err(reason) => return fail(reason),
    };
    let region_shares = match check_family("region", raw.region_shares) {
        Ok(s) => s,
        Err(reason) => return fail(reason),
    };
    Ok(Ad {
        ad_id: id,
        title: raw.title,
        body: raw.body,
        url: raw.url,
        created_at: raw.created_at,
        campaign_start: raw.campaign_start,
        campaign_end: raw.campaign_end,
        page_name: raw.page_name,
        funding_entity: raw.funding_entity,
        spend_lo: raw.spend_lo,
        spend_hi: raw.spend_hi,
        impressions_lo: raw.impressions_lo,
        impressions_hi: raw.impressions_hi,
        gender_shares,
        age_shares,
        region_shares,
        language: raw.language,
    })
}

// ---------------------------------------------------------------------------
// JSONL parsing: canonical Ad records or platform ad-library export rows
// ---------------------------------------------------------------------------

/// Number-or-string helper; platform exports carry numerics as strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    fn as_f64(&self) -> Option<f64> {
        match self {
            NumOrStr::Num(n) => Some(*n),
            NumOrStr::Str(s) => s.trim().parse().ok(),
        }
    }
}

#[derive(Deserialize)]
struct ExportRange {
    lower_bound: Option<NumOrStr>,
    upper_bound: Option<NumOrStr>,
}

#[derive(Deserialize)]
struct ExportDemographic {
    percentage: NumOrStr,
    #[serde(default)]
    age: Option<String>,
    #[serde(default)]
    gender: Option<String>,
}

#[derive(Deserialize)]
struct ExportRegion {
    percentage: NumOrStr,
    region: String,
}

#[derive(Deserialize)]
struct ExportRow {
    #[serde(alias = "id")]
    ad_id: Option<String>,
    #[serde(default)]
    ad_creative_link_title: Option<String>,
    #[serde(default)]
    ad_creative_link_titles: Option<Vec<String>>,
    #[serde(default)]
    ad_creative_body: Option<String>,
    #[serde(default)]
    ad_creative_bodies: Option<Vec<String>>,
    #[serde(default)]
    ad_snapshot_url: Option<String>,
    #[serde(default)]
    ad_creation_time: Option<String>,
    #[serde(default)]
    ad_delivery_start_time: Option<String>,
    #[serde(default)]
    ad_delivery_stop_time: Option<String>,
    #[serde(default)]
    page_name: Option<String>,
    #[serde(default, alias = "bylines")]
    funding_entity: Option<String>,
    #[serde(default)]
    spend: Option<ExportRange>,
    #[serde(default)]
    impressions: Option<ExportRange>,
    #[serde(default)]
    demographic_distribution: Option<Vec<ExportDemographic>>,
    #[serde(default)]
    delivery_by_region: Option<Vec<ExportRegion>>,
    #[serde(default)]
    languages: Option<Vec<String>>,
}

fn parse_jsonl_row(line: &str) -> Result<RawAd, String> {
    // Canonical records carry spend_lo; export rows carry a spend object.
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if value.get("spend_lo").is_some() {
        let ad: Ad = serde_json::from_value(value)
            .map_err(|e| format!("invalid canonical ad record: {e}"))?;
        return Ok(RawAd {
            ad_id: ad.ad_id,
            title: ad.title,
            body: ad.body,
            url: ad.url,
            created_at: ad.created_at,
            campaign_start: ad.campaign_start,
            campaign_end: ad.campaign_end,
            page_name: ad.page_name,
            funding_entity: ad.funding_entity,
            spend_lo: ad.spend_lo,
            spend_hi: ad.spend_hi,
            impressions_lo: ad.impressions_lo,
            impressions_hi: ad.impressions_hi,
            gender_shares: ad.gender_shares,
            age_shares: ad.age_shares,
            region_shares: ad.region_shares,
            language: ad.language,
        });
    }
    let row: ExportRow =
        serde_json::from_value(value).map_err(|e| format!("invalid export row: {e}"))?;
    export_to_raw(row)
}

fn range_bounds(range: Option<ExportRange>, what: &str) -> Result<(f64, f64), String> {
    match range {
        None => Ok((0.0, 0.0)),
        Some(r) => {
            let lo = match &r.lower_bound {
                None => 0.0,
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| format!("unparseable {what} lower_bound"))?,
            };
            let hi = match &r.upper_bound {
                None => lo,
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| format!("unparseable {what} upper_bound"))?,
            };
            Ok((lo, hi))
        }
    }
}

fn export_to_raw(row: ExportRow) -> Result<RawAd, String> {
    let ad_id = row.ad_id.unwrap_or_default();
    let title = row
        .ad_creative_link_title
        .or_else(|| row.ad_creative_link_titles.and_then(|v| v.into_iter().next()))
        .unwrap_or_default();
    let body = row
        .ad_creative_body
        .or_else(|| row.ad_creative_bodies.and_then(|v| v.into_iter().next()))
        .unwrap_or_default();
    let (spend_lo, spend_hi) = range_bounds(row.spend, "spend")?;
    let (impressions_lo, impressions_hi) = range_bounds(row.impressions, "impressions")?;

    let mut gender_shares: BTreeMap<String, f64> = BTreeMap::new();
    let mut age_shares: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(demo) = row.demographic_distribution {
        for d in demo {
            let pct = d
                .percentage
                .as_f64()
                .ok_or("unparseable demographic percentage")?;
            if let Some(g) = &d.gender {
                let key = g.trim().to_ascii_lowercase();
                if GENDER_BUCKETS.contains(&key.as_str()) {
                    *gender_shares.entry(key).or_insert(0.0) += pct;
                }
            }
            if let Some(a) = &d.age {
                let key = a.trim().to_string();
                if AGE_BUCKETS.contains(&key.as_str()) {
                    *age_shares.entry(key).or_insert(0.0) += pct;
                }
            }
        }
    }
    let mut region_shares: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(regions) = row.delivery_by_region {
        for r in regions {
            let pct = r
                .percentage
                .as_f64()
                .ok_or("unparseable region percentage")?;
            *region_shares.entry(state_code(&r.region)).or_insert(0.0) += pct;
        }
    }

    Ok(RawAd {
        ad_id,
        title,
        body,
        url: row.ad_snapshot_url,
        created_at: row
            .ad_creation_time
            .as_deref()
            .and_then(parse_timestamp)
            .unwrap_or(0),
        campaign_start: row
            .ad_delivery_start_time
            .as_deref()
            .and_then(parse_timestamp)
            .unwrap_or(0),
        campaign_end: row.ad_delivery_stop_time.as_deref().and_then(parse_timestamp),
        page_name: row.page_name.unwrap_or_default(),
        funding_entity: row.funding_entity.unwrap_or_default(),
        spend_lo,
        spend_hi,
        impressions_lo,
        impressions_hi,
        gender_shares,
        age_shares,
        region_shares,
        language: row
            .languages
            .and_then(|v| v.into_iter().next())
            .unwrap_or_else(default_language),
    })
}

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

fn parse_csv_row(headers: &[String], record: &csv::StringRecord) -> Result<RawAd, String> {
    let get = |name: &str| -> Option<&str> {
        headers
            .iter()
            .position(|h| h == name)
            .and_then(|i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    };
    let num = |name: &str| -> Result<f64, String> {
        match get(name) {
            None => Ok(0.0),
            Some(s) => s
                .parse()
                .map_err(|_| format!("unparseable number in column `{name}`: {s}")),
        }
    };
    let ts = |name: &str| -> Option<i64> { get(name).and_then(parse_timestamp) };

    let mut gender_shares = BTreeMap::new();
    for g in GENDER_BUCKETS {
        let v = num(&format!("gender_{g}"))?;
        if v > 0.0 {
            gender_shares.insert(g.to_string(), v);
        }
    }
    let mut age_shares = BTreeMap::new();
    for bucket in AGE_BUCKETS {
        let column = format!("age_{}", bucket.replace('-', "_").replace('+', "_plus"));
        let v = num(&column)?;
        if v > 0.0 {
            age_shares.insert(bucket.to_string(), v);
        }
    }
    let mut region_shares = BTreeMap::new();
    if let Some(spec) = get("region_shares") {
        for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
            let (code, frac) = part
                .split_once(':')
                .ok_or_else(|| format!("bad region_shares entry `{part}` (want CODE:FRACTION)"))?;
            let frac: f64 = frac
                .trim()
                .parse()
                .map_err(|_| format!("bad region fraction in `{part}`"))?;
            *region_shares
                .entry(state_code(code.trim()))
                .or_insert(0.0) += frac;
        }
    }

    let spend_lo = num("spend_lo")?;
    Ok(RawAd {
        ad_id: get("ad_id").unwrap_or_default().to_string(),
        title: get("title").unwrap_or_default().to_string(),
        body: get("body").unwrap_or_default().to_string(),
        url: get("url").map(str::to_string),
        created_at: ts("created_at").unwrap_or(0),
        campaign_start: ts("campaign_start").unwrap_or(0),
        campaign_end: ts("campaign_end"),
        page_name: get("page_name").unwrap_or_default().to_string(),
        funding_entity: get("funding_entity").unwrap_or_default().to_string(),
        spend_lo,
        spend_hi: if get("spend_hi").is_some() {
            num("spend_hi")?
        } else {
            spend_lo
        },
        impressions_lo: num("impressions_lo")?,
        impressions_hi: num("impressions_hi")?,
        gender_shares,
        age_shares,
        region_shares,
        language: get("language").unwrap_or("en").to_string(),
    })
}

/// Parse epoch seconds, RFC 3339, `%Y-%m-%dT%H:%M:%S%z` (platform exports use
/// `+0000` offsets), or a bare `%Y-%m-%d` date (UTC midnight).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(epoch) = s.parse::<i64>() {
        return Some(epoch);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = chrono::DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%z") {
        return Some(dt.timestamp());
    }
    if let Ok(date) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    None
}

/// Map a region name from the export to a USPS state code. Two-letter inputs
/// pass through uppercased; unrecognized names are kept verbatim so no
/// delivery data is silently discarded.
pub fn state_code(region: &str) -> String {
    let trimmed = region.trim();
    if trimmed.len() == 2 && trimmed.chars().all(|c| c.is_ascii_alphabetic()) {
        return trimmed.to_ascii_uppercase();
    }
    let lower = trimmed.to_ascii_lowercase();
    for (name, code) in STATE_CODES {
        if lower == *name {
            return (*code).to_string();
        }
    }
    trimmed.to_string()
}

const STATE_CODES: &[(&str, &str)] = &[
    ("alabama", "AL"),
    ("alaska", "AK"),
    ("arizona", "AZ"),
    ("arkansas", "AR"),
    ("california", "CA"),
    ("colorado", "CO"),
    ("connecticut", "CT"),
    ("delaware", "DE"),
    ("district of columbia", "DC"),
    ("washington, district of columbia", "DC"),
    ("florida", "FL"),
    ("georgia", "GA"),
    ("hawaii", "HI"),
    ("idaho", "ID"),
    ("illinois", "IL"),
    ("indiana", "IN"),
    ("iowa", "IA"),
    ("kansas", "KS"),
    ("kentucky", "KY"),
    ("louisiana", "LA"),
    ("maine", "ME"),
    ("maryland", "MD"),
    ("massachusetts", "MA"),
    ("michigan", "MI"),
    ("minnesota", "MN"),
    ("mississippi", "MS"),
    ("missouri", "MO"),
    ("montana", "MT"),
    ("nebraska", "NE"),
    ("nevada", "NV"),
    ("new hampshire", "NH"),
    ("new jersey", "NJ"),
    ("new mexico", "NM"),
    ("new york", "NY"),
    ("north carolina", "NC"),
    ("north dakota", "ND"),
    ("ohio", "OH"),
    ("oklahoma", "OK"),
    ("oregon", "OR"),
    ("pennsylvania", "PA"),
    ("rhode island", "RI"),
    ("south carolina", "SC"),
    ("south dakota", "SD"),
    ("tennessee", "TN"),
    ("texas", "TX"),
    ("utah", "UT"),
    ("vermont", "VT"),
    ("virginia", "VA"),
    ("washington", "WA"),
    ("west virginia", "WV"),
    ("wisconsin", "WI"),
    ("wyoming", "WY"),
    ("puerto rico", "PR"),
    ("guam", "GU"),
    ("american samoa", "AS"),
    ("u.s. virgin islands", "VI"),
    ("northern mariana islands", "MP"),
];

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ad_with_shares() -> Ad {
        Ad {
            ad_id: "a1".into(),
            title: "t".into(),
            body: "b".into(),
            url: None,
            created_at: 0,
            campaign_start: 0,
            campaign_end: None,
            page_name: "p".into(),
            funding_entity: "f".into(),
            spend_lo: 100.0,
            spend_hi: 199.0,
            impressions_lo: 1000.0,
            impressions_hi: 1000.0,
            gender_shares: [("male".to_string(), 0.5), ("female".to_string(), 0.5)]
                .into_iter()
                .collect(),
            age_shares: BTreeMap::new(),
            region_shares: [("FL".to_string(), 1.0)].into_iter().collect(),
            language: "en".into(),
        }
    }

    #[test]
    fn midpoints_are_endpoint_averages() {
        let mut ad = ad_with_shares();
        assert_eq!(ad.spend_midpoint(), 149.5);
        ad.spend_lo = 0.0;
        ad.spend_hi = 0.0;
        assert_eq!(ad.spend_midpoint(), 0.0);
        ad.spend_lo = 1000.0;
        ad.spend_hi = 5000.0;
        assert_eq!(ad.spend_midpoint(), 3000.0);
        assert_eq!(ad.impressions_midpoint(), 1000.0);
    }

    #[test]
    fn single_state_gender_cell_weight() {
        let mut ad = ad_with_shares();
        ad.gender_shares = [("male".to_string(), 0.5), ("female".to_string(), 0.5)]
            .into_iter()
            .collect();
        let cells = demographic_cells(&ad, DemographicScheme::StateGender).unwrap();
        let fl_male = cells.iter().find(|(id, _)| id == "FL|male").unwrap();
        assert!((fl_male.1 - 500.0).abs() < 1e-9);
    }

    #[test]
    fn missing_family_errors() {
        let mut ad = ad_with_shares();
        ad.region_shares.clear();
        let err = demographic_cells(&ad, DemographicScheme::State).unwrap_err();
        assert!(matches!(err, CorpusError::MissingShareFamily { .. }));
    }

    #[test]
    fn two_state_cells_match_hand_computation() {
        let mut ad = ad_with_shares();
        ad.impressions_lo = 800.0;
        ad.impressions_hi = 1200.0; // midpoint 1000
        ad.region_shares = [("FL".to_string(), 0.7), ("GA".to_string(), 0.3)]
            .into_iter()
            .collect();
        ad.gender_shares = [
            ("male".to_string(), 0.4),
            ("female".to_string(), 0.5),
            ("unknown".to_string(), 0.1),
        ]
        .into_iter()
        .collect();
        let cells = demographic_cells(&ad, DemographicScheme::StateGender).unwrap();
        let lookup = |id: &str| cells.iter().find(|(c, _)| c == id).unwrap().1;
        // hand: 1000 * 0.7 * 0.4 = 280, etc.
        assert!((lookup("FL|male") - 280.0).abs() < 1e-9);
        assert!((lookup("FL|female") - 350.0).abs() < 1e-9);
        assert!((lookup("FL|unknown") - 70.0).abs() < 1e-9);
        assert!((lookup("GA|male") - 120.0).abs() < 1e-9);
        assert!((lookup("GA|female") - 150.0).abs() < 1e-9);
        assert!((lookup("GA|unknown") - 30.0).abs() < 1e-9);
        let total: f64 = cells.iter().map(|(_, w)| w).sum();
        assert!((total - 1000.0).abs() / 1000.0 < 1e-9);
    }

    #[test]
    fn reject_row_missing_ad_id() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            tmp,
            r#"{{"ad_id":"a","spend":{{"lower_bound":"0","upper_bound":"99"}},"impressions":{{"lower_bound":"0","upper_bound":"0"}}}}"#
        )
        .unwrap();
        writeln!(tmp, r#"{{"spend":{{"lower_bound":"0"}}}}"#).unwrap();
        writeln!(
            tmp,
            r#"{{"ad_id":"b","spend":{{"lower_bound":"100","upper_bound":"199"}}}}"#
        )
        .unwrap();
        let outcome = ingest(tmp.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(outcome.corpus.len(), 2);
        assert_eq!(outcome.rejects.len(), 1);
        assert_eq!(outcome.rejects[0].reason, "missing ad_id");
    }

    #[test]
    fn empty_file_is_zero_valid_rows() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        let err = ingest(tmp.path(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::ZeroValidRows(_)));
    }

    #[test]
    fn duplicate_ad_id_keeps_first() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, r#"{{"ad_id":"a","ad_creative_body":"first"}}"#).unwrap();
        writeln!(tmp, r#"{{"ad_id":"a","ad_creative_body":"second"}}"#).unwrap();
        let outcome = ingest(tmp.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(outcome.corpus.len(), 1);
        assert_eq!(outcome.corpus.ads[0].body, "first");
        assert_eq!(outcome.rejects.len(), 1);
    }

    #[test]
    fn share_family_outside_band_renormalizes_with_warning() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            tmp,
            r#"{{"ad_id":"a","demographic_distribution":[{{"percentage":"0.5","gender":"male"}},{{"percentage":"0.4","gender":"female"}}]}}"#
        )
        .unwrap();
        let outcome = ingest(tmp.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(outcome.warnings.len(), 1);
        assert!((outcome.warnings[0].original_sum - 0.9).abs() < 1e-12);
        let shares = &outcome.corpus.ads[0].gender_shares;
        let sum: f64 = shares.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((shares["male"] - 0.5 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn ingest_roundtrip_is_idempotent() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            tmp,
            r#"{{"ad_id":"a1","ad_creative_link_title":"T","ad_creative_body":"Vote!","ad_creation_time":"2024-10-01T12:00:00+0000","page_name":"P","bylines":"Fund","spend":{{"lower_bound":"100","upper_bound":"199"}},"impressions":{{"lower_bound":"1000","upper_bound":"5000"}},"demographic_distribution":[{{"percentage":"0.6","age":"25-34","gender":"male"}},{{"percentage":"0.4","age":"35-44","gender":"female"}}],"delivery_by_region":[{{"percentage":"1.0","region":"Florida"}}],"languages":["en"]}}"#
        )
        .unwrap();
        let first = ingest(tmp.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(first.corpus.ads[0].region_shares.get("FL"), Some(&1.0));
        assert_eq!(first.corpus.ads[0].created_at, 1727784000);

        let mut canon = tempfile::NamedTempFile::new().unwrap();
        canon.write_all(first.corpus.to_jsonl().as_bytes()).unwrap();
        let second = ingest(canon.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(first.corpus.ads, second.corpus.ads);
        assert_eq!(first.corpus.to_jsonl(), second.corpus.to_jsonl());
    }

    #[test]
    fn csv_headers_are_case_insensitive() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            tmp,
            "AD_ID,Title,Body,Spend_Lo,Spend_Hi,Impressions_Lo,Impressions_Hi,Gender_Male,Gender_Female,Region_Shares"
        )
        .unwrap();
        writeln!(tmp, "x1,Hello,World,0,99,1000,2000,0.5,0.5,FL:0.8;GA:0.2").unwrap();
        let outcome = ingest(tmp.path(), CorpusFormat::Csv).unwrap();
        let ad = &outcome.corpus.ads[0];
        assert_eq!(ad.ad_id, "x1");
        assert_eq!(ad.spend_midpoint(), 49.5);
        assert_eq!(ad.region_shares["FL"], 0.8);
    }

    #[test]
    fn midpoint_stays_inside_range() {
        let ad = ad_with_shares();
        assert!(ad.spend_midpoint() >= ad.spend_lo && ad.spend_midpoint() <= ad.spend_hi);
        assert!(
            ad.impressions_midpoint() >= ad.impressions_lo
                && ad.impressions_midpoint() <= ad.impressions_hi
        );
    }

    #[test]
    fn state_codes_map_names_and_pass_codes() {
        assert_eq!(state_code("Florida"), "FL");
        assert_eq!(state_code("fl"), "FL");
        assert_eq!(state_code("District of Columbia"), "DC");
        assert_eq!(state_code("Atlantis"), "Atlantis");
    }

    #[test]
    fn unknown_format_tag_errors() {
        assert!(matches!(
            "parquet".parse::<CorpusFormat>(),
            Err(CorpusError::UnknownFormat(_))
        ));
        assert!(matches!("JSONL".parse::<CorpusFormat>(), Ok(CorpusFormat::Jsonl)));
        assert!(matches!("csv".parse::<CorpusFormat>(), Ok(CorpusFormat::Csv)));
    }

    #[test]
    fn csv_bad_number_row_is_rejected_not_dropped_silently() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "ad_id,body,spend_lo,spend_hi").unwrap();
        writeln!(tmp, "ok,hello,10,20").unwrap();
        writeln!(tmp, "bad,world,ten,20").unwrap();
        let outcome = ingest(tmp.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(outcome.corpus.len(), 1);
        assert_eq!(outcome.rejects.len(), 1);
        assert!(outcome.rejects[0].reason.contains("spend_lo"));
    }

    proptest::proptest! {
        /// Cell weights over a product scheme sum to the impressions
        /// midpoint times the product of the family share sums.
        #[test]
        fn cell_weights_sum_to_midpoint_times_family_sums(
            imp_lo in 0.0f64..1e6,
            imp_extra in 0.0f64..1e6,
            region_raw in proptest::collection::vec(0.01f64..1.0, 1..6),
            gender_raw in proptest::collection::vec(0.01f64..1.0, 1..3),
        ) {
            let mut ad = ad_with_shares();
            ad.impressions_lo = imp_lo;
            ad.impressions_hi = imp_lo + imp_extra;
            let rsum: f64 = region_raw.iter().sum();
            ad.region_shares = region_raw
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("S{i}"), v / rsum))
                .collect();
            let gsum: f64 = gender_raw.iter().sum();
            ad.gender_shares = gender_raw
                .iter()
                .enumerate()
                .map(|(i, v)| (GENDER_BUCKETS[i].to_string(), v / gsum))
                .collect();
            let cells = demographic_cells(&ad, DemographicScheme::StateGender).unwrap();
            let total: f64 = cells.iter().map(|(_, w)| w).sum();
            let region_total: f64 = ad.region_shares.values().sum();
            let gender_total: f64 = ad.gender_shares.values().sum();
            let expected = ad.impressions_midpoint() * region_total * gender_total;
            let scale = expected.abs().max(1e-12);
            proptest::prop_assert!((total - expected).abs() / scale < 1e-9);
        }
    }
}
