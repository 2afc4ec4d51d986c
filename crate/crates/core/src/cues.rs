//! Lexicon-based detection of phishing cues: organization names, action
//! verbs, urgency adverbs, links, near-miss spellings of organizations and
//! words outside the English dictionary.
//!
//! Detection runs on preprocessed text, one token at a time. Positions
//! count tokens with the `<SOT>`/`<EOT>` markers removed.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags;

const DEFAULT_LEXICONS: &str = include_str!("../data/lexicons.toml");
const ENGLISH_WORDS: &str = include_str!("../data/english_words.txt");

/// Key reserved in lexicon files for persuasion-principle phrases; accepted
/// and ignored.
pub const RESERVED_CATEGORY: &str = "persuasion_principles";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueCategory {
    Organizations,
    ActionVerbs,
    UrgencyAdverbs,
    Links,
    MisspelledOrganizations,
    NonEnglish,
}

impl CueCategory {
    pub const ALL: [CueCategory; 6] = [
        CueCategory::Organizations,
        CueCategory::ActionVerbs,
        CueCategory::UrgencyAdverbs,
        CueCategory::Links,
        CueCategory::MisspelledOrganizations,
        CueCategory::NonEnglish,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CueCategory::Organizations => "organizations",
            CueCategory::ActionVerbs => "action_verbs",
            CueCategory::UrgencyAdverbs => "urgency_adverbs",
            CueCategory::Links => "links",
            CueCategory::MisspelledOrganizations => "misspelled_organizations",
            CueCategory::NonEnglish => "non_english",
        }
    }
}

impl fmt::Display for CueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Word lists driving [`detect_cues`]. All entries are lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueLexicons {
    pub organizations: BTreeSet<String>,
    pub action_verbs: BTreeSet<String>,
    pub urgency_adverbs: BTreeSet<String>,
    pub english_dictionary: HashSet<String>,
    /// Largest Levenshtein distance at which a token still counts as a
    /// misspelled organization.
    pub max_edit_distance: usize,
}

static SHIPPED: LazyLock<CueLexicons> = LazyLock::new(|| {
    let base = CueLexicons {
        organizations: BTreeSet::new(),
        action_verbs: BTreeSet::new(),
        urgency_adverbs: BTreeSet::new(),
        english_dictionary: ENGLISH_WORDS
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_ascii_lowercase)
            .collect(),
        max_edit_distance: 1,
    };
    base.overlay(DEFAULT_LEXICONS)
        .expect("shipped lexicon file is valid")
});

impl Default for CueLexicons {
    /// The shipped lexicons and the bundled ~25k-word English list.
    fn default() -> Self {
        SHIPPED.clone()
    }
}

impl CueLexicons {
    /// Parses a lexicon file. Categories it omits keep their shipped
    /// defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        CueLexicons::default().overlay(text)
    }

    fn overlay(mut self, text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Lexicon {
            category: "<file>".into(),
            reason: e.message().to_string(),
        })?;
        for (key, value) in table {
            let bad = |reason: &str| Error::Lexicon {
                category: key.clone(),
                reason: reason.to_string(),
            };
            match key.as_str() {
                RESERVED_CATEGORY => {}
                "max_edit_distance" => {
                    let d = value
                        .as_integer()
                        .filter(|d| *d >= 0)
                        .ok_or_else(|| bad("expected a non-negative integer"))?;
                    self.max_edit_distance = d as usize;
                }
                "organizations" | "action_verbs" | "urgency_adverbs" | "english_dictionary" => {
                    let words = word_list(&value).map_err(|r| bad(&r))?;
                    match key.as_str() {
                        "organizations" => self.organizations = words.into_iter().collect(),
                        "action_verbs" => self.action_verbs = words.into_iter().collect(),
                        "urgency_adverbs" => self.urgency_adverbs = words.into_iter().collect(),
                        _ => self.english_dictionary = words.into_iter().collect(),
                    }
                }
                _ => return Err(bad("unknown category")),
            }
        }
        Ok(self)
    }

    fn in_any_lexicon(&self, token: &str) -> bool {
        self.organizations.contains(token)
            || self.action_verbs.contains(token)
            || self.urgency_adverbs.contains(token)
    }

    fn near_organization(&self, token: &str) -> bool {
        let max = self.max_edit_distance;
        self.organizations.iter().any(|org| {
            // cheap length bound before the quadratic distance
            org.len().abs_diff(token.len()) <= max && {
                let d = strsim::levenshtein(token, org);
                d > 0 && d <= max
            }
        })
    }
}

fn word_list(value: &toml::Value) -> std::result::Result<Vec<String>, String> {
    let items = value.as_array().ok_or("expected an array of strings")?;
    let mut words = Vec::with_capacity(items.len());
    for item in items {
        let w = item.as_str().ok_or("expected an array of strings")?.trim();
        if w.is_empty() || w.contains(char::is_whitespace) {
            return Err(format!("entry {w:?} is not a single token"));
        }
        words.push(w.to_lowercase());
    }
    if words.is_empty() {
        return Err("category is empty".into());
    }
    Ok(words)
}

/// Reads a lexicon file; a path that does not exist yields the shipped
/// defaults.
pub fn load_lexicons(path: &Path) -> Result<CueLexicons> {
    if !path.exists() {
        return Ok(CueLexicons::default());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CueLexicons::from_toml_str(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueMatch {
    pub token: String,
    pub position: usize,
}

/// Per-category hits for one email. Every category is present in both maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueReport {
    pub matches: BTreeMap<CueCategory, Vec<CueMatch>>,
    pub word_count: usize,
    /// Hits per word; zero for an empty body.
    pub densities: BTreeMap<CueCategory, f64>,
}

impl CueReport {
    pub fn count(&self, category: CueCategory) -> usize {
        self.matches.get(&category).map_or(0, Vec::len)
    }

    pub fn tokens(&self, category: CueCategory) -> Vec<&str> {
        self.matches
            .get(&category)
            .map(|m| m.iter().map(|c| c.token.as_str()).collect())
            .unwrap_or_default()
    }
}

/// Scans a preprocessed body for cues.
///
/// ```
/// use hiermail::cues::{detect_cues, CueCategory, CueLexicons};
///
/// let lex = CueLexicons::default();
/// let r = detect_cues("click here immediately to update your paypl account", &lex);
/// assert_eq!(r.tokens(CueCategory::ActionVerbs), ["click", "update"]);
/// assert_eq!(r.tokens(CueCategory::MisspelledOrganizations), ["paypl"]);
/// ```
pub fn detect_cues(clean_body: &str, lex: &CueLexicons) -> CueReport {
    let mut matches: BTreeMap<CueCategory, Vec<CueMatch>> =
        CueCategory::ALL.iter().map(|&c| (c, Vec::new())).collect();
    let words = clean_body.split_whitespace().filter(|t| !tags::is_marker(t));
    let mut word_count = 0;
    for (position, token) in words.enumerate() {
        word_count += 1;
        let mut hit = |c: CueCategory| {
            matches.get_mut(&c).unwrap().push(CueMatch {
                token: token.to_string(),
                position,
            })
        };
        if token == tags::LINK {
            hit(CueCategory::Links);
            continue;
        }
        if tags::is_tag(token) {
            continue;
        }
        if lex.organizations.contains(token) {
            hit(CueCategory::Organizations);
        }
        if lex.action_verbs.contains(token) {
            hit(CueCategory::ActionVerbs);
        }
        if lex.urgency_adverbs.contains(token) {
            hit(CueCategory::UrgencyAdverbs);
        }
        if lex.in_any_lexicon(token) || lex.english_dictionary.contains(token) {
            continue;
        }
        // contractions and hyphenated compounds are judged by their parts
        let parts: Vec<&str> = token.split(['\'', '-']).filter(|p| !p.is_empty()).collect();
        if parts.is_empty() || !parts.iter().all(|p| p.bytes().all(|b| b.is_ascii_lowercase())) {
            continue;
        }
        if lex.near_organization(token) {
            hit(CueCategory::MisspelledOrganizations);
        } else if !parts.iter().all(|p| lex.english_dictionary.contains(*p)) {
            hit(CueCategory::NonEnglish);
        }
    }
    let densities = matches
        .iter()
        .map(|(&c, m)| {
            let d = if word_count == 0 {
                0.0
            } else {
                m.len() as f64 / word_count as f64
            };
            (c, d)
        })
        .collect();
    CueReport {
        matches,
        word_count,
        densities,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CueTotals {
    pub total: usize,
    /// Unweighted mean of the per-email densities.
    pub mean_density: f64,
}

/// Category totals over a batch of reports, printable as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueSummary(pub BTreeMap<CueCategory, CueTotals>);

impl CueSummary {
    pub fn get(&self, category: CueCategory) -> CueTotals {
        self.0[&category]
    }
}

impl fmt::Display for CueSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<26} {:>8} {:>12}", "Category", "Count", "Density")?;
        for (c, t) in &self.0 {
            writeln!(f, "{:<26} {:>8} {:>12.6}", c.as_str(), t.total, t.mean_density)?;
        }
        Ok(())
    }
}

pub fn cue_summary(reports: &[CueReport]) -> Result<CueSummary> {
    if reports.is_empty() {
        return Err(Error::Empty("cue reports"));
    }
    let n = reports.len() as f64;
    Ok(CueSummary(
        CueCategory::ALL
            .iter()
            .map(|&c| {
                let total = reports.iter().map(|r| r.count(c)).sum();
                let mean_density =
                    reports.iter().map(|r| r.densities.get(&c).copied().unwrap_or(0.0)).sum::<f64>() / n;
                (c, CueTotals { total, mean_density })
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_empty(r: &CueReport) -> bool {
        CueCategory::ALL.iter().all(|&c| r.count(c) == 0)
    }

    #[test]
    fn shipped_defaults() {
        let lex = CueLexicons::default();
        assert!(lex.action_verbs.contains("click"));
        assert!(lex.action_verbs.contains("update"));
        assert!(lex.urgency_adverbs.contains("immediately"));
        assert!(lex.organizations.contains("paypal"));
        assert!(lex.english_dictionary.len() > 20_000);
        assert_eq!(lex.max_edit_distance, 1);
    }

    #[test]
    fn phishing_sentence() {
        let lex = CueLexicons::default();
        let r = detect_cues(
            "<SOT> click here immediately to update your paypal account <EOT>",
            &lex,
        );
        assert_eq!(r.tokens(CueCategory::ActionVerbs), ["click", "update"]);
        assert_eq!(r.tokens(CueCategory::UrgencyAdverbs), ["immediately"]);
        assert_eq!(r.tokens(CueCategory::Organizations), ["paypal"]);
        assert_eq!(r.count(CueCategory::NonEnglish), 0);
        assert_eq!(r.word_count, 8);
        assert_eq!(r.matches[&CueCategory::ActionVerbs][1].position, 4);
        assert_eq!(r.densities[&CueCategory::ActionVerbs], 0.25);
    }

    #[test]
    fn plain_sentence_has_no_cues() {
        let r = detect_cues("the meeting is at noon", &CueLexicons::default());
        assert!(all_empty(&r));
    }

    #[test]
    fn links_misspellings_and_foreign_words() {
        let lex = CueLexicons::default();
        let r = detect_cues("aviso importante de bbva : see link , paypl and ent 's don't", &lex);
        assert_eq!(r.tokens(CueCategory::Links), ["link"]);
        assert_eq!(r.tokens(CueCategory::MisspelledOrganizations), ["paypl"]);
        assert_eq!(r.tokens(CueCategory::Organizations), ["bbva"]);
        assert_eq!(r.tokens(CueCategory::NonEnglish), ["aviso", "importante"]);
    }

    #[test]
    fn edit_distance_respects_limit() {
        let mut lex = CueLexicons::default();
        assert_eq!(detect_cues("pypl", &lex).count(CueCategory::MisspelledOrganizations), 0);
        lex.max_edit_distance = 2;
        assert_eq!(detect_cues("pypl", &lex).count(CueCategory::MisspelledOrganizations), 1);
    }

    #[test]
    fn lexicon_file_parsing() {
        let lex = CueLexicons::from_toml_str(
            "action_verbs = [\"click\", \"Click\", \"wire\"]\npersuasion_principles = [\"authority\"]",
        )
        .unwrap();
        assert_eq!(lex.action_verbs.len(), 2);
        assert!(lex.organizations.contains("paypal"));

        for (text, category) in [
            ("organizations = []", "organizations"),
            ("action_verbs = \"click\"", "action_verbs"),
            ("urgency_adverbs = [1]", "urgency_adverbs"),
            ("slang = [\"lol\"]", "slang"),
            ("max_edit_distance = -1", "max_edit_distance"),
        ] {
            match CueLexicons::from_toml_str(text) {
                Err(Error::Lexicon { category: c, .. }) => assert_eq!(c, category),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_uses_defaults() {
        let lex = load_lexicons(Path::new("/definitely/not/here.toml")).unwrap();
        assert_eq!(lex, CueLexicons::default());
    }

    #[test]
    fn summary_means_and_totals() {
        let lex = CueLexicons::default();
        let a = detect_cues("click a b c d e f g h i", &lex);
        let b = detect_cues("click click click d e f g h i j", &lex);
        let s = cue_summary(&[a.clone(), b]).unwrap();
        let t = s.get(CueCategory::ActionVerbs);
        assert_eq!(t.total, 4);
        assert!((t.mean_density - 0.2).abs() < 1e-12);
        let single = cue_summary(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.get(CueCategory::ActionVerbs).total, a.count(CueCategory::ActionVerbs));
        assert!(cue_summary(&[]).is_err());
    }
}
