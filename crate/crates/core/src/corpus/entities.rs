use std::collections::HashSet;
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

/// Finds person and location mentions that preprocessing replaces with the
/// `ent` tag.
pub trait EntityRecognizer {
    /// Byte ranges of entity mentions in `text`, sorted and non-overlapping.
    fn entity_spans(&self, text: &str) -> Vec<Range<usize>>;
}

/// Recognizes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoEntities;

impl EntityRecognizer for NoEntities {
    fn entity_spans(&self, _text: &str) -> Vec<Range<usize>> {
        Vec::new()
    }
}

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z][A-Za-z']*").unwrap());

const NAMES: &str = include_str!("../../data/entity_names.txt");

/// Words that are capitalized mid-sentence without being names.
const NOT_ENTITIES: &[&str] = &[
    "i", "i'm", "i'll", "i've", "i'd", "monday", "tuesday", "wednesday", "thursday", "friday",
    "saturday", "sunday", "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december", "mr", "mrs", "ms", "dr", "ok",
    "english", "internet", "christmas", "thanks", "regards", "please", "dear", "hi", "hello",
];

/// Default recognizer: a title-case word is an entity when it appears in the
/// shipped name/location lexicon, or when it occurs mid-sentence and is not a
/// known non-entity (pronoun "I", weekdays, months, salutations, and the
/// default organization names, which the cue detector needs to see).
///
/// Lowercase text never produces a match, which keeps preprocessing
/// idempotent.
#[derive(Debug, Clone)]
pub struct HeuristicRecognizer {
    names: HashSet<String>,
    stop: HashSet<String>,
    mid_sentence: bool,
}

impl Default for HeuristicRecognizer {
    fn default() -> Self {
        Self::with_names(
            NAMES
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }
}

impl HeuristicRecognizer {
    pub fn with_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        HeuristicRecognizer {
            names: names
                .into_iter()
                .map(|n| n.as_ref().to_ascii_lowercase())
                .collect(),
            stop: NOT_ENTITIES
                .iter()
                .map(|s| s.to_string())
                .chain(crate::cues::CueLexicons::default().organizations)
                .collect(),
            mid_sentence: true,
        }
    }

    /// Only lexicon names are recognized; capitalization position is ignored.
    pub fn lexicon_only(mut self) -> Self {
        self.mid_sentence = false;
        self
    }

    fn is_entity(&self, word: &str, sentence_start: bool) -> bool {
        if !is_title_case(word) {
            return false;
        }
        let lower = word.to_ascii_lowercase();
        if self.names.contains(&lower) {
            return true;
        }
        self.mid_sentence && !sentence_start && !self.stop.contains(&lower)
    }
}

fn is_title_case(word: &str) -> bool {
    let mut letters = word.chars().filter(char::is_ascii_alphabetic);
    match letters.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    let rest: Vec<char> = letters.collect();
    !rest.is_empty() && rest.iter().all(char::is_ascii_lowercase)
}

impl EntityRecognizer for HeuristicRecognizer {
    fn entity_spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans: Vec<Range<usize>> = Vec::new();
        let mut prev_end: Option<usize> = None;
        for m in WORD.find_iter(text) {
            let sentence_start = match prev_end {
                None => true,
                Some(end) => text[end..m.start()]
                    .chars()
                    .any(|c| matches!(c, '.' | '!' | '?' | '\n' | ':')),
            };
            if self.is_entity(m.as_str(), sentence_start) {
                // "John Smith" becomes a single span
                match spans.last_mut() {
                    Some(last)
                        if prev_end == Some(last.end)
                            && text[last.end..m.start()].chars().all(|c| c == ' ' || c == '\t') =>
                    {
                        last.end = m.end();
                    }
                    _ => spans.push(m.range()),
                }
            }
            prev_end = Some(m.end());
        }
        spans
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str, rec: &impl EntityRecognizer) -> Vec<String> {
        rec.entity_spans(text)
            .into_iter()
            .map(|r| text[r].to_string())
            .collect()
    }

    #[test]
    fn mid_sentence_capitals_are_entities() {
        let rec = HeuristicRecognizer::with_names(Vec::<&str>::new());
        assert_eq!(words("Hello John, visit now", &rec), ["John"]);
        assert_eq!(words("Hello. Visit John Smith today", &rec), ["John Smith"]);
    }

    #[test]
    fn sentence_starts_and_stopwords_are_not() {
        let rec = HeuristicRecognizer::with_names(Vec::<&str>::new());
        assert!(words("Thanks for that. I think Monday works, I'm sure", &rec).is_empty());
        assert!(words("line one\nThanks again", &rec).is_empty());
        assert!(words("all lowercase text here", &rec).is_empty());
        assert!(words("the ASAP thing", &rec).is_empty());
        assert!(words("your Microsoft account", &rec).is_empty());
    }

    #[test]
    fn lexicon_names_match_at_sentence_start() {
        let rec = HeuristicRecognizer::with_names(["houston"]).lexicon_only();
        assert_eq!(words("Houston is hot. We met Bob", &rec), ["Houston"]);
        assert!(words("houston lowercase", &rec).is_empty());
    }

    #[test]
    fn shipped_lexicon_loads() {
        let rec = HeuristicRecognizer::default();
        assert!(rec.names.contains("john"));
        assert_eq!(words("John called.", &rec), ["John"]);
    }
}
