//! Email corpora: loading, the cleaning/tagging pipeline, length filters,
//! dataset statistics and train/validation splits.

mod entities;
mod maildir;
mod preprocess;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags;

pub use entities::{EntityRecognizer, HeuristicRecognizer, NoEntities};
pub use maildir::load_maildir;
pub use preprocess::preprocess_email;

/// One message body, raw and cleaned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Email {
    pub id: String,
    pub raw_body: String,
    /// Tagged, lowercased body wrapped in `<SOT>` ... `<EOT>`. Empty until
    /// preprocessed.
    pub clean_body: String,
    /// Sentences of `clean_body` without the start/end markers.
    pub sentences: Vec<Vec<String>>,
    pub word_count: usize,
    pub sentence_count: usize,
}

impl Email {
    pub fn new(id: impl Into<String>, raw_body: impl Into<String>) -> Self {
        Email {
            id: id.into(),
            raw_body: raw_body.into(),
            clean_body: String::new(),
            sentences: Vec::new(),
            word_count: 0,
            sentence_count: 0,
        }
    }

    /// Builds an email from an already-cleaned body, deriving sentences and
    /// counts from it.
    pub fn from_clean(
        id: impl Into<String>,
        raw_body: impl Into<String>,
        clean_body: impl Into<String>,
    ) -> Self {
        let clean_body = clean_body.into();
        let words: Vec<&str> = clean_body
            .split_whitespace()
            .filter(|t| !tags::is_marker(t))
            .collect();
        let sentences = split_sentences(&words);
        Email {
            id: id.into(),
            raw_body: raw_body.into(),
            word_count: words.len(),
            sentence_count: sentences.len(),
            sentences,
            clean_body,
        }
    }

    pub fn preprocess(&self, recognizer: &dyn EntityRecognizer) -> Email {
        let clean = preprocess_email(&self.raw_body, recognizer);
        Email::from_clean(self.id.clone(), self.raw_body.clone(), clean)
    }

    pub fn is_preprocessed(&self) -> bool {
        !self.clean_body.is_empty()
    }

    /// All tokens of the clean body, markers included.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.clean_body.split_whitespace()
    }

    /// Tokens of the clean body without the start/end markers.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens().filter(|t| !tags::is_marker(t))
    }
}

/// Splits after every `.`, `!` or `?` token. A trailing run without a
/// terminator forms the last sentence.
pub fn split_sentences<S: AsRef<str>>(words: &[S]) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for w in words {
        let w = w.as_ref();
        current.push(w.to_string());
        if tags::is_sentence_terminator(w) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub emails: Vec<Email>,
    pub source_label: String,
}

impl Corpus {
    /// Fails on duplicate ids.
    pub fn new(emails: Vec<Email>, source_label: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(emails.len());
        for e in &emails {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        Ok(Corpus {
            emails,
            source_label: source_label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.emails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emails.is_empty()
    }

    pub fn preprocess(&self, recognizer: &dyn EntityRecognizer) -> Corpus {
        Corpus {
            emails: self.emails.iter().map(|e| e.preprocess(recognizer)).collect(),
            source_label: self.source_label.clone(),
        }
    }

    fn subset(&self, keep: impl Fn(usize, &Email) -> bool) -> Corpus {
        Corpus {
            emails: self
                .emails
                .iter()
                .enumerate()
                .filter(|(i, e)| keep(*i, e))
                .map(|(_, e)| e.clone())
                .collect(),
            source_label: self.source_label.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with string fields `id` and `body`.
    Jsonl,
    /// One UTF-8 text file per email; the file name is the id.
    Directory,
}

#[derive(Deserialize)]
struct Record {
    id: String,
    body: String,
}

/// Reads raw emails in input order. Clean fields are left empty.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let emails = match format {
        CorpusFormat::Jsonl => read_jsonl(path)?,
        CorpusFormat::Directory => read_directory(path)?,
    };
    Corpus::new(emails, path.display().to_string())
}

fn read_jsonl(path: &Path) -> Result<Vec<Email>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut emails = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        emails.push(Email::new(rec.id, rec.body));
    }
    Ok(emails)
}

fn read_directory(path: &Path) -> Result<Vec<Email>> {
    let mut entries = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?;
    entries.sort_by_key(|e| e.file_name());
    let mut emails = Vec::new();
    for entry in entries {
        let p = entry.path();
        if !p.is_file() {
            continue;
        }
        let body = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        emails.push(Email::new(entry.file_name().to_string_lossy(), body));
    }
    Ok(emails)
}

/// Writes `{"id", "body"}` records, using the clean body when present.
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in &corpus.emails {
        let body = if e.is_preprocessed() {
            &e.clean_body
        } else {
            &e.raw_body
        };
        let line = serde_json::json!({ "id": e.id, "body": body });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Keeps emails with at least `min_words` words and `min_sentences`
/// sentences.
pub fn filter_corpus(corpus: &Corpus, min_words: usize, min_sentences: usize) -> Corpus {
    corpus.subset(|_, e| e.word_count >= min_words && e.sentence_count >= min_sentences)
}

/// Dataset statistics in the layout of a "legitimate data" summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_emails: usize,
    pub total_words: usize,
    pub avg_words: f64,
    pub total_vocab: usize,
    /// Mean per-email distinct-token count.
    pub avg_vocab: f64,
    pub avg_sentence_length: f64,
    pub total_sentences: usize,
    pub avg_sentences: f64,
}

impl CorpusStats {
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("Dataset Size", self.num_emails.to_string()),
            ("Total Number of Words", self.total_words.to_string()),
            ("Avg. Number of Words", format!("{:.2}", self.avg_words)),
            ("Total Vocabulary", self.total_vocab.to_string()),
            ("Avg. Vocabulary", format!("{:.2}", self.avg_vocab)),
            ("Avg. Sentence Length", format!("{:.2}", self.avg_sentence_length)),
            ("Total Number of Sentences", self.total_sentences.to_string()),
            ("Avg. Number of Sentences", format!("{:.2}", self.avg_sentences)),
        ]
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.rows() {
            writeln!(f, "{k:<28}{v:>14}")?;
        }
        Ok(())
    }
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut vocab: HashSet<&str> = HashSet::new();
    let mut per_email_vocab = 0usize;
    let (mut total_words, mut total_sentences) = (0usize, 0usize);
    for e in &corpus.emails {
        let mut own: HashSet<&str> = HashSet::new();
        for w in e.words() {
            own.insert(w);
            vocab.insert(w);
        }
        per_email_vocab += own.len();
        total_words += e.word_count;
        total_sentences += e.sentence_count;
    }
    let n = corpus.len() as f64;
    Ok(CorpusStats {
        num_emails: corpus.len(),
        total_words,
        avg_words: total_words as f64 / n,
        total_vocab: vocab.len(),
        avg_vocab: per_email_vocab as f64 / n,
        avg_sentence_length: if total_sentences == 0 {
            0.0
        } else {
            total_words as f64 / total_sentences as f64
        },
        total_sentences,
        avg_sentences: total_sentences as f64 / n,
    })
}

/// Seeded shuffle split into (train, validation); both keep input order.
/// The validation set holds `round(fraction * n)` emails.
pub fn split_corpus(corpus: &Corpus, validation_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction must lie in (0, 1), got {validation_fraction}"
        )));
    }
    let n = corpus.len();
    let n_valid = (validation_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let valid: HashSet<usize> = order[..n_valid].iter().copied().collect();
    Ok((
        corpus.subset(|i, _| !valid.contains(&i)),
        corpus.subset(|i, _| valid.contains(&i)),
    ))
}

/// Token frequencies over clean bodies, markers included.
pub fn token_counts(corpus: &Corpus) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for e in &corpus.emails {
        for t in e.tokens() {
            *counts.entry(t.to_string()).or_default() += 1;
        }
    }
    counts
}
