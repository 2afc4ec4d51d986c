//! Evaluation of generated text: language-model perplexity, bigram
//! coherence against a reference corpus, and overlap with the reference's
//! most common trigrams.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tags;
use crate::wordlm::{encode_tokens, NextTokenModel};

/// `2^(-(1/T) Σ log2 P(w_t | previous N tokens))` over the `T = len - N`
/// positions that have a full context window.
///
/// Unknown tokens are scored as `<UNK>`.
pub fn perplexity<M, S>(model: &M, tokens: &[S]) -> Result<f64>
where
    M: NextTokenModel + ?Sized,
    S: AsRef<str>,
{
    let n = model.context_window();
    if tokens.len() <= n {
        return Err(Error::invalid(format!(
            "perplexity needs more than {n} tokens, got {}",
            tokens.len()
        )));
    }
    let ids = encode_tokens(model.vocab(), tokens)?;
    let mut log2_sum = 0.0;
    for t in n..ids.len() {
        let dist = model.next_token_distribution(&ids[t - n..t])?;
        log2_sum += dist.probabilities()[ids[t]].log2();
    }
    let count = (ids.len() - n) as f64;
    Ok((-log2_sum / count).exp2())
}

/// Forward and backward bigram conditionals with additive smoothing:
/// `p(w | c) = (count(c, w) + α) / (count(c) + α |V|)`.
///
/// Bigrams are counted within each email over its tokens, markers
/// included. Tokens never seen in training receive the unseen-pair
/// probability of their conditioner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigramModel {
    pairs: HashMap<(String, String), u64>,
    /// Number of bigrams whose first token is the key.
    left: HashMap<String, u64>,
    /// Number of bigrams whose second token is the key.
    right: HashMap<String, u64>,
    vocabulary: BTreeSet<String>,
    pub smoothing_alpha: f64,
}

impl BigramModel {
    pub fn from_sequences<I, T, S>(sequences: I, smoothing_alpha: f64) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[S]>,
        S: AsRef<str>,
    {
        if !(smoothing_alpha.is_finite() && smoothing_alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "smoothing alpha must be finite and non-negative, got {smoothing_alpha}"
            )));
        }
        let mut m = BigramModel {
            pairs: HashMap::new(),
            left: HashMap::new(),
            right: HashMap::new(),
            vocabulary: BTreeSet::new(),
            smoothing_alpha,
        };
        for seq in sequences {
            let seq = seq.as_ref();
            m.vocabulary.extend(seq.iter().map(|s| s.as_ref().to_string()));
            for w in seq.windows(2) {
                let (a, b) = (w[0].as_ref().to_string(), w[1].as_ref().to_string());
                *m.left.entry(a.clone()).or_default() += 1;
                *m.right.entry(b.clone()).or_default() += 1;
                *m.pairs.entry((a, b)).or_default() += 1;
            }
        }
        if m.pairs.is_empty() {
            return Err(Error::Empty("bigram training data"));
        }
        Ok(m)
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    fn smoothed(&self, pair: u64, conditioner: u64) -> f64 {
        let a = self.smoothing_alpha;
        let denom = conditioner as f64 + a * self.vocabulary.len() as f64;
        if denom == 0.0 {
            0.0
        } else {
            (pair as f64 + a) / denom
        }
    }

    fn pair(&self, a: &str, b: &str) -> u64 {
        // tuple keys of owned strings cannot be probed by &str pairs
        self.pairs
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// `p_fwd(word | prev)`.
    pub fn forward(&self, prev: &str, word: &str) -> f64 {
        self.smoothed(self.pair(prev, word), self.left.get(prev).copied().unwrap_or(0))
    }

    /// `p_bwd(prev | word)`.
    pub fn backward(&self, word: &str, prev: &str) -> f64 {
        self.smoothed(self.pair(prev, word), self.right.get(word).copied().unwrap_or(0))
    }
}

pub fn train_bigram_model(reference: &Corpus, smoothing_alpha: f64) -> Result<BigramModel> {
    if reference.is_empty() {
        return Err(Error::Empty("reference corpus"));
    }
    let seqs: Vec<Vec<&str>> = reference.emails.iter().map(|e| e.tokens().collect()).collect();
    BigramModel::from_sequences(&seqs, smoothing_alpha)
}

/// `(1/T) Σ_t [ln p_fwd(w_t | w_{t-1}) + ln p_bwd(w_{t-1} | w_t)]`, with `T`
/// the number of tokens. Never positive.
pub fn coherence<S: AsRef<str>>(tokens: &[S], bm: &BigramModel) -> Result<f64> {
    if tokens.len() < 2 {
        return Err(Error::invalid("coherence needs at least two tokens"));
    }
    let sum: f64 = tokens
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].as_ref(), w[1].as_ref());
            bm.forward(a, b).ln() + bm.backward(b, a).ln()
        })
        .sum();
    Ok(sum / tokens.len() as f64)
}

pub type Trigram = [String; 3];

/// Trigram frequencies over every email's words (markers excluded).
pub fn trigram_counts(reference: &Corpus) -> HashMap<Trigram, usize> {
    let mut counts = HashMap::new();
    for e in &reference.emails {
        let words: Vec<&str> = e.words().collect();
        for w in words.windows(3) {
            *counts
                .entry([w[0].to_string(), w[1].to_string(), w[2].to_string()])
                .or_insert(0) += 1;
        }
    }
    counts
}

/// The `k` most frequent word trigrams, most frequent first, ties broken
/// lexicographically.
pub fn top_trigrams(reference: &Corpus, k: usize) -> Result<Vec<Trigram>> {
    let counts = trigram_counts(reference);
    if counts.is_empty() {
        return Err(Error::Empty("reference trigrams"));
    }
    let mut ranked: Vec<(Trigram, usize)> = counts.into_iter().collect();
    ranked.sort_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    Ok(ranked.into_iter().take(k).map(|(t, _)| t).collect())
}

/// Percentage of the `len - 2` trigram windows of `tokens` found in
/// `common`, counting repeated windows each time.
pub fn trigram_overlap<S: AsRef<str>>(tokens: &[S], common: &[Trigram]) -> Result<f64> {
    if tokens.len() < 3 {
        return Err(Error::invalid("trigram overlap needs at least three tokens"));
    }
    let set: HashSet<[&str; 3]> = common
        .iter()
        .map(|[a, b, c]| [a.as_str(), b.as_str(), c.as_str()])
        .collect();
    let hits = tokens
        .windows(3)
        .filter(|w| set.contains(&[w[0].as_ref(), w[1].as_ref(), w[2].as_ref()]))
        .count();
    Ok(100.0 * hits as f64 / (tokens.len() - 2) as f64)
}

/// One trigram per line, tokens separated by single spaces.
pub fn save_trigrams(path: &Path, trigrams: &[Trigram]) -> Result<()> {
    let mut text = String::new();
    for t in trigrams {
        text.push_str(&t.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_trigrams(path: &Path) -> Result<Vec<Trigram>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts[..] {
                [a, b, c] => Ok([a.to_string(), b.to_string(), c.to_string()]),
                _ => Err(Error::MalformedRecord {
                    line: i + 1,
                    reason: format!("expected three tokens, found {}", parts.len()),
                }),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmailMetrics {
    pub id: String,
    /// Absent when the email is too short to score.
    pub perplexity: Option<f64>,
    pub coherence: Option<f64>,
    pub trigram_overlap_pct: Option<f64>,
}

/// Means over the emails where each metric was defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsAggregate {
    pub perplexity: Option<f64>,
    pub coherence: Option<f64>,
    pub trigram_overlap_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_email: Vec<EmailMetrics>,
    pub aggregate: MetricsAggregate,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Scores a batch of tokenized emails. Perplexity sees the full token list;
/// coherence and trigram overlap see it with `<SOT>`/`<EOT>` removed, to
/// match how the trigram list is built. A metric whose length requirement
/// is not met is recorded as absent.
pub fn evaluate_batch<M, S>(
    emails: &[(String, Vec<S>)],
    lm: &M,
    bm: &BigramModel,
    common: &[Trigram],
) -> Result<MetricsReport>
where
    M: NextTokenModel + ?Sized,
    S: AsRef<str>,
{
    if emails.is_empty() {
        return Err(Error::Empty("emails to evaluate"));
    }
    let mut per_email = Vec::with_capacity(emails.len());
    for (id, tokens) in emails {
        let words: Vec<&str> = tokens
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| !tags::is_marker(t))
            .collect();
        let ppl = if tokens.len() > lm.context_window() {
            Some(perplexity(lm, tokens)?)
        } else {
            None
        };
        per_email.push(EmailMetrics {
            id: id.clone(),
            perplexity: ppl,
            coherence: coherence(&words, bm).ok(),
            trigram_overlap_pct: trigram_overlap(&words, common).ok(),
        });
    }
    let aggregate = MetricsAggregate {
        perplexity: mean(per_email.iter().map(|m| m.perplexity)),
        coherence: mean(per_email.iter().map(|m| m.coherence)),
        trigram_overlap_pct: mean(per_email.iter().map(|m| m.trigram_overlap_pct)),
    };
    Ok(MetricsReport { per_email, aggregate })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn cell(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
        }
        writeln!(
            f,
            "{:<24} {:>12} {:>12} {:>20}",
            "Email", "Perplexity", "Coherence", "Trigram Overlap (%)"
        )?;
        let rows = self
            .per_email
            .iter()
            .map(|m| (m.id.as_str(), m.perplexity, m.coherence, m.trigram_overlap_pct))
            .chain(std::iter::once((
                "mean",
                self.aggregate.perplexity,
                self.aggregate.coherence,
                self.aggregate.trigram_overlap_pct,
            )));
        for (id, p, c, o) in rows {
            writeln!(f, "{:<24} {:>12} {:>12} {:>20}", id, cell(p), cell(c), cell(o))?;
        }
        Ok(())
    }
}
