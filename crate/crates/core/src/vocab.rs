use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{token_counts, Corpus};
use crate::error::{Error, Result};
use crate::tags;

/// Bidirectional token/index map. The reserved tokens occupy indices
/// `0..SPECIALS.len()` in the order of [`tags::SPECIALS`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
}

impl Vocabulary {
    /// Vocabulary holding only the reserved tokens.
    pub fn specials_only() -> Self {
        Self::from_tokens(std::iter::empty::<String>())
    }

    /// Specials followed by `tokens` in the given order; duplicates and
    /// reserved tokens in `tokens` are skipped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            token_to_index: HashMap::new(),
            index_to_token: Vec::new(),
        };
        for s in tags::SPECIALS {
            v.push(s.to_string());
        }
        for t in tokens {
            let t = t.into();
            if !v.token_to_index.contains_key(&t) {
                v.push(t);
            }
        }
        v
    }

    /// Keeps tokens seen at least `min_count` times, at most `max_size` of
    /// them (reserved tokens not counted), ranked by descending frequency
    /// with lexicographic tie-breaks.
    pub fn from_counts(
        counts: &HashMap<String, usize>,
        min_count: usize,
        max_size: Option<usize>,
    ) -> Self {
        let mut ranked: Vec<(&String, usize)> = counts
            .iter()
            .filter(|(t, &c)| c >= min_count && !tags::is_tag(t))
            .map(|(t, &c)| (t, c))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(max) = max_size {
            ranked.truncate(max);
        }
        Self::from_tokens(ranked.into_iter().map(|(t, _)| t.clone()))
    }

    fn push(&mut self, token: String) {
        self.token_to_index.insert(token.clone(), self.index_to_token.len());
        self.index_to_token.push(token);
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_index.contains_key(token)
    }

    /// Index of `token`, or of `<UNK>` when absent.
    pub fn encode(&self, token: &str) -> usize {
        self.index(token).unwrap_or_else(|| self.unk())
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn unk(&self) -> usize {
        self.token_to_index[tags::UNK]
    }

    pub fn eot(&self) -> usize {
        self.token_to_index[tags::EOT]
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        for (i, s) in tags::SPECIALS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*s) {
                return Err(Error::Checkpoint(format!(
                    "vocabulary must start with the reserved tokens, missing {s:?}"
                )));
            }
        }
        let v = Self::from_tokens(tokens.iter().skip(tags::SPECIALS.len()).cloned());
        if v.len() != tokens.len() {
            return Err(Error::Checkpoint("vocabulary has duplicate tokens".into()));
        }
        Ok(v)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.index_to_token
    }
}

/// Vocabulary over the clean bodies of a preprocessed corpus.
pub fn build_vocabulary(train: &Corpus, min_count: usize, max_size: Option<usize>) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    Ok(Vocabulary::from_counts(&token_counts(train), min_count, max_size))
}
