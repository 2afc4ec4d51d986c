//! Sentence-level generation. The word model samples several candidate
//! sentences from the running context; the sentence predictor maps the
//! vectors of the most recent sentences to a target vector; the candidate
//! whose embedding is closest to the target (by cosine) is appended and the
//! loop repeats.

mod predictor;

use std::cell::Cell;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::docvec::{cosine_similarity, DocVector, SentenceEmbedder};
use crate::error::{Error, Result};
use crate::tags;
use crate::wordlm::{encode_tokens, sample_continuation, NextTokenModel, MAX_TEMPERATURE};

pub use predictor::{
    embed_corpus, log_cosh_loss, sequence_pairs, train_predictor_on_sequences, train_sentence_predictor,
    PredictorConfig, PredictorParams, SentencePredictor, SequencePair, VectorPredictor,
};

/// Cosine subtracted from a candidate that repeats an earlier sentence
/// word for word.
pub const REPEAT_PENALTY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub temperature: f64,
    /// Candidates sampled per sentence.
    pub num_candidates: usize,
    pub max_words_per_sentence: usize,
    /// Sentences generated after the seeds.
    pub num_sentences: usize,
    pub rng_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.5,
            num_candidates: 10,
            max_words_per_sentence: 30,
            num_sentences: 5,
            rng_seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature <= MAX_TEMPERATURE) {
            return Err(Error::Config(format!(
                "generation.temperature must lie in (0, {MAX_TEMPERATURE}]"
            )));
        }
        for (name, v) in [
            ("num_candidates", self.num_candidates),
            ("max_words_per_sentence", self.max_words_per_sentence),
            ("num_sentences", self.num_sentences),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("generation.{name} must be positive")));
            }
        }
        Ok(())
    }
}

fn ends_sentence(token: &str) -> bool {
    tags::is_sentence_terminator(token) || token == tags::EOT
}

fn last_window(tokens: &[String], n: usize) -> Result<&[String]> {
    if tokens.len() < n {
        return Err(Error::invalid(format!(
            "seed text has {} tokens, the word model needs {n}",
            tokens.len()
        )));
    }
    Ok(&tokens[tokens.len() - n..])
}

/// Samples `num_candidates` independent continuations of the last `N`
/// tokens of `context`, each ending at its first terminator (`.`, `!`,
/// `?`, `<EOT>`) or after `max_words_per_sentence` tokens.
pub fn candidates_from_context<M, R>(
    lm: &M,
    context: &[String],
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<Vec<String>>>
where
    M: NextTokenModel + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let window = last_window(context, lm.context_window())?;
    let ids = encode_tokens(lm.vocab(), window)?;
    (0..cfg.num_candidates)
        .map(|_| {
            sample_continuation(
                lm,
                &ids,
                cfg.temperature,
                cfg.max_words_per_sentence,
                ends_sentence,
                rng,
            )
        })
        .collect()
}

/// [`candidates_from_context`] on the concatenation of `seed_sentences`.
pub fn generate_candidates<M, R>(
    lm: &M,
    seed_sentences: &[Vec<String>],
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<Vec<String>>>
where
    M: NextTokenModel + ?Sized,
    R: Rng + ?Sized,
{
    let context: Vec<String> = seed_sentences.concat();
    candidates_from_context(lm, &context, cfg, rng)
}

/// Feeds the last `window` seed vectors to the predictor.
pub fn predict_next_sentence_vector<P: VectorPredictor + ?Sized>(
    sp: &P,
    seed_vectors: &[DocVector],
) -> Result<DocVector> {
    sp.predict(seed_vectors)
}

fn embeddable(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| !tags::is_marker(t)).cloned().collect()
}

/// Cosine of each candidate's embedding with `target`; `None` for a
/// candidate that embeds to the zero vector or has no words besides
/// markers.
pub fn score_candidates<E: SentenceEmbedder + ?Sized>(
    candidates: &[Vec<String>],
    target: &DocVector,
    embedder: &E,
) -> Result<Vec<Option<f64>>> {
    candidates
        .iter()
        .map(|c| {
            let words = embeddable(c);
            if words.is_empty() {
                return Ok(None);
            }
            let v = embedder.embed(&words)?;
            if v.is_zero() {
                Ok(None)
            } else {
                cosine_similarity(&v, target).map(Some)
            }
        })
        .collect()
}

/// Index of the highest score; the lowest index wins ties and `None`
/// entries are skipped.
pub fn argmax_score(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub tokens: Vec<String>,
    pub score: f64,
}

/// The candidate whose embedding is most similar to `target`.
pub fn select_best_candidate<E: SentenceEmbedder + ?Sized>(
    candidates: &[Vec<String>],
    target: &DocVector,
    embedder: &E,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    let scores = score_candidates(candidates, target, embedder)?;
    let index = argmax_score(&scores)
        .ok_or_else(|| Error::invalid("every candidate embeds to the zero vector"))?;
    Ok(Selection {
        index,
        tokens: candidates[index].clone(),
        score: scores[index].unwrap(),
    })
}

/// What happened at one generation step; the generation trace is the list
/// of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Sentences whose vectors were fed to the predictor.
    pub seed_window: Vec<Vec<String>>,
    pub candidates: Vec<Vec<String>>,
    /// Cosine with the predicted vector after the repeat penalty; `null` for
    /// skipped candidates.
    pub scores: Vec<Option<f64>>,
    pub winner: Option<usize>,
    pub winning_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedEmail {
    pub seed_sentences: Vec<Vec<String>>,
    /// Generated sentences, markers removed.
    pub sentences: Vec<Vec<String>>,
    pub provenance: Vec<StepRecord>,
    /// Whether generation ended on `<EOT>` rather than the sentence budget.
    pub ended: bool,
}

impl GeneratedEmail {
    /// Seeds and generated sentences wrapped in `<SOT>` ... `<EOT>`.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = vec![tags::SOT.to_string()];
        out.extend(self.seed_sentences.iter().chain(&self.sentences).flatten().cloned());
        out.push(tags::EOT.to_string());
        out
    }

    pub fn text(&self) -> String {
        self.tokens().join(" ")
    }

    /// Writes the per-step trace as pretty-printed JSON.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.provenance).expect("trace serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Hierarchical generation from at least `sp.window()` seed sentences.
///
/// At every step the word context is `<SOT>` followed by all sentences so
/// far. A bare `<EOT>` candidate cannot be embedded, so it only ends the
/// email when no other candidate scored; a winner that contains `<EOT>`
/// is appended without it and also ends the email. A candidate repeating
/// an existing sentence loses [`REPEAT_PENALTY`] from its score.
pub fn generate_email<M, E, P, R>(
    lm: &M,
    embedder: &E,
    sp: &P,
    seed_sentences: &[Vec<String>],
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<GeneratedEmail>
where
    M: NextTokenModel + ?Sized,
    E: SentenceEmbedder + ?Sized,
    P: VectorPredictor + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let s = sp.window();
    if seed_sentences.len() < s {
        return Err(Error::invalid(format!(
            "{} seed sentences given, the predictor needs {s}",
            seed_sentences.len()
        )));
    }
    if seed_sentences.iter().any(|x| x.is_empty()) {
        return Err(Error::invalid("empty seed sentence"));
    }
    let mut history: Vec<Vec<String>> = seed_sentences.to_vec();
    let mut context: Vec<String> = std::iter::once(tags::SOT.to_string())
        .chain(seed_sentences.iter().flatten().cloned())
        .collect();
    let mut out = GeneratedEmail {
        seed_sentences: seed_sentences.to_vec(),
        sentences: Vec::new(),
        provenance: Vec::new(),
        ended: false,
    };

    for step in 0..cfg.num_sentences {
        let candidates = candidates_from_context(lm, &context, cfg, rng)?;
        let seed_window = history[history.len() - s..].to_vec();
        let seed_vectors = seed_window
            .iter()
            .map(|x| embedder.embed(x))
            .collect::<Result<Vec<_>>>()?;
        let target = predict_next_sentence_vector(sp, &seed_vectors)?;
        let mut scores = score_candidates(&candidates, &target, embedder)?;
        for (c, score) in candidates.iter().zip(scores.iter_mut()) {
            if let Some(x) = score.as_mut() {
                if history.iter().any(|h| *h == embeddable(c)) {
                    *x -= REPEAT_PENALTY;
                }
            }
        }
        let winner = argmax_score(&scores);
        out.provenance.push(StepRecord {
            step,
            seed_window,
            candidates: candidates.clone(),
            scores: scores.clone(),
            winner,
            winning_score: winner.and_then(|i| scores[i]),
        });
        let Some(w) = winner else {
            if candidates.iter().any(|c| embeddable(c).is_empty()) {
                out.ended = true;
                break;
            }
            return Err(Error::invalid("every candidate embeds to the zero vector"));
        };
        let sentence = embeddable(&candidates[w]);
        context.extend(sentence.iter().cloned());
        history.push(sentence.clone());
        out.sentences.push(sentence);
        if candidates[w].iter().any(|t| t == tags::EOT) {
            out.ended = true;
            break;
        }
    }
    Ok(out)
}

/// The word-only baseline: from the same seeds, samples tokens until
/// `num_sentences` sentences are complete, `<EOT>` appears, or
/// `num_sentences * max_words_per_sentence` tokens are produced. Returns
/// the generated sentences with markers removed.
pub fn generate_word_only<M, R>(
    lm: &M,
    seed_sentences: &[Vec<String>],
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<Vec<String>>>
where
    M: NextTokenModel + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let context: Vec<String> = std::iter::once(tags::SOT.to_string())
        .chain(seed_sentences.iter().flatten().cloned())
        .collect();
    let ids = encode_tokens(lm.vocab(), last_window(&context, lm.context_window())?)?;
    let ended = Cell::new(0);
    let stop = |t: &str| {
        if tags::is_sentence_terminator(t) {
            ended.set(ended.get() + 1);
        }
        t == tags::EOT || ended.get() >= cfg.num_sentences
    };
    let tokens = sample_continuation(
        lm,
        &ids,
        cfg.temperature,
        cfg.num_sentences * cfg.max_words_per_sentence,
        stop,
        rng,
    )?;
    let words = embeddable(&tokens);
    Ok(crate::corpus::split_sentences(&words))
}
