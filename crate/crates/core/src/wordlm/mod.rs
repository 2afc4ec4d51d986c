//! Word-level next-token language model: a bidirectional LSTM encodes the
//! last `N` tokens and a softmax layer predicts token `N + 1`. Generation
//! samples from the temperature-scaled output distribution.

mod model;
mod sampling;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tags;
use crate::vocab::Vocabulary;

pub use model::{train_word_lm, train_word_lm_with, windows, EpochRecord, LmConfig, LmParams, Window, WordLM};
pub use sampling::{apply_temperature, sample_token, Distribution, MAX_TEMPERATURE};

/// Extra draws allowed when `<UNK>` is sampled before falling back to the
/// most likely known token.
pub const UNK_RESAMPLES: usize = 5;

/// Anything that scores the next token from a fixed-length context window.
pub trait NextTokenModel {
    fn vocab(&self) -> &Vocabulary;

    fn context_window(&self) -> usize;

    /// Unnormalized scores for every vocabulary entry. `context` has already
    /// been validated.
    fn logits(&self, context: &[usize]) -> Vec<f64>;

    /// Softmax output at temperature 1.
    fn next_token_distribution(&self, context: &[usize]) -> Result<Distribution> {
        self.check_context(context)?;
        apply_temperature(&self.logits(context), 1.0)
    }

    fn check_context(&self, context: &[usize]) -> Result<()> {
        if context.len() != self.context_window() {
            return Err(Error::Shape(format!(
                "context has {} tokens, model window is {}",
                context.len(),
                self.context_window()
            )));
        }
        let v = self.vocab().len();
        if let Some(&bad) = context.iter().find(|&&i| i >= v) {
            return Err(Error::invalid(format!(
                "token index {bad} outside vocabulary of {v}"
            )));
        }
        Ok(())
    }
}

/// Encodes seed tokens, mapping unknown words to `<UNK>`. Empty tokens and
/// tokens containing whitespace are rejected.
pub fn encode_tokens<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Result<Vec<usize>> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            if t.is_empty() || t.contains(char::is_whitespace) {
                Err(Error::invalid(format!("invalid seed token {t:?}")))
            } else {
                Ok(vocab.encode(t))
            }
        })
        .collect()
}

/// Draws a token, redrawing `<UNK>` up to [`UNK_RESAMPLES`] times and then
/// taking the most probable known token.
fn draw_known<R: Rng + ?Sized>(dist: &Distribution, unk: usize, rng: &mut R) -> usize {
    for _ in 0..=UNK_RESAMPLES {
        let i = sample_token(dist, rng);
        if i != unk {
            return i;
        }
    }
    let p = dist.probabilities();
    (0..p.len())
        .filter(|&i| i != unk)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if p[b] >= p[i] => Some(b),
            _ => Some(i),
        })
        .unwrap_or(unk)
}

/// Samples up to `max_len` tokens after `context`, sliding the window, and
/// stops after the first token for which `stop` holds (that token is
/// included).
pub fn sample_continuation<M, R>(
    model: &M,
    context: &[usize],
    tau: f64,
    max_len: usize,
    stop: impl Fn(&str) -> bool,
    rng: &mut R,
) -> Result<Vec<String>>
where
    M: NextTokenModel + ?Sized,
    R: Rng + ?Sized,
{
    model.check_context(context)?;
    let vocab = model.vocab();
    let unk = vocab.unk();
    let mut window = context.to_vec();
    let mut out = Vec::new();
    while out.len() < max_len {
        let dist = apply_temperature(&model.logits(&window), tau)?;
        let idx = draw_known(&dist, unk, rng);
        let token = vocab.token(idx).unwrap_or(tags::UNK);
        out.push(token.to_string());
        if stop(token) {
            break;
        }
        if !window.is_empty() {
            window.rotate_left(1);
            *window.last_mut().unwrap() = idx;
        }
    }
    Ok(out)
}

/// Word-only generation: `seed` must hold exactly `N` tokens. Returns the
/// generated tokens (seed excluded), ending at `<EOT>` or after `max_len`.
pub fn generate_words<M, R, S>(
    model: &M,
    seed: &[S],
    tau: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<String>>
where
    M: NextTokenModel + ?Sized,
    R: Rng + ?Sized,
    S: AsRef<str>,
{
    if seed.len() != model.context_window() {
        return Err(Error::Shape(format!(
            "seed has {} tokens, model window is {}",
            seed.len(),
            model.context_window()
        )));
    }
    if max_len == 0 {
        return Err(Error::invalid("max_len must be positive"));
    }
    let context = encode_tokens(model.vocab(), seed)?;
    sample_continuation(model, &context, tau, max_len, |t| t == tags::EOT, rng)
}
