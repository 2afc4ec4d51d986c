use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NextTokenModel;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Adam, BiLstm, Linear, ParamSet, Tensor, INIT_SCALE};
use crate::vocab::{build_vocabulary, Vocabulary};

/// Training hyperparameters. Defaults: 15-token unrolling, 128 hidden units
/// per direction (256 combined), batches of 50, learning rate 0.01, 50
/// epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub context_window: usize,
    pub hidden_units: usize,
    pub embedding_dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    pub min_count: usize,
    pub max_vocab: Option<usize>,
    /// Global gradient-norm clip applied before each Adam step.
    pub clip_norm: Option<f64>,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            context_window: 15,
            hidden_units: 128,
            embedding_dim: 128,
            batch_size: 50,
            learning_rate: 0.01,
            epochs: 50,
            rng_seed: 0,
            min_count: 1,
            max_vocab: None,
            clip_norm: Some(5.0),
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("context_window", self.context_window),
            ("hidden_units", self.hidden_units),
            ("embedding_dim", self.embedding_dim),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("min_count", self.min_count),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("lm.{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("lm.learning_rate must be positive".into()));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("lm.clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Size of the concatenated forward/backward state.
    pub fn state_size(&self) -> usize {
        2 * self.hidden_units
    }
}

/// Embedding (one-hot projection), bidirectional encoder, output projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmParams {
    pub embedding: Tensor,
    pub encoder: BiLstm,
    pub output: Linear,
}

impl ParamSet for LmParams {
    fn named(&self) -> Vec<(&'static str, &Tensor)> {
        let mut v = vec![("embedding", &self.embedding)];
        self.encoder.push_named(&mut v);
        v.extend([("output.w", &self.output.w), ("output.b", &self.output.b)]);
        v
    }

    fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut v = vec![("embedding", &mut self.embedding)];
        self.encoder.push_named_mut(&mut v);
        v.extend([("output.w", &mut self.output.w), ("output.b", &mut self.output.b)]);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

/// One supervised pair: `N` context indices and the index that follows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub context: Vec<usize>,
    pub target: usize,
}

/// Every window of `n` tokens followed by a target, slid over each email's
/// clean body (markers included). Windows never cross emails.
pub fn windows(corpus: &Corpus, vocab: &Vocabulary, n: usize) -> Vec<Window> {
    let mut out = Vec::new();
    for e in &corpus.emails {
        let ids: Vec<usize> = e.tokens().map(|t| vocab.encode(t)).collect();
        for i in 0..ids.len().saturating_sub(n) {
            out.push(Window {
                context: ids[i..i + n].to_vec(),
                target: ids[i + n],
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLM {
    pub vocab: Vocabulary,
    pub config: LmConfig,
    pub params: LmParams,
    pub training_history: Vec<EpochRecord>,
}

impl WordLM {
    /// Randomly initialized model, uniform in ±0.08, seeded by
    /// `config.rng_seed`.
    pub fn new(vocab: Vocabulary, config: LmConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let v = vocab.len();
        let params = LmParams {
            embedding: Tensor::uniform(&[v, config.embedding_dim], INIT_SCALE, &mut rng),
            encoder: BiLstm::new(config.embedding_dim, config.hidden_units, &mut rng),
            output: Linear::new(config.state_size(), v, &mut rng),
        };
        Ok(WordLM {
            vocab,
            config,
            params,
            training_history: Vec::new(),
        })
    }

    fn encode(&self, context: &[usize]) -> (Vec<f64>, crate::nn::BiTrace) {
        let xs: Vec<&[f64]> = context.iter().map(|&i| self.params.embedding.row(i)).collect();
        self.params.encoder.encode(&xs)
    }

    /// Mean cross-entropy (nats) over `batch`.
    pub fn loss(&self, batch: &[Window]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|w| {
                let (h, _) = self.encode(&w.context);
                cross_entropy(&self.params.output.forward(&h), w.target)
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy over `batch` and its gradient for every tensor.
    pub fn loss_and_gradients(&self, batch: &[Window]) -> (f64, LmParams) {
        self.accumulate(batch.iter())
    }

    fn accumulate<'a>(&self, batch: impl ExactSizeIterator<Item = &'a Window>) -> (f64, LmParams) {
        let scale = 1.0 / batch.len() as f64;
        let mut grad = self.params.zeros_like();
        let mut total = 0.0;
        for w in batch {
            let (h, trace) = self.encode(&w.context);
            let logits = self.params.output.forward(&h);
            total += cross_entropy(&logits, w.target);
            let mut dlogits = crate::nn::softmax(&logits);
            dlogits[w.target] -= 1.0;
            dlogits.iter_mut().for_each(|d| *d *= scale);
            let dh = self.params.output.backward(&h, &dlogits, &mut grad.output);
            let dxs = self.params.encoder.backward(&trace, &dh, &mut grad.encoder);
            for (&tok, dx) in w.context.iter().zip(dxs) {
                for (g, d) in grad.embedding.row_mut(tok).iter_mut().zip(dx) {
                    *g += d;
                }
            }
        }
        (total * scale, grad)
    }
}

fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

impl NextTokenModel for WordLM {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn context_window(&self) -> usize {
        self.config.context_window
    }

    fn logits(&self, context: &[usize]) -> Vec<f64> {
        let (h, _) = self.encode(context);
        self.params.output.forward(&h)
    }
}

/// Trains on sliding windows of `train` with Adam, evaluating `valid` after
/// every epoch, and returns the parameters with the lowest validation loss
/// (training loss when `valid` yields no windows).
pub fn train_word_lm(train: &Corpus, valid: &Corpus, config: &LmConfig) -> Result<WordLM> {
    train_word_lm_with(train, valid, config, |_| {})
}

/// [`train_word_lm`] with a callback invoked after each epoch.
pub fn train_word_lm_with(
    train: &Corpus,
    valid: &Corpus,
    config: &LmConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<WordLM> {
    config.validate()?;
    let vocab = build_vocabulary(train, config.min_count, config.max_vocab)?;
    let n = config.context_window;
    let train_windows = windows(train, &vocab, n);
    if train_windows.is_empty() {
        return Err(Error::invalid(format!(
            "no training email has more than {n} tokens"
        )));
    }
    let valid_windows = windows(valid, &vocab, n);

    let mut model = WordLM::new(vocab, config.clone())?;
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut best: Option<(f64, LmParams)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let (loss, mut grad) = model.accumulate(chunk.iter().map(|&i| &train_windows[i]));
            if let Some(c) = config.clip_norm {
                clip_global_norm(&mut grad, c);
            }
            adam.step(&mut model.params, &grad);
            total += loss * chunk.len() as f64;
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / train_windows.len() as f64,
            validation_loss: (!valid_windows.is_empty()).then(|| model.loss(&valid_windows)),
        };
        on_epoch(&record);
        model.training_history.push(record);
        let score = record.validation_loss.unwrap_or(record.train_loss);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, model.params.clone()));
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok(model)
}
