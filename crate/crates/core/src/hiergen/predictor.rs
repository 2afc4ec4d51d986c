use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::docvec::{DocVector, SentenceEmbedder};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, log_cosh, Adam, BiLstm, Linear, ParamSet, Tensor};
use crate::wordlm::EpochRecord;

/// Predicts the vector of the sentence that follows a window of sentence
/// vectors.
pub trait VectorPredictor {
    /// Number of preceding sentence vectors consumed.
    fn window(&self) -> usize;

    fn dim(&self) -> usize;

    fn predict(&self, seeds: &[DocVector]) -> Result<DocVector>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    /// Sentence vectors per input sequence.
    pub window: usize,
    pub hidden_units: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    pub clip_norm: Option<f64>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            window: 3,
            hidden_units: 128,
            batch_size: 50,
            learning_rate: 0.01,
            epochs: 50,
            rng_seed: 0,
            clip_norm: Some(5.0),
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("window", self.window),
            ("hidden_units", self.hidden_units),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("predictor.{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("predictor.learning_rate must be positive".into()));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("predictor.clip_norm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub encoder: BiLstm,
    pub output: Linear,
}

impl ParamSet for PredictorParams {
    fn named(&self) -> Vec<(&'static str, &Tensor)> {
        let mut v = Vec::new();
        self.encoder.push_named(&mut v);
        v.extend([("output.w", &self.output.w), ("output.b", &self.output.b)]);
        v
    }

    fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut v = Vec::new();
        self.encoder.push_named_mut(&mut v);
        v.extend([("output.w", &mut self.output.w), ("output.b", &mut self.output.b)]);
        v
    }
}

/// `window` consecutive sentence vectors and the vector of the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePair {
    pub inputs: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

/// Every run of `window` consecutive vectors followed by one more, taken
/// within each sequence.
pub fn sequence_pairs(sequences: &[Vec<DocVector>], window: usize) -> Vec<SequencePair> {
    let mut pairs = Vec::new();
    for seq in sequences {
        for w in seq.windows(window + 1) {
            pairs.push(SequencePair {
                inputs: w[..window].iter().map(|v| v.0.clone()).collect(),
                target: w[window].0.clone(),
            });
        }
    }
    pairs
}

/// Mean of `log(cosh(prediction - target))` over components.
pub fn log_cosh_loss(prediction: &[f64], target: &[f64]) -> f64 {
    let sum: f64 = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| log_cosh(p - t))
        .sum();
    sum / prediction.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePredictor {
    pub dim: usize,
    pub config: PredictorConfig,
    pub params: PredictorParams,
    pub training_history: Vec<EpochRecord>,
}

impl SentencePredictor {
    pub fn new(dim: usize, config: PredictorConfig) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::invalid("predictor dimension must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let params = PredictorParams {
            encoder: BiLstm::new(dim, config.hidden_units, &mut rng),
            output: Linear::new(2 * config.hidden_units, dim, &mut rng),
        };
        Ok(SentencePredictor {
            dim,
            config,
            params,
            training_history: Vec::new(),
        })
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, crate::nn::BiTrace) {
        let xs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
        let (h, trace) = self.params.encoder.encode(&xs);
        (self.params.output.forward(&h), h, trace)
    }

    /// Mean log-cosh over components and pairs.
    pub fn loss(&self, batch: &[SequencePair]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|p| log_cosh_loss(&self.forward(&p.inputs).0, &p.target))
            .sum();
        total / batch.len() as f64
    }

    pub fn loss_and_gradients(&self, batch: &[SequencePair]) -> (f64, PredictorParams) {
        self.accumulate(batch.iter())
    }

    fn accumulate<'a>(&self, batch: impl ExactSizeIterator<Item = &'a SequencePair>) -> (f64, PredictorParams) {
        let scale = 1.0 / (batch.len() * self.dim) as f64;
        let mut grad = self.params.zeros_like();
        let mut total = 0.0;
        for p in batch {
            let (y, h, trace) = self.forward(&p.inputs);
            total += y.iter().zip(&p.target).map(|(a, b)| log_cosh(a - b)).sum::<f64>();
            let dy: Vec<f64> = y
                .iter()
                .zip(&p.target)
                .map(|(a, b)| (a - b).tanh() * scale)
                .collect();
            let dh = self.params.output.backward(&h, &dy, &mut grad.output);
            self.params.encoder.backward(&trace, &dh, &mut grad.encoder);
        }
        (total * scale, grad)
    }
}

impl VectorPredictor for SentencePredictor {
    fn window(&self) -> usize {
        self.config.window
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, seeds: &[DocVector]) -> Result<DocVector> {
        if seeds.len() != self.config.window {
            return Err(Error::Shape(format!(
                "predictor takes {} sentence vectors, got {}",
                self.config.window,
                seeds.len()
            )));
        }
        if let Some(bad) = seeds.iter().find(|v| v.dim() != self.dim) {
            return Err(Error::Shape(format!(
                "sentence vector has {} entries, predictor expects {}",
                bad.dim(),
                self.dim
            )));
        }
        let inputs: Vec<Vec<f64>> = seeds.iter().map(|v| v.0.clone()).collect();
        Ok(DocVector(self.forward(&inputs).0))
    }
}

/// Per-email sequences of embedded sentences (markers excluded).
pub fn embed_corpus<E: SentenceEmbedder + ?Sized>(corpus: &Corpus, embedder: &E) -> Result<Vec<Vec<DocVector>>> {
    corpus
        .emails
        .iter()
        .map(|e| e.sentences.iter().map(|s| embedder.embed(s)).collect())
        .collect()
}

/// Embeds every sentence with `embedder` and trains on the resulting
/// sequences. Emails with fewer than `window + 1` sentences contribute
/// nothing.
pub fn train_sentence_predictor<E: SentenceEmbedder + ?Sized>(
    train: &Corpus,
    valid: &Corpus,
    embedder: &E,
    config: &PredictorConfig,
) -> Result<SentencePredictor> {
    let train_seqs = embed_corpus(train, embedder)?;
    let valid_seqs = embed_corpus(valid, embedder)?;
    train_predictor_on_sequences(&train_seqs, &valid_seqs, embedder.dim(), config)
}

/// Trains with Adam on all windows of `train`, keeping the parameters with
/// the lowest validation loss (training loss when `valid` has no windows).
pub fn train_predictor_on_sequences(
    train: &[Vec<DocVector>],
    valid: &[Vec<DocVector>],
    dim: usize,
    config: &PredictorConfig,
) -> Result<SentencePredictor> {
    let mut model = SentencePredictor::new(dim, config.clone())?;
    let s = config.window;
    let train_pairs = sequence_pairs(train, s);
    if train_pairs.is_empty() {
        return Err(Error::invalid(format!(
            "no training email has at least {} sentences",
            s + 1
        )));
    }
    if let Some(p) = train_pairs.iter().find(|p| p.target.len() != dim) {
        return Err(Error::Shape(format!(
            "sentence vector has {} entries, predictor expects {dim}",
            p.target.len()
        )));
    }
    let valid_pairs = sequence_pairs(valid, s);

    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut best: Option<(f64, PredictorParams)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let (loss, mut grad) = model.accumulate(chunk.iter().map(|&i| &train_pairs[i]));
            if let Some(c) = config.clip_norm {
                clip_global_norm(&mut grad, c);
            }
            adam.step(&mut model.params, &grad);
            total += loss * chunk.len() as f64;
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / train_pairs.len() as f64,
            validation_loss: (!valid_pairs.is_empty()).then(|| model.loss(&valid_pairs)),
        };
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
