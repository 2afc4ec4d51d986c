//! Paragraph vectors, distributed-memory variant: a document vector averaged
//! with the surrounding word vectors predicts the middle word, trained with
//! negative sampling. New text is embedded by gradient inference of a fresh
//! document vector with the word and output vectors frozen.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nn::{dot, sigmoid, Tensor};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector(pub Vec<f64>);

impl DocVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl From<Vec<f64>> for DocVector {
    fn from(v: Vec<f64>) -> Self {
        DocVector(v)
    }
}

/// `a·b / (‖a‖ ‖b‖)`, clamped to `[-1, 1]`.
///
/// ```
/// use hiermail::docvec::{cosine_similarity, DocVector};
///
/// let a = DocVector(vec![1.0, 2.0, 3.0]);
/// let b = DocVector(vec![4.0, 5.0, 6.0]);
/// assert!((cosine_similarity(&a, &b).unwrap() - 0.97463).abs() < 1e-5);
/// ```
pub fn cosine_similarity(a: &DocVector, b: &DocVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "cosine of vectors with {} and {} entries",
            a.dim(),
            b.dim()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero vector"));
    }
    Ok((dot(&a.0, &b.0) / (na * nb)).clamp(-1.0, 1.0))
}

/// What one training document is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocUnit {
    Sentence,
    Email,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocVecConfig {
    pub dim: usize,
    pub unit: DocUnit,
    /// Context words on each side of the predicted word.
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    /// Linearly decayed to `min_learning_rate` over training.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub min_count: usize,
    /// Passes over a sentence when inferring its vector.
    pub infer_steps: usize,
    pub rng_seed: u64,
}

impl Default for DocVecConfig {
    fn default() -> Self {
        DocVecConfig {
            dim: 100,
            unit: DocUnit::Sentence,
            window: 5,
            negative_samples: 5,
            epochs: 40,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            min_count: 1,
            infer_steps: 50,
            rng_seed: 0,
        }
    }
}

impl DocVecConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dim", self.dim),
            ("epochs", self.epochs),
            ("negative_samples", self.negative_samples),
            ("min_count", self.min_count),
            ("infer_steps", self.infer_steps),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("docvec.{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.min_learning_rate >= 0.0)
            || self.min_learning_rate > self.learning_rate
        {
            return Err(Error::Config(
                "docvec learning rates must satisfy 0 <= min <= start, start > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVecModel {
    pub config: DocVecConfig,
    pub vocabulary: Vocabulary,
    /// Training frequency per vocabulary index; zero marks a token that was
    /// never trained (reserved tokens absent from the corpus).
    pub word_counts: Vec<u64>,
    pub word_vectors: Tensor,
    pub output_vectors: Tensor,
    pub doc_vectors: Tensor,
    /// `email id` or `email id#sentence index`, one per row of `doc_vectors`.
    pub doc_tags: Vec<String>,
    /// Mean negative-sampling loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Cumulative unigram^0.75 table for negative sampling.
struct NoiseTable(Vec<f64>);

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        NoiseTable(
            counts
                .iter()
                .map(|&c| {
                    acc += (c as f64).powf(0.75);
                    acc
                })
                .collect(),
        )
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let total = *self.0.last().unwrap();
        let u = rng.gen::<f64>() * total;
        self.0.partition_point(|&c| c <= u).min(self.0.len() - 1)
    }
}

/// One distributed-memory negative-sampling step. `h` is the mean of the
/// document vector and the context word vectors. Returns the loss, the error
/// to add to every input vector, and the `(word, gradient scale)` updates for
/// the output vectors (`output[word] += scale * h`).
fn ns_step(
    output: &Tensor,
    noise: &NoiseTable,
    negatives: usize,
    h: &[f64],
    target: usize,
    alpha: f64,
    rng: &mut impl Rng,
) -> (f64, Vec<f64>, Vec<(usize, f64)>) {
    let mut neu1e = vec![0.0; h.len()];
    let mut loss = 0.0;
    let mut updates = Vec::with_capacity(negatives + 1);
    for k in 0..=negatives {
        let (word, label) = if k == 0 {
            (target, 1.0)
        } else {
            let w = noise.draw(rng);
            if w == target {
                continue;
            }
            (w, 0.0)
        };
        let out = output.row(word);
        let s = sigmoid(dot(out, h));
        loss -= if label > 0.0 { s.ln() } else { (1.0 - s).ln() };
        let g = (label - s) * alpha;
        for j in 0..h.len() {
            neu1e[j] += g * out[j];
        }
        updates.push((word, g));
    }
    (loss, neu1e, updates)
}

fn mean_input(doc: &[f64], words: &Tensor, ctx: &[usize]) -> Vec<f64> {
    let mut h = doc.to_vec();
    for &c in ctx {
        for (a, b) in h.iter_mut().zip(words.row(c)) {
            *a += b;
        }
    }
    let inv = 1.0 / (1 + ctx.len()) as f64;
    h.iter_mut().for_each(|x| *x *= inv);
    h
}

fn context(doc: &[usize], i: usize, window: usize) -> Vec<usize> {
    let lo = i.saturating_sub(window);
    let hi = (i + window + 1).min(doc.len());
    (lo..hi).filter(|&j| j != i).map(|j| doc[j]).collect()
}

fn documents(corpus: &Corpus, unit: DocUnit) -> Vec<(String, Vec<String>)> {
    let mut docs = Vec::new();
    for e in &corpus.emails {
        match unit {
            DocUnit::Sentence => {
                for (k, s) in e.sentences.iter().enumerate() {
                    docs.push((format!("{}#{k}", e.id), s.clone()));
                }
            }
            DocUnit::Email => {
                let words: Vec<String> = e.sentences.iter().flatten().cloned().collect();
                if !words.is_empty() {
                    docs.push((e.id.clone(), words));
                }
            }
        }
    }
    docs
}

/// Trains document and word vectors over the sentences (or whole emails) of
/// a preprocessed corpus. Deterministic for a fixed `config.rng_seed`.
pub fn train_docvec(corpus: &Corpus, config: &DocVecConfig) -> Result<DocVecModel> {
    config.validate()?;
    let docs = documents(corpus, config.unit);
    if docs.is_empty() {
        return Err(Error::Empty("docvec training corpus"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for (_, words) in &docs {
        for w in words {
            *counts.entry(w.clone()).or_default() += 1;
        }
    }
    let vocabulary = Vocabulary::from_counts(&counts, config.min_count, None);
    let word_counts: Vec<u64> = vocabulary
        .tokens()
        .iter()
        .map(|t| counts.get(t).copied().unwrap_or(0) as u64)
        .collect();
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|(_, ws)| ws.iter().filter_map(|w| known(&vocabulary, &word_counts, w)).collect())
        .collect();

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let init = 0.5 / dim as f64;
    let mut word_vectors = Tensor::uniform(&[vocabulary.len(), dim], init, &mut rng);
    let mut doc_vectors = Tensor::uniform(&[docs.len(), dim], init, &mut rng);
    let mut output_vectors = Tensor::zeros(&[vocabulary.len(), dim]);
    let noise = NoiseTable::new(&word_counts);

    let total_words: usize = encoded.iter().map(Vec::len).sum::<usize>() * config.epochs;
    let mut seen = 0usize;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut epoch_loss, mut positions) = (0.0, 0usize);
        for &d in &order {
            let doc = &encoded[d];
            for i in 0..doc.len() {
                let progress = seen as f64 / total_words.max(1) as f64;
                let alpha = config.learning_rate
                    - (config.learning_rate - config.min_learning_rate) * progress;
                seen += 1;
                let ctx = context(doc, i, config.window);
                let h = mean_input(doc_vectors.row(d), &word_vectors, &ctx);
                let (loss, neu1e, updates) = ns_step(
                    &output_vectors,
                    &noise,
                    config.negative_samples,
                    &h,
                    doc[i],
                    alpha,
                    &mut rng,
                );
                for (word, g) in updates {
                    for (a, b) in output_vectors.row_mut(word).iter_mut().zip(&h) {
                        *a += g * b;
                    }
                }
                epoch_loss += loss;
                positions += 1;
                for (a, b) in doc_vectors.row_mut(d).iter_mut().zip(&neu1e) {
                    *a += b;
                }
                for &c in &ctx {
                    for (a, b) in word_vectors.row_mut(c).iter_mut().zip(&neu1e) {
                        *a += b;
                    }
                }
            }
        }
        loss_history.push(epoch_loss / positions.max(1) as f64);
    }

    Ok(DocVecModel {
        config: config.clone(),
        vocabulary,
        word_counts,
        word_vectors,
        output_vectors,
        doc_vectors,
        doc_tags: docs.into_iter().map(|(t, _)| t).collect(),
        loss_history,
    })
}

fn known(vocab: &Vocabulary, counts: &[u64], word: &str) -> Option<usize> {
    vocab.index(word).filter(|&i| counts[i] > 0)
}

impl DocVecModel {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn num_docs(&self) -> usize {
        self.doc_tags.len()
    }

    pub fn doc_vector(&self, i: usize) -> DocVector {
        DocVector(self.doc_vectors.row(i).to_vec())
    }

    pub fn doc_index(&self, tag: &str) -> Option<usize> {
        self.doc_tags.iter().position(|t| t == tag)
    }

    /// Infers a vector for `sentence` by `steps` passes of SGD on a fresh
    /// document vector, with a learning rate decaying linearly over the
    /// passes. Words never seen in training are ignored; a sentence with no
    /// trained words maps to the zero vector.
    pub fn infer_vector<S: AsRef<str>>(&self, sentence: &[S], steps: usize, seed: u64) -> Result<DocVector> {
        if sentence.is_empty() {
            return Err(Error::Empty("sentence"));
        }
        if steps == 0 {
            return Err(Error::invalid("inference needs at least one step"));
        }
        let doc: Vec<usize> = sentence
            .iter()
            .filter_map(|w| known(&self.vocabulary, &self.word_counts, w.as_ref()))
            .collect();
        if doc.is_empty() {
            return Ok(DocVector(vec![0.0; self.dim()]));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = 0.5 / self.dim() as f64;
        let mut v: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-init..init)).collect();
        let noise = NoiseTable::new(&self.word_counts);
        let (lr, min_lr) = (self.config.learning_rate, self.config.min_learning_rate);
        for step in 0..steps {
            let alpha = lr - (lr - min_lr) * step as f64 / steps as f64;
            for i in 0..doc.len() {
                let ctx = context(&doc, i, self.config.window);
                let h = mean_input(&v, &self.word_vectors, &ctx);
                let (_, neu1e, _) = ns_step(
                    &self.output_vectors,
                    &noise,
                    self.config.negative_samples,
                    &h,
                    doc[i],
                    alpha,
                    &mut rng,
                );
                for (a, b) in v.iter_mut().zip(&neu1e) {
                    *a += b;
                }
            }
        }
        Ok(DocVector(v))
    }
}

/// Maps a token sequence to a fixed-size vector.
pub trait SentenceEmbedder {
    fn dim(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Result<DocVector>;
}

impl SentenceEmbedder for DocVecModel {
    fn dim(&self) -> usize {
        self.config.dim
    }

    /// Inference with the configured step count and seed.
    fn embed(&self, tokens: &[String]) -> Result<DocVector> {
        self.infer_vector(tokens, self.config.infer_steps, self.config.rng_seed)
    }
}
