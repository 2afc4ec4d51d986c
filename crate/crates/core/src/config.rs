//! Pipeline configuration, read from a single TOML document. Every section
//! and field is optional and falls back to its default.
//!
//! ```
//! use hiermail::config::PipelineConfig;
//!
//! let cfg = PipelineConfig::from_toml_str(
//!     "[lm]\nhidden_units = 32\n\n[generation]\ntemperature = 0.7\n",
//! )
//! .unwrap();
//! assert_eq!(cfg.lm.hidden_units, 32);
//! assert_eq!(cfg.lm.context_window, 15);
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, load_maildir, Corpus, CorpusFormat};
use crate::docvec::DocVecConfig;
use crate::error::{Error, Result};
use crate::hiergen::{GenerationConfig, PredictorConfig};
use crate::wordlm::LmConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// A directory is read file-per-email, anything else as JSON lines.
    #[default]
    Auto,
    Jsonl,
    Directory,
    /// Enron-style maildir tree with RFC 822 headers.
    Maildir,
}

/// Reads `path` in the given format.
pub fn read_corpus(path: &Path, format: InputFormat) -> Result<Corpus> {
    match format {
        InputFormat::Auto if path.is_dir() => load_corpus(path, CorpusFormat::Directory),
        InputFormat::Auto | InputFormat::Jsonl => load_corpus(path, CorpusFormat::Jsonl),
        InputFormat::Directory => load_corpus(path, CorpusFormat::Directory),
        InputFormat::Maildir => {
            if !path.exists() {
                return Err(Error::MissingPath(path.to_path_buf()));
            }
            load_maildir(path, None)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    pub corpus_format: InputFormat,
    /// Cue lexicon file; the shipped lexicons are used when it is absent.
    pub lexicons: Option<PathBuf>,
    pub checkpoints: PathBuf,
    pub output: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: PathBuf::from("corpus.jsonl"),
            corpus_format: InputFormat::Auto,
            lexicons: None,
            checkpoints: PathBuf::from("checkpoints"),
            output: PathBuf::from("output"),
        }
    }
}

impl PathsConfig {
    pub fn lm_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("wordlm.ckpt")
    }

    pub fn docvec_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("docvec.ckpt")
    }

    pub fn predictor_checkpoint(&self) -> PathBuf {
        self.checkpoints.join("predictor.ckpt")
    }
}

/// Filtering and the train/validation split applied before training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_words: usize,
    pub min_sentences: usize,
    pub validation_fraction: f64,
    pub split_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_words: 1,
            min_sentences: 1,
            validation_fraction: 0.05,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Corpus for the bigram model and the common-trigram list; the
    /// training corpus when absent.
    pub reference_corpus: Option<PathBuf>,
    pub top_k: usize,
    pub smoothing_alpha: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            reference_corpus: None,
            top_k: 1000,
            smoothing_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub corpus: CorpusConfig,
    pub lm: LmConfig,
    pub docvec: DocVecConfig,
    pub predictor: PredictorConfig,
    pub generation: GenerationConfig,
    pub metrics: MetricsConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        self.docvec.validate()?;
        self.predictor.validate()?;
        self.generation.validate()?;
        let f = self.corpus.validation_fraction;
        if !(0.0..1.0).contains(&f) {
            return Err(Error::Config("corpus.validation_fraction must lie in [0, 1)".into()));
        }
        if self.metrics.top_k == 0 {
            return Err(Error::Config("metrics.top_k must be positive".into()));
        }
        if !(self.metrics.smoothing_alpha >= 0.0 && self.metrics.smoothing_alpha.is_finite()) {
            return Err(Error::Config("metrics.smoothing_alpha must be non-negative".into()));
        }
        Ok(())
    }
}
