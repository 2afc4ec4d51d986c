//! `hiermail`: preprocess email corpora, train the word, paragraph-vector
//! and sentence models, generate emails and evaluate them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hiermail::checkpoint::{load_checkpoint, save_checkpoint};
use hiermail::config::{read_corpus, InputFormat, PipelineConfig};
use hiermail::corpus::{corpus_stats, filter_corpus, split_corpus, write_jsonl, Corpus, HeuristicRecognizer};
use hiermail::cues::{cue_summary, detect_cues, load_lexicons, CueLexicons};
use hiermail::docvec::{train_docvec, DocVecModel};
use hiermail::hiergen::{generate_email, generate_word_only, train_sentence_predictor, SentencePredictor};
use hiermail::metrics::{evaluate_batch, save_trigrams, top_trigrams, train_bigram_model};
use hiermail::wordlm::{train_word_lm_with, WordLM};
use hiermail::Error;

#[derive(Parser)]
#[command(name = "hiermail", version, about = "Hierarchical email generation pipeline")]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that take precedence over the configuration file.
#[derive(clap::Args)]
struct Overrides {
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, global = true)]
    lexicons: Option<PathBuf>,
    #[arg(long, global = true)]
    checkpoints: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Sets every random seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    num_candidates: Option<usize>,
    #[arg(long, global = true)]
    num_sentences: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Jsonl,
    Directory,
    Maildir,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Hierarchical,
    Word,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Hierarchical => "hierarchical",
            Mode::Word => "word",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset statistics of the preprocessed corpus.
    Stats {
        #[arg(long)]
        json: bool,
    },
    /// Clean and tag the corpus and write it as JSON lines.
    Preprocess {
        /// Destination; defaults to `<output>/clean.jsonl`.
        #[arg(long)]
        to: Option<PathBuf>,
    },
    /// Train the word-level language model.
    TrainLm,
    /// Train the paragraph-vector model.
    TrainDocvec,
    /// Train the sentence-vector predictor (needs the paragraph-vector model).
    TrainPredictor,
    /// Generate emails seeded from randomly chosen corpus emails.
    Generate {
        #[arg(long, value_enum, default_value = "hierarchical")]
        mode: Mode,
        /// Number of emails.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Score generated emails (perplexity, coherence, trigram overlap).
    Evaluate {
        /// Generated emails as JSON lines; defaults to the hierarchical output.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Count phishing cues in a corpus.
    Cues {
        /// Emails to scan; defaults to the configured corpus.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

/// A failure and its exit status.
enum Failure {
    /// Bad flags or configuration: exit 1.
    Usage(String),
    /// Missing or invalid data or models: exit 2.
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Data(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (1, m),
                Failure::Data(e) => (2, e.to_string()),
            };
            eprintln!("hiermail: error: {}", msg.replace('\n', " "));
            ExitCode::from(code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(p) = &o.corpus {
        cfg.paths.corpus = p.clone();
    }
    if let Some(f) = o.format {
        cfg.paths.corpus_format = match f {
            FormatArg::Auto => InputFormat::Auto,
            FormatArg::Jsonl => InputFormat::Jsonl,
            FormatArg::Directory => InputFormat::Directory,
            FormatArg::Maildir => InputFormat::Maildir,
        };
    }
    if let Some(p) = &o.lexicons {
        cfg.paths.lexicons = Some(p.clone());
    }
    if let Some(p) = &o.checkpoints {
        cfg.paths.checkpoints = p.clone();
    }
    if let Some(p) = &o.output {
        cfg.paths.output = p.clone();
    }
    if let Some(s) = o.seed {
        cfg.corpus.split_seed = s;
        cfg.lm.rng_seed = s;
        cfg.docvec.rng_seed = s;
        cfg.predictor.rng_seed = s;
        cfg.generation.rng_seed = s;
    }
    if let Some(e) = o.epochs {
        cfg.lm.epochs = e;
        cfg.docvec.epochs = e;
        cfg.predictor.epochs = e;
    }
    if let Some(t) = o.temperature {
        cfg.generation.temperature = t;
    }
    if let Some(x) = o.num_candidates {
        cfg.generation.num_candidates = x;
    }
    if let Some(n) = o.num_sentences {
        cfg.generation.num_sentences = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn clean_corpus(path: &Path, format: InputFormat) -> Result<Corpus, Failure> {
    let raw = read_corpus(path, format)?;
    Ok(raw.preprocess(&HeuristicRecognizer::default()))
}

/// Preprocessed, filtered corpus split into training and validation parts.
fn training_data(cfg: &PipelineConfig) -> Result<(Corpus, Corpus), Failure> {
    let clean = clean_corpus(&cfg.paths.corpus, cfg.paths.corpus_format)?;
    let kept = filter_corpus(&clean, cfg.corpus.min_words, cfg.corpus.min_sentences);
    if kept.is_empty() {
        return Err(Failure::Data(Error::Empty("corpus after filtering")));
    }
    if cfg.corpus.validation_fraction == 0.0 || kept.len() < 2 {
        return Ok((kept, Corpus::default()));
    }
    Ok(split_corpus(&kept, cfg.corpus.validation_fraction, cfg.corpus.split_seed)?)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Data(Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Stats { json } => {
            let corpus = clean_corpus(&cfg.paths.corpus, cfg.paths.corpus_format)?;
            let stats = corpus_stats(&corpus)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).unwrap());
            } else {
                print!("{stats}");
            }
        }
        Command::Preprocess { to } => {
            let corpus = clean_corpus(&cfg.paths.corpus, cfg.paths.corpus_format)?;
            let to = to.unwrap_or_else(|| cfg.paths.output.join("clean.jsonl"));
            if let Some(dir) = to.parent().filter(|d| !d.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            write_jsonl(&corpus, &to)?;
            println!("wrote {} emails to {}", corpus.len(), to.display());
        }
        Command::TrainLm => {
            let (train, valid) = training_data(&cfg)?;
            let model = train_word_lm_with(&train, &valid, &cfg.lm, |r| {
                eprintln!(
                    "epoch {:>3}  train {:.4}  valid {}",
                    r.epoch,
                    r.train_loss,
                    r.validation_loss.map_or("-".into(), |v| format!("{v:.4}"))
                );
            })?;
            let path = cfg.paths.lm_checkpoint();
            save_checkpoint(&model, &path)?;
            println!("saved word model ({} tokens) to {}", model.vocab.len(), path.display());
        }
        Command::TrainDocvec => {
            let (train, _) = training_data(&cfg)?;
            let model = train_docvec(&train, &cfg.docvec)?;
            let path = cfg.paths.docvec_checkpoint();
            save_checkpoint(&model, &path)?;
            println!(
                "saved paragraph vectors ({} documents, dim {}) to {}",
                model.num_docs(),
                model.dim(),
                path.display()
            );
        }
        Command::TrainPredictor => {
            let dv: DocVecModel = load_checkpoint(&cfg.paths.docvec_checkpoint())?;
            let (train, valid) = training_data(&cfg)?;
            let model = train_sentence_predictor(&train, &valid, &dv, &cfg.predictor)?;
            let path = cfg.paths.predictor_checkpoint();
            save_checkpoint(&model, &path)?;
            println!("saved sentence predictor to {}", path.display());
        }
        Command::Generate { mode, count } => generate(&cfg, mode, count)?,
        Command::Evaluate { input, json } => evaluate(&cfg, input, json)?,
        Command::Cues { input, json } => {
            let path = input.unwrap_or_else(|| cfg.paths.corpus.clone());
            let corpus = clean_corpus(&path, cfg.paths.corpus_format)?;
            let lex = match &cfg.paths.lexicons {
                Some(p) => load_lexicons(p)?,
                None => CueLexicons::default(),
            };
            let reports: Vec<_> = corpus.emails.iter().map(|e| detect_cues(&e.clean_body, &lex)).collect();
            let summary = cue_summary(&reports)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            } else {
                print!("{summary}");
            }
        }
    }
    Ok(())
}

fn generate(cfg: &PipelineConfig, mode: Mode, count: usize) -> Result<(), Failure> {
    if count == 0 {
        return Err(Failure::Usage("--count must be positive".into()));
    }
    let lm: WordLM = load_checkpoint(&cfg.paths.lm_checkpoint())?;
    let models = match mode {
        Mode::Hierarchical => Some((
            load_checkpoint::<DocVecModel>(&cfg.paths.docvec_checkpoint())?,
            load_checkpoint::<SentencePredictor>(&cfg.paths.predictor_checkpoint())?,
        )),
        Mode::Word => None,
    };
    let s = cfg.predictor.window;
    let n = lm.config.context_window;
    let corpus = clean_corpus(&cfg.paths.corpus, cfg.paths.corpus_format)?;
    // both modes draw the same seeds: the first S sentences of an email
    // whose opening gives the word model a full context window
    let eligible: Vec<&hiermail::corpus::Email> = corpus
        .emails
        .iter()
        .filter(|e| {
            e.sentences.len() >= s && 1 + e.sentences[..s].iter().map(Vec::len).sum::<usize>() >= n
        })
        .collect();
    if eligible.is_empty() {
        return Err(Failure::Data(Error::Empty("emails long enough to seed generation")));
    }
    let mut pick_rng = ChaCha8Rng::seed_from_u64(cfg.generation.rng_seed);
    let mut picks = sample(&mut pick_rng, eligible.len(), count.min(eligible.len())).into_vec();
    picks.sort_unstable();

    let out_dir = &cfg.paths.output;
    create_dir(out_dir)?;
    let trace_dir = out_dir.join("traces");
    if mode == Mode::Hierarchical {
        create_dir(&trace_dir)?;
    }
    let mut lines = String::new();
    for (k, &i) in picks.iter().enumerate() {
        let source = eligible[i];
        let seeds = source.sentences[..s].to_vec();
        let id = format!("gen-{k}");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.generation.rng_seed.wrapping_add(1 + k as u64));
        let body = match &models {
            Some((dv, sp)) => {
                let email = generate_email(&lm, dv, sp, &seeds, &cfg.generation, &mut rng)?;
                email.write_trace(&trace_dir.join(format!("{id}.json")))?;
                email.text()
            }
            None => {
                let generated = generate_word_only(&lm, &seeds, &cfg.generation, &mut rng)?;
                let mut toks = vec!["<SOT>".to_string()];
                toks.extend(seeds.iter().chain(&generated).flatten().cloned());
                toks.push("<EOT>".to_string());
                toks.join(" ")
            }
        };
        println!("[{id}] {body}");
        let rec = json!({ "id": id, "source": source.id, "mode": mode.name(), "body": body });
        lines.push_str(&rec.to_string());
        lines.push('\n');
    }
    let path = out_dir.join(format!("generated_{}.jsonl", mode.name()));
    write_file(&path, &lines)?;
    eprintln!("wrote {} emails to {}", picks.len(), path.display());
    Ok(())
}

fn evaluate(cfg: &PipelineConfig, input: Option<PathBuf>, json_out: bool) -> Result<(), Failure> {
    let input = input.unwrap_or_else(|| cfg.paths.output.join("generated_hierarchical.jsonl"));
    let lm: WordLM = load_checkpoint(&cfg.paths.lm_checkpoint())?;
    let generated = read_corpus(&input, InputFormat::Jsonl)?;
    if generated.is_empty() {
        return Err(Failure::Data(Error::Empty("generated emails")));
    }
    let reference_path = cfg.metrics.reference_corpus.as_ref().unwrap_or(&cfg.paths.corpus);
    let reference = clean_corpus(reference_path, cfg.paths.corpus_format)?;
    let bm = train_bigram_model(&reference, cfg.metrics.smoothing_alpha)?;
    let common = top_trigrams(&reference, cfg.metrics.top_k)?;

    let emails: Vec<(String, Vec<String>)> = generated
        .emails
        .iter()
        .map(|e| (e.id.clone(), e.raw_body.split_whitespace().map(String::from).collect()))
        .collect();
    let report = evaluate_batch(&emails, &lm, &bm, &common)?;

    create_dir(&cfg.paths.output)?;
    save_trigrams(&cfg.paths.output.join("trigrams.txt"), &common)?;
    let report_json = serde_json::to_string_pretty(&report).unwrap();
    write_file(&cfg.paths.output.join("metrics.json"), &(report_json.clone() + "\n"))?;
    if json_out {
        println!("{report_json}");
    } else {
        print!("{report}");
    }
    Ok(())
}
