use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agentzero_core::classifier::{accuracy, predict, stratified_split, train, ClassifierModel, TrainConfig};
use agentzero_core::corpus::load_corpus;
use agentzero_core::embeddings::{load_embeddings, EmbeddingTable};
use agentzero_core::error::GatewayError;
use agentzero_core::gateway::{BackendKind, HttpConfig, HttpGateway, ModelGateway};
use agentzero_core::metrics::corpus_report;
use agentzero_core::model::{MultipleChoiceQuestion, PipelineConfig, QuestionType};
use agentzero_core::pipeline::{generate_corpus_parallel, CorpusSummary, PipelineDeps};
use agentzero_core::splitter::split_context_task;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "agentzero",
    version,
    about = "Rewrites multiple-choice questions without training data"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON pipeline configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampling and for the stub backend
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Backend::Stub)]
    backend: Backend,
    /// Base URL of the inference service
    #[arg(long, global = true, env = "AGENTZERO_URL", default_value = "http://127.0.0.1:8000")]
    url: String,
    #[arg(long, global = true, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long, global = true, default_value_t = 2)]
    retries: u32,
    /// Write data here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Stub,
    Http,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Predict question types
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train the question-type classifier on a labelled corpus
    TrainClassifier {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fraction of each class held out for evaluation
        #[arg(long, default_value_t = 0.2)]
        holdout: f64,
        #[arg(long, default_value_t = agentzero_core::classifier::DEFAULT_EPOCHS)]
        epochs: usize,
    },
    /// Split stems into context and task
    Split {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Generate rewritten questions
    Generate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Classifier for questions without a type label
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score generated questions against their originals
    Evaluate {
        /// JSONL with "generated" and "original" fields
        #[arg(long = "pairs", alias = "in")]
        pairs: PathBuf,
    },
    /// Nearest embedding neighbors of tokens
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(short = 'k', default_value_t = agentzero_core::model::DEFAULT_KNN_K)]
        k: usize,
        #[arg(required = true)]
        tokens: Vec<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn backend(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::BackendUnavailable(_) => Failure::backend(e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(g: &Global) -> CliResult<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| Failure::invalid(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.random_seed = seed;
    }
    Ok(cfg)
}

fn connect(g: &Global, cfg: &PipelineConfig) -> CliResult<Box<dyn ModelGateway>> {
    let kind = match g.backend {
        Backend::Stub => BackendKind::Stub { seed: cfg.random_seed },
        Backend::Http => BackendKind::HttpService {
            base_url: g.url.clone(),
            timeout_ms: g.timeout_ms,
            retries: g.retries,
        },
    };
    let gw = kind.connect()?;
    if g.backend == Backend::Http {
        let probe = HttpGateway::new(HttpConfig {
            base_url: g.url.clone(),
            timeout_ms: g.timeout_ms,
            retries: g.retries,
            ..HttpConfig::default()
        });
        if !probe.health()? {
            return Err(Failure::backend(format!("{} is not healthy", g.url)));
        }
    }
    Ok(gw)
}

fn read_corpus(path: &Path) -> CliResult<Vec<MultipleChoiceQuestion>> {
    load_corpus(path).map_err(|e| Failure::invalid(e.to_string()))
}

fn read_embeddings(path: &Path) -> CliResult<EmbeddingTable> {
    load_embeddings(path).map_err(|e| Failure::invalid(e.to_string()))
}

fn read_model(path: &Path) -> CliResult<ClassifierModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    ClassifierModel::from_json(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn open_out(g: &Global) -> CliResult<Box<dyn Write>> {
    match &g.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn emit(out: &mut dyn Write, line: &str) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| Failure::invalid(format!("write failed: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    match &cli.command {
        Command::Classify { input, model } => {
            let corpus = read_corpus(input)?;
            let model = read_model(model)?;
            let mut out = open_out(g)?;
            for q in &corpus {
                let (qtype, probs) = predict(&model, q);
                let probs: serde_json::Map<String, serde_json::Value> = QuestionType::ALL
                    .iter()
                    .map(|t| (t.as_str().to_string(), json!(probs[t.index()])))
                    .collect();
                emit(
                    &mut out,
                    &json!({"id": q.id, "qtype": qtype, "probabilities": probs}).to_string(),
                )?;
            }
            out.flush().map_err(|e| Failure::invalid(e.to_string()))
        }
        Command::TrainClassifier { input, holdout, epochs } => {
            if !(0.0..1.0).contains(holdout) {
                return Err(Failure::invalid("--holdout must be in [0, 1)"));
            }
            let corpus = read_corpus(input)?;
            let labelled: Vec<(MultipleChoiceQuestion, QuestionType)> =
                corpus.into_iter().filter_map(|q| q.qtype.map(|t| (q, t))).collect();
            let (train_set, test_set) = stratified_split(&labelled, *holdout, cfg.random_seed);
            let tc = TrainConfig {
                seed: cfg.random_seed,
                epochs: *epochs,
                ..TrainConfig::default()
            };
            let (model, report) = train(&train_set, tc).map_err(|e| Failure::invalid(e.to_string()))?;
            eprintln!(
                "trained on {} examples: train accuracy {:.4}, final loss {:.6}",
                report.examples, report.train_accuracy, report.final_loss
            );
            if !test_set.is_empty() {
                eprintln!(
                    "held-out accuracy {:.4} on {} examples",
                    accuracy(&model, &test_set),
                    test_set.len()
                );
            }
            let mut out = open_out(g)?;
            emit(&mut out, &model.to_json())?;
            out.flush().map_err(|e| Failure::invalid(e.to_string()))
        }
        Command::Split { input } => {
            let corpus = read_corpus(input)?;
            let mut out = open_out(g)?;
            for q in &corpus {
                let line = match split_context_task(&q.stem, &cfg) {
                    Ok(s) => json!({"id": q.id, "context": s.context, "task": s.task, "task_index": s.task_index}),
                    Err(e) => json!({"id": q.id, "error": e.to_string()}),
                };
                emit(&mut out, &line.to_string())?;
            }
            out.flush().map_err(|e| Failure::invalid(e.to_string()))
        }
        Command::Generate {
            input,
            embeddings,
            model,
            jobs,
        } => {
            let corpus = read_corpus(input)?;
            let table = read_embeddings(embeddings)?;
            let classifier = model.as_deref().map(read_model).transpose()?;
            let gateway = connect(g, &cfg)?;
            let deps = PipelineDeps {
                classifier: classifier.as_ref(),
                gateway: gateway.as_ref(),
                embeddings: &table,
            };
            let outcomes = generate_corpus_parallel(&corpus, &deps, &cfg, (*jobs).max(1));
            let mut out = open_out(g)?;
            for o in &outcomes {
                emit(&mut out, &o.to_json_line())?;
            }
            out.flush().map_err(|e| Failure::invalid(e.to_string()))?;
            let summary = CorpusSummary::of(&outcomes);
            eprintln!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            if summary.failures > 0 {
                return Err(Failure::backend(format!(
                    "{} questions failed on the backend",
                    summary.failures
                )));
            }
            Ok(())
        }
        Command::Evaluate { pairs } => {
            let pairs = read_pairs(pairs)?;
            let report = corpus_report(&pairs).map_err(|e| Failure::invalid(e.to_string()))?;
            let mut out = open_out(g)?;
            emit(
                &mut out,
                &serde_json::to_string(&report.scaled()).expect("report serializes"),
            )?;
            out.flush().map_err(|e| Failure::invalid(e.to_string()))
        }
        Command::Neighbors { embeddings, k, tokens } => {
            let table = read_embeddings(embeddings)?;
            let mut out = open_out(g)?;
            for t in tokens {
                if !table.contains(t) {
                    log::warn!("{t:?} is not in the vocabulary");
                }
                let nn = table.nearest_to_phrase(t, *k);
                emit(&mut out, &json!({"token": t, "neighbors": nn}).to_string())?;
            }
            out.flush().map_err(|e| Failure::invalid(e.to_string()))
        }
    }
}

fn read_pairs(path: &Path) -> CliResult<Vec<(String, String)>> {
    let f = File::open(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |why: &str| Failure::invalid(format!("{}:{}: {why}", path.display(), i + 1));
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| bad(&e.to_string()))?;
        let field = |k: &str| v.get(k).and_then(|x| x.as_str()).map(str::to_string);
        match (field("generated"), field("original")) {
            (Some(gen), Some(orig)) => pairs.push((gen, orig)),
            _ => return Err(bad("expected string fields \"generated\" and \"original\"")),
        }
    }
    Ok(pairs)
}
