//! Question-type classifier: multinomial logistic regression over a bag of
//! words plus three handcrafted features (numeric token count, question
//! length, mean choice length).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ClassifierError;
use crate::model::{MultipleChoiceQuestion, QuestionType};
use crate::text::{is_numeric_token, tokenize};

pub const SCHEMA_VERSION: u32 = 1;
pub const NUM_CLASSES: usize = 3;
pub const NUM_CUSTOM: usize = 3;

pub const DEFAULT_L2: f64 = 1e-2;
pub const DEFAULT_EPOCHS: usize = 200;
pub const LEARNING_RATE: f64 = 0.1;
const BATCH_SIZE: usize = 8;

/// Token → dense id, ids assigned in sorted token order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let sorted: BTreeSet<String> = tokens.into_iter().collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, ids }
    }

    pub fn build(questions: &[&MultipleChoiceQuestion]) -> Self {
        Self::from_tokens(questions.iter().flat_map(|q| question_tokens(q)))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

fn question_tokens(q: &MultipleChoiceQuestion) -> Vec<String> {
    let mut t = tokenize(&q.stem);
    for c in &q.choices {
        t.extend(tokenize(c));
    }
    t
}

/// Raw (unnormalized) features of one question.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub bow: BTreeMap<usize, u32>,
    pub numeric_token_count: u32,
    pub question_length: u32,
    pub avg_choice_length: f64,
}

impl FeatureVector {
    pub fn custom(&self) -> [f64; NUM_CUSTOM] {
        [
            f64::from(self.numeric_token_count),
            f64::from(self.question_length),
            self.avg_choice_length,
        ]
    }
}

/// Bag of words over stem and choices; out-of-vocabulary tokens only count toward lengths.
pub fn extract_features(q: &MultipleChoiceQuestion, vocab: &Vocabulary) -> FeatureVector {
    let stem = tokenize(&q.stem);
    let choices: Vec<Vec<String>> = q.choices.iter().map(|c| tokenize(c)).collect();
    let mut bow = BTreeMap::new();
    for t in stem.iter().chain(choices.iter().flatten()) {
        if let Some(id) = vocab.id(t) {
            *bow.entry(id).or_insert(0) += 1;
        }
    }
    let numeric = stem
        .iter()
        .chain(choices.iter().flatten())
        .filter(|t| is_numeric_token(t))
        .count();
    let avg_choice_length = if choices.is_empty() {
        0.0
    } else {
        choices.iter().map(Vec::len).sum::<usize>() as f64 / choices.len() as f64
    };
    FeatureVector {
        bow,
        numeric_token_count: numeric as u32,
        question_length: stem.len() as u32,
        avg_choice_length,
    }
}

/// Sparse model input: (feature index, value), custom features z-normalized.
pub type Input = Vec<(usize, f64)>;

/// A trained classifier; immutable and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    vocab: Vocabulary,
    mean: [f64; NUM_CUSTOM],
    std: [f64; NUM_CUSTOM],
    /// One row per class, `dim + 1` entries each; the last entry is the bias.
    weights: Vec<Vec<f64>>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    seed: u64,
    classes: Vec<QuestionType>,
    vocabulary: Vec<String>,
    feature_names: Vec<String>,
    feature_mean: Vec<f64>,
    feature_std: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

const FEATURE_NAMES: [&str; NUM_CUSTOM] = ["numeric_token_count", "question_length", "avg_choice_length"];

impl ClassifierModel {
    /// A zero-weight model over `vocab`, mostly for tests.
    pub fn zeros(vocab: Vocabulary) -> Self {
        let dim = vocab.len() + NUM_CUSTOM;
        Self {
            vocab,
            mean: [0.0; NUM_CUSTOM],
            std: [1.0; NUM_CUSTOM],
            weights: vec![vec![0.0; dim + 1]; NUM_CLASSES],
            seed: 0,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of features, excluding the bias.
    pub fn dim(&self) -> usize {
        self.vocab.len() + NUM_CUSTOM
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    /// Learned weight of a custom feature (0 = numeric count, 1 = question length, 2 = choice length).
    pub fn custom_weight(&self, class: QuestionType, feature: usize) -> f64 {
        self.weights[class.index()][self.vocab.len() + feature]
    }

    /// Contribution of the numeric-token feature to `class`'s logit for a given count.
    pub fn numeric_logit_contribution(&self, class: QuestionType, numeric_tokens: u32) -> f64 {
        let z = (f64::from(numeric_tokens) - self.mean[0]) / self.std[0];
        self.custom_weight(class, 0) * z
    }

    pub fn input(&self, f: &FeatureVector) -> Input {
        let mut x: Input = f.bow.iter().map(|(&id, &c)| (id, f64::from(c))).collect();
        let base = self.vocab.len();
        for (k, v) in f.custom().into_iter().enumerate() {
            x.push((base + k, (v - self.mean[k]) / self.std[k]));
        }
        x
    }

    pub fn logits(&self, x: &Input) -> [f64; NUM_CLASSES] {
        let mut out = [0.0; NUM_CLASSES];
        let bias = self.dim();
        for (c, w) in self.weights.iter().enumerate() {
            out[c] = w[bias] + x.iter().map(|&(i, v)| w[i] * v).sum::<f64>();
        }
        out
    }

    pub fn probabilities(&self, x: &Input) -> [f64; NUM_CLASSES] {
        softmax(self.logits(x))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            schema_version: SCHEMA_VERSION,
            seed: self.seed,
            classes: QuestionType::ALL.to_vec(),
            vocabulary: self.vocab.tokens.clone(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            feature_mean: self.mean.to_vec(),
            feature_std: self.std.to_vec(),
            weights: self.weights.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let bad = |m: &str| ClassifierError::Serde(m.to_string());
        let f: ModelFile = serde_json::from_str(text).map_err(|e| ClassifierError::Serde(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(bad("unsupported schema version"));
        }
        if f.classes != QuestionType::ALL {
            return Err(bad("unexpected class order"));
        }
        let vocab = Vocabulary::from_tokens(f.vocabulary.iter().cloned());
        if vocab.tokens != f.vocabulary {
            return Err(bad("vocabulary must be sorted and unique"));
        }
        let dim = vocab.len() + NUM_CUSTOM;
        if f.weights.len() != NUM_CLASSES || f.weights.iter().any(|w| w.len() != dim + 1) {
            return Err(bad("weight matrix shape does not match vocabulary"));
        }
        let arr = |v: &[f64]| -> Result<[f64; NUM_CUSTOM], ClassifierError> {
            v.try_into().map_err(|_| bad("normalization stats must have 3 entries"))
        };
        Ok(Self {
            vocab,
            mean: arr(&f.feature_mean)?,
            std: arr(&f.feature_std)?,
            weights: f.weights,
            seed: f.seed,
        })
    }
}

pub fn softmax(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|l| (l - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

/// Index of the largest entry; the first wins ties.
fn argmax(p: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    best
}

pub fn predict(model: &ClassifierModel, q: &MultipleChoiceQuestion) -> (QuestionType, [f64; NUM_CLASSES]) {
    let x = model.input(&extract_features(q, &model.vocab));
    let p = model.probabilities(&x);
    (QuestionType::ALL[argmax(&p)], p)
}

/// Mean cross-entropy plus `l2 / 2 * ||W||²` (bias excluded), with its gradient.
pub fn objective(model: &ClassifierModel, data: &[(Input, usize)], l2: f64) -> (f64, Vec<Vec<f64>>) {
    let dim = model.dim();
    let n = data.len().max(1) as f64;
    let mut grad = vec![vec![0.0; dim + 1]; NUM_CLASSES];
    let mut loss = 0.0;
    for (x, y) in data {
        let p = model.probabilities(x);
        loss -= p[*y].max(f64::MIN_POSITIVE).ln();
        for (c, g) in grad.iter_mut().enumerate() {
            let err = (p[c] - if c == *y { 1.0 } else { 0.0 }) / n;
            for &(i, v) in x {
                g[i] += err * v;
            }
            g[dim] += err;
        }
    }
    loss /= n;
    for (w, g) in model.weights.iter().zip(grad.iter_mut()) {
        for i in 0..dim {
            loss += 0.5 * l2 * w[i] * w[i];
            g[i] += l2 * w[i];
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub l2: f64,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            l2: DEFAULT_L2,
            epochs: DEFAULT_EPOCHS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub final_loss: f64,
    pub examples: usize,
}

/// Fits the model with seeded mini-batch gradient descent; step size 0.1/sqrt(epoch).
pub fn train(
    corpus: &[(MultipleChoiceQuestion, QuestionType)],
    cfg: TrainConfig,
) -> Result<(ClassifierModel, TrainReport), ClassifierError> {
    if corpus.len() < 2 {
        return Err(ClassifierError::DegenerateCorpus(format!(
            "need at least 2 labelled questions, got {}",
            corpus.len()
        )));
    }
    if cfg.epochs == 0 {
        return Err(ClassifierError::DegenerateCorpus("epochs must be positive".into()));
    }
    let questions: Vec<&MultipleChoiceQuestion> = corpus.iter().map(|(q, _)| q).collect();
    let vocab = Vocabulary::build(&questions);
    let feats: Vec<FeatureVector> = questions.iter().map(|q| extract_features(q, &vocab)).collect();

    let n = feats.len() as f64;
    let mut mean = [0.0; NUM_CUSTOM];
    let mut std = [0.0; NUM_CUSTOM];
    for f in &feats {
        for (k, v) in f.custom().into_iter().enumerate() {
            mean[k] += v / n;
        }
    }
    for f in &feats {
        for (k, v) in f.custom().into_iter().enumerate() {
            std[k] += (v - mean[k]).powi(2) / n;
        }
    }
    let std = std.map(|s| if s.sqrt() < 1e-12 { 1.0 } else { s.sqrt() });

    let mut model = ClassifierModel::zeros(vocab);
    model.mean = mean;
    model.std = std;
    model.seed = cfg.seed;

    let data: Vec<(Input, usize)> = feats
        .iter()
        .zip(corpus)
        .map(|(f, (_, y))| (model.input(f), y.index()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = LEARNING_RATE / ((epoch + 1) as f64).sqrt();
        for chunk in order.chunks(BATCH_SIZE) {
            let batch: Vec<(Input, usize)> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (_, grad) = objective(&model, &batch, cfg.l2);
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g);
            }
        }
    }

    let (final_loss, _) = objective(&model, &data, cfg.l2);
    let correct = data
        .iter()
        .filter(|(x, y)| argmax(&model.probabilities(x)) == *y)
        .count();
    let report = TrainReport {
        train_accuracy: correct as f64 / n,
        final_loss,
        examples: data.len(),
    };
    Ok((model, report))
}

pub type Labelled<T> = Vec<(T, QuestionType)>;

/// Per-class deterministic split; `test_fraction` of each class (rounded) goes to the test side.
pub fn stratified_split<T: Clone>(
    labelled: &[(T, QuestionType)],
    test_fraction: f64,
    seed: u64,
) -> (Labelled<T>, Labelled<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in QuestionType::ALL {
        let mut idx: Vec<usize> = (0..labelled.len()).filter(|&i| labelled[i].1 == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        for (k, &i) in idx.iter().enumerate() {
            if k < n_test {
                test.push(labelled[i].clone());
            } else {
                train.push(labelled[i].clone());
            }
        }
    }
    (train, test)
}

pub fn accuracy(model: &ClassifierModel, labelled: &[(MultipleChoiceQuestion, QuestionType)]) -> f64 {
    if labelled.is_empty() {
        return 0.0;
    }
    let ok = labelled.iter().filter(|(q, y)| predict(model, q).0 == *y).count();
    ok as f64 / labelled.len() as f64
}
