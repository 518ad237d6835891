//! Domain types shared across the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// The three-way question taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Application,
    Concept,
    Calculation,
}

impl QuestionType {
    /// Class order; also the argmax tie-break order.
    pub const ALL: [QuestionType; 3] = [Self::Application, Self::Concept, Self::Calculation];

    pub fn index(self) -> usize {
        match self {
            Self::Application => 0,
            Self::Concept => 1,
            Self::Calculation => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Application => "application",
            Self::Concept => "concept",
            Self::Calculation => "calculation",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A multiple-choice question as loaded from a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultipleChoiceQuestion {
    pub id: String,
    pub stem: String,
    pub choices: Vec<String>,
    pub correct_index: usize,
    pub domain: String,
    pub qtype: Option<QuestionType>,
}

impl MultipleChoiceQuestion {
    pub fn correct_choice(&self) -> &str {
        &self.choices[self.correct_index]
    }

    /// Checks the record invariants, returning a human-readable reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if self.stem.trim().is_empty() {
            return Err("question text is empty".into());
        }
        if self.choices.len() < 2 {
            return Err(format!("need at least 2 choices, got {}", self.choices.len()));
        }
        if self.correct_index >= self.choices.len() {
            return Err(format!(
                "answer_index {} out of range for {} choices",
                self.correct_index,
                self.choices.len()
            ));
        }
        let distinct: BTreeSet<&str> = self.choices.iter().map(String::as_str).collect();
        if distinct.len() != self.choices.len() {
            return Err("choices are not pairwise distinct".into());
        }
        Ok(())
    }
}

/// CoNLL-2003 style entity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PER")]
    Person,
    #[serde(rename = "GPE")]
    GeoPolitical,
    #[serde(rename = "LOC")]
    Location,
    #[serde(rename = "MISC")]
    Misc,
}

impl EntityLabel {
    pub fn wire_name(self) -> &'static str {
        match self {
            Self::Person => "PER",
            Self::GeoPolitical => "GPE",
            Self::Location => "LOC",
            Self::Misc => "MISC",
        }
    }

    pub fn from_wire(s: &str) -> Option<Self> {
        match s {
            "PER" => Some(Self::Person),
            "GPE" => Some(Self::GeoPolitical),
            "LOC" => Some(Self::Location),
            "MISC" => Some(Self::Misc),
            _ => None,
        }
    }
}

/// Tunables for the whole generation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub bleu_min: f64,
    pub bleu_max: f64,
    pub knn_k: usize,
    pub max_paraphrase_candidates: usize,
    pub max_outputs_per_question: usize,
    pub wh_words: BTreeSet<String>,
    pub entity_defaults: BTreeMap<EntityLabel, Vec<String>>,
    pub random_seed: u64,
}

pub const DEFAULT_BLEU_MIN: f64 = 0.23;
pub const DEFAULT_BLEU_MAX: f64 = 0.8;
pub const DEFAULT_KNN_K: usize = 5;

impl Default for PipelineConfig {
    fn default() -> Self {
        let list = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut entity_defaults = BTreeMap::new();
        entity_defaults.insert(EntityLabel::Person, list(&["James", "Maria", "Wei"]));
        entity_defaults.insert(EntityLabel::GeoPolitical, list(&["Canada", "Germany", "Japan"]));
        entity_defaults.insert(EntityLabel::Location, list(&["Europe", "Asia", "Africa"]));
        entity_defaults.insert(EntityLabel::Misc, Vec::new());
        Self {
            bleu_min: DEFAULT_BLEU_MIN,
            bleu_max: DEFAULT_BLEU_MAX,
            knn_k: DEFAULT_KNN_K,
            max_paraphrase_candidates: 10,
            max_outputs_per_question: 5,
            wh_words: ["who", "what", "when", "where", "why", "how", "which"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            entity_defaults,
            random_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.bleu_min) || !in_unit(self.bleu_max) {
            return Err(ConfigError::Invalid("bleu bounds must lie in [0, 1]".into()));
        }
        if self.bleu_min >= self.bleu_max {
            return Err(ConfigError::Invalid(format!(
                "bleu_min ({}) must be below bleu_max ({})",
                self.bleu_min, self.bleu_max
            )));
        }
        if self.knn_k == 0 {
            return Err(ConfigError::Invalid("knn_k must be at least 1".into()));
        }
        if self.max_paraphrase_candidates == 0 || self.max_outputs_per_question == 0 {
            return Err(ConfigError::Invalid(
                "candidate and output limits must be positive".into(),
            ));
        }
        if self.wh_words.is_empty() {
            return Err(ConfigError::Invalid("wh_words must not be empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.wh_words = cfg.wh_words.iter().map(|w| w.to_lowercase()).collect();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn defaults_for(&self, label: EntityLabel) -> &[String] {
        self.entity_defaults.get(&label).map_or(&[], Vec::as_slice)
    }
}

/// Which generation path produced an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ParaphraseOnly,
    NerOnly,
    Combined,
}

/// A rewritten question. Answer choices are carried over verbatim from the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub source_id: String,
    pub text: String,
    pub task: String,
    pub route: Route,
    pub replacements: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_bleu4: Option<f64>,
    pub choices: Vec<String>,
    pub answer_index: usize,
}

impl GeneratedQuestion {
    /// Route-dependent invariants against the gate band in `cfg`.
    pub fn check(&self, cfg: &PipelineConfig) -> Result<(), String> {
        let needs_bleu = matches!(self.route, Route::ParaphraseOnly | Route::Combined);
        let needs_repl = matches!(self.route, Route::NerOnly | Route::Combined);
        match (needs_bleu, self.context_bleu4) {
            (true, None) => return Err("paraphrase route without a context score".into()),
            (true, Some(b)) if b < cfg.bleu_min || b > cfg.bleu_max => {
                return Err(format!("context score {b} outside the gate band"))
            }
            _ => {}
        }
        if needs_repl && self.replacements.is_empty() {
            return Err("replacement route without replacements".into());
        }
        Ok(())
    }
}
