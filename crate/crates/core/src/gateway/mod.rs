//! Access to the neural capabilities: paraphrasing, entity recognition and
//! masked-slot fill scoring.
//!
//! Two backends implement [`ModelGateway`]: [`HttpGateway`] talks to the
//! inference sidecar, [`StubGateway`] is a deterministic rule-based
//! stand-in used for tests and offline runs. Both run their results through
//! the same validation so downstream code sees identical guarantees.

mod http;
mod stub;

pub use http::{HttpConfig, HttpGateway};
pub use stub::{ParaphraseMode, StubAssets, StubGateway};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::model::EntityLabel;
use crate::text::char_to_byte;

/// Wire-level blank marker; the server maps it to the model's own mask token.
pub const MASK: &str = "***MASK***";

/// An entity span in char offsets (half-open).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub label: EntityLabel,
}

impl EntityMention {
    /// Byte range of this mention in `text`, if the char offsets are valid.
    pub fn byte_range(&self, text: &str) -> Option<(usize, usize)> {
        Some((char_to_byte(text, self.start)?, char_to_byte(text, self.end)?))
    }
}

/// A blanked template with the options to rank for the blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillQuery {
    template: String,
    options: Vec<String>,
}

impl FillQuery {
    pub fn new(template: impl Into<String>, options: Vec<String>) -> Result<Self, GatewayError> {
        let template = template.into();
        if template.matches(MASK).count() != 1 {
            return Err(GatewayError::InvalidRequest(format!(
                "template must contain exactly one {MASK}"
            )));
        }
        if options.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "fill query needs at least one option".into(),
            ));
        }
        if options.iter().collect::<BTreeSet<_>>().len() != options.len() {
            return Err(GatewayError::InvalidRequest("fill options must be distinct".into()));
        }
        Ok(Self { template, options })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn options(&self) -> &[String] {
        &self.options
    }

    /// Text before and after the blank.
    pub fn sides(&self) -> (&str, &str) {
        self.template.split_once(MASK).expect("validated on construction")
    }
}

/// Backend selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendKind {
    HttpService {
        base_url: String,
        timeout_ms: u64,
        retries: u32,
    },
    Stub {
        seed: u64,
    },
}

impl BackendKind {
    pub fn connect(&self) -> Result<Box<dyn ModelGateway>, GatewayError> {
        match self {
            Self::Stub { seed } => Ok(Box::new(StubGateway::new(*seed))),
            Self::HttpService {
                base_url,
                timeout_ms,
                retries,
            } => {
                if *timeout_ms == 0 {
                    return Err(GatewayError::InvalidRequest("timeout must be positive".into()));
                }
                Ok(Box::new(HttpGateway::new(HttpConfig {
                    base_url: base_url.clone(),
                    timeout_ms: *timeout_ms,
                    retries: *retries,
                    ..HttpConfig::default()
                })))
            }
        }
    }
}

/// The three model capabilities used by the pipeline.
pub trait ModelGateway: Send + Sync {
    /// Up to `n` distinct rewrites of `text`, never `text` itself. May be empty.
    fn paraphrase(&self, text: &str, n: usize) -> Result<Vec<String>, GatewayError>;

    /// Non-overlapping entity mentions sorted by start offset.
    fn recognize_entities(&self, text: &str) -> Result<Vec<EntityMention>, GatewayError>;

    /// Every option exactly once, best first; ties ordered lexicographically.
    fn score_fill(&self, query: &FillQuery) -> Result<Vec<(String, f64)>, GatewayError>;
}

pub(crate) fn check_paraphrase_request(text: &str, n: usize) -> Result<(), GatewayError> {
    if n == 0 {
        return Err(GatewayError::InvalidRequest("paraphrase count must be positive".into()));
    }
    if text.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("paraphrase input is empty".into()));
    }
    Ok(())
}

/// Dedupes, drops the input itself and caps at `n`.
pub(crate) fn tidy_paraphrases(text: &str, candidates: Vec<String>, n: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    candidates
        .into_iter()
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty() && c != text.trim() && seen.insert(c.clone()))
        .take(n)
        .collect()
}

/// Checks span invariants for mentions over `text`.
pub fn validate_mentions(text: &str, mentions: &[EntityMention]) -> Result<(), GatewayError> {
    let len = text.chars().count();
    let mut last_end = 0;
    for (i, m) in mentions.iter().enumerate() {
        if m.start >= m.end || m.end > len {
            return Err(GatewayError::MalformedResponse(format!(
                "span {}..{} out of range",
                m.start, m.end
            )));
        }
        if i > 0 && m.start < last_end {
            return Err(GatewayError::MalformedResponse(format!(
                "span {}..{} overlaps or is out of order",
                m.start, m.end
            )));
        }
        let (s, e) = m.byte_range(text).expect("checked above");
        if text[s..e] != m.surface {
            return Err(GatewayError::MalformedResponse(format!(
                "span {}..{} reads {:?}, not {:?}",
                m.start,
                m.end,
                &text[s..e],
                m.surface
            )));
        }
        last_end = m.end;
    }
    Ok(())
}

/// Checks option completeness and puts the ranking in canonical order.
pub fn canonical_ranking(query: &FillQuery, ranked: Vec<(String, f64)>) -> Result<Vec<(String, f64)>, GatewayError> {
    let want: BTreeSet<&str> = query.options().iter().map(String::as_str).collect();
    let got: BTreeSet<&str> = ranked.iter().map(|(o, _)| o.as_str()).collect();
    if ranked.len() != want.len() || got != want {
        return Err(GatewayError::MalformedResponse(
            "fill ranking must list each option exactly once".into(),
        ));
    }
    if let Some((o, s)) = ranked.iter().find(|(_, s)| !s.is_finite()) {
        return Err(GatewayError::MalformedResponse(format!(
            "non-finite score {s} for {o:?}"
        )));
    }
    let mut ranked = ranked;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}
