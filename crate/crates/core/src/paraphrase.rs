//! Context paraphrasing with a BLEU-4 acceptance band.

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::gateway::ModelGateway;
use crate::metrics::bleu4;
use crate::model::PipelineConfig;
use crate::splitter::{segment_sentences, SplitQuestion};
use crate::text::{normalize_ws, tokenize_separating};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    TooDifferent,
    TooSimilar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseCandidate {
    pub text: String,
    pub bleu4_vs_original: f64,
    pub verdict: Verdict,
}

/// Classifies a score against the inclusive band `[bleu_min, bleu_max]`.
pub fn verdict_for(score: f64, cfg: &PipelineConfig) -> Verdict {
    if score < cfg.bleu_min {
        Verdict::TooDifferent
    } else if score > cfg.bleu_max {
        Verdict::TooSimilar
    } else {
        Verdict::Accepted
    }
}

/// Sentence BLEU-4 of `candidate` against `original` under the metric tokenizer.
pub fn context_bleu(candidate: &str, original: &str) -> f64 {
    let cand = tokenize_separating(candidate);
    let orig = tokenize_separating(original);
    bleu4(&cand, &[orig]).unwrap_or(0.0)
}

/// Scores and labels every candidate. Accepted ones come first, best score
/// first; rejected ones follow in input order.
pub fn gate_by_bleu(original_context: &str, candidates: &[String], cfg: &PipelineConfig) -> Vec<ParaphraseCandidate> {
    let mut scored: Vec<ParaphraseCandidate> = candidates
        .iter()
        .map(|c| {
            let score = context_bleu(c, original_context);
            ParaphraseCandidate {
                text: c.clone(),
                bleu4_vs_original: score,
                verdict: verdict_for(score, cfg),
            }
        })
        .collect();
    scored.sort_by(|a, b| match (a.verdict, b.verdict) {
        (Verdict::Accepted, Verdict::Accepted) => b.bleu4_vs_original.total_cmp(&a.bleu4_vs_original),
        (Verdict::Accepted, _) => std::cmp::Ordering::Less,
        (_, Verdict::Accepted) => std::cmp::Ordering::Greater,
        _ => std::cmp::Ordering::Equal,
    });
    scored
}

const PUNCT: [char; 6] = ['.', ',', '?', '!', ';', ':'];

fn clean_once(text: &str) -> String {
    let collapsed = normalize_ws(text);

    // drop spaces before punctuation, then squeeze punctuation runs to their first mark
    let chars: Vec<char> = collapsed.chars().collect();
    let mut squeezed: Vec<char> = Vec::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' && chars.get(i + 1).is_some_and(|n| PUNCT.contains(n)) {
            continue;
        }
        if PUNCT.contains(&c) && squeezed.last().is_some_and(|p| PUNCT.contains(p)) {
            continue;
        }
        squeezed.push(c);
    }

    // exactly one space after punctuation that precedes a word
    let mut spaced = String::with_capacity(squeezed.len() + 8);
    for (i, &c) in squeezed.iter().enumerate() {
        spaced.push(c);
        if !PUNCT.contains(&c) {
            continue;
        }
        let Some(&next) = squeezed.get(i + 1) else { continue };
        let prev = i.checked_sub(1).map(|p| squeezed[p]);
        let in_number = prev.is_some_and(|p| p.is_ascii_digit()) && next.is_ascii_digit();
        let dotted_word = c == '.' && next.is_lowercase();
        if (next.is_alphanumeric() || matches!(next, '"' | '(' | '\u{201c}')) && !in_number && !dotted_word {
            spaced.push(' ');
        }
    }

    let mut sentences = segment_sentences(&spaced);
    sentences.dedup();
    let joined = sentences.join(" ");

    let mut out = joined
        .trim_start_matches(|c: char| PUNCT.contains(&c) || c == '-' || c.is_whitespace())
        .to_string();
    if let Some(last) = out.chars().last() {
        if matches!(last, ',' | ';' | ':') {
            out.pop();
            out.push('.');
        } else if !matches!(last, '.' | '?' | '!' | '"' | '\'' | '\u{201d}') {
            out.push('.');
        }
    }
    out
}

/// Removes generation artifacts: stray whitespace, spacing around
/// punctuation, repeated punctuation, repeated sentences, leading
/// punctuation, and a missing final period. Idempotent.
pub fn clean_artifacts(text: &str) -> String {
    let mut cur = clean_once(text);
    for _ in 0..8 {
        let next = clean_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// All scored candidates for one question's context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextParaphrases {
    pub candidates: Vec<ParaphraseCandidate>,
}

impl ContextParaphrases {
    pub fn accepted(&self) -> impl Iterator<Item = &ParaphraseCandidate> {
        self.candidates.iter().filter(|c| c.verdict == Verdict::Accepted)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.candidates.iter().filter(|c| c.verdict == verdict).count()
    }
}

/// Paraphrases the context preceding the task; the task itself is never sent.
///
/// Candidates are cleaned before gating. A context that ends in a comma
/// (a clause split off the task) keeps its comma after cleaning.
pub fn paraphrase_context(
    split: &SplitQuestion,
    gateway: &dyn ModelGateway,
    cfg: &PipelineConfig,
) -> Result<ContextParaphrases, GatewayError> {
    let original = split.leading_context();
    if original.trim().is_empty() {
        return Ok(ContextParaphrases::default());
    }
    let clause = original.ends_with(',');
    let raw = gateway.paraphrase(&original, cfg.max_paraphrase_candidates)?;
    let mut cleaned: Vec<String> = Vec::new();
    for c in raw {
        let mut text = clean_artifacts(&c);
        if clause && text.ends_with(['.', '?', '!']) {
            text.pop();
            text.push(',');
        }
        if !text.is_empty() && text != original && !cleaned.contains(&text) {
            cleaned.push(text);
        }
    }
    Ok(ContextParaphrases {
        candidates: gate_by_bleu(&original, &cleaned, cfg),
    })
}
