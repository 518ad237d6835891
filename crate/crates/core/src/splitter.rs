//! Context/task splitting.
//!
//! A stem is segmented into sentences with a small rule set, then the last
//! sentence opening with a WH-word becomes the task and everything else is
//! context.

use serde::{Deserialize, Serialize};

use crate::error::SplitError;
use crate::model::PipelineConfig;
use crate::text::normalize_ws;

/// A stem separated into its context sentences and a single task sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitQuestion {
    pub context: Vec<String>,
    pub task: String,
    pub task_index: usize,
}

impl SplitQuestion {
    /// Context sentences preceding the task, joined by single spaces.
    pub fn leading_context(&self) -> String {
        self.context[..self.task_index].join(" ")
    }

    /// Context sentences following the task (usually none).
    pub fn trailing_context(&self) -> String {
        self.context[self.task_index..].join(" ")
    }

    pub fn context_text(&self) -> String {
        self.context.join(" ")
    }

    /// Rebuilds the stem with single spaces between sentences.
    pub fn reconstruct(&self) -> String {
        assemble(&self.leading_context(), &self.task, &self.trailing_context())
    }
}

/// Joins leading context, task and trailing context, skipping empty parts.
pub fn assemble(leading: &str, task: &str, trailing: &str) -> String {
    [leading, task, trailing]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

const WH_STARTERS: [&str; 7] = ["who", "what", "when", "where", "why", "how", "which"];

const ABBREVIATIONS: [&str; 14] = [
    "e.g", "i.e", "vs", "mr", "mrs", "ms", "dr", "prof", "st", "no", "fig", "approx", "cf", "al",
];

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}' | '(' | '[')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}')
}

/// Lowercased alphabetic prefix of the first word in `s`, after leading quotes/brackets.
fn first_word(s: &str) -> String {
    s.trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect()
}

/// The whitespace-delimited word ending just before byte `end`, without its final period.
fn word_before(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(|c: char| c.is_whitespace() || c == '(')
        .map_or(0, |i| i + 1);
    &text[start..end]
}

fn is_abbreviation(word: &str) -> bool {
    let w = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    if w.chars().count() == 1 && w.chars().all(char::is_uppercase) {
        return true;
    }
    // dotted initialisms such as "s.d" or "u.s"
    if w.contains('.') && w.split('.').all(|seg| seg.chars().count() == 1) {
        return true;
    }
    ABBREVIATIONS.contains(&w.to_lowercase().as_str())
}

/// Rule-based sentence segmentation.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '.' | '?' | '!' if depth == 0 => {
                let mut j = i + 1;
                while j < chars.len() && (matches!(chars[j].1, '.' | '?' | '!') || is_closing(chars[j].1)) {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
                if j < chars.len() && chars[j].1.is_whitespace() {
                    let mut k = j;
                    while k < chars.len() && chars[k].1.is_whitespace() {
                        k += 1;
                    }
                    if k < chars.len() {
                        let next = chars[k].1;
                        let starts_sentence = next.is_uppercase() || is_opening_quote(next);
                        let wh_next = WH_STARTERS.contains(&first_word(&text[chars[k].0..]).as_str());
                        let guarded = c == '.' && j == i + 1 && is_abbreviation(word_before(text, pos));
                        if starts_sentence && (!guarded || wh_next) {
                            let sent = text[start..end].trim();
                            if !sent.is_empty() {
                                out.push(sent.to_string());
                            }
                            start = chars[k].0;
                            i = k;
                            continue;
                        }
                    }
                }
                i = j;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn starts_with_wh(sentence: &str, cfg: &PipelineConfig) -> bool {
    cfg.wh_words.contains(&first_word(sentence))
}

/// Byte offset of the last ", <wh-word>" clause boundary in `sentence`, pointing at the WH-word.
fn wh_clause_start(sentence: &str, cfg: &PipelineConfig) -> Option<usize> {
    let mut found = None;
    for (i, c) in sentence.char_indices() {
        if c != ',' && c != ';' {
            continue;
        }
        let after = &sentence[i + 1..];
        let trimmed = after.trim_start();
        if trimmed.len() == after.len() || trimmed.is_empty() {
            continue;
        }
        if cfg.wh_words.contains(&first_word(trimmed)) && trimmed.starts_with(|c: char| c.is_alphabetic()) {
            found = Some(sentence.len() - trimmed.len());
        }
    }
    found
}

/// Splits a stem into context and task.
///
/// The task is the last sentence opening with a configured WH-word. Failing
/// that, a final question whose interrogative clause follows a comma
/// (`"Given X, what is Y?"`) is split at that clause; otherwise the last
/// sentence ending in `?` is the task.
pub fn split_context_task(stem: &str, cfg: &PipelineConfig) -> Result<SplitQuestion, SplitError> {
    let sentences = segment_sentences(stem);
    let build = |sentences: Vec<String>, task_idx: usize| {
        let mut context = sentences;
        let task = context.remove(task_idx);
        SplitQuestion {
            context,
            task,
            task_index: task_idx,
        }
    };
    if let Some(idx) = sentences.iter().rposition(|s| starts_with_wh(s, cfg)) {
        return Ok(build(sentences, idx));
    }
    let idx = sentences
        .iter()
        .rposition(|s| s.trim_end_matches(is_closing).ends_with('?'))
        .ok_or(SplitError::NoTaskFound)?;
    if let Some(cut) = wh_clause_start(&sentences[idx], cfg) {
        let sentence = &sentences[idx];
        let head = sentence[..cut].trim_end().to_string();
        let tail = sentence[cut..].to_string();
        let mut parts = sentences.clone();
        parts.splice(idx..=idx, [head, tail]);
        return Ok(build(parts, idx + 1));
    }
    Ok(build(sentences, idx))
}

/// Whitespace-insensitive equality used by the reconstruction property.
pub fn same_modulo_ws(a: &str, b: &str) -> bool {
    normalize_ws(a) == normalize_ws(b)
}
