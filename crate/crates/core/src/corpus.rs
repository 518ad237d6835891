//! JSONL question records.
//!
//! One JSON object per line with keys `id`, `question`, `choices`,
//! `answer_index`, `domain` and an optional `qtype`. Unknown keys are
//! ignored so richer upstream schemas load unchanged.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;
use crate::model::{MultipleChoiceQuestion, QuestionType};

#[derive(Deserialize)]
struct RecordIn {
    id: String,
    question: String,
    choices: Vec<String>,
    answer_index: i64,
    domain: String,
    #[serde(default)]
    qtype: Option<QuestionType>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    question: &'a str,
    choices: &'a [String],
    answer_index: usize,
    domain: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    qtype: Option<QuestionType>,
}

pub fn parse_question_record(line: &str) -> Result<MultipleChoiceQuestion, CorpusError> {
    let malformed = |reason: String| CorpusError::MalformedRecord { line: None, reason };
    let rec: RecordIn = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let correct_index = usize::try_from(rec.answer_index)
        .map_err(|_| malformed(format!("negative answer_index {}", rec.answer_index)))?;
    let q = MultipleChoiceQuestion {
        id: rec.id,
        stem: rec.question,
        choices: rec.choices,
        correct_index,
        domain: rec.domain,
        qtype: rec.qtype,
    };
    q.validate().map_err(malformed)?;
    Ok(q)
}

pub fn serialize_question_record(q: &MultipleChoiceQuestion) -> String {
    let rec = RecordOut {
        id: &q.id,
        question: &q.stem,
        choices: &q.choices,
        answer_index: q.correct_index,
        domain: &q.domain,
        qtype: q.qtype,
    };
    serde_json::to_string(&rec).expect("record serialization cannot fail")
}

/// Reads a JSONL corpus; blank lines are skipped, errors carry 1-based line numbers.
pub fn load_corpus(path: &Path) -> Result<Vec<MultipleChoiceQuestion>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(source),
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<MultipleChoiceQuestion>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<stream>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let q = parse_question_record(&line).map_err(|e| match e {
            CorpusError::MalformedRecord { reason, .. } => CorpusError::MalformedRecord {
                line: Some(idx + 1),
                reason,
            },
            other => other,
        })?;
        out.push(q);
    }
    Ok(out)
}
