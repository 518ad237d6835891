#![allow(dead_code)]

pub mod oracle;
pub mod server;

use std::path::PathBuf;

use agentzero_core::corpus::load_corpus;
use agentzero_core::embeddings::{load_embeddings, EmbeddingTable};
use agentzero_core::model::{MultipleChoiceQuestion, QuestionType};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn corpus() -> Vec<MultipleChoiceQuestion> {
    load_corpus(&data_path("corpus.jsonl")).expect("bundled corpus loads")
}

pub fn embeddings() -> EmbeddingTable {
    load_embeddings(&data_path("embeddings.txt")).expect("bundled embeddings load")
}

pub fn question(id: &str, stem: &str, choices: &[&str], qtype: Option<QuestionType>) -> MultipleChoiceQuestion {
    MultipleChoiceQuestion {
        id: id.into(),
        stem: stem.into(),
        choices: choices.iter().map(|c| c.to_string()).collect(),
        correct_index: 0,
        domain: "test".into(),
        qtype,
    }
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Full scan over raw (unnormalized) rows with cosine computed from scratch.
pub fn knn_brute_force(path: &std::path::Path, query: &str, k: usize) -> Vec<(String, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let rows: Vec<(String, Vec<f64>)> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace();
            let t = it.next().unwrap().to_string();
            (t, it.map(|x| x.parse().unwrap()).collect())
        })
        .collect();
    let q = rows
        .iter()
        .find(|(t, _)| t == query)
        .or_else(|| rows.iter().find(|(t, _)| *t == query.to_lowercase()))
        .map(|(t, v)| (t.clone(), v.clone()));
    let Some((qt, qv)) = q else { return Vec::new() };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scored: Vec<(String, f64)> = rows
        .iter()
        .filter(|(t, _)| *t != qt)
        .map(|(t, v)| {
            let dot: f64 = v.iter().zip(&qv).map(|(a, b)| a * b).sum();
            (t.clone(), dot / (norm(v) * norm(&qv)))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}
