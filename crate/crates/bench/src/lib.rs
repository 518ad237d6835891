//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use agentzero_core::corpus::load_corpus;
use agentzero_core::embeddings::{load_embeddings, EmbeddingTable};
use agentzero_core::model::MultipleChoiceQuestion;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn corpus() -> Vec<MultipleChoiceQuestion> {
    load_corpus(&data_path("corpus.jsonl")).expect("bundled corpus loads")
}

pub fn embeddings() -> EmbeddingTable {
    load_embeddings(&data_path("embeddings.txt")).expect("bundled embeddings load")
}

/// (generated, original) pairs from the bundled evaluation file.
pub fn pairs() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(data_path("pairs.jsonl")).expect("bundled pairs load");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).expect("pair is JSON");
            (
                v["generated"].as_str().unwrap().to_string(),
                v["original"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}
