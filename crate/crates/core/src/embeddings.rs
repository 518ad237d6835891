//! GloVe-format word vectors with exact cosine nearest-neighbor search.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::EmbeddingError;

/// Row-normalized embedding matrix.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: HashMap<String, usize>,
    tokens: Vec<String>,
    matrix: Vec<f64>,
    duplicates: usize,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm >= 1e-12 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

impl EmbeddingTable {
    /// Builds a table from in-memory rows. First occurrence of a token wins.
    pub fn from_rows<I>(rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = Self::default();
        for (line, (token, values)) in rows.into_iter().enumerate() {
            table.push(line + 1, token, values)?;
        }
        Ok(table)
    }

    fn push(&mut self, line: usize, token: String, mut values: Vec<f64>) -> Result<(), EmbeddingError> {
        if self.tokens.is_empty() && self.dim == 0 {
            self.dim = values.len();
        }
        if values.len() != self.dim || values.is_empty() {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: self.dim,
                found: values.len(),
            });
        }
        if normalize(&mut values) < 1e-12 {
            return Err(EmbeddingError::ZeroVector { line, token });
        }
        if self.vocab.contains_key(&token) {
            self.duplicates += 1;
            return Ok(());
        }
        self.vocab.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.matrix.extend(values);
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut table = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| EmbeddingError::Io {
                path: "<stream>".into(),
                source,
            })?;
            let lineno = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| EmbeddingError::BadValue {
                        line: lineno,
                        value: f.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push(lineno, token.to_string(), values)?;
        }
        if table.duplicates > 0 {
            log::warn!("{} duplicate embedding rows ignored", table.duplicates);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of rows skipped because their token was already loaded.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    /// The unit-length row for `token`.
    pub fn row(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|&i| self.row_at(i))
    }

    fn row_at(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let ra = self.row(a).ok_or_else(|| EmbeddingError::UnknownToken(a.into()))?;
        let rb = self.row(b).ok_or_else(|| EmbeddingError::UnknownToken(b.into()))?;
        Ok(dot(ra, rb).clamp(-1.0, 1.0))
    }

    /// Looks a token up as stored, then lowercased.
    fn resolve<'a>(&'a self, token: &'a str) -> Option<(&'a str, &'a [f64])> {
        if let Some(r) = self.row(token) {
            return Some((token, r));
        }
        let lower = token.to_lowercase();
        self.vocab
            .get_key_value(lower.as_str())
            .map(|(k, &i)| (k.as_str(), self.row_at(i)))
    }

    /// The `k` tokens most similar to `token`, excluding the token itself.
    ///
    /// Sorted by cosine descending, ties by token. Unknown tokens yield an empty list.
    pub fn nearest_neighbors(&self, token: &str, k: usize) -> Vec<(String, f64)> {
        match self.resolve(token) {
            Some((key, row)) => self.rank(row, &[key], k),
            None => Vec::new(),
        }
    }

    /// Neighbors of a possibly multi-word surface: the mean of the in-vocabulary
    /// word vectors (lowercased), renormalized. Constituent words are excluded.
    pub fn nearest_to_phrase(&self, phrase: &str, k: usize) -> Vec<(String, f64)> {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        if words.len() <= 1 {
            return self.nearest_neighbors(phrase.trim(), k);
        }
        let mut acc = vec![0.0; self.dim];
        let mut hits = Vec::new();
        for w in &words {
            if let Some((key, row)) = self.resolve(w) {
                acc.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                hits.push(key);
            }
        }
        if hits.is_empty() || normalize(&mut acc) < 1e-12 {
            return Vec::new();
        }
        self.rank(&acc, &hits, k)
    }

    fn rank(&self, query: &[f64], exclude: &[&str], k: usize) -> Vec<(String, f64)> {
        let mut scored: Vec<(&str, f64)> = self
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !exclude.contains(&t.as_str()))
            .map(|(i, t)| (t.as_str(), dot(query, self.row_at(i)).clamp(-1.0, 1.0)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(k);
        scored.into_iter().map(|(t, c)| (t.to_string(), c)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loads a GloVe text file: `token v1 v2 ... vd` per line, no header.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EmbeddingTable::read(BufReader::new(file))
}
