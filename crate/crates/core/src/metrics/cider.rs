//! Corpus-level CIDEr.
//!
//! Document frequency counts, per n-gram, how many pairs contain it in their
//! reference set; idf = ln(N / max(1, df)). Each order contributes the mean
//! over references of a clipped cosine: the numerator uses
//! `min(candidate, reference)` weights, the norms use the unclipped vectors.
//! Ordered maps keep the floating-point summation order stable.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::MetricError;

pub const CIDER_MAX_ORDER: usize = 4;

type Gram = Vec<String>;

fn grams<S: AsRef<str>>(tokens: &[S], n: usize) -> BTreeMap<Gram, f64> {
    let mut out = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let g: Gram = w.iter().map(|t| t.as_ref().to_string()).collect();
            *out.entry(g).or_insert(0.0) += 1.0;
        }
    }
    out
}

/// Read-only document-frequency table built once per corpus.
pub struct CiderIndex {
    df: [BTreeMap<Gram, usize>; CIDER_MAX_ORDER],
    corpus_size: usize,
}

impl CiderIndex {
    pub fn build<S: AsRef<str>, R: AsRef<[S]>>(reference_sets: &[&[R]]) -> Self {
        let mut df: [BTreeMap<Gram, usize>; CIDER_MAX_ORDER] = Default::default();
        for refs in reference_sets {
            for (n, table) in df.iter_mut().enumerate() {
                let seen: BTreeSet<Gram> = refs.iter().flat_map(|r| grams(r.as_ref(), n + 1).into_keys()).collect();
                for g in seen {
                    *table.entry(g).or_insert(0) += 1;
                }
            }
        }
        Self {
            df,
            corpus_size: reference_sets.len(),
        }
    }

    pub fn idf(&self, n: usize, gram: &Gram) -> f64 {
        let df = self.df[n - 1].get(gram).copied().unwrap_or(0).max(1);
        (self.corpus_size as f64 / df as f64).ln()
    }

    fn weighted<S: AsRef<str>>(&self, tokens: &[S], n: usize) -> BTreeMap<Gram, f64> {
        let mut v = grams(tokens, n);
        for (g, w) in v.iter_mut() {
            *w *= self.idf(n, g);
        }
        v
    }

    /// CIDEr for one candidate against its reference set.
    pub fn score<S: AsRef<str>, R: AsRef<[S]>>(&self, candidate: &[S], references: &[R]) -> f64 {
        let mut total = 0.0;
        for n in 1..=CIDER_MAX_ORDER {
            let vc = self.weighted(candidate, n);
            let norm_c = vc.values().map(|x| x * x).sum::<f64>().sqrt();
            let mut sum = 0.0;
            for r in references {
                let vr = self.weighted(r.as_ref(), n);
                let norm_r = vr.values().map(|x| x * x).sum::<f64>().sqrt();
                if norm_c == 0.0 || norm_r == 0.0 {
                    continue;
                }
                let dot: f64 = vc.iter().filter_map(|(g, &c)| vr.get(g).map(|&r| c.min(r) * r)).sum();
                sum += dot / (norm_c * norm_r);
            }
            total += sum / references.len() as f64;
        }
        total / CIDER_MAX_ORDER as f64
    }
}

/// Mean CIDEr over `(candidate, references)` pairs; unscaled.
pub fn cider<S: AsRef<str>, R: AsRef<[S]>>(pairs: &[(Vec<S>, Vec<R>)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("CIDEr corpus"));
    }
    for (cand, refs) in pairs {
        if cand.is_empty() || refs.is_empty() || refs.iter().any(|r| r.as_ref().is_empty()) {
            return Err(MetricError::EmptyInput("CIDEr pair"));
        }
    }
    let sets: Vec<&[R]> = pairs.iter().map(|(_, r)| r.as_slice()).collect();
    let index = CiderIndex::build(&sets);
    let sum: f64 = pairs.iter().map(|(c, r)| index.score(c, r)).sum();
    Ok(sum / pairs.len() as f64)
}
