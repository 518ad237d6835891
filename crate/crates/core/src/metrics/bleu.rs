use std::collections::HashMap;

use crate::error::MetricError;

pub const MAX_ORDER: usize = 4;

/// Precision floor substituted for orders with no matched n-grams.
pub const EPSILON: f64 = 1e-9;

/// Clipped n-gram statistics; pooled over sentences for corpus BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Geometric mean of the modified precisions times the brevity penalty.
    ///
    /// Orders for which the candidate has no n-grams at all (candidates
    /// shorter than four tokens) are left out of the mean; an order with
    /// n-grams but no matches contributes [`EPSILON`].
    pub fn score(&self) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                continue;
            }
            let p = if self.matches[n] == 0 {
                EPSILON
            } else {
                self.matches[n] as f64 / self.totals[n] as f64
            };
            log_sum += p.ln();
            orders += 1;
        }
        let c = self.candidate_len as f64;
        let r = self.reference_len as f64;
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        bp * (log_sum / orders as f64).exp()
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Collects clipped counts for one candidate against its references.
pub fn bleu_stats<S: AsRef<str>, R: AsRef<[S]>>(candidate: &[S], references: &[R]) -> Result<BleuStats, MetricError> {
    let cand: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let refs: Vec<Vec<&str>> = references
        .iter()
        .map(|r| r.as_ref().iter().map(AsRef::as_ref).collect())
        .filter(|r: &Vec<&str>| !r.is_empty())
        .collect();
    if cand.is_empty() {
        return Err(MetricError::EmptyInput("BLEU candidate"));
    }
    if refs.is_empty() {
        return Err(MetricError::EmptyInput("BLEU references"));
    }
    let mut stats = BleuStats {
        candidate_len: cand.len() as u64,
        ..BleuStats::default()
    };
    // closest reference length, ties to the shorter one
    stats.reference_len = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(cand.len()), len))
        .unwrap_or(0) as u64;
    for n in 1..=MAX_ORDER {
        let cand_counts = ngram_counts(&cand, n);
        let mut max_ref: HashMap<&[&str], u64> = HashMap::new();
        for r in &refs {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        stats.totals[n - 1] = cand.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = cand_counts
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
    }
    Ok(stats)
}

/// Sentence-level BLEU-4 with epsilon smoothing.
pub fn bleu4<S: AsRef<str>, R: AsRef<[S]>>(candidate: &[S], references: &[R]) -> Result<f64, MetricError> {
    Ok(bleu_stats(candidate, references)?.score())
}

/// Corpus BLEU-4 from pooled n-gram counts.
pub fn corpus_bleu4<S: AsRef<str>, R: AsRef<[S]>>(pairs: &[(Vec<S>, Vec<R>)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("BLEU corpus"));
    }
    let mut pooled = BleuStats::default();
    for (cand, refs) in pairs {
        pooled.add(&bleu_stats(cand, refs)?);
    }
    Ok(pooled.score())
}
