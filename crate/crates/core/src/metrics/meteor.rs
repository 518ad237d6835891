//! METEOR with exact and stem matching.
//!
//! Exact matches are a subset of stem matches, so "match" is the relation
//! `stem(a) == stem(b)`. The alignment maximizes the number of matches and,
//! among maximum alignments, minimizes the number of chunks. The search is
//! exact (memoized depth-first over candidate positions).

use std::collections::HashMap;

use super::stem::stem;
use crate::error::MetricError;

pub const METEOR_ALPHA: f64 = 0.9;
pub const METEOR_GAMMA: f64 = 0.5;
pub const METEOR_BETA: f64 = 3.0;

/// Result of the optimal alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
}

pub fn meteor<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Result<f64, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput("METEOR"));
    }
    let a = align(candidate, reference);
    Ok(meteor_from_alignment(a, candidate.len(), reference.len()))
}

pub fn meteor_from_alignment(a: Alignment, cand_len: usize, ref_len: usize) -> f64 {
    if a.matches == 0 {
        return 0.0;
    }
    let m = a.matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let fmean = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let penalty = METEOR_GAMMA * (a.chunks as f64 / m).powf(METEOR_BETA);
    fmean * (1.0 - penalty)
}

struct Search<'a> {
    cand: &'a [usize],
    refs: &'a [usize],
    /// ref positions grouped by class
    ref_positions: Vec<Vec<usize>>,
    /// allowed unmatched candidate tokens per class
    slack: Vec<usize>,
    memo: HashMap<(usize, usize, Vec<u64>), usize>,
}

const NONE: usize = usize::MAX;

impl Search<'_> {
    /// Minimum chunks for candidate[i..] given the ref position matched at i-1 and used refs.
    fn solve(&mut self, i: usize, prev: usize, used: &mut Vec<u64>, skipped: &mut [usize]) -> usize {
        if i == self.cand.len() {
            return 0;
        }
        let key = (i, prev, used.clone());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let class = self.cand[i];
        let mut best = usize::MAX;
        if skipped[class] < self.slack[class] {
            skipped[class] += 1;
            best = self.solve(i + 1, NONE, used, skipped);
            skipped[class] -= 1;
        }
        for idx in 0..self.ref_positions[class].len() {
            let j = self.ref_positions[class][idx];
            let (w, bit) = (j / 64, 1u64 << (j % 64));
            if used[w] & bit != 0 {
                continue;
            }
            let cost = usize::from(!(prev != NONE && prev + 1 == j));
            used[w] |= bit;
            let sub = self.solve(i + 1, j, used, skipped);
            used[w] &= !bit;
            if sub != usize::MAX {
                best = best.min(sub + cost);
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Maximum-match, minimum-chunk alignment between two token sequences.
pub fn align<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Alignment {
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut class_of = |t: &str| {
        let next = classes.len();
        *classes.entry(stem(t)).or_insert(next)
    };
    let cand: Vec<usize> = candidate.iter().map(|t| class_of(t.as_ref())).collect();
    let refs: Vec<usize> = reference.iter().map(|t| class_of(t.as_ref())).collect();
    let k = classes.len();
    let mut ref_positions = vec![Vec::new(); k];
    for (j, &c) in refs.iter().enumerate() {
        ref_positions[c].push(j);
    }
    let mut cand_counts = vec![0usize; k];
    for &c in &cand {
        cand_counts[c] += 1;
    }
    let matches: usize = (0..k).map(|c| cand_counts[c].min(ref_positions[c].len())).sum();
    if matches == 0 {
        return Alignment { matches: 0, chunks: 0 };
    }
    let slack = (0..k)
        .map(|c| cand_counts[c] - cand_counts[c].min(ref_positions[c].len()))
        .collect();
    let mut search = Search {
        cand: &cand,
        refs: &refs,
        ref_positions,
        slack,
        memo: HashMap::new(),
    };
    let mut used = vec![0u64; search.refs.len().div_ceil(64)];
    let mut skipped = vec![0usize; k];
    let chunks = search.solve(0, NONE, &mut used, &mut skipped);
    Alignment { matches, chunks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_score() {
        let a = toks("a b c d e");
        let expected = 1.0 - 0.5 * (1.0f64 / 5.0).powi(3);
        assert!((meteor(&a, &a).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(meteor(&toks("a b"), &toks("c d")).unwrap(), 0.0);
    }

    #[test]
    fn hand_example() {
        let a = align(&toks("the cat sat"), &toks("the cat ran"));
        assert_eq!(a, Alignment { matches: 2, chunks: 1 });
        let p: f64 = 2.0 / 3.0;
        let f = p * p / (0.9 * p + 0.1 * p);
        let expected = f * (1.0 - 0.5 * (0.5f64).powi(3));
        assert!((meteor(&toks("the cat sat"), &toks("the cat ran")).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn stem_matches_count() {
        let a = align(&toks("they argued loudly"), &toks("they are arguing loud"));
        assert_eq!(a.matches, 3);
    }

    #[test]
    fn picks_alignment_with_fewest_chunks() {
        // greedy left-to-right would pair the first "a" with ref position 0
        let a = align(&toks("x a b"), &toks("a y a b"));
        assert_eq!(a, Alignment { matches: 2, chunks: 1 });
    }
}
