//! Machine-translation metrics: BLEU-4, METEOR, ROUGE-L and CIDEr.
//!
//! For question rewriting, lower scores against the source mean a more
//! different surface form; [`MetricReport`] keeps the raw values and leaves
//! interpretation to the caller.

mod bleu;
mod cider;
mod meteor;
mod rouge;
mod stem;

pub use bleu::{bleu4, bleu_stats, corpus_bleu4, BleuStats, EPSILON as BLEU_EPSILON, MAX_ORDER as BLEU_MAX_ORDER};
pub use cider::{cider, CiderIndex, CIDER_MAX_ORDER};
pub use meteor::{
    align as meteor_alignment, meteor, meteor_from_alignment, Alignment, METEOR_ALPHA, METEOR_BETA, METEOR_GAMMA,
};
pub use rouge::{lcs_len, rouge_l, ROUGE_BETA};
pub use stem::stem;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::text::tokenize_separating;

/// Corpus scores for (generated, original) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub n: usize,
}

/// Presentation form: BLEU, METEOR and ROUGE-L ×100, CIDEr ×10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledReport {
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub n: usize,
    pub lower_is_better: bool,
}

impl MetricReport {
    /// Lower scores mean the rewrite departs further from the original wording.
    pub const LOWER_IS_BETTER: bool = true;

    pub fn scaled(&self) -> ScaledReport {
        ScaledReport {
            bleu4: self.bleu4 * 100.0,
            meteor: self.meteor * 100.0,
            rouge_l: self.rouge_l * 100.0,
            cider: self.cider * 10.0,
            n: self.n,
            lower_is_better: Self::LOWER_IS_BETTER,
        }
    }
}

/// Scores every (generated, original) pair with the original as sole reference.
pub fn corpus_report<A: AsRef<str> + Sync, B: AsRef<str> + Sync>(
    pairs: &[(A, B)],
) -> Result<MetricReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput("no pairs to score"));
    }
    let tokenized: Vec<(Vec<String>, Vec<Vec<String>>)> = pairs
        .iter()
        .map(|(g, o)| (tokenize_separating(g.as_ref()), vec![tokenize_separating(o.as_ref())]))
        .collect();
    let bleu = corpus_bleu4(&tokenized)?;
    let per_pair: Vec<(f64, f64)> = tokenized
        .par_iter()
        .map(|(cand, refs)| Ok((meteor(cand, &refs[0])?, rouge_l(cand, &refs[0])?)))
        .collect::<Result<_, MetricError>>()?;
    let n = pairs.len();
    let meteor_mean = per_pair.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let rouge_mean = per_pair.iter().map(|p| p.1).sum::<f64>() / n as f64;
    Ok(MetricReport {
        bleu4: bleu,
        meteor: meteor_mean,
        rouge_l: rouge_mean,
        cider: cider(&tokenized)?,
        n,
    })
}
