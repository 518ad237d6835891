//! Entity replacement: candidate generation, fill-mask ranking, and
//! consistent application across context and task.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{GatewayError, ReplaceError};
use crate::gateway::{EntityMention, FillQuery, ModelGateway, MASK};
use crate::model::{EntityLabel, PipelineConfig};
use crate::splitter::{assemble, SplitQuestion};
use crate::text::{find_whole_word, is_numeric_token, match_casing};

/// Replacement options for one mention: label defaults, then up to `knn_k`
/// embedding neighbors. Cased like the surface, deduplicated
/// case-insensitively, never the surface itself, never numeric.
pub fn candidate_replacements(m: &EntityMention, table: &EmbeddingTable, cfg: &PipelineConfig) -> Vec<String> {
    let neighbors = table.nearest_to_phrase(&m.surface, cfg.knn_k);
    let raw = cfg
        .defaults_for(m.label)
        .iter()
        .cloned()
        .chain(neighbors.into_iter().map(|(t, _)| t));
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(m.surface.to_lowercase());
    let mut out = Vec::new();
    for r in raw {
        let r = r.trim();
        if r.is_empty() || is_numeric_token(r) || !r.chars().any(char::is_alphabetic) {
            continue;
        }
        let cased = match_casing(&m.surface, r);
        if seen.insert(cased.to_lowercase()) {
            out.push(cased);
        }
    }
    out
}

/// `text` with the mention's span replaced by the mask marker.
pub fn mask_mention(text: &str, m: &EntityMention) -> Option<String> {
    let (s, e) = m.byte_range(text)?;
    if text[s..e] != m.surface {
        return None;
    }
    Some(format!("{}{MASK}{}", &text[..s], &text[e..]))
}

/// Ranks `candidates` for the mention's slot in `text`, best first.
pub fn rank_candidates(
    text: &str,
    m: &EntityMention,
    candidates: &[String],
    gateway: &dyn ModelGateway,
) -> Result<Vec<String>, GatewayError> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let template = mask_mention(text, m)
        .ok_or_else(|| GatewayError::InvalidRequest(format!("mention {:?} does not match text", m.surface)))?;
    let query = FillQuery::new(template, candidates.to_vec())?;
    Ok(gateway.score_fill(&query)?.into_iter().map(|(o, _)| o).collect())
}

/// The single best candidate for a mention, if any.
pub fn select_best(
    text: &str,
    m: &EntityMention,
    candidates: &[String],
    gateway: &dyn ModelGateway,
) -> Result<Option<String>, GatewayError> {
    Ok(rank_candidates(text, m, candidates, gateway)?.into_iter().next())
}

/// One distinct replaceable surface with its ranked options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub surface: String,
    pub label: EntityLabel,
    pub ranked: Vec<String>,
}

/// Mentions found in the context plus ranked options per distinct surface.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementPlan {
    /// Mentions over `SplitQuestion::context_text`, char offsets.
    pub mentions: Vec<EntityMention>,
    /// Mentions before excluding those that also occur in an answer choice.
    pub detected: usize,
    pub slots: Vec<Slot>,
}

/// surface -> replacement
pub type Selection = BTreeMap<String, String>;

impl ReplacementPlan {
    /// Picks `combo[i]`-th option for slot `i`.
    pub fn selection(&self, combo: &[usize]) -> Selection {
        self.slots
            .iter()
            .zip(combo)
            .filter_map(|(s, &i)| s.ranked.get(i).map(|r| (s.surface.clone(), r.clone())))
            .collect()
    }

    /// Every slot's top-ranked option.
    pub fn best_selection(&self) -> Selection {
        self.selection(&vec![0; self.slots.len()])
    }

    pub fn option_counts(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.ranked.len()).collect()
    }

    /// True when no two slots receive the same replacement.
    pub fn is_distinct(&self, combo: &[usize]) -> bool {
        let mut seen = HashSet::new();
        self.slots
            .iter()
            .zip(combo)
            .all(|(s, &i)| seen.insert(s.ranked[i].to_lowercase()))
    }

    /// Up to `max` option combinations giving distinct replacements per
    /// slot. The first takes each slot's best option not already used by an
    /// earlier slot; the rest are sampled.
    pub fn combinations(&self, max: usize, seed: u64) -> Vec<Vec<usize>> {
        if max == 0 || self.slots.is_empty() {
            return Vec::new();
        }
        let mut used = HashSet::new();
        let mut greedy = Vec::with_capacity(self.slots.len());
        for s in &self.slots {
            match s.ranked.iter().position(|r| !used.contains(&r.to_lowercase())) {
                Some(i) => {
                    used.insert(s.ranked[i].to_lowercase());
                    greedy.push(i);
                }
                None => return Vec::new(),
            }
        }
        let mut out = vec![greedy];
        let pool = max.saturating_mul(4).max(16);
        for combo in sample_combinations(&self.option_counts(), pool, seed) {
            if out.len() >= max {
                break;
            }
            if self.is_distinct(&combo) && !out.contains(&combo) {
                out.push(combo);
            }
        }
        out
    }
}

fn occurs_in_choices(surface: &str, choices: &[String]) -> bool {
    let needle = surface.to_lowercase();
    choices
        .iter()
        .any(|c| !find_whole_word(&c.to_lowercase(), &needle).is_empty())
}

/// Runs NER over the context, drops mentions that also occur in an answer
/// choice, and ranks replacement options for each distinct surface.
pub fn plan_replacements(
    split: &SplitQuestion,
    choices: &[String],
    gateway: &dyn ModelGateway,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
) -> Result<ReplacementPlan, GatewayError> {
    let text = split.context_text();
    if text.trim().is_empty() {
        return Ok(ReplacementPlan::default());
    }
    let found = gateway.recognize_entities(&text)?;
    let detected = found.len();
    let mentions: Vec<EntityMention> = found
        .into_iter()
        .filter(|m| !occurs_in_choices(&m.surface, choices))
        .collect();
    let mut slots: Vec<Slot> = Vec::new();
    for m in &mentions {
        if slots.iter().any(|s| s.surface == m.surface) {
            continue;
        }
        let cands: Vec<String> = candidate_replacements(m, table, cfg)
            .into_iter()
            .filter(|c| !mentions.iter().any(|o| o.surface.eq_ignore_ascii_case(c)))
            .collect();
        let ranked = rank_candidates(&text, m, &cands, gateway)?;
        if !ranked.is_empty() {
            slots.push(Slot {
                surface: m.surface.clone(),
                label: m.label,
                ranked,
            });
        }
    }
    Ok(ReplacementPlan {
        mentions,
        detected,
        slots,
    })
}

/// Replaces whole-word occurrences of every selected surface in one pass,
/// preferring longer surfaces where matches overlap. Returns the new text and
/// the pairs that matched at least once, in selection order.
pub fn replace_surfaces(text: &str, selection: &Selection) -> (String, Vec<(String, String)>) {
    let mut spans: Vec<(usize, usize, &str, &str)> = Vec::new();
    for (from, to) in selection {
        for (s, e) in find_whole_word(text, from) {
            spans.push((s, e, from, to));
        }
    }
    spans.sort_by(|a, b| a.0.cmp(&b.0).then((b.1 - b.0).cmp(&(a.1 - a.0))));
    let mut out = String::with_capacity(text.len());
    let mut used: Vec<(String, String)> = Vec::new();
    let mut last = 0;
    for (s, e, from, to) in spans {
        if s < last {
            continue;
        }
        out.push_str(&text[last..s]);
        out.push_str(to);
        last = e;
        if !used.iter().any(|(f, _)| f == from) {
            used.push((from.to_string(), to.to_string()));
        }
    }
    out.push_str(&text[last..]);
    used.sort_by_key(|(f, _)| selection.keys().position(|k| k == f));
    (out, used)
}

/// A stem after entity replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub leading: String,
    pub task: String,
    pub trailing: String,
    pub replacements: Vec<(String, String)>,
}

impl Applied {
    pub fn stem(&self) -> String {
        assemble(&self.leading, &self.task, &self.trailing)
    }
}

/// Applies `selection` to every planned mention (right to left, so earlier
/// offsets stay valid) and to whole-word occurrences in the task.
pub fn apply_replacements(
    split: &SplitQuestion,
    plan: &ReplacementPlan,
    selection: &Selection,
) -> Result<Applied, ReplaceError> {
    let mut text = split.context_text();
    let mut boundary = split.leading_context().len();
    let mut used: Vec<(String, String)> = Vec::new();
    for m in plan.mentions.iter().rev() {
        let Some(to) = selection.get(&m.surface) else { continue };
        let stale = || ReplaceError::OffsetMismatch {
            start: m.start,
            end: m.end,
            surface: m.surface.clone(),
        };
        let (s, e) = m.byte_range(&text).ok_or_else(stale)?;
        if text[s..e] != m.surface {
            return Err(stale());
        }
        text.replace_range(s..e, to);
        if s < boundary {
            boundary = boundary + to.len() - (e - s);
        }
        if !used.iter().any(|(f, _)| f == &m.surface) {
            used.push((m.surface.clone(), to.clone()));
        }
    }
    let (task, task_used) = replace_surfaces(&split.task, selection);
    for pair in task_used {
        if !used.contains(&pair) {
            used.push(pair);
        }
    }
    used.sort_by_key(|(f, _)| selection.keys().position(|k| k == f));
    let leading = text[..boundary].trim().to_string();
    let trailing = text[boundary..].trim().to_string();
    Ok(Applied {
        leading,
        task,
        trailing,
        replacements: used,
    })
}

/// Up to `max` distinct option combinations over slots with `counts[i]`
/// options each. The first is all top choices; the rest are drawn uniformly
/// without replacement.
pub fn sample_combinations(counts: &[usize], max: usize, seed: u64) -> Vec<Vec<usize>> {
    if max == 0 || counts.is_empty() || counts.contains(&0) {
        return Vec::new();
    }
    let mut out = vec![vec![0; counts.len()]];
    let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match total {
        Some(total) => {
            let extra = (max - 1).min(total - 1);
            for i in index::sample(&mut rng, total - 1, extra) {
                out.push(decode(i + 1, counts));
            }
        }
        None => {
            let mut seen: HashSet<Vec<usize>> = out.iter().cloned().collect();
            while out.len() < max {
                let combo: Vec<usize> = counts.iter().map(|&c| rng.gen_range(0..c)).collect();
                if seen.insert(combo.clone()) {
                    out.push(combo);
                }
            }
        }
    }
    out
}

/// Mixed-radix decoding; the first slot varies fastest.
fn decode(mut i: usize, counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .map(|&c| {
            let d = i % c;
            i /= c;
            d
        })
        .collect()
}
