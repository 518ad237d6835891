//! Deterministic, rule-based stand-ins for the three neural models.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canonical_ranking, check_paraphrase_request, tidy_paraphrases, validate_mentions};
use super::{EntityMention, FillQuery, ModelGateway};
use crate::error::GatewayError;
use crate::model::EntityLabel;
use crate::splitter::segment_sentences;
use crate::text::{byte_to_char, find_whole_word, fnv1a, match_casing, tokenize};

const GAZETTEER: &str = include_str!("../../assets/gazetteer.tsv");
const SYNONYMS: &str = include_str!("../../assets/synonyms.tsv");
const BIGRAMS: &str = include_str!("../../assets/bigrams.tsv");

const SUBORDINATORS: [&str; 9] = [
    "when", "if", "because", "although", "while", "after", "before", "since", "once",
];

const PASSIVE_VERBS: [(&str, &str); 12] = [
    ("uses", "used"),
    ("builds", "built"),
    ("manages", "managed"),
    ("owns", "owned"),
    ("leads", "led"),
    ("develops", "developed"),
    ("writes", "written"),
    ("runs", "run"),
    ("maintains", "maintained"),
    ("reviews", "reviewed"),
    ("designs", "designed"),
    ("creates", "created"),
];

/// How the stub paraphraser behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParaphraseMode {
    /// Synonym swaps, clause reordering and passive templates.
    #[default]
    Rules,
    /// Word-order reversal only; scores far below any sensible gate band.
    Scrambled,
    /// Never produces a candidate.
    Silent,
}

/// Lookup tables behind the stub.
#[derive(Debug, Clone, Default)]
pub struct StubAssets {
    /// (surface, label), matched longest first.
    pub gazetteer: Vec<(String, EntityLabel)>,
    pub synonyms: HashMap<String, Vec<String>>,
    pub bigrams: HashMap<(String, String), u32>,
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::trim).collect())
}

impl StubAssets {
    /// The tables bundled with the crate.
    pub fn bundled() -> Self {
        let mut assets = Self::default();
        for f in data_lines(GAZETTEER) {
            let label = EntityLabel::from_wire(f[0]).expect("bundled gazetteer label");
            assets.gazetteer.push((f[1].to_string(), label));
        }
        for f in data_lines(SYNONYMS) {
            let alts = f[1].split(',').map(|s| s.trim().to_string()).collect();
            assets.synonyms.insert(f[0].to_string(), alts);
        }
        for f in data_lines(BIGRAMS) {
            let count = f[2].parse().expect("bundled bigram count");
            assets.bigrams.insert((f[0].to_string(), f[1].to_string()), count);
        }
        assets.sort_gazetteer();
        assets
    }

    fn sort_gazetteer(&mut self) {
        self.gazetteer
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    }

    pub fn with_entity(mut self, surface: &str, label: EntityLabel) -> Self {
        self.gazetteer.push((surface.to_string(), label));
        self.sort_gazetteer();
        self
    }

    pub fn with_bigram(mut self, left: &str, right: &str, count: u32) -> Self {
        self.bigrams.insert((left.to_lowercase(), right.to_lowercase()), count);
        self
    }
}

/// Deterministic gateway: identical (seed, input) gives identical output.
#[derive(Debug, Clone)]
pub struct StubGateway {
    seed: u64,
    mode: ParaphraseMode,
    assets: StubAssets,
}

impl StubGateway {
    pub fn new(seed: u64) -> Self {
        Self::with_assets(seed, StubAssets::bundled())
    }

    pub fn with_assets(seed: u64, assets: StubAssets) -> Self {
        Self {
            seed,
            mode: ParaphraseMode::Rules,
            assets,
        }
    }

    pub fn with_mode(mut self, mode: ParaphraseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn assets(&self) -> &StubAssets {
        &self.assets
    }

    fn synonym_candidates(&self, text: &str, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let words: Vec<&str> = text.split(' ').collect();
        let sites: Vec<(usize, &Vec<String>)> = words
            .iter()
            .enumerate()
            .filter_map(|(i, w)| {
                let core = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
                self.assets.synonyms.get(&core).map(|alts| (i, alts))
            })
            .collect();
        if sites.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for _ in 0..n * 4 {
            if out.len() >= n {
                break;
            }
            let size = rng.gen_range(1..=sites.len());
            let chosen: Vec<&(usize, &Vec<String>)> = sites.choose_multiple(rng, size).collect();
            let mut new_words: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            for &&(i, alts) in &chosen {
                let alt = &alts[rng.gen_range(0..alts.len())];
                new_words[i] = swap_core(words[i], alt);
            }
            let cand = new_words.join(" ");
            if !out.contains(&cand) {
                out.push(cand);
            }
        }
        out
    }
}

/// Replaces the alphanumeric core of `word`, keeping attached punctuation and casing.
fn swap_core(word: &str, alt: &str) -> String {
    let start = word.find(|c: char| c.is_alphanumeric()).unwrap_or(0);
    let end = word
        .rfind(|c: char| c.is_alphanumeric())
        .map_or(word.len(), |i| i + word[i..].chars().next().map_or(1, char::len_utf8));
    format!(
        "{}{}{}",
        &word[..start],
        match_casing(&word[start..end], alt),
        &word[end..]
    )
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn upper_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// "When A, B." becomes "B when A."
fn reorder_clause(sentence: &str) -> Option<String> {
    let body = sentence.strip_suffix('.')?;
    let first = body.split_whitespace().next()?.to_lowercase();
    if !SUBORDINATORS.contains(&first.as_str()) {
        return None;
    }
    let (head, tail) = body.split_once(", ")?;
    if tail.contains(", ") || tail.is_empty() {
        return None;
    }
    Some(format!("{} {}.", upper_first(tail), lower_first(head)))
}

/// "Subj uses Obj." becomes "Obj is used by subj."
fn passivize(sentence: &str) -> Option<String> {
    let body = sentence.strip_suffix('.')?;
    if body.contains(',') {
        return None;
    }
    let words: Vec<&str> = body.split_whitespace().collect();
    let (vi, pp) = words
        .iter()
        .enumerate()
        .find_map(|(i, w)| PASSIVE_VERBS.iter().find(|(v, _)| v == w).map(|(_, pp)| (i, *pp)))?;
    if vi == 0 || vi > 4 || vi + 1 >= words.len() {
        return None;
    }
    let subject = words[..vi].join(" ");
    let object = words[vi + 1..].join(" ");
    let subject = match words[0].to_lowercase().as_str() {
        "the" | "a" | "an" | "our" | "their" | "his" | "her" | "every" | "each" => lower_first(&subject),
        _ => subject,
    };
    let last = words.last()?.to_lowercase();
    let verb = if last.ends_with('s') && !last.ends_with("ss") {
        "are"
    } else {
        "is"
    };
    Some(format!("{} {verb} {pp} by {subject}.", upper_first(&object)))
}

fn structural_candidates(text: &str) -> Vec<String> {
    let sentences = segment_sentences(text);
    let mut out = Vec::new();
    for rule in [reorder_clause as fn(&str) -> Option<String>, passivize] {
        let mut changed = false;
        let rewritten: Vec<String> = sentences
            .iter()
            .map(|s| match rule(s) {
                Some(r) => {
                    changed = true;
                    r
                }
                None => s.clone(),
            })
            .collect();
        if changed {
            out.push(rewritten.join(" "));
        }
    }
    out
}

fn scramble(text: &str) -> String {
    let words: Vec<String> = text
        .split_whitespace()
        .rev()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    format!("{}.", upper_first(&words.join(" ")))
}

impl ModelGateway for StubGateway {
    fn paraphrase(&self, text: &str, n: usize) -> Result<Vec<String>, GatewayError> {
        check_paraphrase_request(text, n)?;
        let raw = match self.mode {
            ParaphraseMode::Silent => Vec::new(),
            ParaphraseMode::Scrambled => vec![scramble(text)],
            ParaphraseMode::Rules => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(text));
                let mut c = structural_candidates(text);
                c.extend(self.synonym_candidates(text, n, &mut rng));
                c
            }
        };
        Ok(tidy_paraphrases(text, raw, n))
    }

    fn recognize_entities(&self, text: &str) -> Result<Vec<EntityMention>, GatewayError> {
        let mut hits: Vec<(usize, usize, &str, EntityLabel)> = Vec::new();
        for (surface, label) in &self.assets.gazetteer {
            for (s, e) in find_whole_word(text, surface) {
                if hits.iter().all(|&(hs, he, _, _)| e <= hs || s >= he) {
                    hits.push((s, e, surface, *label));
                }
            }
        }
        hits.sort_by_key(|h| h.0);
        let mentions: Vec<EntityMention> = hits
            .into_iter()
            .map(|(s, e, surface, label)| EntityMention {
                start: byte_to_char(text, s),
                end: byte_to_char(text, e),
                surface: surface.to_string(),
                label,
            })
            .collect();
        validate_mentions(text, &mentions)?;
        Ok(mentions)
    }

    fn score_fill(&self, query: &FillQuery) -> Result<Vec<(String, f64)>, GatewayError> {
        let (left, right) = query.sides();
        let left_word = tokenize(left).pop();
        let right_word = tokenize(right).into_iter().next();
        let count = |a: &str, b: &str| {
            self.assets
                .bigrams
                .get(&(a.to_string(), b.to_string()))
                .copied()
                .unwrap_or(0) as f64
        };
        let ranked = query
            .options()
            .iter()
            .map(|opt| {
                let words = tokenize(opt);
                let mut score = 0.0;
                if let (Some(l), Some(first)) = (&left_word, words.first()) {
                    score += count(l, first).ln_1p();
                }
                if let (Some(last), Some(r)) = (words.last(), &right_word) {
                    score += count(last, r).ln_1p();
                }
                (opt.clone(), score)
            })
            .collect();
        canonical_ranking(query, ranked)
    }
}
