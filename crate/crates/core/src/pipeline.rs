//! Per-question orchestration: classify, split, paraphrase, replace, route.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{predict, ClassifierModel};
use crate::corpus::serialize_question_record;
use crate::embeddings::EmbeddingTable;
use crate::error::GatewayError;
use crate::gateway::ModelGateway;
use crate::model::{GeneratedQuestion, MultipleChoiceQuestion, PipelineConfig, QuestionType, Route};
use crate::paraphrase::{paraphrase_context, ParaphraseCandidate, Verdict};
use crate::replace::{apply_replacements, plan_replacements, replace_surfaces};
use crate::splitter::{assemble, same_modulo_ws, split_context_task, SplitQuestion};
use crate::text::fnv1a;

pub const REASON_UNSUPPORTED: &str = "unsupported question type";
pub const REASON_UNCLASSIFIED: &str = "no question type and no classifier";
pub const REASON_NO_TASK: &str = "no task sentence found";
pub const REASON_NOTHING_USABLE: &str = "no accepted paraphrase and no replaceable entity";
pub const REASON_NO_NEW_TEXT: &str = "every candidate output matched the source";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteTaken {
    Combined,
    ParaphraseOnly,
    NerOnly,
    None,
}

impl RouteTaken {
    pub fn route(self) -> Option<Route> {
        match self {
            Self::Combined => Some(Route::Combined),
            Self::ParaphraseOnly => Some(Route::ParaphraseOnly),
            Self::NerOnly => Some(Route::NerOnly),
            Self::None => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Combined => "combined",
            Self::ParaphraseOnly => "paraphrase_only",
            Self::NerOnly => "ner_only",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub qtype: Option<QuestionType>,
    pub candidates: usize,
    pub accepted: usize,
    pub too_similar: usize,
    pub too_different: usize,
    pub entities_found: usize,
    pub replaceable_entities: usize,
    pub combinations_sampled: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Diagnostics {
    /// Candidate counters add up.
    pub fn reconciles(&self) -> bool {
        self.candidates == self.accepted + self.too_similar + self.too_different
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    pub source: MultipleChoiceQuestion,
    pub outputs: Vec<GeneratedQuestion>,
    pub route_taken: RouteTaken,
    pub diag: Diagnostics,
}

#[derive(Serialize)]
struct OutcomeRecord<'a> {
    source: serde_json::Value,
    route_taken: RouteTaken,
    outputs: &'a [GeneratedQuestion],
    diag: &'a Diagnostics,
}

impl GenerationOutcome {
    fn empty(source: &MultipleChoiceQuestion, diag: Diagnostics) -> Self {
        Self {
            source: source.clone(),
            outputs: Vec::new(),
            route_taken: RouteTaken::None,
            diag,
        }
    }

    pub fn failed(&self) -> bool {
        self.diag.error.is_some()
    }

    /// One JSONL line; the source uses the corpus record layout.
    pub fn to_json_line(&self) -> String {
        let source = serde_json::from_str(&serialize_question_record(&self.source)).expect("record is valid JSON");
        let rec = OutcomeRecord {
            source,
            route_taken: self.route_taken,
            outputs: &self.outputs,
            diag: &self.diag,
        };
        serde_json::to_string(&rec).expect("outcome serializes")
    }
}

/// A gateway error together with the diagnostics gathered before it.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationFailure {
    pub error: GatewayError,
    pub partial: Box<GenerationOutcome>,
}

impl std::fmt::Display for GenerationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "question {}: {}", self.partial.source.id, self.error)
    }
}

impl std::error::Error for GenerationFailure {}

#[derive(Clone, Copy)]
pub struct PipelineDeps<'a> {
    pub classifier: Option<&'a ClassifierModel>,
    pub gateway: &'a dyn ModelGateway,
    pub embeddings: &'a EmbeddingTable,
}

fn record_paraphrases(diag: &mut Diagnostics, cands: &[ParaphraseCandidate]) {
    let count = |v| cands.iter().filter(|c| c.verdict == v).count();
    diag.candidates = cands.len();
    diag.accepted = count(Verdict::Accepted);
    diag.too_similar = count(Verdict::TooSimilar);
    diag.too_different = count(Verdict::TooDifferent);
}

/// Runs one question through the pipeline.
pub fn generate(
    q: &MultipleChoiceQuestion,
    deps: &PipelineDeps<'_>,
    cfg: &PipelineConfig,
) -> Result<GenerationOutcome, GenerationFailure> {
    let mut diag = Diagnostics {
        qtype: q.qtype.or_else(|| deps.classifier.map(|m| predict(m, q).0)),
        ..Diagnostics::default()
    };
    match diag.qtype {
        Some(QuestionType::Application) => {}
        Some(_) => {
            diag.reason = Some(REASON_UNSUPPORTED.into());
            return Ok(GenerationOutcome::empty(q, diag));
        }
        None => {
            diag.reason = Some(REASON_UNCLASSIFIED.into());
            return Ok(GenerationOutcome::empty(q, diag));
        }
    }

    let Ok(split) = split_context_task(&q.stem, cfg) else {
        diag.reason = Some(REASON_NO_TASK.into());
        return Ok(GenerationOutcome::empty(q, diag));
    };

    let fail = |error: GatewayError, diag: &Diagnostics| GenerationFailure {
        partial: Box::new(GenerationOutcome::empty(
            q,
            Diagnostics {
                error: Some(error.to_string()),
                ..diag.clone()
            },
        )),
        error,
    };

    let paraphrases = paraphrase_context(&split, deps.gateway, cfg).map_err(|e| fail(e, &diag))?;
    record_paraphrases(&mut diag, &paraphrases.candidates);
    let accepted: Vec<&ParaphraseCandidate> = paraphrases.accepted().collect();

    let plan = plan_replacements(&split, &q.choices, deps.gateway, deps.embeddings, cfg).map_err(|e| fail(e, &diag))?;
    diag.entities_found = plan.detected;
    diag.replaceable_entities = plan.slots.len();

    let seed = cfg.random_seed ^ fnv1a(&q.id);
    let combos = plan.combinations(cfg.max_outputs_per_question, seed);
    diag.combinations_sampled = combos.len();
    if combos.is_empty() {
        diag.replaceable_entities = 0;
    }

    let make = |route: Route, text: String, task: String, replacements, bleu| GeneratedQuestion {
        source_id: q.id.clone(),
        text,
        task,
        route,
        replacements,
        context_bleu4: bleu,
        choices: q.choices.clone(),
        answer_index: q.correct_index,
    };

    let trailing = split.trailing_context();
    let (route_taken, candidates): (RouteTaken, Vec<GeneratedQuestion>) = match (accepted.is_empty(), combos.is_empty())
    {
        (false, false) => {
            let mut pairs: Vec<(usize, usize)> = (0..accepted.len())
                .flat_map(|p| (0..combos.len()).map(move |c| (p, c)))
                .collect();
            pairs.sort_by_key(|&(p, c)| (p + c, p));
            let outs = pairs
                .into_iter()
                .filter_map(|(p, c)| {
                    let sel = plan.selection(&combos[c]);
                    let (ctx, mut used) = replace_surfaces(&accepted[p].text, &sel);
                    let (task, used_task) = replace_surfaces(&split.task, &sel);
                    let (trail, used_trail) = replace_surfaces(&trailing, &sel);
                    for pair in used_task.into_iter().chain(used_trail) {
                        if !used.contains(&pair) {
                            used.push(pair);
                        }
                    }
                    if used.is_empty() {
                        return None;
                    }
                    used.sort_by_key(|(f, _)| sel.keys().position(|k| k == f));
                    let text = assemble(&ctx, &task, &trail);
                    Some(make(
                        Route::Combined,
                        text,
                        task,
                        used,
                        Some(accepted[p].bleu4_vs_original),
                    ))
                })
                .collect();
            (RouteTaken::Combined, outs)
        }
        (false, true) => {
            let outs = accepted
                .iter()
                .map(|p| {
                    let text = assemble(&p.text, &split.task, &trailing);
                    make(
                        Route::ParaphraseOnly,
                        text,
                        split.task.clone(),
                        Vec::new(),
                        Some(p.bleu4_vs_original),
                    )
                })
                .collect();
            (RouteTaken::ParaphraseOnly, outs)
        }
        (true, false) => {
            let mut outs = Vec::new();
            for combo in &combos {
                let sel = plan.selection(combo);
                match apply_replacements(&split, &plan, &sel) {
                    Ok(a) if !a.replacements.is_empty() => {
                        outs.push(make(Route::NerOnly, a.stem(), a.task.clone(), a.replacements, None));
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("question {}: {e}", q.id),
                }
            }
            (RouteTaken::NerOnly, outs)
        }
        (true, true) => {
            diag.reason = Some(REASON_NOTHING_USABLE.into());
            return Ok(GenerationOutcome::empty(q, diag));
        }
    };

    let mut seen: HashSet<String> = HashSet::new();
    let outputs: Vec<GeneratedQuestion> = candidates
        .into_iter()
        .filter(|g| !same_modulo_ws(&g.text, &q.stem) && seen.insert(g.text.clone()))
        .take(cfg.max_outputs_per_question)
        .collect();
    if outputs.is_empty() {
        diag.reason = Some(REASON_NO_NEW_TEXT.into());
        return Ok(GenerationOutcome::empty(q, diag));
    }
    Ok(GenerationOutcome {
        source: q.clone(),
        outputs,
        route_taken,
        diag,
    })
}

fn isolate(r: Result<GenerationOutcome, GenerationFailure>) -> GenerationOutcome {
    r.unwrap_or_else(|f| {
        log::warn!("{f}");
        *f.partial
    })
}

/// Runs every question in order; a failing question is recorded in its own
/// outcome and does not stop the batch.
pub fn generate_corpus(
    corpus: &[MultipleChoiceQuestion],
    deps: &PipelineDeps<'_>,
    cfg: &PipelineConfig,
) -> Vec<GenerationOutcome> {
    corpus.iter().map(|q| isolate(generate(q, deps, cfg))).collect()
}

/// Like [`generate_corpus`] on `jobs` worker threads; output order is preserved.
pub fn generate_corpus_parallel(
    corpus: &[MultipleChoiceQuestion],
    deps: &PipelineDeps<'_>,
    cfg: &PipelineConfig,
    jobs: usize,
) -> Vec<GenerationOutcome> {
    if jobs <= 1 {
        return generate_corpus(corpus, deps, cfg);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| corpus.par_iter().map(|q| isolate(generate(q, deps, cfg))).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}), running sequentially");
            generate_corpus(corpus, deps, cfg)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub questions: usize,
    pub combined: usize,
    pub paraphrase_only: usize,
    pub ner_only: usize,
    pub none: usize,
    pub failures: usize,
    pub outputs: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub too_similar: usize,
    pub too_different: usize,
    pub entities_found: usize,
    pub combinations_sampled: usize,
}

impl CorpusSummary {
    pub fn of(outcomes: &[GenerationOutcome]) -> Self {
        let mut s = Self {
            questions: outcomes.len(),
            ..Self::default()
        };
        for o in outcomes {
            match o.route_taken {
                RouteTaken::Combined => s.combined += 1,
                RouteTaken::ParaphraseOnly => s.paraphrase_only += 1,
                RouteTaken::NerOnly => s.ner_only += 1,
                RouteTaken::None => s.none += 1,
            }
            s.failures += usize::from(o.failed());
            s.outputs += o.outputs.len();
            s.candidates += o.diag.candidates;
            s.accepted += o.diag.accepted;
            s.too_similar += o.diag.too_similar;
            s.too_different += o.diag.too_different;
            s.entities_found += o.diag.entities_found;
            s.combinations_sampled += o.diag.combinations_sampled;
        }
        s
    }
}

/// Checks every output invariant of one outcome against its source.
pub fn check_outcome(o: &GenerationOutcome, cfg: &PipelineConfig) -> Result<(), String> {
    if (o.route_taken == RouteTaken::None) != o.outputs.is_empty() {
        return Err("route None must coincide with empty outputs".into());
    }
    if !o.diag.reconciles() {
        return Err("candidate counters do not add up".into());
    }
    match o.route_taken {
        RouteTaken::Combined if o.diag.accepted == 0 => return Err("combined without accepted paraphrase".into()),
        RouteTaken::ParaphraseOnly if o.diag.replaceable_entities > 0 => {
            return Err("paraphrase-only with replaceable entities".into())
        }
        RouteTaken::NerOnly if o.diag.accepted > 0 => return Err("ner-only with accepted paraphrase".into()),
        _ => {}
    }
    if o.outputs.is_empty() {
        return Ok(());
    }
    let split: SplitQuestion = split_context_task(&o.source.stem, cfg).map_err(|e| e.to_string())?;
    let mut seen = HashSet::new();
    for g in &o.outputs {
        g.check(cfg)?;
        if Some(g.route) != o.route_taken.route() {
            return Err(format!("output route {:?} under {:?}", g.route, o.route_taken));
        }
        if g.source_id != o.source.id {
            return Err("lineage broken".into());
        }
        if g.choices != o.source.choices || g.answer_index != o.source.correct_index {
            return Err("answer choices changed".into());
        }
        if same_modulo_ws(&g.text, &o.source.stem) {
            return Err("output equals source stem".into());
        }
        if !seen.insert(g.text.as_str()) {
            return Err("duplicate output".into());
        }
        let map = g.replacements.iter().cloned().collect();
        let (expected_task, _) = replace_surfaces(&split.task, &map);
        if g.task != expected_task {
            return Err(format!(
                "task {:?} is not {:?} with replacements applied",
                g.task, split.task
            ));
        }
        if !g.text.contains(&g.task) {
            return Err("output text does not contain its task".into());
        }
    }
    Ok(())
}
