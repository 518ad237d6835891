//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use agentzero_core::classifier::{objective, predict, softmax, stratified_split, train, TrainConfig};
use agentzero_core::embeddings::load_embeddings;
use agentzero_core::error::EmbeddingError;
use agentzero_core::gateway::StubGateway;
use agentzero_core::metrics::{bleu4, cider, meteor, meteor_alignment, rouge_l};
use agentzero_core::model::{MultipleChoiceQuestion, PipelineConfig, QuestionType};
use agentzero_core::paraphrase::{context_bleu, gate_by_bleu, verdict_for, Verdict};
use agentzero_core::pipeline::{check_outcome, generate_corpus, CorpusSummary, PipelineDeps, RouteTaken};
use agentzero_core::replace::replace_surfaces;
use agentzero_core::splitter::{same_modulo_ws, split_context_task};
use common::{oracle, toks};

const TOL: f64 = 1e-9;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() < TOL, || format!("{what}: {got} vs oracle {want}"))
}

fn metric_oracles() -> Result<String, String> {
    let start = Instant::now();
    let pairs = oracle::random_pairs(250, 2024);
    for (c, r) in &pairs {
        let refs = vec![r.clone()];
        close(bleu4(c, &refs).unwrap(), oracle::bleu(c, &refs), "bleu")?;
        close(meteor(c, r).unwrap(), oracle::meteor(c, r), "meteor")?;
        close(
            rouge_l(c, r).unwrap(),
            oracle::to_f64(&oracle::rouge_l_exact(c, r)),
            "rouge",
        )?;
    }
    for chunk in pairs.chunks(10) {
        let corpus: Vec<(Vec<String>, Vec<Vec<String>>)> =
            chunk.iter().map(|(c, r)| (c.clone(), vec![r.clone()])).collect();
        close(cider(&corpus).unwrap(), oracle::cider(&corpus), "cider")?;
    }

    let c = toks("the cat sat on the mat");
    let (m, t) = oracle::bleu_counts(&c, &[toks("the cat is on the mat")]);
    ensure(m == [5, 3, 1, 0] && t == [6, 5, 4, 3], || {
        format!("bleu counts {m:?} {t:?}")
    })?;
    let a = meteor_alignment(&toks("the cat sat"), &toks("the cat ran"));
    ensure((a.matches, a.chunks) == (2, 1), || "meteor alignment fixture".into())?;
    close(
        meteor(&toks("the cat sat"), &toks("the cat ran")).unwrap(),
        0.625,
        "meteor fixture",
    )?;
    close(
        rouge_l(&toks("a b c d"), &toks("a c b d")).unwrap(),
        0.75,
        "rouge fixture",
    )?;
    let toy = vec![
        (toks("the cat"), vec![toks("the dog")]),
        (toks("a fish"), vec![toks("a fish")]),
    ];
    close(cider(&toy).unwrap(), 0.3125, "cider fixture")?;

    let s = toks("one two three four five");
    let d = toks("six seven eight nine ten");
    close(bleu4(&s, std::slice::from_ref(&s)).unwrap(), 1.0, "bleu identity")?;
    close(rouge_l(&s, &s).unwrap(), 1.0, "rouge identity")?;
    // single chunk, so the fragmentation penalty is 0.5 / m^3
    close(meteor(&s, &s).unwrap(), 1.0 - 0.5 / 125.0, "meteor identity")?;
    let pair_corpus = vec![(s.clone(), vec![s.clone()]), (d.clone(), vec![d.clone()])];
    close(
        cider(&pair_corpus).unwrap(),
        oracle::cider(&pair_corpus),
        "cider identity",
    )?;
    let floor = bleu4(&d, std::slice::from_ref(&s)).unwrap();
    close(floor, oracle::bleu(&d, std::slice::from_ref(&s)), "bleu disjoint")?;
    ensure(((floor - 1e-9) / 1e-9).abs() < TOL, || {
        format!("bleu disjoint {floor:e} is not the floor")
    })?;
    ensure(
        meteor(&d, &s).unwrap() == 0.0 && rouge_l(&d, &s).unwrap() == 0.0,
        || "disjoint not zero".into(),
    )?;
    ensure(
        cider(&[(d.clone(), vec![s.clone()]), (s, vec![d])]).unwrap() == 0.0,
        || "cider disjoint".into(),
    )?;

    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!(
        "{} random pairs per metric, fixtures exact, {:.2}s",
        pairs.len(),
        took.as_secs_f64()
    ))
}

fn gate_constants() -> Result<String, String> {
    let cfg = PipelineConfig::default();
    ensure(cfg.bleu_min == 0.23 && cfg.bleu_max == 0.8 && cfg.knn_k == 5, || {
        format!("defaults {} {} {}", cfg.bleu_min, cfg.bleu_max, cfg.knn_k)
    })?;
    ensure(
        verdict_for(0.23, &cfg) == Verdict::Accepted && verdict_for(0.8, &cfg) == Verdict::Accepted,
        || "default bounds not inclusive".into(),
    )?;
    let original = "the team reviews the quarterly plan before the meeting";
    let cand = "the team checks the quarterly plan before the meeting".to_string();
    let s = context_bleu(&cand, original);
    let gate = |min: f64, max: f64| {
        let cfg = PipelineConfig {
            bleu_min: min,
            bleu_max: max,
            ..PipelineConfig::default()
        };
        gate_by_bleu(original, std::slice::from_ref(&cand), &cfg)[0].verdict
    };
    ensure(gate(s, s) == Verdict::Accepted, || {
        "score equal to both bounds rejected".into()
    })?;
    ensure(gate(s.next_up(), 1.0) == Verdict::TooDifferent, || {
        "below min accepted".into()
    })?;
    ensure(gate(0.0, s.next_down()) == Verdict::TooSimilar, || {
        "above max accepted".into()
    })?;

    let originals = oracle::random_pairs(200, 5);
    let mut total = 0;
    for w in originals.chunks(4) {
        let orig = w[0].1.join(" ");
        let cands: Vec<String> = w.iter().map(|p| p.0.join(" ")).collect();
        let gated = gate_by_bleu(&orig, &cands, &cfg);
        ensure(gated.len() == cands.len(), || "gate dropped candidates".into())?;
        for g in &gated {
            ensure(g.verdict == verdict_for(g.bleu4_vs_original, &cfg), || {
                "verdict mismatch".into()
            })?;
        }
        total += gated.len();
    }
    Ok(format!(
        "bleu_min=0.23 bleu_max=0.8 knn_k=5, {total} candidates partitioned"
    ))
}

fn splitter_reconstruction() -> Result<String, String> {
    let cfg = PipelineConfig::default();
    let corpus = common::corpus();
    let mut ok = 0;
    for q in &corpus {
        let split = split_context_task(&q.stem, &cfg).map_err(|e| format!("{}: {e}", q.id))?;
        if same_modulo_ws(&split.reconstruct(), &q.stem) {
            ok += 1;
        }
    }
    ensure(ok == corpus.len(), || format!("{ok}/{} reconstructed", corpus.len()))?;
    let stem = "Robert and Annie begin arguing during a meeting about how to prepare a presentation. What is the first thing they should do to resolve this conflict?";
    let split = split_context_task(stem, &cfg).map_err(|e| e.to_string())?;
    ensure(
        split.context == ["Robert and Annie begin arguing during a meeting about how to prepare a presentation."]
            && split.task == "What is the first thing they should do to resolve this conflict?",
        || format!("meeting example split as {split:?}"),
    )?;
    Ok(format!("{ok}/{} stems, meeting example exact", corpus.len()))
}

fn stub_run(seed: u64) -> (Vec<agentzero_core::pipeline::GenerationOutcome>, PipelineConfig) {
    let corpus = common::corpus();
    let table = common::embeddings();
    let cfg = PipelineConfig {
        random_seed: seed,
        ..PipelineConfig::default()
    };
    let stub = StubGateway::new(seed);
    let deps = PipelineDeps {
        classifier: None,
        gateway: &stub,
        embeddings: &table,
    };
    (generate_corpus(&corpus, &deps, &cfg), cfg)
}

fn pipeline_invariants() -> Result<String, String> {
    let start = Instant::now();
    let (first, cfg) = stub_run(7);
    let took = start.elapsed();
    let (second, _) = stub_run(7);
    let mut outputs = 0;
    for o in &first {
        check_outcome(o, &cfg).map_err(|e| format!("{}: {e}", o.source.id))?;
        let source_task = split_context_task(&o.source.stem, &cfg).map_err(|e| e.to_string());
        for g in &o.outputs {
            ensure(
                g.choices == o.source.choices && g.answer_index == o.source.correct_index,
                || format!("{}: choices changed", o.source.id),
            )?;
            ensure(!same_modulo_ws(&g.text, &o.source.stem), || {
                format!("{}: identity output", o.source.id)
            })?;
            let task = source_task.clone()?.task;
            let sel = g.replacements.iter().cloned().collect();
            ensure(replace_surfaces(&task, &sel).0 == g.task, || {
                format!("{}: task changed beyond substitutions", o.source.id)
            })?;
            outputs += 1;
        }
    }
    let a: Vec<String> = first.iter().map(|o| o.to_json_line()).collect();
    let b: Vec<String> = second.iter().map(|o| o.to_json_line()).collect();
    ensure(a == b, || "seed 7 runs differ".into())?;
    ensure(took < Duration::from_secs(60), || format!("corpus run took {took:?}"))?;
    Ok(format!(
        "{outputs} outputs checked, seed 7 byte-identical, {:.2}s per run",
        took.as_secs_f64()
    ))
}

fn routing_coverage() -> Result<String, String> {
    let (outcomes, _) = stub_run(7);
    for o in &outcomes {
        ensure(o.diag.reconciles(), || {
            format!("{}: counters do not reconcile", o.source.id)
        })?;
    }
    let s = CorpusSummary::of(&outcomes);
    ensure(s.candidates == s.accepted + s.too_similar + s.too_different, || {
        "corpus counters".into()
    })?;
    let count = |r: RouteTaken| outcomes.iter().filter(|o| o.route_taken == r).count();
    let routes = [
        ("combined", count(RouteTaken::Combined)),
        ("paraphrase_only", count(RouteTaken::ParaphraseOnly)),
        ("ner_only", count(RouteTaken::NerOnly)),
        ("none", count(RouteTaken::None)),
    ];
    ensure(routes.iter().all(|r| r.1 >= 3), || format!("{routes:?}"))?;
    let shown: Vec<String> = routes.iter().map(|(n, c)| format!("{n}={c}")).collect();
    Ok(format!(
        "{}, candidates {} = {}+{}+{}",
        shown.join(" "),
        s.candidates,
        s.accepted,
        s.too_similar,
        s.too_different
    ))
}

#[derive(serde::Deserialize)]
struct Reference {
    seed: u64,
    holdout: f64,
    epochs: usize,
    held_out: usize,
    accuracy: f64,
}

fn classifier() -> Result<String, String> {
    let text = std::fs::read_to_string(common::data_path("classifier_reference.json")).map_err(|e| e.to_string())?;
    let reference: Reference = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let labelled: Vec<(MultipleChoiceQuestion, QuestionType)> = common::corpus()
        .into_iter()
        .filter_map(|q| q.qtype.map(|t| (q, t)))
        .collect();
    let (train_set, test_set) = stratified_split(&labelled, reference.holdout, reference.seed);
    let tc = TrainConfig {
        seed: reference.seed,
        epochs: reference.epochs,
        ..TrainConfig::default()
    };
    let (model, _) = train(&train_set, tc).map_err(|e| e.to_string())?;
    let (again, _) = train(&train_set, tc).map_err(|e| e.to_string())?;
    let bits = |m: &agentzero_core::classifier::ClassifierModel| -> Vec<u64> {
        m.weights().iter().flatten().map(|w| w.to_bits()).collect()
    };
    ensure(bits(&model) == bits(&again), || "weights differ between runs".into())?;

    for (q, _) in &labelled {
        let (_, p) = predict(&model, q);
        let sum: f64 = p.iter().sum();
        ensure((sum - 1.0).abs() < 1e-9, || {
            format!("{}: probabilities sum to {sum}", q.id)
        })?;
    }
    let extreme = softmax([1000.0, -1000.0, 0.0]);
    ensure((extreme.iter().sum::<f64>() - 1.0).abs() < 1e-9, || {
        "softmax overflow".into()
    })?;

    let data: Vec<_> = train_set
        .iter()
        .map(|(q, y)| {
            let f = agentzero_core::classifier::extract_features(q, model.vocabulary());
            (model.input(&f), y.index())
        })
        .collect();
    let l2 = TrainConfig::default().l2;
    let (_, grad) = objective(&model, &data, l2);
    let mut probe = model.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (c, row) in grad.iter().enumerate() {
        for (i, &g) in row.iter().enumerate() {
            let orig = probe.weights()[c][i];
            probe.weights_mut()[c][i] = orig + h;
            let up = objective(&probe, &data, l2).0;
            probe.weights_mut()[c][i] = orig - h;
            let down = objective(&probe, &data, l2).0;
            probe.weights_mut()[c][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-5, || format!("worst relative gradient error {worst:e}"))?;

    let correct = test_set.iter().filter(|(q, y)| predict(&model, q).0 == *y).count();
    let acc = correct as f64 / test_set.len() as f64;
    ensure(test_set.len() == reference.held_out, || {
        format!("held-out size {}", test_set.len())
    })?;
    ensure((acc - reference.accuracy).abs() < 1e-12, || {
        format!("accuracy {acc} vs recorded {}", reference.accuracy)
    })?;
    ensure(acc >= 0.9, || format!("held-out accuracy {acc}"))?;
    Ok(format!(
        "bit-identical weights, max gradient error {worst:.1e}, held-out accuracy {acc:.4} ({correct}/{})",
        test_set.len()
    ))
}

fn embedding_knn() -> Result<String, String> {
    let path = common::data_path("embeddings.txt");
    let table = common::embeddings();
    let mut queries = 0;
    for token in table.tokens() {
        for k in [1, 5, 10] {
            let got = table.nearest_neighbors(token, k);
            let want = common::knn_brute_force(&path, token, k);
            let names = |v: &[(String, f64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
            ensure(names(&got) == names(&want), || {
                format!("{token} k={k}: {got:?} vs {want:?}")
            })?;
            ensure(got.iter().all(|(t, _)| t != token), || {
                format!("{token} returned itself")
            })?;
            queries += 1;
        }
    }
    let mut f = tempfile::NamedTempFile::new().map_err(|e| e.to_string())?;
    writeln!(f, "a 1 0 0\nb 0 1 0\n\nc 0 1").map_err(|e| e.to_string())?;
    match load_embeddings(f.path()) {
        Err(EmbeddingError::DimensionMismatch {
            line: 4,
            expected: 3,
            found: 2,
        }) => {}
        other => return Err(format!("dimension mismatch reported as {other:?}")),
    }
    Ok(format!(
        "{queries} queries identical to full scan, mismatch reported at line 4"
    ))
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("metric oracle suite", metric_oracles),
        ("gate constants", gate_constants),
        ("splitter reconstruction", splitter_reconstruction),
        ("pipeline invariants", pipeline_invariants),
        ("routing coverage", routing_coverage),
        ("classifier", classifier),
        ("embedding k-NN", embedding_knn),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
