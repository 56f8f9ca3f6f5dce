//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `cargo test -p mrgagents-cli --test acceptance`.
//!
//! The distribution-table criterion needs licensed IU X-ray data and a
//! CheXbert-compatible labeling service. It is skipped unless both
//! `MRGAGENTS_IU_XRAY_CORPUS` (a corpus JSONL file with official splits) and
//! `MRGAGENTS_LABELER_URL` are set.

mod common;
#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use mrgagents::agents::serve_mock_agent;
use mrgagents::metrics::clinical::{ce_metrics, pooled_counts, LabelPair};
use mrgagents::metrics::rouge::rouge_l_tokens;
use mrgagents::metrics::{ce_from_vectors, cider, meteor, rouge_l};
use mrgagents::{
    build_subsets, distribution_stats, load_corpus, register_agents, select_unique, AgentSpec, CandidateSentence,
    CategoryMap, CorpusFormat, DiseaseCategory, EvaluationPair, GeneratedRecord, LabeledSentence, Labeler,
    LabelerBackend, MockBehavior, ObservationState, SelectionConfig, Sentence, Split, UncertainPolicy,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap()
}

fn metric_identity() -> Outcome {
    let began = Instant::now();
    let identical = [
        EvaluationPair::new("a", "The heart is enlarged.", "The heart is enlarged."),
        EvaluationPair::new("b", "Small left pleural effusion.", "Small left pleural effusion."),
        EvaluationPair::new("c", "Mild interstitial edema is present.", "Mild interstitial edema is present."),
    ];
    let c = cider(&identical, 4, 6.0);
    check((c - 10.0).abs() < 1e-9, format!("identity cider {c}"))?;
    let r = rouge_l(&identical, 1.2);
    check(r == 1.0, format!("identity rouge_l {r}"))?;
    for n in 1..=8usize {
        let text: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let text = text.join(" ");
        let m = meteor(&[EvaluationPair::new("s", text.clone(), text)], 0.9, 3.0, 0.5);
        let expected = 1.0 - 0.5 * (1.0 / n as f64).powi(3);
        check((m - expected).abs() < 1e-12, format!("meteor n={n}: {m} vs {expected}"))?;
    }
    let four = meteor(&[EvaluationPair::new("s", "a b c d", "a b c d")], 0.9, 3.0, 0.5);
    check((four - 0.9921875).abs() < 1e-12, format!("4-token meteor {four}"))?;
    let ce = runtime()
        .block_on(ce_metrics(&identical, &Labeler::rule_based(), UncertainPolicy::AsPositive))
        .map_err(|e| e.to_string())?;
    check(
        ce.precision == 1.0 && ce.recall == 1.0 && ce.f1 == 1.0,
        format!("identity CE {ce:?}"),
    )?;
    let disjoint = [
        EvaluationPair::new("a", "lungs clear", "heart enlarged"),
        EvaluationPair::new("b", "no effusion", "mild edema"),
    ];
    let scores = (cider(&disjoint, 4, 6.0), rouge_l(&disjoint, 1.2), meteor(&disjoint, 0.9, 3.0, 0.5));
    check(scores == (0.0, 0.0, 0.0), format!("disjoint scores {scores:?}"))?;
    let elapsed = began.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("cider {c:.9}, meteor(4) {four}, in {elapsed:.2?}"))
}

fn random_tokens(rng: &mut StdRng, vocab: &[&str], max_len: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| vocab[rng.random_range(0..vocab.len())].to_string()).collect()
}

fn oracle_equivalence() -> Outcome {
    let began = Instant::now();
    let mut index = oracle::SubsequenceIndex::new(&["a", "b", "c", "d"], 6);
    let n = index.sequences.len();
    for r in 0..n {
        index.fix_reference(r);
        let reference = index.sequences[r].clone();
        for h in 0..n {
            let hyp = &index.sequences[h];
            let expected = oracle::rouge_from_lcs(index.lcs_with(h), hyp.len(), reference.len(), 1.2);
            let got = rouge_l_tokens(hyp, &reference, 1.2);
            if got != expected {
                return Err(format!("rouge_l {hyp:?} / {reference:?}: {got} vs {expected}"));
            }
        }
    }
    let rouge_pairs = n * n;

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let vocab = ["the", "heart", "is", "enlarged", "no", "effusion", "mild", "edema"];
    let mut worst: f64 = 0.0;
    for fixture in 0..200 {
        let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = (0..rng.random_range(1..=5))
            .map(|_| {
                let refs = (0..rng.random_range(1..=3)).map(|_| random_tokens(&mut rng, &vocab, 8)).collect();
                (random_tokens(&mut rng, &vocab, 8), refs)
            })
            .collect();
        let eval: Vec<EvaluationPair> = pairs
            .iter()
            .enumerate()
            .map(|(i, (h, r))| EvaluationPair {
                study_id: format!("s{i}"),
                hypothesis: h.join(" "),
                references: r.iter().map(|t| t.join(" ")).collect(),
            })
            .collect();
        let got = cider(&eval, 4, 6.0);
        let expected = oracle::corpus_cider_oracle(&pairs, 4, 6.0);
        worst = worst.max((got - expected).abs());
        check((got - expected).abs() < 1e-9, format!("cider fixture {fixture}: {got} vs {expected}"))?;
    }
    let elapsed = began.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{rouge_pairs} rouge pairs exact, 200 cider fixtures max |diff| {worst:.1e}, in {elapsed:.2?}"))
}

fn rouge_hand_case() -> Outcome {
    let r = rouge_l(&[EvaluationPair::new("s", "the cat", "the cat sat")], 1.2);
    check((r - 0.7722).abs() < 1e-4, format!("rouge_l {r}"))?;
    Ok(format!("rouge_l {r:.6}"))
}

fn labels(categories: &[DiseaseCategory]) -> CategoryMap<bool> {
    let mut v = CategoryMap::filled(false);
    for &c in categories {
        v[c] = true;
    }
    v
}

fn ce_hand_case() -> Outcome {
    use DiseaseCategory::{Cardiomegaly, Edema};
    let pairs = [
        LabelPair {
            predicted: labels(&[Cardiomegaly]),
            truth: labels(&[Cardiomegaly, Edema]),
        },
        LabelPair {
            predicted: labels(&[Cardiomegaly]),
            truth: labels(&[Cardiomegaly]),
        },
    ];
    let counts = pooled_counts(&pairs);
    check((counts.tp, counts.fp, counts.fn_) == (2, 0, 1), format!("counts {counts:?}"))?;
    let ce = ce_from_vectors(&pairs);
    check(ce.precision == 1.0, format!("precision {}", ce.precision))?;
    check((ce.recall - 0.6667).abs() < 1e-4, format!("recall {}", ce.recall))?;
    check((ce.f1 - 0.8).abs() < 1e-4, format!("f1 {}", ce.f1))?;
    Ok(format!("P {:.4} R {:.4} F1 {:.4}", ce.precision, ce.recall, ce.f1))
}

fn candidates_from(texts: &[String]) -> Vec<CandidateSentence> {
    texts
        .iter()
        .zip(DiseaseCategory::AGENT_BEARING)
        .map(|(t, c)| CandidateSentence::new(c, t.clone()))
        .collect()
}

fn selection_anti_redundancy() -> Outcome {
    let began = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xc1de);
    let vocab = ["no", "acute", "effusion", "heart", "mild", "edema"];
    for fixture in 0..500 {
        let n = rng.random_range(1..=8);
        let mut texts: Vec<String> = (0..n)
            .map(|_| {
                let len = rng.random_range(1..=5);
                (0..len).map(|_| vocab[rng.random_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
            })
            .collect();
        // plant exact duplicates in about half the fixtures
        if n > 2 && rng.random_bool(0.5) {
            let src = rng.random_range(0..n);
            let dst = rng.random_range(0..n);
            texts[dst] = texts[src].clone();
        }
        let k = rng.random_range(1..=8);
        let candidates = candidates_from(&texts);
        let config = SelectionConfig::with_k(k);
        let got: BTreeSet<DiseaseCategory> = select_unique(&candidates, &config)
            .map_err(|e| e.to_string())?
            .selected
            .iter()
            .map(|c| c.category)
            .collect();
        let tokens: Vec<Vec<String>> = texts.iter().map(|t| mrgagents::tokenize(t).into_inner()).collect();
        let ranks: Vec<usize> = (0..n).collect();
        let expected: BTreeSet<DiseaseCategory> = oracle::select_oracle(&tokens, &ranks, k, 4, 6.0)
            .into_iter()
            .map(|i| candidates[i].category)
            .collect();
        check(got == expected, format!("fixture {fixture}: {got:?} vs oracle {expected:?}"))?;
    }

    // k distinct token-disjoint findings plus copies of one of them
    let pool = [
        "mediastinum widened",
        "heart enlarged",
        "patchy opacity",
        "apical nodule",
        "interstitial edema",
        "basilar consolidation",
        "lobar pneumonia",
        "bibasilar atelectasis",
    ];
    for fixture in 0..200 {
        let distinct = rng.random_range(2..=6);
        let copies = rng.random_range(1..=8 - distinct);
        let k = rng.random_range(1..=distinct);
        let mut texts: Vec<String> = pool[..distinct].iter().map(|s| s.to_string()).collect();
        let dup = rng.random_range(0..distinct);
        for _ in 0..copies {
            let at = rng.random_range(0..=texts.len());
            texts.insert(at, pool[dup].to_string());
        }
        let selection = select_unique(&candidates_from(&texts), &SelectionConfig::with_k(k)).map_err(|e| e.to_string())?;
        let mut seen = BTreeSet::new();
        for c in &selection.selected {
            check(seen.insert(c.text.clone()), format!("duplicate fixture {fixture}: {:?} selected twice", c.text))?;
        }
    }
    let elapsed = began.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("500 oracle fixtures and 200 duplicate fixtures, in {elapsed:.2?}"))
}

fn fanout_latency() -> Outcome {
    runtime().block_on(async {
        let mut handles = Vec::new();
        for (i, category) in DiseaseCategory::AGENT_BEARING.into_iter().enumerate() {
            let ms = if i == 4 { 5000 } else { 0 };
            handles.push(serve_mock_agent(category, MockBehavior::DelayMs { ms }).await.map_err(|e| e.to_string())?);
        }
        let specs = handles
            .iter()
            .map(|h| AgentSpec::new(h.category(), h.url()).with_timeout_ms(1000).with_max_retries(2))
            .collect();
        let registry = register_agents(specs).map_err(|e| e.to_string())?;
        let study = mrgagents::Study {
            id: "s1".into(),
            split: Split::Test,
            report_text: "x.".into(),
            image_refs: vec!["s1.png".into()],
        };
        let began = Instant::now();
        let result = registry.generate_candidates(&study).await.map_err(|e| e.to_string())?;
        let elapsed = began.elapsed();
        check(result.candidates.len() == 12, format!("{} candidates", result.candidates.len()))?;
        check(
            result.failed_categories() == vec![DiseaseCategory::Edema],
            format!("failures {:?}", result.failed_categories()),
        )?;
        within(elapsed, Duration::from_millis(3500))?;
        Ok(format!(
            "12 candidates + 1 failure ({} attempts) in {elapsed:.2?}",
            handles[4].requests()
        ))
    })
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let studies = synthetic_studies(10, |_| Split::Test);
    let corpus = write_corpus(dir.path(), "corpus.jsonl", &studies);
    runtime().block_on(async {
        let mocks = start_mocks(&studies, &[]).await;
        let agents = agents_section(&mocks, 5000);
        for run in ["run1", "run2"] {
            let config = write_config(dir.path(), &corpus, run, &format!("[selection]\nk = 6\n\n{agents}"));
            let config = config.to_str().unwrap().to_string();
            for command in ["curate", "generate", "evaluate"] {
                let output = mrgagents_async(args(&[command, "--config", &config])).await;
                check(
                    output.status.success(),
                    format!("{run} {command} exited {:?}: {}", output.status.code(), stderr(&output)),
                )?;
            }
        }
        Ok::<(), String>(())
    })?;
    let generated = fs::read_to_string(dir.path().join("run1/generated.jsonl")).map_err(|e| e.to_string())?;
    let records: Vec<GeneratedRecord> = generated.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    check(records.len() == 10, format!("{} reports", records.len()))?;
    for r in &records {
        check(r.sentences.len() == 6, format!("{} has {} sentences", r.id, r.sentences.len()))?;
        check(mrgagents::split_sentences(&r.report).len() == 6, format!("{} report text", r.id))?;
    }
    let (one, two) = (read_tree(&dir.path().join("run1")), read_tree(&dir.path().join("run2")));
    check(one.len() == 17, format!("{} output files", one.len()))?;
    let differing: Vec<&String> = one.keys().filter(|k| one.get(*k) != two.get(*k)).collect();
    if let Some(name) = differing.first() {
        let (a, b) = (String::from_utf8_lossy(&one[*name]), String::from_utf8_lossy(&two[*name]));
        let line = a.lines().zip(b.lines()).find(|(x, y)| x != y);
        return Err(format!("outputs differ between runs: {differing:?}; first differing line {line:?}"));
    }
    let evaluation: serde_json::Value =
        serde_json::from_slice(&one["evaluation.json"]).map_err(|e| e.to_string())?;
    Ok(format!(
        "10 reports x 6 sentences, {} files byte-identical; cider {:.3}, CE F1 {:.3}",
        one.len(),
        evaluation["nlg"]["cider"].as_f64().unwrap_or(f64::NAN),
        evaluation["ce"]["f1"].as_f64().unwrap_or(f64::NAN)
    ))
}

fn curation_bookkeeping() -> Outcome {
    let mut rng = StdRng::seed_from_u64(50);
    let states = [
        ObservationState::Positive,
        ObservationState::Negative,
        ObservationState::Uncertain,
        ObservationState::Unmentioned,
    ];
    let studies: Vec<mrgagents::Study> = (0..12)
        .map(|i| mrgagents::Study {
            id: format!("s{i}"),
            split: Split::ALL[i % 3],
            report_text: "x".into(),
            image_refs: vec![format!("s{i}.png")],
        })
        .collect();
    let labeled: Vec<LabeledSentence> = (0..50)
        .map(|i| {
            let mut map = CategoryMap::filled(ObservationState::Unmentioned);
            for c in DiseaseCategory::AGENT_BEARING {
                map[c] = states[rng.random_range(0..4)];
            }
            let finding = DiseaseCategory::AGENT_BEARING
                .iter()
                .any(|&c| matches!(map[c], ObservationState::Positive | ObservationState::Uncertain));
            map[DiseaseCategory::NoFinding] = if finding {
                ObservationState::Unmentioned
            } else {
                ObservationState::Positive
            };
            let study = format!("s{}", rng.random_range(0..studies.len()));
            LabeledSentence::new(Sentence::new(study, i, format!("sentence {i}")), map).unwrap()
        })
        .collect();
    let subsets = build_subsets(&studies, &labeled).map_err(|e| e.to_string())?;
    let table = distribution_stats(&labeled, &studies).map_err(|e| e.to_string())?;
    let definite = |s: ObservationState| matches!(s, ObservationState::Positive | ObservationState::Negative);
    let mentions: usize = labeled
        .iter()
        .map(|l| DiseaseCategory::AGENT_BEARING.iter().filter(|&&c| definite(l.state(c))).count())
        .sum();
    check(subsets.total_entries() == mentions, format!("{} entries vs {mentions} mentions", subsets.total_entries()))?;
    for c in DiseaseCategory::AGENT_BEARING {
        let by_split: u64 = Split::ALL.iter().map(|&s| table.count(c, s)).sum();
        check(subsets.get(c).len() as u64 == by_split, format!("{c}: subset vs table"))?;
        check(by_split == table.category_total(c), format!("{c}: row total"))?;
    }
    let grand_by_split: u64 = Split::ALL.iter().map(|&s| table.split_total(s)).sum();
    let grand_by_category: u64 = DiseaseCategory::ALL.iter().map(|&c| table.category_total(c)).sum();
    check(grand_by_split == grand_by_category, "grand totals differ")?;
    let no_finding = labeled
        .iter()
        .filter(|l| l.state(DiseaseCategory::NoFinding) == ObservationState::Positive)
        .count() as u64;
    check(
        grand_by_category == mentions as u64 + no_finding,
        "table total is not mentions plus No Finding",
    )?;
    Ok(format!("50 sentences, {mentions} subset entries, table total {grand_by_category}"))
}

/// IU X-ray (train, validation, test) counts per category.
const IU_XRAY_TABLE: [(DiseaseCategory, [u64; 3]); 14] = [
    (DiseaseCategory::EnlargedCardiomediastinum, [1546, 244, 452]),
    (DiseaseCategory::Cardiomegaly, [2486, 378, 720]),
    (DiseaseCategory::LungOpacity, [2660, 362, 762]),
    (DiseaseCategory::LungLesion, [310, 50, 100]),
    (DiseaseCategory::Edema, [1704, 228, 460]),
    (DiseaseCategory::Consolidation, [242, 32, 70]),
    (DiseaseCategory::Pneumonia, [1396, 222, 416]),
    (DiseaseCategory::Atelectasis, [162, 26, 50]),
    (DiseaseCategory::Pneumothorax, [176, 20, 38]),
    (DiseaseCategory::PleuralEffusion, [3044, 436, 860]),
    (DiseaseCategory::PleuralOther, [3180, 456, 904]),
    (DiseaseCategory::Fracture, [38, 4, 8]),
    (DiseaseCategory::SupportDevices, [202, 28, 50]),
    (DiseaseCategory::NoFinding, [230, 38, 68]),
];

/// `None` when the external resources are not configured.
fn iu_xray_distribution() -> Option<Outcome> {
    let corpus = std::env::var("MRGAGENTS_IU_XRAY_CORPUS").ok()?;
    let endpoint = std::env::var("MRGAGENTS_LABELER_URL").ok()?;
    Some((|| {
        let studies = load_corpus(Path::new(&corpus), CorpusFormat::Jsonl).map_err(|e| e.to_string())?;
        let endpoint = endpoint.parse().map_err(|e| format!("MRGAGENTS_LABELER_URL: {e}"))?;
        let labeler = Labeler::from_backend(&LabelerBackend::Remote {
            endpoint,
            timeout_ms: 120_000,
        })
        .map_err(|e| e.to_string())?;
        let sentences: Vec<_> = studies.iter().flat_map(|s| s.sentences()).collect();
        let labeled = runtime()
            .block_on(labeler.label_batch(&sentences))
            .map_err(|e| e.to_string())?;
        let table = distribution_stats(&labeled, &studies).map_err(|e| e.to_string())?;
        let mut mismatches = Vec::new();
        for (category, expected) in IU_XRAY_TABLE {
            for (split, want) in Split::ALL.into_iter().zip(expected) {
                let got = table.count(category, split);
                if got != want {
                    mismatches.push(format!("{category}/{}: {got} != {want}", split.as_str()));
                }
            }
        }
        check(mismatches.is_empty(), mismatches.join("; "))?;
        Ok("all 42 counts match".to_string())
    })())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("metric-identity", metric_identity),
        ("oracle-equivalence", oracle_equivalence),
        ("rouge-hand-case", rouge_hand_case),
        ("ce-hand-case", ce_hand_case),
        ("selection-anti-redundancy", selection_anti_redundancy),
        ("fanout-isolation-latency", fanout_latency),
        ("end-to-end-fixture", end_to_end),
        ("curation-bookkeeping", curation_bookkeeping),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name:<28} {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name:<28} {reason}");
            }
        }
    }
    match iu_xray_distribution() {
        None => println!(
            "SKIP  {:<28} gated: set MRGAGENTS_IU_XRAY_CORPUS and MRGAGENTS_LABELER_URL",
            "iu-xray-distribution"
        ),
        Some(Ok(detail)) => println!("PASS  {:<28} {detail}", "iu-xray-distribution"),
        Some(Err(reason)) => {
            failed += 1;
            println!("FAIL  {:<28} {reason}", "iu-xray-distribution");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
