//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use creole_cli::config::ExperimentConfig;
use creole_cli::manifest::read_manifest;
use creole_cli::pipeline::{load_config, run_core, run_experiment_config};
use creole_cli::sweep::{run_sweep, SweepAxis};
use creole_lm::corpus::{build_mixed_dataset, load_plaintext_corpus, Corpus, GroupedDataset, MixPolicy};
use creole_lm::divergence::{pad_from_error, pad_table, proxy_a_distance, PadRow};
use creole_lm::eval::intrinsic::sentence_pseudo_log_probs;
use creole_lm::eval::{mean_pll, precision_at_k, span_f1, EvalReport, PrecisionReport, DEFAULT_KS};
use creole_lm::langid::{assign_group, train_identifier, ConfidenceMap, GroupStrategy};
use creole_lm::nnet::{
    build_vocab, grad_check, grad_check_with, init_encoder, loss_and_grad, MaskedBatch, SizePreset,
    TokenBatch, Vocab, MASK_ID,
};
use creole_lm::objective::{dro_update, train, GroupWeights, Objective, TrainConfig};
use creole_lm::synth::{SyntheticLanguage, CYRILLIC, GREEK, KANA, LATIN};
use creole_lm::Encoder64;

type Outcome = Result<String, String>;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_config() -> PathBuf {
    workspace().join("fixtures/experiment.toml")
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Precision lists seen anywhere in the suite, for the monotonicity check.
#[derive(Default)]
struct Seen {
    runs: Vec<(String, Vec<f64>)>,
}

impl Seen {
    fn report(&mut self, name: &str, r: &EvalReport) {
        self.runs.push((format!("{name} P"), r.p_at_k.values().copied().collect()));
        if !r.pd_at_k.is_empty() {
            self.runs.push((format!("{name} P_D"), r.pd_at_k.values().copied().collect()));
        }
    }

    fn precision(&mut self, name: &str, r: &PrecisionReport) {
        self.runs.push((name.to_string(), r.ks.iter().map(|&k| r.precision(k).unwrap()).collect()));
    }
}

// 1
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let params = init_encoder::<f64>(SizePreset::Tiny, 60, 21).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seqs: Vec<Vec<u32>> = (0..4)
        .map(|_| (0..rng.random_range(5..10)).map(|_| rng.random_range(3..60)).collect())
        .collect();
    let mut tokens = TokenBatch::from_sequences(&seqs).unwrap();
    let mut positions = Vec::new();
    let mut originals = Vec::new();
    for (b, s) in seqs.iter().enumerate() {
        for t in [0, s.len() / 2] {
            positions.push((b, t));
            originals.push(s[t]);
            tokens.ids[[b, t]] = MASK_ID;
        }
    }
    let batch = MaskedBatch {
        tokens,
        positions,
        originals,
    };
    let report = grad_check(&params, &batch, 1e-4, 200, 8).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    // corrupted attention gradients must be caught
    let control = grad_check_with(&params, &batch, 1e-4, 200, 8, |p: &Encoder64, b| {
        let (_, mut g) = loss_and_grad(p, b)?;
        for layer in &mut g.layers {
            for w in [&mut layer.wq, &mut layer.wk, &mut layer.wv, &mut layer.wo] {
                w.mapv_inplace(|v| v * 1.1);
            }
        }
        Ok(g)
    })
    .map_err(|e| e.to_string())?;
    let detail = format!(
        "max rel error {:.2e} (worst {:?}) over {} coords in {:.1?}; corrupted control {:.2e}",
        report.max_rel_error,
        report.worst.as_ref().map(|w| (&w.tensor, w.analytic, w.numeric)),
        report.checked.len(),
        elapsed,
        control.max_rel_error
    );
    ensure(
        report.max_rel_error < 1e-4 && elapsed < Duration::from_secs(60) && control.max_rel_error > 1e-2,
        detail,
    )
}

fn with_overrides(out: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<ExperimentConfig, String> {
    let mut cfg = load_config(&fixture_config(), Some(out), None).map_err(|e| e.to_string())?;
    edit(&mut cfg);
    cfg.eval.tag_scheme = None;
    cfg.eval.tagged_train = None;
    cfg.eval.tagged_dev = None;
    cfg.eval.tagged_test = None;
    cfg.divergence.pairs.clear();
    let errors = cfg.check();
    ensure(errors.is_empty(), errors.join("; "))?;
    Ok(cfg)
}

fn log_losses(dir: &Path) -> Vec<f64> {
    std::fs::read_to_string(dir.join("training_log.tsv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect()
}

// 2
fn dro_one_matches_erm(tmp: &Path, seen: &mut Seen) -> Outcome {
    let run = |objective: Objective, name: &str| -> Result<(Vec<f64>, EvalReport), String> {
        let cfg = with_overrides(&tmp.join(name), |c| {
            c.train.objective = objective;
            c.grouping.strategy = GroupStrategy::One;
            c.train.steps = 200;
        })?;
        let summary = run_core(&cfg).map_err(|e| e.to_string())?;
        Ok((log_losses(&summary.out), summary.report))
    };
    let (erm_losses, erm) = run(Objective::Erm, "erm")?;
    let (dro_losses, dro) = run(Objective::Dro, "dro-one")?;
    seen.report("erm", &erm);
    seen.report("dro-one", &dro);
    let max_step_gap = erm_losses
        .iter()
        .zip(&dro_losses)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pll_gap = (erm.pll - dro.pll).abs();
    ensure(
        erm_losses.len() == 200 && dro_losses.len() == 200 && max_step_gap < 1e-6 && pll_gap < 1e-4,
        format!("max per-step loss gap {max_step_gap:.2e}, PLL gap {pll_gap:.2e}"),
    )
}

// 3
fn dro_closed_form() -> Outcome {
    let q = GroupWeights::uniform(2, 1.0).map_err(|e| e.to_string())?;
    let (next, _) = dro_update(&q, &[Some(1.0), Some(2.0)]).map_err(|e| e.to_string())?;
    let (e1, e2) = (1f64.exp(), 2f64.exp());
    let expected = [e1 / (e1 + e2), e2 / (e1 + e2)];
    let gap = (next.q[0] - expected[0]).abs().max((next.q[1] - expected[1]).abs());
    let printed = (next.q[0] - 0.26894).abs() < 5e-6 && (next.q[1] - 0.73106).abs() < 5e-6;
    ensure(
        gap < 1e-9 && printed,
        format!("q' = ({:.5}, {:.5}), gap to closed form {gap:.1e}", next.q[0], next.q[1]),
    )
}

/// Wilson score interval at 99%.
fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let z = 2.5758293035489;
    let p = hits as f64 / n as f64;
    let n = n as f64;
    let centre = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n);
    (centre - half, centre + half)
}

// 4
fn uniform_model(seen: &mut Seen) -> Outcome {
    const V: usize = 1000;
    let words: Vec<String> = (0..V - 3).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let lines: Vec<String> = (0..10_000)
        .map(|_| {
            let n = rng.random_range(3..9);
            (0..n).map(|_| words[rng.random_range(0..words.len())].as_str()).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let corpus = Corpus::from_lines("uniform", "creole:u", lines).map_err(|e| e.to_string())?;
    let vocab = build_vocab(&corpus, V, 1).map_err(|e| e.to_string())?;
    ensure(vocab.len() == V, format!("vocabulary has {} entries", vocab.len()))?;
    let mut model = init_encoder::<f32>(SizePreset::Tiny, V, 3).map_err(|e| e.to_string())?;
    model.token_embedding.fill(0.0);
    model.output_bias.fill(0.0);

    let ids = vocab.tokenize(&corpus.sentences[0].text, 64);
    let per_position = sentence_pseudo_log_probs(&model, &ids).map_err(|e| e.to_string())?;
    let lnv = (V as f64).ln();
    let worst_position = per_position.iter().map(|lp| (lp + lnv).abs()).fold(0.0, f64::max);
    let small = Corpus::from_sentences("uniform-small", corpus.sentences[..200].to_vec()).unwrap();
    let pll = mean_pll(&model, &vocab, &small).map_err(|e| e.to_string())?.pll;
    let p = precision_at_k(&model, &vocab, &corpus, &DEFAULT_KS, 5).map_err(|e| e.to_string())?;
    seen.precision("uniform model P", &p);
    let hits = p.hits[0];
    let (lo, hi) = wilson(hits, p.evaluated);
    let chance = 1.0 / V as f64;
    ensure(
        worst_position < 1e-6 && (pll - lnv).abs() < 1e-6 && p.evaluated >= 10_000 && lo <= chance && chance <= hi,
        format!(
            "log-prob error {worst_position:.1e}, PLL {pll:.6} vs ln|V| {lnv:.6}, P@1 {hits}/{} with 99% CI [{lo:.5}, {hi:.5}]",
            p.evaluated
        ),
    )
}

// 5
fn memorization(seen: &mut Seen) -> Outcome {
    let start = Instant::now();
    let corpus = load_plaintext_corpus(workspace().join("fixtures/data/memorize.txt"), "creole:toy")
        .map_err(|e| e.to_string())?;
    let vocab = build_vocab(&corpus, 1000, 1).map_err(|e| e.to_string())?;
    let data = GroupedDataset {
        group_ids: vec![0; corpus.len()],
        group_count: 1,
        group_labels: vec!["all".into()],
        corpus: corpus.clone(),
    };
    let config = TrainConfig {
        steps: 2000,
        lr: 1e-3,
        seed: 1,
        preset: SizePreset::Tiny,
        ..TrainConfig::default()
    };
    let out = train::<f32>(&data, &vocab, None, &config, None).map_err(|e| e.to_string())?;
    let p = precision_at_k(&out.params, &vocab, &corpus, &DEFAULT_KS, 0).map_err(|e| e.to_string())?;
    seen.precision("memorization P", &p);
    let elapsed = start.elapsed();
    let p1 = p.precision(1).unwrap();
    ensure(
        corpus.len() == 64 && p1 >= 0.95 && elapsed < Duration::from_secs(300),
        format!("train P@1 {p1:.4} after 2000 steps in {elapsed:.1?}"),
    )
}

// 6
fn monotonicity(seen: &Seen) -> Outcome {
    let bad: Vec<&str> = seen
        .runs
        .iter()
        .filter(|(_, v)| v.windows(2).any(|w| w[0] > w[1]))
        .map(|(n, _)| n.as_str())
        .collect();
    ensure(
        bad.is_empty() && seen.runs.len() >= 10,
        format!("{} precision curves checked, violations: {bad:?}", seen.runs.len()),
    )
}

// 7
fn group_assignment() -> Outcome {
    let order = ["en", "zh", "ms", "ta"].map(String::from).to_vec();
    let conf = ConfidenceMap::new(order.clone(), vec![0.8819, 0.0001, 0.0434, 0.0004]).map_err(|e| e.to_string())?;
    let a = assign_group(&conf, 0.001);
    ensure(
        a.present_languages == ["en", "ms"] && a.group_id == 5,
        format!("present {:?}, group {}", a.present_languages, a.group_id),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>().powi(3)).collect();
        let total: f64 = raw.iter().sum();
        let conf = ConfidenceMap::new(order.clone(), raw.iter().map(|v| v / total).collect()).unwrap();
        let (t1, t2) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let at_lo: BTreeSet<String> = assign_group(&conf, lo).present_languages.into_iter().collect();
        let at_hi: BTreeSet<String> = assign_group(&conf, hi).present_languages.into_iter().collect();
        if !at_hi.is_subset(&at_lo) {
            return Err(format!("threshold {hi} keeps {at_hi:?}, {lo} keeps {at_lo:?}"));
        }
    }
    Ok("present {en, ms}, group 5; 1000 random vectors monotone in threshold".into())
}

// 8
fn mixing_arithmetic() -> Outcome {
    let make = |tag: &str, n: usize| Corpus::from_lines(tag, tag, (0..n).map(|i| format!("{tag} s{i}"))).unwrap();
    let creole = make("creole:pcm", 67_615);
    let aux = [make("en", 100_000), make("pt", 90_000), make("yo", 28_695)];
    let mixed = build_mixed_dataset(&creole, &aux, &MixPolicy::default()).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = ["creole:pcm", "en", "pt", "yo"].iter().map(|t| mixed.count_language(t)).collect();
    ensure(
        mixed.len() == 230_105 && counts == [67_615, 67_615, 67_615, 27_260],
        format!("total {} with per-language counts {counts:?}", mixed.len()),
    )
}

// 9
fn pad_sanity() -> Outcome {
    let lang = SyntheticLanguage::with_alphabet("creole:p", LATIN, 40, 31);
    let other = SyntheticLanguage::with_alphabet("q", KANA, 40, 32);
    let same_1 = Corpus::from_lines("same-1", "creole:p", lang.sentences(1000, 1)).unwrap();
    let same_2 = Corpus::from_lines("same-2", "creole:p", lang.sentences(1000, 2)).unwrap();
    let far = Corpus::from_lines("far", "q", other.sentences(1000, 3)).unwrap();
    let texts: Vec<&str> = same_1.texts().chain(same_2.texts()).chain(far.texts()).collect();
    let vocab = Vocab::build(texts, 5000, 1).map_err(|e| e.to_string())?;
    let model = init_encoder::<f32>(SizePreset::Tiny, vocab.len(), 5).map_err(|e| e.to_string())?;
    let same = proxy_a_distance(&same_1, &same_2, &model, &vocab, 3, 0.8).map_err(|e| e.to_string())?;
    let disjoint = proxy_a_distance(&same_1, &far, &model, &vocab, 3, 0.8).map_err(|e| e.to_string())?;
    let table = pad_table(&[PadRow {
        language: "p".into(),
        domain_1: "same-1".into(),
        domain_2: "far".into(),
        result: disjoint,
    }]);
    ensure(
        same.pad <= 0.3
            && disjoint.pad >= 1.5
            && pad_from_error(0.125) == 1.5
            && table.headers == ["language", "domain-1", "domain-2", "PAD"],
        format!(
            "same-distribution PAD {:.3} (eps {:.3}), disjoint PAD {:.3}, eps 0.125 -> {}",
            same.pad,
            same.epsilon,
            disjoint.pad,
            pad_from_error(0.125)
        ),
    )
}

// 10
fn langid_quality() -> Outcome {
    let langs = [
        SyntheticLanguage::with_alphabet("l-latin", LATIN, 120, 41),
        SyntheticLanguage::with_alphabet("l-greek", GREEK, 120, 42),
        SyntheticLanguage::with_alphabet("l-cyrillic", CYRILLIC, 120, 43),
        SyntheticLanguage::with_alphabet("l-kana", KANA, 120, 44),
    ];
    let train: Vec<Corpus> = langs.iter().map(|l| l.corpus(200, 1).unwrap()).collect();
    let id = train_identifier(&train, 3, 0.5).map_err(|e| e.to_string())?;
    let mut correct = 0;
    let mut total = 0;
    for l in &langs {
        for s in l.sentences(50, 2) {
            total += 1;
            correct += usize::from(id.identify_text(&s).argmax() == l.tag);
        }
    }
    let acc = correct as f64 / total as f64;
    ensure(acc >= 0.95, format!("held-out accuracy {acc:.4} over {total} sentences"))
}

/// Exhaustive span search, independent of the library's extractor.
fn oracle_spans(labels: &[&str]) -> BTreeSet<(usize, usize, String)> {
    let mut out = BTreeSet::new();
    let n = labels.len();
    for i in 0..n {
        for j in i..n {
            let Some(ty) = labels[i].get(2..) else { continue };
            let opens = labels[i] == format!("B-{ty}")
                || (labels[i] == format!("I-{ty}")
                    && (i == 0 || (labels[i - 1] != format!("B-{ty}") && labels[i - 1] != format!("I-{ty}"))));
            let inside = (i + 1..=j).all(|k| labels[k] == format!("I-{ty}"));
            let closes = j + 1 == n || labels[j + 1] != format!("I-{ty}");
            if opens && inside && closes {
                out.insert((i, j, ty.to_string()));
            }
        }
    }
    out
}

// 11
fn tagging_metrics() -> Outcome {
    let alphabet = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"];
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let random_seq = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let n = rng.random_range(0..25);
        (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string()).collect()
    };
    for trial in 0..1000 {
        let gold: Vec<Vec<String>> = (0..rng.random_range(1..4)).map(|_| random_seq(&mut rng)).collect();
        // predictions perturb the gold labels so overlaps are common
        let pred: Vec<Vec<String>> = gold
            .iter()
            .map(|g| {
                g.iter()
                    .map(|l| {
                        if rng.random_bool(0.2) {
                            alphabet[rng.random_range(0..alphabet.len())].to_string()
                        } else {
                            l.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let (mut tp, mut np, mut ng) = (0usize, 0usize, 0usize);
        for (g, p) in gold.iter().zip(&pred) {
            let gs = oracle_spans(&g.iter().map(String::as_str).collect::<Vec<_>>());
            let ps = oracle_spans(&p.iter().map(String::as_str).collect::<Vec<_>>());
            tp += gs.intersection(&ps).count();
            np += ps.len();
            ng += gs.len();
        }
        let prec = if np == 0 { 0.0 } else { tp as f64 / np as f64 };
        let rec = if ng == 0 { 0.0 } else { tp as f64 / ng as f64 };
        let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        let s = span_f1(&gold, &pred);
        if (s.true_positives, s.predicted, s.gold) != (tp, np, ng) || (s.f1 - f1).abs() > 1e-12 {
            return Err(format!("trial {trial}: library ({}, {}, {}) vs oracle ({tp}, {np}, {ng})", s.true_positives, s.predicted, s.gold));
        }
    }
    let gold = vec![["B-PER", "I-PER", "O", "B-LOC", "O"].map(String::from).to_vec()];
    let pred = vec![["B-PER", "I-PER", "O", "B-LOC", "I-LOC"].map(String::from).to_vec()];
    let micro = span_f1(&gold, &pred);
    ensure(
        micro.precision == 0.5 && micro.recall == 0.5 && micro.f1 == 0.5,
        format!("1000 random sequence sets agree with the oracle; micro example F1 = {}", micro.f1),
    )
}

// 12
fn end_to_end(tmp: &Path, seen: &mut Seen) -> Outcome {
    let start = Instant::now();
    let out = tmp.join("fixture-run");
    let cfg = load_config(&fixture_config(), Some(&out), None).map_err(|e| e.to_string())?;
    let first = run_experiment_config(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    seen.report("fixture run", &first.report);
    let m1 = read_manifest(&out).map_err(|e| e.to_string())?;
    let header = std::fs::read_to_string(out.join("report.tsv")).map_err(|e| e.to_string())?;
    let header: Vec<&str> = header.lines().next().unwrap_or("").split('\t').collect();
    let wanted = ["P@1", "P@5", "P@10", "P_D@1", "P_D@5", "P_D@10", "PLL"];
    let listed: BTreeSet<&str> = m1.artifacts.iter().map(|a| a.path.as_str()).collect();
    let required = ["report.tsv", "training_log.tsv", "checkpoints/best.ckpt"];
    ensure(
        wanted.iter().all(|w| header.contains(w)) && required.iter().all(|r| listed.contains(r)),
        format!("report columns {header:?}, artifacts {listed:?}"),
    )?;
    ensure(elapsed < Duration::from_secs(600), format!("fixture run took {elapsed:.1?}"))?;

    let second = run_experiment_config(&cfg).map_err(|e| e.to_string())?;
    seen.report("fixture rerun", &second.report);
    let m2 = read_manifest(&out).map_err(|e| e.to_string())?;
    ensure(m1 == m2, "re-run changed artifact hashes".into())?;

    let shape = |axis: SweepAxis, values: &[&str]| -> Result<Vec<(String, String)>, String> {
        let base = with_overrides(&tmp.join(format!("sweep-{axis}")), |c| c.train.steps = 20)?;
        let values: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let t = run_sweep(&base, axis, &values).map_err(|e| e.to_string())?;
        for row in &t.rows {
            let p1: f64 = row[2].parse().unwrap();
            ensure((0.0..=1.0).contains(&p1), format!("P@1 {p1} out of range"))?;
        }
        Ok(t.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect())
    };
    let presets = shape(SweepAxis::Preset, &["tiny", "small", "base"])?;
    let decays = shape(SweepAxis::WeightDecay, &["0.01", "0.05", "0.10", "0.30"])?;
    let count = |rows: &[(String, String)], obj: &str| rows.iter().filter(|r| r.0 == obj).count();
    let erm_decay: Vec<&str> = decays.iter().filter(|r| r.0 == "erm").map(|r| r.1.as_str()).collect();
    ensure(
        presets.len() == 6
            && count(&presets, "erm") == 3
            && count(&presets, "dro-language") == 3
            && decays.len() == 5
            && count(&decays, "dro-language") == 4
            && erm_decay == ["0.01"],
        format!(
            "fixture run {elapsed:.1?}, hashes reproduced; preset sweep {} rows, weight-decay sweep {} rows (ERM at {erm_decay:?})",
            presets.len(),
            decays.len()
        ),
    )
}

fn main() {
    // the default test harness flags are accepted and ignored
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut seen = Seen::default();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    // ACCEPTANCE_ONLY=1,9 restricts the run to the listed criteria
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|n| n.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut record = |n: usize, name: &'static str, r: Outcome| {
        eprintln!("[{n:>2}] {name}: done");
        results.push((n, name, r));
    };
    if wanted(1) {
        record(1, "gradient correctness", gradient_correctness());
    }
    if wanted(2) {
        record(2, "DRO-One equals ERM", dro_one_matches_erm(tmp.path(), &mut seen));
    }
    if wanted(3) {
        record(3, "DRO closed-form update", dro_closed_form());
    }
    if wanted(4) {
        record(4, "uniform-model analytics", uniform_model(&mut seen));
    }
    if wanted(5) {
        record(5, "memorization", memorization(&mut seen));
    }
    if wanted(7) {
        record(7, "group assignment", group_assignment());
    }
    if wanted(8) {
        record(8, "mixing arithmetic", mixing_arithmetic());
    }
    if wanted(9) {
        record(9, "PAD sanity", pad_sanity());
    }
    if wanted(10) {
        record(10, "language identification", langid_quality());
    }
    if wanted(11) {
        record(11, "tagging metrics", tagging_metrics());
    }
    if wanted(12) {
        record(12, "end-to-end", end_to_end(tmp.path(), &mut seen));
    }
    if wanted(6) {
        record(6, "metric monotonicity", monotonicity(&seen));
    }
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {n:>2}  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {n:>2}  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

