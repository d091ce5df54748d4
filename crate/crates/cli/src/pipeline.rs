//! Experiment stages and the full run.

use std::fs;
use std::path::{Path, PathBuf};

use creole_lm::corpus::{
    build_mixed_dataset, load_dictionary, load_plaintext_corpus, load_tagged_corpus, split_train_dev,
    write_dataset_tsv, Corpus, GroupedDataset,
};
use creole_lm::divergence::{pad_table, proxy_a_distance, PadRow};
use creole_lm::eval::tagging::{evaluate_tagger, finetune_tagger, FinetuneOptions};
use creole_lm::eval::{evaluate_intrinsic, EvalReport};
use creole_lm::langid::{annotate_groups, language_distribution_report, train_identifier, GroupStrategy, Identifier};
use creole_lm::nnet::{build_vocab, load_checkpoint, AdamWConfig, Vocab};
use creole_lm::objective::{train, TrainOutcome};
use creole_lm::table::{fmt_f64, Table};
use creole_lm::Encoder;
use thiserror::Error;

use crate::config::{ExperimentConfig, Regime};
use crate::manifest::write_manifest;

pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: &'static str, cause: String },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Invalid(_) => 1,
            RunError::Stage { .. } => 2,
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> RunResult<T>;
}

impl<T, E: std::fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> RunResult<T> {
        self.map_err(|e| RunError::Stage {
            stage,
            cause: e.to_string(),
        })
    }
}

/// Reads a config, applies `--out` / `--seed` overrides and validates it.
pub fn load_config(path: &Path, out: Option<&Path>, seed: Option<u64>) -> RunResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| RunError::Invalid(vec![e]))?;
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let errors = cfg.check();
    if !errors.is_empty() {
        return Err(RunError::Invalid(errors));
    }
    Ok(cfg)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> RunResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).stage("output")?;
    }
    fs::write(path, contents)
        .map_err(|e| format!("{}: {e}", path.display()))
        .stage("output")
}

fn write_table(out: &Path, stem: &str, table: &Table) -> RunResult<()> {
    write(&out.join(format!("{stem}.tsv")), table.to_tsv())?;
    write(&out.join(format!("{stem}.txt")), table.to_aligned())
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: GroupedDataset,
    pub dev: Corpus,
    pub vocab: Vocab,
    pub identifier: Option<Identifier>,
}

pub fn load_identifier(path: &Path) -> RunResult<Identifier> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))
        .stage("langid")?;
    serde_json::from_str(&text).stage("langid")
}

pub fn save_identifier(path: &Path, id: &Identifier) -> RunResult<()> {
    write(path, serde_json::to_string(id).expect("identifier serializes"))
}

/// Trains a character n-gram identifier on the auxiliary corpora.
pub fn langid_train(cfg: &ExperimentConfig) -> RunResult<Identifier> {
    let corpora = cfg
        .data
        .auxiliary
        .iter()
        .map(|a| load_plaintext_corpus(&a.path, &a.language))
        .collect::<Result<Vec<_>, _>>()
        .stage("load")?;
    if corpora.is_empty() {
        return Err(RunError::Stage {
            stage: "langid",
            cause: "no auxiliary corpora to train on".into(),
        });
    }
    train_identifier(&corpora, cfg.langid.n_max, cfg.langid.alpha).stage("langid")
}

/// Confidence histograms of the creole corpus under the identifier.
pub fn langid_report(cfg: &ExperimentConfig) -> RunResult<Table> {
    let id = match &cfg.grouping.identifier {
        Some(p) => load_identifier(p)?,
        None => langid_train(cfg)?,
    };
    let creole = load_plaintext_corpus(&cfg.data.creole, &cfg.data.creole_language).stage("load")?;
    language_distribution_report(&creole, &id).stage("langid")
}

/// load -> mix -> split -> group -> vocabulary.
pub fn prepare_data(cfg: &ExperimentConfig) -> RunResult<Prepared> {
    let d = &cfg.data;
    let creole = load_plaintext_corpus(&d.creole, &d.creole_language).stage("load")?;
    let corpus = match d.regime {
        Regime::Mixed => {
            let aux = d
                .auxiliary
                .iter()
                .map(|a| load_plaintext_corpus(&a.path, &a.language))
                .collect::<Result<Vec<_>, _>>()
                .stage("load")?;
            build_mixed_dataset(&creole, &aux, &cfg.mix_policy()).stage("mix")?
        }
        Regime::CreoleOnly => creole,
    };
    let (train_corpus, dev) = split_train_dev(&corpus, cfg.dev_size(), cfg.seed).stage("split")?;
    let identifier = match &cfg.grouping.identifier {
        Some(p) => Some(load_identifier(p)?),
        None => None,
    };
    let mut options = cfg.grouping_options();
    let needs_identifier = options.strategy == GroupStrategy::Language && d.regime == Regime::CreoleOnly;
    if needs_identifier && identifier.is_none() {
        // groups only matter to DRO, which validation already covers
        log::info!("no identifier for creole-only language grouping; using a single group");
        options.strategy = GroupStrategy::One;
    }
    let train = annotate_groups(&train_corpus, identifier.as_ref(), &options).stage("group")?;
    let vocab = build_vocab(&train.corpus, d.vocab_size, d.min_count).stage("vocab")?;
    Ok(Prepared {
        train,
        dev,
        vocab,
        identifier,
    })
}

pub fn write_prepared(out: &Path, p: &Prepared) -> RunResult<()> {
    let data = out.join("data");
    fs::create_dir_all(&data).stage("output")?;
    write_dataset_tsv(data.join("train.tsv"), &p.train.corpus, Some(&p.train.group_ids)).stage("output")?;
    write_dataset_tsv(data.join("dev.tsv"), &p.dev, None).stage("output")?;
    p.vocab.write(data.join("vocab.txt")).stage("output")?;
    let mut groups = Table::new(["group", "label", "size"]);
    for (g, (label, size)) in p.train.group_labels.iter().zip(p.train.group_sizes()).enumerate() {
        groups.push([g.to_string(), label.clone(), size.to_string()]);
    }
    write(&data.join("groups.tsv"), groups.to_tsv())?;
    if let Some(id) = &p.identifier {
        save_identifier(&out.join("langid.json"), id)?;
    }
    Ok(())
}

/// Trains with checkpoints and the log written under `out`.
pub fn train_stage(cfg: &ExperimentConfig, p: &Prepared, out: &Path) -> RunResult<TrainOutcome<f32>> {
    let tc = cfg.train_config();
    let ckpt = out.join("checkpoints");
    fs::create_dir_all(&ckpt).stage("train")?;
    write(&ckpt.join("run_config.toml"), toml::to_string(&tc).expect("train config serializes"))?;
    let outcome = train::<f32>(&p.train, &p.vocab, Some(&p.dev), &tc, Some(&ckpt)).stage("train")?;
    outcome.log.write_tsv(out.join("training_log.tsv")).stage("train")?;
    Ok(outcome)
}

pub fn intrinsic_stage(cfg: &ExperimentConfig, model: &Encoder, vocab: &Vocab, dev: &Corpus) -> RunResult<EvalReport> {
    let dict = match &cfg.eval.dictionary {
        Some(p) => Some(load_dictionary(p).stage("eval")?),
        None => None,
    };
    let model_id = format!("{}-{}", cfg.train.objective, cfg.grouping.strategy);
    let dataset_id = match cfg.data.regime {
        Regime::Mixed => "mixed-language",
        Regime::CreoleOnly => "creole-only",
    };
    evaluate_intrinsic(
        model,
        vocab,
        dev,
        dict.as_ref(),
        &cfg.eval.ks,
        cfg.seed,
        &model_id,
        dataset_id,
    )
    .stage("eval")
}

/// Fine-tunes and scores a tagger when tagged data is configured.
pub fn tagging_stage(cfg: &ExperimentConfig, model: &Encoder, vocab: &Vocab) -> RunResult<Option<Table>> {
    let e = &cfg.eval;
    let (Some(scheme), Some(tr), Some(dv), Some(te)) = (e.tag_scheme, &e.tagged_train, &e.tagged_dev, &e.tagged_test)
    else {
        return Ok(None);
    };
    let train = load_tagged_corpus(tr, scheme).stage("tag")?;
    let dev = load_tagged_corpus(dv, scheme).stage("tag")?;
    let test = load_tagged_corpus(te, scheme).stage("tag")?;
    let options = FinetuneOptions {
        epochs: e.tag_epochs,
        batch_size: e.tag_batch_size,
        optimizer: AdamWConfig {
            lr: e.tag_lr,
            ..AdamWConfig::default()
        },
        seed: cfg.seed,
    };
    let (tagger, history) = finetune_tagger(model, vocab, &train, &dev, &options).stage("tag")?;
    let metrics = evaluate_tagger(&tagger, vocab, &test).stage("tag")?;
    let mut t = Table::new(["split", "epoch", "train_loss", "accuracy", "precision", "recall", "f1"]);
    let span_cells = |m: &creole_lm::eval::TaggingMetrics| match m.span {
        Some(s) => [fmt_f64(s.precision), fmt_f64(s.recall), fmt_f64(s.f1)],
        None => ["-".to_string(), "-".to_string(), "-".to_string()],
    };
    for h in &history {
        let mut row = vec!["dev".to_string(), h.epoch.to_string(), fmt_f64(h.train_loss), fmt_f64(h.dev.accuracy)];
        row.extend(span_cells(&h.dev));
        t.push(row);
    }
    let mut row = vec!["test".to_string(), "best".into(), "-".into(), fmt_f64(metrics.accuracy)];
    row.extend(span_cells(&metrics));
    t.push(row);
    Ok(Some(t))
}

pub fn pad_stage(cfg: &ExperimentConfig, model: &Encoder, vocab: &Vocab) -> RunResult<Option<Table>> {
    if cfg.divergence.pairs.is_empty() {
        return Ok(None);
    }
    let mut rows = Vec::new();
    for pair in &cfg.divergence.pairs {
        let d1 = load_plaintext_corpus(&pair.path_1, &pair.domain_1).stage("pad")?;
        let d2 = load_plaintext_corpus(&pair.path_2, &pair.domain_2).stage("pad")?;
        let result = proxy_a_distance(&d1, &d2, model, vocab, cfg.seed, cfg.divergence.split_ratio).stage("pad")?;
        rows.push(PadRow {
            language: pair.language.clone(),
            domain_1: pair.domain_1.clone(),
            domain_2: pair.domain_2.clone(),
            result,
        });
    }
    Ok(Some(pad_table(&rows)))
}

pub fn load_model(out: &Path, checkpoint: Option<&Path>) -> RunResult<(Encoder, Vocab)> {
    let ckpt = checkpoint.map_or_else(|| out.join("checkpoints").join("best.ckpt"), Path::to_path_buf);
    let (_, model) = load_checkpoint::<f32>(&ckpt).stage("load")?;
    let vocab = Vocab::read(out.join("data").join("vocab.txt")).stage("load")?;
    if vocab.len() != model.vocab_size() {
        return Err(RunError::Stage {
            stage: "load",
            cause: format!("{} does not match the vocabulary in {}", ckpt.display(), out.display()),
        });
    }
    Ok((model, vocab))
}

pub fn load_dev(out: &Path) -> RunResult<Corpus> {
    creole_lm::corpus::read_dataset_tsv(out.join("data").join("dev.tsv"))
        .map(|(c, _)| c)
        .stage("load")
}

/// Writes a `FAILED` marker naming the stage; partial outputs stay in place.
pub fn guarded<T>(out: &Path, f: impl FnOnce() -> RunResult<T>) -> RunResult<T> {
    let _ = fs::remove_file(out.join(FAILED_MARKER));
    let result = f();
    if let Err(e) = &result {
        if fs::create_dir_all(out).is_ok() {
            let _ = fs::write(out.join(FAILED_MARKER), format!("{e}\n"));
        }
    }
    result
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub report: EvalReport,
    pub best_step: usize,
}

/// Training and intrinsic evaluation only, for sweeps.
pub fn run_core(cfg: &ExperimentConfig) -> RunResult<RunSummary> {
    let out = cfg.output_dir.clone();
    guarded(&out, || {
        fs::create_dir_all(&out).stage("output")?;
        write(&out.join("config.toml"), cfg.to_toml())?;
        let prepared = prepare_data(cfg)?;
        write_prepared(&out, &prepared)?;
        let outcome = train_stage(cfg, &prepared, &out)?;
        let report = intrinsic_stage(cfg, &outcome.params, &prepared.vocab, &prepared.dev)?;
        write_table(&out, "report", &EvalReport::table(std::slice::from_ref(&report)))?;
        write_manifest(&out, cfg).stage("manifest")?;
        Ok(RunSummary {
            out: out.clone(),
            report,
            best_step: outcome.best_step,
        })
    })
}

/// The whole pipeline: data, training, intrinsic evaluation, then tagging
/// and proxy A-distance when configured, and a manifest of every artifact.
pub fn run_experiment_config(cfg: &ExperimentConfig) -> RunResult<RunSummary> {
    let out = cfg.output_dir.clone();
    guarded(&out, || {
        fs::create_dir_all(&out).stage("output")?;
        write(&out.join("config.toml"), cfg.to_toml())?;
        let prepared = prepare_data(cfg)?;
        write_prepared(&out, &prepared)?;
        let outcome = train_stage(cfg, &prepared, &out)?;
        let report = intrinsic_stage(cfg, &outcome.params, &prepared.vocab, &prepared.dev)?;
        write_table(&out, "report", &EvalReport::table(std::slice::from_ref(&report)))?;
        if let Some(t) = tagging_stage(cfg, &outcome.params, &prepared.vocab)? {
            write_table(&out, "tagging", &t)?;
        }
        if let Some(t) = pad_stage(cfg, &outcome.params, &prepared.vocab)? {
            write_table(&out, "pad", &t)?;
        }
        write_manifest(&out, cfg).stage("manifest")?;
        Ok(RunSummary {
            out: out.clone(),
            report,
            best_step: outcome.best_step,
        })
    })
}

pub fn run_experiment(config: &Path) -> RunResult<PathBuf> {
    let cfg = load_config(config, None, None)?;
    run_experiment_config(&cfg).map(|s| s.out)
}
