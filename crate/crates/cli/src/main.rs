use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use creole_cli::config::ExperimentConfig;
use creole_cli::manifest::write_manifest;
use creole_cli::pipeline::{
    guarded, intrinsic_stage, langid_report, langid_train, load_config, load_dev, load_model, pad_stage,
    prepare_data, run_experiment_config, save_identifier, tagging_stage, train_stage, write_prepared, RunError,
    RunResult,
};
use creole_cli::sweep::{run_sweep, SweepAxis};
use creole_lm::eval::EvalReport;
use creole_lm::table::Table;

#[derive(Parser)]
#[command(name = "creole-lm", version, about = "Masked language models for creole corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mix, split, group and build the vocabulary.
    BuildData,
    /// Train a language identifier on the auxiliary corpora.
    LangidTrain,
    /// Per-language confidence histograms over the creole corpus.
    LangidReport,
    /// Build data and train a model.
    Train,
    /// Intrinsic metrics of a trained model on the dev split.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Fine-tune and score a tagger on the configured tagged data.
    Tag {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Proxy A-distance for the configured domain pairs.
    Pad {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// One run per value and objective along an axis.
    Sweep {
        /// preset or weight_decay
        #[arg(long)]
        axis: String,
        /// Comma-separated values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
    },
    /// Check a config without running anything.
    Validate,
    /// The full pipeline.
    Run,
}

fn emit(out: &Path, stem: &str, table: &Table) -> RunResult<()> {
    let io = |e: std::io::Error| RunError::Stage {
        stage: "output",
        cause: e.to_string(),
    };
    std::fs::create_dir_all(out).map_err(io)?;
    std::fs::write(out.join(format!("{stem}.tsv")), table.to_tsv()).map_err(io)?;
    std::fs::write(out.join(format!("{stem}.txt")), table.to_aligned()).map_err(io)?;
    print!("{}", table.to_aligned());
    Ok(())
}

fn execute(cli: Cli) -> RunResult<()> {
    let path = cli
        .config
        .clone()
        .ok_or_else(|| RunError::Invalid(vec!["--config is required".into()]))?;
    let cfg: ExperimentConfig = load_config(&path, cli.out.as_deref(), cli.seed)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Validate => {
            println!("ok");
            Ok(())
        }
        Command::BuildData => guarded(&out, || write_prepared(&out, &prepare_data(&cfg)?)),
        Command::LangidTrain => guarded(&out, || {
            let id = langid_train(&cfg)?;
            save_identifier(&out.join("langid.json"), &id)?;
            println!("{}", out.join("langid.json").display());
            Ok(())
        }),
        Command::LangidReport => guarded(&out, || emit(&out, "langid_report", &langid_report(&cfg)?)),
        Command::Train => guarded(&out, || {
            let prepared = prepare_data(&cfg)?;
            write_prepared(&out, &prepared)?;
            let outcome = train_stage(&cfg, &prepared, &out)?;
            println!("best step {}", outcome.best_step);
            Ok(())
        }),
        Command::Eval { checkpoint } => guarded(&out, || {
            let (model, vocab) = load_model(&out, checkpoint.as_deref())?;
            let report = intrinsic_stage(&cfg, &model, &vocab, &load_dev(&out)?)?;
            emit(&out, "report", &EvalReport::table(&[report]))
        }),
        Command::Tag { checkpoint } => guarded(&out, || {
            let (model, vocab) = load_model(&out, checkpoint.as_deref())?;
            match tagging_stage(&cfg, &model, &vocab)? {
                Some(t) => emit(&out, "tagging", &t),
                None => Err(RunError::Invalid(vec!["eval: no tagged data configured".into()])),
            }
        }),
        Command::Pad { checkpoint } => guarded(&out, || {
            let (model, vocab) = load_model(&out, checkpoint.as_deref())?;
            match pad_stage(&cfg, &model, &vocab)? {
                Some(t) => emit(&out, "pad", &t),
                None => Err(RunError::Invalid(vec!["divergence.pairs is empty".into()])),
            }
        }),
        Command::Sweep { axis, values } => {
            let axis: SweepAxis = axis.parse().map_err(|e: String| RunError::Invalid(vec![e]))?;
            let values = values.unwrap_or_else(|| axis.default_values());
            let table = run_sweep(&cfg, axis, &values)?;
            print!("{}", table.to_aligned());
            Ok(())
        }
        Command::Run => {
            let summary = run_experiment_config(&cfg)?;
            println!("{}", summary.out.display());
            Ok(())
        }
    }
    .and_then(|()| match std::fs::exists(out.join(creole_cli::manifest::MANIFEST_FILE)) {
        // keep the manifest in step with whatever a subcommand added
        Ok(true) => write_manifest(&out, &cfg).map(|_| ()).map_err(|e| RunError::Stage {
            stage: "manifest",
            cause: e.to_string(),
        }),
        _ => Ok(()),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
