use std::path::{Path, PathBuf};
use std::process::Command;

use creole_cli::config::{ExperimentConfig, Regime};
use creole_cli::pipeline::{langid_train, load_identifier, save_identifier, FAILED_MARKER};
use creole_cli::sweep::{plan_sweep, SweepAxis};
use creole_cli::validate_config;
use creole_lm::langid::GroupStrategy;
use creole_lm::objective::Objective;

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/experiment.toml")
}

/// The fixture config with absolute paths, edited and written into `dir`.
fn write_config(dir: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> PathBuf {
    let mut cfg = ExperimentConfig::load(&fixture_config()).unwrap();
    cfg.output_dir = dir.join("out");
    edit(&mut cfg);
    let path = dir.join("experiment.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn binary(args: &[&str], config: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_creole-lm"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn shipped_fixture_validates() {
    let cfg = validate_config(&fixture_config()).unwrap();
    assert_eq!(cfg.train.objective, Objective::Dro);
    assert_eq!(cfg.data.auxiliary.len(), 3);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = ExperimentConfig::load(&fixture_config()).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn mask_rate_out_of_range_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), |c| c.train.mask_rate = 1.5);
    let errors = validate_config(&path).unwrap_err();
    assert!(errors.iter().any(|e| e.contains("mask_rate out of range")), "{errors:?}");
}

#[test]
fn dro_language_grouping_on_creole_only_data_needs_identifier() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), |c| {
        c.data.regime = Regime::CreoleOnly;
        c.grouping.strategy = GroupStrategy::Language;
        c.grouping.identifier = None;
    });
    let errors = validate_config(&path).unwrap_err();
    assert!(errors.iter().any(|e| e.contains("grouping.identifier")), "{errors:?}");
}

#[test]
fn missing_input_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), |c| c.eval.dictionary = Some(dir.path().join("nope.txt")));
    let errors = validate_config(&path).unwrap_err();
    assert!(errors.iter().any(|e| e.starts_with("eval.dictionary: file not found")), "{errors:?}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = std::fs::read_to_string(fixture_config()).unwrap();
    let text = text.replace("[train]", "[train]\nlearning_rate = 0.1");
    assert!(ExperimentConfig::from_toml(&text).is_err());
}

#[test]
fn exit_codes_distinguish_config_and_stage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), |_| {});
    assert_eq!(binary(&["validate"], &good).0, 0);

    let bad_dir = tempfile::tempdir().unwrap();
    let bad = write_config(bad_dir.path(), |c| c.train.mask_rate = 1.5);
    let (code, stderr) = binary(&["validate"], &bad);
    assert_eq!(code, 1);
    assert!(stderr.contains("mask_rate"), "{stderr}");

    // eval with nothing trained fails inside a stage
    let (code, stderr) = binary(&["eval"], &good);
    assert_eq!(code, 2, "{stderr}");
    let marker = std::fs::read_to_string(dir.path().join("out").join(FAILED_MARKER)).unwrap();
    assert!(!marker.trim().is_empty());
}

#[test]
fn unknown_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), |_| {});
    let (code, stderr) = binary(&["sweep", "--axis", "depth"], &path);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown sweep axis"), "{stderr}");
}

#[test]
fn sweep_plans() {
    let cfg = ExperimentConfig::load(&fixture_config()).unwrap();
    assert!(plan_sweep(&cfg, SweepAxis::Preset, &[]).is_err());
    assert!(plan_sweep(&cfg, SweepAxis::Preset, &["huge".into()]).is_err());
    assert!(plan_sweep(&cfg, SweepAxis::WeightDecay, &["lots".into()]).is_err());

    let runs = plan_sweep(&cfg, SweepAxis::Preset, &SweepAxis::Preset.default_values()).unwrap();
    let shape: Vec<(&str, &str)> = runs.iter().map(|r| (r.objective, r.value.as_str())).collect();
    assert_eq!(
        shape,
        [
            ("erm", "tiny"),
            ("erm", "small"),
            ("erm", "base"),
            ("dro-language", "tiny"),
            ("dro-language", "small"),
            ("dro-language", "base")
        ]
    );
    let runs = plan_sweep(&cfg, SweepAxis::WeightDecay, &SweepAxis::WeightDecay.default_values()).unwrap();
    assert_eq!(runs.len(), 5);
    assert_eq!((runs[0].objective, runs[0].config.train.weight_decay), ("erm", 0.01));
    assert!(runs[1..].iter().all(|r| r.config.grouping.strategy == GroupStrategy::Language));
    let dirs: std::collections::BTreeSet<_> = runs.iter().map(|r| r.config.output_dir.clone()).collect();
    assert_eq!(dirs.len(), runs.len());
}

#[test]
fn identifier_survives_json() {
    let cfg = ExperimentConfig::load(&fixture_config()).unwrap();
    let id = langid_train(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("langid.json");
    save_identifier(&path, &id).unwrap();
    let back = load_identifier(&path).unwrap();
    for text in ["abc def", "αβγ δεζ", "где это"] {
        assert_eq!(id.identify_text(text), back.identify_text(text));
    }
}
