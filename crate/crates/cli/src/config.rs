//! Experiment configuration: sectioned `key = value` text (TOML).
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/fixture"
//!
//! [data]
//! creole = "data/creole.txt"
//! creole_language = "creole:syn"
//! regime = "mixed"                 # or "creole-only"
//! auxiliary = [{ language = "aux-a", path = "data/aux_a.txt" }]
//! dev_ratio = 0.1
//!
//! [grouping]
//! strategy = "language"            # one | random | language
//!
//! [train]
//! objective = "dro"                # erm | dro
//! steps = 500
//! preset = "tiny"
//!
//! [eval]
//! dictionary = "data/dict.txt"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use creole_lm::corpus::{DevSize, MixPolicy, TagScheme};
use creole_lm::langid::{GroupStrategy, GroupingOptions};
use creole_lm::nnet::SizePreset;
use creole_lm::objective::{MaskPolicy, Objective, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataSection,
    #[serde(default)]
    pub grouping: GroupingSection,
    #[serde(default)]
    pub langid: LangidSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub divergence: DivergenceSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Mixed,
    CreoleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxCorpus {
    pub language: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub creole: PathBuf,
    pub creole_language: String,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default)]
    pub auxiliary: Vec<AuxCorpus>,
    #[serde(default)]
    pub target_per_language: Option<usize>,
    #[serde(default = "default_scarce")]
    pub scarce_fraction: f64,
    #[serde(default = "default_dev_ratio")]
    pub dev_ratio: f64,
    /// Overrides `dev_ratio` with an explicit count.
    #[serde(default)]
    pub dev_count: Option<usize>,
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
    #[serde(default = "one")]
    pub min_count: usize,
}

fn default_regime() -> Regime {
    Regime::Mixed
}
fn default_scarce() -> f64 {
    0.95
}
fn default_dev_ratio() -> f64 {
    0.05
}
fn default_vocab() -> usize {
    5000
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupingSection {
    pub strategy: GroupStrategy,
    pub threshold: f64,
    pub group_count: usize,
    /// Identifier file written by `langid-train`.
    pub identifier: Option<PathBuf>,
}

impl Default for GroupingSection {
    fn default() -> Self {
        let g = GroupingOptions::default();
        GroupingSection {
            strategy: g.strategy,
            threshold: g.threshold,
            group_count: g.group_count,
            identifier: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LangidSection {
    pub n_max: usize,
    pub alpha: f64,
}

impl Default for LangidSection {
    fn default() -> Self {
        LangidSection { n_max: 3, alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub objective: Objective,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub eta_q: f64,
    pub preset: SizePreset,
    pub mask_rate: f64,
    /// Shares of MASK, random-token and unchanged replacements.
    pub mask_split: [f64; 3],
    pub per_token: bool,
    pub checkpoint_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            objective: t.objective,
            steps: t.steps,
            batch_size: t.batch_size,
            lr: t.lr,
            weight_decay: t.weight_decay,
            eta_q: t.eta_q,
            preset: t.preset,
            mask_rate: t.mask.rate,
            mask_split: [t.mask.p_mask, t.mask.p_random, t.mask.p_keep],
            per_token: t.per_token,
            checkpoint_every: t.checkpoint_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub ks: Vec<usize>,
    pub dictionary: Option<PathBuf>,
    pub tag_scheme: Option<TagScheme>,
    pub tagged_train: Option<PathBuf>,
    pub tagged_dev: Option<PathBuf>,
    pub tagged_test: Option<PathBuf>,
    pub tag_epochs: usize,
    pub tag_lr: f64,
    pub tag_batch_size: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            ks: vec![1, 5, 10],
            dictionary: None,
            tag_scheme: None,
            tagged_train: None,
            tagged_dev: None,
            tagged_test: None,
            tag_epochs: 10,
            tag_lr: 1e-3,
            tag_batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadPair {
    pub language: String,
    pub domain_1: String,
    pub path_1: PathBuf,
    pub domain_2: String,
    pub path_2: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergenceSection {
    pub pairs: Vec<PadPair>,
    pub split_ratio: f64,
}

impl Default for DivergenceSection {
    fn default() -> Self {
        DivergenceSection {
            pairs: Vec::new(),
            split_ratio: 0.8,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Parses `path` and makes every relative path absolute against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.creole);
        self.data.auxiliary.iter_mut().for_each(|a| fix(&mut a.path));
        self.grouping.identifier.as_mut().map(fix);
        for p in [
            &mut self.eval.dictionary,
            &mut self.eval.tagged_train,
            &mut self.eval.tagged_dev,
            &mut self.eval.tagged_test,
        ] {
            p.as_mut().map(fix);
        }
        for pair in &mut self.divergence.pairs {
            fix(&mut pair.path_1);
            fix(&mut pair.path_2);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mix_policy(&self) -> MixPolicy {
        MixPolicy {
            target_per_language: self.data.target_per_language,
            scarce_fraction: self.data.scarce_fraction,
            dev_ratio: self.data.dev_ratio,
            seed: self.seed,
        }
    }

    pub fn dev_size(&self) -> DevSize {
        match self.data.dev_count {
            Some(n) => DevSize::Count(n),
            None => DevSize::Ratio(self.data.dev_ratio),
        }
    }

    pub fn grouping_options(&self) -> GroupingOptions {
        GroupingOptions {
            strategy: self.grouping.strategy,
            group_count: self.grouping.group_count,
            threshold: self.grouping.threshold,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            objective: t.objective,
            strategy: self.grouping.strategy,
            steps: t.steps,
            batch_size: t.batch_size,
            lr: t.lr,
            weight_decay: t.weight_decay,
            eta_q: t.eta_q,
            mask: MaskPolicy {
                rate: t.mask_rate,
                p_mask: t.mask_split[0],
                p_random: t.mask_split[1],
                p_keep: t.mask_split[2],
                min_masks_per_example: 1,
            },
            per_token: t.per_token,
            seed: self.seed,
            preset: t.preset,
            checkpoint_every: t.checkpoint_every,
            dev_seed: self.seed,
        }
    }

    /// Every cross-field check; an empty list means the config is usable.
    pub fn check(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut need_file = |field: &str, p: &Path| {
            if !p.is_file() {
                errors.push(format!("{field}: file not found: {}", p.display()));
            }
        };
        need_file("data.creole", &self.data.creole);
        for (i, a) in self.data.auxiliary.iter().enumerate() {
            need_file(&format!("data.auxiliary[{i}].path"), &a.path);
        }
        if let Some(p) = &self.grouping.identifier {
            need_file("grouping.identifier", p);
        }
        if let Some(p) = &self.eval.dictionary {
            need_file("eval.dictionary", p);
        }
        for (field, p) in [
            ("eval.tagged_train", &self.eval.tagged_train),
            ("eval.tagged_dev", &self.eval.tagged_dev),
            ("eval.tagged_test", &self.eval.tagged_test),
        ] {
            if let Some(p) = p {
                need_file(field, p);
            }
        }
        for (i, pair) in self.divergence.pairs.iter().enumerate() {
            need_file(&format!("divergence.pairs[{i}].path_1"), &pair.path_1);
            need_file(&format!("divergence.pairs[{i}].path_2"), &pair.path_2);
        }

        let d = &self.data;
        if !creole_lm::corpus::is_creole_tag(&d.creole_language) {
            errors.push(format!(
                "data.creole_language must start with {:?}",
                creole_lm::corpus::CREOLE_PREFIX
            ));
        }
        if d.regime == Regime::Mixed && d.auxiliary.is_empty() {
            errors.push("data.regime = mixed needs at least one data.auxiliary corpus".into());
        }
        if let Err(e) = self.mix_policy().validate() {
            errors.push(format!("data: {e}"));
        }
        if d.dev_count == Some(0) {
            errors.push("data.dev_count must be positive".into());
        }
        if d.vocab_size < 4 {
            errors.push("data.vocab_size must be at least 4".into());
        }

        let g = &self.grouping;
        if !(0.0..1.0).contains(&g.threshold) {
            errors.push("grouping.threshold out of range".into());
        }
        if g.strategy == GroupStrategy::Random && g.group_count == 0 {
            errors.push("grouping.group_count must be positive".into());
        }
        if g.strategy == GroupStrategy::Language
            && self.train.objective == Objective::Dro
            && d.regime == Regime::CreoleOnly
            && g.identifier.is_none()
        {
            errors.push(
                "train.objective = dro with grouping.strategy = language on creole-only data requires grouping.identifier"
                    .into(),
            );
        }
        if self.langid.n_max == 0 || !(self.langid.alpha > 0.0) {
            errors.push("langid.n_max and langid.alpha must be positive".into());
        }

        let t = &self.train;
        if !(t.mask_rate > 0.0 && t.mask_rate < 1.0) {
            errors.push("train.mask_rate out of range".into());
        }
        let split_sum: f64 = t.mask_split.iter().sum();
        if t.mask_split.iter().any(|p| !(0.0..=1.0).contains(p)) || (split_sum - 1.0).abs() > 1e-9 {
            errors.push("train.mask_split must be three probabilities summing to 1".into());
        }
        if t.steps == 0 {
            errors.push("train.steps must be positive".into());
        }
        if t.batch_size == 0 {
            errors.push("train.batch_size must be positive".into());
        }
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            errors.push("train.lr must be positive".into());
        }
        if !(0.0..1.0).contains(&t.weight_decay) {
            errors.push("train.weight_decay out of range".into());
        }
        if !(t.eta_q >= 0.0 && t.eta_q.is_finite()) {
            errors.push("train.eta_q must be non-negative".into());
        }

        let e = &self.eval;
        if e.ks.is_empty() || e.ks.contains(&0) {
            errors.push("eval.ks must be non-empty and positive".into());
        }
        let tagged = [&e.tagged_train, &e.tagged_dev, &e.tagged_test];
        let given = tagged.iter().filter(|p| p.is_some()).count();
        if given != 0 && (given != 3 || e.tag_scheme.is_none()) {
            errors.push("eval: tagging needs tag_scheme, tagged_train, tagged_dev and tagged_test together".into());
        }
        if given == 3 && (e.tag_batch_size == 0 || !(e.tag_lr > 0.0)) {
            errors.push("eval.tag_batch_size and eval.tag_lr must be positive".into());
        }
        if !(self.divergence.split_ratio > 0.0 && self.divergence.split_ratio < 1.0) {
            errors.push("divergence.split_ratio out of range".into());
        }

        if let Some(msg) = unwritable(&self.output_dir) {
            errors.push(format!("output_dir: {msg}"));
        }
        errors
    }
}

/// Why `dir` cannot be created or written, if it cannot.
fn unwritable(dir: &Path) -> Option<String> {
    let mut probe = dir;
    loop {
        if probe.exists() {
            return if !probe.is_dir() {
                Some(format!("{} is not a directory", probe.display()))
            } else if fs::metadata(probe).map(|m| m.permissions().readonly()).unwrap_or(true) {
                Some(format!("{} is not writable", probe.display()))
            } else {
                None
            };
        }
        match probe.parent() {
            Some(p) if !p.as_os_str().is_empty() => probe = p,
            _ => return None,
        }
    }
}

/// Loads and checks a config file, collecting every problem.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, Vec<String>> {
    let cfg = ExperimentConfig::load(path).map_err(|e| vec![e])?;
    let errors = cfg.check();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}
