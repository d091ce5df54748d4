//! One-variable sweeps over model size or weight decay.

use std::fmt;
use std::str::FromStr;

use creole_lm::langid::GroupStrategy;
use creole_lm::nnet::SizePreset;
use creole_lm::objective::Objective;
use creole_lm::table::{fmt_f64, Table};

use crate::config::ExperimentConfig;
use crate::pipeline::{run_core, RunError, RunResult};

pub const DEFAULT_WEIGHT_DECAYS: [f64; 4] = [0.01, 0.05, 0.10, 0.30];
/// The single ERM row of a weight-decay sweep.
pub const ERM_WEIGHT_DECAY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Preset,
    WeightDecay,
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "preset" => Ok(SweepAxis::Preset),
            "weight_decay" | "weight-decay" => Ok(SweepAxis::WeightDecay),
            _ => Err(format!("unknown sweep axis {s:?} (expected preset or weight_decay)")),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Preset => "preset",
            SweepAxis::WeightDecay => "weight_decay",
        })
    }
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<String> {
        match self {
            SweepAxis::Preset => SizePreset::ALL.iter().map(|p| p.to_string()).collect(),
            SweepAxis::WeightDecay => DEFAULT_WEIGHT_DECAYS.iter().map(|v| format!("{v:.2}")).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub objective: &'static str,
    pub value: String,
    pub config: ExperimentConfig,
}

/// The runs of a sweep: every value under DRO with language groups, and
/// every value under ERM except on the weight-decay axis, where ERM gets one
/// run at [`ERM_WEIGHT_DECAY`].
pub fn plan_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> RunResult<Vec<SweepRun>> {
    let invalid = |m: String| RunError::Invalid(vec![m]);
    if values.is_empty() {
        return Err(invalid("sweep values must not be empty".into()));
    }
    let apply = |cfg: &mut ExperimentConfig, v: &str| -> RunResult<()> {
        match axis {
            SweepAxis::Preset => {
                cfg.train.preset = v.parse().map_err(|e: creole_lm::Error| invalid(e.to_string()))?;
            }
            SweepAxis::WeightDecay => {
                cfg.train.weight_decay = v
                    .parse()
                    .map_err(|_| invalid(format!("weight decay {v:?} is not a number")))?;
            }
        }
        Ok(())
    };
    let sweep_dir = base.output_dir.join(format!("sweep-{axis}"));
    let variant = |objective: Objective, label: &'static str, v: &str| -> RunResult<SweepRun> {
        let mut cfg = base.clone();
        cfg.train.objective = objective;
        if objective == Objective::Dro {
            cfg.grouping.strategy = GroupStrategy::Language;
        }
        apply(&mut cfg, v)?;
        cfg.output_dir = sweep_dir.join(format!("{label}-{v}"));
        let errors = cfg.check();
        if !errors.is_empty() {
            return Err(RunError::Invalid(errors));
        }
        Ok(SweepRun {
            objective: label,
            value: v.to_string(),
            config: cfg,
        })
    };
    let mut runs = Vec::new();
    match axis {
        SweepAxis::WeightDecay => runs.push(variant(Objective::Erm, "erm", &format!("{ERM_WEIGHT_DECAY:.2}"))?),
        SweepAxis::Preset => {
            for v in values {
                runs.push(variant(Objective::Erm, "erm", v)?);
            }
        }
    }
    for v in values {
        runs.push(variant(Objective::Dro, "dro-language", v)?);
    }
    Ok(runs)
}

/// Runs every planned configuration and tabulates P@1, P_D@1 and PLL.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> RunResult<Table> {
    let runs = plan_sweep(base, axis, values)?;
    let mut table = Table::new(["objective".to_string(), axis.to_string(), "P@1".into(), "P_D@1".into(), "PLL".into()]);
    for run in &runs {
        log::info!("sweep run {} {}={}", run.objective, axis, run.value);
        let summary = run_core(&run.config)?;
        let r = &summary.report;
        table.push([
            run.objective.to_string(),
            run.value.clone(),
            r.p_at_k.get(&1).map_or("-".into(), |v| fmt_f64(*v)),
            r.pd_at_k.get(&1).map_or("-".into(), |v| fmt_f64(*v)),
            fmt_f64(r.pll),
        ]);
    }
    let dir = base.output_dir.join(format!("sweep-{axis}"));
    std::fs::create_dir_all(&dir).map_err(|e| RunError::Stage { stage: "sweep", cause: e.to_string() })?;
    for (name, text) in [("sweep.tsv", table.to_tsv()), ("sweep.txt", table.to_aligned())] {
        std::fs::write(dir.join(name), text).map_err(|e| RunError::Stage { stage: "sweep", cause: e.to_string() })?;
    }
    Ok(table)
}
