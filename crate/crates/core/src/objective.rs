//! Masked-LM training under ERM or online group DRO.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GroupedDataset};
use crate::error::{Error, Result};
use crate::langid::GroupStrategy;
use crate::nnet::vocab::RESERVED;
use crate::nnet::{
    init_encoder, mlm_backward, mlm_forward, save_checkpoint, AdamW, AdamWConfig, EncoderParams, MaskedBatch,
    SizePreset, TokenBatch, Vocab, MASK_ID, PAD_ID, UNK_ID,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskPolicy {
    pub rate: f64,
    pub p_mask: f64,
    pub p_random: f64,
    pub p_keep: f64,
    pub min_masks_per_example: usize,
}

impl Default for MaskPolicy {
    fn default() -> Self {
        MaskPolicy {
            rate: 0.15,
            p_mask: 0.8,
            p_random: 0.1,
            p_keep: 0.1,
            min_masks_per_example: 1,
        }
    }
}

impl MaskPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::invalid("mask_rate out of range"));
        }
        let parts = [self.p_mask, self.p_random, self.p_keep];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("mask split must be probabilities summing to 1"));
        }
        Ok(())
    }
}

/// Selects positions of every real token with probability `rate`, then
/// replaces each by MASK, a random non-reserved id, or itself. An example
/// with no selection gets one uniformly chosen position.
pub fn apply_masking<R: Rng>(
    batch: &TokenBatch,
    policy: &MaskPolicy,
    vocab_size: usize,
    rng: &mut R,
) -> Result<MaskedBatch> {
    policy.validate()?;
    if vocab_size <= RESERVED {
        return Err(Error::invalid("vocabulary has no ordinary tokens"));
    }
    let lengths = batch.lengths();
    if let Some(b) = lengths.iter().position(|&l| l == 0) {
        return Err(Error::invalid(format!("example {b} has no tokens")));
    }
    let mut ids = batch.ids.clone();
    let mut positions = Vec::new();
    let mut originals = Vec::new();
    for (b, &len) in lengths.iter().enumerate() {
        let mut chosen: Vec<usize> = (0..len).filter(|_| rng.random_bool(policy.rate)).collect();
        if chosen.len() < policy.min_masks_per_example {
            let need = policy.min_masks_per_example.min(len);
            let rest: Vec<usize> = (0..len).filter(|t| !chosen.contains(t)).collect();
            chosen.extend(rest.choose_multiple(rng, need - chosen.len()));
            chosen.sort_unstable();
        }
        for t in chosen {
            originals.push(ids[[b, t]]);
            positions.push((b, t));
            let u: f64 = rng.random();
            if u < policy.p_mask {
                ids[[b, t]] = MASK_ID;
            } else if u < policy.p_mask + policy.p_random {
                ids[[b, t]] = rng.random_range(RESERVED as u32..vocab_size as u32);
            }
        }
    }
    Ok(MaskedBatch {
        tokens: TokenBatch {
            ids,
            attention: batch.attention.clone(),
        },
        positions,
        originals,
    })
}

pub fn erm_loss(per_example_losses: &[f64]) -> Result<f64> {
    if per_example_losses.is_empty() {
        return Err(Error::Empty("batch losses".into()));
    }
    Ok(per_example_losses.iter().sum::<f64>() / per_example_losses.len() as f64)
}

/// Mixture weights over groups, kept on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights {
    pub q: Vec<f64>,
    pub eta: f64,
}

impl GroupWeights {
    pub fn uniform(group_count: usize, eta: f64) -> Result<Self> {
        if group_count == 0 {
            return Err(Error::invalid("group count must be positive"));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta_q must be finite and non-negative"));
        }
        Ok(GroupWeights {
            q: vec![1.0 / group_count as f64; group_count],
            eta,
        })
    }

    pub fn group_count(&self) -> usize {
        self.q.len()
    }
}

/// Exponentiated-gradient step on the groups present in a batch
/// (`None` marks an absent group), followed by renormalization. Returns the
/// new weights and `sum_g q'_g L_g` over present groups.
pub fn dro_update(q: &GroupWeights, group_losses: &[Option<f64>]) -> Result<(GroupWeights, f64)> {
    if group_losses.len() != q.group_count() {
        return Err(Error::Shape("one loss slot per group expected".into()));
    }
    if group_losses.iter().all(Option::is_none) {
        return Err(Error::invalid("no group present in batch"));
    }
    if group_losses.iter().flatten().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("group loss".into()));
    }
    let logits: Vec<f64> = q
        .q
        .iter()
        .zip(group_losses)
        .map(|(&qg, l)| qg.ln() + l.map_or(0.0, |l| q.eta * l))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    let next: Vec<f64> = unnorm.iter().map(|u| u / total).collect();
    let loss = next.iter().zip(group_losses).filter_map(|(&qg, l)| l.map(|l| qg * l)).sum();
    Ok((GroupWeights { q: next, eta: q.eta }, loss))
}

/// Mean example loss per group, `None` for groups absent from the batch.
pub fn group_means(example_losses: &[f64], group_ids: &[usize], group_count: usize) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; group_count];
    let mut counts = vec![0usize; group_count];
    for (&l, &g) in example_losses.iter().zip(group_ids) {
        sums[g] += l;
        counts[g] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Erm,
    Dro,
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erm" => Ok(Objective::Erm),
            "dro" => Ok(Objective::Dro),
            _ => Err(Error::invalid(format!("unknown objective {s:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Erm => "erm",
            Objective::Dro => "dro",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub strategy: GroupStrategy,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub eta_q: f64,
    pub mask: MaskPolicy,
    /// Weight examples by masked-token count inside each group.
    pub per_token: bool,
    pub seed: u64,
    pub preset: SizePreset,
    /// Evaluate on dev (and checkpoint) every this many steps; 0 only at the end.
    pub checkpoint_every: usize,
    pub dev_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: Objective::Erm,
            strategy: GroupStrategy::One,
            steps: 2000,
            batch_size: 16,
            lr: 3e-4,
            weight_decay: 0.01,
            eta_q: 0.01,
            mask: MaskPolicy::default(),
            per_token: false,
            seed: 0,
            preset: SizePreset::Tiny,
            checkpoint_every: 0,
            dev_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        if !(0.0..1.0).contains(&(self.lr * self.weight_decay)) {
            return Err(Error::invalid("weight_decay out of range"));
        }
        if !(self.eta_q >= 0.0 && self.eta_q.is_finite()) {
            return Err(Error::invalid("eta_q must be finite and non-negative"));
        }
        self.mask.validate()
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub group_losses: Vec<Option<f64>>,
    /// Group weights after the step; `None` under ERM.
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub group_count: usize,
    pub records: Vec<StepRecord>,
}

impl TrainingLog {
    pub fn header(&self) -> String {
        let mut cols = vec!["step".to_string(), "loss".into()];
        cols.extend((0..self.group_count).map(|g| format!("L_{g}")));
        cols.extend((0..self.group_count).map(|g| format!("q_{g}")));
        cols.join("\t")
    }

    /// One TSV line; absent values are "-".
    pub fn format_record(r: &StepRecord, group_count: usize) -> String {
        let num = |v: f64| format!("{v:.9}");
        let mut cols = vec![r.step.to_string(), num(r.loss)];
        cols.extend(r.group_losses.iter().map(|l| l.map_or("-".into(), num)));
        match &r.q {
            Some(q) => cols.extend(q.iter().map(|&v| num(v))),
            None => cols.extend(std::iter::repeat_n("-".to_string(), group_count)),
        }
        cols.join("\t")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.records {
            out.push_str(&Self::format_record(r, self.group_count));
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub step: usize,
    pub dev_loss: Option<f64>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Best parameters by dev loss, or the final ones without a dev set.
    pub params: EncoderParams<T>,
    pub final_params: EncoderParams<T>,
    pub log: TrainingLog,
    pub checkpoints: Vec<CheckpointRecord>,
    pub best_step: usize,
    pub group_weights: Option<GroupWeights>,
}

/// Mean masked-LM loss over a corpus with masks drawn from `seed`.
pub fn corpus_mlm_loss<T: Scalar>(
    params: &EncoderParams<T>,
    vocab: &Vocab,
    corpus: &Corpus,
    policy: &MaskPolicy,
    seed: u64,
) -> Result<f64> {
    let max_len = params.config.max_len;
    let seqs: Vec<Vec<u32>> = corpus
        .texts()
        .map(|t| vocab.tokenize(t, max_len))
        .filter(|s| !s.is_empty())
        .collect();
    if seqs.is_empty() {
        return Err(Error::Empty("no tokenizable sentence".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for chunk in seqs.chunks(64) {
        let batch = TokenBatch::from_sequences(chunk)?;
        let masked = apply_masking(&batch, policy, params.vocab_size(), &mut rng)?;
        total += mlm_forward(params, &masked)?.example_losses.iter().sum::<f64>();
    }
    Ok(total / seqs.len() as f64)
}

/// Trains a fresh encoder of `config.preset` on `dataset`.
pub fn train<T: Scalar>(
    dataset: &GroupedDataset,
    vocab: &Vocab,
    dev: Option<&Corpus>,
    config: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome<T>> {
    let init = init_encoder::<T>(config.preset, vocab.len(), config.seed)?;
    train_from(init, dataset, vocab, dev, config, checkpoint_dir, |_| Ok(()))
}

/// Trains from `params`. `on_step` sees each log record as it is produced.
pub fn train_from<T: Scalar, F>(
    mut params: EncoderParams<T>,
    dataset: &GroupedDataset,
    vocab: &Vocab,
    dev: Option<&Corpus>,
    config: &TrainConfig,
    checkpoint_dir: Option<&Path>,
    mut on_step: F,
) -> Result<TrainOutcome<T>>
where
    F: FnMut(&StepRecord) -> Result<()>,
{
    config.validate()?;
    if params.vocab_size() != vocab.len() {
        return Err(Error::invalid(format!(
            "model vocabulary {} does not match vocabulary {}",
            params.vocab_size(),
            vocab.len()
        )));
    }
    let g_count = dataset.group_count;
    if dataset.group_ids.len() != dataset.corpus.len() || dataset.group_ids.iter().any(|&g| g >= g_count) {
        return Err(Error::invalid("group ids do not match the dataset"));
    }
    if config.strategy == GroupStrategy::One && g_count != 1 {
        return Err(Error::invalid(format!(
            "strategy one expects a single group, dataset has {g_count}"
        )));
    }
    let max_len = params.config.max_len;
    let mut examples: Vec<(Vec<u32>, usize)> = Vec::with_capacity(dataset.corpus.len());
    for (s, &g) in dataset.corpus.sentences.iter().zip(&dataset.group_ids) {
        let ids = vocab.tokenize(&s.text, max_len);
        if !ids.is_empty() {
            examples.push((ids, g));
        }
    }
    if examples.is_empty() {
        return Err(Error::Empty("training data has no tokens".into()));
    }
    if examples.iter().all(|(ids, _)| ids.iter().all(|&i| i == UNK_ID || i == PAD_ID)) {
        return Err(Error::invalid("vocabulary does not cover the training data"));
    }
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_0001);
    let mut mask_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_0002);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut order_rng);
    let mut cursor = 0;
    let mut optimizer = AdamW::<T>::new(config.optimizer());
    let mut weights = match config.objective {
        Objective::Dro => Some(GroupWeights::uniform(g_count, config.eta_q)?),
        Objective::Erm => None,
    };
    let mut log = TrainingLog {
        group_count: g_count,
        records: Vec::with_capacity(config.steps),
    };
    let mut checkpoints = Vec::new();
    let mut best: Option<(f64, usize, EncoderParams<T>)> = None;

    for step in 1..=config.steps {
        let mut idx = Vec::with_capacity(config.batch_size);
        while idx.len() < config.batch_size.min(examples.len()) {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let seqs: Vec<&Vec<u32>> = idx.iter().map(|&i| &examples[i].0).collect();
        let groups: Vec<usize> = idx.iter().map(|&i| examples[i].1).collect();
        let batch = TokenBatch::from_sequences(&seqs)?;
        let masked = apply_masking(&batch, &config.mask, params.vocab_size(), &mut mask_rng)?;
        let masks = masked.masks_per_example();
        let fwd = mlm_forward(&params, &masked)?;
        let losses = &fwd.example_losses;

        // weight of each example inside its group: 1/n_g, or m_b/M_g by masked-token count
        let size = |b: usize| if config.per_token { masks[b] as f64 } else { 1.0 };
        let mut group_totals = vec![0.0; g_count];
        for (b, &g) in groups.iter().enumerate() {
            group_totals[g] += size(b);
        }
        let within: Vec<f64> = groups.iter().enumerate().map(|(b, &g)| size(b) / group_totals[g]).collect();
        let group_losses = if config.per_token {
            let mut gl = vec![None; g_count];
            for (b, &g) in groups.iter().enumerate() {
                *gl[g].get_or_insert(0.0) += within[b] * losses[b];
            }
            gl
        } else {
            group_means(losses, &groups, g_count)
        };

        let (loss, example_weights, q_record) = match &mut weights {
            None if config.per_token => {
                let total: f64 = (0..losses.len()).map(size).sum();
                let w: Vec<f64> = (0..losses.len()).map(|b| size(b) / total).collect();
                (losses.iter().zip(&w).map(|(l, w)| l * w).sum(), w, None)
            }
            None => (erm_loss(losses)?, vec![1.0 / losses.len() as f64; losses.len()], None),
            Some(q) => {
                let (next, loss) = dro_update(q, &group_losses)?;
                *q = next;
                let w: Vec<f64> = groups.iter().zip(&within).map(|(&g, &wb)| q.q[g] * wb).collect();
                (loss, w, Some(q.q.clone()))
            }
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        let grads = mlm_backward(&params, &fwd, &example_weights);
        optimizer.step_encoder(&mut params, &grads).map_err(|e| match e {
            Error::NonFinite(what) => Error::NonFinite(format!("{what} at step {step}")),
            other => other,
        })?;
        let record = StepRecord {
            step,
            loss,
            group_losses,
            q: q_record,
        };
        on_step(&record)?;
        log.records.push(record);

        let at_checkpoint =
            step == config.steps || (config.checkpoint_every > 0 && step % config.checkpoint_every == 0);
        if at_checkpoint {
            let dev_loss = match dev {
                Some(d) => Some(corpus_mlm_loss(&params, vocab, d, &config.mask, config.dev_seed)?),
                None => None,
            };
            let path = match checkpoint_dir {
                Some(dir) => {
                    let p = dir.join(format!("step-{step:07}.ckpt"));
                    save_checkpoint(&p, &params, config.seed)?;
                    Some(p)
                }
                None => None,
            };
            if let Some(l) = dev_loss {
                if best.as_ref().is_none_or(|b| l < b.0) {
                    best = Some((l, step, params.clone()));
                }
            }
            checkpoints.push(CheckpointRecord { step, dev_loss, path });
        }
    }

    let (best_step, best_params) = match best {
        Some((_, s, p)) => (s, p),
        None => (config.steps, params.clone()),
    };
    if let Some(dir) = checkpoint_dir {
        save_checkpoint(dir.join("best.ckpt"), &best_params, config.seed)?;
        let mut f = std::fs::File::create(dir.join("best_step.txt")).map_err(|e| Error::io(dir, e))?;
        writeln!(f, "{best_step}").map_err(|e| Error::io(dir, e))?;
    }
    Ok(TrainOutcome {
        params: best_params,
        final_params: params,
        log,
        checkpoints,
        best_step,
        group_weights: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_update() {
        let q = GroupWeights::uniform(2, 1.0).unwrap();
        let (next, loss) = dro_update(&q, &[Some(1.0), Some(2.0)]).unwrap();
        let e1 = 1f64.exp();
        let e2 = 2f64.exp();
        assert!((next.q[0] - e1 / (e1 + e2)).abs() < 1e-12);
        assert!((next.q[0] - 0.26894).abs() < 1e-5 && (next.q[1] - 0.73106).abs() < 1e-5);
        assert!((loss - (next.q[0] + 2.0 * next.q[1])).abs() < 1e-12);
    }

    #[test]
    fn zero_step_is_identity() {
        let q = GroupWeights {
            q: vec![0.2, 0.3, 0.5],
            eta: 0.0,
        };
        let (next, loss) = dro_update(&q, &[Some(1.0), Some(4.0), Some(2.0)]).unwrap();
        for (a, b) in next.q.iter().zip(&q.q) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((loss - (0.2 + 1.2 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn single_group_is_mean() {
        let losses = [1.5, 2.0, 0.25, 3.0];
        let q = GroupWeights::uniform(1, 0.01).unwrap();
        let g = group_means(&losses, &[0, 0, 0, 0], 1);
        let (next, loss) = dro_update(&q, &g).unwrap();
        assert_eq!(next.q, [1.0]);
        assert_eq!(loss, erm_loss(&losses).unwrap());
    }

    #[test]
    fn absent_groups_and_errors() {
        let q = GroupWeights::uniform(3, 0.5).unwrap();
        let (next, _) = dro_update(&q, &[Some(1.0), None, Some(1.0)]).unwrap();
        assert!(next.q[1] < next.q[0]);
        assert!(dro_update(&q, &[None, None, None]).is_err());
        assert!(dro_update(&q, &[Some(f64::NAN), None, None]).is_err());
        assert_eq!(erm_loss(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(erm_loss(&[5.0]).unwrap(), 5.0);
        assert!(erm_loss(&[]).is_err());
    }

    #[test]
    fn persistent_gap_raises_weight() {
        let mut q = GroupWeights::uniform(2, 0.05).unwrap();
        let mut prev = q.q[0];
        for _ in 0..200 {
            q = dro_update(&q, &[Some(2.0), Some(1.0)]).unwrap().0;
            assert!(q.q[0] > prev || q.q[0] == 1.0);
            prev = q.q[0];
        }
    }

    fn batch(lens: &[usize]) -> TokenBatch {
        let seqs: Vec<Vec<u32>> = lens.iter().map(|&l| (0..l as u32).map(|i| 3 + i % 20).collect()).collect();
        TokenBatch::from_sequences(&seqs).unwrap()
    }

    #[test]
    fn full_mask_policy() {
        let b = batch(&[4, 2]);
        let policy = MaskPolicy {
            rate: 1.0,
            p_mask: 1.0,
            p_random: 0.0,
            p_keep: 0.0,
            min_masks_per_example: 1,
        };
        let m = apply_masking(&b, &policy, 30, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(m.positions, [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1)]);
        assert_eq!(m.originals, [3, 4, 5, 6, 3, 4]);
        assert_eq!(m.tokens.ids[[0, 0]], MASK_ID);
        assert_eq!(m.tokens.ids[[1, 2]], PAD_ID);
    }

    #[test]
    fn selection_rate_concentrates() {
        let b = batch(&[100; 100]);
        let m = apply_masking(&b, &MaskPolicy::default(), 30, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let frac = m.positions.len() as f64 / 10_000.0;
        assert!((frac - 0.15).abs() < 0.01, "{frac}");
    }

    #[test]
    fn single_token_forced() {
        let b = batch(&[1; 50]);
        let m = apply_masking(&b, &MaskPolicy::default(), 30, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(m.masks_per_example(), vec![1; 50]);
    }

    #[test]
    fn log_columns() {
        let log = TrainingLog {
            group_count: 2,
            records: vec![StepRecord {
                step: 1,
                loss: 1.5,
                group_losses: vec![Some(1.5), None],
                q: None,
            }],
        };
        let tsv = log.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "step\tloss\tL_0\tL_1\tq_0\tq_1");
        assert_eq!(lines[1], "1\t1.500000000\t1.500000000\t-\t-\t-");
    }

    proptest! {
        #[test]
        fn weights_stay_on_simplex(
            losses in prop::collection::vec(prop::collection::vec(prop::option::of(0.0f64..20.0), 4), 1..60),
            eta in 0.0f64..2.0,
        ) {
            let mut q = GroupWeights::uniform(4, eta).unwrap();
            for l in losses {
                if l.iter().all(Option::is_none) {
                    continue;
                }
                q = dro_update(&q, &l).unwrap().0;
                prop_assert!((q.q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(q.q.iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn group_means_recombine_to_batch_mean(
            items in prop::collection::vec((0.0f64..10.0, 0usize..5), 1..40)
        ) {
            let losses: Vec<f64> = items.iter().map(|x| x.0).collect();
            let groups: Vec<usize> = items.iter().map(|x| x.1).collect();
            let means = group_means(&losses, &groups, 5);
            let mut sizes = [0usize; 5];
            for &g in &groups {
                sizes[g] += 1;
            }
            let recombined: f64 = means
                .iter()
                .zip(&sizes)
                .filter_map(|(m, &n)| m.map(|m| m * n as f64))
                .sum::<f64>()
                / losses.len() as f64;
            prop_assert!((recombined - erm_loss(&losses).unwrap()).abs() < 1e-9);
        }
    }
}
