//! Masked-token precision and pseudo-log-likelihood.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DictionarySet};
use crate::error::{Error, Result};
use crate::nnet::vocab::{words, RESERVED};
use crate::nnet::{masked_log_probs, EncoderParams, TokenBatch, Vocab, MASK_ID};
use crate::scalar::Scalar;
use crate::table::{fmt_f64, Table};

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

/// Rows evaluated per forward pass.
const EVAL_BATCH: usize = 64;

/// Anything that scores masked positions.
pub trait MaskedLanguageModel {
    fn vocab_size(&self) -> usize;
    fn max_len(&self) -> usize;
    /// Log-probabilities over the vocabulary, one row per `(row, position)`.
    fn log_probs_at(&self, batch: &TokenBatch, positions: &[(usize, usize)]) -> Result<Array2<f64>>;
}

impl<T: Scalar> MaskedLanguageModel for EncoderParams<T> {
    fn vocab_size(&self) -> usize {
        EncoderParams::vocab_size(self)
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    fn log_probs_at(&self, batch: &TokenBatch, positions: &[(usize, usize)]) -> Result<Array2<f64>> {
        masked_log_probs(self, batch, positions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub ks: Vec<usize>,
    pub hits: Vec<usize>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl PrecisionReport {
    /// Zero when nothing was evaluated.
    pub fn precision(&self, k: usize) -> Option<f64> {
        let i = self.ks.iter().position(|&x| x == k)?;
        Some(if self.evaluated == 0 {
            0.0
        } else {
            self.hits[i] as f64 / self.evaluated as f64
        })
    }

    pub fn precisions(&self) -> BTreeMap<usize, f64> {
        self.ks.iter().map(|&k| (k, self.precision(k).unwrap())).collect()
    }
}

/// Position choice depends only on `(seed, sentence id)`, so results do not
/// depend on corpus order or batching.
pub fn sentence_rng(seed: u64, sentence_id: usize) -> ChaCha8Rng {
    let mut z = seed ^ (sentence_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Rank of `gold` among non-reserved ids; ties go to the smaller id.
pub fn gold_rank(log_probs: &[f64], gold: usize) -> usize {
    let g = log_probs[gold];
    log_probs
        .iter()
        .enumerate()
        .skip(RESERVED)
        .filter(|&(c, &v)| v > g || (v == g && c < gold))
        .count()
}

struct Probe {
    ids: Vec<u32>,
    position: usize,
    gold: u32,
}

fn probes(
    vocab: &Vocab,
    corpus: &Corpus,
    max_len: usize,
    seed: u64,
    dict: Option<&DictionarySet>,
) -> (Vec<Probe>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for s in &corpus.sentences {
        let surface: Vec<String> = words(&s.text).take(max_len).collect();
        let ids = vocab.tokenize(&s.text, max_len);
        let candidates: Vec<usize> = (0..ids.len())
            .filter(|&i| ids[i] as usize >= RESERVED && dict.is_none_or(|d| d.contains(&surface[i])))
            .collect();
        if candidates.is_empty() {
            skipped += 1;
            continue;
        }
        let position = candidates[sentence_rng(seed, s.id).random_range(0..candidates.len())];
        out.push(Probe {
            gold: ids[position],
            ids,
            position,
        });
    }
    (out, skipped)
}

fn score_probes<M: MaskedLanguageModel + ?Sized>(model: &M, probes: &[Probe], ks: &[usize]) -> Result<Vec<usize>> {
    let mut hits = vec![0; ks.len()];
    for chunk in probes.chunks(EVAL_BATCH) {
        let seqs: Vec<Vec<u32>> = chunk
            .iter()
            .map(|p| {
                let mut ids = p.ids.clone();
                ids[p.position] = MASK_ID;
                ids
            })
            .collect();
        let batch = TokenBatch::from_sequences(&seqs)?;
        let positions: Vec<(usize, usize)> = chunk.iter().enumerate().map(|(b, p)| (b, p.position)).collect();
        let logp = model.log_probs_at(&batch, &positions)?;
        for (row, p) in logp.rows().into_iter().zip(chunk) {
            let rank = gold_rank(row.as_slice().expect("contiguous row"), p.gold as usize);
            for (h, &k) in hits.iter_mut().zip(ks) {
                *h += usize::from(rank < k);
            }
        }
    }
    Ok(hits)
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("ks must be non-empty and positive"));
    }
    Ok(())
}

/// Masks one random in-vocabulary token per sentence and counts how often
/// the original is among the top `k` non-reserved predictions.
pub fn precision_at_k<M: MaskedLanguageModel + ?Sized>(
    model: &M,
    vocab: &Vocab,
    corpus: &Corpus,
    ks: &[usize],
    seed: u64,
) -> Result<PrecisionReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("evaluation corpus".into()));
    }
    check_ks(ks)?;
    let (probes, skipped) = probes(vocab, corpus, model.max_len(), seed, None);
    Ok(PrecisionReport {
        ks: ks.to_vec(),
        hits: score_probes(model, &probes, ks)?,
        evaluated: probes.len(),
        skipped,
    })
}

/// As [`precision_at_k`], with masking restricted to dictionary words.
/// Sentences without one are skipped and counted.
pub fn dict_precision_at_k<M: MaskedLanguageModel + ?Sized>(
    model: &M,
    vocab: &Vocab,
    corpus: &Corpus,
    dict: &DictionarySet,
    ks: &[usize],
    seed: u64,
) -> Result<PrecisionReport> {
    if dict.is_empty() {
        return Err(Error::Empty("dictionary".into()));
    }
    check_ks(ks)?;
    let (probes, skipped) = probes(vocab, corpus, model.max_len(), seed, Some(dict));
    if probes.is_empty() {
        log::warn!("no sentence of {} contains a dictionary word", corpus.name);
    }
    Ok(PrecisionReport {
        ks: ks.to_vec(),
        hits: score_probes(model, &probes, ks)?,
        evaluated: probes.len(),
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllReport {
    /// Mean over sentences of the mean per-token negative log-likelihood.
    pub pll: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Per-token log-probabilities of one sentence, masking each position in turn.
pub fn sentence_pseudo_log_probs<M: MaskedLanguageModel + ?Sized>(model: &M, ids: &[u32]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ids.len());
    let positions: Vec<usize> = (0..ids.len()).collect();
    for chunk in positions.chunks(EVAL_BATCH) {
        let seqs: Vec<Vec<u32>> = chunk
            .iter()
            .map(|&t| {
                let mut s = ids.to_vec();
                s[t] = MASK_ID;
                s
            })
            .collect();
        let batch = TokenBatch::from_sequences(&seqs)?;
        let pos: Vec<(usize, usize)> = chunk.iter().enumerate().map(|(b, &t)| (b, t)).collect();
        let logp = model.log_probs_at(&batch, &pos)?;
        out.extend(chunk.iter().enumerate().map(|(b, &t)| logp[[b, ids[t] as usize]]));
    }
    Ok(out)
}

/// Negated mean pseudo-log-likelihood; lower is better.
pub fn mean_pll<M: MaskedLanguageModel + ?Sized>(model: &M, vocab: &Vocab, corpus: &Corpus) -> Result<PllReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("evaluation corpus".into()));
    }
    let mut total = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for s in &corpus.sentences {
        let ids = vocab.tokenize(&s.text, model.max_len());
        if ids.is_empty() {
            skipped += 1;
            continue;
        }
        let lp = sentence_pseudo_log_probs(model, &ids)?;
        total += lp.iter().sum::<f64>() / lp.len() as f64;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::Empty("no sentence has tokens".into()));
    }
    Ok(PllReport {
        pll: -total / evaluated as f64,
        evaluated,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub dataset_id: String,
    pub seed: u64,
    pub p_at_k: BTreeMap<usize, f64>,
    pub pd_at_k: BTreeMap<usize, f64>,
    pub pll: f64,
    pub evaluated_sentences: usize,
    pub skipped_dict_sentences: usize,
}

/// P@k, P_D@k (when a dictionary is given) and PLL over one corpus.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_intrinsic<M: MaskedLanguageModel + ?Sized>(
    model: &M,
    vocab: &Vocab,
    corpus: &Corpus,
    dict: Option<&DictionarySet>,
    ks: &[usize],
    seed: u64,
    model_id: &str,
    dataset_id: &str,
) -> Result<EvalReport> {
    let p = precision_at_k(model, vocab, corpus, ks, seed)?;
    let (pd_at_k, skipped_dict_sentences) = match dict {
        Some(d) => {
            let r = dict_precision_at_k(model, vocab, corpus, d, ks, seed)?;
            (r.precisions(), r.skipped)
        }
        None => (BTreeMap::new(), 0),
    };
    Ok(EvalReport {
        model_id: model_id.to_string(),
        dataset_id: dataset_id.to_string(),
        seed,
        p_at_k: p.precisions(),
        pd_at_k,
        pll: mean_pll(model, vocab, corpus)?.pll,
        evaluated_sentences: p.evaluated,
        skipped_dict_sentences,
    })
}

impl EvalReport {
    /// One row per report: identifiers, P@k, P_D@k, PLL, skip count.
    /// Missing P_D values are written as "-".
    pub fn table(reports: &[EvalReport]) -> Table {
        let ks: Vec<usize> = reports
            .iter()
            .flat_map(|r| r.p_at_k.keys().chain(r.pd_at_k.keys()).copied())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut headers = vec!["dataset".to_string(), "model".into(), "seed".into()];
        headers.extend(ks.iter().map(|k| format!("P@{k}")));
        headers.extend(ks.iter().map(|k| format!("P_D@{k}")));
        headers.extend(["PLL".to_string(), "skipped_dict".into()]);
        let mut table = Table::new(headers);
        let cell = |m: &BTreeMap<usize, f64>, k: &usize| m.get(k).map_or("-".to_string(), |v| fmt_f64(*v));
        for r in reports {
            let mut row = vec![r.dataset_id.clone(), r.model_id.clone(), r.seed.to_string()];
            row.extend(ks.iter().map(|k| cell(&r.p_at_k, k)));
            row.extend(ks.iter().map(|k| cell(&r.pd_at_k, k)));
            row.extend([fmt_f64(r.pll), r.skipped_dict_sentences.to_string()]);
            table.push(row);
        }
        table
    }
}
