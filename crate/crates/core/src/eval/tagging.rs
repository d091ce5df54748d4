//! Token tagging on top of the encoder: fine-tuning and scoring.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{parse_bio, TagScheme, TaggedCorpus};
use crate::error::{Error, Result};
use crate::nnet::{backward_hidden, forward_hidden, AdamW, AdamWConfig, EncoderParams, TokenBatch, Vocab};
use crate::scalar::Scalar;

/// An entity span with inclusive token bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Spans of a BIO sequence. `I-X` continues a span only after `B-X` or
/// `I-X`; otherwise it opens a new one.
pub fn extract_spans<S: AsRef<str>>(labels: &[S]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, l) in labels.iter().enumerate() {
        match parse_bio(l.as_ref()) {
            Some(('I', ty)) if open.as_ref().is_some_and(|s| s.label == ty) => {
                open.as_mut().unwrap().end = i;
            }
            Some(('B' | 'I', ty)) => {
                spans.extend(open.take());
                open = Some(Span {
                    label: ty.to_string(),
                    start: i,
                    end: i,
                });
            }
            _ => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Micro-averaged exact-match span precision, recall and F1.
pub fn span_f1<S: AsRef<str>>(gold: &[Vec<S>], predicted: &[Vec<S>]) -> SpanScores {
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for (g, p) in gold.iter().zip(predicted) {
        let gs: BTreeSet<Span> = extract_spans(g).into_iter().collect();
        let ps: BTreeSet<Span> = extract_spans(p).into_iter().collect();
        tp += gs.intersection(&ps).count();
        n_pred += ps.len();
        n_gold += gs.len();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    SpanScores {
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted: n_pred,
        gold: n_gold,
    }
}

/// Encoder plus a linear per-token classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger<T> {
    pub encoder: EncoderParams<T>,
    /// d x |tagset|
    pub head_weight: Array2<T>,
    pub head_bias: Array1<T>,
    pub tagset: Vec<String>,
    pub scheme: TagScheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggingMetrics {
    pub accuracy: f64,
    /// Present for BIO-tagged data.
    pub span: Option<SpanScores>,
}

impl TaggingMetrics {
    /// F1 for BIO data, accuracy otherwise.
    pub fn primary(&self) -> f64 {
        self.span.map_or(self.accuracy, |s| s.f1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        FinetuneOptions {
            epochs: 10,
            batch_size: 16,
            optimizer: AdamWConfig {
                lr: 1e-3,
                ..AdamWConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: TaggingMetrics,
}

/// Token-id windows of at most `max_len` with the aligned label ids.
/// Unknown labels map to `None`.
fn windows(
    corpus: &TaggedCorpus,
    vocab: &Vocab,
    tagset: &[String],
    max_len: usize,
) -> Vec<(Vec<u32>, Vec<Option<usize>>)> {
    let mut out = Vec::new();
    for seq in &corpus.sequences {
        for start in (0..seq.tokens.len()).step_by(max_len) {
            let end = (start + max_len).min(seq.tokens.len());
            let ids = seq.tokens[start..end]
                .iter()
                .map(|t| vocab.tokenize(t, 1).first().copied().unwrap_or(crate::nnet::UNK_ID))
                .collect();
            let labels = seq.labels[start..end]
                .iter()
                .map(|l| tagset.iter().position(|t| t == l))
                .collect();
            out.push((ids, labels));
        }
    }
    out
}

impl<T: Scalar> Tagger<T> {
    /// Zero head weights with the bias at the log label priors, so an
    /// untrained tagger predicts the majority label.
    pub fn new(encoder: EncoderParams<T>, train: &TaggedCorpus) -> Self {
        let tagset: Vec<String> = train.tagset.iter().cloned().collect();
        let mut counts = vec![0usize; tagset.len()];
        for seq in &train.sequences {
            for l in &seq.labels {
                counts[tagset.iter().position(|t| t == l).unwrap()] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let head_bias = counts
            .iter()
            .map(|&c| T::from_f64_lossy(((c as f64 + 1e-3) / total as f64).ln()))
            .collect();
        let d = encoder.config.d_model;
        Tagger {
            head_weight: Array2::zeros((d, tagset.len())),
            head_bias,
            tagset,
            scheme: train.scheme,
            encoder,
        }
    }

    fn logits(&self, hidden: &Array2<T>) -> Array2<T> {
        hidden.dot(&self.head_weight) + &self.head_bias
    }

    /// Predicted label strings for each sequence.
    pub fn predict(&self, vocab: &Vocab, corpus: &TaggedCorpus) -> Result<Vec<Vec<String>>> {
        let max_len = self.encoder.config.max_len;
        let mut out = Vec::with_capacity(corpus.sequences.len());
        for seq in &corpus.sequences {
            let mut labels = Vec::with_capacity(seq.tokens.len());
            for chunk in seq.tokens.chunks(max_len) {
                let ids: Vec<u32> = chunk
                    .iter()
                    .map(|t| vocab.tokenize(t, 1).first().copied().unwrap_or(crate::nnet::UNK_ID))
                    .collect();
                let batch = TokenBatch::from_sequences(&[ids])?;
                let cache = forward_hidden(&self.encoder, &batch)?;
                let logits = self.logits(&cache.hidden);
                for row in logits.rows() {
                    let best = argmax(row.iter().map(|v| v.as_f64()));
                    labels.push(self.tagset[best].clone());
                }
            }
            out.push(labels);
        }
        Ok(out)
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn evaluate_tagger<T: Scalar>(tagger: &Tagger<T>, vocab: &Vocab, test: &TaggedCorpus) -> Result<TaggingMetrics> {
    let predicted = tagger.predict(vocab, test)?;
    let gold: Vec<Vec<String>> = test.sequences.iter().map(|s| s.labels.clone()).collect();
    Ok(score_predictions(&gold, &predicted, test.scheme))
}

pub fn score_predictions(gold: &[Vec<String>], predicted: &[Vec<String>], scheme: TagScheme) -> TaggingMetrics {
    let (mut correct, mut total) = (0usize, 0usize);
    for (g, p) in gold.iter().zip(predicted) {
        total += g.len();
        correct += g.iter().zip(p).filter(|(a, b)| a == b).count();
    }
    TaggingMetrics {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        span: (scheme == TagScheme::BioNer).then(|| span_f1(gold, predicted)),
    }
}

/// Fine-tunes encoder and head with per-token cross-entropy and keeps the
/// epoch with the best dev score (F1 for BIO data, accuracy otherwise).
pub fn finetune_tagger<T: Scalar>(
    encoder: &EncoderParams<T>,
    vocab: &Vocab,
    train: &TaggedCorpus,
    dev: &TaggedCorpus,
    options: &FinetuneOptions,
) -> Result<(Tagger<T>, Vec<EpochRecord>)> {
    if train.scheme != dev.scheme {
        return Err(Error::invalid("train and dev use different tag schemes"));
    }
    if options.batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    let unseen: Vec<&String> = dev.tagset.difference(&train.tagset).collect();
    if !unseen.is_empty() {
        log::warn!("dev labels {unseen:?} never occur in training and will be scored as wrong");
    }
    let mut tagger = Tagger::new(encoder.clone(), train);
    let mut best = (evaluate_tagger(&tagger, vocab, dev)?.primary(), tagger.clone());
    let data = windows(train, vocab, &tagger.tagset, encoder.config.max_len);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut enc_opt = AdamW::<T>::new(options.optimizer);
    let mut head_opt = AdamW::<T>::new(options.optimizer);
    let mut history = Vec::with_capacity(options.epochs);

    for epoch in 1..=options.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut token_count = 0usize;
        for chunk in order.chunks(options.batch_size) {
            let seqs: Vec<&Vec<u32>> = chunk.iter().map(|&i| &data[i].0).collect();
            let batch = TokenBatch::from_sequences(&seqs)?;
            let t_len = batch.seq_len();
            let cache = forward_hidden(&tagger.encoder, &batch)?;
            let logits = tagger.logits(&cache.hidden);
            let n_tokens: usize = chunk.iter().map(|&i| data[i].1.len()).sum();
            let mut dlogits = Array2::<T>::zeros(logits.dim());
            for (b, &i) in chunk.iter().enumerate() {
                for (t, label) in data[i].1.iter().enumerate() {
                    let row = b * t_len + t;
                    let lp = log_softmax(logits.row(row).iter().map(|v| v.as_f64()));
                    let gold = label.expect("training labels are in the tagset");
                    loss_sum -= lp[gold];
                    for (c, &l) in lp.iter().enumerate() {
                        let target = if c == gold { 1.0 } else { 0.0 };
                        dlogits[[row, c]] = T::from_f64_lossy((l.exp() - target) / n_tokens as f64);
                    }
                }
            }
            token_count += n_tokens;
            let d_head_w = cache.hidden.t().dot(&dlogits);
            let d_head_b = dlogits.sum_axis(Axis(0));
            let d_hidden = dlogits.dot(&tagger.head_weight.t());
            let mut grads = tagger.encoder.zeros_like();
            backward_hidden(&tagger.encoder, &cache, &d_hidden, &mut grads);
            enc_opt.step_encoder(&mut tagger.encoder, &grads)?;
            head_opt.update(
                &mut [
                    tagger.head_weight.as_slice_mut().unwrap(),
                    tagger.head_bias.as_slice_mut().unwrap(),
                ],
                &[d_head_w.as_slice().unwrap(), d_head_b.as_slice().unwrap()],
            )?;
        }
        let dev_metrics = evaluate_tagger(&tagger, vocab, dev)?;
        if dev_metrics.primary() > best.0 {
            best = (dev_metrics.primary(), tagger.clone());
        }
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / token_count.max(1) as f64,
            dev: dev_metrics,
        });
    }
    Ok((best.1, history))
}

fn log_softmax(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    v.into_iter().map(|x| x - lse).collect()
}

/// Checks that `tagger`'s head matches its tagset.
pub fn check_tagger<T: Scalar>(tagger: &Tagger<T>) -> Result<()> {
    let (d, c) = tagger.head_weight.dim();
    if d != tagger.encoder.config.d_model || c != tagger.tagset.len() || tagger.head_bias.len() != c {
        return Err(Error::Shape("tagger head does not match encoder and tagset".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaggedSequence;
    use crate::nnet::{init_encoder, SizePreset};

    fn labels(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn exact_match_f1() {
        let gold = vec![labels("B-PER I-PER O O")];
        assert_eq!(span_f1(&gold, &gold).f1, 1.0);
    }

    #[test]
    fn boundary_mismatch_micro_example() {
        // gold PER[0,1] LOC[3,3]; predicted PER[0,1] LOC[3,4]
        let gold = vec![labels("B-PER I-PER O B-LOC O")];
        let pred = vec![labels("B-PER I-PER O B-LOC I-LOC")];
        let s = span_f1(&gold, &pred);
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn all_outside_prediction() {
        let gold = vec![labels("B-PER O O B-LOC")];
        let pred = vec![labels("O O O O")];
        let m = score_predictions(&gold, &pred, TagScheme::BioNer);
        assert_eq!(m.span.unwrap().f1, 0.0);
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn orphan_inside_opens_span() {
        let spans = extract_spans(&labels("O I-LOC I-LOC B-PER I-LOC"));
        assert_eq!(
            spans,
            vec![
                Span { label: "LOC".into(), start: 1, end: 2 },
                Span { label: "PER".into(), start: 3, end: 3 },
                Span { label: "LOC".into(), start: 4, end: 4 },
            ]
        );
    }

    fn identity_task(n: usize, seed: u64) -> TaggedCorpus {
        // tag A for words starting with "a", B otherwise
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = ["ax", "ay", "az", "aw", "bx", "by", "bz", "bw"];
        let seqs = (0..n)
            .map(|_| {
                let len = rng.random_range(3..8);
                let tokens: Vec<String> = (0..len).map(|_| words[rng.random_range(0..8)].to_string()).collect();
                let labels = tokens
                    .iter()
                    .map(|t| if t.starts_with('a') { "A" } else { "B" }.to_string())
                    .collect();
                TaggedSequence { tokens, labels }
            })
            .collect();
        TaggedCorpus::new(seqs, TagScheme::Upos).unwrap()
    }

    #[test]
    fn untrained_head_predicts_majority() {
        let train = identity_task(40, 1);
        let vocab = Vocab::build(["ax ay az aw bx by bz bw"], 100, 1).unwrap();
        let enc = init_encoder::<f32>(SizePreset::Tiny, vocab.len(), 1).unwrap();
        let opts = FinetuneOptions { epochs: 0, ..Default::default() };
        let (tagger, history) = finetune_tagger(&enc, &vocab, &train, &train, &opts).unwrap();
        assert!(history.is_empty());
        check_tagger(&tagger).unwrap();
        let m = evaluate_tagger(&tagger, &vocab, &train).unwrap();
        let all: Vec<&String> = train.sequences.iter().flat_map(|s| &s.labels).collect();
        let a = all.iter().filter(|l| l.as_str() == "A").count() as f64 / all.len() as f64;
        assert!((m.accuracy - a.max(1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn separable_task_and_determinism() {
        let train = identity_task(60, 1);
        let dev = identity_task(20, 2);
        let vocab = Vocab::build(["ax ay az aw bx by bz bw"], 100, 1).unwrap();
        let enc = init_encoder::<f32>(SizePreset::Tiny, vocab.len(), 1).unwrap();
        let opts = FinetuneOptions { epochs: 10, seed: 4, ..Default::default() };
        let (tagger, history) = finetune_tagger(&enc, &vocab, &train, &dev, &opts).unwrap();
        assert_eq!(history.len(), 10);
        assert!(evaluate_tagger(&tagger, &vocab, &dev).unwrap().accuracy >= 0.99);
        let (_, again) = finetune_tagger(&enc, &vocab, &train, &dev, &opts).unwrap();
        assert_eq!(history, again);
    }
}
