//! Proxy A-distance between corpora from frozen encoder features.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nnet::{mean_pooled, EncoderParams, TokenBatch, Vocab};
use crate::scalar::Scalar;
use crate::table::{fmt_f64, Table};

pub const MIN_DOMAIN_SIZE: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    /// One mean-pooled final hidden state per kept sentence.
    pub vectors: Array2<f64>,
    pub skipped: usize,
}

/// Mean of final hidden states over each sentence's tokens. Sentences with
/// no tokens are skipped and counted.
pub fn encode_sentences<T: Scalar>(params: &EncoderParams<T>, vocab: &Vocab, corpus: &Corpus) -> Result<Encoded> {
    let max_len = params.config.max_len;
    let seqs: Vec<Vec<u32>> = corpus.texts().map(|t| vocab.tokenize(t, max_len)).collect();
    let kept: Vec<&Vec<u32>> = seqs.iter().filter(|s| !s.is_empty()).collect();
    let skipped = seqs.len() - kept.len();
    let mut vectors = Array2::zeros((kept.len(), params.config.d_model));
    for (c, chunk) in kept.chunks(64).enumerate() {
        let pooled = mean_pooled(params, &TokenBatch::from_sequences(chunk)?)?;
        vectors
            .slice_mut(ndarray::s![c * 64..c * 64 + chunk.len(), ..])
            .assign(&pooled);
    }
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sentence encodings".into()));
    }
    Ok(Encoded { vectors, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-3,
            epochs: 200,
            lr: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Array1<f64>,
    pub bias: f64,
}

impl LinearSvm {
    /// Hinge loss plus `lambda/2 |w|^2`, by SGD from zero with step
    /// `lr / sqrt(1 + epoch)`. Labels are +1 and -1.
    pub fn fit(x: &Array2<f64>, y: &[f64], config: &SvmConfig, seed: u64) -> Result<Self> {
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::Shape("features and labels differ in length".into()));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("labels must be +1 or -1"));
        }
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..y.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for epoch in 0..config.epochs {
            let lr = config.lr / (1.0 + epoch as f64).sqrt();
            order.shuffle(&mut rng);
            for &i in &order {
                let xi = x.row(i);
                let margin = y[i] * (w.dot(&xi) + b);
                w *= 1.0 - lr * config.lambda;
                if margin < 1.0 {
                    w.scaled_add(lr * y[i], &xi);
                    b += lr * y[i];
                }
            }
        }
        Ok(LinearSvm { weights: w, bias: b })
    }

    /// +1, -1, or 0 exactly on the boundary.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        let s = self.weights.dot(&x) + self.bias;
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// Fraction of rows not predicted as their label; boundary points count as errors.
    pub fn error_rate(&self, x: &Array2<f64>, y: &[f64]) -> f64 {
        let wrong = x.rows().into_iter().zip(y).filter(|(r, &l)| self.predict(*r) != l).count();
        wrong as f64 / y.len() as f64
    }
}

/// `2 (1 - 2 eps)` with `eps` clamped to `[0, 0.5]`.
pub fn pad_from_error(eps: f64) -> f64 {
    2.0 * (1.0 - 2.0 * eps.clamp(0.0, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadResult {
    /// Held-out error after clamping.
    pub epsilon: f64,
    pub pad: f64,
    pub n_per_domain: usize,
    pub train_per_domain: usize,
    pub test_per_domain: usize,
    pub seed: u64,
}

/// Row indices for a stratified split: the first `n_train` of each seeded
/// per-domain shuffle train, the rest test.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Standardizes with train statistics, fits the classifier and returns the
/// clamped held-out error.
pub fn heldout_error(x: &Array2<f64>, y: &[f64], split: &Split, config: &SvmConfig, seed: u64) -> Result<f64> {
    let train_x = x.select(Axis(0), &split.train);
    let test_x = x.select(Axis(0), &split.test);
    let mean = train_x.mean_axis(Axis(0)).expect("non-empty train set");
    let std = train_x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let z = |m: Array2<f64>| (m - &mean) / &std;
    let train_x = z(train_x);
    let test_x = z(test_x);
    let train_y: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
    let test_y: Vec<f64> = split.test.iter().map(|&i| y[i]).collect();
    let svm = LinearSvm::fit(&train_x, &train_y, config, seed)?;
    Ok(svm.error_rate(&test_x, &test_y).clamp(0.0, 0.5))
}

/// Proxy A-distance between two corpora under a frozen encoder.
pub fn proxy_a_distance<T: Scalar>(
    d1: &Corpus,
    d2: &Corpus,
    params: &EncoderParams<T>,
    vocab: &Vocab,
    seed: u64,
    split_ratio: f64,
) -> Result<PadResult> {
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(Error::invalid("split ratio must lie in (0, 1)"));
    }
    let e1 = encode_sentences(params, vocab, d1)?.vectors;
    let e2 = encode_sentences(params, vocab, d2)?.vectors;
    for (name, e) in [(&d1.name, &e1), (&d2.name, &e2)] {
        if e.nrows() < MIN_DOMAIN_SIZE {
            return Err(Error::invalid(format!(
                "domain {name} has {} usable sentences, at least {MIN_DOMAIN_SIZE} required",
                e.nrows()
            )));
        }
    }
    pad_from_features(&e1, &e2, seed, split_ratio, &SvmConfig::default())
}

/// As [`proxy_a_distance`], on precomputed feature rows.
pub fn pad_from_features(
    e1: &Array2<f64>,
    e2: &Array2<f64>,
    seed: u64,
    split_ratio: f64,
    config: &SvmConfig,
) -> Result<PadResult> {
    let n = e1.nrows().min(e2.nrows());
    let n_train = ((n as f64 * split_ratio).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |e: &Array2<f64>| {
        let mut idx = index::sample(&mut rng, e.nrows(), n).into_vec();
        idx.sort_unstable();
        idx.shuffle(&mut rng);
        e.select(Axis(0), &idx)
    };
    let a = sample(e1);
    let b = sample(e2);
    let x = ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("equal widths");
    let y: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
    let split = Split {
        train: (0..n_train).chain(n..n + n_train).collect(),
        test: (n_train..n).chain(n + n_train..2 * n).collect(),
    };
    let epsilon = heldout_error(&x, &y, &split, config, seed)?;
    Ok(PadResult {
        epsilon,
        pad: pad_from_error(epsilon),
        n_per_domain: n,
        train_per_domain: n_train,
        test_per_domain: n - n_train,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PadRow {
    pub language: String,
    pub domain_1: String,
    pub domain_2: String,
    pub result: PadResult,
}

pub fn pad_table(rows: &[PadRow]) -> Table {
    let mut t = Table::new(["language", "domain-1", "domain-2", "PAD"]);
    for r in rows {
        t.push([
            r.language.clone(),
            r.domain_1.clone(),
            r.domain_2.clone(),
            fmt_f64(r.result.pad),
        ]);
    }
    t
}
