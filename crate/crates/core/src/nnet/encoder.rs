//! Forward and backward passes of the masked-LM encoder.
//!
//! Activations are stored row-major with one row per (sequence, position):
//! row `b * T + t`. Rows at padding positions are computed but never attended
//! to, so they cannot influence any other row.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis, Zip};

use super::params::EncoderParams;
use super::vocab::PAD_ID;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LN_EPS: f64 = 1e-5;

/// A padded batch of token id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBatch {
    /// B x T token ids.
    pub ids: Array2<u32>,
    /// B x T; false marks padding excluded from attention.
    pub attention: Array2<bool>,
}

impl TokenBatch {
    /// Right-pads `sequences` with PAD to the longest length.
    pub fn from_sequences<S: AsRef<[u32]>>(sequences: &[S]) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::Empty("batch".into()));
        }
        let t = sequences.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        if sequences.iter().any(|s| s.as_ref().is_empty()) {
            return Err(Error::invalid("every sequence needs at least one token"));
        }
        let mut ids = Array2::from_elem((sequences.len(), t), PAD_ID);
        let mut attention = Array2::from_elem((sequences.len(), t), false);
        for (b, seq) in sequences.iter().enumerate() {
            for (i, &tok) in seq.as_ref().iter().enumerate() {
                ids[[b, i]] = tok;
                attention[[b, i]] = true;
            }
        }
        Ok(TokenBatch { ids, attention })
    }

    pub fn batch_size(&self) -> usize {
        self.ids.nrows()
    }

    pub fn seq_len(&self) -> usize {
        self.ids.ncols()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.attention
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|&&a| a).count())
            .collect()
    }

    /// Copy of row `b` without padding.
    pub fn sequence(&self, b: usize) -> Vec<u32> {
        self.ids
            .row(b)
            .iter()
            .zip(self.attention.row(b))
            .filter(|(_, &a)| a)
            .map(|(&t, _)| t)
            .collect()
    }
}

/// A batch with some positions hidden from the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatch {
    /// Model input, with masked positions already substituted.
    pub tokens: TokenBatch,
    /// (row, position) of every prediction target.
    pub positions: Vec<(usize, usize)>,
    /// Original token id at each target position.
    pub originals: Vec<u32>,
}

impl MaskedBatch {
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.originals.len() {
            return Err(Error::Shape("one original id per masked position".into()));
        }
        for &(b, t) in &self.positions {
            if b >= self.tokens.batch_size() || t >= self.tokens.seq_len() || !self.tokens.attention[[b, t]] {
                return Err(Error::invalid(format!("mask position ({b}, {t}) is not a real token")));
            }
        }
        Ok(())
    }

    pub fn masks_per_example(&self) -> Vec<usize> {
        let mut counts = vec![0; self.tokens.batch_size()];
        for &(b, _) in &self.positions {
            counts[b] += 1;
        }
        counts
    }
}

struct LayerNormCache<T> {
    xhat: Array2<T>,
    rstd: Array1<T>,
}

struct LayerCache<T> {
    ln1: LayerNormCache<T>,
    normed1: Array2<T>,
    q: Array2<T>,
    k: Array2<T>,
    v: Array2<T>,
    /// Attention probabilities per (sequence, head), T x T.
    probs: Vec<Array2<T>>,
    context: Array2<T>,
    ln2: LayerNormCache<T>,
    normed2: Array2<T>,
    pre_act: Array2<T>,
    act: Array2<T>,
}

/// Intermediate values of a forward pass, kept for the backward pass.
pub struct ForwardCache<T> {
    ids: Array2<u32>,
    layers: Vec<LayerCache<T>>,
    final_ln: LayerNormCache<T>,
    /// Final hidden states, (B*T) x d.
    pub hidden: Array2<T>,
}

impl<T> ForwardCache<T> {
    pub fn batch_size(&self) -> usize {
        self.ids.nrows()
    }

    pub fn seq_len(&self) -> usize {
        self.ids.ncols()
    }
}

fn layer_norm<T: Scalar>(x: &Array2<T>, gain: &Array1<T>, bias: &Array1<T>) -> (Array2<T>, LayerNormCache<T>) {
    let (n, d) = x.dim();
    let mut xhat = Array2::zeros((n, d));
    let mut rstd = Array1::zeros(n);
    let inv_d = 1.0 / d as f64;
    for (i, row) in x.rows().into_iter().enumerate() {
        let mean = row.iter().map(|v| v.as_f64()).sum::<f64>() * inv_d;
        let var = row.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() * inv_d;
        let r = 1.0 / (var + LN_EPS).sqrt();
        rstd[i] = T::from_f64_lossy(r);
        let (m, r) = (T::from_f64_lossy(mean), T::from_f64_lossy(r));
        Zip::from(xhat.row_mut(i)).and(row).for_each(|h, &v| *h = (v - m) * r);
    }
    let y = &xhat * gain + bias;
    (y, LayerNormCache { xhat, rstd })
}

fn layer_norm_backward<T: Scalar>(
    dy: &Array2<T>,
    cache: &LayerNormCache<T>,
    gain: &Array1<T>,
    dgain: &mut Array1<T>,
    dbias: &mut Array1<T>,
) -> Array2<T> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let dxhat = dy * gain;
    let d = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.dim());
    for i in 0..dy.nrows() {
        let g = dxhat.row(i);
        let h = cache.xhat.row(i);
        let mean_g = g.iter().map(|v| v.as_f64()).sum::<f64>() / d;
        let mean_gh = g.iter().zip(h).map(|(a, b)| a.as_f64() * b.as_f64()).sum::<f64>() / d;
        let (mg, mgh, r) = (T::from_f64_lossy(mean_g), T::from_f64_lossy(mean_gh), cache.rstd[i]);
        Zip::from(dx.row_mut(i))
            .and(g)
            .and(h)
            .for_each(|o, &gv, &hv| *o = r * (gv - mg - hv * mgh));
    }
    dx
}

// tanh approximation of GELU
fn gelu<T: Scalar>(u: T) -> T {
    let c = T::from_f64_lossy((2.0 / std::f64::consts::PI).sqrt());
    let a = T::from_f64_lossy(0.044715);
    let half = T::from_f64_lossy(0.5);
    half * u * (T::one() + (c * (u + a * u * u * u)).tanh())
}

fn gelu_grad<T: Scalar>(u: T) -> T {
    let c = T::from_f64_lossy((2.0 / std::f64::consts::PI).sqrt());
    let a = T::from_f64_lossy(0.044715);
    let half = T::from_f64_lossy(0.5);
    let three = T::from_f64_lossy(3.0);
    let t = (c * (u + a * u * u * u)).tanh();
    half * (T::one() + t) + half * u * (T::one() - t * t) * c * (T::one() + three * a * u * u)
}

fn check_batch<T: Scalar>(params: &EncoderParams<T>, batch: &TokenBatch) -> Result<()> {
    if batch.seq_len() > params.config.max_len {
        return Err(Error::invalid(format!(
            "sequence length {} exceeds the encoder maximum {}",
            batch.seq_len(),
            params.config.max_len
        )));
    }
    if batch.ids.dim() != batch.attention.dim() {
        return Err(Error::Shape("ids and attention mask differ in shape".into()));
    }
    let v = params.vocab_size() as u32;
    if let Some(bad) = batch.ids.iter().find(|&&id| id >= v) {
        return Err(Error::invalid(format!("token id {bad} outside vocabulary of {v}")));
    }
    for (b, row) in batch.attention.rows().into_iter().enumerate() {
        if !row.iter().any(|&a| a) {
            return Err(Error::invalid(format!("sequence {b} has no real tokens")));
        }
    }
    Ok(())
}

/// Runs the encoder and returns the final hidden states with the cache
/// needed by [`backward_hidden`].
pub fn forward_hidden<T: Scalar>(params: &EncoderParams<T>, batch: &TokenBatch) -> Result<ForwardCache<T>> {
    check_batch(params, batch)?;
    let (b_size, t_len) = batch.ids.dim();
    let d = params.config.d_model;
    let heads = params.config.heads;
    let dh = params.config.head_dim();
    let scale = T::from_f64_lossy(1.0 / (dh as f64).sqrt());

    let mut x = Array2::<T>::zeros((b_size * t_len, d));
    for b in 0..b_size {
        for t in 0..t_len {
            let row = b * t_len + t;
            let tok = params.token_embedding.row(batch.ids[[b, t]] as usize);
            let pos = params.position_embedding.row(t);
            Zip::from(x.row_mut(row)).and(tok).and(pos).for_each(|o, &a, &p| *o = a + p);
        }
    }

    let mut layers = Vec::with_capacity(params.layers.len());
    for lp in &params.layers {
        let (normed1, ln1) = layer_norm(&x, &lp.ln1_gain, &lp.ln1_bias);
        let q = normed1.dot(&lp.wq) + &lp.bq;
        let k = normed1.dot(&lp.wk) + &lp.bk;
        let v = normed1.dot(&lp.wv) + &lp.bv;
        let mut context = Array2::<T>::zeros((b_size * t_len, d));
        let mut probs = Vec::with_capacity(b_size * heads);
        for b in 0..b_size {
            let rows = b * t_len..(b + 1) * t_len;
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let qh = q.slice(s![rows.clone(), cols.clone()]);
                let kh = k.slice(s![rows.clone(), cols.clone()]);
                let vh = v.slice(s![rows.clone(), cols.clone()]);
                let mut p = qh.dot(&kh.t());
                p.mapv_inplace(|s| s * scale);
                masked_softmax_rows(&mut p, batch.attention.row(b).as_slice().unwrap());
                context
                    .slice_mut(s![rows.clone(), cols])
                    .assign(&p.dot(&vh));
                probs.push(p);
            }
        }
        let attn_out = context.dot(&lp.wo) + &lp.bo;
        x += &attn_out;
        let (normed2, ln2) = layer_norm(&x, &lp.ln2_gain, &lp.ln2_bias);
        let pre_act = normed2.dot(&lp.w1) + &lp.b1;
        let act = pre_act.mapv(gelu);
        let ffn_out = act.dot(&lp.w2) + &lp.b2;
        x += &ffn_out;
        layers.push(LayerCache {
            ln1,
            normed1,
            q,
            k,
            v,
            probs,
            context,
            ln2,
            normed2,
            pre_act,
            act,
        });
    }
    let (hidden, final_ln) = layer_norm(&x, &params.final_gain, &params.final_bias);
    if hidden.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("encoder activations".into()));
    }
    Ok(ForwardCache {
        ids: batch.ids.clone(),
        layers,
        final_ln,
        hidden,
    })
}

fn masked_softmax_rows<T: Scalar>(scores: &mut Array2<T>, keep: &[bool]) {
    for mut row in scores.rows_mut() {
        let max = row
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(v, _)| v.as_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0f64;
        for (v, &k) in row.iter_mut().zip(keep) {
            if k {
                let e = (v.as_f64() - max).exp();
                z += e;
                *v = T::from_f64_lossy(e);
            } else {
                *v = T::zero();
            }
        }
        let inv = T::from_f64_lossy(1.0 / z);
        row.mapv_inplace(|v| v * inv);
    }
}

/// Backpropagates a gradient on the final hidden states into parameter
/// gradients, accumulating into `grads`.
pub fn backward_hidden<T: Scalar>(
    params: &EncoderParams<T>,
    cache: &ForwardCache<T>,
    d_hidden: &Array2<T>,
    grads: &mut EncoderParams<T>,
) {
    let (b_size, t_len) = cache.ids.dim();
    let heads = params.config.heads;
    let dh = params.config.head_dim();
    let scale = T::from_f64_lossy(1.0 / (dh as f64).sqrt());

    let mut dx = layer_norm_backward(
        d_hidden,
        &cache.final_ln,
        &params.final_gain,
        &mut grads.final_gain,
        &mut grads.final_bias,
    );

    for ((lp, lc), lg) in params
        .layers
        .iter()
        .zip(&cache.layers)
        .zip(grads.layers.iter_mut())
        .rev()
    {
        // feed-forward residual branch
        lg.w2 += &lc.act.t().dot(&dx);
        lg.b2 += &dx.sum_axis(Axis(0));
        let mut d_pre = dx.dot(&lp.w2.t());
        Zip::from(&mut d_pre).and(&lc.pre_act).for_each(|g, &u| *g = *g * gelu_grad(u));
        lg.w1 += &lc.normed2.t().dot(&d_pre);
        lg.b1 += &d_pre.sum_axis(Axis(0));
        let d_normed2 = d_pre.dot(&lp.w1.t());
        dx += &layer_norm_backward(&d_normed2, &lc.ln2, &lp.ln2_gain, &mut lg.ln2_gain, &mut lg.ln2_bias);

        // attention residual branch
        lg.wo += &lc.context.t().dot(&dx);
        lg.bo += &dx.sum_axis(Axis(0));
        let d_context = dx.dot(&lp.wo.t());
        let mut dq = Array2::<T>::zeros(lc.q.dim());
        let mut dk = Array2::<T>::zeros(lc.k.dim());
        let mut dv = Array2::<T>::zeros(lc.v.dim());
        for b in 0..b_size {
            let rows = b * t_len..(b + 1) * t_len;
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let p = &lc.probs[b * heads + h];
                let dc = d_context.slice(s![rows.clone(), cols.clone()]);
                let qh = lc.q.slice(s![rows.clone(), cols.clone()]);
                let kh = lc.k.slice(s![rows.clone(), cols.clone()]);
                let vh = lc.v.slice(s![rows.clone(), cols.clone()]);
                dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&p.t().dot(&dc));
                let dp = dc.dot(&vh.t());
                let ds = softmax_backward(p.view(), dp.view(), scale);
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&ds.dot(&kh));
                dk.slice_mut(s![rows.clone(), cols]).assign(&ds.t().dot(&qh));
            }
        }
        lg.wq += &lc.normed1.t().dot(&dq);
        lg.bq += &dq.sum_axis(Axis(0));
        lg.wk += &lc.normed1.t().dot(&dk);
        lg.bk += &dk.sum_axis(Axis(0));
        lg.wv += &lc.normed1.t().dot(&dv);
        lg.bv += &dv.sum_axis(Axis(0));
        let d_normed1 = dq.dot(&lp.wq.t()) + dk.dot(&lp.wk.t()) + dv.dot(&lp.wv.t());
        dx += &layer_norm_backward(&d_normed1, &lc.ln1, &lp.ln1_gain, &mut lg.ln1_gain, &mut lg.ln1_bias);
    }

    for b in 0..b_size {
        for t in 0..t_len {
            let row = dx.row(b * t_len + t);
            let tok = cache.ids[[b, t]] as usize;
            let mut te = grads.token_embedding.row_mut(tok);
            te += &row;
            let mut pe = grads.position_embedding.row_mut(t);
            pe += &row;
        }
    }
}

/// Gradient of the pre-softmax scores (already multiplied by `scale`).
fn softmax_backward<T: Scalar>(p: ArrayView2<T>, dp: ArrayView2<T>, scale: T) -> Array2<T> {
    let mut ds = Array2::zeros(p.dim());
    for i in 0..p.nrows() {
        let dot = p
            .row(i)
            .iter()
            .zip(dp.row(i))
            .map(|(a, b)| a.as_f64() * b.as_f64())
            .sum::<f64>();
        let dot = T::from_f64_lossy(dot);
        Zip::from(ds.row_mut(i))
            .and(p.row(i))
            .and(dp.row(i))
            .for_each(|o, &pv, &g| *o = pv * (g - dot) * scale);
    }
    ds
}

/// Row-wise log-softmax over the output vocabulary, accumulated in f64.
fn log_softmax_rows<T: Scalar>(logits: &Array2<T>) -> Array2<f64> {
    let mut out = logits.mapv(|v| v.as_f64());
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

fn output_logits<T: Scalar>(params: &EncoderParams<T>, hidden: &Array2<T>) -> Array2<T> {
    hidden.dot(&params.token_embedding.t()) + &params.output_bias
}

/// Log-probabilities over the vocabulary at every position, B x T x |V|.
pub fn forward_mlm<T: Scalar>(params: &EncoderParams<T>, batch: &TokenBatch) -> Result<Array3<f64>> {
    let cache = forward_hidden(params, batch)?;
    let logp = log_softmax_rows(&output_logits(params, &cache.hidden));
    if logp.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("output log-probabilities".into()));
    }
    let (b, t) = batch.ids.dim();
    Ok(logp
        .into_shape_with_order((b, t, params.vocab_size()))
        .expect("row-major reshape"))
}

/// Log-probabilities at selected (row, position) pairs only, one row each.
pub fn masked_log_probs<T: Scalar>(
    params: &EncoderParams<T>,
    batch: &TokenBatch,
    positions: &[(usize, usize)],
) -> Result<Array2<f64>> {
    let cache = forward_hidden(params, batch)?;
    let selected = gather_rows(&cache.hidden, positions, batch.seq_len());
    let logp = log_softmax_rows(&output_logits(params, &selected));
    if logp.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("output log-probabilities".into()));
    }
    Ok(logp)
}

fn gather_rows<T: Scalar>(hidden: &Array2<T>, positions: &[(usize, usize)], t_len: usize) -> Array2<T> {
    let idx: Vec<usize> = positions.iter().map(|&(b, t)| b * t_len + t).collect();
    hidden.select(Axis(0), &idx)
}

/// Forward state of a masked-LM step.
pub struct MlmForward<T> {
    pub cache: ForwardCache<T>,
    positions: Vec<(usize, usize)>,
    originals: Vec<u32>,
    selected: Array2<T>,
    /// Softmax probabilities at the masked positions.
    probs: Array2<f64>,
    /// Negative log-likelihood of each masked position.
    pub position_losses: Vec<f64>,
    /// Mean masked-position loss of each example.
    pub example_losses: Vec<f64>,
    masks_per_example: Vec<usize>,
}

/// Forward pass producing per-example mean cross-entropy over masked positions.
pub fn mlm_forward<T: Scalar>(params: &EncoderParams<T>, batch: &MaskedBatch) -> Result<MlmForward<T>> {
    batch.validate()?;
    let masks_per_example = batch.masks_per_example();
    if let Some(b) = masks_per_example.iter().position(|&m| m == 0) {
        return Err(Error::invalid(format!("example {b} has no masked position")));
    }
    let cache = forward_hidden(params, &batch.tokens)?;
    let selected = gather_rows(&cache.hidden, &batch.positions, batch.tokens.seq_len());
    let logp = log_softmax_rows(&output_logits(params, &selected));
    let position_losses: Vec<f64> = batch
        .originals
        .iter()
        .enumerate()
        .map(|(m, &gold)| -logp[[m, gold as usize]])
        .collect();
    if position_losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("masked-LM loss".into()));
    }
    let mut example_losses = vec![0.0; masks_per_example.len()];
    for (&(b, _), &l) in batch.positions.iter().zip(&position_losses) {
        example_losses[b] += l;
    }
    for (l, &m) in example_losses.iter_mut().zip(&masks_per_example) {
        *l /= m as f64;
    }
    Ok(MlmForward {
        cache,
        positions: batch.positions.clone(),
        originals: batch.originals.clone(),
        selected,
        probs: logp.mapv(f64::exp),
        position_losses,
        example_losses,
        masks_per_example,
    })
}

/// Gradient of `sum_b weight[b] * example_loss[b]`.
pub fn mlm_backward<T: Scalar>(
    params: &EncoderParams<T>,
    fwd: &MlmForward<T>,
    example_weights: &[f64],
) -> EncoderParams<T> {
    assert_eq!(example_weights.len(), fwd.example_losses.len());
    let mut grads = params.zeros_like();
    let mut dlogits = Array2::<T>::zeros(fwd.probs.dim());
    for (m, (&(b, _), &gold)) in fwd.positions.iter().zip(&fwd.originals).enumerate() {
        let w = example_weights[b] / fwd.masks_per_example[b] as f64;
        Zip::from(dlogits.row_mut(m))
            .and(fwd.probs.row(m))
            .for_each(|g, &p| *g = T::from_f64_lossy(w * p));
        dlogits[[m, gold as usize]] = T::from_f64_lossy(w * (fwd.probs[[m, gold as usize]] - 1.0));
    }
    grads.output_bias += &dlogits.sum_axis(Axis(0));
    grads.token_embedding += &dlogits.t().dot(&fwd.selected);
    let d_selected = dlogits.dot(&params.token_embedding);
    let t_len = fwd.cache.seq_len();
    let mut d_hidden = Array2::<T>::zeros(fwd.cache.hidden.dim());
    for (m, &(b, t)) in fwd.positions.iter().enumerate() {
        let mut row = d_hidden.row_mut(b * t_len + t);
        row += &d_selected.row(m);
    }
    backward_hidden(params, &fwd.cache, &d_hidden, &mut grads);
    grads
}

/// Per-example losses and the gradient of their sum.
pub fn loss_and_grad<T: Scalar>(params: &EncoderParams<T>, batch: &MaskedBatch) -> Result<(Vec<f64>, EncoderParams<T>)> {
    let fwd = mlm_forward(params, batch)?;
    let weights = vec![1.0; fwd.example_losses.len()];
    let grads = mlm_backward(params, &fwd, &weights);
    Ok((fwd.example_losses, grads))
}

/// Mean of final hidden states over the real (non-padding) positions of each row.
pub fn mean_pooled<T: Scalar>(params: &EncoderParams<T>, batch: &TokenBatch) -> Result<Array2<f64>> {
    let cache = forward_hidden(params, batch)?;
    let (b_size, t_len) = batch.ids.dim();
    let d = params.config.d_model;
    let mut out = Array2::<f64>::zeros((b_size, d));
    for b in 0..b_size {
        let mut n = 0usize;
        for t in 0..t_len {
            if batch.attention[[b, t]] {
                n += 1;
                let mut o = out.row_mut(b);
                Zip::from(&mut o)
                    .and(cache.hidden.row(b * t_len + t))
                    .for_each(|a, &h| *a += h.as_f64());
            }
        }
        out.row_mut(b).mapv_inplace(|v| v / n as f64);
    }
    Ok(out)
}
