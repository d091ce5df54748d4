use std::fmt;

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Named encoder size. The three presets form a desk-scale size ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizePreset {
    Tiny,
    Small,
    Base,
}

impl SizePreset {
    pub const ALL: [SizePreset; 3] = [SizePreset::Tiny, SizePreset::Small, SizePreset::Base];

    pub fn config(self) -> EncoderConfig {
        let (layers, d_model, heads, max_len) = match self {
            SizePreset::Tiny => (2, 128, 2, 64),
            SizePreset::Small => (4, 256, 4, 64),
            SizePreset::Base => (6, 512, 8, 128),
        };
        EncoderConfig {
            layers,
            d_model,
            heads,
            max_len,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizePreset::Tiny => "tiny",
            SizePreset::Small => "small",
            SizePreset::Base => "base",
        }
    }
}

impl fmt::Display for SizePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SizePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(SizePreset::Tiny),
            "small" => Ok(SizePreset::Small),
            "base" => Ok(SizePreset::Base),
            other => Err(Error::invalid(format!("unknown size preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.d_model == 0 || self.heads == 0 || self.max_len == 0 {
            return Err(Error::invalid("encoder dimensions must be positive"));
        }
        if self.d_model % self.heads != 0 {
            return Err(Error::invalid("d_model must be divisible by heads"));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn ffn_dim(&self) -> usize {
        4 * self.d_model
    }

    /// Closed-form number of trainable scalars for a vocabulary of `vocab` ids.
    pub fn parameter_count(&self, vocab: usize) -> usize {
        let d = self.d_model;
        let per_layer = 12 * d * d + 13 * d;
        vocab * d + self.max_len * d + self.layers * per_layer + 2 * d + vocab
    }
}

/// Weights of one pre-layer-norm transformer block. Projections map row
/// vectors: `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub ln1_gain: Array1<T>,
    pub ln1_bias: Array1<T>,
    pub wq: Array2<T>,
    pub bq: Array1<T>,
    pub wk: Array2<T>,
    pub bk: Array1<T>,
    pub wv: Array2<T>,
    pub bv: Array1<T>,
    pub wo: Array2<T>,
    pub bo: Array1<T>,
    pub ln2_gain: Array1<T>,
    pub ln2_bias: Array1<T>,
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
}

/// Encoder weights. The output projection is tied to `token_embedding`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    pub config: EncoderConfig,
    pub token_embedding: Array2<T>,
    pub position_embedding: Array2<T>,
    pub layers: Vec<LayerParams<T>>,
    pub final_gain: Array1<T>,
    pub final_bias: Array1<T>,
    pub output_bias: Array1<T>,
}

macro_rules! layer_fields {
    ($m:ident) => {
        $m!(ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo, ln2_gain, ln2_bias, w1, b1, w2, b2)
    };
}

impl<T: Scalar> LayerParams<T> {
    fn filled(d: usize, ffn: usize, mut weight: impl FnMut(usize, usize) -> Array2<T>) -> Self {
        let zeros = |n| Array1::zeros(n);
        let ones = |n| Array1::ones(n);
        LayerParams {
            ln1_gain: ones(d),
            ln1_bias: zeros(d),
            wq: weight(d, d),
            bq: zeros(d),
            wk: weight(d, d),
            bk: zeros(d),
            wv: weight(d, d),
            bv: zeros(d),
            wo: weight(d, d),
            bo: zeros(d),
            ln2_gain: ones(d),
            ln2_bias: zeros(d),
            w1: weight(d, ffn),
            b1: zeros(ffn),
            w2: weight(ffn, d),
            b2: zeros(d),
        }
    }
}

impl<T: Scalar> EncoderParams<T> {
    /// Seeded N(0, 0.02) weights, unit layer-norm gains, zero biases.
    pub fn init(config: EncoderConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if vocab_size < 4 {
            return Err(Error::invalid("vocabulary must hold at least 4 ids"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).expect("valid normal");
        let mut weight = |r: usize, c: usize| {
            Array2::from_shape_simple_fn((r, c), || T::from_f64_lossy(normal.sample(&mut rng)))
        };
        let d = config.d_model;
        let token_embedding = weight(vocab_size, d);
        let position_embedding = weight(config.max_len, d);
        let layers = (0..config.layers)
            .map(|_| LayerParams::filled(d, config.ffn_dim(), &mut weight))
            .collect();
        Ok(EncoderParams {
            config,
            token_embedding,
            position_embedding,
            layers,
            final_gain: Array1::ones(d),
            final_bias: Array1::zeros(d),
            output_bias: Array1::zeros(vocab_size),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.token_embedding.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, mut t) in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, T>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view().into_dyn()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            macro_rules! push {
                ($($f:ident),*) => {
                    $(out.push((format!("layer{i}.{}", stringify!($f)), l.$f.view().into_dyn()));)*
                };
            }
            layer_fields!(push);
        }
        out.push(("final_gain".to_string(), self.final_gain.view().into_dyn()));
        out.push(("final_bias".to_string(), self.final_bias.view().into_dyn()));
        out.push(("output_bias".to_string(), self.output_bias.view().into_dyn()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, T>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view_mut().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view_mut().into_dyn()),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            macro_rules! push {
                ($($f:ident),*) => {
                    $(out.push((format!("layer{i}.{}", stringify!($f)), l.$f.view_mut().into_dyn()));)*
                };
            }
            layer_fields!(push);
        }
        out.push(("final_gain".to_string(), self.final_gain.view_mut().into_dyn()));
        out.push(("final_bias".to_string(), self.final_bias.view_mut().into_dyn()));
        out.push(("output_bias".to_string(), self.output_bias.view_mut().into_dyn()));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn scaled_add(&mut self, scale: T, other: &Self) {
        for ((_, mut a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            Zip::from(&mut a).and(&b).for_each(|x, &y| *x = *x + scale * y);
        }
    }

    /// Converts every weight to another scalar type.
    pub fn cast<U: Scalar>(&self) -> EncoderParams<U> {
        let c2 = |a: &Array2<T>| a.mapv(|v| U::from_f64_lossy(v.as_f64()));
        let c1 = |a: &Array1<T>| a.mapv(|v| U::from_f64_lossy(v.as_f64()));
        EncoderParams {
            config: self.config,
            token_embedding: c2(&self.token_embedding),
            position_embedding: c2(&self.position_embedding),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    ln1_gain: c1(&l.ln1_gain),
                    ln1_bias: c1(&l.ln1_bias),
                    wq: c2(&l.wq),
                    bq: c1(&l.bq),
                    wk: c2(&l.wk),
                    bk: c1(&l.bk),
                    wv: c2(&l.wv),
                    bv: c1(&l.bv),
                    wo: c2(&l.wo),
                    bo: c1(&l.bo),
                    ln2_gain: c1(&l.ln2_gain),
                    ln2_bias: c1(&l.ln2_bias),
                    w1: c2(&l.w1),
                    b1: c1(&l.b1),
                    w2: c2(&l.w2),
                    b2: c1(&l.b2),
                })
                .collect(),
            final_gain: c1(&self.final_gain),
            final_bias: c1(&self.final_bias),
            output_bias: c1(&self.output_bias),
        }
    }
}

pub fn init_encoder<T: Scalar>(preset: SizePreset, vocab_size: usize, seed: u64) -> Result<EncoderParams<T>> {
    EncoderParams::init(preset.config(), vocab_size, seed)
}
