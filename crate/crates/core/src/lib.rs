//! Masked language models for creole and contact-language corpora.
//!
//! The crate covers corpus mixing and splitting, character n-gram language
//! identification for grouping, a small transformer encoder trained under
//! empirical risk minimization or online group DRO, intrinsic and tagging
//! evaluation, and proxy A-distance between domains.
//!
//! Encoder math is generic over [`Scalar`]; the aliases below fix the two
//! precisions in use.

pub mod corpus;
pub mod divergence;
pub mod error;
pub mod eval;
pub mod langid;
pub mod nnet;
pub mod objective;
pub mod scalar;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision encoder used for training and inference.
pub type Encoder = nnet::EncoderParams<f32>;
/// Double-precision encoder used for gradient verification.
pub type Encoder64 = nnet::EncoderParams<f64>;
