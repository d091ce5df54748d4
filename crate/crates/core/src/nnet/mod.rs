//! Word vocabulary and a small transformer-encoder masked language model
//! with hand-derived gradients.

pub mod checkpoint;
pub mod encoder;
pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use encoder::{
    backward_hidden, forward_hidden, forward_mlm, loss_and_grad, masked_log_probs, mean_pooled, mlm_backward,
    mlm_forward, ForwardCache, MaskedBatch, MlmForward, TokenBatch,
};
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport};
pub use optim::{AdamW, AdamWConfig};
pub use params::{init_encoder, EncoderConfig, EncoderParams, LayerParams, SizePreset};
pub use vocab::{build_vocab, Vocab, MASK_ID, PAD_ID, UNK_ID};
