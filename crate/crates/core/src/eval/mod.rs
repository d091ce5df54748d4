//! Intrinsic masked-LM metrics and downstream tagging.

pub mod intrinsic;
pub mod tagging;

pub use intrinsic::{
    dict_precision_at_k, evaluate_intrinsic, mean_pll, precision_at_k, EvalReport, MaskedLanguageModel,
    PllReport, PrecisionReport, DEFAULT_KS,
};
pub use tagging::{
    evaluate_tagger, extract_spans, finetune_tagger, span_f1, FinetuneOptions, Span, SpanScores, Tagger,
    TaggingMetrics,
};
