//! The Bi-LSTM-CRF tagger: CRF layer, model parameters and serialization,
//! training loop, and the end-to-end prediction pipeline.

pub mod crf;
pub mod model;
pub mod predict;
pub mod train;

pub use crf::{build_transition_mask, crf_gradients, crf_log_partition, crf_path_score, viterbi_decode};
pub use model::{backward_sentence, forward_sentence, ModelDims, SentenceForward, TrainedModel};
pub use predict::Pipeline;
pub use train::{
    fit_tfidf, report_accuracy_neural, report_instances, train, EpochMetrics, SentenceInstance,
    TrainingConfig, DEFAULT_DEDUP_THRESHOLD,
};
