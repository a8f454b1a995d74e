//! The training loop: seeded shuffling, mini-batch Adam with elastic-net
//! regularization, and a validation-accuracy-driven learning-rate schedule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedReport;
use crate::encoder::build_vocab;
use crate::error::{Error, Result};
use crate::lexicon::{dict_match_features, DictMatchFeatures, DomainDictionary};
use crate::nn::{AdamState, LstmDims};
use crate::preprocess::normalize_token;
use crate::sbd::{filter_sentences, SentenceDisposition, TfIdfModel};
use crate::tagger::crf::{build_transition_mask, crf_gradients, viterbi_decode};
use crate::tagger::model::{
    backward_sentence, forward_sentence, ModelDims, TrainedModel, GROUP_TRANSITIONS,
};

/// Default cosine threshold above which a significant sentence counts as a
/// duplicate of an already-kept one.
pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.95;

/// Instances are fanned out to worker threads in fixed-size chunks whose
/// partial gradients are summed in index order, keeping results independent
/// of thread scheduling.
const GRADIENT_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_decay_factor: f64,
    pub lr_floor: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub min_count: usize,
    pub dedup_threshold: f64,
    pub dims: ModelDims,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.005,
            batch_size: 100,
            epochs: 10,
            lr_decay_factor: 5.0,
            lr_floor: 1e-8,
            lambda1: 1e-5,
            lambda2: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            min_count: 1,
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            dims: ModelDims::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.batch_size == 0
            || self.lr_decay_factor <= 1.0
            || self.lr_floor <= 0.0
            || self.lambda1 < 0.0
            || self.lambda2 < 0.0
        {
            return Err(Error::Config("training hyperparameters out of range".into()));
        }
        if self.lr_floor >= self.learning_rate {
            return Err(Error::Config("lr_floor must be below learning_rate".into()));
        }
        Ok(())
    }
}

/// One training/decoding unit: a kept sentence with normalized tokens,
/// dictionary features, and (for training) gold tag indices.
#[derive(Debug, Clone)]
pub struct SentenceInstance {
    /// Index of this sentence within its report.
    pub sentence: usize,
    pub tokens: Vec<String>,
    pub features: Vec<DictMatchFeatures>,
    pub gold: Vec<usize>,
}

/// Normalizes a report's stored sentences the same way the prediction
/// pipeline would and keeps only significant, non-duplicate ones.
pub fn report_instances(
    report: &AnnotatedReport,
    dictionary: &DomainDictionary,
    tfidf: &TfIdfModel,
    dedup_threshold: f64,
) -> Vec<SentenceInstance> {
    let normalized: Vec<Vec<String>> = report
        .sentences
        .iter()
        .map(|s| s.iter().map(|t| normalize_token(t, dictionary)).collect())
        .collect();
    let dispositions = filter_sentences(&normalized, dictionary, dedup_threshold, tfidf);
    let mut out = Vec::new();
    for (i, disposition) in dispositions.iter().enumerate() {
        if *disposition != SentenceDisposition::Kept || normalized[i].is_empty() {
            continue;
        }
        let features = dict_match_features(&normalized[i], dictionary);
        let gold = report.gold_tags[i].0.iter().map(|t| t.index()).collect();
        out.push(SentenceInstance {
            sentence: i,
            tokens: normalized[i].clone(),
            features,
            gold,
        });
    }
    out
}

/// Fits corpus-level document frequencies; each report is one document.
pub fn fit_tfidf(reports: &[AnnotatedReport], dictionary: &DomainDictionary) -> TfIdfModel {
    let normalized: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            r.sentences
                .iter()
                .flatten()
                .map(|t| normalize_token(t, dictionary))
                .collect()
        })
        .collect();
    TfIdfModel::fit(normalized.iter().map(|doc| doc.iter().map(String::as_str).collect()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_report_accuracy: f64,
}

/// LSTM parameter groups carrying the elastic-net penalty: (group index,
/// dims) for both char, both dict, and both sentence LSTMs.
fn regularized_groups(dims: ModelDims) -> [(usize, LstmDims); 6] {
    [
        (2, dims.encoder.char_lstm()),
        (3, dims.encoder.char_lstm()),
        (4, dims.encoder.dict_lstm()),
        (5, dims.encoder.dict_lstm()),
        (6, dims.sent_lstm()),
        (7, dims.sent_lstm()),
    ]
}

fn elastic_net_penalty(groups: &[Vec<f64>], dims: ModelDims, l1: f64, l2: f64) -> f64 {
    let mut penalty = 0.0;
    for (gi, ld) in regularized_groups(dims) {
        for &w in &groups[gi][ld.recurrent_range()] {
            penalty += l1 * w.abs() + l2 * w * w;
        }
    }
    penalty
}

fn add_elastic_net_gradients(
    groups: &[Vec<f64>],
    grads: &mut [Vec<f64>],
    dims: ModelDims,
    l1: f64,
    l2: f64,
) {
    for (gi, ld) in regularized_groups(dims) {
        let range = ld.recurrent_range();
        for (w, g) in groups[gi][range.clone()].iter().zip(&mut grads[gi][range]) {
            // subgradient convention: sign(0) = 0
            let sign = if *w == 0.0 { 0.0 } else { w.signum() };
            *g += l1 * sign + 2.0 * l2 * w;
        }
    }
}

/// Loss and gradient contribution of a slice of instances, summed in slice
/// order into a fresh gradient set.
fn chunk_gradients(
    chunk: &[&SentenceInstance],
    model: &TrainedModel,
    mask: &[Vec<bool>],
) -> (f64, Vec<Vec<f64>>) {
    let mut grads: Vec<Vec<f64>> = model.groups.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut loss = 0.0;
    for inst in chunk {
        let fwd = forward_sentence(
            &inst.tokens,
            &inst.features,
            &model.groups,
            model.dims,
            &model.vocab,
        );
        let (nll, d_em, d_trans) = crf_gradients(
            &fwd.emissions,
            &model.groups[GROUP_TRANSITIONS],
            mask,
            &inst.gold,
        );
        loss += nll;
        backward_sentence(&fwd, &d_em, &model.groups, model.dims, &mut grads);
        for (g, d) in grads[GROUP_TRANSITIONS].iter_mut().zip(&d_trans) {
            *g += d;
        }
    }
    (loss, grads)
}

/// Decodes every kept sentence of each report and scores all-or-nothing
/// agreement of predicted vs gold entity spans.
pub fn report_accuracy_neural(
    reports: &[AnnotatedReport],
    model: &TrainedModel,
    dictionary: &DomainDictionary,
    tfidf: &TfIdfModel,
    mask: &[Vec<bool>],
    dedup_threshold: f64,
) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    let correct: usize = reports
        .par_iter()
        .map(|report| {
            let mut predicted: Vec<(usize, usize, usize, usize)> = Vec::new();
            for inst in report_instances(report, dictionary, tfidf, dedup_threshold) {
                let fwd = forward_sentence(
                    &inst.tokens,
                    &inst.features,
                    &model.groups,
                    model.dims,
                    &model.vocab,
                );
                let (path, _) =
                    viterbi_decode(&fwd.emissions, &model.groups[GROUP_TRANSITIONS], mask);
                predicted.extend(decode_spans(&path).into_iter().map(|(cat, s, e)| {
                    (cat, inst.sentence, s, e)
                }));
            }
            let mut gold: Vec<(usize, usize, usize, usize)> = report
                .gold_entities
                .iter()
                .map(|e| (e.category.index(), e.sentence, e.start, e.end))
                .collect();
            predicted.sort_unstable();
            gold.sort_unstable();
            usize::from(predicted == gold)
        })
        .sum();
    correct as f64 / reports.len() as f64
}

/// Spans `(category index, start, end)` of a decoded tag-index path.
pub fn decode_spans(path: &[usize]) -> Vec<(usize, usize, usize)> {
    use crate::corpus::{Tag, TagPosition};
    let mut out = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    for (i, &idx) in path.iter().enumerate() {
        match Tag::from_index(idx).expect("decoded index in range") {
            Tag::Outside => {}
            Tag::Span(TagPosition::S, cat) => out.push((cat.index(), i, i + 1)),
            Tag::Span(TagPosition::B, cat) => open = Some((cat.index(), i)),
            Tag::Span(TagPosition::I, _) => {}
            Tag::Span(TagPosition::E, _) => {
                if let Some((cat, start)) = open.take() {
                    out.push((cat, start, i + 1));
                }
            }
        }
    }
    out
}

/// Trains the full network. Returns the parameters achieving the best
/// validation report accuracy together with the per-epoch metrics log.
pub fn train(
    train_reports: &[AnnotatedReport],
    validation_reports: &[AnnotatedReport],
    dictionary: &DomainDictionary,
    config: &TrainingConfig,
) -> Result<(TrainedModel, Vec<EpochMetrics>)> {
    config.validate()?;
    if train_reports.is_empty() || validation_reports.is_empty() {
        return Err(Error::EmptyInput("training and validation splits must be non-empty".into()));
    }
    let train_ids: std::collections::BTreeSet<&str> =
        train_reports.iter().map(|r| r.report_id.as_str()).collect();
    if validation_reports.iter().any(|r| train_ids.contains(r.report_id.as_str())) {
        return Err(Error::Config("training and validation splits overlap".into()));
    }

    let tfidf = fit_tfidf(train_reports, dictionary);
    let instances: Vec<SentenceInstance> = train_reports
        .iter()
        .flat_map(|r| report_instances(r, dictionary, &tfidf, config.dedup_threshold))
        .collect();
    if instances.is_empty() {
        return Err(Error::EmptyInput("no significant sentences in the training split".into()));
    }
    let vocab = build_vocab(instances.iter().map(|i| i.tokens.as_slice()), config.min_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TrainedModel::new(vocab, config.dims, &mut rng);
    let mask = build_transition_mask();

    let mut metrics = Vec::new();
    if config.epochs == 0 {
        return Ok((model, metrics));
    }

    let lens: Vec<usize> = model.groups.iter().map(Vec::len).collect();
    let mut adam = AdamState::new(&lens);
    let mut lr = config.learning_rate;
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut best_groups = model.groups.clone();

    for epoch in 0..config.epochs {
        if lr < config.lr_floor {
            break;
        }
        let mut order: Vec<usize> = (0..instances.len()).collect();
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(
            config.seed ^ (epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        order.shuffle(&mut epoch_rng);

        let mut epoch_loss = 0.0;
        let mut num_batches = 0usize;
        for batch_ids in order.chunks(config.batch_size) {
            let batch: Vec<&SentenceInstance> = batch_ids.iter().map(|&i| &instances[i]).collect();
            let partials: Vec<(f64, Vec<Vec<f64>>)> = batch
                .par_chunks(GRADIENT_CHUNK)
                .map(|chunk| chunk_gradients(chunk, &model, &mask))
                .collect();
            let mut grads: Vec<Vec<f64>> = model.groups.iter().map(|g| vec![0.0; g.len()]).collect();
            let mut batch_loss = 0.0;
            for (loss, partial) in partials {
                batch_loss += loss;
                for (acc, p) in grads.iter_mut().zip(partial) {
                    for (a, v) in acc.iter_mut().zip(p) {
                        *a += v;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            batch_loss *= scale;
            for g in &mut grads {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            }
            batch_loss +=
                elastic_net_penalty(&model.groups, model.dims, config.lambda1, config.lambda2);
            add_elastic_net_gradients(
                &model.groups,
                &mut grads,
                model.dims,
                config.lambda1,
                config.lambda2,
            );
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss became non-finite in epoch {epoch} (lr {lr})"
                )));
            }
            adam.update(&mut model.groups, &grads, lr, config.beta1, config.beta2, config.epsilon);
            epoch_loss += batch_loss;
            num_batches += 1;
        }

        let accuracy = report_accuracy_neural(
            validation_reports,
            &model,
            dictionary,
            &tfidf,
            &mask,
            config.dedup_threshold,
        );
        metrics.push(EpochMetrics {
            epoch,
            learning_rate: lr,
            train_loss: epoch_loss / num_batches.max(1) as f64,
            validation_report_accuracy: accuracy,
        });
        if accuracy > best_accuracy {
            best_accuracy = accuracy;
            best_groups = model.groups.clone();
        } else if accuracy < best_accuracy {
            lr /= config.lr_decay_factor;
        }
    }
    model.groups = best_groups;
    Ok((model, metrics))
}
