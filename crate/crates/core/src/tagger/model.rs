//! Model parameter layout, the full sentence forward/backward pass, and
//! on-disk serialization (JSON manifest + little-endian f32 arrays).

use std::fs;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Tag, NUM_TAGS};
use crate::encoder::{
    encode_backward, encode_sentence, init_encoder_groups, EncoderDims, EncoderGrads,
    EncoderParams, SentenceEncoding, Vocab,
};
use crate::error::{Error, Result};
use crate::lexicon::DictMatchFeatures;
use crate::nn::{init_lstm_params, lstm_backward, lstm_forward, LstmCache, LstmDims};
use crate::tagger::crf::num_states;

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const GROUP_NAMES: [&str; 11] = [
    "word_table",
    "char_table",
    "char_fwd",
    "char_bwd",
    "dict_fwd",
    "dict_bwd",
    "sent_fwd",
    "sent_bwd",
    "emission_w",
    "emission_b",
    "transitions",
];

pub const GROUP_SENT_FWD: usize = 6;
pub const GROUP_SENT_BWD: usize = 7;
pub const GROUP_EMISSION_W: usize = 8;
pub const GROUP_EMISSION_B: usize = 9;
pub const GROUP_TRANSITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub encoder: EncoderDims,
    /// Sentence Bi-LSTM hidden size per direction.
    pub sent_hidden: usize,
    pub num_tags: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            encoder: EncoderDims::default(),
            sent_hidden: 300,
            num_tags: NUM_TAGS,
        }
    }
}

impl ModelDims {
    pub fn sent_lstm(&self) -> LstmDims {
        LstmDims {
            input: self.encoder.token_dim(),
            hidden: self.sent_hidden,
        }
    }

    /// Emission projection input: forward ⊕ backward sentence states.
    pub fn context_dim(&self) -> usize {
        2 * self.sent_hidden
    }

    /// Expected length of each parameter group, in canonical order.
    pub fn group_lens(&self, num_words: usize, num_chars: usize) -> Vec<usize> {
        let e = self.encoder;
        let n = num_states(self.num_tags);
        vec![
            num_words * e.word_dim,
            num_chars * e.char_dim,
            e.char_lstm().param_len(),
            e.char_lstm().param_len(),
            e.dict_lstm().param_len(),
            e.dict_lstm().param_len(),
            self.sent_lstm().param_len(),
            self.sent_lstm().param_len(),
            self.num_tags * self.context_dim(),
            self.num_tags,
            n * n,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub format_version: u32,
    pub dims: ModelDims,
    pub vocab: Vocab,
    /// Parameter groups in [`GROUP_NAMES`] order.
    pub groups: Vec<Vec<f64>>,
}

pub fn init_groups(vocab: &Vocab, dims: ModelDims, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut groups = init_encoder_groups(vocab, dims.encoder, rng);
    groups.push(init_lstm_params(dims.sent_lstm(), rng));
    groups.push(init_lstm_params(dims.sent_lstm(), rng));
    let fan = dims.context_dim() + dims.num_tags;
    let limit = (6.0 / fan as f64).sqrt();
    groups.push(
        (0..dims.num_tags * dims.context_dim())
            .map(|_| rng.gen_range(-limit..limit))
            .collect(),
    );
    groups.push(vec![0.0; dims.num_tags]);
    let n = num_states(dims.num_tags);
    groups.push(vec![0.0; n * n]);
    groups
}

impl TrainedModel {
    pub fn new(vocab: Vocab, dims: ModelDims, rng: &mut impl Rng) -> TrainedModel {
        let groups = init_groups(&vocab, dims, rng);
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            dims,
            vocab,
            groups,
        }
    }

    pub fn transitions(&self) -> &[f64] {
        &self.groups[GROUP_TRANSITIONS]
    }
}

/// Cached activations of one sentence's forward pass.
pub struct SentenceForward {
    pub enc: SentenceEncoding,
    sent_fwd_cache: LstmCache,
    sent_bwd_cache: LstmCache,
    /// Per-token forward ⊕ backward sentence states (dim 2H).
    pub context: Vec<Vec<f64>>,
    /// Per-token tag scores (dim num_tags).
    pub emissions: Vec<Vec<f64>>,
}

/// Runs encoder → sentence Bi-LSTM → emission projection.
pub fn forward_sentence(
    tokens: &[String],
    features: &[DictMatchFeatures],
    groups: &[Vec<f64>],
    dims: ModelDims,
    vocab: &Vocab,
) -> SentenceForward {
    let enc_params = EncoderParams {
        word_table: &groups[0],
        char_table: &groups[1],
        char_fwd: &groups[2],
        char_bwd: &groups[3],
        dict_fwd: &groups[4],
        dict_bwd: &groups[5],
    };
    let enc = encode_sentence(tokens, features, vocab, dims.encoder, &enc_params);
    let n = tokens.len();
    let sent_dims = dims.sent_lstm();
    let rev: Vec<Vec<f64>> = enc.vectors.iter().rev().cloned().collect();
    let sent_fwd_cache = lstm_forward(&groups[GROUP_SENT_FWD], sent_dims, &enc.vectors);
    let sent_bwd_cache = lstm_forward(&groups[GROUP_SENT_BWD], sent_dims, &rev);
    let mut context = Vec::with_capacity(n);
    let mut emissions = Vec::with_capacity(n);
    let w = &groups[GROUP_EMISSION_W];
    let b = &groups[GROUP_EMISSION_B];
    for t in 0..n {
        let mut ctx = Vec::with_capacity(dims.context_dim());
        ctx.extend_from_slice(&sent_fwd_cache.hidden[t]);
        ctx.extend_from_slice(&sent_bwd_cache.hidden[n - 1 - t]);
        let mut em = b.clone();
        crate::nn::matvec_acc(w, &ctx, &mut em);
        context.push(ctx);
        emissions.push(em);
    }
    SentenceForward {
        enc,
        sent_fwd_cache,
        sent_bwd_cache,
        context,
        emissions,
    }
}

/// Backpropagates `d_emissions` through the emission layer, sentence
/// Bi-LSTM, and encoder, accumulating into `grads` (same layout as
/// `groups`; the transitions group is handled by the CRF and untouched
/// here).
pub fn backward_sentence(
    fwd: &SentenceForward,
    d_emissions: &[Vec<f64>],
    groups: &[Vec<f64>],
    dims: ModelDims,
    grads: &mut [Vec<f64>],
) {
    let n = fwd.emissions.len();
    let h = dims.sent_hidden;
    let w = &groups[GROUP_EMISSION_W];

    let mut fwd_dh = vec![vec![0.0; h]; n];
    let mut bwd_dh = vec![vec![0.0; h]; n];
    {
        let mut it = grads[GROUP_EMISSION_W..].iter_mut();
        let gw = it.next().unwrap();
        let gb = it.next().unwrap();
        for t in 0..n {
            let mut d_ctx = vec![0.0; dims.context_dim()];
            crate::nn::matvec_backward(w, &fwd.context[t], &d_emissions[t], gw, &mut d_ctx);
            for (g, d) in gb.iter_mut().zip(&d_emissions[t]) {
                *g += d;
            }
            fwd_dh[t].copy_from_slice(&d_ctx[..h]);
            bwd_dh[n - 1 - t].copy_from_slice(&d_ctx[h..]);
        }
    }
    let (dxs_f, dxs_b) = {
        let mut it = grads[GROUP_SENT_FWD..=GROUP_SENT_BWD].iter_mut();
        let gf = it.next().unwrap();
        let gb = it.next().unwrap();
        (
            lstm_backward(&groups[GROUP_SENT_FWD], &fwd.sent_fwd_cache, &fwd_dh, gf),
            lstm_backward(&groups[GROUP_SENT_BWD], &fwd.sent_bwd_cache, &bwd_dh, gb),
        )
    };
    let d_vectors: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            dxs_f[t]
                .iter()
                .zip(&dxs_b[n - 1 - t])
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    let enc_params = EncoderParams {
        word_table: &groups[0],
        char_table: &groups[1],
        char_fwd: &groups[2],
        char_bwd: &groups[3],
        dict_fwd: &groups[4],
        dict_bwd: &groups[5],
    };
    let mut it = grads.iter_mut();
    let mut enc_grads = EncoderGrads {
        word_table: it.next().unwrap(),
        char_table: it.next().unwrap(),
        char_fwd: it.next().unwrap(),
        char_bwd: it.next().unwrap(),
        dict_fwd: it.next().unwrap(),
        dict_bwd: it.next().unwrap(),
    };
    encode_backward(&fwd.enc, &d_vectors, dims.encoder, &enc_params, &mut enc_grads);
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupInfo {
    name: String,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    dims: ModelDims,
    tags: Vec<String>,
    words: Vec<String>,
    chars: Vec<char>,
    groups: Vec<GroupInfo>,
}

impl TrainedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let manifest = Manifest {
            format_version: self.format_version,
            dims: self.dims,
            tags: Tag::all().map(|t| t.to_string()).collect(),
            words: self.vocab.words.clone(),
            chars: self.vocab.chars.clone(),
            groups: GROUP_NAMES
                .iter()
                .zip(&self.groups)
                .map(|(name, g)| GroupInfo {
                    name: name.to_string(),
                    len: g.len(),
                })
                .collect(),
        };
        let manifest_bytes = serde_json::to_vec(&manifest)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(&(manifest_bytes.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest_bytes);
        for group in &self.groups {
            for &v in group {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
        let mut file = fs::File::open(path)?;
        let mut len_bytes = [0u8; 8];
        file.read_exact(&mut len_bytes)
            .map_err(|_| Error::ModelFormat("missing manifest length".into()))?;
        let manifest_len = u64::from_le_bytes(len_bytes) as usize;
        let mut manifest_bytes = vec![0u8; manifest_len];
        file.read_exact(&mut manifest_bytes)
            .map_err(|_| Error::ModelFormat("truncated manifest".into()))?;
        let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        if manifest.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let expected_tags: Vec<String> = Tag::all().map(|t| t.to_string()).collect();
        if manifest.tags != expected_tags {
            return Err(Error::ModelFormat("tag list mismatch".into()));
        }
        let expected = manifest
            .dims
            .group_lens(manifest.words.len(), manifest.chars.len());
        if manifest.groups.len() != GROUP_NAMES.len() {
            return Err(Error::ModelFormat("wrong number of parameter groups".into()));
        }
        let mut groups = Vec::with_capacity(GROUP_NAMES.len());
        for ((info, name), len) in manifest.groups.iter().zip(GROUP_NAMES).zip(&expected) {
            if info.name != name || info.len != *len {
                return Err(Error::ModelFormat(format!(
                    "group {} has len {}, expected {name} with len {len}",
                    info.name, info.len
                )));
            }
            let mut bytes = vec![0u8; info.len * 4];
            file.read_exact(&mut bytes)
                .map_err(|_| Error::ModelFormat(format!("truncated group {name}")))?;
            groups.push(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect(),
            );
        }
        let mut trailing = [0u8; 1];
        if file.read(&mut trailing)? != 0 {
            return Err(Error::ModelFormat("trailing bytes after last group".into()));
        }
        let mut vocab = Vocab::from_lists(manifest.words, manifest.chars);
        vocab.reindex();
        Ok(TrainedModel {
            format_version: manifest.format_version,
            dims: manifest.dims,
            vocab,
            groups,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::build_vocab;
    use crate::tagger::crf::{build_transition_mask, crf_gradients};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_dims() -> ModelDims {
        ModelDims {
            encoder: EncoderDims {
                word_dim: 5,
                char_dim: 3,
                char_hidden: 2,
                dict_hidden: 2,
            },
            sent_hidden: 4,
            num_tags: NUM_TAGS,
        }
    }

    fn tiny_model(seed: u64) -> TrainedModel {
        let sents = [vec!["a".to_string(), "polyp".to_string(), "mm".to_string()]];
        let vocab = build_vocab(sents.iter().map(|s| s.as_slice()), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TrainedModel::new(vocab, tiny_dims(), &mut rng)
    }

    #[test]
    fn group_lens_match_init() {
        let model = tiny_model(1);
        let lens = model.dims.group_lens(model.vocab.num_words(), model.vocab.num_chars());
        let actual: Vec<usize> = model.groups.iter().map(Vec::len).collect();
        assert_eq!(lens, actual);
    }

    #[test]
    fn save_load_round_trip() {
        let model = tiny_model(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let loaded = TrainedModel::load(&path).unwrap();
        assert_eq!(loaded.dims, model.dims);
        assert_eq!(loaded.vocab.words, model.vocab.words);
        for (a, b) in loaded.groups.iter().zip(&model.groups) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6); // f32 storage precision
            }
        }
    }

    #[test]
    fn load_rejects_truncated_file() {
        let model = tiny_model(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(TrainedModel::load(&path).is_err());
    }

    #[test]
    fn full_network_gradients_match_finite_differences() {
        let model = tiny_model(4);
        let dims = model.dims;
        let tokens = vec!["polyp".to_string(), "a".to_string(), "mm".to_string()];
        let features = vec![DictMatchFeatures::default(); 3];
        let mask = build_transition_mask();
        let gold = vec![0usize, 1, 3]; // O, B-Indication, E-Indication

        let loss = |groups: &[Vec<f64>]| -> f64 {
            let fwd = forward_sentence(&tokens, &features, groups, dims, &model.vocab);
            let (nll, _, _) =
                crf_gradients(&fwd.emissions, &groups[GROUP_TRANSITIONS], &mask, &gold);
            nll
        };
        let fwd = forward_sentence(&tokens, &features, &model.groups, dims, &model.vocab);
        let (_, d_em, d_trans) =
            crf_gradients(&fwd.emissions, &model.groups[GROUP_TRANSITIONS], &mask, &gold);
        let mut grads: Vec<Vec<f64>> = model.groups.iter().map(|g| vec![0.0; g.len()]).collect();
        backward_sentence(&fwd, &d_em, &model.groups, dims, &mut grads);
        for (g, d) in grads[GROUP_TRANSITIONS].iter_mut().zip(&d_trans) {
            *g += d;
        }
        let h = 1e-5;
        for gi in 0..model.groups.len() {
            let step = (model.groups[gi].len() / 25).max(1);
            for idx in (0..model.groups[gi].len()).step_by(step) {
                let mut pert = model.groups.clone();
                pert[gi][idx] += h;
                let up = loss(&pert);
                pert[gi][idx] -= 2.0 * h;
                let down = loss(&pert);
                let fd = (up - down) / (2.0 * h);
                let an = grads[gi][idx];
                let denom = fd.abs().max(an.abs()).max(1e-4);
                assert!(
                    ((fd - an).abs() / denom) < 1e-4,
                    "group {gi} idx {idx}: fd {fd} analytic {an}"
                );
            }
        }
    }
}
