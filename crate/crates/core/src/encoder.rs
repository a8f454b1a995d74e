//! Token vector construction: word-table lookup, character Bi-LSTM, and a
//! sentence-level Bi-LSTM over dictionary-match features, concatenated into
//! `e_i` per token.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{DictMatchFeatures, DICT_FEATURE_DIM};
use crate::nn::{init_lstm_params, lstm_backward, lstm_forward, LstmCache, LstmDims};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Word and character vocabularies, built from the training split only,
/// with deterministic (lexicographic) ordering after PAD and UNK.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Vocab {
    pub words: Vec<String>,
    pub chars: Vec<char>,
    #[serde(skip)]
    word_ids: BTreeMap<String, usize>,
    #[serde(skip)]
    char_ids: BTreeMap<char, usize>,
}

impl Vocab {
    pub fn from_lists(words: Vec<String>, chars: Vec<char>) -> Vocab {
        let word_ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let char_ids = chars.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Vocab {
            words,
            chars,
            word_ids,
            char_ids,
        }
    }

    /// Rebuilds the lookup maps after deserialization.
    pub fn reindex(&mut self) {
        self.word_ids = self.words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        self.char_ids = self.chars.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    }

    pub fn word_id(&self, word: &str) -> usize {
        self.word_ids.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_ids.get(&c).copied().unwrap_or(UNK_ID)
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_chars(&self) -> usize {
        self.chars.len()
    }
}

/// Builds vocabularies from normalized training sentences. Words below
/// `min_count` fall back to UNK.
pub fn build_vocab<'a>(
    sentences: impl Iterator<Item = &'a [String]>,
    min_count: usize,
) -> Result<Vocab> {
    let mut word_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut chars: std::collections::BTreeSet<char> = std::collections::BTreeSet::new();
    let mut seen_any = false;
    for sent in sentences {
        seen_any = true;
        for tok in sent {
            *word_counts.entry(tok).or_insert(0) += 1;
            chars.extend(tok.chars());
        }
    }
    if !seen_any {
        return Err(Error::EmptyInput("vocabulary needs a non-empty training split".into()));
    }
    let mut words = vec!["<pad>".to_string(), "<unk>".to_string()];
    words.extend(
        word_counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .map(|(w, _)| w.to_string()),
    );
    let mut char_list = vec!['\u{0}', '\u{1}']; // PAD, UNK sentinels
    char_list.extend(chars);
    Ok(Vocab::from_lists(words, char_list))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub dict_hidden: usize,
}

impl Default for EncoderDims {
    fn default() -> Self {
        EncoderDims {
            word_dim: 100,
            char_dim: 25,
            char_hidden: 50,
            dict_hidden: 50,
        }
    }
}

impl EncoderDims {
    /// e_i dimension: word lookup + char Bi-LSTM + dictionary Bi-LSTM.
    pub fn token_dim(self) -> usize {
        self.word_dim + 2 * self.char_hidden + 2 * self.dict_hidden
    }

    pub fn char_lstm(self) -> LstmDims {
        LstmDims {
            input: self.char_dim,
            hidden: self.char_hidden,
        }
    }

    pub fn dict_lstm(self) -> LstmDims {
        LstmDims {
            input: DICT_FEATURE_DIM,
            hidden: self.dict_hidden,
        }
    }
}

/// Borrowed parameter groups of the encoder.
pub struct EncoderParams<'a> {
    pub word_table: &'a [f64],
    pub char_table: &'a [f64],
    pub char_fwd: &'a [f64],
    pub char_bwd: &'a [f64],
    pub dict_fwd: &'a [f64],
    pub dict_bwd: &'a [f64],
}

pub struct EncoderGrads<'a> {
    pub word_table: &'a mut [f64],
    pub char_table: &'a mut [f64],
    pub char_fwd: &'a mut [f64],
    pub char_bwd: &'a mut [f64],
    pub dict_fwd: &'a mut [f64],
    pub dict_bwd: &'a mut [f64],
}

pub fn init_embedding_table(rows: usize, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..rows * dim).map(|_| rng.gen_range(-0.1..0.1)).collect()
}

/// Forward activations kept for the backward pass.
pub struct SentenceEncoding {
    pub vectors: Vec<Vec<f64>>,
    word_ids: Vec<usize>,
    char_ids: Vec<Vec<usize>>,
    char_fwd_caches: Vec<LstmCache>,
    char_bwd_caches: Vec<LstmCache>,
    dict_fwd_cache: LstmCache,
    dict_bwd_cache: LstmCache,
}

fn table_row(table: &[f64], dim: usize, id: usize) -> &[f64] {
    &table[id * dim..(id + 1) * dim]
}

/// Builds `e_i = word ⊕ char-BiLSTM ⊕ dict-BiLSTM` for every token.
pub fn encode_sentence(
    tokens: &[String],
    features: &[DictMatchFeatures],
    vocab: &Vocab,
    dims: EncoderDims,
    params: &EncoderParams,
) -> SentenceEncoding {
    assert_eq!(tokens.len(), features.len());
    assert!(!tokens.is_empty());
    let char_dims = dims.char_lstm();
    let dict_dims = dims.dict_lstm();

    let word_ids: Vec<usize> = tokens.iter().map(|t| vocab.word_id(t)).collect();
    let char_ids: Vec<Vec<usize>> = tokens
        .iter()
        .map(|t| t.chars().map(|c| vocab.char_id(c)).collect())
        .collect();

    let mut char_fwd_caches = Vec::with_capacity(tokens.len());
    let mut char_bwd_caches = Vec::with_capacity(tokens.len());
    for ids in &char_ids {
        let xs: Vec<Vec<f64>> = ids
            .iter()
            .map(|&id| table_row(params.char_table, dims.char_dim, id).to_vec())
            .collect();
        let xs_rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        char_fwd_caches.push(lstm_forward(params.char_fwd, char_dims, &xs));
        char_bwd_caches.push(lstm_forward(params.char_bwd, char_dims, &xs_rev));
    }

    let dict_xs: Vec<Vec<f64>> = features.iter().map(|f| f.flatten().to_vec()).collect();
    let dict_xs_rev: Vec<Vec<f64>> = dict_xs.iter().rev().cloned().collect();
    let dict_fwd_cache = lstm_forward(params.dict_fwd, dict_dims, &dict_xs);
    let dict_bwd_cache = lstm_forward(params.dict_bwd, dict_dims, &dict_xs_rev);

    let n = tokens.len();
    let mut vectors = Vec::with_capacity(n);
    for t in 0..n {
        let mut v = Vec::with_capacity(dims.token_dim());
        v.extend_from_slice(table_row(params.word_table, dims.word_dim, word_ids[t]));
        v.extend_from_slice(char_fwd_caches[t].final_hidden());
        v.extend_from_slice(char_bwd_caches[t].final_hidden());
        v.extend_from_slice(&dict_fwd_cache.hidden[t]);
        v.extend_from_slice(&dict_bwd_cache.hidden[n - 1 - t]);
        vectors.push(v);
    }
    SentenceEncoding {
        vectors,
        word_ids,
        char_ids,
        char_fwd_caches,
        char_bwd_caches,
        dict_fwd_cache,
        dict_bwd_cache,
    }
}

/// Accumulates parameter gradients given `d_vectors[t] = dL/de_t`.
pub fn encode_backward(
    enc: &SentenceEncoding,
    d_vectors: &[Vec<f64>],
    dims: EncoderDims,
    params: &EncoderParams,
    grads: &mut EncoderGrads,
) {
    let n = enc.vectors.len();
    assert_eq!(d_vectors.len(), n);
    let ch = dims.char_hidden;
    let dh = dims.dict_hidden;
    let w = dims.word_dim;

    // dictionary encoder: gather per-position upstream gradients
    let mut dict_fwd_dh = vec![vec![0.0; dh]; n];
    let mut dict_bwd_dh = vec![vec![0.0; dh]; n];
    for t in 0..n {
        let dv = &d_vectors[t];
        dict_fwd_dh[t].copy_from_slice(&dv[w + 2 * ch..w + 2 * ch + dh]);
        dict_bwd_dh[n - 1 - t].copy_from_slice(&dv[w + 2 * ch + dh..]);
    }
    lstm_backward(params.dict_fwd, &enc.dict_fwd_cache, &dict_fwd_dh, grads.dict_fwd);
    lstm_backward(params.dict_bwd, &enc.dict_bwd_cache, &dict_bwd_dh, grads.dict_bwd);

    for t in 0..n {
        let dv = &d_vectors[t];
        // word table row
        let id = enc.word_ids[t];
        let row = &mut grads.word_table[id * w..(id + 1) * w];
        for (g, d) in row.iter_mut().zip(&dv[..w]) {
            *g += d;
        }
        // char encoders: gradient flows only through the final states
        let len = enc.char_ids[t].len();
        let mut fwd_dh = vec![vec![0.0; ch]; len];
        fwd_dh[len - 1].copy_from_slice(&dv[w..w + ch]);
        let mut bwd_dh = vec![vec![0.0; ch]; len];
        bwd_dh[len - 1].copy_from_slice(&dv[w + ch..w + 2 * ch]);
        let dx_fwd = lstm_backward(params.char_fwd, &enc.char_fwd_caches[t], &fwd_dh, grads.char_fwd);
        let dx_bwd = lstm_backward(params.char_bwd, &enc.char_bwd_caches[t], &bwd_dh, grads.char_bwd);
        for (k, &id) in enc.char_ids[t].iter().enumerate() {
            let row = &mut grads.char_table[id * dims.char_dim..(id + 1) * dims.char_dim];
            for (g, d) in row.iter_mut().zip(&dx_fwd[k]) {
                *g += d;
            }
            // reversed pass: step k of the cache saw char len-1-k
            for (g, d) in row.iter_mut().zip(&dx_bwd[len - 1 - k]) {
                *g += d;
            }
        }
    }
}

/// Convenience bundle for tests and the trainer: freshly initialized
/// encoder parameter groups in canonical order.
pub fn init_encoder_groups(vocab: &Vocab, dims: EncoderDims, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    vec![
        init_embedding_table(vocab.num_words(), dims.word_dim, rng),
        init_embedding_table(vocab.num_chars(), dims.char_dim, rng),
        init_lstm_params(dims.char_lstm(), rng),
        init_lstm_params(dims.char_lstm(), rng),
        init_lstm_params(dims.dict_lstm(), rng),
        init_lstm_params(dims.dict_lstm(), rng),
    ]
}

pub fn encoder_params<'a>(groups: &'a [Vec<f64>]) -> EncoderParams<'a> {
    EncoderParams {
        word_table: &groups[0],
        char_table: &groups[1],
        char_fwd: &groups[2],
        char_bwd: &groups[3],
        dict_fwd: &groups[4],
        dict_bwd: &groups[5],
    }
}
