//! Sentence boundary detection: feature extraction over candidate
//! punctuation positions, a C4.5-style decision tree, S/F segmentation,
//! and TF-IDF sentence filtering/deduplication.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::DomainDictionary;
use crate::preprocess::Token;

const DEFAULT_ABBREVS: &str = include_str!("data/sbd_abbrevs.txt");
const DEFAULT_KEYWORDS: &str = include_str!("data/sbd_keywords.txt");

/// Known abbreviations and field keywords consulted by the feature
/// extractor; editable per facility.
#[derive(Debug, Clone)]
pub struct SbdConfig {
    pub known_abbrevs: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
}

fn parse_wordlist(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

impl Default for SbdConfig {
    fn default() -> Self {
        SbdConfig {
            known_abbrevs: parse_wordlist(DEFAULT_ABBREVS),
            keywords: parse_wordlist(DEFAULT_KEYWORDS),
        }
    }
}

impl SbdConfig {
    pub fn load(abbrevs: impl AsRef<Path>, keywords: impl AsRef<Path>) -> Result<SbdConfig> {
        Ok(SbdConfig {
            known_abbrevs: parse_wordlist(&fs::read_to_string(abbrevs)?),
            keywords: parse_wordlist(&fs::read_to_string(keywords)?),
        })
    }
}

/// Token stream plus inter-token blank-line counts, the input to candidate
/// detection and segmentation.
#[derive(Debug, Clone)]
pub struct SbdContext {
    pub tokens: Vec<Token>,
    /// `blank_lines_after[i]` = blank lines between token `i` and `i+1`.
    pub blank_lines_after: Vec<usize>,
}

impl SbdContext {
    /// Builds the context from tokens and the cleaned text they index into.
    pub fn new(tokens: Vec<Token>, cleaned_text: &str) -> SbdContext {
        let mut blank_lines_after = vec![0; tokens.len()];
        for i in 0..tokens.len().saturating_sub(1) {
            // split compounds share one char span, so the "gap" can be empty
            let start = tokens[i].char_end.min(cleaned_text.len());
            let end = tokens[i + 1].char_start.min(cleaned_text.len());
            let gap = if start < end { &cleaned_text[start..end] } else { "" };
            let newlines = gap.matches('\n').count();
            blank_lines_after[i] = newlines.saturating_sub(1);
        }
        SbdContext {
            tokens,
            blank_lines_after,
        }
    }
}

pub const NUM_SBD_FEATURES: usize = 9;

/// Feature vector for one boundary candidate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SbdFeatures {
    pub is_period: bool,
    pub is_semicolon: bool,
    pub keyword_before: bool,
    pub num_pre_blank_lines: usize,
    pub num_post_blank_lines: usize,
    pub prev_token_is_known_abbrev: bool,
    pub prev_token_is_numeric: bool,
    pub next_token_capitalized: bool,
    pub next_token_is_digit: bool,
}

impl SbdFeatures {
    pub fn to_vec(&self) -> [f64; NUM_SBD_FEATURES] {
        [
            f64::from(self.is_period),
            f64::from(self.is_semicolon),
            f64::from(self.keyword_before),
            self.num_pre_blank_lines as f64,
            self.num_post_blank_lines as f64,
            f64::from(self.prev_token_is_known_abbrev),
            f64::from(self.prev_token_is_numeric),
            f64::from(self.next_token_capitalized),
            f64::from(self.next_token_is_digit),
        ]
    }

    pub const NAMES: [&'static str; NUM_SBD_FEATURES] = [
        "is_period",
        "is_semicolon",
        "keyword_before",
        "num_pre_blank_lines",
        "num_post_blank_lines",
        "prev_token_is_known_abbrev",
        "prev_token_is_numeric",
        "next_token_capitalized",
        "next_token_is_digit",
    ];
}

#[derive(Debug, Clone)]
pub struct LabeledCandidate {
    pub features: SbdFeatures,
    pub is_boundary: bool,
}

fn is_numeric_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-')
        && s.chars().any(|c| c.is_ascii_digit())
}

/// Positions where a sentence could end: a `.`/`;` token, or any token
/// followed by a blank line.
pub fn boundary_candidates(ctx: &SbdContext) -> Vec<usize> {
    (0..ctx.tokens.len())
        .filter(|&i| {
            let surf = ctx.tokens[i].surface.as_str();
            surf == "." || surf == ";" || ctx.blank_lines_after[i] > 0
        })
        .collect()
}

/// Extracts the feature vector for the candidate at `position`.
pub fn extract_sbd_features(
    ctx: &SbdContext,
    position: usize,
    config: &SbdConfig,
) -> Result<SbdFeatures> {
    let tokens = &ctx.tokens;
    let surf = tokens
        .get(position)
        .map(|t| t.surface.as_str())
        .ok_or_else(|| Error::Config(format!("candidate position {position} out of bounds")))?;
    let is_punct = surf == "." || surf == ";";
    if !is_punct && ctx.blank_lines_after[position] == 0 {
        return Err(Error::Config(format!(
            "token {position} ({surf:?}) is not a boundary candidate"
        )));
    }
    // token carrying the sentence content before the candidate punctuation
    let prev = if is_punct {
        position.checked_sub(1).map(|i| &tokens[i])
    } else {
        Some(&tokens[position])
    };
    let next = tokens.get(position + 1);
    let keyword_window_end = if is_punct { position } else { position + 1 };
    let keyword_before = tokens[keyword_window_end.saturating_sub(3)..keyword_window_end]
        .iter()
        .any(|t| config.keywords.contains(&t.normalized));
    Ok(SbdFeatures {
        is_period: surf == ".",
        is_semicolon: surf == ";",
        keyword_before,
        num_pre_blank_lines: position
            .checked_sub(1)
            .map_or(0, |i| ctx.blank_lines_after[i]),
        num_post_blank_lines: ctx.blank_lines_after[position],
        prev_token_is_known_abbrev: prev
            .is_some_and(|t| config.known_abbrevs.contains(&t.normalized)),
        prev_token_is_numeric: prev.is_some_and(|t| is_numeric_token(&t.surface)),
        next_token_capitalized: next
            .is_some_and(|t| t.surface.chars().next().is_some_and(char::is_uppercase)),
        next_token_is_digit: next
            .is_some_and(|t| t.surface.chars().next().is_some_and(|c| c.is_ascii_digit())),
    })
}

// ---------------------------------------------------------------------------
// C4.5-style decision tree: binary splits on maximal gain ratio,
// reduced-error pruning on a held-out tenth of the candidates.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Leaf {
        leaf: bool,
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn predict(&self, features: &SbdFeatures) -> bool {
        let vec = features.to_vec();
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { leaf, .. } => return *leaf,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if vec[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.root).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<DecisionTree> {
        let root = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        Ok(DecisionTree { root })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DecisionTree> {
        DecisionTree::from_json(&fs::read_to_string(path)?)
    }
}

const MIN_LEAF: usize = 5;

fn entropy(counts: [usize; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

fn class_counts(rows: &[(Vec<f64>, bool)]) -> [usize; 2] {
    let pos = rows.iter().filter(|(_, y)| *y).count();
    [rows.len() - pos, pos]
}

fn majority(counts: [usize; 2]) -> bool {
    counts[1] > counts[0]
}

struct Split {
    feature: usize,
    threshold: f64,
    gain_ratio: f64,
}

fn best_split(rows: &[(Vec<f64>, bool)]) -> Option<Split> {
    let parent_entropy = entropy(class_counts(rows));
    let n = rows.len() as f64;
    let mut best: Option<Split> = None;
    for feature in 0..NUM_SBD_FEATURES {
        let mut values: Vec<f64> = rows.iter().map(|(x, _)| x[feature]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let mut left = [0usize; 2];
            let mut right = [0usize; 2];
            for (x, y) in rows {
                let side = if x[feature] <= threshold { &mut left } else { &mut right };
                side[usize::from(*y)] += 1;
            }
            let nl = (left[0] + left[1]) as f64;
            let nr = (right[0] + right[1]) as f64;
            if nl == 0.0 || nr == 0.0 {
                continue;
            }
            // zero-gain splits stay eligible: parity-style concepts only
            // separate below depth one, and pruning removes useless splits
            let gain = (parent_entropy
                - (nl / n) * entropy(left)
                - (nr / n) * entropy(right))
            .max(0.0);
            let split_info = -(nl / n) * (nl / n).log2() - (nr / n) * (nr / n).log2();
            if split_info <= 0.0 {
                continue;
            }
            let gain_ratio = gain / split_info;
            if best.as_ref().map_or(true, |b| gain_ratio > b.gain_ratio) {
                best = Some(Split {
                    feature,
                    threshold,
                    gain_ratio,
                });
            }
        }
    }
    best
}

fn grow(rows: &[(Vec<f64>, bool)]) -> TreeNode {
    let counts = class_counts(rows);
    if counts[0] == 0 || counts[1] == 0 || rows.len() < MIN_LEAF {
        return TreeNode::Leaf {
            leaf: majority(counts),
            counts,
        };
    }
    let Some(split) = best_split(rows) else {
        return TreeNode::Leaf {
            leaf: majority(counts),
            counts,
        };
    };
    let (left_rows, right_rows): (Vec<_>, Vec<_>) = rows
        .iter()
        .cloned()
        .partition(|(x, _)| x[split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(&left_rows)),
        right: Box::new(grow(&right_rows)),
    }
}

fn subtree_counts(node: &TreeNode) -> [usize; 2] {
    match node {
        TreeNode::Leaf { counts, .. } => *counts,
        TreeNode::Split { left, right, .. } => {
            let l = subtree_counts(left);
            let r = subtree_counts(right);
            [l[0] + r[0], l[1] + r[1]]
        }
    }
}

fn node_errors(node: &TreeNode, rows: &[(Vec<f64>, bool)]) -> usize {
    rows.iter()
        .filter(|(x, y)| predict_node(node, x) != *y)
        .count()
}

fn predict_node(node: &TreeNode, x: &[f64]) -> bool {
    match node {
        TreeNode::Leaf { leaf, .. } => *leaf,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] <= *threshold {
                predict_node(left, x)
            } else {
                predict_node(right, x)
            }
        }
    }
}

fn prune(node: TreeNode, prune_rows: &[(Vec<f64>, bool)]) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let (left_rows, right_rows): (Vec<_>, Vec<_>) = prune_rows
                .iter()
                .cloned()
                .partition(|(x, _)| x[feature] <= threshold);
            let left = prune(*left, &left_rows);
            let right = prune(*right, &right_rows);
            let rebuilt = TreeNode::Split {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            };
            let counts = subtree_counts(&rebuilt);
            let as_leaf = TreeNode::Leaf {
                leaf: majority(counts),
                counts,
            };
            if node_errors(&as_leaf, prune_rows) <= node_errors(&rebuilt, prune_rows) {
                as_leaf
            } else {
                rebuilt
            }
        }
    }
}

/// Trains the boundary classifier. Every tenth candidate is held out for
/// reduced-error pruning.
pub fn train_sbd(candidates: &[LabeledCandidate]) -> Result<DecisionTree> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no boundary candidates to train on".into()));
    }
    let rows: Vec<(Vec<f64>, bool)> = candidates
        .iter()
        .map(|c| (c.features.to_vec().to_vec(), c.is_boundary))
        .collect();
    let (prune_rows, grow_rows): (Vec<_>, Vec<_>) = rows
        .iter()
        .enumerate()
        .partition::<Vec<_>, _>(|(i, _)| i % 10 == 9);
    let grow_rows: Vec<_> = grow_rows.into_iter().map(|(_, r)| r.clone()).collect();
    let prune_rows: Vec<_> = prune_rows.into_iter().map(|(_, r)| r.clone()).collect();
    let grow_rows = if grow_rows.is_empty() { rows.clone() } else { grow_rows };
    let root = grow(&grow_rows);
    let root = if prune_rows.is_empty() {
        root
    } else {
        prune(root, &prune_rows)
    };
    Ok(DecisionTree { root })
}

/// A sentence as a token span `[start, end)`; the first token carries the
/// implicit S marker, the last the F marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

/// Splits the token stream at candidates the tree classifies as boundaries.
/// Spans partition the token list.
pub fn segment(ctx: &SbdContext, tree: &DecisionTree, config: &SbdConfig) -> Vec<SentenceSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    for pos in boundary_candidates(ctx) {
        let features = extract_sbd_features(ctx, pos, config).expect("candidate is valid");
        if tree.predict(&features) && pos + 1 > start {
            spans.push(SentenceSpan {
                start,
                end: pos + 1,
            });
            start = pos + 1;
        }
    }
    if start < ctx.tokens.len() {
        spans.push(SentenceSpan {
            start,
            end: ctx.tokens.len(),
        });
    }
    if spans.is_empty() && !ctx.tokens.is_empty() {
        spans.push(SentenceSpan {
            start: 0,
            end: ctx.tokens.len(),
        });
    }
    spans
}

// ---------------------------------------------------------------------------
// TF-IDF sentence filtering and deduplication
// ---------------------------------------------------------------------------

/// Corpus-level document frequencies; documents are reports.
#[derive(Debug, Clone, Default)]
pub struct TfIdfModel {
    df: BTreeMap<String, usize>,
    num_docs: usize,
}

impl TfIdfModel {
    pub fn fit<'a>(documents: impl Iterator<Item = Vec<&'a str>>) -> TfIdfModel {
        let mut df = BTreeMap::new();
        let mut num_docs = 0;
        for doc in documents {
            num_docs += 1;
            let uniq: BTreeSet<&str> = doc.into_iter().collect();
            for term in uniq {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        TfIdfModel { df, num_docs }
    }

    /// Add-one smoothed inverse document frequency.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        (((self.num_docs + 1) as f64) / ((df + 1) as f64)).ln() + 1.0
    }

    fn vector(&self, tokens: &[String]) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        tf.into_iter()
            .map(|(t, f)| (t.to_string(), f * self.idf(t)))
            .collect()
    }
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(t, &v)| b.get(t).map(|w| v * w))
        .sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// How each sentence leaves the filter: kept for entity extraction,
/// retained but wrapped as O, or dropped as a near-duplicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentenceDisposition {
    Kept,
    InsignificantO,
    Duplicate,
}

/// Derives labeled boundary candidates for one annotated report by
/// re-running preprocessing and aligning against the gold sentences.
/// Errors if the report's tokens do not reproduce the stored sentences or
/// if some gold sentence end is not a boundary candidate.
pub fn gold_boundary_candidates(
    report: &crate::corpus::AnnotatedReport,
    dictionary: &DomainDictionary,
    options: crate::preprocess::WordProcessingOptions,
    config: &SbdConfig,
) -> Result<Vec<LabeledCandidate>> {
    let (cleaned, tokens) = crate::preprocess::preprocess(&report.raw_text, dictionary, options);
    let stored: Vec<&str> = report
        .sentences
        .iter()
        .flatten()
        .map(String::as_str)
        .collect();
    let produced: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    if stored != produced {
        return Err(Error::Config(format!(
            "{}: preprocessing does not reproduce stored sentences",
            report.report_id
        )));
    }
    let mut boundaries = BTreeSet::new();
    let mut cumulative = 0;
    for sent in &report.sentences {
        cumulative += sent.len();
        boundaries.insert(cumulative - 1);
    }
    let ctx = SbdContext::new(tokens, &cleaned);
    let candidates = boundary_candidates(&ctx);
    let candidate_set: BTreeSet<usize> = candidates.iter().copied().collect();
    if let Some(&missing) = boundaries.iter().find(|b| !candidate_set.contains(b)) {
        return Err(Error::Config(format!(
            "{}: gold sentence end at token {missing} is not a boundary candidate",
            report.report_id
        )));
    }
    candidates
        .into_iter()
        .map(|pos| {
            Ok(LabeledCandidate {
                features: extract_sbd_features(&ctx, pos, config)?,
                is_boundary: boundaries.contains(&pos),
            })
        })
        .collect()
}

/// A sentence is significant iff some n-gram of it matches a lexicon phrase
/// or it contains a numeric token; among significant sentences, later ones
/// whose TF-IDF cosine to an already-kept sentence reaches `threshold` are
/// marked duplicates.
pub fn filter_sentences(
    sentences: &[Vec<String>],
    dictionary: &DomainDictionary,
    threshold: f64,
    tfidf: &TfIdfModel,
) -> Vec<SentenceDisposition> {
    assert!((0.0..=1.0).contains(&threshold));
    let mut kept_vectors: Vec<BTreeMap<String, f64>> = Vec::new();
    let mut out = Vec::with_capacity(sentences.len());
    for tokens in sentences {
        let significant = tokens.iter().any(|t| is_numeric_token(t))
            || crate::lexicon::dict_match_features(tokens, dictionary)
                .iter()
                .any(|f| *f != crate::lexicon::DictMatchFeatures::default());
        if !significant {
            out.push(SentenceDisposition::InsignificantO);
            continue;
        }
        let vec = tfidf.vector(tokens);
        if kept_vectors.iter().any(|k| cosine(k, &vec) >= threshold) {
            out.push(SentenceDisposition::Duplicate);
            continue;
        }
        kept_vectors.push(vec);
        out.push(SentenceDisposition::Kept);
    }
    out
}
