//! End-to-end inference: clean → tokenize → word-process → segment →
//! filter → encode → Viterbi → span decoding → rule merge.

use crate::corpus::{Entity, Tag, TagSequence};
use crate::error::Result;
use crate::lexicon::{dict_match_features, DomainDictionary};
use crate::preprocess::{preprocess, Token, WordProcessingOptions};
use crate::rules::{apply_rules, merge, RuleSet, SentenceRuleMatch};
use crate::sbd::{
    filter_sentences, segment, DecisionTree, SbdConfig, SbdContext, SentenceDisposition,
    TfIdfModel,
};
use crate::tagger::crf::{build_transition_mask, viterbi_decode};
use crate::tagger::model::{forward_sentence, TrainedModel, GROUP_TRANSITIONS};

/// Everything needed to turn raw report text into entities.
pub struct Pipeline {
    pub model: TrainedModel,
    pub tree: DecisionTree,
    pub sbd_config: SbdConfig,
    pub dictionary: DomainDictionary,
    pub rules: RuleSet,
    pub word_options: WordProcessingOptions,
    pub dedup_threshold: f64,
}

impl Pipeline {
    /// Extracts entities from one raw report. `tfidf` supplies the
    /// corpus-level document frequencies used for duplicate filtering.
    pub fn predict(&self, raw_text: &str, tfidf: &TfIdfModel) -> Result<Vec<Entity>> {
        let (cleaned, tokens) = preprocess(raw_text, &self.dictionary, self.word_options);
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let ctx = SbdContext::new(tokens, &cleaned);
        let spans = segment(&ctx, &self.tree, &self.sbd_config);
        let sentences: Vec<&[Token]> = spans
            .iter()
            .map(|s| &ctx.tokens[s.start..s.end])
            .collect();
        let surfaces: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().map(|t| t.surface.clone()).collect())
            .collect();
        let normalized: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().map(|t| t.normalized.clone()).collect())
            .collect();
        let dispositions =
            filter_sentences(&normalized, &self.dictionary, self.dedup_threshold, tfidf);

        let mask = build_transition_mask();
        let mut neural = Vec::new();
        let mut rule_matches: Vec<SentenceRuleMatch> = Vec::new();
        for (i, disposition) in dispositions.iter().enumerate() {
            if *disposition != SentenceDisposition::Kept || normalized[i].is_empty() {
                continue;
            }
            let features = dict_match_features(&normalized[i], &self.dictionary);
            let fwd = forward_sentence(
                &normalized[i],
                &features,
                &self.model.groups,
                self.model.dims,
                &self.model.vocab,
            );
            let (path, _) =
                viterbi_decode(&fwd.emissions, &self.model.groups[GROUP_TRANSITIONS], &mask);
            let tags = TagSequence(
                path.iter()
                    .map(|&idx| Tag::from_index(idx).expect("decoded index in range"))
                    .collect(),
            );
            neural.extend(crate::corpus::tags_to_entities(&tags, &surfaces[i], i));
            rule_matches.extend(apply_rules(sentences[i], i, &self.rules));
        }
        Ok(merge(neural, &rule_matches, &surfaces))
    }

    /// Rule-only extraction over the same segmentation/filtering, used as
    /// the comparison baseline.
    pub fn predict_rules_only(&self, raw_text: &str, tfidf: &TfIdfModel) -> Result<Vec<Entity>> {
        let (cleaned, tokens) = preprocess(raw_text, &self.dictionary, self.word_options);
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let ctx = SbdContext::new(tokens, &cleaned);
        let spans = segment(&ctx, &self.tree, &self.sbd_config);
        let sentences: Vec<&[Token]> = spans
            .iter()
            .map(|s| &ctx.tokens[s.start..s.end])
            .collect();
        let surfaces: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().map(|t| t.surface.clone()).collect())
            .collect();
        let normalized: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().map(|t| t.normalized.clone()).collect())
            .collect();
        let dispositions =
            filter_sentences(&normalized, &self.dictionary, self.dedup_threshold, tfidf);
        let mut rule_matches = Vec::new();
        for (i, disposition) in dispositions.iter().enumerate() {
            if *disposition == SentenceDisposition::Kept {
                rule_matches.extend(apply_rules(sentences[i], i, &self.rules));
            }
        }
        Ok(merge(Vec::new(), &rule_matches, &surfaces))
    }
}
