//! Rule-based extraction of polyp size, location, and count values, and the
//! merge of rule outputs with neural predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Entity, EntityCategory, Facility};
use crate::error::{Error, Result};
use crate::preprocess::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeBin {
    Small,
    Medium,
    Large,
}

impl SizeBin {
    /// Small 1-4 mm, Medium 5-9 mm, Large >= 10 mm (10 mm treated as Large
    /// so the bins partition).
    pub fn from_millimeters(mm: f64) -> SizeBin {
        if mm >= 10.0 {
            SizeBin::Large
        } else if mm >= 5.0 {
            SizeBin::Medium
        } else {
            SizeBin::Small
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeValue {
    pub millimeters: f64,
    pub bin: SizeBin,
}

impl SizeValue {
    pub fn from_millimeters(mm: f64) -> SizeValue {
        SizeValue {
            millimeters: mm,
            bin: SizeBin::from_millimeters(mm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColonSegment {
    IleocecalValve,
    Cecum,
    HepaticFlexure,
    Ascending,
    Transverse,
    SplenicFlexure,
    Descending,
    Sigmoid,
    Rectosigmoid,
    Rectum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Laterality {
    Proximal,
    Distal,
}

impl ColonSegment {
    pub fn laterality(self) -> Laterality {
        use ColonSegment::*;
        match self {
            IleocecalValve | Cecum | HepaticFlexure | Ascending | Transverse | SplenicFlexure => {
                Laterality::Proximal
            }
            Descending | Sigmoid | Rectosigmoid | Rectum => Laterality::Distal,
        }
    }
}

impl FromStr for ColonSegment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        use ColonSegment::*;
        Ok(match s {
            "IleocecalValve" => IleocecalValve,
            "Cecum" => Cecum,
            "HepaticFlexure" => HepaticFlexure,
            "Ascending" => Ascending,
            "Transverse" => Transverse,
            "SplenicFlexure" => SplenicFlexure,
            "Descending" => Descending,
            "Sigmoid" => Sigmoid,
            "Rectosigmoid" => Rectosigmoid,
            "Rectum" => Rectum,
            other => return Err(format!("unknown colon segment {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationValue {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<ColonSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laterality: Option<Laterality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_from_rectum_cm: Option<f64>,
}

impl LocationValue {
    pub fn from_segment(segment: ColonSegment) -> LocationValue {
        LocationValue {
            segment: Some(segment),
            laterality: Some(segment.laterality()),
            distance_from_rectum_cm: None,
        }
    }

    pub fn from_distance(cm: f64) -> LocationValue {
        LocationValue {
            segment: None,
            laterality: None,
            distance_from_rectum_cm: Some(cm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountQualifier {
    Many,
    Several,
    Numerous,
    Multiple,
}

impl CountQualifier {
    pub fn parse_word(word: &str) -> Option<CountQualifier> {
        Some(match word {
            "many" => CountQualifier::Many,
            "several" => CountQualifier::Several,
            "numerous" => CountQualifier::Numerous,
            "multiple" => CountQualifier::Multiple,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountValue {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualitative: Option<CountQualifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum NormalizedValue {
    Size(SizeValue),
    Location(LocationValue),
    Count(CountValue),
}

impl NormalizedValue {
    pub fn category(&self) -> EntityCategory {
        match self {
            NormalizedValue::Size(_) => EntityCategory::SizeOfPolyp,
            NormalizedValue::Location(_) => EntityCategory::LocationOfPolyp,
            NormalizedValue::Count(_) => EntityCategory::NumberOfPolyps,
        }
    }
}

/// A rule hit inside one sentence: token span plus normalized value.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleMatch<T> {
    pub start: usize,
    pub end: usize,
    pub value: T,
}

/// Per-facility rule configuration.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub facility: Facility,
    /// size keyword -> representative millimeters
    pub size_keywords: BTreeMap<String, f64>,
    /// words that make a numeral count as a polyp count when nearby
    pub count_context: Vec<String>,
    pub number_words: BTreeMap<String, u32>,
    /// location phrase -> segment, matched longest-first
    pub location_phrases: BTreeMap<String, ColonSegment>,
    /// words signalling a distance-from-rectum context
    pub distance_context: Vec<String>,
    /// words whose presence disqualifies a measurement as a polyp size
    pub size_exclusion_words: Vec<String>,
    /// window (tokens) for count/distance context checks
    pub context_window: usize,
}

impl RuleSet {
    pub fn default_for(facility: Facility) -> RuleSet {
        let size_keywords = [("small", 3.0), ("medium", 7.0), ("large", 10.0), ("diminutive", 2.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let count_context = ["polyp", "polyps", "number", "sessile", "pedunculated"]
            .into_iter()
            .map(String::from)
            .collect();
        let number_words = [
            ("one", 1),
            ("single", 1),
            ("two", 2),
            ("three", 3),
            ("four", 4),
            ("five", 5),
            ("six", 6),
            ("seven", 7),
            ("eight", 8),
            ("nine", 9),
            ("ten", 10),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let location_phrases = [
            ("ileocecal valve", ColonSegment::IleocecalValve),
            ("cecum", ColonSegment::Cecum),
            ("cecal", ColonSegment::Cecum),
            ("hepatic flexure", ColonSegment::HepaticFlexure),
            ("ascending colon", ColonSegment::Ascending),
            ("ascending", ColonSegment::Ascending),
            ("transverse colon", ColonSegment::Transverse),
            ("transverse", ColonSegment::Transverse),
            ("splenic flexure", ColonSegment::SplenicFlexure),
            ("proximal descending colon", ColonSegment::Descending),
            ("descending colon", ColonSegment::Descending),
            ("descending", ColonSegment::Descending),
            ("sigmoid colon", ColonSegment::Sigmoid),
            ("sigmoid", ColonSegment::Sigmoid),
            ("rectosigmoid", ColonSegment::Rectosigmoid),
            ("rectal sigmoid", ColonSegment::Rectosigmoid),
            ("rectum", ColonSegment::Rectum),
            ("rectal", ColonSegment::Rectum),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let distance_context = ["from", "away", "distance"].into_iter().map(String::from).collect();
        let size_exclusion_words = ["rectum", "away"].into_iter().map(String::from).collect();
        RuleSet {
            facility,
            size_keywords,
            count_context,
            number_words,
            location_phrases,
            distance_context,
            size_exclusion_words,
            context_window: 3,
        }
    }

    /// Loads a sectioned plain-text rule file; sections missing from the
    /// file keep their defaults.
    pub fn load(path: impl AsRef<Path>, facility: Facility) -> Result<RuleSet> {
        let mut rules = RuleSet::default_for(facility);
        let text = fs::read_to_string(path)?;
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.to_string();
                match section.as_str() {
                    "SizeKeywords" => rules.size_keywords.clear(),
                    "CountContext" => rules.count_context.clear(),
                    "NumberWords" => rules.number_words.clear(),
                    "LocationPhrases" => rules.location_phrases.clear(),
                    "DistanceContext" => rules.distance_context.clear(),
                    other => return Err(Error::parse(lineno + 1, format!("unknown section [{other}]"))),
                }
                continue;
            }
            let mut cols = line.split('\t');
            let key = cols.next().unwrap().to_lowercase();
            let val = cols.next();
            match section.as_str() {
                "SizeKeywords" => {
                    let mm: f64 = val
                        .ok_or_else(|| Error::parse(lineno + 1, "expected keyword<TAB>mm"))?
                        .parse()
                        .map_err(|_| Error::parse(lineno + 1, "bad millimeter value"))?;
                    rules.size_keywords.insert(key, mm);
                }
                "CountContext" => rules.count_context.push(key),
                "NumberWords" => {
                    let n: u32 = val
                        .ok_or_else(|| Error::parse(lineno + 1, "expected word<TAB>count"))?
                        .parse()
                        .map_err(|_| Error::parse(lineno + 1, "bad count value"))?;
                    rules.number_words.insert(key, n);
                }
                "LocationPhrases" => {
                    let seg: ColonSegment = val
                        .ok_or_else(|| Error::parse(lineno + 1, "expected phrase<TAB>segment"))?
                        .parse()
                        .map_err(|e| Error::parse(lineno + 1, e))?;
                    rules.location_phrases.insert(key, seg);
                }
                "DistanceContext" => rules.distance_context.push(key),
                _ => return Err(Error::parse(lineno + 1, "value before any [Section] header")),
            }
        }
        Ok(rules)
    }

    fn has_context(&self, tokens: &[String], around: usize, span: usize, words: &[String]) -> bool {
        let lo = around.saturating_sub(self.context_window);
        let hi = (around + span + self.context_window).min(tokens.len());
        tokens[lo..hi].iter().any(|t| words.contains(t))
    }
}

fn parse_number(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0)
}

fn unit_factor(token: &str) -> Option<f64> {
    match token {
        "mm" => Some(1.0),
        "cm" => Some(10.0),
        _ => None,
    }
}

/// Recognizes `<num> mm|cm`, ranges `<a> to <b> mm` and `<a>-<b> mm`, and
/// the size keywords. Measurements in a distance-from-rectum context are
/// left to [`extract_location`].
pub fn extract_size(tokens: &[String], rules: &RuleSet) -> Vec<RuleMatch<SizeValue>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        // range "<a> to <b> <unit>"
        if i + 3 < tokens.len() {
            if let (Some(a), "to", Some(b), Some(f)) = (
                parse_number(&tokens[i]),
                tokens[i + 1].as_str(),
                parse_number(&tokens[i + 2]),
                unit_factor(&tokens[i + 3]),
            ) {
                if !rules.has_context(tokens, i, 4, &rules.size_exclusion_words) {
                    out.push(RuleMatch {
                        start: i,
                        end: i + 4,
                        value: SizeValue::from_millimeters(a * f),
                    });
                    out.push(RuleMatch {
                        start: i,
                        end: i + 4,
                        value: SizeValue::from_millimeters(b * f),
                    });
                }
                i += 4;
                continue;
            }
        }
        // hyphen range "<a>-<b> <unit>"
        if i + 1 < tokens.len() {
            if let Some((a_str, b_str)) = tokens[i].split_once('-') {
                if let (Some(a), Some(b), Some(f)) =
                    (parse_number(a_str), parse_number(b_str), unit_factor(&tokens[i + 1]))
                {
                    if !rules.has_context(tokens, i, 2, &rules.size_exclusion_words) {
                        out.push(RuleMatch {
                            start: i,
                            end: i + 2,
                            value: SizeValue::from_millimeters(a * f),
                        });
                        out.push(RuleMatch {
                            start: i,
                            end: i + 2,
                            value: SizeValue::from_millimeters(b * f),
                        });
                    }
                    i += 2;
                    continue;
                }
            }
        }
        // plain "<num> <unit>"
        if i + 1 < tokens.len() {
            if let (Some(n), Some(f)) = (parse_number(&tokens[i]), unit_factor(&tokens[i + 1])) {
                if !rules.has_context(tokens, i, 2, &rules.size_exclusion_words) {
                    out.push(RuleMatch {
                        start: i,
                        end: i + 2,
                        value: SizeValue::from_millimeters(n * f),
                    });
                }
                i += 2;
                continue;
            }
        }
        if let Some(&mm) = rules.size_keywords.get(tokens[i].as_str()) {
            out.push(RuleMatch {
                start: i,
                end: i + 1,
                value: SizeValue::from_millimeters(mm),
            });
        }
        i += 1;
    }
    out
}

/// Maps segment phrases (longest match first) and distance-from-rectum
/// measurements to location values.
pub fn extract_location(tokens: &[String], rules: &RuleSet) -> Vec<RuleMatch<LocationValue>> {
    let mut out = Vec::new();
    let max_len = rules
        .location_phrases
        .keys()
        .map(|p| p.split(' ').count())
        .max()
        .unwrap_or(1);
    let mut i = 0;
    while i < tokens.len() {
        let mut matched = false;
        for n in (1..=max_len.min(tokens.len() - i)).rev() {
            let window = tokens[i..i + n].join(" ");
            if let Some(&segment) = rules.location_phrases.get(&window) {
                // "from the rectum" marks a distance anchor, not a location
                let anchored = segment == ColonSegment::Rectum
                    && tokens[i.saturating_sub(rules.context_window)..i]
                        .iter()
                        .any(|t| rules.distance_context.contains(t));
                if !anchored {
                    out.push(RuleMatch {
                        start: i,
                        end: i + n,
                        value: LocationValue::from_segment(segment),
                    });
                }
                i += n;
                matched = true;
                break;
            }
        }
        if matched {
            continue;
        }
        // "<num> cm" in a from-rectum context
        if i + 1 < tokens.len() && tokens[i + 1] == "cm" {
            if let Some(n) = parse_number(&tokens[i]) {
                let has_anchor = rules.has_context(tokens, i, 2, &rules.distance_context);
                if has_anchor {
                    out.push(RuleMatch {
                        start: i,
                        end: i + 2,
                        value: LocationValue::from_distance(n),
                    });
                    i += 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

/// Numerals and number words near polyp keywords yield exact counts;
/// qualitative count words yield qualitative values.
pub fn extract_count(tokens: &[String], rules: &RuleSet) -> Vec<RuleMatch<CountValue>> {
    let mut out = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        let exact = rules
            .number_words
            .get(token.as_str())
            .copied()
            .or_else(|| token.parse::<u32>().ok().filter(|n| *n >= 1 && *n <= 100));
        let qualitative = CountQualifier::parse_word(token);
        if exact.is_none() && qualitative.is_none() {
            continue;
        }
        if !rules.has_context(tokens, i, 1, &rules.count_context) {
            continue;
        }
        // a numeral that is part of a measurement is a size, not a count
        if exact.is_some() && i + 1 < tokens.len() && unit_factor(&tokens[i + 1]).is_some() {
            continue;
        }
        // a specimen-jar label ("Jar 2:") is not a polyp count
        if exact.is_some() && i > 0 && tokens[i - 1] == "jar" {
            continue;
        }
        // likewise a numeral opening a range ("4 to 15 mm")
        if exact.is_some()
            && i + 3 < tokens.len()
            && tokens[i + 1] == "to"
            && parse_number(&tokens[i + 2]).is_some()
            && unit_factor(&tokens[i + 3]).is_some()
        {
            continue;
        }
        out.push(RuleMatch {
            start: i,
            end: i + 1,
            value: CountValue {
                exact,
                qualitative,
            },
        });
    }
    out
}

/// One rule hit lifted to report coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRuleMatch {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub value: NormalizedValue,
}

/// Runs all three extractors over one sentence.
pub fn apply_rules(tokens: &[Token], sentence: usize, rules: &RuleSet) -> Vec<SentenceRuleMatch> {
    let normalized: Vec<String> = tokens.iter().map(|t| t.normalized.clone()).collect();
    let mut out = Vec::new();
    for m in extract_size(&normalized, rules) {
        out.push(SentenceRuleMatch {
            sentence,
            start: m.start,
            end: m.end,
            value: NormalizedValue::Size(m.value),
        });
    }
    for m in extract_location(&normalized, rules) {
        out.push(SentenceRuleMatch {
            sentence,
            start: m.start,
            end: m.end,
            value: NormalizedValue::Location(m.value),
        });
    }
    for m in extract_count(&normalized, rules) {
        out.push(SentenceRuleMatch {
            sentence,
            start: m.start,
            end: m.end,
            value: NormalizedValue::Count(m.value),
        });
    }
    out
}

/// Merge policy: neural spans lead, rule matches normalize overlapping
/// entities of the same category, and rule-only matches are added as new
/// entities (recall backstop).
pub fn merge(
    neural: Vec<Entity>,
    rule_matches: &[SentenceRuleMatch],
    sentence_surfaces: &[Vec<String>],
) -> Vec<Entity> {
    let mut out = neural;
    for entity in &mut out {
        if entity.normalized.is_some() {
            continue;
        }
        if let Some(m) = rule_matches.iter().find(|m| {
            m.value.category() == entity.category
                && m.sentence == entity.sentence
                && m.start < entity.end
                && entity.start < m.end
        }) {
            entity.normalized = Some(m.value.clone());
        }
    }
    for m in rule_matches {
        let covered = out.iter().any(|e| {
            e.category == m.value.category()
                && e.sentence == m.sentence
                && m.start < e.end
                && e.start < m.end
        });
        if covered {
            continue;
        }
        let surface = sentence_surfaces
            .get(m.sentence)
            .map(|s| s[m.start..m.end].join(" "))
            .unwrap_or_default();
        out.push(Entity {
            category: m.value.category(),
            sentence: m.sentence,
            start: m.start,
            end: m.end,
            surface,
            normalized: Some(m.value.clone()),
        });
    }
    out.sort_by_key(|e| (e.sentence, e.start, e.end, e.category.index()));
    out.dedup_by_key(|e| e.key());
    out
}

impl fmt::Display for SizeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SizeBin::Small => "Small",
            SizeBin::Medium => "Medium",
            SizeBin::Large => "Large",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn rules() -> RuleSet {
        RuleSet::default_for(Facility::Albany)
    }

    #[test]
    fn size_range_to() {
        let out = extract_size(&toks(&["4", "to", "15", "mm", "in", "size"]), &rules());
        let vals: Vec<(f64, SizeBin)> = out.iter().map(|m| (m.value.millimeters, m.value.bin)).collect();
        assert_eq!(vals, vec![(4.0, SizeBin::Small), (15.0, SizeBin::Large)]);
    }

    #[test]
    fn size_plain_mm() {
        let out = extract_size(&toks(&["8", "mm"]), &rules());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].value.millimeters, 8.0);
        assert_eq!(out[0].value.bin, SizeBin::Medium);
    }

    #[test]
    fn size_hyphen_range() {
        let out = extract_size(&toks(&["3-5", "mm", "polyp"]), &rules());
        let vals: Vec<(f64, SizeBin)> = out.iter().map(|m| (m.value.millimeters, m.value.bin)).collect();
        assert_eq!(vals, vec![(3.0, SizeBin::Small), (5.0, SizeBin::Medium)]);
    }

    #[test]
    fn size_cm_converts() {
        let out = extract_size(&toks(&["size", "of", "3.5", "cm"]), &rules());
        assert_eq!(out[0].value.millimeters, 35.0);
        assert_eq!(out[0].value.bin, SizeBin::Large);
    }

    #[test]
    fn size_skips_distance_context() {
        let out = extract_size(&toks(&["130", "cm", "from", "the", "rectum"]), &rules());
        assert!(out.is_empty());
    }

    #[test]
    fn location_sigmoid_colon() {
        let out = extract_location(&toks(&["sigmoid", "colon"]), &rules());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].value.segment, Some(ColonSegment::Sigmoid));
        assert_eq!(out[0].value.laterality, Some(Laterality::Distal));
    }

    #[test]
    fn location_hepatic_flexure_proximal() {
        let out = extract_location(&toks(&["hepatic", "flexure"]), &rules());
        assert_eq!(out[0].value.segment, Some(ColonSegment::HepaticFlexure));
        assert_eq!(out[0].value.laterality, Some(Laterality::Proximal));
    }

    #[test]
    fn location_distance_from_rectum() {
        let out = extract_location(&toks(&["130", "cm", "from", "the", "rectum"]), &rules());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].value.segment, None);
        assert_eq!(out[0].value.distance_from_rectum_cm, Some(130.0));
    }

    #[test]
    fn count_six_sessile_polyps() {
        let out = extract_count(&toks(&["six", "sessile", "polyps"]), &rules());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].value.exact, Some(6));
    }

    #[test]
    fn count_rejects_non_polyp_context() {
        let out = extract_count(
            &toks(&["multiple", "small", "and", "large-mouthed", "diverticulitis", "were", "found"]),
            &rules(),
        );
        assert!(out.is_empty());
    }

    #[test]
    fn count_several_polyps_qualitative() {
        let out = extract_count(&toks(&["several", "polyps"]), &rules());
        assert_eq!(out[0].value.qualitative, Some(CountQualifier::Several));
        assert_eq!(out[0].value.exact, None);
    }

    #[test]
    fn bin_boundaries() {
        assert_eq!(SizeBin::from_millimeters(4.0), SizeBin::Small);
        assert_eq!(SizeBin::from_millimeters(5.0), SizeBin::Medium);
        assert_eq!(SizeBin::from_millimeters(9.0), SizeBin::Medium);
        assert_eq!(SizeBin::from_millimeters(10.0), SizeBin::Large);
    }

    fn entity(cat: EntityCategory, sentence: usize, start: usize, end: usize, surface: &str) -> Entity {
        Entity {
            category: cat,
            sentence,
            start,
            end,
            surface: surface.to_string(),
            normalized: None,
        }
    }

    #[test]
    fn merge_attaches_normalization() {
        let neural = vec![entity(EntityCategory::SizeOfPolyp, 0, 3, 5, "8 mm")];
        let matches = vec![SentenceRuleMatch {
            sentence: 0,
            start: 3,
            end: 5,
            value: NormalizedValue::Size(SizeValue::from_millimeters(8.0)),
        }];
        let surfaces = vec![toks(&["the", "polyp", "was", "8", "mm"])];
        let out = merge(neural, &matches, &surfaces);
        assert_eq!(out.len(), 1);
        match out[0].normalized.as_ref().unwrap() {
            NormalizedValue::Size(s) => assert_eq!(s.bin, SizeBin::Medium),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_backstop_adds_rule_only_match() {
        let matches = vec![SentenceRuleMatch {
            sentence: 0,
            start: 0,
            end: 2,
            value: NormalizedValue::Size(SizeValue::from_millimeters(15.0)),
        }];
        let surfaces = vec![toks(&["15", "mm", "polyp"])];
        let out = merge(Vec::new(), &matches, &surfaces);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].surface, "15 mm");
        assert_eq!(out[0].category, EntityCategory::SizeOfPolyp);
    }

    #[test]
    fn merge_is_idempotent() {
        let neural = vec![entity(EntityCategory::LocationOfPolyp, 0, 6, 8, "sigmoid colon")];
        let matches = vec![
            SentenceRuleMatch {
                sentence: 0,
                start: 6,
                end: 8,
                value: NormalizedValue::Location(LocationValue::from_segment(ColonSegment::Sigmoid)),
            },
            SentenceRuleMatch {
                sentence: 0,
                start: 0,
                end: 2,
                value: NormalizedValue::Size(SizeValue::from_millimeters(4.0)),
            },
        ];
        let surfaces = vec![toks(&["4", "mm", "polyp", "was", "seen", "in", "sigmoid", "colon"])];
        let once = merge(Vec::new(), &matches, &surfaces);
        let neural_once = merge(neural, &matches, &surfaces);
        let twice = merge(once.clone(), &matches, &surfaces);
        assert_eq!(once, twice);
        let twice_n = merge(neural_once.clone(), &matches, &surfaces);
        assert_eq!(neural_once, twice_n);
    }

    #[test]
    fn merge_disjoint_union() {
        let neural = vec![entity(EntityCategory::CrcType, 1, 0, 1, "adenoma")];
        let matches = vec![SentenceRuleMatch {
            sentence: 0,
            start: 0,
            end: 1,
            value: NormalizedValue::Count(CountValue {
                exact: Some(3),
                qualitative: None,
            }),
        }];
        let surfaces = vec![toks(&["three", "polyps"]), toks(&["adenoma"])];
        let out = merge(neural, &matches, &surfaces);
        assert_eq!(out.len(), 2);
    }
}
