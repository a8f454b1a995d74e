//! The domain dictionary: entity phrases grouped by category, abbreviation
//! and compound maps, and per-token dictionary-match features computed by
//! n-gram segmentation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::corpus::EntityCategory;
use crate::error::{Error, Result};

/// Width of the n-gram axis of the feature matrix. Matches of longer
/// phrases land in the last row ("n >= 5").
pub const MAX_NGRAM: usize = 5;
pub const NUM_CATEGORIES: usize = 6;

/// Flattened dimension of one token's dictionary features.
pub const DICT_FEATURE_DIM: usize = MAX_NGRAM * NUM_CATEGORIES;

const DEFAULT_DICTIONARY: &str = include_str!("data/dictionary.txt");
const DEFAULT_ABBREVIATIONS: &str = include_str!("data/abbreviations.tsv");
const DEFAULT_COMPOUNDS: &str = include_str!("data/compounds.tsv");

/// The colonoscopy domain dictionary: per-category phrase sets, a common
/// vocabulary used only for spell correction, and the word-processing maps.
#[derive(Debug, Clone)]
pub struct DomainDictionary {
    entries: BTreeMap<EntityCategory, BTreeSet<String>>,
    abbreviations: BTreeMap<String, String>,
    compounds: BTreeMap<String, (String, String)>,
    // derived
    words: BTreeSet<String>,
    spelling: Vec<String>,
    longest_phrase: usize,
}

impl DomainDictionary {
    pub fn new(
        entries: BTreeMap<EntityCategory, BTreeSet<String>>,
        common: BTreeSet<String>,
        abbreviations: BTreeMap<String, String>,
        compounds: BTreeMap<String, (String, String)>,
    ) -> Result<DomainDictionary> {
        for cat in EntityCategory::ALL {
            let set = entries.get(&cat);
            if set.map_or(true, |s| s.is_empty()) {
                return Err(Error::Config(format!("dictionary category {} is empty", cat.name())));
            }
        }
        let mut words: BTreeSet<String> = BTreeSet::new();
        let mut longest_phrase = 1;
        for set in entries.values() {
            for phrase in set {
                let toks: Vec<&str> = phrase.split(' ').collect();
                longest_phrase = longest_phrase.max(toks.len());
                words.extend(toks.iter().map(|t| t.to_string()));
            }
        }
        words.extend(common.iter().cloned());
        words.extend(abbreviations.keys().cloned());
        for exp in abbreviations.values() {
            words.extend(exp.split(' ').map(str::to_string));
        }
        for (whole, (a, b)) in &compounds {
            words.insert(whole.clone());
            words.insert(a.clone());
            words.insert(b.clone());
        }
        // correction candidates: real words only, never abbreviation keys
        let mut spelling: BTreeSet<String> = BTreeSet::new();
        for set in entries.values() {
            for phrase in set {
                spelling.extend(phrase.split(' ').map(str::to_string));
            }
        }
        spelling.extend(common.iter().cloned());
        spelling.extend(abbreviations.values().flat_map(|e| e.split(' ').map(str::to_string)));
        Ok(DomainDictionary {
            entries,
            abbreviations,
            compounds,
            words,
            spelling: spelling.into_iter().collect(),
            longest_phrase,
        })
    }

    /// The default dictionary compiled into the crate.
    pub fn shipped_default() -> Result<DomainDictionary> {
        let (entries, common) = parse_dictionary_text(DEFAULT_DICTIONARY)?;
        let abbreviations = parse_two_column(DEFAULT_ABBREVIATIONS)?;
        let compounds = parse_compounds(DEFAULT_COMPOUNDS)?;
        DomainDictionary::new(entries, common, abbreviations, compounds)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DomainDictionary> {
        let text = fs::read_to_string(path)?;
        let (entries, common) = parse_dictionary_text(&text)?;
        let abbreviations = parse_two_column(DEFAULT_ABBREVIATIONS)?;
        let compounds = parse_compounds(DEFAULT_COMPOUNDS)?;
        DomainDictionary::new(entries, common, abbreviations, compounds)
    }

    pub fn load_abbreviations(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.abbreviations = parse_two_column(&fs::read_to_string(path)?)?;
        Ok(())
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Candidate words for spell correction, in stable sorted order.
    pub fn spelling_candidates(&self) -> impl Iterator<Item = &str> {
        self.spelling.iter().map(String::as_str)
    }

    pub fn expand_abbreviation(&self, token: &str) -> Option<&str> {
        self.abbreviations.get(token).map(String::as_str)
    }

    pub fn split_compound(&self, token: &str) -> Option<(&str, &str)> {
        self.compounds.get(token).map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn phrases(&self, category: EntityCategory) -> &BTreeSet<String> {
        &self.entries[&category]
    }

    pub fn contains_phrase(&self, category: EntityCategory, phrase: &str) -> bool {
        self.entries[&category].contains(phrase)
    }

    pub fn longest_phrase_tokens(&self) -> usize {
        self.longest_phrase
    }

    /// True if any category phrase contains this word or a measurement-like
    /// token; used by the sentence significance predicate.
    pub fn is_keyword(&self, word: &str) -> bool {
        self.entries
            .values()
            .any(|set| set.iter().any(|p| p.split(' ').any(|w| w == word)))
    }
}

fn parse_dictionary_text(
    text: &str,
) -> Result<(BTreeMap<EntityCategory, BTreeSet<String>>, BTreeSet<String>)> {
    let mut entries: BTreeMap<EntityCategory, BTreeSet<String>> = BTreeMap::new();
    let mut common = BTreeSet::new();
    let mut section: Option<Option<EntityCategory>> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(if name == "Common" {
                None
            } else {
                Some(
                    name.parse::<EntityCategory>()
                        .map_err(|e| Error::parse(lineno + 1, e))?,
                )
            });
            continue;
        }
        let phrase = normalize_phrase(line);
        if phrase.is_empty() {
            return Err(Error::parse(lineno + 1, "blank phrase"));
        }
        match section {
            Some(Some(cat)) => {
                entries.entry(cat).or_default().insert(phrase);
            }
            Some(None) => {
                common.insert(phrase);
            }
            None => return Err(Error::parse(lineno + 1, "phrase before any [Section] header")),
        }
    }
    Ok((entries, common))
}

fn normalize_phrase(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_two_column(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(lineno + 1, "expected two tab-separated columns"))?;
        map.insert(normalize_phrase(k), normalize_phrase(v));
    }
    Ok(map)
}

fn parse_compounds(text: &str) -> Result<BTreeMap<String, (String, String)>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let err = || Error::parse(lineno + 1, "expected three tab-separated columns");
        let whole = cols.next().ok_or_else(err)?;
        let left = cols.next().ok_or_else(err)?;
        let right = cols.next().ok_or_else(err)?;
        map.insert(
            normalize_phrase(whole),
            (normalize_phrase(left), normalize_phrase(right)),
        );
    }
    Ok(map)
}

/// Per-token binary dictionary-match matrix: cell `(n, c)` is set iff the
/// token is covered by an n-gram of the sentence present in category `c`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DictMatchFeatures {
    pub cells: [[bool; NUM_CATEGORIES]; MAX_NGRAM],
}

impl DictMatchFeatures {
    pub fn flatten(&self) -> [f64; DICT_FEATURE_DIM] {
        let mut out = [0.0; DICT_FEATURE_DIM];
        for (n, row) in self.cells.iter().enumerate() {
            for (c, &bit) in row.iter().enumerate() {
                if bit {
                    out[n * NUM_CATEGORIES + c] = 1.0;
                }
            }
        }
        out
    }
}

/// Slides every window of 1..=longest-phrase tokens over the sentence and
/// marks covered tokens for each category containing the window phrase.
/// Windows longer than [`MAX_NGRAM`] record in the overflow row.
pub fn dict_match_features(
    normalized_tokens: &[String],
    dictionary: &DomainDictionary,
) -> Vec<DictMatchFeatures> {
    let mut out = vec![DictMatchFeatures::default(); normalized_tokens.len()];
    let max_n = dictionary.longest_phrase_tokens().max(MAX_NGRAM);
    for n in 1..=max_n.min(normalized_tokens.len()) {
        let row = n.min(MAX_NGRAM) - 1;
        for start in 0..=(normalized_tokens.len() - n) {
            let window = normalized_tokens[start..start + n].join(" ");
            for cat in EntityCategory::ALL {
                if dictionary.contains_phrase(cat, &window) {
                    for feat in out.iter_mut().skip(start).take(n) {
                        feat.cells[row][cat.index()] = true;
                    }
                }
            }
        }
    }
    out
}
