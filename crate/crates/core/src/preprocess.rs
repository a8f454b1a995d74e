//! Text cleanup, tokenization, spell correction against the domain lexicon,
//! and word processing (abbreviation expansion, compound splitting).

use crate::lexicon::DomainDictionary;

/// A token over the cleaned text. `char_start..char_end` index into the
/// cleaned string passed to [`tokenize`]; compound splitting makes both
/// halves share the original span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Lowercased, spell-corrected, abbreviation-expanded form.
    pub normalized: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    fn new(surface: &str, start: usize) -> Token {
        Token {
            normalized: surface.to_lowercase(),
            surface: surface.to_string(),
            char_start: start,
            char_end: start + surface.len(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WordProcessingOptions {
    /// Split non-hyphenated compounds ("tubulovillous"). Hyphenated
    /// compounds are always split. Off by default so the surface survives
    /// as a single histology token.
    pub split_solid_compounds: bool,
}

impl Default for WordProcessingOptions {
    fn default() -> Self {
        WordProcessingOptions {
            split_solid_compounds: false,
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Removes decorative punctuation while keeping sentence punctuation
/// (periods, semicolons, colons), decimal points, compound hyphens, and
/// blank lines. Idempotent.
pub fn clean_text(raw: &str) -> String {
    let chars: Vec<char> = raw.chars().collect();
    let mut kept = String::with_capacity(raw.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = match c {
            _ if c.is_alphanumeric() || c.is_whitespace() => true,
            '.' | ';' | ':' | '/' => true,
            '-' => {
                // compound hyphen: word characters on both sides
                i > 0
                    && i + 1 < chars.len()
                    && is_word_char(chars[i - 1])
                    && is_word_char(chars[i + 1])
            }
            _ => false,
        };
        if keep {
            kept.push(c);
        }
    }
    // collapse runs of spaces/tabs, preserve newlines (SBD features)
    let mut out = String::with_capacity(kept.len());
    let mut pending_space = false;
    for c in kept.chars() {
        if c == ' ' || c == '\t' {
            pending_space = true;
            continue;
        }
        if c == '\n' {
            // drop spaces at line ends
            pending_space = false;
            out.push('\n');
            continue;
        }
        if pending_space && !out.is_empty() && !out.ends_with('\n') {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}

/// Whitespace tokenization with three refinements: trailing sentence
/// punctuation becomes its own token, decimal numbers stay whole, and
/// digit/letter boundaries split ("15mm" -> "15", "mm").
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if (bytes[i] as char).is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !(bytes[i] as char).is_whitespace() {
            i += 1;
        }
        split_chunk(&text[start..i], start, &mut out);
    }
    out
}

fn split_chunk(chunk: &str, offset: usize, out: &mut Vec<Token>) {
    // peel trailing sentence punctuation
    let mut core_end = chunk.len();
    let mut trailing = Vec::new();
    while core_end > 0 {
        let c = chunk[..core_end].chars().last().unwrap();
        if matches!(c, '.' | ';' | ':') {
            core_end -= c.len_utf8();
            trailing.push((c, offset + core_end));
        } else {
            break;
        }
    }
    let core = &chunk[..core_end];
    if !core.is_empty() {
        // split at digit<->letter boundaries
        let mut seg_start = 0;
        let chars: Vec<(usize, char)> = core.char_indices().collect();
        for w in 0..chars.len().saturating_sub(1) {
            let (_, a) = chars[w];
            let (bi, b) = chars[w + 1];
            let boundary = (a.is_ascii_digit() && b.is_alphabetic())
                || (a.is_alphabetic() && b.is_ascii_digit());
            if boundary {
                out.push(Token::new(&core[seg_start..bi], offset + seg_start));
                seg_start = bi;
            }
        }
        out.push(Token::new(&core[seg_start..], offset + seg_start));
    }
    for (c, pos) in trailing.into_iter().rev() {
        out.push(Token::new(&c.to_string(), pos));
    }
}

fn is_numeric(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '/')
        && token.chars().any(|c| c.is_ascii_digit())
}

/// Damerau-Levenshtein distance (restricted, adjacent transpositions).
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for i in 0..=n {
        d[i][0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut best = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                best = best.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = best;
        }
    }
    d[n][m]
}

const MAX_CORRECTION_DISTANCE: usize = 2;

/// In-dictionary and numeric tokens pass through; otherwise the unique
/// closest lexicon word within distance 2 wins, ties leave the token alone.
pub fn correct_spelling(token: &str, dictionary: &DomainDictionary) -> String {
    let lower = token.to_lowercase();
    if is_numeric(&lower) || dictionary.contains_word(&lower) {
        return lower;
    }
    if !lower.chars().any(|c| c.is_alphabetic()) {
        return lower;
    }
    let mut best_dist = MAX_CORRECTION_DISTANCE + 1;
    let mut best: Option<&str> = None;
    let mut tie = false;
    for word in dictionary.spelling_candidates() {
        // distance is at least the length difference
        if word.chars().count().abs_diff(lower.chars().count()) > MAX_CORRECTION_DISTANCE {
            continue;
        }
        let dist = damerau_levenshtein(&lower, word);
        if dist < best_dist {
            best_dist = dist;
            best = Some(word);
            tie = false;
        } else if dist == best_dist {
            tie = true;
        }
    }
    match best {
        Some(word) if !tie => word.to_string(),
        _ => lower,
    }
}

/// Expands abbreviations into the normalized field and splits compounds
/// into two tokens sharing the original char span.
pub fn apply_word_processing(
    tokens: Vec<Token>,
    dictionary: &DomainDictionary,
    opts: WordProcessingOptions,
) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    for mut tok in tokens {
        if let Some(expansion) = dictionary.expand_abbreviation(&tok.normalized) {
            tok.normalized = expansion.to_string();
            out.push(tok);
            continue;
        }
        if let Some((left, right)) = dictionary.split_compound(&tok.normalized) {
            let hyphenated = tok.normalized.contains('-');
            if hyphenated || opts.split_solid_compounds {
                let (surf_left, surf_right) = match tok.surface.split_once('-') {
                    Some((a, b)) => (a.to_string(), b.to_string()),
                    None => (left.to_string(), right.to_string()),
                };
                out.push(Token {
                    surface: surf_left,
                    normalized: left.to_string(),
                    char_start: tok.char_start,
                    char_end: tok.char_end,
                });
                out.push(Token {
                    surface: surf_right,
                    normalized: right.to_string(),
                    char_start: tok.char_start,
                    char_end: tok.char_end,
                });
                continue;
            }
        }
        out.push(tok);
    }
    out
}

/// Normalizes a single already-tokenized surface exactly as the pipeline
/// does (lowercase, spell-correct, expand abbreviation). Compound splitting
/// is not applied: callers pass tokens that are already split.
pub fn normalize_token(surface: &str, dictionary: &DomainDictionary) -> String {
    let corrected = correct_spelling(surface, dictionary);
    match dictionary.expand_abbreviation(&corrected) {
        Some(expansion) => expansion.to_string(),
        None => corrected,
    }
}

/// Full preprocessing for one raw report: clean, tokenize, spell-correct,
/// word-process. Returns the cleaned text alongside the tokens (token
/// offsets index into it).
pub fn preprocess(
    raw: &str,
    dictionary: &DomainDictionary,
    opts: WordProcessingOptions,
) -> (String, Vec<Token>) {
    let cleaned = clean_text(raw);
    let mut tokens = tokenize(&cleaned);
    for tok in &mut tokens {
        tok.normalized = correct_spelling(&tok.normalized, dictionary);
    }
    let tokens = apply_word_processing(tokens, dictionary, opts);
    (cleaned, tokens)
}
