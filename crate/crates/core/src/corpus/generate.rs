//! Seeded synthetic report generator. Sentences are planned token-by-token
//! so that running the preprocessing pipeline over the emitted raw text
//! reproduces the stored gold sentences exactly, and so that rule-based
//! extraction agrees with the gold spans for size/location/count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    entities_to_tags, AnnotatedReport, Entity, EntityCategory, Facility, FacilityMix, ReportKind,
};
use crate::error::{Error, Result};

/// Injection rates for the noise phenomena the pipeline must survive.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    /// Misspelled surfaces ("cacel", "asending") with correct normalization.
    pub misspelling_rate: f64,
    /// Upper-case abbreviations ("SIG", "ASC") in location mentions.
    pub abbreviation_rate: f64,
    /// Hyphenated compounds ("Recto-sigmoid").
    pub compound_rate: f64,
    /// Verbatim repetition of a significant sentence (gold-tagged O).
    pub duplicate_rate: f64,
    /// Distance-from-rectum location mentions.
    pub distance_rate: f64,
    /// Insignificant filler sentences ("Dr. Patil ...", blood-loss notes).
    pub noise_sentence_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            misspelling_rate: 0.08,
            abbreviation_rate: 0.12,
            compound_rate: 0.10,
            duplicate_rate: 0.10,
            distance_rate: 0.30,
            noise_sentence_rate: 0.60,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let rates = [
            self.misspelling_rate,
            self.abbreviation_rate,
            self.compound_rate,
            self.duplicate_rate,
            self.distance_rate,
            self.noise_sentence_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config("generator rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One planned sentence: the raw fragment written into the report plus the
/// token surfaces (and expected normalizations) the pipeline will produce.
#[derive(Debug, Clone)]
struct SentencePlan {
    raw: String,
    tokens: Vec<(String, String)>,
    entities: Vec<(EntityCategory, usize, usize)>,
}

#[derive(Default)]
struct SentenceBuilder {
    raw_parts: Vec<String>,
    tokens: Vec<(String, String)>,
    entities: Vec<(EntityCategory, usize, usize)>,
}

impl SentenceBuilder {
    fn new() -> SentenceBuilder {
        SentenceBuilder::default()
    }

    /// One raw whitespace-delimited chunk and the tokens it becomes.
    fn push(&mut self, raw: &str, tokens: &[(&str, &str)]) {
        self.raw_parts.push(raw.to_string());
        self.tokens
            .extend(tokens.iter().map(|(s, n)| (s.to_string(), n.to_string())));
    }

    fn word(&mut self, w: &str) {
        let lower = w.to_lowercase();
        self.raw_parts.push(w.to_string());
        self.tokens.push((w.to_string(), lower));
    }

    fn words(&mut self, text: &str) {
        for w in text.split_whitespace() {
            self.word(w);
        }
    }

    fn entity(&mut self, category: EntityCategory, fill: impl FnOnce(&mut SentenceBuilder)) {
        let start = self.tokens.len();
        fill(self);
        self.entities.push((category, start, self.tokens.len()));
    }

    fn entity_words(&mut self, category: EntityCategory, text: &str) {
        self.entity(category, |b| b.words(text));
    }

    /// Appends sentence-final punctuation to the last raw chunk.
    fn punct(&mut self, p: &str) {
        let last = self.raw_parts.last_mut().expect("punct needs a preceding word");
        last.push_str(p);
        self.tokens.push((p.to_string(), p.to_string()));
    }

    fn period(&mut self) {
        self.punct(".");
    }

    fn finish(self) -> SentencePlan {
        SentencePlan {
            raw: self.raw_parts.join(" "),
            tokens: self.tokens,
            entities: self.entities,
        }
    }
}

fn plain_sentence(text: &str) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    b.words(text);
    b.period();
    b.finish()
}

fn header_plan(kind: ReportKind, facility: Facility) -> SentencePlan {
    let f = Facility::ALL.iter().position(|&x| x == facility).unwrap();
    let text = match kind {
        ReportKind::Indication => ["INDICATION", "INDICATIONS", "Indication for exam", "Reason for exam"][f],
        ReportKind::Findings => [
            "FINDINGS",
            "COLONOSCOPY FINDINGS",
            "PROCEDURE FINDINGS",
            "Findings",
        ][f],
        ReportKind::Pathology => [
            "PATHOLOGY",
            "PATHOLOGY REPORT",
            "MICROSCOPIC DIAGNOSIS",
            "Pathology report",
        ][f],
    };
    let mut b = SentenceBuilder::new();
    b.words(text);
    b.punct(":");
    b.finish()
}

fn doctor_sentence(facility: Facility) -> SentencePlan {
    let name = match facility {
        Facility::Albany => "Patil",
        Facility::AnnArbor => "Smith",
        Facility::Detroit => "Jones",
        Facility::Indianapolis => "Lee",
    };
    let mut b = SentenceBuilder::new();
    b.push("Dr.", &[("Dr", "dr"), (".", ".")]);
    b.word(name);
    b.words("performed the exam");
    b.period();
    b.finish()
}

fn filler_sentence(rng: &mut ChaCha8Rng) -> SentencePlan {
    let options = [
        "The patient tolerated the procedure well",
        "Estimated blood loss was minimal",
        "The prep quality was excellent",
        "The colonic mucosa appeared normal",
        "Retroflexion was performed without difficulty",
    ];
    plain_sentence(options[rng.gen_range(0..options.len())])
}

fn indication_body(rng: &mut ChaCha8Rng) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    match rng.gen_range(0..5) {
        0 => {
            b.words("Patient presents for");
            let phrase = ["screening colonoscopy", "surveillance", "screening"]
                [rng.gen_range(0..3)];
            b.entity_words(EntityCategory::Indication, phrase);
        }
        1 => {
            b.words("Patient referred due to");
            let phrase = ["anemia", "hematochezia", "melena", "diarrhea"][rng.gen_range(0..4)];
            b.entity_words(EntityCategory::Indication, phrase);
        }
        2 => {
            b.words("Patient has");
            b.entity_words(EntityCategory::Indication, "history of colon cancer");
        }
        3 => {
            b.words("Patient presents with");
            b.entity_words(EntityCategory::Indication, "weight loss");
        }
        _ => {
            b.word("Positive");
            b.entity_words(EntityCategory::Indication, "presence of fecal occult blood");
        }
    }
    b.period();
    b.finish()
}

/// Emits one location entity, possibly as abbreviation or misspelling.
fn push_location(b: &mut SentenceBuilder, rng: &mut ChaCha8Rng, config: &GeneratorConfig) {
    // (plain phrase, abbreviated first word, misspelled first word)
    let choices: [(&str, Option<&str>, Option<&str>); 8] = [
        ("ascending colon", Some("ASC"), Some("asending")),
        ("transverse colon", Some("TRANS"), None),
        ("descending colon", Some("DESC"), None),
        ("sigmoid colon", Some("SIG"), Some("sigmod")),
        ("cecum", None, None),
        ("hepatic flexure", None, None),
        ("splenic flexure", None, None),
        ("rectum", None, None),
    ];
    let (phrase, abbrev, misspelled) = choices[rng.gen_range(0..choices.len())];
    let mut parts = phrase.split(' ');
    let head = parts.next().unwrap();
    let tail: Vec<&str> = parts.collect();
    let roll = rng.gen::<f64>();
    b.entity(EntityCategory::LocationOfPolyp, |b| {
        if let (Some(a), true) = (abbrev, roll < config.abbreviation_rate) {
            b.push(a, &[(a, head)]);
        } else if let (Some(m), true) = (
            misspelled,
            roll >= config.abbreviation_rate
                && roll < config.abbreviation_rate + config.misspelling_rate,
        ) {
            b.push(m, &[(m, head)]);
        } else {
            b.word(head);
        }
        for w in tail {
            b.word(w);
        }
    });
}

fn count_location_sentence(rng: &mut ChaCha8Rng, config: &GeneratorConfig) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    match rng.gen_range(0..3) {
        0 => {
            let word = ["Two", "Three", "Four", "Five", "Six", "Seven", "Eight"]
                [rng.gen_range(0..7)];
            b.entity(EntityCategory::NumberOfPolyps, |b| b.word(word));
            b.words("sessile polyps were found in the");
        }
        1 => {
            let word = ["Several", "Multiple", "Numerous", "Many"][rng.gen_range(0..4)];
            b.entity(EntityCategory::NumberOfPolyps, |b| b.word(word));
            b.words("polyps were noted in the");
        }
        _ => {
            b.word("A");
            b.entity_words(EntityCategory::NumberOfPolyps, "single");
            b.words("polyp was seen in the");
        }
    }
    push_location(&mut b, rng, config);
    b.period();
    b.finish()
}

fn size_sentence(rng: &mut ChaCha8Rng) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    match rng.gen_range(0..5) {
        0 => {
            let a = rng.gen_range(1..=9);
            let bb = rng.gen_range(10..=20);
            b.words("The polyps were");
            b.entity(EntityCategory::SizeOfPolyp, |x| {
                x.word(&a.to_string());
                x.word("to");
                x.word(&bb.to_string());
                x.word("mm");
            });
            b.words("in size");
        }
        1 => {
            let n = rng.gen_range(2..=9);
            b.words("The polyp measured");
            b.entity(EntityCategory::SizeOfPolyp, |x| {
                x.word(&n.to_string());
                x.word("mm");
            });
        }
        2 => {
            let n = ["1.5", "2.5", "3.5"][rng.gen_range(0..3)];
            b.words("The polyp measured");
            b.entity(EntityCategory::SizeOfPolyp, |x| {
                x.word(n);
                x.word("cm");
            });
        }
        3 => {
            let (a, bb) = ([("3", "5"), ("2", "4"), ("4", "6")])[rng.gen_range(0..3)];
            b.word("A");
            b.entity(EntityCategory::SizeOfPolyp, |x| {
                let range = format!("{a}-{bb}");
                let raw = format!("{range}mm");
                x.push(&raw, &[(&range, &range), ("mm", "mm")]);
            });
            b.words("polyp was removed");
        }
        _ => {
            let word = ["small", "large", "diminutive"][rng.gen_range(0..3)];
            b.word("A");
            b.entity_words(EntityCategory::SizeOfPolyp, word);
            b.words("polyp was identified");
        }
    }
    b.period();
    b.finish()
}

fn removal_sentence(rng: &mut ChaCha8Rng) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    match rng.gen_range(0..5) {
        0 => {
            b.words("All polyps were removed by");
            b.entity_words(EntityCategory::RemovalProcedure, "cold snare polypectomy");
        }
        1 => {
            b.words("The polyp was removed with");
            b.entity_words(EntityCategory::RemovalProcedure, "biopsy forceps");
        }
        2 => {
            b.word("A");
            b.entity_words(EntityCategory::RemovalProcedure, "hot snare polypectomy");
            b.words("was performed");
        }
        3 => {
            b.words("The lesion was removed by");
            b.entity_words(EntityCategory::RemovalProcedure, "endoscopic mucosal resection");
        }
        _ => {
            b.entity_words(EntityCategory::RemovalProcedure, "Cold biopsy");
            b.words("was performed");
        }
    }
    b.period();
    b.finish()
}

fn distance_sentence(rng: &mut ChaCha8Rng) -> SentencePlan {
    let n = rng.gen_range(10..=140);
    let mut b = SentenceBuilder::new();
    b.words("A polyp was located");
    b.entity(EntityCategory::LocationOfPolyp, |x| {
        x.word(&n.to_string());
        x.word("cm");
    });
    b.words("from the rectum");
    b.period();
    b.finish()
}

fn polyp_count_field(rng: &mut ChaCha8Rng) -> SentencePlan {
    let n = rng.gen_range(1..=9).to_string();
    let mut b = SentenceBuilder::new();
    b.push("No.", &[("No", "no"), (".", ".")]);
    b.word("of");
    b.word("polyps");
    b.punct(":");
    b.entity(EntityCategory::NumberOfPolyps, |x| x.word(&n));
    b.period();
    b.finish()
}

fn compound_sentence() -> SentencePlan {
    let mut b = SentenceBuilder::new();
    b.words("Biopsies were taken from the");
    b.entity(EntityCategory::LocationOfPolyp, |x| {
        x.push("Recto-sigmoid", &[("Recto", "rectal"), ("sigmoid", "sigmoid")]);
    });
    b.period();
    b.finish()
}

fn misspelled_cecum_sentence() -> SentencePlan {
    let mut b = SentenceBuilder::new();
    b.word("The");
    b.entity(EntityCategory::LocationOfPolyp, |x| {
        x.push("ceccal", &[("ceccal", "cecal")]);
    });
    b.words("mucosa appeared normal");
    b.period();
    b.finish()
}

fn scope_sentence() -> SentencePlan {
    let mut b = SentenceBuilder::new();
    b.words("The scope was advanced to the");
    b.entity_words(EntityCategory::LocationOfPolyp, "cecum");
    b.period();
    b.finish()
}

/// "retrieved;" then a lower-case continuation: exercises semicolon
/// boundaries.
fn semicolon_pair() -> [SentencePlan; 2] {
    let mut first = SentenceBuilder::new();
    first.words("All polyps were retrieved");
    first.punct(";");
    let mut second = SentenceBuilder::new();
    second.words("specimens were sent to pathology");
    second.period();
    [first.finish(), second.finish()]
}

fn jar_sentence(jar: usize, rng: &mut ChaCha8Rng) -> SentencePlan {
    let mut b = SentenceBuilder::new();
    b.word("Jar");
    let label = jar.to_string();
    b.raw_parts.push(format!("{label}:"));
    b.tokens.push((label.clone(), label));
    b.tokens.push((":".to_string(), ":".to_string()));
    match rng.gen_range(0..5) {
        0 => b.entity_words(EntityCategory::CrcType, "tubular adenoma"),
        1 => b.entity_words(EntityCategory::CrcType, "villous adenoma"),
        2 => b.entity_words(EntityCategory::CrcType, "tubulovillous adenoma"),
        3 => b.entity_words(EntityCategory::CrcType, "adenocarcinoma"),
        _ => {
            b.entity_words(EntityCategory::CrcType, "hyperplastic");
            b.word("polyp");
        }
    }
    if rng.gen_bool(0.35) {
        b.word("with");
        let grade = ["high-grade dysplasia", "low-grade dysplasia"][rng.gen_range(0..2)];
        b.entity_words(EntityCategory::CrcType, grade);
    }
    b.period();
    b.finish()
}

fn findings_sentences(
    facility: Facility,
    rng: &mut ChaCha8Rng,
    config: &GeneratorConfig,
) -> Vec<SentencePlan> {
    let mut plans = Vec::new();
    if rng.gen_bool(config.noise_sentence_rate) {
        plans.push(filler_sentence(rng));
    }
    if rng.gen_bool(0.25) {
        plans.push(scope_sentence());
    }
    let count_loc = count_location_sentence(rng, config);
    let duplicate = rng.gen_bool(config.duplicate_rate).then(|| {
        let mut p = count_loc.clone();
        p.entities.clear(); // the duplicate is filtered out, gold is all O
        p
    });
    plans.push(count_loc);
    if rng.gen_bool(0.85) {
        plans.push(size_sentence(rng));
    }
    if rng.gen_bool(0.85) {
        plans.push(removal_sentence(rng));
    }
    if rng.gen_bool(config.distance_rate) {
        plans.push(distance_sentence(rng));
    }
    if rng.gen_bool(0.30) {
        plans.push(polyp_count_field(rng));
    }
    if rng.gen_bool(config.compound_rate) {
        plans.push(compound_sentence());
    }
    if rng.gen_bool(config.misspelling_rate) {
        plans.push(misspelled_cecum_sentence());
    }
    if rng.gen_bool(0.25) {
        plans.extend(semicolon_pair());
    }
    if let Some(dup) = duplicate {
        plans.push(dup);
    }
    if rng.gen_bool(config.noise_sentence_rate * 0.4) {
        plans.push(doctor_sentence(facility));
    }
    plans
}

fn report_sentences(
    kind: ReportKind,
    facility: Facility,
    rng: &mut ChaCha8Rng,
    config: &GeneratorConfig,
) -> Vec<SentencePlan> {
    let mut plans = vec![header_plan(kind, facility)];
    match kind {
        ReportKind::Indication => {
            plans.push(indication_body(rng));
            if rng.gen_bool(config.noise_sentence_rate * 0.5) {
                plans.push(doctor_sentence(facility));
            }
        }
        ReportKind::Findings => plans.extend(findings_sentences(facility, rng, config)),
        ReportKind::Pathology => {
            if rng.gen_bool(0.4) {
                plans.push(plain_sentence("Specimens were received in formalin"));
            }
            plans.push(jar_sentence(1, rng));
            if rng.gen_bool(0.6) {
                plans.push(jar_sentence(2, rng));
                if rng.gen_bool(0.4) {
                    plans.push(jar_sentence(3, rng));
                }
            }
            if rng.gen_bool(0.4) {
                plans.push(plain_sentence("All fragments were submitted"));
            }
        }
    }
    plans
}

fn assemble_report(
    report_id: String,
    facility: Facility,
    kind: ReportKind,
    plans: Vec<SentencePlan>,
) -> Result<AnnotatedReport> {
    // header is separated from the body by a blank line
    let mut raw_text = plans[0].raw.clone();
    raw_text.push_str("\n\n");
    raw_text.push_str(
        &plans[1..]
            .iter()
            .map(|p| p.raw.as_str())
            .collect::<Vec<_>>()
            .join(" "),
    );
    raw_text.push('\n');

    let mut sentences = Vec::with_capacity(plans.len());
    let mut gold_tags = Vec::with_capacity(plans.len());
    let mut gold_entities = Vec::new();
    for (idx, plan) in plans.iter().enumerate() {
        let surfaces: Vec<String> = plan.tokens.iter().map(|(s, _)| s.clone()).collect();
        let entities: Vec<Entity> = plan
            .entities
            .iter()
            .map(|&(category, start, end)| Entity {
                category,
                sentence: idx,
                start,
                end,
                surface: surfaces[start..end].join(" "),
                normalized: None,
            })
            .collect();
        gold_tags.push(entities_to_tags(&entities, surfaces.len()));
        gold_entities.extend(entities);
        sentences.push(surfaces);
    }
    // match the order entities decode from tags: by sentence, then position
    gold_entities.sort_by_key(|e| (e.sentence, e.start, e.end));
    let report = AnnotatedReport {
        report_id,
        facility,
        kind,
        raw_text,
        sentences,
        gold_tags,
        gold_entities,
    };
    report.validate()?;
    Ok(report)
}

fn pick_facility(mix: &FacilityMix, roll: f64) -> Facility {
    let mut acc = 0.0;
    for (&facility, &fraction) in mix {
        acc += fraction;
        if roll < acc {
            return facility;
        }
    }
    *mix.keys().next_back().expect("validated non-empty mix")
}

/// Deterministically generates `count` annotated reports.
pub fn generate_corpus(
    seed: u64,
    count: usize,
    facility_mix: &FacilityMix,
    config: &GeneratorConfig,
) -> Result<Vec<AnnotatedReport>> {
    config.validate()?;
    if facility_mix.is_empty() || facility_mix.values().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::Config("facility mix fractions must lie in [0, 1]".into()));
    }
    let total: f64 = facility_mix.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("facility mix sums to {total}, expected 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(count);
    for i in 0..count {
        let facility = pick_facility(facility_mix, rng.gen::<f64>());
        let kind = match rng.gen::<f64>() {
            r if r < 0.25 => ReportKind::Indication,
            r if r < 0.75 => ReportKind::Findings,
            _ => ReportKind::Pathology,
        };
        let plans = report_sentences(kind, facility, &mut rng, config);
        let report_id = format!("{facility}-{i:05}");
        reports.push(assemble_report(report_id, facility, kind, plans)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::uniform_facility_mix;
    use crate::lexicon::DomainDictionary;
    use crate::preprocess::{normalize_token, preprocess, WordProcessingOptions};

    fn generate(seed: u64, count: usize) -> Vec<AnnotatedReport> {
        generate_corpus(seed, count, &uniform_facility_mix(), &GeneratorConfig::default())
            .unwrap()
    }

    #[test]
    fn count_zero_is_empty() {
        assert!(generate(7, 0).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(7, 100), generate(7, 100));
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(generate(7, 50), generate(8, 50));
    }

    #[test]
    fn covers_all_kinds_and_facilities() {
        let reports = generate(3, 200);
        for kind in ReportKind::ALL {
            assert!(reports.iter().any(|r| r.kind == kind), "{kind} missing");
        }
        for facility in Facility::ALL {
            assert!(reports.iter().any(|r| r.facility == facility));
        }
    }

    #[test]
    fn covers_all_entity_categories() {
        let reports = generate(5, 300);
        for category in EntityCategory::ALL {
            assert!(
                reports
                    .iter()
                    .flat_map(|r| &r.gold_entities)
                    .any(|e| e.category == category),
                "{} missing",
                category.name()
            );
        }
    }

    #[test]
    fn invalid_mix_rejected() {
        let mut mix = uniform_facility_mix();
        mix.insert(Facility::Albany, 0.5);
        assert!(generate_corpus(1, 10, &mix, &GeneratorConfig::default()).is_err());
    }

    #[test]
    fn preprocessing_reproduces_stored_sentences() {
        let dictionary = DomainDictionary::shipped_default().unwrap();
        let opts = WordProcessingOptions::default();
        for report in generate(11, 150) {
            let (_, tokens) = preprocess(&report.raw_text, &dictionary, opts);
            let produced: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
            let stored: Vec<&str> = report
                .sentences
                .iter()
                .flatten()
                .map(String::as_str)
                .collect();
            assert_eq!(produced, stored, "report {}", report.report_id);
            // token-level normalization agrees with the full pipeline
            for tok in &tokens {
                assert_eq!(
                    tok.normalized,
                    normalize_token(&tok.surface, &dictionary),
                    "token {:?} in {}",
                    tok.surface,
                    report.report_id
                );
            }
        }
    }

    #[test]
    fn gold_sentence_ends_are_boundary_candidates() {
        let dictionary = DomainDictionary::shipped_default().unwrap();
        let config = crate::sbd::SbdConfig::default();
        for report in generate(13, 100) {
            crate::sbd::gold_boundary_candidates(
                &report,
                &dictionary,
                WordProcessingOptions::default(),
                &config,
            )
            .unwrap();
        }
    }

    #[test]
    fn rules_agree_with_gold_on_rule_categories() {
        use crate::rules::{apply_rules, RuleSet};
        let dictionary = DomainDictionary::shipped_default().unwrap();
        let opts = WordProcessingOptions::default();
        let rule_cats = [
            EntityCategory::SizeOfPolyp,
            EntityCategory::LocationOfPolyp,
            EntityCategory::NumberOfPolyps,
        ];
        for report in generate(17, 150) {
            let rules = RuleSet::default_for(report.facility);
            let (_, tokens) = preprocess(&report.raw_text, &dictionary, opts);
            let mut offset = 0;
            let mut rule_keys = Vec::new();
            for (idx, sent) in report.sentences.iter().enumerate() {
                let slice = &tokens[offset..offset + sent.len()];
                offset += sent.len();
                // only sentences that keep their entities participate;
                // duplicates are deliberately gold-tagged O
                if report.gold_tags[idx].0.iter().all(|t| *t == crate::corpus::Tag::Outside)
                    && report.gold_entities.iter().all(|e| e.sentence != idx)
                    && report
                        .sentences
                        .iter()
                        .take(idx)
                        .any(|earlier| earlier == sent)
                {
                    continue;
                }
                for m in apply_rules(slice, idx, &rules) {
                    rule_keys.push((m.value.category(), idx, m.start, m.end));
                }
            }
            rule_keys.sort_unstable();
            rule_keys.dedup();
            let mut gold_keys: Vec<_> = report
                .gold_entities
                .iter()
                .filter(|e| rule_cats.contains(&e.category))
                .map(Entity::key)
                .collect();
            gold_keys.sort_unstable();
            assert_eq!(rule_keys, gold_keys, "report {}\n{}", report.report_id, report.raw_text);
        }
    }
}
