//! Data model for reports, gold annotations, the BIEOS label space, and
//! corpus I/O. The synthetic generator lives in [`generate`].

mod generate;

pub use generate::{generate_corpus, GeneratorConfig};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rules::NormalizedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Facility {
    Albany,
    AnnArbor,
    Detroit,
    Indianapolis,
}

impl Facility {
    pub const ALL: [Facility; 4] = [
        Facility::Albany,
        Facility::AnnArbor,
        Facility::Detroit,
        Facility::Indianapolis,
    ];
}

impl fmt::Display for Facility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Facility::Albany => "Albany",
            Facility::AnnArbor => "AnnArbor",
            Facility::Detroit => "Detroit",
            Facility::Indianapolis => "Indianapolis",
        };
        f.write_str(s)
    }
}

impl FromStr for Facility {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Albany" => Ok(Facility::Albany),
            "AnnArbor" => Ok(Facility::AnnArbor),
            "Detroit" => Ok(Facility::Detroit),
            "Indianapolis" => Ok(Facility::Indianapolis),
            other => Err(format!("unknown facility {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReportKind {
    Indication,
    Findings,
    Pathology,
}

impl ReportKind {
    pub const ALL: [ReportKind; 3] = [
        ReportKind::Indication,
        ReportKind::Findings,
        ReportKind::Pathology,
    ];
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReportKind::Indication => "Indication",
            ReportKind::Findings => "Findings",
            ReportKind::Pathology => "Pathology",
        };
        f.write_str(s)
    }
}

/// The six entity categories extracted from colonoscopy reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityCategory {
    Indication,
    NumberOfPolyps,
    SizeOfPolyp,
    LocationOfPolyp,
    RemovalProcedure,
    CrcType,
}

impl EntityCategory {
    pub const ALL: [EntityCategory; 6] = [
        EntityCategory::Indication,
        EntityCategory::NumberOfPolyps,
        EntityCategory::SizeOfPolyp,
        EntityCategory::LocationOfPolyp,
        EntityCategory::RemovalProcedure,
        EntityCategory::CrcType,
    ];

    pub fn index(self) -> usize {
        match self {
            EntityCategory::Indication => 0,
            EntityCategory::NumberOfPolyps => 1,
            EntityCategory::SizeOfPolyp => 2,
            EntityCategory::LocationOfPolyp => 3,
            EntityCategory::RemovalProcedure => 4,
            EntityCategory::CrcType => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityCategory::Indication => "Indication",
            EntityCategory::NumberOfPolyps => "NumberOfPolyps",
            EntityCategory::SizeOfPolyp => "SizeOfPolyp",
            EntityCategory::LocationOfPolyp => "LocationOfPolyp",
            EntityCategory::RemovalProcedure => "RemovalProcedure",
            EntityCategory::CrcType => "CrcType",
        }
    }
}

impl FromStr for EntityCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EntityCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown entity category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagPosition {
    B,
    I,
    E,
    S,
}

impl TagPosition {
    pub const ALL: [TagPosition; 4] = [TagPosition::B, TagPosition::I, TagPosition::E, TagPosition::S];

    fn letter(self) -> char {
        match self {
            TagPosition::B => 'B',
            TagPosition::I => 'I',
            TagPosition::E => 'E',
            TagPosition::S => 'S',
        }
    }

    fn index(self) -> usize {
        match self {
            TagPosition::B => 0,
            TagPosition::I => 1,
            TagPosition::E => 2,
            TagPosition::S => 3,
        }
    }
}

/// One BIEOS label. START/STOP sentinels exist only inside the CRF and are
/// not representable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Span(TagPosition, EntityCategory),
}

/// Number of observable tags: 4 positions x 6 categories + O.
pub const NUM_TAGS: usize = 25;

impl Tag {
    /// Dense index in `0..NUM_TAGS`; O is 0.
    pub fn index(self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Span(pos, cat) => 1 + cat.index() * 4 + pos.index(),
        }
    }

    pub fn from_index(idx: usize) -> Option<Tag> {
        if idx == 0 {
            return Some(Tag::Outside);
        }
        if idx >= NUM_TAGS {
            return None;
        }
        let cat = EntityCategory::ALL[(idx - 1) / 4];
        let pos = TagPosition::ALL[(idx - 1) % 4];
        Some(Tag::Span(pos, cat))
    }

    pub fn all() -> impl Iterator<Item = Tag> {
        (0..NUM_TAGS).map(|i| Tag::from_index(i).unwrap())
    }

    /// Whether `next` may directly follow `self` inside a sentence.
    pub fn may_precede(self, next: Tag) -> bool {
        use TagPosition::*;
        match self {
            Tag::Outside => matches!(next, Tag::Outside | Tag::Span(B | S, _)),
            Tag::Span(B | I, cat) => matches!(next, Tag::Span(I | E, c) if c == cat),
            Tag::Span(E | S, _) => matches!(next, Tag::Outside | Tag::Span(B | S, _)),
        }
    }

    /// Whether a sentence may begin with this tag.
    pub fn may_start(self) -> bool {
        matches!(self, Tag::Outside | Tag::Span(TagPosition::B | TagPosition::S, _))
    }

    /// Whether a sentence may end with this tag.
    pub fn may_end(self) -> bool {
        matches!(self, Tag::Outside | Tag::Span(TagPosition::E | TagPosition::S, _))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Span(pos, cat) => write!(f, "{}-{}", pos.letter(), cat.name()),
        }
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let (pos, cat) = s
            .split_once('-')
            .ok_or_else(|| format!("bad tag {s:?}"))?;
        let pos = match pos {
            "B" => TagPosition::B,
            "I" => TagPosition::I,
            "E" => TagPosition::E,
            "S" => TagPosition::S,
            _ => return Err(format!("bad tag position in {s:?}")),
        };
        Ok(Tag::Span(pos, cat.parse()?))
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One tag per token of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSequence(pub Vec<Tag>);

impl TagSequence {
    /// Checks BIEOS well-formedness; the error names the first offending
    /// transition as `"prev→next"`.
    pub fn validate(&self) -> Result<()> {
        let tags = &self.0;
        if tags.is_empty() {
            return Ok(());
        }
        if !tags[0].may_start() {
            return Err(Error::MalformedTags(format!("START→{}", tags[0])));
        }
        for pair in tags.windows(2) {
            if !pair[0].may_precede(pair[1]) {
                return Err(Error::MalformedTags(format!("{}→{}", pair[0], pair[1])));
            }
        }
        let last = *tags.last().unwrap();
        if !last.may_end() {
            return Err(Error::MalformedTags(format!("{last}→STOP")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A contiguous entity mention inside one sentence of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub category: EntityCategory,
    /// Index of the sentence this span lives in.
    pub sentence: usize,
    /// Token span `[start, end)` within the sentence.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<NormalizedValue>,
}

impl Entity {
    /// Identity used for exact-match scoring: category + location, the
    /// normalized payload is not compared.
    pub fn key(&self) -> (EntityCategory, usize, usize, usize) {
        (self.category, self.sentence, self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub report_id: String,
    pub facility: Facility,
    pub kind: ReportKind,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedReport {
    pub report_id: String,
    pub facility: Facility,
    pub kind: ReportKind,
    pub raw_text: String,
    /// Token surfaces per sentence, after cleaning and word processing.
    pub sentences: Vec<Vec<String>>,
    pub gold_tags: Vec<TagSequence>,
    pub gold_entities: Vec<Entity>,
}

impl AnnotatedReport {
    /// Full invariant check: alignment, tag well-formedness, and agreement
    /// between `gold_entities` and the spans decoded from `gold_tags`.
    pub fn validate(&self) -> Result<()> {
        if self.raw_text.is_empty() {
            return Err(Error::Config("raw_text must be non-empty".into()));
        }
        if self.sentences.len() != self.gold_tags.len() {
            return Err(Error::Config(format!(
                "{}: {} sentences vs {} tag sequences",
                self.report_id,
                self.sentences.len(),
                self.gold_tags.len()
            )));
        }
        for (sent, tags) in self.sentences.iter().zip(&self.gold_tags) {
            if sent.len() != tags.len() {
                return Err(Error::Config(format!(
                    "{}: sentence has {} tokens but {} tags",
                    self.report_id,
                    sent.len(),
                    tags.len()
                )));
            }
            tags.validate()?;
        }
        let decoded = self.decode_gold();
        if decoded.len() != self.gold_entities.len()
            || !decoded
                .iter()
                .zip(&self.gold_entities)
                .all(|(a, b)| a.key() == b.key() && a.surface == b.surface)
        {
            return Err(Error::Config(format!(
                "{}: gold_entities disagree with spans decoded from gold_tags",
                self.report_id
            )));
        }
        Ok(())
    }

    /// Entities decoded from the gold tag sequences (normalized values are
    /// not recoverable from tags and are left empty).
    pub fn decode_gold(&self) -> Vec<Entity> {
        let mut out = Vec::new();
        for (idx, (sent, tags)) in self.sentences.iter().zip(&self.gold_tags).enumerate() {
            out.extend(tags_to_entities(tags, sent, idx));
        }
        out
    }
}

/// Materializes entities from a well-formed BIEOS sequence: one entity per
/// maximal B..E run and per S tag.
pub fn tags_to_entities(tags: &TagSequence, tokens: &[String], sentence: usize) -> Vec<Entity> {
    let mut out = Vec::new();
    let mut open: Option<(usize, EntityCategory)> = None;
    for (i, tag) in tags.0.iter().enumerate() {
        match *tag {
            Tag::Outside => {}
            Tag::Span(TagPosition::S, cat) => out.push(Entity {
                category: cat,
                sentence,
                start: i,
                end: i + 1,
                surface: tokens[i].clone(),
                normalized: None,
            }),
            Tag::Span(TagPosition::B, cat) => open = Some((i, cat)),
            Tag::Span(TagPosition::I, _) => {}
            Tag::Span(TagPosition::E, cat) => {
                if let Some((start, open_cat)) = open.take() {
                    debug_assert_eq!(open_cat, cat);
                    out.push(Entity {
                        category: cat,
                        sentence,
                        start,
                        end: i + 1,
                        surface: tokens[start..=i].join(" "),
                        normalized: None,
                    });
                }
            }
        }
    }
    out
}

/// Inverse of [`tags_to_entities`]: spans must be disjoint and in-bounds.
pub fn entities_to_tags(entities: &[Entity], token_count: usize) -> TagSequence {
    let mut tags = vec![Tag::Outside; token_count];
    for e in entities {
        if e.end - e.start == 1 {
            tags[e.start] = Tag::Span(TagPosition::S, e.category);
        } else {
            tags[e.start] = Tag::Span(TagPosition::B, e.category);
            for slot in tags.iter_mut().take(e.end - 1).skip(e.start + 1) {
                *slot = Tag::Span(TagPosition::I, e.category);
            }
            tags[e.end - 1] = Tag::Span(TagPosition::E, e.category);
        }
    }
    TagSequence(tags)
}

/// 80/10/10 partition of a report list, assigned by seeded shuffle.
/// Validation and test each get `n/10` (floored), the remainder trains.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Vec<AnnotatedReport>,
    pub validation: Vec<AnnotatedReport>,
    pub test: Vec<AnnotatedReport>,
}

pub fn split_corpus(mut reports: Vec<AnnotatedReport>, seed: u64) -> CorpusSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x53504c49));
    reports.shuffle(&mut rng);
    let n = reports.len();
    let tenth = n / 10;
    let test = reports.split_off(n - tenth);
    let validation = reports.split_off(n - 2 * tenth);
    CorpusSplit {
        train: reports,
        validation,
        test,
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<AnnotatedReport>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let report: AnnotatedReport = serde_json::from_str(&line)
            .map_err(|e| Error::schema(lineno + 1, e.to_string()))?;
        report
            .validate()
            .map_err(|e| Error::schema(lineno + 1, e.to_string()))?;
        out.push(report);
    }
    Ok(out)
}

/// Canonical JSON-Lines serialization: stable key order, LF line endings, so
/// round-trips are byte-identical.
pub fn save_corpus(reports: &[AnnotatedReport], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_corpus(reports, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_corpus(reports: &[AnnotatedReport], mut out: impl Write) -> Result<()> {
    for report in reports {
        serde_json::to_writer(&mut out, report).map_err(|e| Error::Config(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-facility report fractions for the generator; must sum to 1.
pub type FacilityMix = BTreeMap<Facility, f64>;

pub fn uniform_facility_mix() -> FacilityMix {
    Facility::ALL.into_iter().map(|f| (f, 0.25)).collect()
}
