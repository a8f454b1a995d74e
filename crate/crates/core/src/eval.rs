//! Entity-level and report-level exact-match metrics with per-facility,
//! per-category, and per-report-kind breakdowns.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::{Entity, EntityCategory, Facility, ReportKind};
use crate::error::{Error, Result};

/// One report's predicted and gold entity sets, with grouping attributes.
#[derive(Debug, Clone)]
pub struct ReportEval {
    pub report_id: String,
    pub facility: Facility,
    pub kind: ReportKind,
    pub predicted: Vec<Entity>,
    pub gold: Vec<Entity>,
}

/// Pooled exact-match counts and the derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Reports whose predicted entity set exactly equals gold.
    pub correct_reports: usize,
    pub total_reports: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// True when no entities were predicted at all, in which case precision
    /// is reported as 0 by convention rather than being undefined.
    pub empty_prediction: bool,
}

impl Metrics {
    fn from_counts(tp: usize, fp: usize, fn_count: usize, correct: usize, total: usize) -> Metrics {
        let empty_prediction = tp + fp == 0;
        let precision = if empty_prediction {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_count == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_count) as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let accuracy = if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        };
        Metrics {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_count,
            correct_reports: correct,
            total_reports: total,
            precision,
            recall,
            f1,
            accuracy,
            empty_prediction,
        }
    }

    /// Accuracy in the conventional clinical-report style, e.g. "93.5% (374/400)".
    pub fn accuracy_display(&self) -> String {
        format_fraction(self.correct_reports, self.total_reports)
    }
}

pub fn format_fraction(correct: usize, total: usize) -> String {
    let percent = if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    };
    format!("{percent:.1}% ({correct}/{total})")
}

type Key = (EntityCategory, usize, usize, usize);

fn key_set(entities: &[Entity], category: Option<EntityCategory>) -> Vec<Key> {
    let mut keys: Vec<Key> = entities
        .iter()
        .filter(|e| category.is_none_or(|c| e.category == c))
        .map(Entity::key)
        .collect();
    keys.sort_unstable();
    keys
}

fn check_gold(reports: &[ReportEval]) -> Result<()> {
    for report in reports {
        let mut seen = BTreeSet::new();
        for entity in &report.gold {
            if !seen.insert(entity.key()) {
                return Err(Error::EvalInput(format!(
                    "report {}: duplicate gold span {:?}",
                    report.report_id,
                    entity.key()
                )));
            }
        }
    }
    Ok(())
}

/// Pools TP/FP/FN and report correctness over the given reports, optionally
/// restricted to one entity category.
fn pooled_metrics(reports: &[&ReportEval], category: Option<EntityCategory>) -> Metrics {
    let (mut tp, mut fp, mut fn_count, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for report in reports {
        let gold = key_set(&report.gold, category);
        let predicted = key_set(&report.predicted, category);
        // gold keys are unique (validated); a predicted duplicate can only
        // match a gold key once, the repeat counts as a false positive
        let mut unmatched: BTreeSet<Key> = gold.iter().copied().collect();
        let mut report_tp = 0usize;
        for key in &predicted {
            if unmatched.remove(key) {
                report_tp += 1;
            } else {
                fp += 1;
            }
        }
        tp += report_tp;
        fn_count += unmatched.len();
        if predicted == gold {
            correct += 1;
        }
    }
    Metrics::from_counts(tp, fp, fn_count, correct, reports.len())
}

/// Overall micro-averaged metrics across all reports.
pub fn entity_metrics(reports: &[ReportEval]) -> Result<Metrics> {
    check_gold(reports)?;
    let refs: Vec<&ReportEval> = reports.iter().collect();
    Ok(pooled_metrics(&refs, None))
}

/// All-or-nothing report accuracy, optionally filtered by report kind.
pub fn report_accuracy(
    reports: &[ReportEval],
    kind: Option<ReportKind>,
) -> (usize, usize, f64) {
    let refs: Vec<&ReportEval> = reports
        .iter()
        .filter(|r| kind.is_none_or(|k| r.kind == k))
        .collect();
    let m = pooled_metrics(&refs, None);
    (m.correct_reports, m.total_reports, m.accuracy)
}

/// Grouping axis for breakdown tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakdownAxis {
    Facility,
    Category,
    ReportKind,
}

impl BreakdownAxis {
    pub fn parse(text: &str) -> Result<BreakdownAxis> {
        match text {
            "facility" => Ok(BreakdownAxis::Facility),
            "category" => Ok(BreakdownAxis::Category),
            "report-kind" | "kind" => Ok(BreakdownAxis::ReportKind),
            other => Err(Error::Config(format!(
                "unknown breakdown axis {other:?}; expected facility, category, or report-kind"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub label: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Breakdown rows plus the pooled overall row.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsTable {
    pub axis: BreakdownAxis,
    pub rows: Vec<MetricsRow>,
    pub overall: Metrics,
}

/// Per-axis-value metrics; the overall row is always computed from pooled
/// counts, never by averaging the rows.
pub fn breakdown(reports: &[ReportEval], axis: BreakdownAxis) -> Result<MetricsTable> {
    check_gold(reports)?;
    let all: Vec<&ReportEval> = reports.iter().collect();
    let overall = pooled_metrics(&all, None);
    let mut rows = Vec::new();
    match axis {
        BreakdownAxis::Facility => {
            for facility in Facility::ALL {
                let subset: Vec<&ReportEval> =
                    reports.iter().filter(|r| r.facility == facility).collect();
                if !subset.is_empty() {
                    rows.push(MetricsRow {
                        label: facility.to_string(),
                        metrics: pooled_metrics(&subset, None),
                    });
                }
            }
        }
        BreakdownAxis::ReportKind => {
            for kind in ReportKind::ALL {
                let subset: Vec<&ReportEval> =
                    reports.iter().filter(|r| r.kind == kind).collect();
                if !subset.is_empty() {
                    rows.push(MetricsRow {
                        label: kind.to_string(),
                        metrics: pooled_metrics(&subset, None),
                    });
                }
            }
        }
        BreakdownAxis::Category => {
            // every report participates in every category row; a report is
            // "correct" in a row when its entities of that category all match
            for category in EntityCategory::ALL {
                rows.push(MetricsRow {
                    label: category.name().to_string(),
                    metrics: pooled_metrics(&all, Some(category)),
                });
            }
        }
    }
    Ok(MetricsTable { axis, rows, overall })
}

impl MetricsTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header = format!(
            "{:<28} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>20}\n",
            "scope", "tp", "fp", "fn", "prec", "recall", "f1", "accuracy"
        );
        out.push_str(&header);
        out.push_str(&"-".repeat(header.len() - 1));
        out.push('\n');
        let mut write_row = |label: &str, m: &Metrics| {
            out.push_str(&format!(
                "{:<28} {:>9} {:>9} {:>9} {:>8.4} {:>8.4} {:>8.4} {:>20}\n",
                label,
                m.true_positives,
                m.false_positives,
                m.false_negatives,
                m.precision,
                m.recall,
                m.f1,
                m.accuracy_display()
            ));
        };
        for row in &self.rows {
            write_row(&row.label, &row.metrics);
        }
        write_row("overall", &self.overall);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entity(category: EntityCategory, sentence: usize, start: usize, end: usize) -> Entity {
        Entity {
            category,
            sentence,
            start,
            end,
            surface: String::new(),
            normalized: None,
        }
    }

    fn report(
        id: &str,
        facility: Facility,
        kind: ReportKind,
        predicted: Vec<Entity>,
        gold: Vec<Entity>,
    ) -> ReportEval {
        ReportEval {
            report_id: id.to_string(),
            facility,
            kind,
            predicted,
            gold,
        }
    }

    fn random_entities(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entity> {
        (0..n)
            .map(|_| {
                let start = rng.gen_range(0..6);
                entity(
                    EntityCategory::ALL[rng.gen_range(0..6)],
                    rng.gen_range(0..3),
                    start,
                    start + rng.gen_range(1..3),
                )
            })
            .collect()
    }

    fn random_reports(seed: u64, n: usize) -> Vec<ReportEval> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let gold_n = rng.gen_range(0..5);
                let mut gold = random_entities(&mut rng, gold_n);
                gold.sort_by_key(Entity::key);
                gold.dedup_by_key(|e| e.key());
                // predictions partially overlap gold
                let mut predicted: Vec<Entity> = gold
                    .iter()
                    .filter(|_| rng.gen_bool(0.7))
                    .cloned()
                    .collect();
                let extra = rng.gen_range(0..3);
                predicted.extend(random_entities(&mut rng, extra));
                report(
                    &format!("r{i}"),
                    Facility::ALL[rng.gen_range(0..4)],
                    ReportKind::ALL[rng.gen_range(0..3)],
                    predicted,
                    gold,
                )
            })
            .collect()
    }

    #[test]
    fn perfect_prediction_is_all_ones() {
        let gold = vec![
            entity(EntityCategory::SizeOfPolyp, 0, 1, 3),
            entity(EntityCategory::Indication, 1, 0, 2),
        ];
        let reports = vec![report(
            "a",
            Facility::Albany,
            ReportKind::Findings,
            gold.clone(),
            gold,
        )];
        let m = entity_metrics(&reports).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_prediction_convention() {
        let reports = vec![report(
            "a",
            Facility::Albany,
            ReportKind::Findings,
            vec![],
            vec![entity(EntityCategory::SizeOfPolyp, 0, 1, 3)],
        )];
        let m = entity_metrics(&reports).unwrap();
        assert!(m.empty_prediction);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.false_negatives, 1);
    }

    #[test]
    fn duplicate_gold_rejected() {
        let e = entity(EntityCategory::SizeOfPolyp, 0, 1, 3);
        let reports = vec![report(
            "a",
            Facility::Albany,
            ReportKind::Findings,
            vec![],
            vec![e.clone(), e],
        )];
        assert!(entity_metrics(&reports).is_err());
    }

    #[test]
    fn predicted_duplicate_counts_as_false_positive() {
        let e = entity(EntityCategory::SizeOfPolyp, 0, 1, 3);
        let reports = vec![report(
            "a",
            Facility::Albany,
            ReportKind::Findings,
            vec![e.clone(), e.clone()],
            vec![e],
        )];
        let m = entity_metrics(&reports).unwrap();
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (1, 1, 0));
    }

    #[test]
    fn pooled_counts_match_brute_force_double_loop() {
        let reports = random_reports(41, 50);
        let m = entity_metrics(&reports).unwrap();
        let (mut tp, mut fp, mut fn_count) = (0usize, 0usize, 0usize);
        for r in &reports {
            let mut matched = vec![false; r.gold.len()];
            for p in &r.predicted {
                let mut hit = false;
                for (gi, g) in r.gold.iter().enumerate() {
                    if !matched[gi] && g.key() == p.key() {
                        matched[gi] = true;
                        hit = true;
                        break;
                    }
                }
                if hit {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            fn_count += matched.iter().filter(|m| !**m).count();
        }
        assert_eq!(
            (m.true_positives, m.false_positives, m.false_negatives),
            (tp, fp, fn_count)
        );
    }

    #[test]
    fn report_accuracy_is_all_or_nothing() {
        let gold = vec![
            entity(EntityCategory::SizeOfPolyp, 0, 1, 3),
            entity(EntityCategory::LocationOfPolyp, 0, 5, 7),
            entity(EntityCategory::NumberOfPolyps, 1, 0, 1),
        ];
        let predicted = gold[..2].to_vec();
        let reports = vec![
            report("a", Facility::Albany, ReportKind::Findings, predicted, gold),
            report("b", Facility::Albany, ReportKind::Pathology, vec![], vec![]),
        ];
        let (correct, total, fraction) = report_accuracy(&reports, None);
        assert_eq!((correct, total), (1, 2));
        assert!((fraction - 0.5).abs() < 1e-12);
        // the empty-empty report is the correct one
        let (c, t, _) = report_accuracy(&reports, Some(ReportKind::Pathology));
        assert_eq!((c, t), (1, 1));
        let (c, t, _) = report_accuracy(&reports, Some(ReportKind::Findings));
        assert_eq!((c, t), (0, 1));
    }

    #[test]
    fn fraction_formatting() {
        assert_eq!(format_fraction(374, 400), "93.5% (374/400)");
        assert_eq!(format_fraction(0, 0), "0.0% (0/0)");
    }

    #[test]
    fn overall_is_pooled_not_mean_of_rows() {
        let reports = random_reports(7, 60);
        for axis in [BreakdownAxis::Facility, BreakdownAxis::ReportKind] {
            let table = breakdown(&reports, axis).unwrap();
            let tp: usize = table.rows.iter().map(|r| r.metrics.true_positives).sum();
            let fp: usize = table.rows.iter().map(|r| r.metrics.false_positives).sum();
            let fn_c: usize = table.rows.iter().map(|r| r.metrics.false_negatives).sum();
            assert_eq!(tp, table.overall.true_positives);
            assert_eq!(fp, table.overall.false_positives);
            assert_eq!(fn_c, table.overall.false_negatives);
        }
    }

    #[test]
    fn category_rows_pool_to_overall_counts() {
        let reports = random_reports(13, 40);
        let table = breakdown(&reports, BreakdownAxis::Category).unwrap();
        let tp: usize = table.rows.iter().map(|r| r.metrics.true_positives).sum();
        assert_eq!(tp, table.overall.true_positives);
        // every category row scores all reports
        for row in &table.rows {
            assert_eq!(row.metrics.total_reports, reports.len());
        }
    }

    #[test]
    fn single_facility_breakdown_equals_overall() {
        let mut reports = random_reports(19, 20);
        for r in &mut reports {
            r.facility = Facility::Detroit;
        }
        let table = breakdown(&reports, BreakdownAxis::Facility).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].metrics, table.overall);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let mut reports = random_reports(23, 30);
        let forward = entity_metrics(&reports).unwrap();
        reports.reverse();
        assert_eq!(forward, entity_metrics(&reports).unwrap());
    }

    #[test]
    fn report_accuracy_bounded_by_entity_recall_fraction() {
        for seed in 0..20 {
            let reports = random_reports(100 + seed, 25);
            let m = entity_metrics(&reports).unwrap();
            let gold_total = m.true_positives + m.false_negatives;
            if gold_total == 0 {
                continue;
            }
            let matched_fraction = m.true_positives as f64 / gold_total as f64;
            // all-or-nothing accuracy over entity-bearing reports is stricter
            let bearing: Vec<ReportEval> = reports
                .iter()
                .filter(|r| !r.gold.is_empty())
                .cloned()
                .collect();
            let (c, t, frac) = report_accuracy(&bearing, None);
            assert_eq!(c as f64 / t.max(1) as f64, if t == 0 { 0.0 } else { frac });
            assert!(frac <= matched_fraction + 1e-12);
        }
    }

    #[test]
    fn table_renders_text_and_json() {
        let reports = random_reports(3, 10);
        let table = breakdown(&reports, BreakdownAxis::Category).unwrap();
        let text = table.to_text();
        assert!(text.contains("overall"));
        assert!(text.contains("Indication"));
        let json: serde_json::Value = serde_json::from_str(&table.to_json()).unwrap();
        assert!(json["overall"]["f1"].is_number());
        assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(BreakdownAxis::parse("facility").unwrap(), BreakdownAxis::Facility);
        assert_eq!(BreakdownAxis::parse("kind").unwrap(), BreakdownAxis::ReportKind);
        assert!(BreakdownAxis::parse("bogus").is_err());
    }
}
