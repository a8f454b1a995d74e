//! `scope-extract`: pipeline command-line interface.
//!
//! Subcommands: `generate` (synthetic corpus), `train-sbd` (sentence
//! boundary tree), `train` (tagger), `predict` (entity extraction), and
//! `eval` (metrics tables). All outputs are written atomically and every
//! command is deterministic given its inputs and `--seed`.

mod config;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use scope_extract::corpus::{
    load_corpus, split_corpus, uniform_facility_mix, write_corpus, Entity,
    Facility, FacilityMix, ReportKind,
};
use scope_extract::corpus::{generate_corpus, GeneratorConfig};
use scope_extract::eval::{breakdown, BreakdownAxis, ReportEval};
use scope_extract::lexicon::DomainDictionary;
use scope_extract::preprocess::WordProcessingOptions;
use scope_extract::rules::RuleSet;
use scope_extract::sbd::{gold_boundary_candidates, train_sbd, DecisionTree, SbdConfig};
use scope_extract::tagger::{fit_tfidf, train, Pipeline, TrainedModel, DEFAULT_DEDUP_THRESHOLD};
use scope_extract::{Error, Result};

use config::{resolve_training_config, TrainOverrides};
use output::{write_atomic, write_atomic_with};

#[derive(Parser)]
#[command(name = "scope-extract", version, about = "Structured colonoscopy findings extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GeneratorRates {
    #[arg(long)]
    misspelling_rate: Option<f64>,
    #[arg(long)]
    abbreviation_rate: Option<f64>,
    #[arg(long)]
    compound_rate: Option<f64>,
    #[arg(long)]
    duplicate_rate: Option<f64>,
    #[arg(long)]
    distance_rate: Option<f64>,
    #[arg(long)]
    noise_sentence_rate: Option<f64>,
}

impl GeneratorRates {
    fn resolve(&self) -> GeneratorConfig {
        let mut c = GeneratorConfig::default();
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(
            misspelling_rate,
            abbreviation_rate,
            compound_rate,
            duplicate_rate,
            distance_rate,
            noise_sentence_rate
        );
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic annotated corpus (JSON lines).
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// Facility mix, e.g. "albany=0.4,detroit=0.6"; defaults to uniform.
        #[arg(long)]
        mix: Option<String>,
        #[command(flatten)]
        rates: GeneratorRates,
    },
    /// Train the sentence-boundary decision tree from a gold corpus.
    TrainSbd {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
    /// Train the tagger on an 80/10/10 split of the corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        model_out: PathBuf,
        /// Epoch metrics log (JSON lines); defaults to `<model-out>.log.jsonl`.
        #[arg(long)]
        log_out: Option<PathBuf>,
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// Also write the held-out validation split here.
        #[arg(long)]
        validation_out: Option<PathBuf>,
        /// Also write the held-out test split here.
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Extract entities from reports (corpus JSON lines in, entities out).
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sbd_tree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip the neural tagger and use the rule engine alone.
        #[arg(long)]
        rules_only: bool,
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DEDUP_THRESHOLD)]
        dedup_threshold: f64,
        /// Split solid (non-hyphenated) compound words during preprocessing.
        #[arg(long)]
        split_solid_compounds: bool,
    },
    /// Score predictions against gold annotations.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Breakdown axis: facility, category, or report-kind.
        #[arg(long, default_value = "category")]
        axis: String,
        /// Output format: table or json.
        #[arg(long, default_value = "table")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// One prediction output line.
#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    report_id: String,
    facility: Facility,
    kind: ReportKind,
    entities: Vec<Entity>,
}

fn parse_mix(text: &str) -> Result<FacilityMix> {
    let mut mix = BTreeMap::new();
    for part in text.split(',') {
        let Some((name, value)) = part.split_once('=') else {
            return Err(Error::Config(format!("mix entry {part:?}: expected name=fraction")));
        };
        let facility = Facility::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::Config(format!("unknown facility {name:?}")))?;
        let fraction: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("mix entry {part:?}: bad fraction")))?;
        if mix.insert(facility, fraction).is_some() {
            return Err(Error::Config(format!("facility {facility} listed twice")));
        }
    }
    Ok(mix)
}

fn load_dictionary(path: Option<&Path>) -> Result<DomainDictionary> {
    match path {
        Some(p) => DomainDictionary::load(p),
        None => DomainDictionary::shipped_default(),
    }
}

fn cmd_generate(
    seed: u64,
    count: usize,
    out: &Path,
    mix: Option<&str>,
    rates: &GeneratorRates,
) -> Result<()> {
    let mix = match mix {
        Some(text) => parse_mix(text)?,
        None => uniform_facility_mix(),
    };
    let reports = generate_corpus(seed, count, &mix, &rates.resolve())?;
    write_atomic_with(out, |buf| write_corpus(&reports, buf))?;
    eprintln!("wrote {} reports to {}", reports.len(), out.display());
    Ok(())
}

fn cmd_train_sbd(corpus: &Path, out: &Path, dictionary: Option<&Path>) -> Result<()> {
    let dictionary = load_dictionary(dictionary)?;
    let reports = load_corpus(corpus)?;
    let sbd_config = SbdConfig::default();
    let mut candidates = Vec::new();
    for report in &reports {
        candidates.extend(gold_boundary_candidates(
            report,
            &dictionary,
            WordProcessingOptions::default(),
            &sbd_config,
        )?);
    }
    let tree = train_sbd(&candidates)?;
    write_atomic(out, tree.to_json().as_bytes())?;
    eprintln!(
        "trained boundary tree on {} candidates, wrote {}",
        candidates.len(),
        out.display()
    );
    Ok(())
}

fn save_model_atomic(model: &TrainedModel, path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(parent)?.into_temp_path();
    model.save(&tmp)?;
    tmp.persist(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    corpus: &Path,
    seed: u64,
    model_out: &Path,
    log_out: Option<&Path>,
    config_file: Option<&Path>,
    dictionary: Option<&Path>,
    validation_out: Option<&Path>,
    test_out: Option<&Path>,
    overrides: &TrainOverrides,
) -> Result<()> {
    let dictionary = load_dictionary(dictionary)?;
    let config = resolve_training_config(config_file, overrides, seed)?;
    let reports = load_corpus(corpus)?;
    let split = split_corpus(reports, seed);
    let (model, log) = train(&split.train, &split.validation, &dictionary, &config)?;

    save_model_atomic(&model, model_out)?;
    let log_path = log_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| model_out.with_extension("log.jsonl"));
    let mut log_buf = Vec::new();
    for entry in &log {
        serde_json::to_writer(&mut log_buf, entry).map_err(|e| Error::Config(e.to_string()))?;
        log_buf.push(b'\n');
    }
    write_atomic(&log_path, &log_buf)?;
    if let Some(path) = validation_out {
        write_atomic_with(path, |buf| write_corpus(&split.validation, buf))?;
    }
    if let Some(path) = test_out {
        write_atomic_with(path, |buf| write_corpus(&split.test, buf))?;
    }
    eprintln!(
        "trained on {} reports ({} validation), wrote {} and {}",
        split.train.len(),
        split.validation.len(),
        model_out.display(),
        log_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    input: &Path,
    model: &Path,
    sbd_tree: &Path,
    out: &Path,
    rules_only: bool,
    dictionary: Option<&Path>,
    dedup_threshold: f64,
    split_solid_compounds: bool,
) -> Result<()> {
    let dictionary = load_dictionary(dictionary)?;
    let reports = load_corpus(input)?;
    let tfidf = fit_tfidf(&reports, &dictionary);
    let mut pipeline = Pipeline {
        model: TrainedModel::load(model)?,
        tree: DecisionTree::load(sbd_tree)?,
        sbd_config: SbdConfig::default(),
        dictionary,
        rules: RuleSet::default_for(Facility::Albany),
        word_options: WordProcessingOptions {
            split_solid_compounds,
        },
        dedup_threshold,
    };
    let mut buf = Vec::new();
    for report in &reports {
        pipeline.rules = RuleSet::default_for(report.facility);
        let entities = if rules_only {
            pipeline.predict_rules_only(&report.raw_text, &tfidf)?
        } else {
            pipeline.predict(&report.raw_text, &tfidf)?
        };
        let record = PredictionRecord {
            report_id: report.report_id.clone(),
            facility: report.facility,
            kind: report.kind,
            entities,
        };
        serde_json::to_writer(&mut buf, &record).map_err(|e| Error::Config(e.to_string()))?;
        buf.push(b'\n');
    }
    write_atomic(out, &buf)?;
    eprintln!("wrote predictions for {} reports to {}", reports.len(), out.display());
    Ok(())
}

fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, format!("bad prediction record: {e}")))?;
        out.push(record);
    }
    Ok(out)
}

fn cmd_eval(
    predictions: &Path,
    gold: &Path,
    axis: &str,
    format: &str,
    out: Option<&Path>,
) -> Result<()> {
    let axis = BreakdownAxis::parse(axis)?;
    let predicted = load_predictions(predictions)?;
    let gold_reports = load_corpus(gold)?;
    let mut by_id: BTreeMap<&str, &PredictionRecord> = BTreeMap::new();
    for record in &predicted {
        if by_id.insert(record.report_id.as_str(), record).is_some() {
            return Err(Error::EvalInput(format!(
                "duplicate prediction for report {}",
                record.report_id
            )));
        }
    }
    let mut evals = Vec::new();
    for report in &gold_reports {
        let record = by_id.remove(report.report_id.as_str()).ok_or_else(|| {
            Error::EvalInput(format!("no prediction for report {}", report.report_id))
        })?;
        evals.push(ReportEval {
            report_id: report.report_id.clone(),
            facility: report.facility,
            kind: report.kind,
            predicted: record.entities.clone(),
            gold: report.gold_entities.clone(),
        });
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(Error::EvalInput(format!("prediction for unknown report {extra}")));
    }
    let table = breakdown(&evals, axis)?;
    let rendered = match format {
        "table" => table.to_text(),
        "json" => table.to_json(),
        other => {
            return Err(Error::Config(format!(
                "unknown format {other:?}; expected table or json"
            )))
        }
    };
    match out {
        Some(path) => write_atomic(path, rendered.as_bytes())?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate {
            seed,
            count,
            out,
            mix,
            rates,
        } => cmd_generate(*seed, *count, out, mix.as_deref(), rates),
        Command::TrainSbd {
            corpus,
            out,
            dictionary,
        } => cmd_train_sbd(corpus, out, dictionary.as_deref()),
        Command::Train {
            corpus,
            seed,
            model_out,
            log_out,
            config,
            dictionary,
            validation_out,
            test_out,
            overrides,
        } => cmd_train(
            corpus,
            *seed,
            model_out,
            log_out.as_deref(),
            config.as_deref(),
            dictionary.as_deref(),
            validation_out.as_deref(),
            test_out.as_deref(),
            overrides,
        ),
        Command::Predict {
            input,
            model,
            sbd_tree,
            out,
            rules_only,
            dictionary,
            dedup_threshold,
            split_solid_compounds,
        } => cmd_predict(
            input,
            model,
            sbd_tree,
            out,
            *rules_only,
            dictionary.as_deref(),
            *dedup_threshold,
            *split_solid_compounds,
        ),
        Command::Eval {
            predictions,
            gold,
            axis,
            format,
            out,
        } => cmd_eval(predictions, gold, axis, format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SCOPE_EXTRACT_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SCOPE_EXTRACT_THREADS must be a positive integer");
                return ExitCode::FAILURE;
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
