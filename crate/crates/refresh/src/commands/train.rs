use std::collections::HashMap;
use std::path::Path;

use refresh_core::train::{EpochRecord, FitError, TrainingDoc, ValidationSet};
use refresh_core::{parse_embeddings, CandidateSet, Document, RefreshModel, TrainMode, Trainer};

use super::oracle::{CANDIDATES, COLLECTIVE_LABELS, INDIVIDUAL_LABELS};
use super::{create_dir, load_settings, write_snapshot};
use crate::cli::TrainArgs;
use crate::error::{CliError, Result};
use crate::formats::{
    log_line, read_candidates, read_documents, read_labels, read_text, read_vocab, write_atomic, LogRecord,
};

pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const TRAIN_LOG: &str = "train_log.jsonl";

type LabelMap = HashMap<String, Vec<u8>>;

fn load_labels(path: &Path, docs: &HashMap<&str, usize>) -> Result<Option<LabelMap>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut map = HashMap::new();
    for (id, labels) in read_labels(path)? {
        if let Some(&n) = docs.get(id.as_str()) {
            if labels.len() != n {
                return Err(CliError::data(format!(
                    "{}: document {id} has {} labels for {n} sentences",
                    path.display(),
                    labels.len()
                )));
            }
        }
        map.insert(id, labels);
    }
    Ok(Some(map))
}

fn load_candidates(path: &Path, docs: &HashMap<&str, usize>) -> Result<Option<HashMap<String, CandidateSet>>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut map = HashMap::new();
    for (set, n) in read_candidates(path)? {
        if docs.get(set.id.as_str()).is_some_and(|&len| len != n) {
            return Err(CliError::data(format!(
                "{}: document {} was scored with {n} sentences",
                path.display(),
                set.id
            )));
        }
        map.insert(set.id.clone(), set);
    }
    Ok(Some(map))
}

fn require<T>(store: Option<T>, dir: &Path, file: &str, mode: TrainMode) -> Result<T> {
    store.ok_or_else(|| {
        CliError::usage(format!(
            "{} training needs {}; run the oracle subcommand first",
            mode.as_str(),
            dir.join(file).display()
        ))
    })
}

/// Log lines for a history, with best flags recomputed.
fn log_records(history: &[EpochRecord]) -> Vec<LogRecord> {
    let mut best = f64::NEG_INFINITY;
    history.iter().map(|r| {
        let is_best = r.validation_reward > best;
        best = best.max(r.validation_reward);
        log_record(r, is_best)
    }).collect()
}

fn log_record(r: &EpochRecord, best: bool) -> LogRecord {
    LogRecord {
        epoch: r.epoch,
        mode: r.mode.as_str().into(),
        loss: r.stats.loss,
        sampled_reward: r.stats.sampled_reward,
        documents: r.stats.documents,
        skipped: r.stats.skipped,
        validation_reward: r.validation_reward,
        best,
    }
}

fn with_highlights(docs: Vec<Document>, what: &str) -> Vec<Document> {
    let before = docs.len();
    let docs: Vec<Document> = docs.into_iter().filter(|d| !d.highlights.is_empty()).collect();
    if docs.len() < before {
        log::warn!("{} {what} documents have no highlights and are left out", before - docs.len());
    }
    docs
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let (mut settings, _) = load_settings(&args.settings)?;
    settings.train.validate()?;
    let vocab = read_vocab(&args.vocab)?;
    let train_docs = with_highlights(read_documents(&args.documents)?, "training");
    let validation_docs = with_highlights(read_documents(&args.validation)?, "validation");
    if train_docs.is_empty() || validation_docs.is_empty() {
        return Err(CliError::data("training and validation sets must each hold a document with highlights"));
    }

    let trainer = match &args.resume {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            let trainer = Trainer::resume(&bytes, settings.train.clone())?;
            settings.model = trainer.model().config().clone();
            trainer
        }
        None => {
            settings.model.vocab_size = vocab.len();
            let embeddings = match &args.embeddings {
                Some(path) => Some(
                    parse_embeddings(&read_text(path)?, &vocab, settings.model.embedding_dim)
                        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
                ),
                None => None,
            };
            Trainer::new(RefreshModel::new(settings.model.clone(), embeddings)?, settings.train.clone())?
        }
    };
    let model_vocab = trainer.model().config().vocab_size;
    if model_vocab != vocab.len() {
        return Err(CliError::usage(format!(
            "checkpoint expects a vocabulary of {model_vocab} tokens, {} has {}",
            args.vocab.display(),
            vocab.len()
        )));
    }

    let lengths: HashMap<&str, usize> = train_docs.iter().map(|d| (d.id.as_str(), d.len())).collect();
    let modes: Vec<TrainMode> = (0..settings.train.epochs).map(|e| settings.train.mode_at(e)).collect();
    let needs = |m: TrainMode| modes.contains(&m);
    let individual = match needs(TrainMode::CrossEntropyIndividual) {
        true => Some(require(
            load_labels(&args.oracle.join(INDIVIDUAL_LABELS), &lengths)?,
            &args.oracle,
            INDIVIDUAL_LABELS,
            TrainMode::CrossEntropyIndividual,
        )?),
        false => None,
    };
    let collective = match needs(TrainMode::CrossEntropyCollective) {
        true => Some(require(
            load_labels(&args.oracle.join(COLLECTIVE_LABELS), &lengths)?,
            &args.oracle,
            COLLECTIVE_LABELS,
            TrainMode::CrossEntropyCollective,
        )?),
        false => None,
    };
    let mut candidates = match needs(TrainMode::Reinforce) {
        true => Some(require(
            load_candidates(&args.oracle.join(CANDIDATES), &lengths)?,
            &args.oracle,
            CANDIDATES,
            TrainMode::Reinforce,
        )?),
        false => None,
    };

    let model = trainer.model();
    let data: Vec<TrainingDoc> = train_docs
        .iter()
        .map(|d| {
            let pick = |map: &Option<LabelMap>| map.as_ref().and_then(|m| m.get(&d.id).cloned());
            TrainingDoc::new(
                d,
                &vocab,
                model,
                pick(&individual),
                pick(&collective),
                candidates.as_mut().and_then(|m| m.remove(&d.id)),
            )
        })
        .collect();
    let validation = ValidationSet::new(&validation_docs, &vocab, model, &settings.rouge)?;

    create_dir(&args.output)?;
    write_snapshot(&args.output, &settings)?;
    let mut trainer = trainer;
    let mut log = log_records(&trainer.state().history);
    let log_path = args.output.join(TRAIN_LOG);
    write_log(&log_path, &log)?;
    let output = args.output.clone();
    let mut sink = |record: &EpochRecord, checkpoint: &[u8], is_best: bool| -> Result<()> {
        log::info!(
            "epoch {} ({}): loss {:.4}, validation reward {:.4}{}",
            record.epoch,
            record.mode.as_str(),
            record.stats.loss,
            record.validation_reward,
            if is_best { " (best)" } else { "" }
        );
        write_atomic(&output.join(LAST_CHECKPOINT), checkpoint)?;
        if is_best {
            write_atomic(&output.join(BEST_CHECKPOINT), checkpoint)?;
        }
        log.push(log_record(record, is_best));
        write_log(&log_path, &log)
    };
    let outcome = trainer.fit(&data, &validation, &mut sink).map_err(|e| match e {
        FitError::Train(e) => e.into(),
        FitError::Sink(e) => e,
    })?;
    log::info!("best epoch {} with validation reward {:.4}", outcome.best_epoch, outcome.best_reward);
    Ok(())
}

fn write_log(path: &Path, records: &[LogRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&log_line(r)?);
    }
    write_atomic(path, text.as_bytes())
}
