use rayon::prelude::*;
use refresh_core::{candidate_set, individual_labels, CandidateSet, Document};

use super::{create_dir, load_settings, write_snapshot};
use crate::cli::OracleArgs;
use crate::error::{CliError, Result};
use crate::formats::{candidates_to_bytes, labels_to_string, read_documents, write_atomic};

pub const CANDIDATES: &str = "candidates.jsonl";
pub const INDIVIDUAL_LABELS: &str = "labels.individual.tsv";
pub const COLLECTIVE_LABELS: &str = "labels.collective.tsv";

struct OracleOutput {
    id: String,
    n: usize,
    candidates: CandidateSet,
    individual: Vec<u8>,
    collective: Vec<u8>,
}

fn process(doc: &Document, settings: &refresh_core::Settings) -> Result<OracleOutput> {
    let candidates = candidate_set(doc, &settings.oracle, &settings.rouge)?;
    let individual = individual_labels(doc, &settings.oracle, &settings.rouge)?;
    let collective = candidates
        .best()
        .ok_or_else(|| CliError::internal(format!("document {}: no candidate extracts", doc.id)))?
        .extract
        .labels(doc.len());
    Ok(OracleOutput { id: doc.id.clone(), n: doc.len(), candidates, individual, collective })
}

pub fn oracle(args: &OracleArgs) -> Result<()> {
    let (settings, _) = load_settings(&args.settings)?;
    settings.oracle.validate()?;
    let docs = read_documents(&args.documents)?;
    let outputs: Vec<Option<OracleOutput>> = docs
        .par_iter()
        .map(|doc| {
            if doc.highlights.is_empty() {
                log::warn!("document {}: no highlights, skipped", doc.id);
                return Ok(None);
            }
            process(doc, &settings).map(Some)
        })
        .collect::<Result<_>>()?;
    let outputs: Vec<OracleOutput> = outputs.into_iter().flatten().collect();

    let mut sets = Vec::with_capacity(outputs.len());
    let mut individual = Vec::with_capacity(outputs.len());
    let mut collective = Vec::with_capacity(outputs.len());
    for o in outputs {
        individual.push((o.id.clone(), o.individual));
        collective.push((o.id, o.collective));
        sets.push((o.candidates, o.n));
    }
    create_dir(&args.output)?;
    write_atomic(&args.output.join(CANDIDATES), &candidates_to_bytes(&sets)?)?;
    write_atomic(&args.output.join(INDIVIDUAL_LABELS), labels_to_string(&individual).as_bytes())?;
    write_atomic(&args.output.join(COLLECTIVE_LABELS), labels_to_string(&collective).as_bytes())?;
    write_snapshot(&args.output, &settings)?;
    log::info!("{} of {} documents processed", sets.len(), docs.len());
    Ok(())
}
