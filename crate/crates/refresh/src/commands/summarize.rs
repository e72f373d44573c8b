use rayon::prelude::*;
use refresh_core::{assemble_summary, lead_baseline, pad_document, Document, RefreshModel, SentenceSplit};

use super::{create_dir, load_settings, read_story_dir, write_snapshot};
use crate::cli::{LeadArgs, SummarizeArgs};
use crate::error::{CliError, Result};
use crate::formats::{read_documents, read_vocab, write_summaries, SummaryRecord};

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let (mut settings, pairs) = load_settings(&args.settings)?;
    let bytes = std::fs::read(&args.checkpoint).map_err(|e| CliError::io(&args.checkpoint, e))?;
    let (model, _) = RefreshModel::from_checkpoint(&bytes)
        .map_err(|e| CliError::data(format!("{}: {e}", args.checkpoint.display())))?;
    let vocab = read_vocab(&args.vocab)?;
    if vocab.len() != model.config().vocab_size {
        return Err(CliError::usage(format!(
            "{} was trained with {} vocabulary entries, {} has {}",
            args.checkpoint.display(),
            model.config().vocab_size,
            args.vocab.display(),
            vocab.len()
        )));
    }
    let explicit_m = pairs.iter().any(|(k, _)| k == "m" || k == "corpus");
    let m = if explicit_m { settings.oracle.m } else { model.config().m_select };
    if m == 0 {
        return Err(CliError::usage("m must be at least 1"));
    }

    let docs: Vec<Document> = match (&args.documents, &args.stories) {
        (Some(path), _) => read_documents(path)?,
        (None, Some(dir)) => read_story_dir(dir, SentenceSplit::Auto)?.0,
        (None, None) => return Err(CliError::usage("give --documents or --stories")),
    };
    let summaries = docs
        .par_iter()
        .map(|doc| {
            let view = pad_document(doc, &vocab, model.config());
            let scores = model.extract_scores(&view).map_err(|e| CliError::data(format!("document {}: {e}", doc.id)))?;
            let extract = assemble_summary(&scores, m)?;
            Ok(SummaryRecord::new(doc, &extract))
        })
        .collect::<Result<Vec<_>>>()?;

    settings.model = model.config().clone();
    settings.model.m_select = m;
    settings.oracle.m = m;
    create_dir(&args.output)?;
    write_summaries(&args.output, &summaries)?;
    write_snapshot(&args.output, &settings)?;
    log::info!("{} documents summarized with m = {m}", summaries.len());
    Ok(())
}

pub fn lead(args: &LeadArgs) -> Result<()> {
    let (settings, _) = load_settings(&args.settings)?;
    let m = settings.oracle.m;
    let docs = read_documents(&args.documents)?;
    let summaries = docs
        .iter()
        .map(|doc| Ok(SummaryRecord::new(doc, &lead_baseline(doc, m)?)))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&args.output)?;
    write_summaries(&args.output, &summaries)?;
    write_snapshot(&args.output, &settings)?;
    log::info!("{} lead summaries with m = {m}", summaries.len());
    Ok(())
}
