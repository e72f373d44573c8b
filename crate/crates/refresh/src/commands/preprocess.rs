use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use refresh_core::{build_vocabulary, parse_story_file, Document, SentenceSplit};

use super::{create_dir, load_settings, write_snapshot};
use crate::cli::{PreprocessArgs, SplitArg};
use crate::error::{CliError, Result};
use crate::formats::{read_vocab, write_documents, write_vocab};

impl From<SplitArg> for SentenceSplit {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Auto => SentenceSplit::Auto,
            SplitArg::Lines => SentenceSplit::Lines,
            SplitArg::Heuristic => SentenceSplit::Heuristic,
        }
    }
}

/// Parses every `.story` file of `dir` in file-name order. Files that fail
/// to parse are logged and left out; the second value counts them.
pub fn read_story_dir(dir: &Path, split: SentenceSplit) -> Result<(Vec<Document>, usize)> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "story"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!("{}: no .story files", dir.display())));
    }
    let parsed: Vec<Option<Document>> = files
        .par_iter()
        .map(|path| {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let result = fs::read(path)
                .map_err(|e| e.to_string())
                .and_then(|bytes| String::from_utf8(bytes).map_err(|_| "not valid UTF-8".to_string()))
                .and_then(|text| parse_story_file(&name, &text, split).map_err(|e| e.to_string()));
            match result {
                Ok(doc) => Some(doc),
                Err(e) => {
                    log::error!("{}: {e}", path.display());
                    None
                }
            }
        })
        .collect();
    let failed = parsed.iter().filter(|d| d.is_none()).count();
    Ok((parsed.into_iter().flatten().collect(), failed))
}

pub fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let (settings, _) = load_settings(&args.settings)?;
    let (docs, failed) = read_story_dir(&args.input, args.split.into())?;
    if docs.is_empty() {
        return Err(CliError::data(format!("{}: no story file could be parsed", args.input.display())));
    }
    let without_highlights = docs.iter().filter(|d| d.highlights.is_empty()).count();
    if without_highlights > 0 {
        log::warn!("{without_highlights} documents have no highlights");
    }
    let vocab = match &args.vocab {
        Some(path) => read_vocab(path)?,
        None => build_vocabulary(&docs, settings.min_freq).map_err(CliError::usage)?,
    };
    create_dir(&args.output)?;
    write_documents(&args.output.join("documents.jsonl"), &docs)?;
    write_vocab(&args.output.join("vocab.txt"), &vocab)?;
    write_snapshot(&args.output, &settings)?;
    log::info!(
        "{} documents cached, {failed} files failed, vocabulary of {} tokens",
        docs.len(),
        vocab.len()
    );
    Ok(())
}
