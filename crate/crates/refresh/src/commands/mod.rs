//! Subcommand implementations.

mod evaluate;
mod oracle;
mod preprocess;
mod summarize;
mod train;

use std::path::Path;

use refresh_core::settings::parse_pairs;
use refresh_core::Settings;

use crate::cli::{Command, SettingsArgs};
use crate::error::{CliError, Result};
use crate::formats::{read_text, write_atomic};

pub use evaluate::{evaluate, rouge, score_summaries, sentences_of};
pub use oracle::oracle;
pub use preprocess::{preprocess, read_story_dir};
pub use summarize::{lead, summarize};
pub use train::train;

pub const SNAPSHOT: &str = "config.txt";

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Preprocess(a) => preprocess(a),
        Command::Oracle(a) => oracle(a),
        Command::Train(a) => train(a),
        Command::Summarize(a) => summarize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Rouge(a) => rouge(a),
        Command::Lead(a) => lead(a),
    }
}

/// Effective settings and the pairs that were applied over the defaults.
pub fn load_settings(args: &SettingsArgs) -> Result<(Settings, Vec<(String, String)>)> {
    let mut pairs = match &args.config {
        Some(path) => parse_pairs(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };
    pairs.extend(args.pairs().map_err(CliError::usage)?);
    let mut settings = Settings::default();
    settings.apply(&pairs)?;
    Ok((settings, pairs))
}

pub fn write_snapshot(dir: &Path, settings: &Settings) -> Result<()> {
    write_atomic(&dir.join(SNAPSHOT), settings.to_text().as_bytes())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
