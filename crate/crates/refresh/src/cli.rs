//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "refresh", version, about = "Extractive summarization by sentence ranking")]
pub struct Cli {
    /// More log output (repeat for trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse story files into a document cache and vocabulary.
    Preprocess(PreprocessArgs),
    /// Precompute candidate extracts and oracle labels.
    Oracle(OracleArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Summarize documents with a trained model.
    Summarize(SummarizeArgs),
    /// Score summaries against the documents' highlights.
    Evaluate(EvaluateArgs),
    /// Score candidate summaries against reference summaries pairwise.
    Rouge(RougeArgs),
    /// Summaries made of each document's leading sentences.
    Lead(LeadArgs),
}

/// Settings shared by every subcommand. Precedence, lowest first: the
/// defaults, `--config`, the named flags, then `--set`.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    /// Settings file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Any settings key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Corpus tag (cnn or dailymail) selecting m and k defaults.
    #[arg(long)]
    pub corpus: Option<String>,
    /// Sentences per summary and maximum extract length.
    #[arg(long)]
    pub m: Option<usize>,
    /// Oracle pool size.
    #[arg(long)]
    pub p: Option<usize>,
    /// Candidate extracts kept per document.
    #[arg(long)]
    pub k: Option<usize>,
    /// Individual-label threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub stemming: Option<bool>,
    /// union or concatenated.
    #[arg(long)]
    pub lcs: Option<String>,
    #[arg(long)]
    pub min_freq: Option<usize>,
    /// ce_individual, ce_collective or reinforce.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// uniform or reward.
    #[arg(long)]
    pub sampling: Option<String>,
}

impl SettingsArgs {
    /// The named flags as settings pairs followed by the `--set` pairs.
    pub fn pairs(&self) -> Result<Vec<(String, String)>, String> {
        let mut pairs = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_owned(), v));
            }
        };
        put("corpus", self.corpus.clone());
        put("m", self.m.map(|v| v.to_string()));
        put("p", self.p.map(|v| v.to_string()));
        put("k", self.k.map(|v| v.to_string()));
        put("tau", self.tau.map(|v| v.to_string()));
        put("stemming", self.stemming.map(|v| v.to_string()));
        put("lcs", self.lcs.clone());
        put("min_freq", self.min_freq.map(|v| v.to_string()));
        put("mode", self.mode.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("epochs", self.epochs.map(|v| v.to_string()));
        put("batch_size", self.batch_size.map(|v| v.to_string()));
        put("lr", self.lr.map(|v| v.to_string()));
        put("sampling", self.sampling.clone());
        for entry in &self.set {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {entry:?}"))?;
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        Ok(pairs)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    #[default]
    Auto,
    Lines,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of `.story` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for documents.jsonl, vocab.txt and config.txt.
    #[arg(long)]
    pub output: PathBuf,
    /// Reuse this vocabulary instead of building one from the input.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub split: SplitArg,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Document cache.
    #[arg(long)]
    pub documents: PathBuf,
    /// Output directory for candidates.jsonl and the label files.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training document cache.
    #[arg(long)]
    pub documents: PathBuf,
    /// Output directory of the `oracle` subcommand for these documents.
    #[arg(long)]
    pub oracle: PathBuf,
    /// Validation document cache.
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Pretrained word vectors, one token and its values per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory for checkpoints, train_log.jsonl and config.txt.
    #[arg(long)]
    pub output: PathBuf,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Document cache to summarize.
    #[arg(long, conflicts_with = "stories", required_unless_present = "stories")]
    pub documents: Option<PathBuf>,
    /// Directory of `.story` files to summarize directly.
    #[arg(long)]
    pub stories: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Output directory for summaries.jsonl, summaries.txt and config.txt.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// summaries.jsonl to score.
    #[arg(long)]
    pub summaries: PathBuf,
    /// Document cache holding the highlights.
    #[arg(long)]
    pub documents: PathBuf,
    /// Write the report as JSON here (config.txt goes alongside).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write per-document scores as JSON lines here.
    #[arg(long)]
    pub per_document: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct RougeArgs {
    /// Candidate summaries: one sentence per line, summaries separated by
    /// blank lines.
    #[arg(long)]
    pub candidate: PathBuf,
    /// Reference summaries, paired with the candidates in order.
    #[arg(long)]
    pub reference: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct LeadArgs {
    #[arg(long)]
    pub documents: PathBuf,
    /// Output directory for summaries.jsonl, summaries.txt and config.txt.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}
