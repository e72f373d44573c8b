//! On-disk formats: the document cache, vocabulary, candidate store, label
//! files, summaries, training log and evaluation report.
//!
//! Every JSON-lines file is written with one record per line and can be read
//! back by the matching `read_*` function.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use refresh_core::corpus::{Sentence, Token};
use refresh_core::oracle::ScoredExtract;
use refresh_core::{CandidateSet, Document, Extract, Reward, RougeScore, Vocabulary};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DOCUMENTS_FORMAT: &str = "refresh-documents";
pub const DOCUMENTS_VERSION: u32 = 1;
const VOCAB_HEADER: &str = "#refresh-vocab min_freq=";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `bytes` through a temporary sibling so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes).map_err(|e| CliError::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| CliError::io(path, e))
}

fn jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = BufWriter::new(Vec::new());
    for r in records {
        serde_json::to_writer(&mut out, &r).map_err(CliError::internal)?;
        out.write_all(b"\n").map_err(CliError::internal)?;
    }
    out.into_inner().map_err(CliError::internal)
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path, text: &str, skip: usize) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .skip(skip)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentsHeader {
    format: String,
    version: u32,
    documents: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    raw: String,
    tokens: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    sentences: Vec<SentenceRecord>,
    highlights: Vec<SentenceRecord>,
}

fn sentence_record(s: &Sentence) -> SentenceRecord {
    SentenceRecord {
        raw: s.raw.clone(),
        tokens: s.tokens.iter().map(|t| t.as_str().to_owned()).collect(),
    }
}

fn sentences_from(id: &str, records: Vec<SentenceRecord>) -> Result<Vec<Sentence>> {
    records
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            if r.tokens.is_empty() {
                return Err(CliError::data(format!("document {id}: sentence {index} has no tokens")));
            }
            let tokens = r
                .tokens
                .into_iter()
                .map(Token::new)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::data(format!("document {id}: {e}")))?;
            Ok(Sentence { index, tokens, raw: r.raw })
        })
        .collect()
}

/// Header line followed by one document per line.
pub fn documents_to_bytes(docs: &[Document]) -> Result<Vec<u8>> {
    let header = DocumentsHeader {
        format: DOCUMENTS_FORMAT.into(),
        version: DOCUMENTS_VERSION,
        documents: docs.len(),
    };
    let mut out = jsonl([header])?;
    out.extend(jsonl(docs.iter().map(|d| DocumentRecord {
        id: d.id.clone(),
        sentences: d.sentences.iter().map(sentence_record).collect(),
        highlights: d.highlights.iter().map(sentence_record).collect(),
    }))?);
    Ok(out)
}

pub fn documents_from_str(path: &Path, text: &str) -> Result<Vec<Document>> {
    let first = text.lines().next().ok_or_else(|| CliError::data(format!("{}: empty file", path.display())))?;
    let header: DocumentsHeader = serde_json::from_str(first)
        .map_err(|e| CliError::data(format!("{}: bad header: {e}", path.display())))?;
    if header.format != DOCUMENTS_FORMAT || header.version != DOCUMENTS_VERSION {
        return Err(CliError::data(format!(
            "{}: expected {DOCUMENTS_FORMAT} version {DOCUMENTS_VERSION}, found {} version {}",
            path.display(),
            header.format,
            header.version
        )));
    }
    let records: Vec<DocumentRecord> = parse_jsonl(path, text, 1)?;
    if records.len() != header.documents {
        return Err(CliError::data(format!(
            "{}: header announces {} documents, found {}",
            path.display(),
            header.documents,
            records.len()
        )));
    }
    let mut seen = BTreeMap::new();
    records
        .into_iter()
        .map(|r| {
            if seen.insert(r.id.clone(), ()).is_some() {
                return Err(CliError::data(format!("{}: duplicate document id {}", path.display(), r.id)));
            }
            let sentences = sentences_from(&r.id, r.sentences)?;
            let highlights = sentences_from(&r.id, r.highlights)?;
            Ok(Document { id: r.id, sentences, highlights })
        })
        .collect()
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    write_atomic(path, &documents_to_bytes(docs)?)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    documents_from_str(path, &read_text(path)?)
}

/// Header line with the minimum frequency, then one token per line in id
/// order.
pub fn vocab_to_string(vocab: &Vocabulary) -> String {
    let mut out = format!("{VOCAB_HEADER}{}\n", vocab.min_freq());
    for t in vocab.tokens() {
        out.push_str(t);
        out.push('\n');
    }
    out
}

pub fn vocab_from_str(path: &Path, text: &str) -> Result<Vocabulary> {
    let mut lines = text.lines();
    let min_freq = lines
        .next()
        .and_then(|l| l.strip_prefix(VOCAB_HEADER))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::data(format!("{}: missing vocabulary header", path.display())))?;
    let tokens = lines.map(str::to_owned).collect();
    Vocabulary::from_tokens(tokens, min_freq).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_atomic(path, vocab_to_string(vocab).as_bytes())
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    vocab_from_str(path, &read_text(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<RougeScore> for ScoreRecord {
    fn from(s: RougeScore) -> Self {
        ScoreRecord { precision: s.precision, recall: s.recall, f1: s.f1 }
    }
}

impl From<ScoreRecord> for RougeScore {
    fn from(s: ScoreRecord) -> Self {
        RougeScore { precision: s.precision, recall: s.recall, f1: s.f1 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExtractRecord {
    indices: Vec<usize>,
    reward: f64,
    rouge1: ScoreRecord,
    rouge2: ScoreRecord,
    rouge_l: ScoreRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct CandidateRecord {
    id: String,
    sentences: usize,
    extracts: Vec<ExtractRecord>,
}

/// One candidate set per line; `sentences` is the document length the
/// extracts index into.
pub fn candidates_to_bytes(sets: &[(CandidateSet, usize)]) -> Result<Vec<u8>> {
    jsonl(sets.iter().map(|(set, n)| CandidateRecord {
        id: set.id.clone(),
        sentences: *n,
        extracts: set
            .extracts
            .iter()
            .map(|e| ExtractRecord {
                indices: e.extract.indices().to_vec(),
                reward: e.reward.value,
                rouge1: e.reward.rouge1.into(),
                rouge2: e.reward.rouge2.into(),
                rouge_l: e.reward.rouge_l.into(),
            })
            .collect(),
    }))
}

pub fn candidates_from_str(path: &Path, text: &str) -> Result<Vec<(CandidateSet, usize)>> {
    let records: Vec<CandidateRecord> = parse_jsonl(path, text, 0)?;
    records
        .into_iter()
        .map(|r| {
            let extracts = r
                .extracts
                .into_iter()
                .map(|e| {
                    let extract = Extract::new(e.indices, r.sentences)
                        .map_err(|err| CliError::data(format!("{}: document {}: {err}", path.display(), r.id)))?;
                    Ok(ScoredExtract {
                        extract,
                        reward: Reward {
                            value: e.reward,
                            rouge1: e.rouge1.into(),
                            rouge2: e.rouge2.into(),
                            rouge_l: e.rouge_l.into(),
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((CandidateSet { id: r.id, extracts }, r.sentences))
        })
        .collect()
}

pub fn read_candidates(path: &Path) -> Result<Vec<(CandidateSet, usize)>> {
    candidates_from_str(path, &read_text(path)?)
}

/// `id<TAB>labels` with labels space-separated `0` or `1`.
pub fn labels_to_string(labels: &[(String, Vec<u8>)]) -> String {
    let mut out = String::new();
    for (id, l) in labels {
        let l: Vec<&str> = l.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
        out.push_str(&format!("{id}\t{}\n", l.join(" ")));
    }
    out
}

pub fn labels_from_str(path: &Path, text: &str) -> Result<Vec<(String, Vec<u8>)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = || CliError::data(format!("{}:{}: expected id<TAB>labels", path.display(), i + 1));
            let (id, labels) = line.split_once('\t').ok_or_else(bad)?;
            let labels = labels
                .split(' ')
                .filter(|f| !f.is_empty())
                .map(|f| match f {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<u8>>>()?;
            Ok((id.to_owned(), labels))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    labels_from_str(path, &read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub indices: Vec<usize>,
    pub sentences: Vec<String>,
}

impl SummaryRecord {
    pub fn new(doc: &Document, extract: &Extract) -> Self {
        SummaryRecord {
            id: doc.id.clone(),
            indices: extract.indices().to_vec(),
            sentences: doc.select(extract.indices()).iter().map(|s| s.raw.clone()).collect(),
        }
    }
}

pub fn summaries_to_bytes(summaries: &[SummaryRecord]) -> Result<Vec<u8>> {
    jsonl(summaries)
}

/// Plain-text rendering: a `# id` line, the sentences, then a blank line.
pub fn summaries_to_text(summaries: &[SummaryRecord]) -> String {
    let mut out = String::new();
    for s in summaries {
        out.push_str("# ");
        out.push_str(&s.id);
        out.push('\n');
        for line in &s.sentences {
            out.push_str(line);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn summaries_from_str(path: &Path, text: &str) -> Result<Vec<SummaryRecord>> {
    parse_jsonl(path, text, 0)
}

pub fn read_summaries(path: &Path) -> Result<Vec<SummaryRecord>> {
    summaries_from_str(path, &read_text(path)?)
}

/// Writes `summaries.jsonl` and `summaries.txt` into `dir`.
pub fn write_summaries(dir: &Path, summaries: &[SummaryRecord]) -> Result<()> {
    write_atomic(&dir.join("summaries.jsonl"), &summaries_to_bytes(summaries)?)?;
    write_atomic(&dir.join("summaries.txt"), summaries_to_text(summaries).as_bytes())
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub mode: String,
    pub loss: f64,
    pub sampled_reward: Option<f64>,
    pub documents: usize,
    pub skipped: usize,
    pub validation_reward: f64,
    pub best: bool,
}

pub fn log_line(record: &LogRecord) -> Result<String> {
    serde_json::to_string(record).map(|s| s + "\n").map_err(CliError::internal)
}

pub fn log_from_str(path: &Path, text: &str) -> Result<Vec<LogRecord>> {
    parse_jsonl(path, text, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScores {
    pub id: String,
    pub rouge1: ScoreRecord,
    pub rouge2: ScoreRecord,
    pub rouge_l: ScoreRecord,
}

/// Corpus-level evaluation: mean precision, recall and F1 over documents,
/// as fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub documents: usize,
    pub rouge1: ScoreRecord,
    pub rouge2: ScoreRecord,
    pub rouge_l: ScoreRecord,
}

impl EvaluationReport {
    /// `R1/R2/RL` F1 as percentages with one decimal.
    pub fn headline(&self) -> String {
        format!(
            "ROUGE-1 {:.1}  ROUGE-2 {:.1}  ROUGE-L {:.1}  ({} documents)",
            100.0 * self.rouge1.f1,
            100.0 * self.rouge2.f1,
            100.0 * self.rouge_l.f1,
            self.documents
        )
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::internal)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn scores_to_bytes(scores: &[DocumentScores]) -> Result<Vec<u8>> {
    jsonl(scores)
}
