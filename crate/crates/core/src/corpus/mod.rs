//! Story ingestion, tokenization, vocabularies and padded numeric views.

mod embeddings;
mod story;
mod tokenize;
mod vocab;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use embeddings::parse_embeddings;
pub use story::{parse_story_file, split_sentences, SentenceSplit};
pub use tokenize::{tokenize, tokenize_spans};
pub use vocab::{build_vocabulary, Vocabulary, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

use crate::model::ModelConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorpusError {
    #[error("{name}: story has no article body")]
    EmptyBody { name: String },
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min_freq must be at least 1")]
    InvalidMinFreq,
    #[error("embedding line {line}: expected {expected} values, found {found}")]
    EmbeddingDimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding line {line}: cannot parse {value:?} as a number")]
    EmbeddingValue { line: usize, value: String },
    #[error("invalid token {0:?}")]
    InvalidToken(String),
}

/// A case-preserved token: non-empty, no whitespace.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
    pub raw: String,
}

impl Sentence {
    /// Tokenizes `raw`; returns `None` when it holds no tokens.
    pub fn from_raw(index: usize, raw: &str) -> Option<Self> {
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            return None;
        }
        Some(Sentence {
            index,
            tokens,
            raw: String::from(raw.trim()),
        })
    }
}

/// An article split into sentences, with its gold highlights.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub highlights: Vec<Sentence>,
}

impl Document {
    /// Builds a document from raw sentence and highlight strings, dropping
    /// entries that tokenize to nothing and renumbering the rest.
    pub fn from_texts<S: AsRef<str>, H: AsRef<str>>(
        id: impl Into<String>,
        sentences: &[S],
        highlights: &[H],
    ) -> Self {
        let sentences = sentences
            .iter()
            .filter_map(|s| Sentence::from_raw(0, s.as_ref()))
            .enumerate()
            .map(|(i, mut s)| {
                s.index = i;
                s
            })
            .collect();
        let highlights = highlights
            .iter()
            .filter_map(|s| Sentence::from_raw(0, s.as_ref()))
            .enumerate()
            .map(|(i, mut s)| {
                s.index = i;
                s
            })
            .collect();
        Document {
            id: id.into(),
            sentences,
            highlights,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences at `indices`, in the order given.
    pub fn select(&self, indices: &[usize]) -> Vec<&Sentence> {
        indices.iter().map(|&i| &self.sentences[i]).collect()
    }
}

/// Fixed-size id matrix for one document, `max_doc_len` rows of
/// `max_sent_len` token ids, zero beyond the effective lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedDocView {
    pub max_doc_len: usize,
    pub max_sent_len: usize,
    pub ids: Vec<u32>,
    /// Effective token count of each of the first `n` sentences.
    pub lengths: Vec<usize>,
}

impl PaddedDocView {
    /// Effective sentence count.
    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn row(&self, sentence: usize) -> &[u32] {
        let start = sentence * self.max_sent_len;
        &self.ids[start..start + self.max_sent_len]
    }
}

pub fn pad_document(doc: &Document, vocab: &Vocabulary, config: &ModelConfig) -> PaddedDocView {
    pad_with(doc, vocab, config.max_doc_len, config.max_sent_len)
}

pub(crate) fn pad_with(
    doc: &Document,
    vocab: &Vocabulary,
    max_doc_len: usize,
    max_sent_len: usize,
) -> PaddedDocView {
    let mut ids = alloc::vec![PAD_ID; max_doc_len * max_sent_len];
    let mut lengths = Vec::new();
    for (row, sentence) in doc.sentences.iter().take(max_doc_len).enumerate() {
        let len = sentence.tokens.len().min(max_sent_len);
        for (col, token) in sentence.tokens.iter().take(len).enumerate() {
            ids[row * max_sent_len + col] = vocab.id(token.as_str());
        }
        lengths.push(len);
    }
    PaddedDocView {
        max_doc_len,
        max_sent_len,
        ids,
        lengths,
    }
}
