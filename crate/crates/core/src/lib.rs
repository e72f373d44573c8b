//! Extractive summarization as sentence ranking.
//!
//! A convolutional sentence encoder feeds a reversed-order LSTM document
//! encoder and an LSTM sentence extractor that scores every sentence of a
//! document. The model can be trained with cross-entropy on oracle labels or
//! with a REINFORCE objective whose samples come from a precomputed set of
//! high-ROUGE candidate extracts.
//!
//! This crate is `no_std` (it needs `alloc`) and carries no IO. File formats,
//! directory handling and the command-line tool live in the `refresh` crate.

#![no_std]

extern crate alloc;

pub mod baseline;
pub mod corpus;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod rouge;
pub mod settings;
pub mod synthetic;
pub mod train;

pub use baseline::lead_baseline;
pub use corpus::{
    build_vocabulary, pad_document, parse_embeddings, parse_story_file, tokenize, CorpusError,
    Document, PaddedDocView, Sentence, SentenceSplit, Token, Vocabulary,
};
pub use model::{assemble_summary, rank_sentences, ModelConfig, RefreshModel, SentenceScores};
pub use oracle::{
    candidate_set, collective_labels, individual_labels, precompute_candidates,
    sentence_individual_scores, CandidateSet, Extract, OracleConfig, OracleError, ScoredExtract,
};
pub use rouge::{
    count_ngrams, lcs_length, mean_rouge_reward, rouge_l, rouge_n, LcsMode, Reward, RougeConfig,
    RougeError, RougeScore,
};
pub use settings::{Settings, SettingsError};
pub use train::{TrainConfig, TrainError, TrainMode, Trainer};
