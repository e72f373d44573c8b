use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{CorpusError, Document};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Dense token ids; 0 is padding and 1 is the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: BTreeMap<String, u32>,
    min_freq: usize,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its id-ordered token list. The first two
    /// entries must be the reserved tokens.
    pub fn from_tokens(tokens: Vec<String>, min_freq: usize) -> Result<Self, CorpusError> {
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(CorpusError::InvalidToken(
                tokens.first().cloned().unwrap_or_default(),
            ));
        }
        let mut ids = BTreeMap::new();
        for (id, token) in tokens.iter().enumerate().skip(2) {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(CorpusError::InvalidToken(token.clone()));
            }
            if ids.insert(token.clone(), id as u32).is_some() {
                return Err(CorpusError::InvalidToken(token.clone()));
            }
        }
        Ok(Vocabulary {
            tokens,
            ids,
            min_freq,
        })
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Tokens in id order, reserved entries first.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }
}

/// Counts article tokens and assigns ids by descending frequency, ties in
/// lexicographic order. Tokens rarer than `min_freq` map to the unknown id.
pub fn build_vocabulary<'a, I>(corpus: I, min_freq: usize) -> Result<Vocabulary, CorpusError>
where
    I: IntoIterator<Item = &'a Document>,
{
    if min_freq == 0 {
        return Err(CorpusError::InvalidMinFreq);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut documents = 0;
    for doc in corpus {
        documents += 1;
        for sentence in &doc.sentences {
            for token in &sentence.tokens {
                *counts.entry(token.as_str()).or_default() += 1;
            }
        }
    }
    if documents == 0 {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(token, count)| {
            count >= min_freq && token != PAD_TOKEN && token != UNK_TOKEN
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut tokens = Vec::with_capacity(ranked.len() + 2);
    tokens.push(String::from(PAD_TOKEN));
    tokens.push(String::from(UNK_TOKEN));
    tokens.extend(ranked.into_iter().map(|(t, _)| String::from(t)));
    Vocabulary::from_tokens(tokens, min_freq)
}
