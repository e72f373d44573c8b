//! Sentence labels extrapolated from abstractive highlights, and the ranked
//! set of high-scoring candidate extracts sampled during REINFORCE training.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::Document;
use crate::rouge::{DocumentScorer, Reward, RougeConfig, RougeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("document {id}: {source}")]
    Rouge { id: String, source: RougeError },
    #[error("document {0} has no sentences")]
    EmptyDocument(String),
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("extract indices must be strictly increasing and below {n}")]
    InvalidExtract { n: usize },
}

/// A set of sentence indices, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Extract(Vec<usize>);

impl Extract {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self, OracleError> {
        let increasing = indices.windows(2).all(|w| w[0] < w[1]);
        if indices.is_empty() || !increasing || indices.last().is_some_and(|&i| i >= n) {
            return Err(OracleError::InvalidExtract { n });
        }
        Ok(Extract(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// 0/1 label per sentence for a document of `n` sentences.
    pub fn labels(&self, n: usize) -> Vec<u8> {
        let mut labels = alloc::vec![0; n];
        for &i in &self.0 {
            if i < n {
                labels[i] = 1;
            }
        }
        labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredExtract {
    pub extract: Extract,
    pub reward: Reward,
}

/// Top-k extracts of one document by descending reward.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub id: String,
    pub extracts: Vec<ScoredExtract>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.extracts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.extracts.len()
    }

    pub fn best(&self) -> Option<&ScoredExtract> {
        self.extracts.first()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Pool size: individually best sentences the enumeration draws from.
    pub p: usize,
    /// Maximum extract length.
    pub m: usize,
    /// Number of extracts kept.
    pub k: usize,
    /// Individual-label threshold on the mean ROUGE reward.
    pub tau: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            p: 10,
            m: 3,
            k: 5,
            tau: 0.15,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.m < 1 || self.m > self.p {
            return Err(OracleError::InvalidConfig("need 1 <= m <= p"));
        }
        if self.k < 1 {
            return Err(OracleError::InvalidConfig("need k >= 1"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(OracleError::InvalidConfig("need 0 <= tau <= 1"));
        }
        Ok(())
    }
}

fn scorer(doc: &Document, rouge: &RougeConfig) -> Result<DocumentScorer, OracleError> {
    if doc.sentences.is_empty() {
        return Err(OracleError::EmptyDocument(doc.id.clone()));
    }
    DocumentScorer::new(doc, rouge).map_err(|source| OracleError::Rouge {
        id: doc.id.clone(),
        source,
    })
}

/// Each sentence scored alone against the highlights.
pub fn sentence_individual_scores(
    doc: &Document,
    rouge: &RougeConfig,
) -> Result<Vec<Reward>, OracleError> {
    let scorer = scorer(doc, rouge)?;
    Ok((0..doc.len()).map(|i| scorer.score(&[i])).collect())
}

/// `1` for every sentence whose individual reward reaches `config.tau`.
pub fn individual_labels(
    doc: &Document,
    config: &OracleConfig,
    rouge: &RougeConfig,
) -> Result<Vec<u8>, OracleError> {
    Ok(sentence_individual_scores(doc, rouge)?
        .iter()
        .map(|r| u8::from(r.value >= config.tau))
        .collect())
}

/// Descending reward, then lexicographically smaller indices first.
pub fn rank_order(a: &ScoredExtract, b: &ScoredExtract) -> Ordering {
    b.reward
        .value
        .total_cmp(&a.reward.value)
        .then_with(|| a.extract.cmp(&b.extract))
}

/// Top-`k` extracts drawn from combinations of the `p` individually best
/// sentences, of size 1 to `m`.
pub fn candidate_set(
    doc: &Document,
    config: &OracleConfig,
    rouge: &RougeConfig,
) -> Result<CandidateSet, OracleError> {
    config.validate()?;
    let mut all = enumerate_pool(doc, config, rouge)?;
    all.truncate(config.k);
    Ok(CandidateSet {
        id: doc.id.clone(),
        extracts: all,
    })
}

/// Every pool extract, ranked; `candidate_set` keeps the first `k`.
pub fn enumerate_pool(
    doc: &Document,
    config: &OracleConfig,
    rouge: &RougeConfig,
) -> Result<Vec<ScoredExtract>, OracleError> {
    let scorer = scorer(doc, rouge)?;
    let n = doc.len();
    let individual: Vec<f64> = (0..n).map(|i| scorer.score(&[i]).value).collect();
    let mut by_score: Vec<usize> = (0..n).collect();
    by_score.sort_by(|&a, &b| individual[b].total_cmp(&individual[a]).then(a.cmp(&b)));
    let mut pool: Vec<usize> = by_score.into_iter().take(config.p).collect();
    pool.sort_unstable();

    let mut scored = Vec::new();
    let mut chosen = Vec::with_capacity(config.m);
    for size in 1..=config.m.min(pool.len()) {
        combinations(&pool, size, 0, &mut chosen, &mut |indices| {
            scored.push(ScoredExtract {
                reward: scorer.score(indices),
                extract: Extract(indices.to_vec()),
            });
        });
    }
    scored.sort_by(rank_order);
    Ok(scored)
}

fn combinations(
    pool: &[usize],
    size: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == size {
        visit(chosen);
        return;
    }
    let needed = size - chosen.len();
    for i in from..=pool.len() - needed {
        chosen.push(pool[i]);
        combinations(pool, size, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Labels of the best extract in the candidate enumeration.
pub fn collective_labels(
    doc: &Document,
    config: &OracleConfig,
    rouge: &RougeConfig,
) -> Result<Vec<u8>, OracleError> {
    let set = candidate_set(doc, &OracleConfig { k: 1, ..*config }, rouge)?;
    let best = set.best().expect("a non-empty document yields at least one extract");
    Ok(best.extract.labels(doc.len()))
}

/// One candidate set per document, in corpus order.
pub fn precompute_candidates<'a, I>(
    corpus: I,
    config: &OracleConfig,
    rouge: &RougeConfig,
) -> Result<Vec<CandidateSet>, OracleError>
where
    I: IntoIterator<Item = &'a Document>,
{
    corpus
        .into_iter()
        .map(|doc| candidate_set(doc, config, rouge))
        .collect()
}
