//! ROUGE-N, ROUGE-L and the mean-F1 reward.
//!
//! Tokens are normalized before scoring the way the reference Perl scorer
//! does it: lowercased, hyphens split off as their own token, other
//! punctuation dropped, and (with stemming on) Porter-stemmed when longer
//! than three characters.

mod lcs;
pub mod porter;
mod scorer;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::borrow::Borrow;

pub use lcs::{lcs_length, lcs_reference_hits};
pub use scorer::DocumentScorer;

use crate::corpus::{Sentence, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RougeError {
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("no reference summary to score against")]
    NoReference,
}

/// How ROUGE-L combines multi-sentence summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LcsMode {
    /// Summary-level union LCS: per reference sentence, union of LCS hits
    /// against every candidate sentence.
    #[default]
    Union,
    /// Plain LCS between the concatenated summaries.
    Concatenated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RougeConfig {
    pub stemming: bool,
    pub lcs: LcsMode,
    /// Lowercase and strip punctuation before matching.
    pub normalize: bool,
}

impl Default for RougeConfig {
    fn default() -> Self {
        RougeConfig {
            stemming: true,
            lcs: LcsMode::Union,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Scores from a match count and the two denominators; an empty
    /// denominator gives zero.
    pub fn from_counts(matches: usize, candidate_total: usize, reference_total: usize) -> Self {
        let precision = ratio(matches, candidate_total);
        let recall = ratio(matches, reference_total);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean of the ROUGE-1, ROUGE-2 and ROUGE-L F1 scores.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reward {
    pub value: f64,
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

impl Reward {
    pub fn new(rouge1: RougeScore, rouge2: RougeScore, rouge_l: RougeScore) -> Self {
        Reward {
            value: (rouge1.f1 + rouge2.f1 + rouge_l.f1) / 3.0,
            rouge1,
            rouge2,
            rouge_l,
        }
    }
}

/// Sliding-window n-gram multiset.
pub fn count_ngrams<T: Ord>(tokens: &[T], n: usize) -> Result<BTreeMap<&[T], usize>, RougeError> {
    if n == 0 {
        return Err(RougeError::InvalidOrder);
    }
    let mut counts = BTreeMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    Ok(counts)
}

/// ROUGE-N with clipped n-gram matches.
pub fn rouge_n<T: Ord>(candidate: &[T], reference: &[T], n: usize) -> Result<RougeScore, RougeError> {
    let cand = count_ngrams(candidate, n)?;
    let refs = count_ngrams(reference, n)?;
    let matches = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    Ok(RougeScore::from_counts(
        matches,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    ))
}

/// Union-LCS hit count with each hit consuming one occurrence of its token
/// from both the candidate and the reference token pools.
pub fn union_lcs_hits<T: Ord>(candidates: &[&[T]], references: &[&[T]]) -> usize {
    let mut peer_pool = unigram_pool(candidates);
    let mut model_pool = unigram_pool(references);
    let mut hits = 0;
    for reference in references {
        let mut covered = alloc::vec![false; reference.len()];
        for candidate in candidates {
            for pos in lcs_reference_hits(reference, candidate) {
                covered[pos] = true;
            }
        }
        hits += consume_hits(reference, &covered, &mut peer_pool, &mut model_pool);
    }
    hits
}

pub(crate) fn unigram_pool<'a, T: Ord>(sentences: &[&'a [T]]) -> BTreeMap<&'a T, usize> {
    let mut pool = BTreeMap::new();
    for sentence in sentences {
        for token in sentence.iter() {
            *pool.entry(token).or_insert(0) += 1;
        }
    }
    pool
}

pub(crate) fn consume_hits<'a, T: Ord>(
    reference: &'a [T],
    covered: &[bool],
    peer_pool: &mut BTreeMap<&'a T, usize>,
    model_pool: &mut BTreeMap<&'a T, usize>,
) -> usize {
    let mut hits = 0;
    for (token, _) in reference.iter().zip(covered).filter(|(_, &c)| c) {
        let peer = peer_pool.get_mut(token);
        let model = model_pool.get_mut(token);
        if let (Some(p), Some(m)) = (peer, model) {
            if *p > 0 && *m > 0 {
                *p -= 1;
                *m -= 1;
                hits += 1;
            }
        }
    }
    hits
}

/// ROUGE-L over token sequences already normalized for scoring.
pub fn rouge_l_tokens<T: Ord>(candidates: &[&[T]], references: &[&[T]], mode: LcsMode) -> RougeScore {
    let cand_total: usize = candidates.iter().map(|s| s.len()).sum();
    let ref_total: usize = references.iter().map(|s| s.len()).sum();
    let hits = match mode {
        LcsMode::Union => union_lcs_hits(candidates, references),
        LcsMode::Concatenated => {
            let cand: Vec<&T> = candidates.iter().flat_map(|s| s.iter()).collect();
            let refs: Vec<&T> = references.iter().flat_map(|s| s.iter()).collect();
            lcs_length(&cand, &refs)
        }
    };
    RougeScore::from_counts(hits, cand_total, ref_total)
}

/// ROUGE-L between two sentence sequences.
pub fn rouge_l<C, R>(candidate: &[C], reference: &[R], config: &RougeConfig) -> RougeScore
where
    C: Borrow<Sentence>,
    R: Borrow<Sentence>,
{
    let cand = scoring_sentences(candidate, config);
    let refs = scoring_sentences(reference, config);
    let cand: Vec<&[String]> = cand.iter().map(Vec::as_slice).collect();
    let refs: Vec<&[String]> = refs.iter().map(Vec::as_slice).collect();
    rouge_l_tokens(&cand, &refs, config.lcs)
}

/// Mean ROUGE-1/2/L F1 of an extract against the highlights. ROUGE-N runs
/// over the concatenated token streams; ROUGE-L per `config.lcs`.
pub fn mean_rouge_reward<C, R>(
    extract: &[C],
    highlights: &[R],
    config: &RougeConfig,
) -> Result<Reward, RougeError>
where
    C: Borrow<Sentence>,
    R: Borrow<Sentence>,
{
    if highlights.is_empty() {
        return Err(RougeError::NoReference);
    }
    let cand = scoring_sentences(extract, config);
    let refs = scoring_sentences(highlights, config);
    let cand_flat: Vec<&String> = cand.iter().flatten().collect();
    let refs_flat: Vec<&String> = refs.iter().flatten().collect();
    let r1 = rouge_n(&cand_flat, &refs_flat, 1)?;
    let r2 = rouge_n(&cand_flat, &refs_flat, 2)?;
    let cand: Vec<&[String]> = cand.iter().map(Vec::as_slice).collect();
    let refs: Vec<&[String]> = refs.iter().map(Vec::as_slice).collect();
    let rl = rouge_l_tokens(&cand, &refs, config.lcs);
    Ok(Reward::new(r1, r2, rl))
}

/// Porter stems of `tokens`, or the tokens unchanged when `enabled` is off.
pub fn apply_stemming(tokens: &[Token], enabled: bool) -> Vec<Token> {
    if !enabled {
        return tokens.to_vec();
    }
    tokens
        .iter()
        .map(|t| {
            let stemmed = porter::stem(t.as_str());
            Token::new(stemmed).unwrap_or_else(|_| t.clone())
        })
        .collect()
}

/// Normalized scoring terms of one token sequence.
pub fn scoring_terms(tokens: &[Token], config: &RougeConfig) -> Vec<String> {
    let mut terms = Vec::with_capacity(tokens.len());
    for token in tokens {
        if config.normalize {
            let mut current = String::new();
            for c in token.as_str().chars() {
                if c == '-' {
                    flush_term(&mut current, &mut terms, config.stemming);
                    terms.push(String::from("-"));
                } else if c.is_alphanumeric() {
                    current.extend(c.to_lowercase());
                } else {
                    flush_term(&mut current, &mut terms, config.stemming);
                }
            }
            flush_term(&mut current, &mut terms, config.stemming);
        } else {
            let mut term = String::from(token.as_str());
            if config.stemming && term.len() > 3 {
                term = porter::stem(&term);
            }
            terms.push(term);
        }
    }
    terms
}

fn flush_term(current: &mut String, terms: &mut Vec<String>, stemming: bool) {
    if current.is_empty() {
        return;
    }
    let term = core::mem::take(current);
    if stemming && term.len() > 3 {
        terms.push(porter::stem(&term));
    } else {
        terms.push(term);
    }
}

fn scoring_sentences<S: Borrow<Sentence>>(sentences: &[S], config: &RougeConfig) -> Vec<Vec<String>> {
    sentences
        .iter()
        .map(|s| scoring_terms(&s.borrow().tokens, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document};
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        libm::fabs(a - b) < 1e-12
    }

    #[test]
    fn ngram_counts() {
        let c = count_ngrams(&["a", "b", "a"], 1).unwrap();
        assert_eq!(c.get(&["a"][..]), Some(&2));
        assert_eq!(c.get(&["b"][..]), Some(&1));
        let c = count_ngrams(&["a", "b", "a"], 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!(count_ngrams(&["a"], 2).unwrap().is_empty());
        assert_eq!(count_ngrams(&["a"], 0), Err(RougeError::InvalidOrder));
    }

    #[test]
    fn rouge_n_examples() {
        let s = rouge_n(&["the", "cat", "sat"], &["the", "cat"], 1).unwrap();
        assert!(close(s.precision, 2.0 / 3.0));
        assert!(close(s.recall, 1.0));
        assert!(close(s.f1, 0.8));
        let s = rouge_n(&["a", "b", "c"], &["a", "b", "d"], 2).unwrap();
        assert!(close(s.precision, 0.5) && close(s.recall, 0.5) && close(s.f1, 0.5));
        let s = rouge_n(&["x", "y"], &["x", "y"], 2).unwrap();
        assert!(close(s.f1, 1.0));
        let s = rouge_n::<&str>(&[], &["x"], 1).unwrap();
        assert_eq!(s, RougeScore::default());
    }

    #[test]
    fn rouge_l_identity_and_disjoint() {
        let doc = Document::from_texts("d", &["The cat sat .", "It purred loudly ."], &["dogs bark"]);
        let cfg = RougeConfig::default();
        let same = rouge_l(&doc.sentences, &doc.sentences, &cfg);
        assert!(close(same.f1, 1.0));
        let other = rouge_l(&doc.sentences, &doc.highlights, &cfg);
        assert_eq!(other.f1, 0.0);
    }

    #[test]
    fn union_lcs_is_clipped_by_candidate_counts() {
        // a single candidate token cannot be credited against five references
        let refs: Vec<&[&str]> = vec![&["a"], &["a"], &["a"]];
        let cands: Vec<&[&str]> = vec![&["a"]];
        assert_eq!(union_lcs_hits(&cands, &refs), 1);
        let s = rouge_l_tokens(&cands, &refs, LcsMode::Union);
        assert!(s.precision <= 1.0);
    }

    #[test]
    fn reward_requires_highlights() {
        let doc = Document::from_texts("d", &["a b"], &[] as &[&str]);
        assert_eq!(
            mean_rouge_reward(&doc.sentences, &doc.highlights, &RougeConfig::default()),
            Err(RougeError::NoReference)
        );
    }

    #[test]
    fn extract_equal_to_highlights_scores_one() {
        let doc = Document::from_texts("d", &["Rain hits town .", "Roads closed ."], &["Rain hits town .", "Roads closed ."]);
        let r = mean_rouge_reward(&doc.sentences, &doc.highlights, &RougeConfig::default()).unwrap();
        assert!(close(r.value, 1.0));
    }

    #[test]
    fn normalization_matches_perl_scorer_conventions() {
        let cfg = RougeConfig::default();
        let terms = scoring_terms(&tokenize("The mosquito-borne virus, U.S. cases."), &cfg);
        assert_eq!(terms, ["the", "mosquito", "-", "born", "viru", "u", "s", "case"]);
        let raw = RougeConfig { normalize: false, stemming: false, ..cfg };
        assert_eq!(scoring_terms(&tokenize("U.S. cases"), &raw), ["U.S.", "cases"]);
    }

    #[test]
    fn stemming_toggle() {
        let tokens = tokenize("painful the");
        let stemmed: Vec<String> = apply_stemming(&tokens, true).into_iter().map(Token::into_string).collect();
        assert_eq!(stemmed, ["pain", "the"]);
        assert_eq!(apply_stemming(&tokens, false), tokens);
    }
}
