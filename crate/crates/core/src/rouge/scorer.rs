use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    consume_hits, lcs_length, lcs_reference_hits, unigram_pool, LcsMode, Reward, RougeConfig,
    RougeError, RougeScore,
};
use crate::corpus::Document;

/// Scores many extracts of one document against its highlights.
///
/// Sentence terms are normalized and interned once, reference n-gram counts
/// are built once, and union-LCS hits are cached for every (highlight,
/// sentence) pair. Results are identical to [`super::mean_rouge_reward`].
#[derive(Debug, Clone)]
pub struct DocumentScorer {
    mode: LcsMode,
    sentences: Vec<Vec<u32>>,
    highlights: Vec<Vec<u32>>,
    ref_unigrams: BTreeMap<u64, usize>,
    ref_bigrams: BTreeMap<u64, usize>,
    ref_unigram_total: usize,
    ref_bigram_total: usize,
    /// `hits[h][s]`: reference positions of highlight `h` covered by the
    /// LCS against sentence `s`.
    hits: Vec<Vec<Vec<usize>>>,
}

impl DocumentScorer {
    pub fn new(doc: &Document, config: &RougeConfig) -> Result<Self, RougeError> {
        if doc.highlights.is_empty() {
            return Err(RougeError::NoReference);
        }
        let mut interner: BTreeMap<String, u32> = BTreeMap::new();
        let mut intern = |tokens: &[crate::corpus::Token]| -> Vec<u32> {
            super::scoring_terms(tokens, config)
                .into_iter()
                .map(|t| {
                    let next = interner.len() as u32;
                    *interner.entry(t).or_insert(next)
                })
                .collect()
        };
        let sentences: Vec<Vec<u32>> = doc.sentences.iter().map(|s| intern(&s.tokens)).collect();
        let highlights: Vec<Vec<u32>> = doc.highlights.iter().map(|s| intern(&s.tokens)).collect();

        let flat: Vec<u32> = highlights.iter().flatten().copied().collect();
        let ref_unigrams = gram_counts(&flat, 1);
        let ref_bigrams = gram_counts(&flat, 2);
        let hits = if config.lcs == LcsMode::Union {
            highlights
                .iter()
                .map(|h| sentences.iter().map(|s| lcs_reference_hits(h, s)).collect())
                .collect()
        } else {
            Vec::new()
        };
        Ok(DocumentScorer {
            mode: config.lcs,
            ref_unigram_total: flat.len(),
            ref_bigram_total: flat.len().saturating_sub(1),
            sentences,
            highlights,
            ref_unigrams,
            ref_bigrams,
            hits,
        })
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// Reward of the extract made of `indices`, concatenated in the order
    /// given.
    pub fn score(&self, indices: &[usize]) -> Reward {
        let cand: Vec<u32> = indices
            .iter()
            .flat_map(|&i| self.sentences[i].iter().copied())
            .collect();
        let r1 = clipped(&cand, 1, &self.ref_unigrams, self.ref_unigram_total);
        let r2 = clipped(&cand, 2, &self.ref_bigrams, self.ref_bigram_total);
        let rl = match self.mode {
            LcsMode::Union => self.union_lcs(indices, cand.len()),
            LcsMode::Concatenated => {
                let refs: Vec<u32> = self.highlights.iter().flatten().copied().collect();
                RougeScore::from_counts(lcs_length(&cand, &refs), cand.len(), refs.len())
            }
        };
        Reward::new(r1, r2, rl)
    }

    fn union_lcs(&self, indices: &[usize], cand_total: usize) -> RougeScore {
        let cands: Vec<&[u32]> = indices.iter().map(|&i| self.sentences[i].as_slice()).collect();
        let refs: Vec<&[u32]> = self.highlights.iter().map(Vec::as_slice).collect();
        let mut peer_pool = unigram_pool(&cands);
        let mut model_pool = unigram_pool(&refs);
        let mut hits = 0;
        for (h, reference) in self.highlights.iter().enumerate() {
            let mut covered = vec![false; reference.len()];
            for &i in indices {
                for &pos in &self.hits[h][i] {
                    covered[pos] = true;
                }
            }
            hits += consume_hits(reference, &covered, &mut peer_pool, &mut model_pool);
        }
        RougeScore::from_counts(hits, cand_total, self.ref_unigram_total)
    }
}

fn gram_key(gram: &[u32]) -> u64 {
    match gram {
        [a] => u64::from(*a),
        [a, b] => (u64::from(*a) << 32) | u64::from(*b),
        _ => unreachable!("unigrams and bigrams only"),
    }
}

fn gram_counts(tokens: &[u32], n: usize) -> BTreeMap<u64, usize> {
    let mut counts = BTreeMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram_key(gram)).or_insert(0) += 1;
    }
    counts
}

fn clipped(cand: &[u32], n: usize, reference: &BTreeMap<u64, usize>, ref_total: usize) -> RougeScore {
    let mut keys: Vec<u64> = cand.windows(n).map(gram_key).collect();
    let cand_total = keys.len();
    keys.sort_unstable();
    let mut matches = 0;
    let mut i = 0;
    while i < keys.len() {
        let mut j = i;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        if let Some(&r) = reference.get(&keys[i]) {
            matches += r.min(j - i);
        }
        i = j;
    }
    RougeScore::from_counts(matches, cand_total, ref_total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rouge::mean_rouge_reward;

    #[test]
    fn agrees_with_the_direct_reward() {
        let doc = Document::from_texts(
            "d",
            &[
                "The storm hit the coast on Monday .",
                "Thousands lost power , officials said .",
                "The storm is expected to weaken .",
                "Schools were closed .",
            ],
            &["Storm hits coast , thousands lose power", "Schools closed as storm weakens"],
        );
        for config in [
            RougeConfig::default(),
            RougeConfig { stemming: false, ..RougeConfig::default() },
            RougeConfig { lcs: LcsMode::Concatenated, ..RougeConfig::default() },
        ] {
            let scorer = DocumentScorer::new(&doc, &config).unwrap();
            for indices in [&[0][..], &[1, 3], &[0, 1, 2], &[0, 1, 2, 3], &[]] {
                let direct = mean_rouge_reward(&doc.select(indices), &doc.highlights, &config).unwrap();
                assert_eq!(scorer.score(indices), direct, "{indices:?}");
            }
        }
    }
}
