//! Slow reference implementations written straight from the definitions,
//! sharing no code with the library's scoring paths.

#![allow(dead_code)]

pub mod grad;
pub mod planted;

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::Rng;
use refresh_core::{mean_rouge_reward, Document, RougeConfig};

/// (precision, recall, f1) with zero for an empty denominator.
pub fn prf(matches: usize, cand_total: usize, ref_total: usize) -> (f64, f64, f64) {
    let p = if cand_total == 0 { 0.0 } else { matches as f64 / cand_total as f64 };
    let r = if ref_total == 0 { 0.0 } else { matches as f64 / ref_total as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// ROUGE-N by pairing each candidate n-gram with an unused equal reference
/// n-gram.
pub fn brute_rouge_n<T: PartialEq>(cand: &[T], reference: &[T], n: usize) -> (f64, f64, f64) {
    let grams = |s: &[T]| -> Vec<(usize, usize)> {
        if s.len() < n {
            Vec::new()
        } else {
            (0..=s.len() - n).map(|i| (i, i + n)).collect()
        }
    };
    let cg = grams(cand);
    let rg = grams(reference);
    let mut used = vec![false; rg.len()];
    let mut matches = 0;
    for &(a, b) in &cg {
        if let Some(slot) = (0..rg.len())
            .find(|&j| !used[j] && cand[a..b] == reference[rg[j].0..rg[j].1])
        {
            used[slot] = true;
            matches += 1;
        }
    }
    prf(matches, cg.len(), rg.len())
}

/// LCS length by memoized recursion on suffixes.
pub fn brute_lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn brute_rouge_l<T: PartialEq>(cand: &[T], reference: &[T]) -> (f64, f64, f64) {
    prf(brute_lcs(cand, reference), cand.len(), reference.len())
}

/// Every common-subsequence alignment as (reference, candidate) pairs.
fn alignments<T: PartialEq>(reference: &[T], cand: &[T]) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    let mut stack: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let (i0, j0) = prefix.last().map_or((0, 0), |&(i, j)| (i + 1, j + 1));
        for i in i0..reference.len() {
            for j in j0..cand.len() {
                if reference[i] == cand[j] {
                    let mut next = prefix.clone();
                    next.push((i, j));
                    out.push(next.clone());
                    stack.push(next);
                }
            }
        }
    }
    out
}

/// Reference positions of the maximum-length alignment that is largest
/// when pairs are compared from the last one backwards.
pub fn brute_canonical_hits<T: PartialEq>(reference: &[T], cand: &[T]) -> Vec<usize> {
    let all = alignments(reference, cand);
    let best_len = all.iter().map(Vec::len).max().unwrap_or(0);
    let best = all
        .into_iter()
        .filter(|a| a.len() == best_len)
        .max_by(|a, b| a.iter().rev().cmp(b.iter().rev()))
        .unwrap_or_default();
    best.into_iter().map(|(i, _)| i).collect()
}

/// Union-LCS hits with per-token clipping against both sides' counts.
pub fn brute_union_lcs<T: PartialEq + Clone>(cands: &[Vec<T>], refs: &[Vec<T>]) -> usize {
    let mut cand_left: Vec<(T, usize)> = Vec::new();
    let mut ref_left: Vec<(T, usize)> = Vec::new();
    let bump = |pool: &mut Vec<(T, usize)>, t: &T| match pool.iter_mut().find(|(x, _)| x == t) {
        Some(e) => e.1 += 1,
        None => pool.push((t.clone(), 1)),
    };
    for t in cands.iter().flatten() {
        bump(&mut cand_left, t);
    }
    for t in refs.iter().flatten() {
        bump(&mut ref_left, t);
    }
    let mut hits = 0;
    for r in refs {
        let mut covered = vec![false; r.len()];
        for c in cands {
            for i in brute_canonical_hits(r, c) {
                covered[i] = true;
            }
        }
        for (i, t) in r.iter().enumerate() {
            if !covered[i] {
                continue;
            }
            let c = cand_left.iter_mut().find(|(x, _)| x == t).map(|e| &mut e.1);
            let m = ref_left.iter_mut().find(|(x, _)| x == t).map(|e| &mut e.1);
            if let (Some(c), Some(m)) = (c, m) {
                if *c > 0 && *m > 0 {
                    *c -= 1;
                    *m -= 1;
                    hits += 1;
                }
            }
        }
    }
    hits
}

pub fn random_tokens(rng: &mut StdRng, max_len: usize, vocab: u32) -> Vec<u32> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..vocab)).collect()
}

/// A document of `n` random sentences over a small lexicon, with one to
/// three highlights that partly reuse document words.
pub fn random_document(rng: &mut StdRng, id: &str, n: usize) -> Document {
    const WORDS: [&str; 14] = [
        "storm", "city", "river", "mayor", "vote", "police", "school", "fire", "road", "bank",
        "court", "team", "virus", "market",
    ];
    let sentence = |rng: &mut StdRng| {
        let len = rng.gen_range(2..=9);
        let words: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
        format!("{} .", words.join(" "))
    };
    let sentences: Vec<String> = (0..n).map(|_| sentence(rng)).collect();
    let highlights: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| sentence(rng)).collect();
    Document::from_texts(id, &sentences, &highlights)
}

/// All extracts of size 1..=m over every sentence, scored with the
/// sentence-level reward function and ranked by descending reward, ties
/// by the lexicographically smaller index list; the first `k` are kept.
pub fn exhaustive_candidates(doc: &Document, m: usize, k: usize, rouge: &RougeConfig) -> Vec<(Vec<usize>, f64)> {
    let n = doc.len();
    let mut all = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize > m {
            continue;
        }
        let indices: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let reward = mean_rouge_reward(&doc.select(&indices), &doc.highlights, rouge)
            .unwrap()
            .value;
        all.push((indices, reward));
    }
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Kendall rank correlation of `scores` against the order in which the
/// items are listed (first item ranked highest). Tied scores count as
/// neither concordant nor discordant.
pub fn kendall_tau_against_listing(scores: &[f64]) -> f64 {
    let n = scores.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if scores[i] > scores[j] {
                concordant += 1;
            } else if scores[i] < scores[j] {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

pub const GOLDEN_STORY: &str = include_str!("../data/chikungunya.story");

/// The best extracts listed for the golden document, best first.
pub const GOLDEN_TOP10: [&[usize]; 10] = [
    &[0, 11, 13],
    &[0, 13],
    &[11, 13],
    &[0, 1, 13],
    &[1, 13],
    &[3, 11, 13],
    &[13],
    &[0, 3, 13],
    &[3, 13],
    &[1, 3, 13],
];
