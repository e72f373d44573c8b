//! Planted-signal corpora.
//!
//! Every document holds a few marker sentences carrying a contiguous run of
//! words drawn from a small marker lexicon; the highlights repeat exactly
//! those runs. All other sentences are filler from a disjoint lexicon, and
//! marker positions are random, so a model scores well only by recognizing
//! marker content.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub documents: usize,
    pub sentences: usize,
    pub markers: usize,
    pub filler_vocab: usize,
    pub marker_vocab: usize,
    /// Inclusive range of sentence lengths in tokens, before the final ".".
    pub sentence_len: (usize, usize),
    /// Marker words per marker sentence.
    pub marker_run: usize,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            documents: 500,
            sentences: 8,
            markers: 3,
            filler_vocab: 400,
            marker_vocab: 60,
            sentence_len: (8, 14),
            marker_run: 4,
            seed: 0,
            id_prefix: "planted".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedDoc {
    pub doc: Document,
    /// Indices of the marker sentences, ascending.
    pub markers: Vec<usize>,
}

fn filler(i: usize) -> String {
    format!("fill{i}")
}

fn marker(i: usize) -> String {
    format!("mark{i}")
}

pub fn planted_corpus(config: &PlantedConfig) -> Vec<PlantedDoc> {
    assert!(config.markers <= config.sentences, "more markers than sentences");
    assert!(config.sentence_len.0 >= config.marker_run && config.sentence_len.0 <= config.sentence_len.1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.documents)
        .map(|d| {
            let mut markers = sample(&mut rng, config.sentences, config.markers).into_vec();
            markers.sort_unstable();
            let mut sentences = Vec::with_capacity(config.sentences);
            let mut highlights = Vec::with_capacity(config.markers);
            for s in 0..config.sentences {
                let len = rng.gen_range(config.sentence_len.0..=config.sentence_len.1);
                let mut words: Vec<String> = (0..len)
                    .map(|_| filler(rng.gen_range(0..config.filler_vocab)))
                    .collect();
                if markers.contains(&s) {
                    let start = rng.gen_range(0..=len - config.marker_run);
                    let run: Vec<String> = (0..config.marker_run)
                        .map(|_| marker(rng.gen_range(0..config.marker_vocab)))
                        .collect();
                    words.splice(start..start + config.marker_run, run.iter().cloned());
                    highlights.push(format!("{} .", run.join(" ")));
                }
                sentences.push(format!("{} .", words.join(" ")));
            }
            PlantedDoc {
                doc: Document::from_texts(&format!("{}-{d}", config.id_prefix), &sentences, &highlights),
                markers,
            }
        })
        .collect()
}
