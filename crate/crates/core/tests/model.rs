mod common;

use common::grad::{random_view, tiny_model};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use refresh_core::nn::{Metadata, Tape, Tensor};
use refresh_core::{assemble_summary, rank_sentences, ModelConfig, PaddedDocView, RefreshModel, SentenceScores};

fn zero_model() -> RefreshModel {
    let mut model = tiny_model(0);
    for p in model.params_mut().iter_mut() {
        p.value.data_mut().fill(0.0);
    }
    model
}

fn permuted(view: &PaddedDocView, order: &[usize]) -> PaddedDocView {
    let mut out = view.clone();
    for (to, &from) in order.iter().enumerate() {
        let w = view.max_sent_len;
        out.ids[to * w..(to + 1) * w].copy_from_slice(view.row(from));
        out.lengths[to] = view.lengths[from];
    }
    out
}

fn document_vector(model: &RefreshModel, view: &PaddedDocView) -> Vec<f64> {
    let mut tape = Tape::new(model.params());
    let fwd = model.forward(&mut tape, view).unwrap();
    tape.value(fwd.document).data().to_vec()
}

#[test]
fn document_encoding_depends_on_sentence_order() {
    let model = tiny_model(0);
    let mut rng = StdRng::seed_from_u64(0);
    let view = random_view(model.config(), &mut rng, 4);
    let a = document_vector(&model, &view);
    let b = document_vector(&model, &permuted(&view, &[3, 1, 2, 0]));
    assert_ne!(a, b);
}

#[test]
fn zero_weights_give_zero_document_and_even_scores() {
    let model = zero_model();
    let mut rng = StdRng::seed_from_u64(1);
    let view = random_view(model.config(), &mut rng, 5);
    assert!(document_vector(&model, &view).iter().all(|&v| v == 0.0));
    assert!(model.extract_scores(&view).unwrap().0.iter().all(|&p| p == 0.5));
}

#[test]
fn single_sentence_document() {
    let model = tiny_model(2);
    let mut rng = StdRng::seed_from_u64(2);
    let view = random_view(model.config(), &mut rng, 1);
    let scores = model.extract_scores(&view).unwrap();
    assert_eq!(scores.len(), 1);
    assert!(scores.0[0] > 0.0 && scores.0[0] < 1.0);
}

#[test]
fn all_padding_sentence_is_bias_driven() {
    let model = tiny_model(3);
    let encode = |ids: &[u32]| {
        let mut tape = Tape::new(model.params());
        let v = model.encode_sentence(&mut tape, ids).unwrap();
        tape.value(v).data().to_vec()
    };
    let empty = encode(&[]);
    assert_eq!(empty.len(), model.config().sentence_embedding_dim());
    assert_eq!(empty, encode(&[0, 0, 0]));
    let mut biases = Vec::new();
    for &w in &model.config().kernel_widths {
        let id = model.params().id(&format!("conv.w{w}.bias")).unwrap();
        biases.extend_from_slice(model.params().value(id).data());
    }
    assert_eq!(empty, biases);
}

#[test]
fn scores_ignore_padding_contents() {
    let model = tiny_model(4);
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..10 {
        let n = rng.gen_range(1..=4);
        let view = random_view(model.config(), &mut rng, n);
        let mut noisy = view.clone();
        for row in 0..view.max_doc_len {
            let len = view.lengths.get(row).copied().unwrap_or(0);
            for col in len..view.max_sent_len {
                noisy.ids[row * view.max_sent_len + col] = rng.gen_range(0..model.config().vocab_size as u32);
            }
        }
        assert_eq!(model.extract_scores(&view).unwrap(), model.extract_scores(&noisy).unwrap());
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let model = tiny_model(5);
    let mut meta = Metadata::new();
    meta.set("note", "kept");
    let bytes = model.to_checkpoint(&meta);
    let (restored, meta) = RefreshModel::from_checkpoint(&bytes).unwrap();
    assert_eq!(restored.config(), model.config());
    assert_eq!(meta.get("note"), Some("kept"));
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..5 {
        let n = rng.gen_range(1..=5);
        let view = random_view(model.config(), &mut rng, n);
        let a = model.extract_scores(&view).unwrap();
        let b = restored.extract_scores(&view).unwrap();
        assert!(a.0.iter().zip(&b.0).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(restored.to_checkpoint(&meta), bytes);
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let bytes = tiny_model(6).to_checkpoint(&Metadata::new());
    assert!(RefreshModel::from_checkpoint(&bytes[..bytes.len() / 2]).is_err());
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 3] ^= 0x40;
    assert!(RefreshModel::from_checkpoint(&flipped).is_err());
    let mut header = bytes.clone();
    header[0] ^= 0xff;
    assert!(RefreshModel::from_checkpoint(&header).is_err());
}

#[test]
fn pretrained_table_shape_is_checked() {
    let config = ModelConfig::tiny();
    let wrong = Tensor::zeros(vec![config.vocab_size, config.embedding_dim + 1]);
    assert!(RefreshModel::new(config.clone(), Some(wrong)).is_err());
    let right = Tensor::new(
        vec![config.vocab_size, config.embedding_dim],
        (0..config.vocab_size * config.embedding_dim).map(|i| i as f64 * 1e-3).collect(),
    )
    .unwrap();
    let model = RefreshModel::new(config.clone(), Some(right)).unwrap();
    let table = model.params().value(model.embedding_id()).data();
    assert!(table[..2 * config.embedding_dim].iter().all(|&v| v == 0.0));
    assert_eq!(table[2 * config.embedding_dim], (2 * config.embedding_dim) as f64 * 1e-3);
}

#[test]
fn summary_examples() {
    let scores = SentenceScores(vec![0.9, 0.1, 0.8, 0.7]);
    assert_eq!(rank_sentences(&scores), [0, 2, 3, 1]);
    assert_eq!(assemble_summary(&scores, 3).unwrap().indices(), [0, 2, 3]);
    assert_eq!(assemble_summary(&scores, 1).unwrap().indices(), [0]);
    assert_eq!(assemble_summary(&scores, 9).unwrap().indices(), [0, 1, 2, 3]);
    assert_eq!(rank_sentences(&SentenceScores(vec![0.5; 4])), [0, 1, 2, 3]);
    assert_eq!(rank_sentences(&SentenceScores(vec![0.1, 0.2, 0.3])), [2, 1, 0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sentence_vectors_have_the_declared_width(
        widths in prop::collection::btree_set(1usize..5, 1..4),
        channels in 1usize..5,
        len in 0usize..8,
    ) {
        let config = ModelConfig {
            kernel_widths: widths.iter().copied().collect(),
            channels_per_kernel: channels,
            max_sent_len: 8,
            ..ModelConfig::tiny()
        };
        let model = RefreshModel::new(config, None).unwrap();
        let ids: Vec<u32> = (0..len as u32).map(|i| 2 + i % 10).collect();
        let mut tape = Tape::new(model.params());
        let v = model.encode_sentence(&mut tape, &ids).unwrap();
        prop_assert_eq!(tape.value(v).len(), widths.len() * channels);
    }

    #[test]
    fn rankings_are_permutations(scores in prop::collection::vec(0.0f64..1.0, 1..12), m in 1usize..6) {
        let scores = SentenceScores(scores);
        let mut order = rank_sentences(&scores);
        for pair in order.windows(2) {
            prop_assert!(scores.0[pair[0]] >= scores.0[pair[1]]);
        }
        order.sort_unstable();
        prop_assert_eq!(order, (0..scores.len()).collect::<Vec<_>>());
        let summary = assemble_summary(&scores, m).unwrap();
        prop_assert_eq!(summary.indices().len(), m.min(scores.len()));
        prop_assert!(summary.indices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scores_are_probabilities(seed in 0u64..1000, n in 1usize..6) {
        let model = tiny_model(seed % 3);
        let mut rng = StdRng::seed_from_u64(seed);
        let view = random_view(model.config(), &mut rng, n);
        let scores = model.extract_scores(&view).unwrap();
        prop_assert_eq!(scores.len(), n);
        prop_assert!(scores.0.iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
