mod common;

use common::planted::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refresh_core::nn::Adam;
use refresh_core::oracle::ScoredExtract;
use refresh_core::synthetic::{planted_corpus, PlantedConfig};
use refresh_core::train::{sample_extract, validate, EpochRecord, FitError, Sampling, TrainingDoc, ValidationSet};
use refresh_core::{
    assemble_summary, lead_baseline, mean_rouge_reward, pad_document, CandidateSet, Extract, RefreshModel, Reward,
    TrainConfig, TrainError, TrainMode, Trainer,
};

fn small() -> (PlantedData, Vec<TrainingDoc>, RefreshModel) {
    let data = planted_data(40, 10);
    let model = RefreshModel::new(planted_model_config(&data.vocab), None).unwrap();
    let docs = training_docs(&data, &model);
    (data, docs, model)
}

fn config(mode: TrainMode, epochs: usize) -> TrainConfig {
    TrainConfig { batch_size: 8, ..planted_train_config(mode, epochs) }
}

fn fit_collecting(trainer: &mut Trainer, docs: &[TrainingDoc], validation: &ValidationSet) -> Vec<(EpochRecord, Vec<u8>, bool)> {
    let mut seen = Vec::new();
    let mut sink = |r: &EpochRecord, bytes: &[u8], best: bool| -> Result<(), ()> {
        seen.push((*r, bytes.to_vec(), best));
        Ok(())
    };
    trainer.fit(docs, validation, &mut sink).unwrap();
    seen
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let (data, docs, model) = small();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    for mode in [TrainMode::Reinforce, TrainMode::CrossEntropyCollective] {
        let mut cfg = config(mode, 3);
        cfg.adam = Adam { lr: 0.0, ..Adam::default() };
        let mut trainer = Trainer::new(model.clone(), cfg).unwrap();
        let seen = fit_collecting(&mut trainer, &docs, &validation);
        let first = seen[0].0.validation_reward;
        assert!(seen.iter().all(|(r, _, _)| r.validation_reward == first));
        for ((_, a), (_, b)) in trainer.model().params().iter().zip(model.params().iter()) {
            assert_eq!(a.value, b.value, "{}", a.name);
        }
    }
}

#[test]
fn fixed_seed_training_is_byte_identical() {
    let (_, docs, model) = small();
    let run = || {
        let mut trainer = Trainer::new(model.clone(), config(TrainMode::Reinforce, 2)).unwrap();
        trainer.train_epoch(&docs).unwrap();
        trainer.train_epoch(&docs).unwrap();
        trainer.checkpoint()
    };
    assert_eq!(run(), run());
    let mut other = config(TrainMode::Reinforce, 2);
    other.seed = 1;
    let mut trainer = Trainer::new(model.clone(), other).unwrap();
    trainer.train_epoch(&docs).unwrap();
    assert_ne!(trainer.model().params().iter().next().unwrap().1.value, model.params().iter().next().unwrap().1.value);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let (data, docs, model) = small();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    for mode in [TrainMode::Reinforce, TrainMode::CrossEntropyIndividual] {
        let mut full = Trainer::new(model.clone(), config(mode, 4)).unwrap();
        let seen = fit_collecting(&mut full, &docs, &validation);
        assert_eq!(seen.len(), 4);

        let mut resumed = Trainer::resume(&seen[1].1, config(mode, 4)).unwrap();
        assert_eq!(resumed.state().epoch, 2);
        let rest = fit_collecting(&mut resumed, &docs, &validation);
        assert_eq!(rest.len(), 2);
        for (a, b) in seen[2..].iter().zip(&rest) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
            assert_eq!(a.2, b.2);
        }
        assert_eq!(resumed.state(), full.state());
    }
}

#[test]
fn resume_rejects_a_different_seed() {
    let (_, _, model) = small();
    let trainer = Trainer::new(model, config(TrainMode::Reinforce, 1)).unwrap();
    let mut other = config(TrainMode::Reinforce, 1);
    other.seed = 9;
    assert!(matches!(Trainer::resume(&trainer.checkpoint(), other), Err(TrainError::Config(_))));
}

#[test]
fn single_epoch_fit_reports_its_checkpoint_as_best() {
    let (data, docs, model) = small();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    let mut trainer = Trainer::new(model, config(TrainMode::CrossEntropyCollective, 1)).unwrap();
    let seen = fit_collecting(&mut trainer, &docs, &validation);
    assert_eq!(seen.len(), 1);
    assert!(seen[0].2);
    assert_eq!(trainer.state().best, Some((1, seen[0].0.validation_reward)));
}

#[test]
fn best_epoch_is_the_first_maximum() {
    let (data, docs, model) = small();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    let mut trainer = Trainer::new(model, config(TrainMode::Reinforce, 5)).unwrap();
    let seen = fit_collecting(&mut trainer, &docs, &validation);
    let rewards: Vec<f64> = seen.iter().map(|s| s.0.validation_reward).collect();
    let max = rewards.iter().copied().fold(f64::MIN, f64::max);
    let first = rewards.iter().position(|&r| r == max).unwrap() + 1;
    assert_eq!(trainer.state().best, Some((first, max)));
    let mut running = f64::MIN;
    for (record, _, best) in &seen {
        assert_eq!(*best, record.validation_reward > running);
        running = running.max(record.validation_reward);
    }
}

#[test]
fn sink_errors_stop_training() {
    let (data, docs, model) = small();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    let mut trainer = Trainer::new(model, config(TrainMode::Reinforce, 3)).unwrap();
    let mut sink = |r: &EpochRecord, _: &[u8], _: bool| if r.epoch == 2 { Err("disk full") } else { Ok(()) };
    assert!(matches!(trainer.fit(&docs, &validation, &mut sink), Err(FitError::Sink("disk full"))));
    assert_eq!(trainer.state().epoch, 2);
}

#[test]
fn missing_supervision_names_the_document() {
    let (_, mut docs, model) = small();
    docs[3].candidates = None;
    let mut trainer = Trainer::new(model.clone(), config(TrainMode::Reinforce, 1)).unwrap();
    match trainer.train_epoch(&docs) {
        Err(TrainError::MissingInput { id, .. }) => assert_eq!(id, docs[3].id),
        other => panic!("{other:?}"),
    }
    docs[5].collective = None;
    let mut trainer = Trainer::new(model, config(TrainMode::CrossEntropyCollective, 1)).unwrap();
    assert!(matches!(trainer.train_epoch(&docs), Err(TrainError::MissingInput { .. })));
}

#[test]
fn empty_candidate_sets_are_skipped() {
    let (_, mut docs, model) = small();
    docs[0].candidates.as_mut().unwrap().extracts.clear();
    let mut trainer = Trainer::new(model, config(TrainMode::Reinforce, 1)).unwrap();
    let stats = trainer.train_epoch(&docs).unwrap();
    assert_eq!(stats.skipped, 1);
    assert_eq!(stats.documents, docs.len() - 1);
}

fn five_candidates() -> CandidateSet {
    CandidateSet {
        id: "five".into(),
        extracts: (0..5)
            .map(|i| ScoredExtract {
                extract: Extract::new(vec![i], 5).unwrap(),
                reward: Reward::default(),
            })
            .collect(),
    }
}

#[test]
fn uniform_sampling_frequencies() {
    let set = five_candidates();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = [0usize; 5];
    let draws = 10_000;
    for _ in 0..draws {
        counts[sample_extract(&set, Sampling::Uniform, &mut rng).unwrap().extract.indices()[0]] += 1;
    }
    let sigma = (draws as f64 * 0.2 * 0.8).sqrt();
    for c in counts {
        assert!((c as f64 - 0.2 * draws as f64).abs() <= 3.0 * sigma, "{counts:?}");
    }
    let a = sample_extract(&set, Sampling::Uniform, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = sample_extract(&set, Sampling::Uniform, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn validation_of_empty_set_fails() {
    let (data, _, model) = small();
    let empty = ValidationSet::new(&[], &data.vocab, &model, &data.rouge).unwrap();
    assert!(matches!(validate(&model, &empty), Err(TrainError::EmptyValidation)));
}

#[test]
fn position_ordered_scores_reproduce_lead() {
    // constant weights tie every score, and ties rank by position
    let (data, _, mut model) = small();
    for p in model.params_mut().iter_mut() {
        p.value.data_mut().fill(0.0);
    }
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    let m = model.config().m_select;
    let lead: f64 = data
        .validation
        .iter()
        .map(|d| {
            let view = pad_document(d, &data.vocab, model.config());
            let extract = assemble_summary(&model.extract_scores(&view).unwrap(), m).unwrap();
            let expected = lead_baseline(d, m).unwrap();
            assert_eq!(extract, expected);
            mean_rouge_reward(&d.select(expected.indices()), &d.highlights, &data.rouge).unwrap().value
        })
        .sum::<f64>()
        / data.validation.len() as f64;
    assert_eq!(validate(&model, &validation).unwrap(), lead);
}

#[test]
fn planted_signal_regression() {
    let data = planted_data(500, 100);
    let model = RefreshModel::new(planted_model_config(&data.vocab), None).unwrap();
    let docs = training_docs(&data, &model);
    let oracle = oracle_top1_reward(&data);

    let (reinforce, checkpoints) = run_mode(&data, &docs, planted_train_config(TrainMode::Reinforce, 10));
    let (collective, _) = run_mode(&data, &docs, planted_train_config(TrainMode::CrossEntropyCollective, 10));
    let (individual, _) = run_mode(&data, &docs, planted_train_config(TrainMode::CrossEntropyIndividual, 10));
    let last = |h: &[EpochRecord]| h.last().unwrap().validation_reward;

    assert!(last(&reinforce) >= 0.9 * oracle);
    assert!(last(&reinforce) >= last(&collective));
    assert!(last(&collective) >= last(&individual));
    for pair in reinforce[..5].windows(2) {
        assert!(pair[1].validation_reward >= pair[0].validation_reward);
    }

    // the trained extractor puts the marker sentences on top
    let (trained, _) = RefreshModel::from_checkpoint(checkpoints.last().unwrap()).unwrap();
    let planted = planted_corpus(&PlantedConfig {
        documents: 100,
        seed: 1,
        id_prefix: "valid".into(),
        ..PlantedConfig::default()
    });
    let hits = planted
        .iter()
        .filter(|p| {
            let view = pad_document(&p.doc, &data.vocab, trained.config());
            assemble_summary(&trained.extract_scores(&view).unwrap(), 3).unwrap().indices() == p.markers
        })
        .count();
    assert!(hits >= 95, "{hits}");
}
