//! Planted-signal training runs shared by the training tests and the
//! acceptance suite.

use refresh_core::nn::Adam;
use refresh_core::synthetic::{planted_corpus, PlantedConfig};
use refresh_core::train::{EpochRecord, TrainingDoc, ValidationSet};
use refresh_core::{
    build_vocabulary, candidate_set, collective_labels, individual_labels, Document, ModelConfig,
    OracleConfig, RefreshModel, RougeConfig, TrainConfig, TrainMode, Trainer, Vocabulary,
};

pub struct PlantedData {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub vocab: Vocabulary,
    pub oracle: OracleConfig,
    pub rouge: RougeConfig,
}

pub fn planted_data(train: usize, validation: usize) -> PlantedData {
    let make = |documents, seed, prefix: &str| {
        planted_corpus(&PlantedConfig {
            documents,
            seed,
            id_prefix: prefix.into(),
            ..PlantedConfig::default()
        })
        .into_iter()
        .map(|p| p.doc)
        .collect::<Vec<_>>()
    };
    let train = make(train, 0, "train");
    let validation = make(validation, 1, "valid");
    let vocab = build_vocabulary(&train, 1).unwrap();
    PlantedData {
        train,
        validation,
        vocab,
        oracle: OracleConfig { p: 10, m: 3, k: 5, tau: 0.15 },
        rouge: RougeConfig::default(),
    }
}

pub fn planted_model_config(vocab: &Vocabulary) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab.len(),
        embedding_dim: 16,
        kernel_widths: vec![1, 2, 3],
        channels_per_kernel: 8,
        lstm_size: 32,
        max_sent_len: 20,
        max_doc_len: 8,
        m_select: 3,
        seed: 0,
        ..ModelConfig::default()
    }
}

pub fn planted_train_config(mode: TrainMode, epochs: usize) -> TrainConfig {
    TrainConfig {
        mode,
        epochs,
        batch_size: 20,
        adam: Adam { lr: 0.005, ..Adam::default() },
        seed: 0,
        ..TrainConfig::default()
    }
}

/// Mean reward of the best candidate extract over the validation split.
pub fn oracle_top1_reward(data: &PlantedData) -> f64 {
    let total: f64 = data
        .validation
        .iter()
        .map(|d| candidate_set(d, &data.oracle, &data.rouge).unwrap().best().unwrap().reward.value)
        .sum();
    total / data.validation.len() as f64
}

pub fn training_docs(data: &PlantedData, model: &RefreshModel) -> Vec<TrainingDoc> {
    data.train
        .iter()
        .map(|d| {
            TrainingDoc::new(
                d,
                &data.vocab,
                model,
                Some(individual_labels(d, &data.oracle, &data.rouge).unwrap()),
                Some(collective_labels(d, &data.oracle, &data.rouge).unwrap()),
                Some(candidate_set(d, &data.oracle, &data.rouge).unwrap()),
            )
        })
        .collect()
}

/// Trains one mode from the same initialization and returns the epoch log
/// and every epoch's checkpoint.
pub fn run_mode(data: &PlantedData, docs: &[TrainingDoc], config: TrainConfig) -> (Vec<EpochRecord>, Vec<Vec<u8>>) {
    let model = RefreshModel::new(planted_model_config(&data.vocab), None).unwrap();
    let validation = ValidationSet::new(&data.validation, &data.vocab, &model, &data.rouge).unwrap();
    let mut trainer = Trainer::new(model, config).unwrap();
    let mut checkpoints = Vec::new();
    let mut sink = |_: &EpochRecord, bytes: &[u8], _: bool| -> Result<(), ()> {
        checkpoints.push(bytes.to_vec());
        Ok(())
    };
    let outcome = trainer.fit(docs, &validation, &mut sink).unwrap();
    (outcome.history, checkpoints)
}
