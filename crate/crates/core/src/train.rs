//! Cross-entropy and REINFORCE training with validation-driven selection.
//!
//! REINFORCE samples one extract `y` from the precomputed candidate set of a
//! document and follows `-r(y) * sum_i grad log p(y_i | s_i, D)`, which is the
//! cross-entropy gradient on the labels of `y` scaled by its reward. Batch
//! gradients are summed over documents before each Adam step.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{pad_document, Document, PaddedDocView, Vocabulary};
use crate::model::{assemble_summary, ModelError, RefreshModel};
use crate::nn::checkpoint::{CheckpointError, Metadata};
use crate::nn::{Adam, GradBuffer, NnError, Tape, Tensor};
use crate::oracle::{CandidateSet, ScoredExtract};
use crate::rouge::{DocumentScorer, RougeConfig, RougeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("document {id}: {source}")]
    Rouge { id: String, source: RougeError },
    #[error("document {id}: {what} missing")]
    MissingInput { id: String, what: &'static str },
    #[error("document {id}: {found} labels for {expected} sentences")]
    LabelLength {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("document {id}: extract index {index} out of range for {n} sentences")]
    ExtractOutOfRange { id: String, index: usize, n: usize },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("invalid training configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    CrossEntropyIndividual,
    CrossEntropyCollective,
    Reinforce,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::CrossEntropyIndividual => "ce_individual",
            TrainMode::CrossEntropyCollective => "ce_collective",
            TrainMode::Reinforce => "reinforce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ce_individual" | "cross_entropy_individual" => Some(TrainMode::CrossEntropyIndividual),
            "ce_collective" | "cross_entropy_collective" => Some(TrainMode::CrossEntropyCollective),
            "reinforce" => Some(TrainMode::Reinforce),
            _ => None,
        }
    }
}

/// How extracts are drawn from a candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Uniform,
    /// Probability proportional to reward; uniform if every reward is zero.
    RewardProportional,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Uniform => "uniform",
            Sampling::RewardProportional => "reward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Sampling::Uniform),
            "reward" | "reward_proportional" => Some(Sampling::RewardProportional),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: Adam,
    pub seed: u64,
    pub sampling: Sampling,
    /// Subtract the mean candidate reward of the document from the sampled
    /// reward.
    pub baseline: bool,
    /// Rescale the summed batch gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
    /// Collective cross-entropy epochs run before a reinforce schedule.
    pub warm_start_epochs: usize,
    pub rouge: RougeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Reinforce,
            batch_size: 20,
            epochs: 20,
            adam: Adam::default(),
            seed: 0,
            sampling: Sampling::Uniform,
            baseline: false,
            clip_norm: None,
            warm_start_epochs: 0,
            rouge: RougeConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(TrainError::Config("batch_size and epochs must be at least 1".into()));
        }
        if self.adam.lr < 0.0 || !self.adam.lr.is_finite() {
            return Err(TrainError::Config(format!("learning rate {}", self.adam.lr)));
        }
        if self.clip_norm.is_some_and(|c| c <= 0.0 || c.is_nan()) {
            return Err(TrainError::Config("clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Mode in effect for the given zero-based epoch.
    pub fn mode_at(&self, epoch: usize) -> TrainMode {
        if self.mode == TrainMode::Reinforce && epoch < self.warm_start_epochs {
            TrainMode::CrossEntropyCollective
        } else {
            self.mode
        }
    }
}

/// One training document with whatever supervision its mode needs. Labels
/// and candidates refer to the first `view.n()` sentences.
#[derive(Debug, Clone)]
pub struct TrainingDoc {
    pub id: String,
    pub view: PaddedDocView,
    pub individual: Option<Vec<u8>>,
    pub collective: Option<Vec<u8>>,
    pub candidates: Option<CandidateSet>,
}

impl TrainingDoc {
    /// Pads `doc` for `model` and trims supervision to the sentences the
    /// model reads. Candidate extracts that reach past the truncation point
    /// are dropped.
    pub fn new(
        doc: &Document,
        vocab: &Vocabulary,
        model: &RefreshModel,
        individual: Option<Vec<u8>>,
        collective: Option<Vec<u8>>,
        candidates: Option<CandidateSet>,
    ) -> Self {
        let view = pad_document(doc, vocab, model.config());
        let n = view.n();
        let trim = |mut labels: Vec<u8>| {
            labels.truncate(n);
            labels
        };
        let candidates = candidates.map(|mut set| {
            set.extracts
                .retain(|e| e.extract.indices().iter().all(|&i| i < n));
            set
        });
        TrainingDoc {
            id: doc.id.clone(),
            view,
            individual: individual.map(trim),
            collective: collective.map(trim),
            candidates,
        }
    }
}

/// Validation documents with their references prepared for scoring.
pub struct ValidationSet {
    docs: Vec<(PaddedDocView, DocumentScorer)>,
}

impl ValidationSet {
    pub fn new<'a, I>(
        docs: I,
        vocab: &Vocabulary,
        model: &RefreshModel,
        rouge: &RougeConfig,
    ) -> Result<Self, TrainError>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let docs = docs
            .into_iter()
            .map(|doc| {
                let scorer = DocumentScorer::new(doc, rouge).map_err(|source| TrainError::Rouge {
                    id: doc.id.clone(),
                    source,
                })?;
                Ok((pad_document(doc, vocab, model.config()), scorer))
            })
            .collect::<Result<Vec<_>, TrainError>>()?;
        Ok(ValidationSet { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Mean reward of the `m_select`-sentence summaries the model assembles.
pub fn validate(model: &RefreshModel, set: &ValidationSet) -> Result<f64, TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptyValidation);
    }
    let mut total = 0.0;
    for (view, scorer) in &set.docs {
        let scores = model.extract_scores(view)?;
        let extract = assemble_summary(&scores, model.config().m_select)?;
        total += scorer.score(extract.indices()).value;
    }
    Ok(total / set.len() as f64)
}

/// Runs the forward pass, accumulates `weight` times the gradient of the
/// label cross-entropy into `grads` and returns the unweighted loss
/// `-sum_i log p(y_i)`.
fn weighted_ce(
    model: &RefreshModel,
    view: &PaddedDocView,
    labels: &[u8],
    weight: f64,
    grads: &mut GradBuffer,
) -> Result<f64, TrainError> {
    let mut tape = Tape::new(model.params());
    let fwd = model.forward(&mut tape, view)?;
    let picks = fwd
        .log_probs
        .iter()
        .zip(labels)
        .map(|(&lp, &y)| tape.pick(lp, usize::from(y != 0)))
        .collect::<Result<Vec<_>, _>>()?;
    let total = tape.sum(&picks)?;
    let loss = -tape.value(total).data()[0];
    if weight != 0.0 {
        tape.backward_with(total, &Tensor::scalar(-weight), grads)?;
    }
    Ok(loss)
}

fn check_labels(id: &str, view: &PaddedDocView, labels: &[u8]) -> Result<(), TrainError> {
    if labels.len() != view.n() {
        return Err(TrainError::LabelLength {
            id: id.into(),
            expected: view.n(),
            found: labels.len(),
        });
    }
    Ok(())
}

/// `-sum_i log p(y_i | s_i, D)`; its gradient is added to `grads`.
pub fn ce_loss_and_grads(
    model: &RefreshModel,
    view: &PaddedDocView,
    labels: &[u8],
    grads: &mut GradBuffer,
) -> Result<f64, TrainError> {
    check_labels("", view, labels)?;
    weighted_ce(model, view, labels, 1.0, grads)
}

/// Draws one extract; the generator advances identically for both
/// sampling schemes.
pub fn sample_extract<'a, R: Rng>(
    candidates: &'a CandidateSet,
    sampling: Sampling,
    rng: &mut R,
) -> Result<&'a ScoredExtract, TrainError> {
    let extracts = &candidates.extracts;
    if extracts.is_empty() {
        return Err(TrainError::EmptyCandidates);
    }
    let u: f64 = rng.gen();
    let total: f64 = extracts.iter().map(|e| e.reward.value.max(0.0)).sum();
    let index = match sampling {
        Sampling::RewardProportional if total > 0.0 => {
            let mut target = u * total;
            extracts
                .iter()
                .position(|e| {
                    target -= e.reward.value.max(0.0);
                    target < 0.0
                })
                .unwrap_or(extracts.len() - 1)
        }
        _ => ((u * extracts.len() as f64) as usize).min(extracts.len() - 1),
    };
    Ok(&extracts[index])
}

/// REINFORCE step for one sampled extract with effective reward `reward`.
/// Returns `-reward * sum_i log p(y_i)`.
pub fn reinforce_loss_and_grads(
    model: &RefreshModel,
    view: &PaddedDocView,
    sampled: &ScoredExtract,
    reward: f64,
    grads: &mut GradBuffer,
) -> Result<f64, TrainError> {
    let n = view.n();
    if let Some(&index) = sampled.extract.indices().iter().find(|&&i| i >= n) {
        return Err(TrainError::ExtractOutOfRange {
            id: String::new(),
            index,
            n,
        });
    }
    let labels = sampled.extract.labels(n);
    Ok(reward * weighted_ce(model, view, &labels, reward, grads)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean per-document loss.
    pub loss: f64,
    /// Mean reward of sampled extracts (reinforce epochs only).
    pub sampled_reward: Option<f64>,
    pub documents: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// One-based epoch number.
    pub epoch: usize,
    pub mode: TrainMode,
    pub stats: EpochStats,
    pub validation_reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainState {
    /// Completed epochs.
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    /// Epoch and validation reward of the best model so far.
    pub best: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub best_epoch: usize,
    pub best_reward: f64,
    pub history: Vec<EpochRecord>,
}

/// Observer of finished epochs, typically persisting checkpoints.
pub trait EpochSink {
    type Error;

    /// `checkpoint` restores the trainer as of the end of `record.epoch`;
    /// `is_best` marks a new validation maximum.
    fn epoch_done(
        &mut self,
        record: &EpochRecord,
        checkpoint: &[u8],
        is_best: bool,
    ) -> Result<(), Self::Error>;
}

impl<F, E> EpochSink for F
where
    F: FnMut(&EpochRecord, &[u8], bool) -> Result<(), E>,
{
    type Error = E;

    fn epoch_done(&mut self, record: &EpochRecord, checkpoint: &[u8], is_best: bool) -> Result<(), E> {
        self(record, checkpoint, is_best)
    }
}

#[derive(Debug)]
pub enum FitError<E> {
    Train(TrainError),
    Sink(E),
}

impl<E> From<TrainError> for FitError<E> {
    fn from(e: TrainError) -> Self {
        FitError::Train(e)
    }
}

pub struct Trainer {
    model: RefreshModel,
    config: TrainConfig,
    rng: ChaCha8Rng,
    state: TrainState,
    grads: GradBuffer,
}

impl Trainer {
    pub fn new(model: RefreshModel, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let grads = GradBuffer::for_store(model.params());
        Ok(Trainer {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            model,
            config,
            state: TrainState::default(),
            grads,
        })
    }

    /// Restores a trainer from a checkpoint written during `fit`. The
    /// seed stored there must match `config.seed`.
    pub fn resume(checkpoint: &[u8], config: TrainConfig) -> Result<Self, TrainError> {
        let (model, meta) = RefreshModel::from_checkpoint(checkpoint)?;
        let seed: u64 = meta.parse("train.seed")?;
        if seed != config.seed {
            return Err(TrainError::Config(format!(
                "checkpoint seed {seed} differs from configured seed {}",
                config.seed
            )));
        }
        let mut trainer = Trainer::new(model, config)?;
        let word_pos: u128 = meta.parse("train.rng_word_pos")?;
        trainer.rng.set_word_pos(word_pos);
        trainer.state = decode_state(&meta)?;
        Ok(trainer)
    }

    pub fn model(&self) -> &RefreshModel {
        &self.model
    }

    pub fn into_model(self) -> RefreshModel {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    /// Checkpoint bytes capturing model, optimizer, generator and history.
    pub fn checkpoint(&self) -> Vec<u8> {
        let mut meta = Metadata::new();
        meta.set("train.seed", self.config.seed);
        meta.set("train.mode", self.config.mode.as_str());
        meta.set("train.rng_word_pos", self.rng.get_word_pos());
        encode_state(&self.state, &mut meta);
        self.model.to_checkpoint(&meta)
    }

    /// One pass over `data` in a seeded shuffle; one Adam update per batch.
    pub fn train_epoch(&mut self, data: &[TrainingDoc]) -> Result<EpochStats, TrainError> {
        let mode = self.config.mode_at(self.state.epoch);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);

        let mut loss_total = 0.0;
        let mut reward_total = 0.0;
        let mut documents = 0;
        let mut skipped = 0;
        for batch in order.chunks(self.config.batch_size) {
            self.grads.clear();
            let mut used = 0;
            for &index in batch {
                let doc = &data[index];
                match self.document_step(doc, mode)? {
                    Some((loss, reward)) => {
                        loss_total += loss;
                        reward_total += reward;
                        used += 1;
                    }
                    None => skipped += 1,
                }
            }
            documents += used;
            if used == 0 {
                continue;
            }
            let params = self.model.params_mut();
            params.accumulate(&self.grads);
            if let Some(max_norm) = self.config.clip_norm {
                let norm = params.grad_norm();
                if norm > max_norm {
                    params.scale_grads(max_norm / norm);
                }
            }
            self.config.adam.update_all(params);
        }
        let mean = |total: f64| if documents == 0 { 0.0 } else { total / documents as f64 };
        Ok(EpochStats {
            loss: mean(loss_total),
            sampled_reward: (mode == TrainMode::Reinforce).then(|| mean(reward_total)),
            documents,
            skipped,
        })
    }

    fn document_step(
        &mut self,
        doc: &TrainingDoc,
        mode: TrainMode,
    ) -> Result<Option<(f64, f64)>, TrainError> {
        let labels = match mode {
            TrainMode::CrossEntropyIndividual => Some((&doc.individual, "individual labels")),
            TrainMode::CrossEntropyCollective => Some((&doc.collective, "collective labels")),
            TrainMode::Reinforce => None,
        };
        if let Some((labels, what)) = labels {
            let labels = labels.as_ref().ok_or(TrainError::MissingInput {
                id: doc.id.clone(),
                what,
            })?;
            check_labels(&doc.id, &doc.view, labels)?;
            let loss = weighted_ce(&self.model, &doc.view, labels, 1.0, &mut self.grads)?;
            return Ok(Some((loss, 0.0)));
        }

        let set = doc.candidates.as_ref().ok_or(TrainError::MissingInput {
            id: doc.id.clone(),
            what: "candidate set",
        })?;
        if set.is_empty() {
            log::warn!("document {}: empty candidate set, skipped", doc.id);
            return Ok(None);
        }
        let sampled = sample_extract(set, self.config.sampling, &mut self.rng)?;
        let mut reward = sampled.reward.value;
        if self.config.baseline {
            let mean = set.extracts.iter().map(|e| e.reward.value).sum::<f64>() / set.len() as f64;
            reward -= mean;
        }
        let loss = reinforce_loss_and_grads(&self.model, &doc.view, sampled, reward, &mut self.grads)
            .map_err(|e| match e {
                TrainError::ExtractOutOfRange { index, n, .. } => TrainError::ExtractOutOfRange {
                    id: doc.id.clone(),
                    index,
                    n,
                },
                other => other,
            })?;
        Ok(Some((loss, sampled.reward.value)))
    }

    /// Trains until `config.epochs` epochs are complete, validating and
    /// reporting a checkpoint after each. The best epoch is the first one
    /// reaching the maximum validation reward.
    pub fn fit<S: EpochSink>(
        &mut self,
        train: &[TrainingDoc],
        validation: &ValidationSet,
        sink: &mut S,
    ) -> Result<FitOutcome, FitError<S::Error>> {
        if validation.is_empty() {
            return Err(TrainError::EmptyValidation.into());
        }
        while self.state.epoch < self.config.epochs {
            let mode = self.config.mode_at(self.state.epoch);
            let stats = self.train_epoch(train)?;
            let reward = validate(&self.model, validation)?;
            self.state.epoch += 1;
            let record = EpochRecord {
                epoch: self.state.epoch,
                mode,
                stats,
                validation_reward: reward,
            };
            self.state.history.push(record);
            let is_best = self.state.best.is_none_or(|(_, best)| reward > best);
            if is_best {
                self.state.best = Some((record.epoch, reward));
            }
            sink.epoch_done(&record, &self.checkpoint(), is_best)
                .map_err(FitError::Sink)?;
        }
        let (best_epoch, best_reward) = self.state.best.ok_or(TrainError::Config(
            "no epochs were run".into(),
        ))?;
        Ok(FitOutcome {
            best_epoch,
            best_reward,
            history: self.state.history.clone(),
        })
    }
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

fn encode_state(state: &TrainState, meta: &mut Metadata) {
    meta.set("train.epoch", state.epoch);
    if let Some((epoch, reward)) = state.best {
        meta.set("train.best_epoch", epoch);
        meta.set_f64("train.best_reward", reward);
    }
    let history: Vec<String> = state
        .history
        .iter()
        .map(|r| {
            format!(
                "{}:{}:{}:{}:{}:{}:{}",
                r.epoch,
                r.mode.as_str(),
                hex(r.stats.loss),
                r.stats.sampled_reward.map_or("-".to_string(), hex),
                r.stats.documents,
                r.stats.skipped,
                hex(r.validation_reward)
            )
        })
        .collect();
    if !history.is_empty() {
        meta.set("train.history", history.join(","));
    }
}

fn decode_state(meta: &Metadata) -> Result<TrainState, TrainError> {
    let epoch: usize = meta.parse("train.epoch")?;
    let best = match meta.get("train.best_epoch") {
        Some(_) => Some((meta.parse("train.best_epoch")?, meta.get_f64("train.best_reward")?)),
        None => None,
    };
    let bad = |value: &str| {
        TrainError::Checkpoint(CheckpointError::BadValue {
            key: "train.history".into(),
            value: value.into(),
        })
    };
    let mut history = Vec::new();
    if let Some(text) = meta.get("train.history") {
        for entry in text.split(',') {
            let f: Vec<&str> = entry.split(':').collect();
            let [ep, mode, loss, sampled, docs, skipped, val] = f.as_slice() else {
                return Err(bad(entry));
            };
            let record = (|| {
                Some(EpochRecord {
                    epoch: ep.parse().ok()?,
                    mode: TrainMode::parse(mode)?,
                    stats: EpochStats {
                        loss: unhex(loss)?,
                        sampled_reward: if *sampled == "-" { None } else { Some(unhex(sampled)?) },
                        documents: docs.parse().ok()?,
                        skipped: skipped.parse().ok()?,
                    },
                    validation_reward: unhex(val)?,
                })
            })();
            history.push(record.ok_or_else(|| bad(entry))?);
        }
    }
    Ok(TrainState {
        epoch,
        history,
        best,
    })
}
