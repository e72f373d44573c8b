//! The sentence-ranking network.
//!
//! Sentences are encoded by convolutions of several widths followed by
//! max-pooling over time. A document LSTM reads the sentence vectors last to
//! first; its final hidden state seeds both the hidden and the cell state of
//! an extractor LSTM that then reads the sentences in order. At step `i` the
//! extractor sees `[s_i; p_{i-1} * s_{i-1}]` and a softmax over {0, 1}
//! gives `p_i`, the probability that sentence `i` belongs in the summary.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PaddedDocView, PAD_ID, UNK_ID};
use crate::nn::checkpoint::{self, CheckpointError, Metadata};
use crate::nn::{
    conv1d_forward, lstm_step, maxpool_time, ConvFilterBank, Dense, LstmState, LstmWeights,
    NnError, ParameterStore, Tape, Tensor, Var,
};
use crate::oracle::Extract;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("document has no sentences")]
    EmptyDocument,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    /// Convolution widths, in the order their pooled features are
    /// concatenated.
    pub kernel_widths: Vec<usize>,
    pub channels_per_kernel: usize,
    pub lstm_size: usize,
    pub max_sent_len: usize,
    pub max_doc_len: usize,
    /// Sentences selected per summary.
    pub m_select: usize,
    pub seed: u64,
    /// Uniform initialization range `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub forget_bias: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 2,
            embedding_dim: 200,
            kernel_widths: (1..=7).collect(),
            channels_per_kernel: 50,
            lstm_size: 600,
            max_sent_len: 100,
            max_doc_len: 120,
            m_select: 3,
            seed: 0,
            init_scale: 0.1,
            forget_bias: 1.0,
        }
    }
}

impl ModelConfig {
    /// Small configuration for gradient checks and tests.
    pub fn tiny() -> Self {
        ModelConfig {
            vocab_size: 20,
            embedding_dim: 8,
            kernel_widths: vec![1, 2, 3],
            channels_per_kernel: 4,
            lstm_size: 16,
            max_sent_len: 10,
            max_doc_len: 5,
            ..ModelConfig::default()
        }
    }

    pub fn sentence_embedding_dim(&self) -> usize {
        self.kernel_widths.len() * self.channels_per_kernel
    }

    pub fn max_width(&self) -> usize {
        self.kernel_widths.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Config(msg));
        if self.kernel_widths.is_empty() || self.kernel_widths.contains(&0) {
            return fail("kernel widths must be non-empty and positive".into());
        }
        if self.channels_per_kernel == 0 || self.embedding_dim == 0 || self.lstm_size == 0 {
            return fail("channels, embedding and LSTM sizes must be positive".into());
        }
        if self.max_sent_len < self.max_width() {
            return fail(format!(
                "max_sent_len {} below the widest kernel {}",
                self.max_sent_len,
                self.max_width()
            ));
        }
        if self.max_doc_len == 0 || self.m_select == 0 {
            return fail("max_doc_len and m_select must be positive".into());
        }
        if self.vocab_size < 2 {
            return fail("vocabulary must include the reserved tokens".into());
        }
        Ok(())
    }

    pub fn to_metadata(&self, meta: &mut Metadata) {
        meta.set("model.vocab_size", self.vocab_size);
        meta.set("model.embedding_dim", self.embedding_dim);
        let widths: Vec<String> = self.kernel_widths.iter().map(|w| w.to_string()).collect();
        meta.set("model.kernel_widths", widths.join(","));
        meta.set("model.channels_per_kernel", self.channels_per_kernel);
        meta.set("model.lstm_size", self.lstm_size);
        meta.set("model.max_sent_len", self.max_sent_len);
        meta.set("model.max_doc_len", self.max_doc_len);
        meta.set("model.m_select", self.m_select);
        meta.set("model.seed", self.seed);
        meta.set_f64("model.init_scale", self.init_scale);
        meta.set_f64("model.forget_bias", self.forget_bias);
    }

    pub fn from_metadata(meta: &Metadata) -> Result<Self, CheckpointError> {
        let widths = meta.require("model.kernel_widths")?;
        let kernel_widths = widths
            .split(',')
            .map(|w| w.parse())
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|_| CheckpointError::BadValue {
                key: "model.kernel_widths".into(),
                value: widths.into(),
            })?;
        Ok(ModelConfig {
            vocab_size: meta.parse("model.vocab_size")?,
            embedding_dim: meta.parse("model.embedding_dim")?,
            kernel_widths,
            channels_per_kernel: meta.parse("model.channels_per_kernel")?,
            lstm_size: meta.parse("model.lstm_size")?,
            max_sent_len: meta.parse("model.max_sent_len")?,
            max_doc_len: meta.parse("model.max_doc_len")?,
            m_select: meta.parse("model.m_select")?,
            seed: meta.parse("model.seed")?,
            init_scale: meta.get_f64("model.init_scale")?,
            forget_bias: meta.get_f64("model.forget_bias")?,
        })
    }
}

/// Probability `p(y_i = 1)` for each effective sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScores(pub Vec<f64>);

impl SentenceScores {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Handles {
    embedding: crate::nn::ParamId,
    convs: Vec<ConvFilterBank>,
    doc_lstm: LstmWeights,
    ext_lstm: LstmWeights,
    output: Dense,
}

const EMBEDDING: &str = "embedding";
const DOC_LSTM: &str = "doc_lstm";
const EXT_LSTM: &str = "extractor_lstm";
const OUTPUT: &str = "output";

fn conv_prefix(width: usize) -> String {
    format!("conv.w{width}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefreshModel {
    config: ModelConfig,
    params: ParameterStore,
    handles: Handles,
}

/// Everything the forward pass recorded for one document.
#[derive(Debug, Clone)]
pub struct DocForward {
    pub sentences: Vec<Var>,
    pub document: Var,
    /// Two-way softmax outputs, one per sentence.
    pub probs: Vec<Var>,
    pub log_probs: Vec<Var>,
}

impl RefreshModel {
    /// Fresh parameters from `config.seed`. `embeddings`, when given, must be
    /// `vocab_size x embedding_dim`; otherwise rows are drawn uniformly. The
    /// padding and unknown rows start at zero either way.
    pub fn new(config: ModelConfig, embeddings: Option<Tensor>) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParameterStore::new();
        let scale = config.init_scale;
        let dim = config.embedding_dim;

        let embedding = match embeddings {
            Some(table) => {
                if table.shape() != [config.vocab_size, dim] {
                    return Err(ModelError::Config(format!(
                        "embedding table {:?}, expected [{}, {dim}]",
                        table.shape(),
                        config.vocab_size
                    )));
                }
                store.add(EMBEDDING, table)?
            }
            None => store.add_uniform(EMBEDDING, vec![config.vocab_size, dim], scale, &mut rng)?,
        };
        for reserved in [PAD_ID, UNK_ID] {
            let row = reserved as usize;
            store.get_mut(embedding).value.data_mut()[row * dim..(row + 1) * dim].fill(0.0);
        }

        let convs = config
            .kernel_widths
            .iter()
            .map(|&w| {
                ConvFilterBank::init(
                    &mut store,
                    &conv_prefix(w),
                    w,
                    config.channels_per_kernel,
                    dim,
                    scale,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sent_dim = config.sentence_embedding_dim();
        let hidden = config.lstm_size;
        let doc_lstm =
            LstmWeights::init(&mut store, DOC_LSTM, sent_dim, hidden, scale, config.forget_bias, &mut rng)?;
        let ext_lstm = LstmWeights::init(
            &mut store,
            EXT_LSTM,
            2 * sent_dim,
            hidden,
            scale,
            config.forget_bias,
            &mut rng,
        )?;
        let output = Dense::init(&mut store, OUTPUT, hidden, 2, scale, &mut rng)?;
        Ok(RefreshModel {
            config,
            params: store,
            handles: Handles {
                embedding,
                convs,
                doc_lstm,
                ext_lstm,
                output,
            },
        })
    }

    /// Rebinds a parameter store (for instance one read from a checkpoint)
    /// to the architecture described by `config`.
    pub fn from_parts(config: ModelConfig, params: ParameterStore) -> Result<Self, ModelError> {
        config.validate()?;
        let template = RefreshModel::new(
            ModelConfig {
                vocab_size: config.vocab_size,
                ..config.clone()
            },
            None,
        )?;
        if template.params.len() != params.len() {
            return Err(ModelError::Config(format!(
                "expected {} parameters, found {}",
                template.params.len(),
                params.len()
            )));
        }
        for ((_, want), (_, have)) in template.params.iter().zip(params.iter()) {
            if want.name != have.name || want.value.shape() != have.value.shape() {
                return Err(ModelError::Config(format!(
                    "parameter {} {:?} does not match {} {:?}",
                    have.name,
                    have.value.shape(),
                    want.name,
                    want.value.shape()
                )));
            }
        }
        Ok(RefreshModel {
            config,
            params,
            handles: template.handles,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    pub fn embedding_id(&self) -> crate::nn::ParamId {
        self.handles.embedding
    }

    /// Concatenated max-pooled convolution features of one sentence given
    /// its effective token ids. The sequence is zero-padded far enough that
    /// every kernel also sees an all-padding window when the padded length
    /// allows one, which reproduces convolving the full padded row.
    pub fn encode_sentence(&self, tape: &mut Tape<'_>, ids: &[u32]) -> Result<Var, ModelError> {
        let max_width = self.config.max_width();
        let len = ids.len().min(self.config.max_sent_len);
        let span = (len + max_width).min(self.config.max_sent_len).max(max_width);
        let mut padded = vec![PAD_ID; span];
        padded[..len].copy_from_slice(&ids[..len]);
        let embedded = tape.embed(self.handles.embedding, &padded)?;
        let mut pooled = Vec::with_capacity(self.handles.convs.len());
        for bank in &self.handles.convs {
            let map = conv1d_forward(tape, embedded, bank)?;
            pooled.push(maxpool_time(tape, map)?);
        }
        Ok(tape.concat(&pooled))
    }

    /// Final hidden state of the document LSTM run over the sentence
    /// vectors in reverse order.
    pub fn encode_document(&self, tape: &mut Tape<'_>, sentences: &[Var]) -> Result<Var, ModelError> {
        if sentences.is_empty() {
            return Err(ModelError::EmptyDocument);
        }
        let mut state = LstmState::zeros(tape, self.config.lstm_size);
        for &s in sentences.iter().rev() {
            state = lstm_step(tape, s, state, &self.handles.doc_lstm)?;
        }
        Ok(state.h)
    }

    /// Records the full forward pass for one document.
    pub fn forward(&self, tape: &mut Tape<'_>, view: &PaddedDocView) -> Result<DocForward, ModelError> {
        let n = view.n().min(self.config.max_doc_len);
        if n == 0 {
            return Err(ModelError::EmptyDocument);
        }
        let sentences = (0..n)
            .map(|i| self.encode_sentence(tape, &view.row(i)[..view.lengths[i]]))
            .collect::<Result<Vec<_>, _>>()?;
        let document = self.encode_document(tape, &sentences)?;

        let mut state = LstmState {
            h: document,
            c: document,
        };
        let mut previous = tape.input(Tensor::zeros(vec![self.config.sentence_embedding_dim()]));
        let mut probs = Vec::with_capacity(n);
        let mut log_probs = Vec::with_capacity(n);
        for &s in &sentences {
            let input = tape.concat(&[s, previous]);
            state = lstm_step(tape, input, state, &self.handles.ext_lstm)?;
            let logits = self.handles.output.logits(tape, state.h)?;
            let p = tape.softmax(logits);
            log_probs.push(tape.log_softmax(logits));
            probs.push(p);
            let selected = tape.pick(p, 1)?;
            previous = tape.scale_by(s, selected)?;
        }
        Ok(DocForward {
            sentences,
            document,
            probs,
            log_probs,
        })
    }

    pub fn extract_scores(&self, view: &PaddedDocView) -> Result<SentenceScores, ModelError> {
        let mut tape = Tape::new(&self.params);
        let fwd = self.forward(&mut tape, view)?;
        Ok(SentenceScores(
            fwd.probs.iter().map(|&p| tape.value(p).data()[1]).collect(),
        ))
    }

    /// Checkpoint bytes: the model configuration plus `extra` metadata, and
    /// every parameter with its optimizer state.
    pub fn to_checkpoint(&self, extra: &Metadata) -> Vec<u8> {
        let mut meta = Metadata::new();
        self.config.to_metadata(&mut meta);
        for (k, v) in extra.iter() {
            meta.set(k, v);
        }
        checkpoint::encode(&self.params, &meta)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<(Self, Metadata), ModelError> {
        let (params, meta) = checkpoint::decode(bytes)?;
        let config = ModelConfig::from_metadata(&meta)?;
        Ok((RefreshModel::from_parts(config, params)?, meta))
    }
}

/// Sentence indices by descending score, ties by ascending index.
pub fn rank_sentences(scores: &SentenceScores) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores.0[b].total_cmp(&scores.0[a]).then(a.cmp(&b)));
    order
}

/// The `m` best-ranked sentences in document order.
pub fn assemble_summary(scores: &SentenceScores, m: usize) -> Result<Extract, ModelError> {
    let mut top: Vec<usize> = rank_sentences(scores).into_iter().take(m).collect();
    top.sort_unstable();
    Extract::new(top, scores.len()).map_err(|_| ModelError::EmptyDocument)
}
