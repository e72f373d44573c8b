use alloc::format;
use alloc::vec;

use rand::Rng;

use super::{NnError, ParamId, ParameterStore, Tape, Tensor, Var};

/// Filters of one kernel width, `channels x width x input_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvFilterBank {
    pub width: usize,
    pub channels: usize,
    pub filters: ParamId,
    pub bias: ParamId,
}

impl ConvFilterBank {
    pub fn init<R: Rng>(
        store: &mut ParameterStore,
        prefix: &str,
        width: usize,
        channels: usize,
        input_dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if width == 0 || channels == 0 {
            return Err(NnError::Shape {
                op: "conv1d",
                detail: format!("width {width}, channels {channels}"),
            });
        }
        let filters = store.add_uniform(
            format!("{prefix}.filters"),
            vec![channels, width, input_dim],
            scale,
            rng,
        )?;
        let bias = store.add_uniform(format!("{prefix}.bias"), vec![channels], scale, rng)?;
        Ok(ConvFilterBank {
            width,
            channels,
            filters,
            bias,
        })
    }
}

/// Feature map `(len - width + 1) x channels` of a `len x dim` input.
pub fn conv1d_forward(tape: &mut Tape<'_>, input: Var, bank: &ConvFilterBank) -> Result<Var, NnError> {
    let filters = tape.param(bank.filters);
    let bias = tape.param(bank.bias);
    tape.conv1d(input, filters, bias)
}

/// Channel-wise maximum over time; argmax available via [`Tape::argmax`].
pub fn maxpool_time(tape: &mut Tape<'_>, feature_map: Var) -> Result<Var, NnError> {
    tape.maxpool_time(feature_map)
}

/// Weights of one LSTM layer. Gate rows are ordered input, forget,
/// candidate, output; each gate reads `[x; h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmWeights {
    pub weights: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmWeights {
    pub fn init<R: Rng>(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        scale: f64,
        forget_bias: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let weights = store.add_uniform(
            format!("{prefix}.weights"),
            vec![4 * hidden, input_dim + hidden],
            scale,
            rng,
        )?;
        let mut bias = Tensor::zeros(vec![4 * hidden]);
        for (i, b) in bias.data_mut().iter_mut().enumerate() {
            *b = if (hidden..2 * hidden).contains(&i) {
                forget_bias
            } else {
                rng.gen_range(-scale..=scale)
            };
        }
        let bias = store.add(format!("{prefix}.bias"), bias)?;
        Ok(LstmWeights {
            weights,
            bias,
            input_dim,
            hidden,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmState {
    pub fn zeros(tape: &mut Tape<'_>, hidden: usize) -> Self {
        LstmState {
            h: tape.input(Tensor::zeros(vec![hidden])),
            c: tape.input(Tensor::zeros(vec![hidden])),
        }
    }
}

/// One LSTM step:
/// `i, f, o = sigmoid(.)`, `g = tanh(.)`, `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_step(
    tape: &mut Tape<'_>,
    x: Var,
    state: LstmState,
    weights: &LstmWeights,
) -> Result<LstmState, NnError> {
    let hidden = weights.hidden;
    let (xl, hl, cl) = (
        tape.value(x).len(),
        tape.value(state.h).len(),
        tape.value(state.c).len(),
    );
    if xl != weights.input_dim || hl != hidden || cl != hidden {
        return Err(NnError::Shape {
            op: "lstm_step",
            detail: format!(
                "input {xl} (want {}), h {hl}, c {cl} (want {hidden})",
                weights.input_dim
            ),
        });
    }
    let joined = tape.concat(&[x, state.h]);
    let w = tape.param(weights.weights);
    let b = tape.param(weights.bias);
    let pre = tape.matvec(w, joined)?;
    let pre = tape.add(pre, b)?;
    let i_pre = tape.slice(pre, 0, hidden)?;
    let f_pre = tape.slice(pre, hidden, hidden)?;
    let g_pre = tape.slice(pre, 2 * hidden, hidden)?;
    let o_pre = tape.slice(pre, 3 * hidden, hidden)?;
    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let g = tape.tanh(g_pre);
    let o = tape.sigmoid(o_pre);
    let kept = tape.mul(f, state.c)?;
    let written = tape.mul(i, g)?;
    let c = tape.add(kept, written)?;
    let squashed = tape.tanh(c);
    let h = tape.mul(o, squashed)?;
    Ok(LstmState { h, c })
}

/// Affine layer `weights (out x in)`, `bias (out)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weights: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn init<R: Rng>(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        output_dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let weights =
            store.add_uniform(format!("{prefix}.weights"), vec![output_dim, input_dim], scale, rng)?;
        let bias = store.add_uniform(format!("{prefix}.bias"), vec![output_dim], scale, rng)?;
        Ok(Dense { weights, bias })
    }

    pub fn logits(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var, NnError> {
        let w = tape.param(self.weights);
        let b = tape.param(self.bias);
        let z = tape.matvec(w, x)?;
        tape.add(z, b)
    }
}

/// Dense layer followed by a softmax.
pub fn dense_softmax(tape: &mut Tape<'_>, x: Var, layer: &Dense) -> Result<Var, NnError> {
    let z = layer.logits(tape, x)?;
    Ok(tape.softmax(z))
}
