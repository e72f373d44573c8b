//! Reverse-mode differentiation over a recorded list of tensor operations.
//!
//! A [`Tape`] borrows the parameter store immutably, so forward passes over
//! different documents can share one store. [`Tape::backward`] adds
//! parameter gradients into a caller-owned [`GradBuffer`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{GradBuffer, NnError, ParamId, ParameterStore, Tensor};
use crate::corpus::PAD_ID;

/// Node handle on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    Embed { table: ParamId, ids: Vec<u32> },
    MatVec { w: Var, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    ScaleBy { x: Var, s: Var },
    ScaleConst { x: Var, c: f64 },
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Conv1d { input: Var, filters: Var, bias: Var },
    MaxPoolTime { x: Var, argmax: Vec<usize> },
    Softmax(Var),
    LogSoftmax(Var),
    Pick { x: Var, index: usize },
    Sum(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
}

pub struct Tape<'p> {
    store: &'p ParameterStore,
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, detail: alloc::string::String) -> NnError {
    NnError::Shape { op, detail }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParameterStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'p ParameterStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.store.value(*id),
            _ => unreachable!("only parameter leaves borrow their value"),
        }
    }

    /// First maximal index per channel of a max-pool node.
    pub fn argmax(&self, v: Var) -> Option<&[usize]> {
        match &self.nodes[v.0].op {
            Op::MaxPoolTime { argmax, .. } => Some(argmax),
            _ => None,
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Input, value)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Rows of the embedding table for `ids`, shape `(ids.len() x dim)`.
    pub fn embed(&mut self, table: ParamId, ids: &[u32]) -> Result<Var, NnError> {
        let t = self.store.value(table);
        let (rows, dim) = (t.rows(), t.cols());
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            if id as usize >= rows {
                return Err(shape_err("embed", format!("id {id} outside table of {rows} rows")));
            }
            out.extend_from_slice(t.row(id as usize));
        }
        let value = Tensor::new(vec![ids.len(), dim], out)?;
        Ok(self.push(
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
            value,
        ))
    }

    /// Matrix `(r x c)` times vector `(c)`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, NnError> {
        let (wt, xt) = (self.value(w), self.value(x));
        let (r, c) = (wt.rows(), wt.cols());
        if wt.shape().len() != 2 || xt.len() != c {
            return Err(shape_err(
                "matvec",
                format!("matrix {:?} against vector of {}", wt.shape(), xt.len()),
            ));
        }
        let xs = xt.data();
        let out: Vec<f64> = (0..r)
            .map(|i| wt.row(i).iter().zip(xs).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Op::MatVec { w, x }, Tensor::vector(out)))
    }

    fn same_len(&self, op: &'static str, a: Var, b: Var) -> Result<(), NnError> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(shape_err(op, format!("lengths {la} and {lb}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_len("add", a, b)?;
        let out: Vec<f64> = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x + y).collect();
        let shape = self.value(a).shape().to_vec();
        let value = Tensor::new(shape, out)?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        self.same_len("mul", a, b)?;
        let out: Vec<f64> = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
        let shape = self.value(a).shape().to_vec();
        let value = Tensor::new(shape, out)?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    /// `x` times the single value held by `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var, NnError> {
        if self.value(s).len() != 1 {
            return Err(shape_err("scale_by", format!("scale has {} values", self.value(s).len())));
        }
        let k = self.value(s).data()[0];
        let xt = self.value(x);
        let value = Tensor::new(xt.shape().to_vec(), xt.data().iter().map(|v| v * k).collect())?;
        Ok(self.push(Op::ScaleBy { x, s }, value))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let xt = self.value(x);
        let value = Tensor::new(xt.shape().to_vec(), xt.data().iter().map(|v| v * c).collect())
            .expect("same shape");
        self.push(Op::ScaleConst { x, c }, value)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let xt = self.value(x);
        let value = Tensor::new(xt.shape().to_vec(), xt.data().iter().map(|&v| sigmoid(v)).collect())
            .expect("same shape");
        self.push(Op::Sigmoid(x), value)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let xt = self.value(x);
        let value = Tensor::new(xt.shape().to_vec(), xt.data().iter().map(|&v| libm::tanh(v)).collect())
            .expect("same shape");
        self.push(Op::Tanh(x), value)
    }

    /// Flat concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p).data());
        }
        self.push(Op::Concat(parts.to_vec()), Tensor::vector(out))
    }

    /// `len` consecutive values of `x` starting at `start`.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var, NnError> {
        let xt = self.value(x);
        if start + len > xt.len() {
            return Err(shape_err("slice", format!("{start}+{len} past {}", xt.len())));
        }
        let value = Tensor::vector(xt.data()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { x, start }, value))
    }

    /// Narrow temporal convolution: `input (len x dim)`, `filters
    /// (channels x width x dim)`, `bias (channels)`; output `(len-width+1 x
    /// channels)`.
    pub fn conv1d(&mut self, input: Var, filters: Var, bias: Var) -> Result<Var, NnError> {
        let (it, ft, bt) = (self.value(input), self.value(filters), self.value(bias));
        if ft.shape().len() != 3 || it.shape().len() != 2 {
            return Err(shape_err("conv1d", format!("input {:?}, filters {:?}", it.shape(), ft.shape())));
        }
        let (len, dim) = (it.shape()[0], it.shape()[1]);
        let (channels, width) = (ft.shape()[0], ft.shape()[1]);
        if ft.shape()[2] != dim || bt.len() != channels {
            return Err(shape_err(
                "conv1d",
                format!("input {:?}, filters {:?}, bias {:?}", it.shape(), ft.shape(), bt.shape()),
            ));
        }
        if len < width {
            return Err(shape_err("conv1d", format!("sequence of {len} shorter than width {width}")));
        }
        let positions = len - width + 1;
        let window = width * dim;
        let (x, f, b) = (it.data(), ft.data(), bt.data());
        let mut out = vec![0.0; positions * channels];
        for t in 0..positions {
            let win = &x[t * dim..t * dim + window];
            for c in 0..channels {
                let kernel = &f[c * window..(c + 1) * window];
                let dot: f64 = win.iter().zip(kernel).map(|(a, k)| a * k).sum();
                out[t * channels + c] = dot + b[c];
            }
        }
        let value = Tensor::new(vec![positions, channels], out)?;
        Ok(self.push(Op::Conv1d { input, filters, bias }, value))
    }

    /// Per-column maximum of a `(time x channels)` map; ties go to the first
    /// index.
    pub fn maxpool_time(&mut self, x: Var) -> Result<Var, NnError> {
        let xt = self.value(x);
        let (time, channels) = (xt.rows(), xt.cols());
        if time == 0 || xt.shape().len() != 2 {
            return Err(shape_err("maxpool_time", format!("feature map {:?}", xt.shape())));
        }
        let mut argmax = vec![0usize; channels];
        let mut out = xt.row(0).to_vec();
        for t in 1..time {
            for (c, &v) in xt.row(t).iter().enumerate() {
                if v > out[c] {
                    out[c] = v;
                    argmax[c] = t;
                }
            }
        }
        Ok(self.push(Op::MaxPoolTime { x, argmax }, Tensor::vector(out)))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let value = Tensor::vector(softmax(self.value(x).data()));
        self.push(Op::Softmax(x), value)
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let xs = self.value(x).data();
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + libm::log(xs.iter().map(|v| libm::exp(v - max)).sum::<f64>());
        let value = Tensor::vector(xs.iter().map(|v| v - lse).collect());
        self.push(Op::LogSoftmax(x), value)
    }

    pub fn pick(&mut self, x: Var, index: usize) -> Result<Var, NnError> {
        let xt = self.value(x);
        if index >= xt.len() {
            return Err(shape_err("pick", format!("index {index} of {}", xt.len())));
        }
        let value = Tensor::scalar(xt.data()[index]);
        Ok(self.push(Op::Pick { x, index }, value))
    }

    /// Sum of scalar nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var, NnError> {
        let mut total = 0.0;
        for &p in parts {
            let t = self.value(p);
            if t.len() != 1 {
                return Err(shape_err("sum", format!("part with {} values", t.len())));
            }
            total += t.data()[0];
        }
        Ok(self.push(Op::Sum(parts.to_vec()), Tensor::scalar(total)))
    }

    /// Back-propagates `seed` (the gradient of the final objective with
    /// respect to `root`, one value per element) and adds the resulting
    /// parameter gradients into `grads`.
    pub fn backward_with(&self, root: Var, seed: &Tensor, grads: &mut GradBuffer) -> Result<(), NnError> {
        if root.0 >= self.nodes.len() {
            return Err(NnError::NoForward);
        }
        if seed.len() != self.value(root).len() {
            return Err(shape_err(
                "backward",
                format!("seed of {} for node of {}", seed.len(), self.value(root).len()),
            ));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(seed.data().to_vec());

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            let out = self.value(Var(i)).data();
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    for (a, b) in grads.slot(*id).data_mut().iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                Op::Embed { table, ids } => {
                    let slot = grads.slot(*table);
                    let dim = slot.cols();
                    let data = slot.data_mut();
                    for (r, &id) in ids.iter().enumerate() {
                        if id == PAD_ID {
                            continue;
                        }
                        let row = &mut data[id as usize * dim..(id as usize + 1) * dim];
                        for (a, b) in row.iter_mut().zip(&g[r * dim..(r + 1) * dim]) {
                            *a += b;
                        }
                    }
                }
                Op::MatVec { w, x } => {
                    let (wt, xt) = (self.value(*w), self.value(*x));
                    let cols = wt.cols();
                    let xs = xt.data();
                    let mut dx = vec![0.0; cols];
                    for (r, &gr) in g.iter().enumerate() {
                        for (d, wv) in dx.iter_mut().zip(wt.row(r)) {
                            *d += gr * wv;
                        }
                    }
                    // parameter weights accumulate directly into the buffer
                    if let Op::Param(id) = self.nodes[w.0].op {
                        let slot = grads.slot(id).data_mut();
                        for (r, &gr) in g.iter().enumerate() {
                            for (d, xv) in slot[r * cols..(r + 1) * cols].iter_mut().zip(xs) {
                                *d += gr * xv;
                            }
                        }
                    } else {
                        let mut dw = vec![0.0; wt.len()];
                        for (r, &gr) in g.iter().enumerate() {
                            for (d, xv) in dw[r * cols..(r + 1) * cols].iter_mut().zip(xs) {
                                *d = gr * xv;
                            }
                        }
                        accumulate(&mut adj, *w, &dw);
                    }
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, &g);
                    accumulate(&mut adj, *b, &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    let da: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x * y).collect();
                    let db: Vec<f64> = g.iter().zip(av).map(|(x, y)| x * y).collect();
                    accumulate(&mut adj, *a, &da);
                    accumulate(&mut adj, *b, &db);
                }
                Op::ScaleBy { x, s } => {
                    let k = self.value(*s).data()[0];
                    let xv = self.value(*x).data();
                    let dx: Vec<f64> = g.iter().map(|v| v * k).collect();
                    let ds: f64 = g.iter().zip(xv).map(|(a, b)| a * b).sum();
                    accumulate(&mut adj, *x, &dx);
                    accumulate(&mut adj, *s, &[ds]);
                }
                Op::ScaleConst { x, c } => {
                    let dx: Vec<f64> = g.iter().map(|v| v * c).collect();
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Sigmoid(x) => {
                    let dx: Vec<f64> = g.iter().zip(out).map(|(gv, y)| gv * y * (1.0 - y)).collect();
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Tanh(x) => {
                    let dx: Vec<f64> = g.iter().zip(out).map(|(gv, y)| gv * (1.0 - y * y)).collect();
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).len();
                        accumulate(&mut adj, p, &g[offset..offset + len]);
                        offset += len;
                    }
                }
                Op::Slice { x, start } => {
                    let mut dx = vec![0.0; self.value(*x).len()];
                    dx[*start..*start + g.len()].copy_from_slice(&g);
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Conv1d { input, filters, bias } => {
                    let (it, ft) = (self.value(*input), self.value(*filters));
                    let dim = it.shape()[1];
                    let (channels, width) = (ft.shape()[0], ft.shape()[1]);
                    let window = width * dim;
                    let positions = g.len() / channels;
                    let (x, f) = (it.data(), ft.data());
                    let mut dx = vec![0.0; x.len()];
                    let mut df = vec![0.0; f.len()];
                    let mut db = vec![0.0; channels];
                    for t in 0..positions {
                        let base = t * dim;
                        for c in 0..channels {
                            let gv = g[t * channels + c];
                            if gv == 0.0 {
                                continue;
                            }
                            db[c] += gv;
                            let kernel = &f[c * window..(c + 1) * window];
                            let dk = &mut df[c * window..(c + 1) * window];
                            for u in 0..window {
                                dk[u] += gv * x[base + u];
                                dx[base + u] += gv * kernel[u];
                            }
                        }
                    }
                    accumulate(&mut adj, *input, &dx);
                    accumulate(&mut adj, *filters, &df);
                    accumulate(&mut adj, *bias, &db);
                }
                Op::MaxPoolTime { x, argmax } => {
                    let channels = argmax.len();
                    let mut dx = vec![0.0; self.value(*x).len()];
                    for (c, &t) in argmax.iter().enumerate() {
                        dx[t * channels + c] += g[c];
                    }
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Softmax(x) => {
                    let dot: f64 = g.iter().zip(out).map(|(a, b)| a * b).sum();
                    let dx: Vec<f64> = g.iter().zip(out).map(|(gv, y)| y * (gv - dot)).collect();
                    accumulate(&mut adj, *x, &dx);
                }
                Op::LogSoftmax(x) => {
                    let total: f64 = g.iter().sum();
                    let dx: Vec<f64> = g.iter().zip(out).map(|(gv, lp)| gv - libm::exp(*lp) * total).collect();
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Pick { x, index } => {
                    let mut dx = vec![0.0; self.value(*x).len()];
                    dx[*index] = g[0];
                    accumulate(&mut adj, *x, &dx);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        accumulate(&mut adj, p, &g);
                    }
                }
            }
        }
        Ok(())
    }

    /// Back-propagates from a scalar root with unit seed.
    pub fn backward(&self, root: Var, grads: &mut GradBuffer) -> Result<(), NnError> {
        self.backward_with(root, &Tensor::scalar(1.0), grads)
    }
}

fn accumulate(adj: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut adj[v.0] {
        Some(existing) => {
            for (a, b) in existing.iter_mut().zip(g) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g.to_vec()),
    }
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
