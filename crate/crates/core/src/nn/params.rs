use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{NnError, Tensor};

/// Handle to a parameter inside a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// A trainable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub adam_m: Tensor,
    pub adam_v: Tensor,
    pub step: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        Parameter {
            name: name.into(),
            grad: Tensor::zeros(shape.clone()),
            adam_m: Tensor::zeros(shape.clone()),
            adam_v: Tensor::zeros(shape),
            value,
            step: 0,
        }
    }
}

/// Named parameters in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    params: Vec<Parameter>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId, NnError> {
        self.push(Parameter::new(name, value))
    }

    pub fn push(&mut self, param: Parameter) -> Result<ParamId, NnError> {
        if self.params.iter().any(|p| p.name == param.name) {
            return Err(NnError::DuplicateParameter(param.name));
        }
        self.params.push(param);
        Ok(ParamId(self.params.len() - 1))
    }

    /// Adds a parameter drawn uniformly from `[-scale, scale]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        scale: f64,
        rng: &mut R,
    ) -> Result<ParamId, NnError> {
        let mut value = Tensor::zeros(shape);
        for x in value.data_mut() {
            *x = rng.gen_range(-scale..=scale);
        }
        self.add(name, value)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds a worker's gradient buffer into the stored gradients.
    pub fn accumulate(&mut self, grads: &GradBuffer) {
        for (param, grad) in self.params.iter_mut().zip(&grads.grads) {
            if let Some(g) = grad {
                param.grad.add_assign(g);
            }
        }
    }

    /// Euclidean norm over every stored gradient.
    pub fn grad_norm(&self) -> f64 {
        let sum: f64 = self
            .params
            .iter()
            .flat_map(|p| p.grad.data().iter())
            .map(|g| g * g)
            .sum();
        libm::sqrt(sum)
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            for g in p.grad.data_mut() {
                *g *= factor;
            }
        }
    }
}

/// Private gradient accumulator mirroring a store's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffer {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl GradBuffer {
    pub fn for_store(store: &ParameterStore) -> Self {
        GradBuffer {
            grads: alloc::vec![None; store.len()],
            shapes: store.params.iter().map(|p| p.value.shape().to_vec()).collect(),
        }
    }

    /// Gradient slot of `id`, allocated on first use.
    pub fn slot(&mut self, id: ParamId) -> &mut Tensor {
        let shape = &self.shapes[id.0];
        self.grads[id.0].get_or_insert_with(|| Tensor::zeros(shape.clone()))
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Gradient value at a flat coordinate, zero when never touched.
    pub fn at(&self, id: ParamId, index: usize) -> f64 {
        self.get(id).map_or(0.0, |g| g.data()[index])
    }

    pub fn clear(&mut self) {
        for g in self.grads.iter_mut().flatten() {
            g.fill(0.0);
        }
    }
}
