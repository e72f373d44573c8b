use super::{Parameter, ParameterStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    /// One bias-corrected Adam step on `param`; the gradient is zeroed
    /// afterwards.
    pub fn update(&self, param: &mut Parameter) {
        param.step += 1;
        let t = param.step as f64;
        let m_correction = 1.0 - libm::pow(self.beta1, t);
        let v_correction = 1.0 - libm::pow(self.beta2, t);
        let values = param.value.data_mut();
        let grads = param.grad.data_mut();
        let ms = param.adam_m.data_mut();
        let vs = param.adam_v.data_mut();
        for i in 0..values.len() {
            let g = grads[i];
            ms[i] = self.beta1 * ms[i] + (1.0 - self.beta1) * g;
            vs[i] = self.beta2 * vs[i] + (1.0 - self.beta2) * g * g;
            let m_hat = ms[i] / m_correction;
            let v_hat = vs[i] / v_correction;
            values[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
            grads[i] = 0.0;
        }
    }

    pub fn update_all(&self, store: &mut ParameterStore) {
        for param in store.iter_mut() {
            self.update(param);
        }
    }
}
