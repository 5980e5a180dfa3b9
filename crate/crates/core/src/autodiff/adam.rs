use super::{Gradients, ParamStore};

/// Bias-corrected Adam. The step counter is shared by every parameter
/// updated through this instance; moment buffers live on the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
        }
    }
}

impl Adam {
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: f64) {
        self.step += 1;
        let t = self.step as f64;
        let correction1 = 1.0 - libm::pow(self.beta1, t);
        let correction2 = 1.0 - libm::pow(self.beta2, t);
        for (i, p) in store.params_mut().iter_mut().enumerate() {
            let Some(g) = grads.get(super::ParamId(i)) else {
                continue;
            };
            let values = p.value.data_mut();
            for k in 0..values.len() {
                let m = self.beta1 * p.first_moment[k] + (1.0 - self.beta1) * g[k];
                let v = self.beta2 * p.second_moment[k] + (1.0 - self.beta2) * g[k] * g[k];
                p.first_moment[k] = m;
                p.second_moment[k] = v;
                let m_hat = m / correction1;
                let v_hat = v / correction2;
                values[k] -= lr * m_hat / (libm::sqrt(v_hat) + self.epsilon);
            }
        }
    }
}
