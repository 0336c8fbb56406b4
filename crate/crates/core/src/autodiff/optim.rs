use super::tensor::{Scalar, Tensor};
use super::{shape_err, TensorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T = f32> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        let zeros = |p: &Tensor<T>| Tensor::zeros(p.shape());
        Self { config, step: 0, m: params.iter().map(zeros).collect(), v: params.iter().map(zeros).collect() }
    }

    pub fn adam_step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<(), TensorError> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(shape_err("adam_step", format!("{} params, {} grads, {} moments", params.len(), grads.len(), self.m.len())));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(shape_err("adam_step", format!("param {:?} grad {:?}", p.shape(), g.shape())));
            }
            let md = m.data_mut();
            let vd = v.data_mut();
            for (i, (pv, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                let gv = gv.as_f64();
                let mi = beta1 * md[i].as_f64() + (1.0 - beta1) * gv;
                let vi = beta2 * vd[i].as_f64() + (1.0 - beta2) * gv * gv;
                md[i] = T::from_f64(mi);
                vd[i] = T::from_f64(vi);
                let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + eps);
                *pv = T::from_f64(pv.as_f64() - update);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_on_square_moves_by_lr() {
        // f(w) = w^2, grad 2w; the bias-corrected first step is lr * g / |g|
        let mut params = vec![Tensor::<f64>::scalar(1.0)];
        let mut adam = Adam::new(AdamConfig::default(), &params);
        let grads = vec![Tensor::scalar(2.0 * params[0].data()[0])];
        adam.adam_step(&mut params, &grads).unwrap();
        let w = params[0].data()[0];
        let expected = 1.0 - 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((w - expected).abs() < 1e-15, "{w}");
        assert!((1.0 - w - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn converges_on_quadratic() {
        let mut params = vec![Tensor::<f32>::from_vec(vec![1.0, -2.0])];
        let mut adam = Adam::new(AdamConfig { lr: 0.05, ..Default::default() }, &params);
        for _ in 0..500 {
            let g = params[0].map(|w| 2.0 * w);
            adam.adam_step(&mut params, &[g]).unwrap();
        }
        assert!(params[0].data().iter().all(|w| w.abs() < 0.05), "{:?}", params[0]);
    }

    #[test]
    fn rejects_mismatched_grads() {
        let mut params = vec![Tensor::<f32>::zeros(&[2])];
        let mut adam = Adam::new(AdamConfig::default(), &params);
        assert!(adam.adam_step(&mut params, &[Tensor::zeros(&[3])]).is_err());
    }
}
