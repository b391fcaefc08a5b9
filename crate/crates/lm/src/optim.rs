//! Adam with decoupled weight decay and global-norm clipping.

use crate::mat::{Mat, Scalar};
use crate::nn::Params;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip: Option<f64>,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            clip: Some(1.0),
        }
    }
}

pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new<T: Scalar>(config: AdamConfig, params: &impl Params<T>) -> Self {
        let shapes: Vec<usize> = params.named().iter().map(|(_, m)| m.len()).collect();
        Adam {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of `params` from `grads` (same structure), with the
    /// learning rate multiplied by `lr_scale`. Returns the pre-clip gradient
    /// norm.
    pub fn step<T: Scalar, P: Params<T>>(&mut self, params: &mut P, grads: &P, lr_scale: f64) -> f64 {
        let g: Vec<&Mat<T>> = grads.named().into_iter().map(|(_, m)| m).collect();
        let norm = g.iter().map(|m| m.sum_sq()).sum::<f64>().sqrt();
        let clip = match self.config.clip {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let lr = c.lr * lr_scale;
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        params.visit_mut("", &mut |_, p| {
            let (m, v, gt) = (&mut ms[idx], &mut vs[idx], g[idx]);
            for k in 0..p.data.len() {
                let gk = gt.data[k].as_f64() * clip;
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
                let update = (m[k] / bc1) / ((v[k] / bc2).sqrt() + c.eps);
                let w = p.data[k].as_f64();
                p.data[k] = T::from_f64(w - lr * (update + c.weight_decay * w));
            }
            idx += 1;
        });
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;

    #[test]
    fn minimises_a_quadratic() {
        // f(w) = Σ (w - 3)², grad = 2(w - 3)
        let mut p = Linear::<f64>::zeros(2, 2);
        let mut opt = Adam::new(AdamConfig { clip: None, ..AdamConfig::with_lr(0.1) }, &p);
        for _ in 0..500 {
            let mut g = Linear::<f64>::zeros(2, 2);
            for (gw, w) in g.w.data.iter_mut().zip(&p.w.data) {
                *gw = 2.0 * (w - 3.0);
            }
            opt.step(&mut p, &g, 1.0);
        }
        assert!(p.w.data.iter().all(|w| (w - 3.0).abs() < 1e-3));
        assert!(p.b.data.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut p = Linear::<f32>::zeros(2, 3);
        p.w.data[1] = 0.5;
        let before = p.clone();
        let mut g = Linear::<f32>::zeros(2, 3);
        g.w.data.iter_mut().for_each(|x| *x = 1.0);
        let mut opt = Adam::new(AdamConfig::with_lr(0.0), &p);
        opt.step(&mut p, &g, 1.0);
        assert_eq!(p, before);
    }
}
