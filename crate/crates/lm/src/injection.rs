//! Fragment injection: cross-attention from the input hidden states to the
//! concatenated soft-fragment hidden states, added back as a residual.
//!
//! `h = h_input + softmax(Q(h_input)·K(H_soft)ᵀ / √d_key) · V(H_soft)`
//!
//! Query, Key and Value are two-layer GELU MLPs of width `d_model`. The
//! Value output layer starts at zero, so a fresh module leaves the backbone
//! unchanged.

use rand::Rng;

use crate::error::{LmError, Result};
use crate::mat::{matmul, matmul_nt, matmul_tn_acc, Mat, Scalar};
use crate::nn::{gelu, gelu_backward, join, softmax_backward_row, softmax_prefix, Linear, Params};

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    pub l1: Linear<T>,
    pub l2: Linear<T>,
}

pub struct MlpCache<T> {
    x: Mat<T>,
    pre: Mat<T>,
    act: Mat<T>,
}

impl<T: Scalar> Mlp<T> {
    fn new<R: Rng + ?Sized>(d: usize, out_std: f64, rng: &mut R) -> Self {
        let std = 1.0 / (d as f64).sqrt();
        let l2 = if out_std == 0.0 {
            Linear::zeros(d, d)
        } else {
            Linear::new(d, d, out_std, rng)
        };
        Mlp {
            l1: Linear::new(d, d, std, rng),
            l2,
        }
    }

    fn zeros(d: usize) -> Self {
        Mlp {
            l1: Linear::zeros(d, d),
            l2: Linear::zeros(d, d),
        }
    }

    pub fn forward(&self, x: &Mat<T>) -> Mat<T> {
        self.l2.forward(&gelu(&self.l1.forward(x)))
    }

    fn forward_cached(&self, x: &Mat<T>) -> (Mat<T>, MlpCache<T>) {
        let pre = self.l1.forward(x);
        let act = gelu(&pre);
        let y = self.l2.forward(&act);
        (
            y,
            MlpCache {
                x: x.clone(),
                pre,
                act,
            },
        )
    }

    fn backward(&self, c: &MlpCache<T>, dy: &Mat<T>, grad: &mut Mlp<T>) -> Mat<T> {
        let dact = self.l2.backward(&c.act, dy, Some(&mut grad.l2));
        let dpre = gelu_backward(&c.pre, &dact);
        self.l1.backward(&c.x, &dpre, Some(&mut grad.l1))
    }
}

impl<T: Scalar> Params<T> for Mlp<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        self.l1.visit(&join(prefix, "l1"), f);
        self.l2.visit(&join(prefix, "l2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        self.l1.visit_mut(&join(prefix, "l1"), f);
        self.l2.visit_mut(&join(prefix, "l2"), f);
    }
}

/// Keys and values of one soft set, computed once per task.
#[derive(Clone, Debug)]
pub struct SoftKV<T> {
    pub k: Mat<T>,
    pub v: Mat<T>,
}

impl<T> SoftKV<T> {
    pub fn len(&self) -> usize {
        self.k.rows
    }

    pub fn is_empty(&self) -> bool {
        self.k.rows == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionModule<T> {
    /// Applied to the output of the first `layer` backbone blocks.
    pub layer: usize,
    pub d_model: usize,
    pub query: Mlp<T>,
    pub key: Mlp<T>,
    pub value: Mlp<T>,
}

pub struct InjectionCache<T> {
    q: MlpCache<T>,
    k: MlpCache<T>,
    v: MlpCache<T>,
    qm: Mat<T>,
    km: Mat<T>,
    vm: Mat<T>,
    attn: Mat<T>,
}

impl<T: Scalar> InjectionModule<T> {
    pub fn new<R: Rng + ?Sized>(d_model: usize, layer: usize, rng: &mut R) -> Self {
        let std = 1.0 / (d_model as f64).sqrt();
        InjectionModule {
            layer,
            d_model,
            query: Mlp::new(d_model, std, rng),
            key: Mlp::new(d_model, std, rng),
            value: Mlp::new(d_model, 0.0, rng),
        }
    }

    pub fn zeros(d_model: usize, layer: usize) -> Self {
        InjectionModule {
            layer,
            d_model,
            query: Mlp::zeros(d_model),
            key: Mlp::zeros(d_model),
            value: Mlp::zeros(d_model),
        }
    }

    /// Three two-layer MLPs of width d: 3·(2d² + 2d).
    pub fn analytic_param_count(d_model: usize) -> usize {
        3 * (2 * d_model * d_model + 2 * d_model)
    }

    pub fn d_key(&self) -> usize {
        self.d_model
    }

    fn check(&self, h: &Mat<T>) -> Result<()> {
        if h.cols != self.d_model {
            return Err(LmError::Shape(format!(
                "hidden width {} does not match injection width {}",
                h.cols, self.d_model
            )));
        }
        Ok(())
    }

    pub fn soft_kv(&self, h_soft: &Mat<T>) -> Result<SoftKV<T>> {
        self.check(h_soft)?;
        if h_soft.rows == 0 {
            return Err(LmError::Shape("empty soft set".into()));
        }
        Ok(SoftKV {
            k: self.key.forward(h_soft),
            v: self.value.forward(h_soft),
        })
    }

    /// Row-stochastic attention weights (input positions × soft positions).
    pub fn attention(&self, h_input: &Mat<T>, kv: &SoftKV<T>) -> Result<Mat<T>> {
        self.check(h_input)?;
        let q = self.query.forward(h_input);
        let mut s = matmul_nt(&q, &kv.k);
        s.scale(T::from_f64(1.0 / (self.d_key() as f64).sqrt()));
        let m = s.cols;
        for i in 0..s.rows {
            softmax_prefix(s.row_mut(i), m);
        }
        Ok(s)
    }

    /// The cross-attention term alone, without the residual.
    pub fn cross(&self, h_input: &Mat<T>, kv: &SoftKV<T>) -> Result<Mat<T>> {
        Ok(matmul(&self.attention(h_input, kv)?, &kv.v))
    }

    pub fn forward(&self, h_input: &Mat<T>, kv: &SoftKV<T>) -> Result<Mat<T>> {
        let mut out = self.cross(h_input, kv)?;
        out.add_assign(h_input);
        Ok(out)
    }

    pub fn forward_train(&self, h_input: &Mat<T>, h_soft: &Mat<T>) -> Result<(Mat<T>, InjectionCache<T>)> {
        self.check(h_input)?;
        self.check(h_soft)?;
        let (qm, q) = self.query.forward_cached(h_input);
        let (km, k) = self.key.forward_cached(h_soft);
        let (vm, v) = self.value.forward_cached(h_soft);
        let mut attn = matmul_nt(&qm, &km);
        attn.scale(T::from_f64(1.0 / (self.d_key() as f64).sqrt()));
        let m = attn.cols;
        for i in 0..attn.rows {
            softmax_prefix(attn.row_mut(i), m);
        }
        let mut out = matmul(&attn, &vm);
        out.add_assign(h_input);
        Ok((
            out,
            InjectionCache {
                q,
                k,
                v,
                qm,
                km,
                vm,
                attn,
            },
        ))
    }

    /// Accumulates parameter gradients; returns dL/dh_input.
    pub fn backward(&self, c: &InjectionCache<T>, dout: &Mat<T>, grad: &mut InjectionModule<T>) -> Mat<T> {
        let scale = T::from_f64(1.0 / (self.d_key() as f64).sqrt());
        // dA = dOut·Vᵀ, dV = Aᵀ·dOut
        let mut da = matmul_nt(dout, &c.vm);
        let mut dv = Mat::zeros(c.vm.rows, c.vm.cols);
        matmul_tn_acc(&c.attn, dout, &mut dv);
        for i in 0..da.rows {
            softmax_backward_row(c.attn.row(i), da.row_mut(i));
        }
        da.scale(scale);
        let dq = matmul(&da, &c.km);
        let mut dk = Mat::zeros(c.km.rows, c.km.cols);
        matmul_tn_acc(&da, &c.qm, &mut dk);
        self.value.backward(&c.v, &dv, &mut grad.value);
        self.key.backward(&c.k, &dk, &mut grad.key);
        let mut dh = self.query.backward(&c.q, &dq, &mut grad.query);
        dh.add_assign(dout);
        dh
    }
}

impl<T: Scalar> Params<T> for InjectionModule<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        self.query.visit(&join(prefix, "query"), f);
        self.key.visit(&join(prefix, "key"), f);
        self.value.visit(&join(prefix, "value"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        self.query.visit_mut(&join(prefix, "query"), f);
        self.key.visit_mut(&join(prefix, "key"), f);
        self.value.visit_mut(&join(prefix, "value"), f);
    }
}

impl InjectionModule<f32> {
    pub fn to_f64(&self) -> InjectionModule<f64> {
        let mut out = InjectionModule::<f64>::zeros(self.d_model, self.layer);
        let src = self.named();
        let mut i = 0;
        out.visit_mut("", &mut |_, m| {
            *m = src[i].1.cast();
            i += 1;
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::normal_mat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_module(d: usize, seed: u64) -> InjectionModule<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = InjectionModule::<f64>::new(d, 1, &mut rng);
        m.value.l2 = Linear::new(d, d, 0.5, &mut rng);
        m.visit_mut("", &mut |_, t| {
            for v in t.data.iter_mut() {
                *v += rand::Rng::gen_range(&mut rng, -0.2..0.2);
            }
        });
        m
    }

    #[test]
    fn singleton_soft_set_returns_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = random_module(6, 1);
        let h_in: Mat<f64> = normal_mat(4, 6, 1.0, &mut rng);
        let h_soft: Mat<f64> = normal_mat(1, 6, 1.0, &mut rng);
        let kv = m.soft_kv(&h_soft).unwrap();
        let a = m.attention(&h_in, &kv).unwrap();
        assert!(a.data.iter().all(|&x| x == 1.0));
        let cross = m.cross(&h_in, &kv).unwrap();
        let value = m.value.forward(&h_soft);
        for i in 0..4 {
            assert_eq!(cross.row(i), value.row(0));
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_module(8, 2);
        let kv = m.soft_kv(&normal_mat(11, 8, 1.0, &mut rng)).unwrap();
        let a = m.attention(&normal_mat(5, 8, 1.0, &mut rng), &kv).unwrap();
        for i in 0..a.rows {
            assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fresh_module_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = InjectionModule::<f32>::new(8, 1, &mut rng);
        let h: Mat<f32> = normal_mat(3, 8, 1.0, &mut rng);
        let kv = m.soft_kv(&normal_mat(4, 8, 1.0, &mut rng)).unwrap();
        assert_eq!(m.forward(&h, &kv).unwrap(), h);
        assert_eq!(m.param_count(), InjectionModule::<f32>::analytic_param_count(8));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = InjectionModule::<f32>::new(8, 1, &mut rng);
        assert!(matches!(m.soft_kv(&Mat::zeros(2, 6)), Err(LmError::Shape(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let d = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_module(d, 5);
        let h_in: Mat<f64> = normal_mat(3, d, 1.0, &mut rng);
        let h_soft: Mat<f64> = normal_mat(5, d, 1.0, &mut rng);
        let r: Mat<f64> = normal_mat(3, d, 1.0, &mut rng);
        let objective = |m: &InjectionModule<f64>| -> f64 {
            let out = m.forward(&h_in, &m.soft_kv(&h_soft).unwrap()).unwrap();
            out.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = m.forward_train(&h_in, &h_soft).unwrap();
        let mut grad = InjectionModule::zeros(d, 1);
        m.backward(&cache, &r, &mut grad);
        let analytic: Vec<Vec<f64>> = grad.named().into_iter().map(|(_, t)| t.data.clone()).collect();
        let step = 1e-4;
        for (ti, g) in analytic.iter().enumerate() {
            for k in 0..g.len() {
                let probe = |delta: f64| {
                    let mut p = m.clone();
                    let mut idx = 0;
                    p.visit_mut("", &mut |_, t| {
                        if idx == ti {
                            t.data[k] += delta;
                        }
                        idx += 1;
                    });
                    objective(&p)
                };
                let fd = (probe(step) - probe(-step)) / (2.0 * step);
                let err = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6);
                assert!(err <= 1e-4 || (fd - g[k]).abs() < 1e-9, "tensor {ti}[{k}]: {fd} vs {}", g[k]);
            }
        }
    }
}
