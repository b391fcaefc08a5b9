//! Layers with hand-written backward passes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::mat::{matmul, matmul_nt, matmul_tn_acc, Mat, Scalar};

/// Named parameter traversal; visit order is fixed, so two values of the same
/// shape (weights and their gradients) visit tensors pairwise.
pub trait Params<T: Scalar> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>));

    fn named(&self) -> Vec<(String, &Mat<T>)> {
        let mut out = Vec::new();
        self.visit("", &mut |n, m| out.push((n, m)));
        out
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, m| n += m.len());
        n
    }

    fn zero_all(&mut self) {
        self.visit_mut("", &mut |_, m| m.fill_zero());
    }
}

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub fn normal_mat<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Mat<T> {
    Mat::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        T::from_f64(z * std)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub w: Mat<T>,
    pub b: Mat<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, std: f64, rng: &mut R) -> Self {
        Linear {
            w: normal_mat(input, output, std, rng),
            b: Mat::zeros(1, output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            w: Mat::zeros(input, output),
            b: Mat::zeros(1, output),
        }
    }

    pub fn forward(&self, x: &Mat<T>) -> Mat<T> {
        let mut y = matmul(x, &self.w);
        y.add_row(&self.b.data);
        y
    }

    /// Returns dL/dx; accumulates parameter gradients when `grad` is given.
    pub fn backward(&self, x: &Mat<T>, dy: &Mat<T>, grad: Option<&mut Linear<T>>) -> Mat<T> {
        if let Some(g) = grad {
            matmul_tn_acc(x, dy, &mut g.w);
            dy.col_sums_into(&mut g.b.data);
        }
        matmul_nt(dy, &self.w)
    }
}

impl<T: Scalar> Params<T> for Linear<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        f(join(prefix, "w"), &self.w);
        f(join(prefix, "b"), &self.b);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        f(join(prefix, "w"), &mut self.w);
        f(join(prefix, "b"), &mut self.b);
    }
}

pub const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm<T> {
    pub g: Mat<T>,
    pub b: Mat<T>,
}

pub struct LnCache<T> {
    xhat: Mat<T>,
    rstd: Vec<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub fn new(d: usize) -> Self {
        LayerNorm {
            g: Mat::from_vec(1, d, vec![T::one(); d]),
            b: Mat::zeros(1, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        LayerNorm {
            g: Mat::zeros(1, d),
            b: Mat::zeros(1, d),
        }
    }

    pub fn forward(&self, x: &Mat<T>) -> (Mat<T>, LnCache<T>) {
        let d = x.cols;
        let inv_d = T::from_f64(1.0 / d as f64);
        let eps = T::from_f64(LN_EPS);
        let mut y = Mat::zeros(x.rows, d);
        let mut xhat = Mat::zeros(x.rows, d);
        let mut rstd = Vec::with_capacity(x.rows);
        for i in 0..x.rows {
            let r = x.row(i);
            let mean = r.iter().copied().sum::<T>() * inv_d;
            let var = r.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
            let s = (var + eps).sqrt().recip();
            rstd.push(s);
            let xh = xhat.row_mut(i);
            for j in 0..d {
                xh[j] = (r[j] - mean) * s;
            }
            let yr = y.row_mut(i);
            for j in 0..d {
                yr[j] = xh[j] * self.g.data[j] + self.b.data[j];
            }
        }
        (y, LnCache { xhat, rstd })
    }

    pub fn backward(&self, cache: &LnCache<T>, dy: &Mat<T>, grad: Option<&mut LayerNorm<T>>) -> Mat<T> {
        let d = dy.cols;
        let inv_d = T::from_f64(1.0 / d as f64);
        if let Some(g) = grad {
            for i in 0..dy.rows {
                let (dr, xh) = (dy.row(i), cache.xhat.row(i));
                for j in 0..d {
                    g.g.data[j] += dr[j] * xh[j];
                    g.b.data[j] += dr[j];
                }
            }
        }
        let mut dx = Mat::zeros(dy.rows, d);
        let mut dxhat = vec![T::zero(); d];
        for i in 0..dy.rows {
            let (dr, xh) = (dy.row(i), cache.xhat.row(i));
            let mut m1 = T::zero();
            let mut m2 = T::zero();
            for j in 0..d {
                dxhat[j] = dr[j] * self.g.data[j];
                m1 += dxhat[j];
                m2 += dxhat[j] * xh[j];
            }
            m1 *= inv_d;
            m2 *= inv_d;
            let s = cache.rstd[i];
            let out = dx.row_mut(i);
            for j in 0..d {
                out[j] = s * (dxhat[j] - m1 - xh[j] * m2);
            }
        }
        dx
    }
}

impl<T: Scalar> Params<T> for LayerNorm<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        f(join(prefix, "g"), &self.g);
        f(join(prefix, "b"), &self.b);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        f(join(prefix, "g"), &mut self.g);
        f(join(prefix, "b"), &mut self.b);
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// tanh-approximated GELU
pub fn gelu<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    let (c, a, half) = (T::from_f64(GELU_C), T::from_f64(GELU_A), T::from_f64(0.5));
    let data = x
        .data
        .iter()
        .map(|&v| half * v * (T::one() + (c * (v + a * v * v * v)).tanh()))
        .collect();
    Mat::from_vec(x.rows, x.cols, data)
}

pub fn gelu_backward<T: Scalar>(x: &Mat<T>, dy: &Mat<T>) -> Mat<T> {
    let (c, a, half) = (T::from_f64(GELU_C), T::from_f64(GELU_A), T::from_f64(0.5));
    let three = T::from_f64(3.0);
    let data = x
        .data
        .iter()
        .zip(&dy.data)
        .map(|(&v, &g)| {
            let t = (c * (v + a * v * v * v)).tanh();
            let dt = (T::one() - t * t) * c * (T::one() + three * a * v * v);
            g * (half * (T::one() + t) + half * v * dt)
        })
        .collect();
    Mat::from_vec(x.rows, x.cols, data)
}

/// In-place softmax over the first `len` entries; the rest are set to zero.
pub fn softmax_prefix<T: Scalar>(row: &mut [T], len: usize) {
    let max = row[..len].iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in &mut row[..len] {
        *v = (*v - max).exp();
        sum += *v;
    }
    let inv = sum.recip();
    for v in &mut row[..len] {
        *v *= inv;
    }
    for v in &mut row[len..] {
        *v = T::zero();
    }
}

/// Backward of a row softmax: dS = P ⊙ (dP − Σ dP⊙P).
pub fn softmax_backward_row<T: Scalar>(p: &[T], dp: &mut [T]) {
    let dot: T = p.iter().zip(dp.iter()).map(|(&a, &b)| a * b).sum();
    for (g, &pi) in dp.iter_mut().zip(p) {
        *g = pi * (*g - dot);
    }
}

/// Summed cross-entropy over rows whose target is `Some`, plus dL/dlogits of
/// that sum scaled by `scale`.
pub fn cross_entropy<T: Scalar>(logits: &Mat<T>, targets: &[Option<usize>], scale: T) -> (f64, Mat<T>) {
    assert_eq!(logits.rows, targets.len());
    let mut grad = Mat::zeros(logits.rows, logits.cols);
    let mut total = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let Some(t) = *t else { continue };
        let g = grad.row_mut(i);
        g.copy_from_slice(logits.row(i));
        let n = g.len();
        softmax_prefix(g, n);
        total -= log_prob(logits.row(i), t);
        g[t] -= T::one();
        for v in g.iter_mut() {
            *v *= scale;
        }
    }
    (total, grad)
}

/// log p(target) per row from raw logits.
pub fn log_prob<T: Scalar>(row: &[T], target: usize) -> f64 {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max).as_f64();
    let lse = max + row.iter().map(|&v| (v.as_f64() - max).exp()).sum::<f64>().ln();
    row[target].as_f64() - lse
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weighted_sum(y: &Mat<f64>, r: &Mat<f64>) -> f64 {
        y.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn layer_norm_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ln = LayerNorm::<f64>::new(5);
        ln.g = normal_mat(1, 5, 1.0, &mut rng);
        ln.b = normal_mat(1, 5, 1.0, &mut rng);
        let x: Mat<f64> = normal_mat(3, 5, 1.0, &mut rng);
        let r: Mat<f64> = normal_mat(3, 5, 1.0, &mut rng);
        let (_, cache) = ln.forward(&x);
        let mut grad = LayerNorm::zeros(5);
        let dx = ln.backward(&cache, &r, Some(&mut grad));
        let h = 1e-5;
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp.data[k] += h;
            let mut xm = x.clone();
            xm.data[k] -= h;
            let fd = (weighted_sum(&ln.forward(&xp).0, &r) - weighted_sum(&ln.forward(&xm).0, &r)) / (2.0 * h);
            assert!((fd - dx.data[k]).abs() < 1e-7, "{fd} vs {}", dx.data[k]);
        }
        for k in 0..5 {
            let mut lp = ln.clone();
            lp.g.data[k] += h;
            let mut lm = ln.clone();
            lm.g.data[k] -= h;
            let fd = (weighted_sum(&lp.forward(&x).0, &r) - weighted_sum(&lm.forward(&x).0, &r)) / (2.0 * h);
            assert!((fd - grad.g.data[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn gelu_gradient_matches_finite_differences() {
        let x: Mat<f64> = Mat::from_vec(1, 5, vec![-3.0, -0.7, 0.0, 0.4, 2.5]);
        let ones = Mat::from_vec(1, 5, vec![1.0; 5]);
        let d = gelu_backward(&x, &ones);
        for k in 0..5 {
            let h = 1e-6;
            let mut p = x.clone();
            p.data[k] += h;
            let mut m = x.clone();
            m.data[k] -= h;
            let fd = (gelu(&p).data[k] - gelu(&m).data[k]) / (2.0 * h);
            assert!((fd - d.data[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_entropy_value_and_gradient() {
        let logits = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let (loss, g) = cross_entropy(&logits, &[Some(2), None], 1.0);
        let expected = -(3f64.exp() / (1f64.exp() + 2f64.exp() + 3f64.exp())).ln();
        assert!((loss - expected).abs() < 1e-12);
        assert!(g.row(1).iter().all(|&v| v == 0.0));
        assert!(g.row(0).iter().sum::<f64>().abs() < 1e-12);
        assert!((log_prob(logits.row(0), 2) + expected).abs() < 1e-12);
    }

    #[test]
    fn softmax_prefix_masks_tail() {
        let mut r = vec![1.0f32, 2.0, 50.0];
        softmax_prefix(&mut r, 2);
        assert_eq!(r[2], 0.0);
        assert!((r[0] + r[1] - 1.0).abs() < 1e-6);
    }
}
