//! Pre-LayerNorm GPT-style causal transformer with learned positions and a
//! tied output head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LmError, Result};
use crate::injection::{InjectionModule, SoftKV};
use crate::mat::{gemm, matmul_nt, matmul_tn_acc, Mat, Scalar};
use crate::nn::{
    cross_entropy, gelu, gelu_backward, join, normal_mat, softmax_backward_row, softmax_prefix,
    LayerNorm, Linear, LnCache, Params,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub context: usize,
}

impl BackboneConfig {
    /// 6 layers, width 256, 8 heads, 128 positions.
    pub fn standard(vocab_size: usize) -> Self {
        BackboneConfig {
            vocab_size,
            d_model: 256,
            n_layers: 6,
            n_heads: 8,
            context: 128,
        }
    }

    /// A smaller shape that trains in minutes on one CPU core.
    pub fn desk(vocab_size: usize) -> Self {
        BackboneConfig {
            vocab_size,
            d_model: 64,
            n_layers: 4,
            n_heads: 4,
            context: 128,
        }
    }

    pub fn d_ff(&self) -> usize {
        4 * self.d_model
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(LmError::Shape(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.n_layers == 0 || self.context == 0 || self.vocab_size == 0 {
            return Err(LmError::Shape("layers, context and vocabulary must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    pub ln1: LayerNorm<T>,
    pub qkv: Linear<T>,
    pub proj: Linear<T>,
    pub ln2: LayerNorm<T>,
    pub fc: Linear<T>,
    pub out: Linear<T>,
}

pub struct BlockCache<T> {
    ln1: LnCache<T>,
    a: Mat<T>,
    qkv: Mat<T>,
    probs: Vec<Mat<T>>,
    o: Mat<T>,
    ln2: LnCache<T>,
    m: Mat<T>,
    f: Mat<T>,
    g: Mat<T>,
}

impl<T: Scalar> Block<T> {
    fn new<R: Rng + ?Sized>(c: &BackboneConfig, rng: &mut R) -> Self {
        let d = c.d_model;
        let resid_std = 0.02 / (2.0 * c.n_layers as f64).sqrt();
        Block {
            ln1: LayerNorm::new(d),
            qkv: Linear::new(d, 3 * d, 0.02, rng),
            proj: Linear::new(d, d, resid_std, rng),
            ln2: LayerNorm::new(d),
            fc: Linear::new(d, c.d_ff(), 0.02, rng),
            out: Linear::new(c.d_ff(), d, resid_std, rng),
        }
    }

    fn zeros(c: &BackboneConfig) -> Self {
        let d = c.d_model;
        Block {
            ln1: LayerNorm::zeros(d),
            qkv: Linear::zeros(d, 3 * d),
            proj: Linear::zeros(d, d),
            ln2: LayerNorm::zeros(d),
            fc: Linear::zeros(d, c.d_ff()),
            out: Linear::zeros(c.d_ff(), d),
        }
    }

    fn forward(&self, x: &Mat<T>, heads: usize) -> (Mat<T>, BlockCache<T>) {
        let (n, d) = (x.rows, x.cols);
        let dh = d / heads;
        let scale = T::from_f64(1.0 / (dh as f64).sqrt());
        let (a, ln1) = self.ln1.forward(x);
        let qkv = self.qkv.forward(&a);
        let mut o = Mat::zeros(n, d);
        let mut probs = Vec::with_capacity(heads);
        for h in 0..heads {
            let mut s = Mat::zeros(n, n);
            gemm(
                scale,
                qkv.cols_view(h * dh, dh),
                qkv.cols_view(d + h * dh, dh).t(),
                T::zero(),
                s.view_mut(),
            );
            for i in 0..n {
                softmax_prefix(s.row_mut(i), i + 1);
            }
            gemm(
                T::one(),
                s.view(),
                qkv.cols_view(2 * d + h * dh, dh),
                T::zero(),
                o.cols_view_mut(h * dh, dh),
            );
            probs.push(s);
        }
        let mut x1 = self.proj.forward(&o);
        x1.add_assign(x);
        let (m, ln2) = self.ln2.forward(&x1);
        let f = self.fc.forward(&m);
        let g = gelu(&f);
        let mut x2 = self.out.forward(&g);
        x2.add_assign(&x1);
        let cache = BlockCache {
            ln1,
            a,
            qkv,
            probs,
            o,
            ln2,
            m,
            f,
            g,
        };
        (x2, cache)
    }

    fn backward(
        &self,
        c: &BlockCache<T>,
        dx2: &Mat<T>,
        heads: usize,
        mut grad: Option<&mut Block<T>>,
    ) -> Mat<T> {
        let (n, d) = (dx2.rows, dx2.cols);
        let dh = d / heads;
        let scale = T::from_f64(1.0 / (dh as f64).sqrt());
        let dg = self.out.backward(&c.g, dx2, grad.as_deref_mut().map(|g| &mut g.out));
        let df = gelu_backward(&c.f, &dg);
        let dm = self.fc.backward(&c.m, &df, grad.as_deref_mut().map(|g| &mut g.fc));
        let mut dx1 = self.ln2.backward(&c.ln2, &dm, grad.as_deref_mut().map(|g| &mut g.ln2));
        dx1.add_assign(dx2);
        let d_o = self.proj.backward(&c.o, &dx1, grad.as_deref_mut().map(|g| &mut g.proj));
        let mut dqkv = Mat::zeros(n, 3 * d);
        for h in 0..heads {
            let p = &c.probs[h];
            let mut dp = Mat::zeros(n, n);
            gemm(
                T::one(),
                d_o.cols_view(h * dh, dh),
                c.qkv.cols_view(2 * d + h * dh, dh).t(),
                T::zero(),
                dp.view_mut(),
            );
            // dV = Pᵀ dO
            gemm(
                T::one(),
                p.view().t(),
                d_o.cols_view(h * dh, dh),
                T::zero(),
                dqkv.cols_view_mut(2 * d + h * dh, dh),
            );
            for i in 0..n {
                softmax_backward_row(p.row(i), dp.row_mut(i));
            }
            gemm(
                scale,
                dp.view(),
                c.qkv.cols_view(d + h * dh, dh),
                T::zero(),
                dqkv.cols_view_mut(h * dh, dh),
            );
            gemm(
                scale,
                dp.view().t(),
                c.qkv.cols_view(h * dh, dh),
                T::zero(),
                dqkv.cols_view_mut(d + h * dh, dh),
            );
        }
        let da = self.qkv.backward(&c.a, &dqkv, grad.as_deref_mut().map(|g| &mut g.qkv));
        let mut dx = self.ln1.backward(&c.ln1, &da, grad.map(|g| &mut g.ln1));
        dx.add_assign(&dx1);
        dx
    }

    /// One position against the cached keys and values of this layer.
    fn step(&self, x: &Mat<T>, heads: usize, cache: &mut LayerKv<T>) -> Mat<T> {
        let d = x.cols;
        let dh = d / heads;
        let scale = T::from_f64(1.0 / (dh as f64).sqrt());
        let pos = cache.len;
        let (a, _) = self.ln1.forward(x);
        let qkv = self.qkv.forward(&a);
        let row = qkv.row(0);
        cache.k.row_mut(pos).copy_from_slice(&row[d..2 * d]);
        cache.v.row_mut(pos).copy_from_slice(&row[2 * d..]);
        cache.len += 1;
        let mut o = Mat::zeros(1, d);
        let mut scores = vec![T::zero(); pos + 1];
        for h in 0..heads {
            let q = &row[h * dh..(h + 1) * dh];
            for (j, s) in scores.iter_mut().enumerate() {
                let k = &cache.k.row(j)[h * dh..(h + 1) * dh];
                *s = q.iter().zip(k).map(|(&a, &b)| a * b).sum::<T>() * scale;
            }
            softmax_prefix(&mut scores, pos + 1);
            let out = &mut o.data[h * dh..(h + 1) * dh];
            for (j, &p) in scores.iter().enumerate() {
                let v = &cache.v.row(j)[h * dh..(h + 1) * dh];
                for (acc, &vv) in out.iter_mut().zip(v) {
                    *acc += p * vv;
                }
            }
        }
        let mut x1 = self.proj.forward(&o);
        x1.add_assign(x);
        let (m, _) = self.ln2.forward(&x1);
        let mut x2 = self.out.forward(&gelu(&self.fc.forward(&m)));
        x2.add_assign(&x1);
        x2
    }
}

impl<T: Scalar> Params<T> for Block<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        self.ln1.visit(&join(prefix, "ln1"), f);
        self.qkv.visit(&join(prefix, "attn.qkv"), f);
        self.proj.visit(&join(prefix, "attn.proj"), f);
        self.ln2.visit(&join(prefix, "ln2"), f);
        self.fc.visit(&join(prefix, "mlp.fc"), f);
        self.out.visit(&join(prefix, "mlp.out"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        self.ln1.visit_mut(&join(prefix, "ln1"), f);
        self.qkv.visit_mut(&join(prefix, "attn.qkv"), f);
        self.proj.visit_mut(&join(prefix, "attn.proj"), f);
        self.ln2.visit_mut(&join(prefix, "ln2"), f);
        self.fc.visit_mut(&join(prefix, "mlp.fc"), f);
        self.out.visit_mut(&join(prefix, "mlp.out"), f);
    }
}

pub struct LayerKv<T> {
    k: Mat<T>,
    v: Mat<T>,
    len: usize,
}

/// Per-layer key/value cache for incremental decoding.
pub struct KvCache<T> {
    layers: Vec<LayerKv<T>>,
}

impl<T: Scalar> KvCache<T> {
    pub fn len(&self) -> usize {
        self.layers.first().map_or(0, |l| l.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Backbone<T> {
    pub config: BackboneConfig,
    pub tok_emb: Mat<T>,
    pub pos_emb: Mat<T>,
    pub blocks: Vec<Block<T>>,
    pub ln_f: LayerNorm<T>,
}

/// Activations kept for the backward pass over a layer range.
pub struct LayerCaches<T> {
    blocks: Vec<BlockCache<T>>,
}

pub struct HeadCache<T> {
    ln: LnCache<T>,
    xf: Mat<T>,
}

impl<T: Scalar> Backbone<T> {
    pub fn new<R: Rng + ?Sized>(config: BackboneConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(Backbone {
            config,
            tok_emb: normal_mat(config.vocab_size, config.d_model, 0.02, rng),
            pos_emb: normal_mat(config.context, config.d_model, 0.01, rng),
            blocks: (0..config.n_layers).map(|_| Block::new(&config, rng)).collect(),
            ln_f: LayerNorm::new(config.d_model),
        })
    }

    /// Same shapes, every parameter zero (also used as a gradient buffer).
    pub fn zeros(config: BackboneConfig) -> Self {
        Backbone {
            config,
            tok_emb: Mat::zeros(config.vocab_size, config.d_model),
            pos_emb: Mat::zeros(config.context, config.d_model),
            blocks: (0..config.n_layers).map(|_| Block::zeros(&config)).collect(),
            ln_f: LayerNorm::zeros(config.d_model),
        }
    }

    pub fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.len() > self.config.context {
            return Err(LmError::TooLong {
                len: tokens.len(),
                context: self.config.context,
            });
        }
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(LmError::UnknownToken(format!("id {t}")));
        }
        Ok(())
    }

    pub fn embed(&self, tokens: &[u32]) -> Mat<T> {
        let d = self.config.d_model;
        let mut x = Mat::zeros(tokens.len(), d);
        for (p, &t) in tokens.iter().enumerate() {
            let r = x.row_mut(p);
            for ((v, &e), &q) in r.iter_mut().zip(self.tok_emb.row(t as usize)).zip(self.pos_emb.row(p)) {
                *v = e + q;
            }
        }
        x
    }

    fn embed_backward(&self, tokens: &[u32], dx: &Mat<T>, grad: &mut Backbone<T>) {
        for (p, &t) in tokens.iter().enumerate() {
            let g = dx.row(p);
            for (a, &b) in grad.tok_emb.row_mut(t as usize).iter_mut().zip(g) {
                *a += b;
            }
            for (a, &b) in grad.pos_emb.row_mut(p).iter_mut().zip(g) {
                *a += b;
            }
        }
    }

    pub fn forward_layers(&self, mut x: Mat<T>, layers: std::ops::Range<usize>) -> (Mat<T>, LayerCaches<T>) {
        let mut caches = Vec::with_capacity(layers.len());
        for l in layers {
            let (y, c) = self.blocks[l].forward(&x, self.config.n_heads);
            caches.push(c);
            x = y;
        }
        (x, LayerCaches { blocks: caches })
    }

    /// Backward over the layers whose caches are given (which must be the
    /// range ending at `end`).
    pub fn backward_layers(
        &self,
        caches: &LayerCaches<T>,
        end: usize,
        mut dx: Mat<T>,
        mut grad: Option<&mut Backbone<T>>,
    ) -> Mat<T> {
        let start = end - caches.blocks.len();
        for (i, c) in caches.blocks.iter().enumerate().rev() {
            let l = start + i;
            let g = grad.as_deref_mut().map(|g| &mut g.blocks[l]);
            dx = self.blocks[l].backward(c, &dx, self.config.n_heads, g);
        }
        dx
    }

    pub fn head(&self, x: &Mat<T>) -> (Mat<T>, HeadCache<T>) {
        let (xf, ln) = self.ln_f.forward(x);
        let logits = matmul_nt(&xf, &self.tok_emb);
        (logits, HeadCache { ln, xf })
    }

    pub fn head_backward(&self, c: &HeadCache<T>, dlogits: &Mat<T>, grad: Option<&mut Backbone<T>>) -> Mat<T> {
        let mut dxf = Mat::zeros(dlogits.rows, self.config.d_model);
        gemm(T::one(), dlogits.view(), self.tok_emb.view(), T::zero(), dxf.view_mut());
        match grad {
            Some(g) => {
                matmul_tn_acc(dlogits, &c.xf, &mut g.tok_emb);
                self.ln_f.backward(&c.ln, &dxf, Some(&mut g.ln_f))
            }
            None => self.ln_f.backward(&c.ln, &dxf, None),
        }
    }

    /// Hidden states after the first `layers` blocks.
    pub fn encode_lower(&self, tokens: &[u32], layers: usize) -> Result<Mat<T>> {
        self.check_tokens(tokens)?;
        Ok(self.forward_layers(self.embed(tokens), 0..layers).0)
    }

    /// Full-sequence logits, with optional injection after layer
    /// `injection.layer`.
    pub fn logits(&self, tokens: &[u32], injection: Option<(&InjectionModule<T>, &SoftKV<T>)>) -> Result<Mat<T>> {
        self.check_tokens(tokens)?;
        let n_layers = self.config.n_layers;
        let x = self.embed(tokens);
        let x = match injection {
            Some((fi, kv)) => {
                if fi.layer >= n_layers {
                    return Err(LmError::Shape(format!(
                        "injection layer {} must be below {n_layers}",
                        fi.layer
                    )));
                }
                let (h, _) = self.forward_layers(x, 0..fi.layer);
                let h = fi.forward(&h, kv)?;
                self.forward_layers(h, fi.layer..n_layers).0
            }
            None => self.forward_layers(x, 0..n_layers).0,
        };
        Ok(self.head(&x).0)
    }

    /// Summed next-token loss over positions whose target is not PAD and
    /// `weight_from <= position`; accumulates gradients scaled by `scale`.
    pub fn loss_and_grad(
        &self,
        tokens: &[u32],
        targets: &[Option<usize>],
        scale: T,
        grad: &mut Backbone<T>,
    ) -> Result<f64> {
        self.check_tokens(tokens)?;
        let n_layers = self.config.n_layers;
        let (x, caches) = self.forward_layers(self.embed(tokens), 0..n_layers);
        let (logits, head) = self.head(&x);
        let (loss, dlogits) = cross_entropy(&logits, targets, scale);
        let dx = self.head_backward(&head, &dlogits, Some(grad));
        let dx = self.backward_layers(&caches, n_layers, dx, Some(grad));
        self.embed_backward(tokens, &dx, grad);
        Ok(loss)
    }

    pub fn new_cache(&self) -> KvCache<T> {
        let c = &self.config;
        KvCache {
            layers: (0..c.n_layers)
                .map(|_| LayerKv {
                    k: Mat::zeros(c.context, c.d_model),
                    v: Mat::zeros(c.context, c.d_model),
                    len: 0,
                })
                .collect(),
        }
    }

    /// Appends one token at the next position and returns its logits.
    pub fn decode_step(
        &self,
        token: u32,
        cache: &mut KvCache<T>,
        injection: Option<(&InjectionModule<T>, &SoftKV<T>)>,
    ) -> Result<Vec<T>> {
        let pos = cache.len();
        if pos >= self.config.context {
            return Err(LmError::TooLong {
                len: pos + 1,
                context: self.config.context,
            });
        }
        self.check_tokens(&[token])?;
        let d = self.config.d_model;
        let mut x = Mat::zeros(1, d);
        for ((v, &e), &p) in x
            .data
            .iter_mut()
            .zip(self.tok_emb.row(token as usize))
            .zip(self.pos_emb.row(pos))
        {
            *v = e + p;
        }
        for (l, block) in self.blocks.iter().enumerate() {
            if let Some((fi, kv)) = injection {
                if fi.layer == l {
                    x = fi.forward(&x, kv)?;
                }
            }
            x = block.step(&x, self.config.n_heads, &mut cache.layers[l]);
        }
        Ok(self.head(&x).0.data)
    }
}

impl<T: Scalar> Params<T> for Backbone<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Mat<T>)) {
        f(join(prefix, "tok_emb"), &self.tok_emb);
        f(join(prefix, "pos_emb"), &self.pos_emb);
        for (i, b) in self.blocks.iter().enumerate() {
            b.visit(&join(prefix, &format!("blocks.{i}")), f);
        }
        self.ln_f.visit(&join(prefix, "ln_f"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Mat<T>)) {
        f(join(prefix, "tok_emb"), &mut self.tok_emb);
        f(join(prefix, "pos_emb"), &mut self.pos_emb);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.visit_mut(&join(prefix, &format!("blocks.{i}")), f);
        }
        self.ln_f.visit_mut(&join(prefix, "ln_f"), f);
    }
}

impl Backbone<f32> {
    pub fn to_f64(&self) -> Backbone<f64> {
        let mut out = Backbone::<f64>::zeros(self.config);
        let src = self.named();
        let mut i = 0;
        out.visit_mut("", &mut |_, m| {
            *m = src[i].1.cast();
            i += 1;
        });
        out
    }
}
