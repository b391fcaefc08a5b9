//! Model bundle, soft-fragment embedding cache and sampling-based decoding.

use std::collections::HashMap;
use std::path::Path;

use fragrag_chem::{Completion, Fragment, GenerationTask, MolGraph, SafeString};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{Backbone, BackboneConfig};
use crate::checkpoint::Checkpoint;
use crate::error::{LmError, Result};
use crate::injection::{InjectionModule, SoftKV};
use crate::mat::Mat;
use crate::tokenizer::{TokenVocab, BOS, EOS, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// 0 means greedy decoding.
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
    pub retries: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            temperature: 1.0,
            top_p: 0.95,
            max_tokens: 64,
            retries: 10,
        }
    }
}

/// Draws a token id from logits. PAD and BOS are never produced.
pub fn sample_token<R: Rng + ?Sized>(logits: &[f32], s: &Sampling, rng: &mut R) -> u32 {
    let allowed = |i: usize| i as u32 != PAD && i as u32 != BOS;
    if s.temperature <= 0.0 {
        let mut best = usize::MAX;
        for i in (0..logits.len()).filter(|&i| allowed(i)) {
            if best == usize::MAX || logits[i] > logits[best] {
                best = i;
            }
        }
        return best as u32;
    }
    let max = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| allowed(i))
        .map(|(_, &v)| v as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<(usize, f64)> = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| allowed(i))
        .map(|(i, &v)| (i, ((v as f64 - max) / s.temperature).exp()))
        .collect();
    let total: f64 = probs.iter().map(|p| p.1).sum();
    probs.iter_mut().for_each(|p| p.1 /= total);
    probs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut cum = 0.0;
    let mut keep = probs.len();
    for (i, p) in probs.iter().enumerate() {
        cum += p.1;
        if cum >= s.top_p {
            keep = i + 1;
            break;
        }
    }
    let nucleus = &probs[..keep];
    let mass: f64 = nucleus.iter().map(|p| p.1).sum();
    let mut u = rng.gen::<f64>() * mass;
    for p in nucleus {
        if u < p.1 {
            return p.0 as u32;
        }
        u -= p.1;
    }
    nucleus[nucleus.len() - 1].0 as u32
}

/// Tokenizer plus backbone weights.
#[derive(Debug, Clone)]
pub struct LanguageModel {
    pub vocab: TokenVocab,
    pub backbone: Backbone<f32>,
}

#[derive(Serialize, Deserialize)]
struct BackboneMeta {
    config: BackboneConfig,
    tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct InjectionMeta {
    d_model: usize,
    layer: usize,
}

impl LanguageModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = BackboneMeta {
            config: self.backbone.config,
            tokens: self.vocab.tokens().to_vec(),
        };
        let meta = serde_json::to_value(meta).map_err(|e| LmError::Checkpoint(e.to_string()))?;
        Checkpoint::save(path, "backbone", meta, &self.backbone)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        ck.expect_kind("backbone")?;
        let meta: BackboneMeta =
            serde_json::from_value(ck.meta.clone()).map_err(|e| LmError::Checkpoint(e.to_string()))?;
        meta.config.validate()?;
        let vocab = TokenVocab::rebuild(meta.tokens);
        if vocab.len() != meta.config.vocab_size {
            return Err(LmError::Checkpoint("token list does not match vocab_size".into()));
        }
        let mut backbone = Backbone::zeros(meta.config);
        ck.fill(&mut backbone)?;
        Ok(LanguageModel { vocab, backbone })
    }

    /// Hidden states after `layers` blocks for `text` (no BOS).
    pub fn encode_lower(&self, text: &str, layers: usize) -> Result<Mat<f32>> {
        let ids = self.vocab.encode(text)?;
        self.backbone.encode_lower(&ids, layers)
    }
}

pub fn save_injection(fi: &InjectionModule<f32>, path: &Path) -> Result<()> {
    let meta = serde_json::to_value(InjectionMeta {
        d_model: fi.d_model,
        layer: fi.layer,
    })
    .map_err(|e| LmError::Checkpoint(e.to_string()))?;
    Checkpoint::save(path, "injection", meta, fi)
}

pub fn load_injection(path: &Path) -> Result<InjectionModule<f32>> {
    let ck = Checkpoint::load(path)?;
    ck.expect_kind("injection")?;
    let meta: InjectionMeta =
        serde_json::from_value(ck.meta.clone()).map_err(|e| LmError::Checkpoint(e.to_string()))?;
    let mut fi = InjectionModule::zeros(meta.d_model, meta.layer);
    ck.fill(&mut fi)?;
    Ok(fi)
}

/// Text a soft fragment is embedded from: its `[*]` storage form.
pub fn soft_text(f: &Fragment) -> String {
    f.to_smiles()
}

/// Lower-layer hidden states per soft fragment. Valid while the backbone and
/// injection layer stay fixed.
#[derive(Debug, Default)]
pub struct SoftCache {
    layer: usize,
    map: HashMap<String, Mat<f32>>,
}

impl SoftCache {
    pub fn new(layer: usize) -> Self {
        SoftCache {
            layer,
            map: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn fragment(&mut self, lm: &LanguageModel, f: &Fragment) -> Result<&Mat<f32>> {
        let text = soft_text(f);
        if !self.map.contains_key(&text) {
            let h = lm.encode_lower(&text, self.layer)?;
            self.map.insert(text.clone(), h);
        }
        Ok(&self.map[&text])
    }

    /// Concatenation of the per-fragment states along the sequence axis.
    pub fn h_soft(&mut self, lm: &LanguageModel, soft: &[Fragment]) -> Result<Mat<f32>> {
        let d = lm.backbone.config.d_model;
        let mut data = Vec::new();
        let mut rows = 0;
        for f in soft {
            let h = self.fragment(lm, f)?;
            rows += h.rows;
            data.extend_from_slice(&h.data);
        }
        Ok(Mat::from_vec(rows, d, data))
    }
}

pub struct Generator<'a> {
    pub lm: &'a LanguageModel,
    pub injection: Option<&'a InjectionModule<f32>>,
    pub sampling: Sampling,
}

impl<'a> Generator<'a> {
    pub fn new(lm: &'a LanguageModel, injection: Option<&'a InjectionModule<f32>>, sampling: Sampling) -> Self {
        Generator {
            lm,
            injection,
            sampling,
        }
    }

    /// Samples continuation ids after `prompt` up to EOS (excluded). `None`
    /// when the length cap or the context is reached first.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        prompt: &[u32],
        soft: Option<&SoftKV<f32>>,
        rng: &mut R,
    ) -> Result<Option<Vec<u32>>> {
        let bb = &self.lm.backbone;
        let inject = match (self.injection, soft) {
            (Some(fi), Some(kv)) => Some((fi, kv)),
            _ => None,
        };
        let mut cache = bb.new_cache();
        let mut logits = Vec::new();
        for &t in prompt {
            logits = bb.decode_step(t, &mut cache, inject)?;
        }
        let mut out = Vec::new();
        while out.len() < self.sampling.max_tokens {
            let t = sample_token(&logits, &self.sampling, rng);
            if t == EOS {
                return Ok(Some(out));
            }
            out.push(t);
            if cache.len() >= bb.config.context {
                return Ok(None);
            }
            logits = bb.decode_step(t, &mut cache, inject)?;
        }
        Ok(None)
    }

    pub fn soft_kv(&self, soft: &[Fragment], cache: &mut SoftCache) -> Result<Option<SoftKV<f32>>> {
        match self.injection {
            Some(fi) if !soft.is_empty() => {
                let h = cache.h_soft(self.lm, soft)?;
                Ok(Some(fi.soft_kv(&h)?))
            }
            _ => Ok(None),
        }
    }

    /// Completes `task` guided by `soft`, retrying on invalid output.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        task: &GenerationTask,
        soft: &[Fragment],
        cache: &mut SoftCache,
        rng: &mut R,
    ) -> Result<Option<Completion>> {
        let kv = self.soft_kv(soft, cache)?;
        let mut prompt = vec![BOS];
        prompt.extend(self.lm.vocab.encode(&task.prompt())?);
        for _ in 0..self.sampling.retries.max(1) {
            let Some(ids) = self.decode(&prompt, kv.as_ref(), rng)? else {
                continue;
            };
            let block = self.lm.vocab.decode(&ids);
            if let Ok(c) = task.complete(&block) {
                if c.molecule.validate().is_ok() {
                    return Ok(Some(c));
                }
            }
        }
        Ok(None)
    }

    /// One unconditional SAFE string from BOS.
    pub fn sample_text<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<String>> {
        Ok(self.decode(&[BOS], None, rng)?.map(|ids| self.lm.vocab.decode(&ids)))
    }

    /// An unconditional molecule, retrying on invalid output.
    pub fn sample_molecule<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<MolGraph>> {
        for _ in 0..self.sampling.retries.max(1) {
            if let Some(text) = self.sample_text(rng)? {
                if let Some(g) = valid_molecule(text) {
                    return Ok(Some(g));
                }
            }
        }
        Ok(None)
    }

    /// Fraction of `n` single unconditional samples that assemble into a
    /// molecule passing full validation.
    pub fn validity_rate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<f64> {
        let mut ok = 0;
        for _ in 0..n {
            if let Some(text) = self.sample_text(rng)? {
                ok += valid_molecule(text).is_some() as usize;
            }
        }
        Ok(ok as f64 / n.max(1) as f64)
    }
}

/// Assembly checks valence and connectivity; validation adds aromatic
/// consistency.
fn valid_molecule(text: String) -> Option<MolGraph> {
    let g = SafeString::new(text).assemble().ok()?;
    g.validate().ok()?;
    Some(g)
}
