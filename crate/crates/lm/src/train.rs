//! Backbone pretraining and injection-module training.

use std::collections::HashMap;

use fragrag_chem::{
    knn_indices, slice_arm_linker_arm, to_safe, write_smiles, Fragment, FragmentKind, GenerationTask,
    IndexedFragment, MolGraph, Slicing,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{Backbone, BackboneConfig};
use crate::error::{LmError, Result};
use crate::generate::{LanguageModel, SoftCache};
use crate::injection::InjectionModule;
use crate::mat::Scalar;
use crate::nn::{cross_entropy, log_prob, Params};
use crate::optim::{Adam, AdamConfig};
use crate::tokenizer::{TokenVocab, BOS, EOS, PAD};

/// SAFE training text for one molecule: a random slicing written in a random
/// block order, or plain SMILES when the molecule does not slice.
pub fn safe_training_text<R: Rng + ?Sized>(g: &MolGraph, rng: &mut R) -> String {
    match slice_arm_linker_arm(g, rng) {
        Some(s) => {
            let mut order = [0, 1, 2];
            order.shuffle(rng);
            to_safe(&s.into_vec(), &order)
                .map(|s| s.as_str().to_string())
                .unwrap_or_else(|_| write_smiles(g))
        }
        None => write_smiles(g),
    }
}

/// Next-token targets for `seq`; positions whose target is PAD get `None`.
pub fn next_token_targets(seq: &[u32]) -> Vec<Option<usize>> {
    seq[1..]
        .iter()
        .map(|&t| (t != PAD).then_some(t as usize))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub weight_decay: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 10,
            lr: 3e-3,
            batch_size: 16,
            warmup_steps: 100,
            weight_decay: 0.0,
        }
    }
}

/// Linear warmup, then cosine decay to a tenth of the peak.
fn lr_scale(step: usize, total: usize, warmup: usize) -> f64 {
    if step < warmup {
        return (step + 1) as f64 / warmup as f64;
    }
    let span = total.saturating_sub(warmup).max(1);
    let t = ((step - warmup) as f64 / span as f64).min(1.0);
    0.1 + 0.9 * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean per-token loss of each batch.
    pub batch_losses: Vec<f64>,
    pub skipped: usize,
}

/// Encodes texts as BOS + tokens + EOS, dropping those that do not fit the
/// context or contain unknown tokens.
pub fn encode_corpus(texts: &[String], vocab: &TokenVocab, context: usize) -> (Vec<Vec<u32>>, usize) {
    let mut out = Vec::with_capacity(texts.len());
    let mut skipped = 0;
    for t in texts {
        match vocab.encode(t) {
            // the model reads all but the last token
            Ok(ids) if ids.len() + 1 <= context => {
                let mut seq = Vec::with_capacity(ids.len() + 2);
                seq.push(BOS);
                seq.extend(ids);
                seq.push(EOS);
                out.push(seq);
            }
            _ => skipped += 1,
        }
    }
    (out, skipped)
}

/// Next-token training of a fresh backbone on SAFE texts.
pub fn pretrain_backbone<R: Rng + ?Sized>(
    texts: &[String],
    vocab: &TokenVocab,
    config: BackboneConfig,
    hp: &PretrainConfig,
    rng: &mut R,
    mut progress: impl FnMut(usize, f64),
) -> Result<(Backbone<f32>, TrainReport)> {
    if texts.is_empty() {
        return Err(LmError::NoData("empty pretraining corpus".into()));
    }
    let (seqs, skipped) = encode_corpus(texts, vocab, config.context);
    if seqs.is_empty() {
        return Err(LmError::NoData("no text fits the context".into()));
    }
    let mut model = Backbone::<f32>::new(config, rng)?;
    let mut grad = Backbone::<f32>::zeros(config);
    let mut opt = Adam::new(
        AdamConfig {
            weight_decay: hp.weight_decay,
            ..AdamConfig::with_lr(hp.lr)
        },
        &model,
    );
    let batch = hp.batch_size.max(1);
    let total_steps = hp.epochs * seqs.len().div_ceil(batch);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::new(),
        batch_losses: Vec::new(),
        skipped,
    };
    for epoch in 0..hp.epochs {
        order.shuffle(rng);
        let (mut epoch_loss, mut epoch_tokens) = (0.0, 0usize);
        for chunk in order.chunks(batch) {
            let count: usize = chunk.iter().map(|&i| seqs[i].len() - 1).sum();
            let scale = 1.0 / count as f32;
            grad.zero_all();
            let mut loss = 0.0;
            for &i in chunk {
                let seq = &seqs[i];
                let targets = next_token_targets(seq);
                loss += model.loss_and_grad(&seq[..seq.len() - 1], &targets, scale, &mut grad)?;
            }
            let s = lr_scale(opt.steps() as usize, total_steps, hp.warmup_steps);
            opt.step(&mut model, &grad, s);
            report.batch_losses.push(loss / count as f64);
            epoch_loss += loss;
            epoch_tokens += count;
        }
        let mean = epoch_loss / epoch_tokens as f64;
        report.epoch_losses.push(mean);
        progress(epoch, mean);
    }
    Ok((model, report))
}

/// One self-supervised example: the prefix of two hard fragments, the soft
/// set (the held-out fragment and its 2nd..K-th neighbours) and, as target,
/// its nearest neighbour written as the completion block.
#[derive(Debug, Clone)]
pub struct InjectionExample {
    pub task: GenerationTask,
    pub held_out: Fragment,
    pub soft: Vec<Fragment>,
    pub target: Fragment,
    /// BOS + prompt tokens.
    pub prompt: Vec<u32>,
    /// Target block tokens + EOS.
    pub target_ids: Vec<u32>,
}

impl InjectionExample {
    pub fn sequence(&self) -> Vec<u32> {
        let mut s = self.prompt.clone();
        s.extend(&self.target_ids);
        s
    }

    /// Targets over the model input `sequence()[..len-1]`: only target
    /// tokens and EOS are scored.
    pub fn targets(&self) -> Vec<Option<usize>> {
        let seq = self.sequence();
        (1..seq.len())
            .map(|p| (p >= self.prompt.len()).then_some(seq[p] as usize))
            .collect()
    }
}

/// Fragment pools (one per kind, unique by key) from a set of slicings.
pub struct FragmentPools {
    pub arms: Vec<IndexedFragment>,
    pub linkers: Vec<IndexedFragment>,
}

impl FragmentPools {
    pub fn from_slicings(slicings: &[Slicing]) -> Self {
        let mut seen: HashMap<String, ()> = HashMap::new();
        let mut arms = Vec::new();
        let mut linkers = Vec::new();
        for s in slicings {
            for f in s.fragments() {
                let ix = IndexedFragment::new(f.clone());
                if seen.insert(ix.key.clone(), ()).is_none() {
                    match f.kind() {
                        FragmentKind::Arm => arms.push(ix),
                        FragmentKind::Linker => linkers.push(ix),
                    }
                }
            }
        }
        // key order keeps the pools independent of slicing order
        arms.sort_by(|a, b| a.key.cmp(&b.key));
        linkers.sort_by(|a, b| a.key.cmp(&b.key));
        FragmentPools { arms, linkers }
    }

    pub fn pool(&self, kind: FragmentKind) -> &[IndexedFragment] {
        match kind {
            FragmentKind::Arm => &self.arms,
            FragmentKind::Linker => &self.linkers,
        }
    }
}

/// Task and held-out fragment for a slicing under a block permutation;
/// `perm[2]` is the held-out position (0 arm1, 1 linker, 2 arm2).
pub fn task_for_permutation(s: &Slicing, perm: [usize; 3]) -> Result<(GenerationTask, Fragment)> {
    let task = match perm[2] {
        1 => GenerationTask::linker_design(&s.arm1, &s.arm2, perm[0] == 2)?,
        0 => GenerationTask::motif_extension(&s.arm2, &s.linker, 1, perm[0] == 1)?,
        _ => GenerationTask::motif_extension(&s.arm1, &s.linker, 0, perm[0] == 1)?,
    };
    let held = match perm[2] {
        0 => s.arm1.clone(),
        1 => s.linker.clone(),
        _ => s.arm2.clone(),
    };
    Ok((task, held))
}

/// Builds examples from molecules: one random slicing and block permutation
/// per molecule; undecomposable molecules and those whose kind pool holds
/// fewer than `k` other fragments are skipped.
pub fn build_injection_examples<R: Rng + ?Sized>(
    molecules: &[MolGraph],
    k: usize,
    vocab: &TokenVocab,
    context: usize,
    rng: &mut R,
) -> Result<Vec<InjectionExample>> {
    if k == 0 {
        return Err(LmError::NoData("k must be positive".into()));
    }
    let slicings: Vec<Slicing> = molecules.iter().filter_map(|g| slice_arm_linker_arm(g, rng)).collect();
    let pools = FragmentPools::from_slicings(&slicings);
    let mut out = Vec::new();
    for s in &slicings {
        let mut perm = [0, 1, 2];
        perm.shuffle(rng);
        let (task, held) = task_for_permutation(s, perm)?;
        let pool = pools.pool(held.kind());
        let Ok(nn) = knn_indices(&held.canonical_key(), &held.fingerprint(), pool, k) else {
            continue;
        };
        let target = pool[nn[0]].fragment.clone();
        let mut soft = vec![held.clone()];
        soft.extend(nn[1..].iter().map(|&i| pool[i].fragment.clone()));
        let Ok(block) = task.target_block(&target) else { continue };
        let (Ok(p), Ok(t)) = (vocab.encode(&task.prompt()), vocab.encode(&block)) else {
            continue;
        };
        let mut prompt = vec![BOS];
        prompt.extend(p);
        let mut target_ids = t;
        target_ids.push(EOS);
        if prompt.len() + target_ids.len() > context + 1 {
            continue;
        }
        out.push(InjectionExample {
            task,
            held_out: held,
            soft,
            target,
            prompt,
            target_ids,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InjectionConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub layer: usize,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            epochs: 8,
            lr: 1e-4,
            batch_size: 8,
            layer: 1,
        }
    }
}

/// Loss of one example and, when `grad` is given, gradients of the injection
/// parameters only. The backbone is read-only throughout.
fn injection_loss(
    lm: &LanguageModel,
    fi: &InjectionModule<f32>,
    ex: &InjectionExample,
    cache: &mut SoftCache,
    scale: f32,
    grad: Option<&mut InjectionModule<f32>>,
) -> Result<(f64, usize)> {
    let bb = &lm.backbone;
    let seq = ex.sequence();
    let input = &seq[..seq.len() - 1];
    let targets = ex.targets();
    let h_soft = cache.h_soft(lm, &ex.soft)?;
    let h_in = bb.encode_lower(input, fi.layer)?;
    let (h, fi_cache) = fi.forward_train(&h_in, &h_soft)?;
    let n = bb.config.n_layers;
    let (x, caches) = bb.forward_layers(h, fi.layer..n);
    let (logits, head) = bb.head(&x);
    let (loss, dlogits) = cross_entropy(&logits, &targets, scale);
    if let Some(g) = grad {
        let dx = bb.head_backward(&head, &dlogits, None);
        let dx = bb.backward_layers(&caches, n, dx, None);
        fi.backward(&fi_cache, &dx, g);
    }
    Ok((loss, ex.target_ids.len()))
}

/// Trains a fresh injection module on `examples` with the backbone frozen.
pub fn train_injection<R: Rng + ?Sized>(
    lm: &LanguageModel,
    examples: &[InjectionExample],
    hp: &InjectionConfig,
    rng: &mut R,
    mut progress: impl FnMut(usize, f64),
) -> Result<(InjectionModule<f32>, TrainReport)> {
    if examples.is_empty() {
        return Err(LmError::NoData("no injection training examples".into()));
    }
    let d = lm.backbone.config.d_model;
    if hp.layer == 0 || hp.layer >= lm.backbone.config.n_layers {
        return Err(LmError::Shape(format!(
            "injection layer {} must lie in 1..{}",
            hp.layer, lm.backbone.config.n_layers
        )));
    }
    let mut fi = InjectionModule::<f32>::new(d, hp.layer, rng);
    let mut grad = InjectionModule::<f32>::zeros(d, hp.layer);
    let mut opt = Adam::new(AdamConfig::with_lr(hp.lr), &fi);
    let mut cache = SoftCache::new(hp.layer);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::new(),
        batch_losses: Vec::new(),
        skipped: 0,
    };
    for epoch in 0..hp.epochs {
        order.shuffle(rng);
        let (mut epoch_loss, mut epoch_tokens) = (0.0, 0usize);
        for chunk in order.chunks(hp.batch_size.max(1)) {
            let count: usize = chunk.iter().map(|&i| examples[i].target_ids.len()).sum();
            let scale = 1.0 / count as f32;
            grad.zero_all();
            let mut loss = 0.0;
            for &i in chunk {
                loss += injection_loss(lm, &fi, &examples[i], &mut cache, scale, Some(&mut grad))?.0;
            }
            opt.step(&mut fi, &grad, 1.0);
            report.batch_losses.push(loss / count as f64);
            epoch_loss += loss;
            epoch_tokens += count;
        }
        let mean = epoch_loss / epoch_tokens as f64;
        report.epoch_losses.push(mean);
        progress(epoch, mean);
    }
    Ok((fi, report))
}

/// Summed log-likelihood of the target block and EOS. Without an injection
/// module this is the plain backbone.
pub fn target_log_likelihood(
    lm: &LanguageModel,
    fi: Option<&InjectionModule<f32>>,
    ex: &InjectionExample,
    cache: &mut SoftCache,
) -> Result<f64> {
    let seq = ex.sequence();
    let input = &seq[..seq.len() - 1];
    let logits = match fi {
        Some(fi) => {
            let kv = fi.soft_kv(&cache.h_soft(lm, &ex.soft)?)?;
            lm.backbone.logits(input, Some((fi, &kv)))?
        }
        None => lm.backbone.logits(input, None)?,
    };
    Ok(ex
        .targets()
        .iter()
        .enumerate()
        .filter_map(|(p, t)| t.map(|t| log_prob(logits.row(p), t)))
        .sum())
}

/// Count of trainable parameters a training run would update.
pub fn trainable_parameter_count<T: Scalar>(fi: &InjectionModule<T>) -> usize {
    fi.param_count()
}
