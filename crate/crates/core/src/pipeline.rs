//! End-to-end steps shared by the command line and the acceptance suite:
//! corpus labelling, backbone pretraining and injection training.

use std::collections::HashSet;

use fragrag_chem::{canonical_key, corpus::CorpusRecord, MolGraph};
use fragrag_lm::{
    build_injection_examples, pretrain_backbone, safe_training_text, train_injection, InjectionExample,
    InjectionModule, LanguageModel, TokenVocab, TrainReport,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::LmSection;
use crate::error::Result;
use crate::oracles::{Oracle, OracleSpec};

/// Corpus molecules labelled with a fresh instance of the run oracle, so the
/// run's own call counter is untouched. Molecules isomorphic to anything in
/// `holdout` are dropped.
pub fn label_dataset(records: &[CorpusRecord], spec: Option<&OracleSpec>, holdout: &HashSet<String>) -> Result<Vec<(MolGraph, f64)>> {
    let oracle = spec.map(|s| Oracle::new(s.clone())).transpose()?;
    Ok(records
        .iter()
        .filter(|r| holdout.is_empty() || !holdout.contains(&canonical_key(&r.graph)))
        .map(|r| {
            let y = oracle.as_ref().map_or(r.property, |o| o.evaluate(&r.graph));
            (r.graph.clone(), y)
        })
        .collect())
}

/// Key of a similarity target, used to hold it out of the training data.
pub fn oracle_holdout(spec: Option<&OracleSpec>) -> HashSet<String> {
    let mut out = HashSet::new();
    let mut stack: Vec<&OracleSpec> = spec.into_iter().collect();
    while let Some(s) = stack.pop() {
        match s {
            OracleSpec::Similarity { target } => {
                if let Ok(g) = fragrag_chem::parse_smiles(target) {
                    out.insert(canonical_key(&g));
                }
            }
            OracleSpec::Product { components } => stack.extend(components),
            _ => {}
        }
    }
    out
}

/// SAFE training texts and the token vocabulary they induce.
pub fn training_texts(molecules: &[MolGraph], seed: u64) -> Result<(Vec<String>, TokenVocab)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts: Vec<String> = molecules.iter().map(|g| safe_training_text(g, &mut rng)).collect();
    let vocab = TokenVocab::from_texts(texts.iter().map(String::as_str))?;
    Ok((texts, vocab))
}

pub fn pretrain_lm(
    molecules: &[MolGraph],
    section: &LmSection,
    seed: u64,
    progress: impl FnMut(usize, f64),
) -> Result<(LanguageModel, TrainReport)> {
    let (texts, vocab) = training_texts(molecules, seed)?;
    let config = section.backbone_config(vocab.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let (backbone, report) = pretrain_backbone(&texts, &vocab, config, &section.pretrain(), &mut rng, progress)?;
    Ok((LanguageModel { vocab, backbone }, report))
}

/// Injection examples from `molecules`, split into training and held-out
/// parts (the last `holdout_fraction` of the shuffled examples).
pub fn injection_examples(
    lm: &LanguageModel,
    molecules: &[MolGraph],
    k: usize,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<InjectionExample>, Vec<InjectionExample>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = build_injection_examples(molecules, k, &lm.vocab, lm.backbone.config.context, &mut rng)?;
    rand::seq::SliceRandom::shuffle(examples.as_mut_slice(), &mut rng);
    let n_hold = (examples.len() as f64 * holdout_fraction).round() as usize;
    let held = examples.split_off(examples.len() - n_hold);
    Ok((examples, held))
}

pub fn train_injection_model(
    lm: &LanguageModel,
    examples: &[InjectionExample],
    section: &LmSection,
    seed: u64,
    progress: impl FnMut(usize, f64),
) -> Result<(InjectionModule<f32>, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(train_injection(lm, examples, &section.injection(), &mut rng, progress)?)
}
