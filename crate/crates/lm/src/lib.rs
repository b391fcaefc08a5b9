//! Language-model side: SAFE tokenizer, a small causal transformer, the
//! fragment injection module, decoding and both training loops.

pub mod backbone;
pub mod checkpoint;
pub mod generate;
pub mod error;
pub mod injection;
pub mod mat;
pub mod nn;
pub mod optim;
pub mod tokenizer;
pub mod train;

pub use backbone::{Backbone, BackboneConfig, KvCache};
pub use checkpoint::Checkpoint;
pub use error::{LmError, Result};
pub use injection::{InjectionModule, SoftKV};
pub use mat::{Mat, Scalar};
pub use nn::Params;
pub use optim::{Adam, AdamConfig};
pub use tokenizer::{TokenVocab, BOS, EOS, PAD};
pub use generate::{load_injection, sample_token, save_injection, Generator, LanguageModel, Sampling, SoftCache};
pub use train::{
    build_injection_examples, pretrain_backbone, safe_training_text, target_log_likelihood, train_injection,
    InjectionConfig, InjectionExample, PretrainConfig, TrainReport,
};
