//! TOML configuration with `[data]`, `[vocab]`, `[lm]`, `[ga]`, `[run]` and
//! `[oracle]` sections. Unknown keys are errors.

use std::path::{Path, PathBuf};

use fragrag_lm::{BackboneConfig, InjectionConfig, PretrainConfig, Sampling};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::genetic::{GaConfig, MutationWeights};
use crate::optimizer::{RunConfig, Variant};
use crate::oracles::OracleSpec;
use crate::vocab::VocabConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub corpus: PathBuf,
    /// Use only the first `limit` corpus records.
    pub limit: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            corpus: PathBuf::from("data/corpus.tsv"),
            limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub n_frag: usize,
    pub delta: Option<f64>,
    pub frag_min_atoms: usize,
    pub frag_max_atoms: usize,
}

impl Default for VocabSection {
    fn default() -> Self {
        let v = VocabConfig::default();
        VocabSection {
            n_frag: v.n_frag,
            delta: v.delta,
            frag_min_atoms: v.frag_min_atoms,
            frag_max_atoms: v.frag_max_atoms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSection {
    pub backbone: PathBuf,
    pub injection: PathBuf,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub context: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub layer: usize,
    pub injection_epochs: usize,
    pub injection_lr: f64,
    pub injection_batch_size: usize,
    /// Molecules used to build injection training examples.
    pub injection_molecules: usize,
    pub k_soft: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
    pub retries: usize,
}

impl Default for LmSection {
    fn default() -> Self {
        let bb = BackboneConfig::desk(0);
        let pre = PretrainConfig::default();
        let inj = InjectionConfig::default();
        let s = Sampling::default();
        LmSection {
            backbone: PathBuf::from("models/backbone.bin"),
            injection: PathBuf::from("models/injection.bin"),
            d_model: bb.d_model,
            n_layers: bb.n_layers,
            n_heads: bb.n_heads,
            context: bb.context,
            epochs: pre.epochs,
            lr: pre.lr,
            batch_size: pre.batch_size,
            warmup_steps: pre.warmup_steps,
            layer: inj.layer,
            injection_epochs: inj.epochs,
            injection_lr: inj.lr,
            injection_batch_size: inj.batch_size,
            injection_molecules: 5000,
            k_soft: 10,
            temperature: s.temperature,
            top_p: s.top_p,
            max_tokens: s.max_tokens,
            retries: s.retries,
        }
    }
}

impl LmSection {
    pub fn backbone_config(&self, vocab_size: usize) -> BackboneConfig {
        BackboneConfig {
            vocab_size,
            d_model: self.d_model,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            context: self.context,
        }
    }

    pub fn pretrain(&self) -> PretrainConfig {
        PretrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            warmup_steps: self.warmup_steps,
            ..PretrainConfig::default()
        }
    }

    pub fn injection(&self) -> InjectionConfig {
        InjectionConfig {
            epochs: self.injection_epochs,
            lr: self.injection_lr,
            batch_size: self.injection_batch_size,
            layer: self.layer,
        }
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
            retries: self.retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub mutation_rate: f64,
    pub n_mol: usize,
    pub crossover_retries: usize,
    /// Relative weights of insert-atom, change-bond-order, delete-ring-bond,
    /// add-ring, delete-atom, change-atom and append-atom.
    pub mutation_weights: [f64; 7],
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        GaSection {
            mutation_rate: g.mutation_rate,
            n_mol: g.n_mol,
            crossover_retries: g.crossover_retries,
            mutation_weights: g.weights.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub budget: usize,
    pub g_lm_per_cycle: usize,
    pub g_ga_per_cycle: usize,
    pub mol_min_atoms: usize,
    pub mol_max_atoms: usize,
    pub max_stall: usize,
    pub variant: Variant,
}

impl Default for RunSection {
    fn default() -> Self {
        let r = RunConfig::default();
        RunSection {
            budget: r.budget,
            g_lm_per_cycle: r.g_lm_per_cycle,
            g_ga_per_cycle: r.g_ga_per_cycle,
            mol_min_atoms: r.mol_min_atoms,
            mol_max_atoms: r.mol_max_atoms,
            max_stall: r.max_stall,
            variant: r.variant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataSection,
    pub vocab: VocabSection,
    pub lm: LmSection,
    pub ga: GaSection,
    pub run: RunSection,
    pub oracle: Option<OracleSpec>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            n_frag: self.vocab.n_frag,
            delta: self.vocab.delta,
            frag_min_atoms: self.vocab.frag_min_atoms,
            frag_max_atoms: self.vocab.frag_max_atoms,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            budget: self.run.budget,
            g_lm_per_cycle: self.run.g_lm_per_cycle,
            g_ga_per_cycle: self.run.g_ga_per_cycle,
            k_soft: self.lm.k_soft,
            mol_min_atoms: self.run.mol_min_atoms,
            mol_max_atoms: self.run.mol_max_atoms,
            max_stall: self.run.max_stall,
            variant: self.run.variant,
            vocab: self.vocab_config(),
            ga: GaConfig {
                mutation_rate: self.ga.mutation_rate,
                n_mol: self.ga.n_mol,
                crossover_retries: self.ga.crossover_retries,
                weights: MutationWeights(self.ga.mutation_weights),
            },
            sampling: self.lm.sampling(),
        }
    }
}
