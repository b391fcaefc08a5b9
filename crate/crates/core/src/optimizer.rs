//! The generation loop: cycles of retrieval-augmented LM generations and GA
//! generations feeding one deduplicated, budgeted set of molecules.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};

use fragrag_chem::{canonical_key, write_smiles, MolGraph};
use fragrag_lm::{Generator, InjectionModule, LanguageModel, LmError, Sampling, SoftCache};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::genetic::{ga_offspring, GaConfig, Population};
use crate::oracles::Oracle;
use crate::retrieval::{sample_hard, sample_soft};
use crate::vocab::{FragmentVocabulary, VocabConfig};

/// Which generator drives the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Hard and soft retrieval plus GA.
    Full,
    /// Hard retrieval plus GA; the injection module is bypassed.
    NoSoft,
    /// Unconditional samples from the backbone only.
    RandomLm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub budget: usize,
    pub g_lm_per_cycle: usize,
    pub g_ga_per_cycle: usize,
    pub k_soft: usize,
    pub mol_min_atoms: usize,
    pub mol_max_atoms: usize,
    /// Generation attempts in a row without a new evaluation before the run
    /// gives up.
    pub max_stall: usize,
    pub variant: Variant,
    pub vocab: VocabConfig,
    pub ga: GaConfig,
    pub sampling: Sampling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget: 2000,
            g_lm_per_cycle: 10,
            g_ga_per_cycle: 10,
            k_soft: 10,
            mol_min_atoms: 10,
            mol_max_atoms: 30,
            max_stall: 5000,
            variant: Variant::Full,
            vocab: VocabConfig::default(),
            ga: GaConfig::default(),
            sampling: Sampling::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.vocab.validate()?;
        let positive = [
            ("g_lm_per_cycle", self.g_lm_per_cycle),
            ("k_soft", self.k_soft),
            ("n_mol", self.ga.n_mol),
            ("max_stall", self.max_stall),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(CoreError::Config(format!("{name} must be positive")));
            }
        }
        if self.mol_min_atoms > self.mol_max_atoms {
            return Err(CoreError::Config("mol_min_atoms exceeds mol_max_atoms".into()));
        }
        if !(0.0..=1.0).contains(&self.ga.mutation_rate) {
            return Err(CoreError::Config("mutation_rate outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Lm,
    Ga,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Lm => "lm",
            Source::Ga => "ga",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub call: usize,
    pub y: f64,
    pub source: Source,
    pub smiles: String,
    pub key: String,
}

/// Outcome of one generation attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Evaluated(f64),
    Duplicate,
    /// Outside the molecule size window or failing validation.
    Rejected,
    /// The generator produced nothing usable.
    Failed,
}

pub struct RunState {
    pub history: Vec<HistoryEntry>,
    pub molecules: Vec<MolGraph>,
    pub index: HashMap<String, usize>,
    pub population: Population,
    pub vocab: FragmentVocabulary,
    pub calls: usize,
    pub stalled: bool,
    pub interrupted: bool,
}

impl RunState {
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("call,y,source,smiles\n");
    for h in history {
        out.push_str(&format!("{},{:.17},{},{}\n", h.call, h.y, h.source.as_str(), h.smiles));
    }
    out
}

pub struct Optimizer<'a> {
    pub config: RunConfig,
    pub state: RunState,
    oracle: &'a Oracle,
    generator: Option<Generator<'a>>,
    soft_cache: SoftCache,
    rng: ChaCha8Rng,
}

/// Errors that mean "this prompt cannot be fed to the model" rather than a
/// broken run: fragments with tokens the model never saw, or too long.
fn generation_miss(e: &LmError) -> bool {
    matches!(
        e,
        LmError::Tokenize { .. } | LmError::UnknownToken(_) | LmError::TooLong { .. }
    )
}

impl<'a> Optimizer<'a> {
    /// Builds the initial vocabulary from `dataset`. `lm` may be `None` only
    /// when `g_lm_per_cycle` generation is not needed (tests of the GA path
    /// use an all-GA schedule).
    pub fn new(
        config: RunConfig,
        dataset: &[(MolGraph, f64)],
        oracle: &'a Oracle,
        lm: Option<&'a LanguageModel>,
        injection: Option<&'a InjectionModule<f32>>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = FragmentVocabulary::build_initial(dataset, config.vocab, &mut rng)?;
        let injection = match config.variant {
            Variant::Full => injection,
            _ => None,
        };
        let layer = injection.map_or(1, |fi| fi.layer);
        Ok(Optimizer {
            state: RunState {
                history: Vec::new(),
                molecules: Vec::new(),
                index: HashMap::new(),
                population: Population::new(config.ga.n_mol),
                vocab,
                calls: 0,
                stalled: false,
                interrupted: false,
            },
            generator: lm.map(|lm| Generator::new(lm, injection, config.sampling)),
            oracle,
            soft_cache: SoftCache::new(layer),
            rng,
            config,
        })
    }

    pub fn budget_left(&self) -> bool {
        self.state.calls < self.config.budget
    }

    /// Size gate, dedup, one oracle call, then vocabulary and population
    /// updates.
    pub fn offer(&mut self, g: MolGraph, source: Source) -> Result<Step> {
        if !self.budget_left() {
            return Err(CoreError::BudgetExhausted);
        }
        let n = g.heavy_atom_count();
        if n < self.config.mol_min_atoms || n > self.config.mol_max_atoms || g.validate().is_err() {
            return Ok(Step::Rejected);
        }
        let key = canonical_key(&g);
        if self.state.index.contains_key(&key) {
            return Ok(Step::Duplicate);
        }
        let y = self.oracle.evaluate(&g);
        let s = &mut self.state;
        s.calls += 1;
        s.index.insert(key.clone(), s.history.len());
        s.history.push(HistoryEntry {
            call: s.calls,
            y,
            source,
            smiles: write_smiles(&g),
            key: key.clone(),
        });
        s.vocab.update_with_molecule(&g, y, &mut self.rng);
        s.population.insert(g.clone(), y, key);
        s.molecules.push(g);
        Ok(Step::Evaluated(y))
    }

    /// One retrieval-augmented generation (or an unconditional sample for
    /// the random-backbone variant).
    pub fn step_lm(&mut self) -> Result<Step> {
        if !self.budget_left() {
            return Err(CoreError::BudgetExhausted);
        }
        let Some(gen) = &self.generator else {
            return Err(CoreError::Config("no language model loaded".into()));
        };
        let produced = if self.config.variant == Variant::RandomLm {
            gen.sample_molecule(&mut self.rng)
        } else {
            let task = sample_hard(&self.state.vocab, &mut self.rng)?;
            let soft = if self.config.variant == Variant::Full {
                sample_soft(&task, &self.state.vocab, self.config.k_soft, &mut self.rng)?
            } else {
                Vec::new()
            };
            gen.generate(&task, &soft, &mut self.soft_cache, &mut self.rng)
                .map(|o| o.map(|c| c.molecule))
        };
        match produced {
            Ok(Some(g)) => self.offer(g, Source::Lm),
            Ok(None) => Ok(Step::Failed),
            Err(e) if generation_miss(&e) => Ok(Step::Failed),
            Err(e) => Err(e.into()),
        }
    }

    /// One GA offspring from the current population.
    pub fn step_ga(&mut self) -> Result<Step> {
        if !self.budget_left() {
            return Err(CoreError::BudgetExhausted);
        }
        match ga_offspring(&self.state.population, &self.config.ga, &mut self.rng)? {
            Some(g) => self.offer(g, Source::Ga),
            None => Ok(Step::Failed),
        }
    }

    fn note(&mut self, step: Step, stall: &mut usize) -> bool {
        match step {
            Step::Evaluated(_) => *stall = 0,
            _ => *stall += 1,
        }
        if *stall >= self.config.max_stall {
            self.state.stalled = true;
        }
        self.state.stalled
    }

    /// Runs cycles until the budget is spent, the loop stalls, or `stop` is
    /// raised.
    pub fn run(&mut self, stop: Option<&AtomicBool>) -> Result<()> {
        let mut stall = 0;
        let stopped = || stop.is_some_and(|s| s.load(Ordering::Relaxed));
        while self.budget_left() && !self.state.stalled {
            if self.config.variant == Variant::RandomLm {
                let s = self.step_lm()?;
                self.note(s, &mut stall);
            } else {
                for _ in 0..self.config.g_lm_per_cycle {
                    if !self.budget_left() || stopped() {
                        break;
                    }
                    let s = self.step_lm()?;
                    if self.note(s, &mut stall) {
                        break;
                    }
                }
                // the GA needs two parents
                if self.state.population.len() >= 2 {
                    for _ in 0..self.config.g_ga_per_cycle {
                        if !self.budget_left() || stopped() || self.state.stalled {
                            break;
                        }
                        let s = self.step_ga()?;
                        self.note(s, &mut stall);
                    }
                }
            }
            if stopped() {
                self.state.interrupted = true;
                break;
            }
        }
        Ok(())
    }

    pub fn into_state(self) -> RunState {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::OracleSpec;
    use fragrag_chem::parse_smiles;

    fn dataset() -> Vec<(MolGraph, f64)> {
        [
            "CCOc1ccc(CNC(=O)C2CC2)cc1",
            "CC(C)NCc1ccc(OCC2CCOC2)cc1",
            "O=C(NCc1ccncc1)c1ccc(F)cc1",
            "COc1ccc(CCNC(=O)c2cccs2)cc1",
            "CN(C)CCOc1ccc(Cl)cc1C",
            "CCc1nc(C)c(C(=O)NCC2CCCO2)s1",
        ]
        .iter()
        .enumerate()
        .map(|(i, s)| (parse_smiles(s).unwrap(), 0.1 * i as f64))
        .collect()
    }

    fn config() -> RunConfig {
        RunConfig {
            budget: 30,
            vocab: VocabConfig {
                frag_min_atoms: 1,
                frag_max_atoms: 30,
                ..VocabConfig::default()
            },
            mol_min_atoms: 5,
            max_stall: 500,
            ..RunConfig::default()
        }
    }

    fn seeded(opt: &mut Optimizer) {
        for (g, _) in dataset() {
            opt.offer(g, Source::Ga).unwrap();
        }
    }

    #[test]
    fn zero_budget_returns_empty() {
        let oracle = Oracle::similarity("CCOc1ccccc1").unwrap();
        let c = RunConfig { budget: 0, ..config() };
        let mut opt = Optimizer::new(c, &dataset(), &oracle, None, None, 0).unwrap();
        opt.run(None).unwrap();
        assert!(opt.state.history.is_empty());
        assert_eq!(oracle.calls(), 0);
    }

    #[test]
    fn duplicates_and_size_rejections_are_free() {
        let oracle = Oracle::similarity("CCOc1ccccc1").unwrap();
        let mut opt = Optimizer::new(config(), &dataset(), &oracle, None, None, 0).unwrap();
        let g = parse_smiles("CCOc1ccc(CNC(=O)C2CC2)cc1").unwrap();
        assert!(matches!(opt.offer(g.clone(), Source::Lm).unwrap(), Step::Evaluated(_)));
        assert_eq!(opt.offer(g, Source::Lm).unwrap(), Step::Duplicate);
        assert_eq!(opt.offer(parse_smiles("CCO").unwrap(), Source::Lm).unwrap(), Step::Rejected);
        assert_eq!(oracle.calls(), 1);
        assert_eq!(opt.state.calls, 1);
    }

    #[test]
    fn ga_only_run_spends_the_budget_exactly() {
        let oracle = Oracle::new(OracleSpec::Formula { formula: "C12H16N2O".into() }).unwrap();
        let c = RunConfig {
            g_lm_per_cycle: 1,
            g_ga_per_cycle: 1,
            ..config()
        };
        let mut opt = Optimizer::new(c, &dataset(), &oracle, None, None, 3).unwrap();
        seeded(&mut opt);
        let mut floor = f64::NEG_INFINITY;
        while opt.budget_left() {
            opt.step_ga().unwrap();
            assert!(opt.state.population.len() <= 50);
            if opt.state.population.len() == opt.state.population.capacity() {
                let m = opt.state.population.min_y().unwrap();
                assert!(m >= floor);
                floor = m;
            }
        }
        assert_eq!(opt.state.calls, 30);
        assert_eq!(oracle.calls(), 30);
        assert_eq!(opt.state.index.len(), 30);
        let calls: Vec<usize> = opt.state.history.iter().map(|h| h.call).collect();
        assert_eq!(calls, (1..=30).collect::<Vec<_>>());
        assert!(matches!(opt.step_ga(), Err(CoreError::BudgetExhausted)));
    }

    #[test]
    fn constant_oracle_gives_constant_history() {
        // a size window wider than any molecule scores 1 everywhere
        let oracle = Oracle::new(OracleSpec::SizeWindow { min: 0, max: 1000 }).unwrap();
        let mut opt = Optimizer::new(config(), &dataset(), &oracle, None, None, 4).unwrap();
        seeded(&mut opt);
        while opt.budget_left() {
            opt.step_ga().unwrap();
        }
        assert!(opt.state.history.iter().all(|h| h.y == 1.0));
        let ys: Vec<f64> = opt.state.history.iter().map(|h| h.y).collect();
        assert_eq!(crate::metrics::auc_topk(&ys, 10, 30).unwrap(), 1.0);
    }

    #[test]
    fn ga_path_is_deterministic() {
        let run = || {
            let oracle = Oracle::similarity("CCOc1ccccc1").unwrap();
            let mut opt = Optimizer::new(config(), &dataset(), &oracle, None, None, 9).unwrap();
            seeded(&mut opt);
            while opt.budget_left() {
                opt.step_ga().unwrap();
            }
            opt.state.history_csv()
        };
        assert_eq!(run(), run());
    }
}
