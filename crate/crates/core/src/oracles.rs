//! Property oracles with call accounting.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use fragrag_chem::{morgan_fingerprint, parse_smiles, tanimoto, Element, Fingerprint, MolGraph};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Declarative oracle description, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Similarity { target: String },
    /// Molecular formula such as `C7H8N2O2`; hydrogens count.
    Formula { formula: String },
    /// 1 inside the heavy-atom window, `exp(-d)` at distance `d` outside.
    SizeWindow { min: usize, max: usize },
    Product { components: Vec<OracleSpec> },
}

#[derive(Debug, Clone)]
enum Scorer {
    Similarity(Fingerprint),
    Formula(Formula),
    SizeWindow(usize, usize),
    Product(Vec<Scorer>),
}

impl Scorer {
    fn score(&self, g: &MolGraph) -> f64 {
        match self {
            Scorer::Similarity(fp) => tanimoto(fp, &morgan_fingerprint(g)),
            Scorer::Formula(target) => formula_score(target, &formula_of(g)),
            Scorer::SizeWindow(lo, hi) => {
                let n = g.heavy_atom_count();
                let d = lo.saturating_sub(n) + n.saturating_sub(*hi);
                (-(d as f64)).exp()
            }
            Scorer::Product(parts) => parts.iter().map(|p| p.score(g)).product(),
        }
    }
}

/// Heavy-atom and hydrogen counts. Hydrogens are keyed as `Element::Dummy`,
/// which never occurs in a molecule.
pub type Formula = BTreeMap<Element, i64>;

pub const HYDROGEN_KEY: Element = Element::Dummy;

pub fn formula_of(g: &MolGraph) -> Formula {
    let mut f = Formula::new();
    for a in g.atoms() {
        *f.entry(a.element).or_default() += 1;
        if a.hydrogens > 0 {
            *f.entry(HYDROGEN_KEY).or_default() += a.hydrogens as i64;
        }
    }
    f
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let bad = || CoreError::Config(format!("bad formula {text:?}"));
    let mut f = Formula::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_uppercase() {
            return Err(bad());
        }
        let mut sym = chars[i].to_string();
        i += 1;
        if i < chars.len() && chars[i].is_ascii_lowercase() {
            sym.push(chars[i]);
            i += 1;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let count: i64 = if start == i {
            1
        } else {
            chars[start..i].iter().collect::<String>().parse().map_err(|_| bad())?
        };
        let element = if sym == "H" {
            HYDROGEN_KEY
        } else {
            Element::from_symbol(&sym).filter(|e| *e != Element::Dummy).ok_or_else(bad)?
        };
        *f.entry(element).or_default() += count;
    }
    if f.values().sum::<i64>() == 0 {
        return Err(bad());
    }
    Ok(f)
}

/// `exp(-Σ|count - target| / Σ target)` over the union of elements.
pub fn formula_score(target: &Formula, got: &Formula) -> f64 {
    let total: i64 = target.values().sum();
    let mut dev = 0;
    for (e, &t) in target {
        dev += (got.get(e).copied().unwrap_or(0) - t).abs();
    }
    for (e, &g) in got {
        if !target.contains_key(e) {
            dev += g;
        }
    }
    (-(dev as f64) / total as f64).exp()
}

/// An evaluator with an exact call counter. Every `evaluate` counts once,
/// including composite oracles.
#[derive(Debug)]
pub struct Oracle {
    spec: OracleSpec,
    scorer: Scorer,
    calls: AtomicU64,
}

fn compile(spec: &OracleSpec) -> Result<Scorer> {
    Ok(match spec {
        OracleSpec::Similarity { target } => {
            let g = parse_smiles(target).map_err(|e| CoreError::Config(format!("oracle target: {e}")))?;
            g.validate().map_err(|e| CoreError::Config(format!("oracle target: {e}")))?;
            Scorer::Similarity(morgan_fingerprint(&g))
        }
        OracleSpec::Formula { formula } => {
            Scorer::Formula(parse_formula(formula)?)
        }
        OracleSpec::SizeWindow { min, max } => {
            if min > max {
                return Err(CoreError::Config(format!("size window {min} > {max}")));
            }
            Scorer::SizeWindow(*min, *max)
        }
        OracleSpec::Product { components } => {
            if components.is_empty() {
                return Err(CoreError::Config("product oracle needs components".into()));
            }
            Scorer::Product(components.iter().map(compile).collect::<Result<_>>()?)
        }
    })
}

impl Oracle {
    pub fn new(spec: OracleSpec) -> Result<Self> {
        let scorer = compile(&spec)?;
        Ok(Oracle {
            spec,
            scorer,
            calls: AtomicU64::new(0),
        })
    }

    pub fn similarity(target: &str) -> Result<Self> {
        Oracle::new(OracleSpec::Similarity { target: target.into() })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        match &self.spec {
            OracleSpec::Similarity { .. } => "similarity".into(),
            OracleSpec::Formula { formula } => format!("formula_{formula}"),
            OracleSpec::SizeWindow { min, max } => format!("size_{min}_{max}"),
            OracleSpec::Product { components } => format!("product_{}", components.len()),
        }
    }

    /// Property in `[0, 1]`; counts one call.
    pub fn evaluate(&self, g: &MolGraph) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.scorer.score(g).clamp(0.0, 1.0)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Clamps `raw` to `[lo, hi]` and maps it affinely onto `[0, 1]`, reversed
/// when `invert` is set.
pub fn normalize_linear(raw: f64, lo: f64, hi: f64, invert: bool) -> Result<f64> {
    if !(lo < hi) {
        return Err(CoreError::Config(format!("degenerate bounds [{lo}, {hi}]")));
    }
    let t = (raw.clamp(lo, hi) - lo) / (hi - lo);
    Ok(if invert { 1.0 - t } else { t })
}
