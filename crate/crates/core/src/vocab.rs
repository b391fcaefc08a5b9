//! Score-ranked arm and linker vocabularies.
//!
//! A fragment's score is the mean property of every molecule whose sampled
//! slicing produced it. Statistics are kept for every fragment ever seen, so
//! a fragment evicted from its pool and later readmitted still carries its
//! full history.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use fragrag_chem::{
    slice_arm_linker_arm, tanimoto, Fingerprint, Fragment, FragmentKind, IndexedFragment, MolGraph,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabConfig {
    pub n_frag: usize,
    /// Candidates at least this similar to a pool member are rejected.
    pub delta: Option<f64>,
    pub frag_min_atoms: usize,
    pub frag_max_atoms: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            n_frag: 50,
            delta: None,
            frag_min_atoms: 5,
            frag_max_atoms: 12,
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frag == 0 {
            return Err(CoreError::Config("n_frag must be positive".into()));
        }
        if self.frag_min_atoms > self.frag_max_atoms {
            return Err(CoreError::Config("frag_min_atoms exceeds frag_max_atoms".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= 1.0) {
                return Err(CoreError::Config(format!("delta {d} outside (0, 1]")));
            }
        }
        Ok(())
    }

    fn size_ok(&self, f: &Fragment) -> bool {
        (self.frag_min_atoms..=self.frag_max_atoms).contains(&f.heavy_atom_count())
    }
}

#[derive(Debug, Clone)]
pub struct FragmentRecord {
    pub fragment: Fragment,
    pub key: String,
    pub score_sum: f64,
    pub count: u64,
    pub fp: Fingerprint,
}

impl FragmentRecord {
    pub fn score(&self) -> f64 {
        self.score_sum / self.count as f64
    }

    pub fn kind(&self) -> FragmentKind {
        self.fragment.kind()
    }
}

/// Descending score, then ascending key.
fn rank(a: &FragmentRecord, b: &FragmentRecord) -> Ordering {
    b.score().total_cmp(&a.score()).then_with(|| a.key.cmp(&b.key))
}

#[derive(Debug, Clone)]
struct Stats {
    fragment: IndexedFragment,
    sum: f64,
    count: u64,
}

#[derive(Debug, Clone)]
pub struct FragmentVocabulary {
    config: VocabConfig,
    arms: Vec<FragmentRecord>,
    linkers: Vec<FragmentRecord>,
    stats: HashMap<String, Stats>,
}

/// Distinct fragments of one slicing, in slicing order.
fn distinct(frags: [&Fragment; 3]) -> Vec<IndexedFragment> {
    let mut out: Vec<IndexedFragment> = Vec::with_capacity(3);
    for f in frags {
        let ix = IndexedFragment::new(f.clone());
        if !out.iter().any(|o| o.key == ix.key) {
            out.push(ix);
        }
    }
    out
}

impl FragmentVocabulary {
    pub fn new(config: VocabConfig) -> Result<Self> {
        config.validate()?;
        Ok(FragmentVocabulary {
            config,
            arms: Vec::new(),
            linkers: Vec::new(),
            stats: HashMap::new(),
        })
    }

    /// Slices each molecule once and keeps the best `n_frag` fragments of
    /// each kind. Under a δ filter, candidates are admitted greedily in rank
    /// order.
    pub fn build_initial<R: Rng + ?Sized>(
        dataset: &[(MolGraph, f64)],
        config: VocabConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut v = FragmentVocabulary::new(config)?;
        for (g, y) in dataset {
            if let Some(s) = slice_arm_linker_arm(g, rng) {
                for ix in distinct(s.fragments()) {
                    v.accumulate(ix, *y);
                }
            }
        }
        let mut candidates: Vec<FragmentRecord> = v
            .stats
            .values()
            .filter(|s| config.size_ok(&s.fragment.fragment))
            .map(Stats::record)
            .collect();
        candidates.sort_by(rank);
        for rec in candidates {
            let delta = config.delta;
            let n = config.n_frag;
            let pool = v.pool_mut(rec.kind());
            if pool.len() < n && delta.is_none_or(|d| pool.iter().all(|p| tanimoto(&p.fp, &rec.fp) < d)) {
                pool.push(rec);
            }
        }
        if v.arms.is_empty() && v.linkers.is_empty() {
            return Err(CoreError::EmptyVocabulary);
        }
        Ok(v)
    }

    fn accumulate(&mut self, ix: IndexedFragment, y: f64) -> &Stats {
        let s = self.stats.entry(ix.key.clone()).or_insert(Stats {
            fragment: ix,
            sum: 0.0,
            count: 0,
        });
        s.sum += y;
        s.count += 1;
        s
    }

    fn pool_mut(&mut self, kind: FragmentKind) -> &mut Vec<FragmentRecord> {
        match kind {
            FragmentKind::Arm => &mut self.arms,
            FragmentKind::Linker => &mut self.linkers,
        }
    }

    /// Scores the fragments of one sampled slicing of `m` and refreshes the
    /// pools. Returns the slicing's distinct fragment keys (empty when `m`
    /// does not decompose).
    pub fn update_with_molecule<R: Rng + ?Sized>(&mut self, m: &MolGraph, y: f64, rng: &mut R) -> Vec<String> {
        match slice_arm_linker_arm(m, rng) {
            Some(s) => self.update_with_fragments(s.fragments(), y),
            None => Vec::new(),
        }
    }

    pub fn update_with_fragments(&mut self, frags: [&Fragment; 3], y: f64) -> Vec<String> {
        let mut keys = Vec::with_capacity(3);
        for ix in distinct(frags) {
            keys.push(ix.key.clone());
            let config = self.config;
            let rec = self.accumulate(ix, y).record();
            let pool = self.pool_mut(rec.kind());
            if let Some(existing) = pool.iter_mut().find(|p| p.key == rec.key) {
                *existing = rec;
            } else if config.size_ok(&rec.fragment)
                && config
                    .delta
                    .is_none_or(|d| pool.iter().all(|p| tanimoto(&p.fp, &rec.fp) < d))
            {
                pool.push(rec);
            }
            pool.sort_by(rank);
            pool.truncate(config.n_frag);
        }
        keys
    }

    pub fn config(&self) -> &VocabConfig {
        &self.config
    }

    pub fn arms(&self) -> &[FragmentRecord] {
        &self.arms
    }

    pub fn linkers(&self) -> &[FragmentRecord] {
        &self.linkers
    }

    pub fn pool(&self, kind: FragmentKind) -> &[FragmentRecord] {
        match kind {
            FragmentKind::Arm => &self.arms,
            FragmentKind::Linker => &self.linkers,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &FragmentRecord> {
        self.arms.iter().chain(&self.linkers)
    }

    /// Statistics for any fragment ever scored, pooled or not.
    pub fn stats(&self, key: &str) -> Option<(f64, u64)> {
        self.stats.get(key).map(|s| (s.sum, s.count))
    }

    /// One line per pooled fragment: `SMILES-with-[*]\tkind\tscore\tcount`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in self.records() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.fragment.to_smiles(),
                r.kind().as_str(),
                r.score(),
                r.count
            );
        }
        out
    }

    /// Reads a dump back. Pools are rebuilt from the listed records only.
    pub fn load_dump(text: &str, config: VocabConfig) -> Result<Self> {
        let mut v = FragmentVocabulary::new(config)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| CoreError::Dump { line: i + 1, message: m };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let fragment = Fragment::from_smiles(fields[0]).map_err(|e| err(e.to_string()))?;
            let kind = FragmentKind::parse(fields[1]).ok_or_else(|| err(format!("unknown kind {:?}", fields[1])))?;
            if kind != fragment.kind() {
                return Err(err(format!("{} has {} slots", fields[0], fragment.attachments().len())));
            }
            let score: f64 = fields[2].parse().map_err(|_| err(format!("bad score {:?}", fields[2])))?;
            let count: u64 = fields[3].parse().map_err(|_| err(format!("bad count {:?}", fields[3])))?;
            if count == 0 {
                return Err(err("count must be positive".into()));
            }
            let ix = IndexedFragment::new(fragment);
            let s = Stats {
                fragment: ix,
                sum: score * count as f64,
                count,
            };
            let rec = s.record();
            v.stats.insert(rec.key.clone(), s);
            v.pool_mut(kind).push(rec);
        }
        for kind in [FragmentKind::Arm, FragmentKind::Linker] {
            let n = v.config.n_frag;
            let pool = v.pool_mut(kind);
            pool.sort_by(rank);
            pool.truncate(n);
        }
        Ok(v)
    }
}

impl Stats {
    fn record(&self) -> FragmentRecord {
        FragmentRecord {
            fragment: self.fragment.fragment.clone(),
            key: self.fragment.key.clone(),
            score_sum: self.sum,
            count: self.count,
            fp: self.fragment.fp.clone(),
        }
    }
}

/// Smallest score in a pool.
pub fn min_score(pool: &[FragmentRecord]) -> Result<f64> {
    pool.iter()
        .map(FragmentRecord::score)
        .min_by(f64::total_cmp)
        .ok_or(CoreError::EmptyPool("vocabulary"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fragrag_chem::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open() -> VocabConfig {
        VocabConfig {
            n_frag: 50,
            delta: None,
            frag_min_atoms: 1,
            frag_max_atoms: 100,
        }
    }

    fn frag(s: &str) -> Fragment {
        Fragment::from_smiles(s).unwrap()
    }

    #[test]
    fn single_molecule_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = FragmentVocabulary::build_initial(&[(parse_smiles("CCOCC").unwrap(), 0.8)], open(), &mut rng).unwrap();
        assert!(v.records().count() >= 2);
        assert!(v.records().all(|r| r.score() == 0.8));
    }

    #[test]
    fn eq1_mean_and_merge() {
        let mut v = FragmentVocabulary::new(open()).unwrap();
        let (a, l, b) = (frag("[*]CCCC"), frag("[*]OC[*]"), frag("[*]CCN"));
        v.update_with_fragments([&a, &l, &b], 0.2);
        v.update_with_fragments([&a, &l, &frag("[*]CCO")], 0.8);
        let r = v.arms().iter().find(|r| r.key == a.canonical_key()).unwrap();
        assert!((r.score() - 0.5).abs() < 1e-15);
        assert_eq!(r.count, 2);

        let mut v = FragmentVocabulary::new(open()).unwrap();
        v.update_with_fragments([&a, &l, &b], 0.5);
        v.update_with_fragments([&a, &l, &b], 0.9);
        assert!((v.linkers()[0].score() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn repeated_fragment_counts_once_per_molecule() {
        let mut v = FragmentVocabulary::new(open()).unwrap();
        let arm = frag("[*]CC");
        v.update_with_fragments([&arm, &frag("[*]O[*]"), &arm], 0.4);
        assert_eq!(v.arms().len(), 1);
        assert_eq!(v.arms()[0].count, 1);
    }

    #[test]
    fn top_n_keeps_the_best() {
        let config = VocabConfig { n_frag: 1, ..open() };
        let mut v = FragmentVocabulary::new(config).unwrap();
        let l = frag("[*]O[*]");
        v.update_with_fragments([&frag("[*]CCC"), &l, &frag("[*]CCC")], 0.3);
        v.update_with_fragments([&frag("[*]CCN"), &l, &frag("[*]CCN")], 0.9);
        assert_eq!(v.arms().len(), 1);
        assert_eq!(v.arms()[0].score(), 0.9);
        assert_eq!(min_score(v.arms()).unwrap(), 0.9);
    }

    #[test]
    fn undecomposable_molecule_is_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = FragmentVocabulary::build_initial(&[(parse_smiles("CCOCC").unwrap(), 0.8)], open(), &mut rng).unwrap();
        let before = v.dump();
        assert!(v.update_with_molecule(&parse_smiles("C1CC1").unwrap(), 1.0, &mut rng).is_empty());
        assert_eq!(v.dump(), before);
    }

    #[test]
    fn delta_rejects_near_duplicates() {
        let config = VocabConfig { delta: Some(0.4), ..open() };
        let mut v = FragmentVocabulary::new(config).unwrap();
        let l = frag("[*]O[*]");
        let a = frag("[*]CCCCCCCC");
        let near = frag("[*]CCCCCCCCC");
        assert!(tanimoto(&a.fingerprint(), &near.fingerprint()) >= 0.4);
        v.update_with_fragments([&a, &l, &a], 0.5);
        v.update_with_fragments([&near, &l, &near], 0.9);
        assert_eq!(v.arms().len(), 1);
        assert_eq!(v.arms()[0].key, a.canonical_key());
        // the rejected fragment still accumulates statistics
        assert_eq!(v.stats(&near.canonical_key()), Some((0.9, 1)));
    }

    #[test]
    fn min_score_examples() {
        let mut v = FragmentVocabulary::new(open()).unwrap();
        assert!(min_score(v.arms()).is_err());
        let l = frag("[*]O[*]");
        v.update_with_fragments([&frag("[*]CC"), &l, &frag("[*]CC")], 0.5);
        assert_eq!(min_score(v.arms()).unwrap(), 0.5);
        v.update_with_fragments([&frag("[*]CN"), &l, &frag("[*]CN")], 0.2);
        v.update_with_fragments([&frag("[*]CO"), &l, &frag("[*]CO")], 0.9);
        assert_eq!(min_score(v.arms()).unwrap(), 0.2);
    }

    #[test]
    fn size_bounds_filter_pools() {
        let config = VocabConfig {
            frag_min_atoms: 3,
            frag_max_atoms: 4,
            ..open()
        };
        let mut v = FragmentVocabulary::new(config).unwrap();
        v.update_with_fragments([&frag("[*]C"), &frag("[*]CCC[*]"), &frag("[*]CCCCC")], 0.5);
        assert!(v.arms().is_empty());
        assert_eq!(v.linkers().len(), 1);
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<(MolGraph, f64)> = ["CCOCCN", "CCNC(=O)c1ccccc1", "OCCOCCOC"]
            .iter()
            .zip([0.1, 0.5, 0.25])
            .map(|(s, y)| (parse_smiles(s).unwrap(), y))
            .collect();
        let v = FragmentVocabulary::build_initial(&data, open(), &mut rng).unwrap();
        let text = v.dump();
        let back = FragmentVocabulary::load_dump(&text, open()).unwrap();
        assert_eq!(back.dump(), text);
        assert!(FragmentVocabulary::load_dump("[*]CC\tlinker\t0.5\t1\n", open()).is_err());
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = FragmentVocabulary::build_initial(&[(parse_smiles("C1CC1").unwrap(), 0.5)], open(), &mut rng);
        assert!(matches!(r, Err(CoreError::EmptyVocabulary)));
    }
}
