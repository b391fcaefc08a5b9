//! Seeded synthetic corpus of drug-like molecules.
//!
//! Molecules are grown from ring systems, linkers and terminal groups joined
//! at hydrogen-bearing atoms. The generator is deterministic for a seed and
//! only emits molecules that pass validation, deduplicated by canonical key.

use std::collections::HashSet;

use fragrag_chem::{canonical_key, parse_smiles, Atom, Bond, BondOrder, Element, MolGraph};
use rand::seq::SliceRandom;
use rand::Rng;

const RINGS: &[&str] = &[
    "c1ccccc1",
    "c1ccccc1",
    "c1ccccc1",
    "c1ccncc1",
    "c1cnccn1",
    "c1cncnc1",
    "c1ccsc1",
    "c1ccoc1",
    "c1cc[nH]c1",
    "c1cscn1",
    "c1cocn1",
    "c1cn[nH]c1",
    "C1CCCCC1",
    "C1CCCC1",
    "C1CCNCC1",
    "C1CNCCN1",
    "C1COCCN1",
    "C1CCOC1",
    "C1CC1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "c1ccc2ncccc2c1",
    "c1ccc2[nH]cnc2c1",
    "c1ccc2occc2c1",
    "O=C1CCCN1",
];

/// (SMILES, index of the far attachment atom). Attachment 0 is atom 0.
const LINKERS: &[(&str, usize)] = &[
    ("C", 0),
    ("CC", 1),
    ("O", 0),
    ("N", 0),
    ("C(=O)N", 2),
    ("NC(=O)", 1),
    ("C(=O)O", 2),
    ("S(=O)(=O)N", 3),
    ("OC", 1),
    ("CO", 1),
    ("C=C", 1),
    ("CNC(=O)", 2),
    ("C(=O)", 0),
    ("NC(=O)N", 3),
    ("CCO", 2),
    ("S", 0),
];

const TERMINALS: &[&str] = &[
    "C", "CC", "F", "Cl", "Br", "O", "N", "OC", "C(F)(F)F", "C#N", "C(=O)O", "C(C)C", "N(C)C",
    "C(N)=O", "S(C)(=O)=O", "OC(F)(F)F", "CCC", "C(C)(C)C", "OCC", "NC(C)=O",
];

struct Builder {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl Builder {
    fn add(&mut self, template: &MolGraph) -> usize {
        let offset = self.atoms.len();
        self.atoms.extend_from_slice(template.atoms());
        self.bonds.extend(
            template
                .bonds()
                .iter()
                .map(|b| Bond::new(b.a + offset, b.b + offset, b.order)),
        );
        offset
    }

    fn connect(&mut self, a: usize, b: usize) -> bool {
        if self.atoms[a].hydrogens == 0 || self.atoms[b].hydrogens == 0 {
            return false;
        }
        // no heteroatom-heteroatom joins (peroxides, hydrazines, N-halides)
        if self.atoms[a].element != Element::C && self.atoms[b].element != Element::C {
            return false;
        }
        self.atoms[a].hydrogens -= 1;
        self.atoms[b].hydrogens -= 1;
        self.bonds.push(Bond::new(a, b, BondOrder::Single));
        true
    }

    fn truncate(&mut self, atoms: usize, bonds: usize) {
        self.atoms.truncate(atoms);
        self.bonds.truncate(bonds);
    }

    fn free_sites(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        range.filter(|&i| self.atoms[i].hydrogens > 0).collect()
    }
}

pub struct CorpusSynth {
    rings: Vec<MolGraph>,
    linkers: Vec<(MolGraph, usize)>,
    terminals: Vec<MolGraph>,
    pub min_atoms: usize,
    pub max_atoms: usize,
}

impl Default for CorpusSynth {
    fn default() -> Self {
        Self::new()
    }
}

impl CorpusSynth {
    pub fn new() -> Self {
        let p = |s: &str| parse_smiles(s).expect("building block parses");
        CorpusSynth {
            rings: RINGS.iter().map(|s| p(s)).collect(),
            linkers: LINKERS.iter().map(|&(s, far)| (p(s), far)).collect(),
            terminals: TERMINALS.iter().map(|s| p(s)).collect(),
            min_atoms: 10,
            max_atoms: 34,
        }
    }

    fn grow_ring<R: Rng>(&self, b: &mut Builder, depth: usize, rng: &mut R) -> (usize, usize) {
        let ring = self.rings.choose(rng).unwrap();
        let start = b.add(ring);
        let end = b.atoms.len();
        let max_subs = match depth {
            0 => 3,
            1 => 2,
            _ => 1,
        };
        let n_subs = rng.gen_range(if depth == 0 { 1 } else { 0 }..=max_subs);
        for _ in 0..n_subs {
            // keep one free site so a parent can attach to deeper rings
            let sites = b.free_sites(start..end);
            if sites.len() <= usize::from(depth > 0) {
                break;
            }
            let site = *sites.choose(rng).unwrap();
            self.grow_substituent(b, site, depth, rng);
        }
        (start, end)
    }

    fn grow_substituent<R: Rng>(&self, b: &mut Builder, site: usize, depth: usize, rng: &mut R) {
        let mut anchor = site;
        if rng.gen_bool(0.7) {
            let (linker, far) = self.linkers.choose(rng).unwrap();
            let mark = (b.atoms.len(), b.bonds.len());
            let off = b.add(linker);
            if b.connect(anchor, off) {
                anchor = off + far;
            } else {
                b.truncate(mark.0, mark.1);
            }
        }
        let mark = (b.atoms.len(), b.bonds.len());
        let ring_prob = match depth {
            0 => 0.55,
            1 => 0.25,
            _ => 0.0,
        };
        if rng.gen_bool(ring_prob) {
            let (start, end) = self.grow_ring(b, depth + 1, rng);
            let sites = b.free_sites(start..end);
            let joined = sites.choose(rng).is_some_and(|&s| b.connect(anchor, s));
            if !joined {
                b.truncate(mark.0, mark.1);
            }
        } else {
            let t = self.terminals.choose(rng).unwrap();
            let off = b.add(t);
            if !b.connect(anchor, off) {
                b.truncate(mark.0, mark.1);
            }
        }
    }

    /// One candidate molecule, or `None` when assembly fails a check.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<MolGraph> {
        let mut b = Builder {
            atoms: Vec::new(),
            bonds: Vec::new(),
        };
        self.grow_ring(&mut b, 0, rng);
        let g = MolGraph::new(b.atoms, b.bonds).ok()?;
        g.validate().ok()?;
        let n = g.heavy_atom_count();
        (self.min_atoms..=self.max_atoms).contains(&n).then_some(g)
    }

    /// `count` distinct molecules (canonical SMILES), skipping any key in
    /// `exclude`.
    pub fn generate<R: Rng>(
        &self,
        count: usize,
        exclude: &HashSet<String>,
        rng: &mut R,
    ) -> Vec<(String, MolGraph)> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < count * 50 {
            attempts += 1;
            let Some(g) = self.sample(rng) else { continue };
            let key = canonical_key(&g);
            if exclude.contains(&key) || !seen.insert(key.clone()) {
                continue;
            }
            out.push((key, g));
        }
        out
    }
}

/// Label used for the corpus property column: a smooth size/heteroatom
/// preference in `[0, 1]`, independent of any run oracle.
pub fn corpus_property(g: &MolGraph) -> f64 {
    let n = g.heavy_atom_count() as f64;
    let hetero = g
        .atoms()
        .iter()
        .filter(|a| a.element != Element::C)
        .count() as f64;
    let size = (-((n - 22.0) / 8.0).powi(2)).exp();
    let hetero_frac = hetero / n.max(1.0);
    let balance = (-((hetero_frac - 0.25) / 0.15).powi(2)).exp();
    (size * balance).clamp(0.0, 1.0)
}
