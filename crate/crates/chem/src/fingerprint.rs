//! Circular (Morgan/ECFP-style) fingerprints and Tanimoto similarity.
//!
//! Atom identifiers start from (element, degree, charge, H count, ring flag)
//! and are refined for [`FP_RADIUS`] rounds by hashing the sorted
//! (bond order, neighbour identifier) multiset. Every identifier from every
//! round sets bit `id % FP_BITS`. All hashing goes through the splitmix64
//! finaliser, so bit positions are stable across platforms and runs.

use crate::graph::MolGraph;

pub const FP_BITS: usize = 1024;
pub const FP_RADIUS: usize = 2;
const WORDS: usize = FP_BITS / 64;

/// splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn combine(h: u64, x: u64) -> u64 {
    splitmix64(h.rotate_left(17) ^ x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; WORDS],
}

impl Default for Fingerprint {
    fn default() -> Self {
        Self::zero()
    }
}

impl Fingerprint {
    pub fn zero() -> Self {
        Fingerprint { words: [0; WORDS] }
    }

    pub fn from_bits(bits: &[usize]) -> Self {
        let mut fp = Self::zero();
        for &b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        let bit = bit % FP_BITS;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn width(&self) -> usize {
        FP_BITS
    }

    pub fn on_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..FP_BITS).filter(|&b| self.get(b))
    }

    pub fn intersection_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn union_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones())
            .sum()
    }
}

/// Per-atom identifiers for rounds `0..=FP_RADIUS`.
pub fn atom_environments(g: &MolGraph) -> Vec<Vec<u64>> {
    let n = g.atom_count();
    let mut current: Vec<u64> = (0..n)
        .map(|i| {
            let a = g.atom(i);
            let mut h = splitmix64(a.element.atomic_number() as u64);
            h = combine(h, g.degree(i) as u64);
            h = combine(h, (a.charge as i64 + 8) as u64);
            h = combine(h, a.hydrogens as u64);
            combine(h, g.is_ring_atom(i) as u64)
        })
        .collect();
    let mut rounds = vec![current.clone()];
    for round in 1..=FP_RADIUS {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut nb: Vec<(u8, u64)> = g
                    .neighbors(i)
                    .iter()
                    .map(|&(j, b)| (g.bond(b).order.code(), current[j]))
                    .collect();
                nb.sort_unstable();
                let mut h = combine(round as u64, current[i]);
                for (code, id) in nb {
                    h = combine(h, code as u64);
                    h = combine(h, id);
                }
                h
            })
            .collect();
        rounds.push(next.clone());
        current = next;
    }
    rounds
}

pub fn morgan_fingerprint(g: &MolGraph) -> Fingerprint {
    let mut fp = Fingerprint::zero();
    for round in atom_environments(g) {
        for id in round {
            fp.set((id % FP_BITS as u64) as usize);
        }
    }
    fp
}

/// |a ∧ b| / |a ∨ b|; 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits(&[0, 1]);
        let b = Fingerprint::from_bits(&[0, 2]);
        assert!((tanimoto(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(tanimoto(&a, &a), 1.0);
        let c = Fingerprint::from_bits(&[5, 6]);
        assert_eq!(tanimoto(&a, &c), 0.0);
        assert_eq!(tanimoto(&Fingerprint::zero(), &Fingerprint::zero()), 1.0);
    }

    #[test]
    fn benzene_has_at_most_three_environments() {
        // all six atoms are equivalent, so each round contributes one id
        let fp = morgan_fingerprint(&parse_smiles("c1ccccc1").unwrap());
        assert!(fp.count_ones() <= 3);
        assert!(fp.count_ones() >= 1);
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = morgan_fingerprint(&parse_smiles("CCOc1ccccc1").unwrap());
        let b = morgan_fingerprint(&parse_smiles("c1cccc(OCC)c1").unwrap());
        assert_eq!(a, b);
        assert_eq!(a, morgan_fingerprint(&parse_smiles("CCOc1ccccc1").unwrap()));
    }
}
