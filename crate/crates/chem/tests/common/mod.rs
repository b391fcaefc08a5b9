#![allow(dead_code)]

use std::path::PathBuf;

use fragrag_chem::corpus::{read_corpus, CorpusRecord};
use fragrag_chem::MolGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.tsv")
}

pub fn corpus(n: usize) -> Vec<CorpusRecord> {
    let mut all = read_corpus(&corpus_path()).expect("corpus readable");
    all.truncate(n);
    all
}

pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Brute-force backtracking isomorphism test (VF2-style feasibility on
/// labels, degrees and bond orders). Independent of the canonicaliser.
pub fn isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let label = |g: &MolGraph, i: usize| {
        let x = g.atom(i);
        (x.element, x.charge, x.aromatic, x.hydrogens, g.degree(i))
    };
    let mut la: Vec<_> = (0..n).map(|i| label(a, i)).collect();
    let mut lb: Vec<_> = (0..n).map(|i| label(b, i)).collect();
    la.sort();
    lb.sort();
    if la != lb {
        return false;
    }
    // BFS order over `a` so every atom after the first has a mapped neighbour
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        order.push(s);
        let mut head = order.len() - 1;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &(v, _) in a.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        depth: usize,
        a: &MolGraph,
        b: &MolGraph,
        order: &[usize],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        let lu = {
            let x = a.atom(u);
            (x.element, x.charge, x.aromatic, x.hydrogens, a.degree(u))
        };
        for v in 0..b.atom_count() {
            if used[v] {
                continue;
            }
            let y = b.atom(v);
            if (y.element, y.charge, y.aromatic, y.hydrogens, b.degree(v)) != lu {
                continue;
            }
            let consistent = a.neighbors(u).iter().all(|&(w, bond)| {
                let mw = map[w];
                if mw == usize::MAX {
                    return true;
                }
                match b.bond_between(v, mw) {
                    Some(bb) => b.bond(bb).order == a.bond(bond).order,
                    None => false,
                }
            });
            if !consistent {
                continue;
            }
            // mapped atoms adjacent to v in b must be adjacent to u in a
            let reverse_ok = b.neighbors(v).iter().all(|&(x, _)| {
                if !used[x] {
                    return true;
                }
                a.neighbors(u).iter().any(|&(w, _)| map[w] == x)
            });
            if !reverse_ok {
                continue;
            }
            map[u] = v;
            used[v] = true;
            if extend(depth + 1, a, b, order, map, used) {
                return true;
            }
            map[u] = usize::MAX;
            used[v] = false;
        }
        false
    }
    extend(0, a, b, &order, &mut map, &mut used)
}
