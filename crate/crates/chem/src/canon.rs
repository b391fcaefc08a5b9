//! Canonical atom ordering.
//!
//! Colour refinement over (element, charge, aromaticity, H count) seeds,
//! followed by an individualisation-refinement search that picks the labelling
//! with the lexicographically smallest certificate. Subtrees are pruned with
//! automorphisms discovered at equal leaves, restricted to those fixing the
//! current individualisation path.

use crate::graph::MolGraph;
use crate::smiles::write::write_with_ranks;

fn atom_code(g: &MolGraph, i: usize) -> u64 {
    let a = g.atom(i);
    (a.element.atomic_number() as u64) << 24
        | ((a.charge as i16 + 128) as u64) << 16
        | (a.aromatic as u64) << 8
        | a.hydrogens as u64
}

/// Ranks are cell start positions: `rank[i]` is the number of atoms in cells
/// strictly before atom `i`'s cell.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<usize> {
    let n = keys.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; n];
    for pos in 0..n {
        let i = idx[pos];
        ranks[i] = if pos > 0 && keys[idx[pos - 1]] == keys[i] {
            ranks[idx[pos - 1]]
        } else {
            pos
        };
    }
    ranks
}

fn cell_count(ranks: &[usize]) -> usize {
    let mut seen = vec![false; ranks.len()];
    let mut c = 0;
    for &r in ranks {
        if !seen[r] {
            seen[r] = true;
            c += 1;
        }
    }
    c
}

fn refine(g: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut cells = cell_count(&ranks);
    loop {
        if cells == ranks.len() {
            return ranks;
        }
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..g.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = g
                    .neighbors(i)
                    .iter()
                    .map(|&(j, b)| (ranks[j], g.bond(b).order.code()))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = ranks_from_keys(&keys);
        let next_cells = cell_count(&next);
        ranks = next;
        if next_cells == cells {
            return ranks;
        }
        cells = next_cells;
    }
}

fn certificate(g: &MolGraph, ranks: &[usize]) -> Vec<u64> {
    let n = g.atom_count();
    let mut at_pos = vec![0usize; n];
    for (i, &r) in ranks.iter().enumerate() {
        at_pos[r] = i;
    }
    let mut cert: Vec<u64> = at_pos.iter().map(|&i| atom_code(g, i)).collect();
    let mut edges: Vec<u64> = g
        .bonds()
        .iter()
        .map(|b| {
            let (x, y) = (ranks[b.a].min(ranks[b.b]), ranks[b.a].max(ranks[b.b]));
            (x as u64) << 40 | (y as u64) << 8 | b.order.code() as u64
        })
        .collect();
    edges.sort_unstable();
    cert.push(u64::MAX);
    cert.extend(edges);
    cert
}

struct Search<'g> {
    g: &'g MolGraph,
    best: Option<(Vec<u64>, Vec<usize>)>,
    automorphisms: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn leaf(&mut self, ranks: Vec<usize>) {
        let cert = certificate(self.g, &ranks);
        match &self.best {
            None => self.best = Some((cert, ranks)),
            Some((best_cert, best_ranks)) => match cert.cmp(best_cert) {
                std::cmp::Ordering::Less => self.best = Some((cert, ranks)),
                std::cmp::Ordering::Equal => {
                    let n = ranks.len();
                    let mut best_at = vec![0; n];
                    for (i, &r) in best_ranks.iter().enumerate() {
                        best_at[r] = i;
                    }
                    let sigma: Vec<usize> = (0..n).map(|a| best_at[ranks[a]]).collect();
                    if sigma.iter().enumerate().any(|(i, &s)| i != s) {
                        self.automorphisms.push(sigma);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }

    fn orbit_roots(&self, path: &[usize]) -> Vec<usize> {
        let n = self.g.atom_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for sigma in &self.automorphisms {
            if path.iter().any(|&v| sigma[v] != v) {
                continue;
            }
            for (a, &b) in sigma.iter().enumerate() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        (0..n).map(|x| find(&mut parent, x)).collect()
    }

    fn descend(&mut self, ranks: Vec<usize>, path: &mut Vec<usize>) {
        let n = ranks.len();
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r] += 1;
        }
        let target = (0..n)
            .filter(|&r| sizes[r] > 1)
            .min_by_key(|&r| (sizes[r], r));
        let Some(cell) = target else {
            self.leaf(ranks);
            return;
        };
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == cell).collect();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &members {
            if !explored.is_empty() {
                let roots = self.orbit_roots(path);
                if explored.iter().any(|&u| roots[u] == roots[v]) {
                    continue;
                }
            }
            let mut child = ranks.clone();
            for &u in &members {
                if u != v {
                    child[u] = cell + 1;
                }
            }
            let child = refine(self.g, child);
            path.push(v);
            self.descend(child, path);
            path.pop();
            explored.push(v);
        }
    }
}

/// Canonical rank of every atom: a permutation of `0..n` that is identical
/// for isomorphic graphs up to relabelling.
pub fn canonical_ranks(g: &MolGraph) -> Vec<usize> {
    let n = g.atom_count();
    if n == 0 {
        return Vec::new();
    }
    let seeds: Vec<u64> = (0..n).map(|i| atom_code(g, i)).collect();
    let initial = refine(g, ranks_from_keys(&seeds));
    let mut search = Search {
        g,
        best: None,
        automorphisms: Vec::new(),
    };
    search.descend(initial, &mut Vec::new());
    search.best.expect("search visits at least one leaf").1
}

/// Canonical SMILES; equal strings iff the graphs are isomorphic
/// (element, charge, aromaticity, H count and bond orders preserved).
pub fn canonical_key(g: &MolGraph) -> String {
    write_with_ranks(g, &canonical_ranks(g), &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn key(s: &str) -> String {
        canonical_key(&parse_smiles(s).unwrap())
    }

    #[test]
    fn order_free() {
        assert_eq!(key("CCO"), key("OCC"));
        assert_ne!(key("CCO"), key("CCN"));
        assert_eq!(key("c1ccccc1C"), key("Cc1ccccc1"));
        assert_eq!(key("OC(=O)c1ccccc1"), key("c1cccc(C(O)=O)c1"));
    }

    #[test]
    fn distinguishes_1wl_equivalent_graphs() {
        // decalin and bicyclopentyl share refinement colours
        assert_ne!(key("C1CCC2CCCCC2C1"), key("C1CCC(C1)C1CCCC1"));
    }

    #[test]
    fn ranks_are_a_permutation() {
        let g = parse_smiles("CC(C)(C)c1ccc(C(C)(C)C)cc1").unwrap();
        let mut r = canonical_ranks(&g);
        r.sort_unstable();
        assert_eq!(r, (0..g.atom_count()).collect::<Vec<_>>());
    }
}
