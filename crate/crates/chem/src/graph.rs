//! Attributed molecular graph.
//!
//! Hydrogens are not nodes: every atom carries an explicit hydrogen count
//! fixed at construction time. Ring membership of bonds is derived once in
//! [`MolGraph::new`] from bridge detection (a bond lies on a cycle iff it is
//! not a bridge).

use crate::element::Element;
use crate::error::{ChemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the integer valence sum. Aromatic bonds count as 1;
    /// the extra half-bond is accounted for per aromatic atom.
    pub fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_valence(v: u32) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    pub hydrogens: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            charge: 0,
            aromatic: false,
            hydrogens: 0,
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.element == Element::Dummy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Hydrogen count implied by the SMILES organic-subset rule for a neutral
/// atom written without brackets.
pub fn implicit_hydrogens(element: Element, aromatic: bool, bond_sum: u32) -> u8 {
    let valences = element.allowed_valences(0);
    let Some(&target) = valences.iter().find(|&&v| v as u32 >= bond_sum) else {
        return 0;
    };
    let h = target as i64 - bond_sum as i64 - i64::from(aromatic);
    h.max(0) as u8
}

/// Whether `total` (bond sum + hydrogens + open slots) is an allowed valence.
/// Aromatic atoms may additionally carry one implied pi bond.
pub fn valence_ok(element: Element, charge: i8, aromatic: bool, total: u32) -> bool {
    let allowed = element.allowed_valences(charge);
    let hit = |v: u32| allowed.iter().any(|&a| a as u32 == v);
    hit(total) || (aromatic && hit(total + 1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring: Vec<bool>,
}

impl MolGraph {
    /// Builds a graph, checking bond endpoints and duplicates. Valence is not
    /// checked here; see [`MolGraph::check_valence`].
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (idx, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::Structure(format!(
                    "bond {idx} references missing atom"
                )));
            }
            if bond.a == bond.b {
                return Err(ChemError::Structure(format!("bond {idx} is a self loop")));
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(ChemError::Structure(format!(
                    "duplicate bond between {} and {}",
                    bond.a, bond.b
                )));
            }
            adjacency[bond.a].push((bond.b, idx));
            adjacency[bond.b].push((bond.a, idx));
        }
        let ring = ring_flags(n, &bonds, &adjacency);
        Ok(MolGraph {
            atoms,
            bonds,
            adjacency,
            ring,
        })
    }

    pub fn empty() -> Self {
        MolGraph {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
            ring: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Atom count excluding `*` dummies.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| !a.is_dummy()).count()
    }

    /// `(neighbour, bond index)` pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, idx)| idx)
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring[bond]
    }

    pub fn ring_bonds(&self) -> impl Iterator<Item = usize> + '_ {
        self.ring
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| i)
    }

    pub fn is_ring_atom(&self, i: usize) -> bool {
        self.adjacency[i].iter().any(|&(_, b)| self.ring[b])
    }

    pub fn bond_sum(&self, i: usize) -> u32 {
        self.adjacency[i]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence())
            .sum()
    }

    /// Checks every atom's valence. `open_slots[i]` counts reserved single
    /// bonds (fragment attachment points) on atom `i`.
    pub fn check_valence_with(&self, open_slots: &[u32]) -> Result<()> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let extra = open_slots.get(i).copied().unwrap_or(0);
            let total = self.bond_sum(i) + atom.hydrogens as u32 + extra;
            if !valence_ok(atom.element, atom.charge, atom.aromatic, total) {
                return Err(ChemError::Valence {
                    atom: i,
                    symbol: atom.element.symbol().to_string(),
                    valence: total,
                });
            }
        }
        Ok(())
    }

    pub fn check_valence(&self) -> Result<()> {
        self.check_valence_with(&[])
    }

    /// Aromatic flags must be backed by ring structure: aromatic bonds lie on
    /// rings between aromatic atoms and every aromatic atom has two of them.
    pub fn check_aromatic_consistency(&self) -> Result<()> {
        for (idx, bond) in self.bonds.iter().enumerate() {
            if bond.order == BondOrder::Aromatic {
                if !self.ring[idx] {
                    return Err(ChemError::Structure(format!(
                        "aromatic bond {idx} outside a ring"
                    )));
                }
                if !(self.atoms[bond.a].aromatic && self.atoms[bond.b].aromatic) {
                    return Err(ChemError::Structure(format!(
                        "aromatic bond {idx} between non-aromatic atoms"
                    )));
                }
            }
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.aromatic {
                let n_arom = self.adjacency[i]
                    .iter()
                    .filter(|&&(_, b)| self.bonds[b].order == BondOrder::Aromatic)
                    .count();
                if n_arom < 2 {
                    return Err(ChemError::Structure(format!(
                        "aromatic atom {i} has {n_arom} aromatic bonds"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Valence, aromaticity and connectivity; the gate for molecules entering
    /// vocabularies and populations.
    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(ChemError::Structure("empty molecule".into()));
        }
        self.check_valence()?;
        self.check_aromatic_consistency()?;
        if !self.is_connected() {
            return Err(ChemError::Structure("disconnected molecule".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.is_empty() || self.components().len() == 1
    }

    /// Connected components as sorted atom index lists, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_without(&[])
    }

    /// Components after ignoring the listed bonds.
    pub fn components_without(&self, removed: &[usize]) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, b) in &self.adjacency[u] {
                    if comp[v] == usize::MAX && !removed.contains(&b) {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Induced subgraph on `atoms` (in the given order). Returns the graph and
    /// the old→new index map.
    pub fn subgraph(&self, atoms: &[usize]) -> (MolGraph, Vec<Option<usize>>) {
        let mut map = vec![None; self.atoms.len()];
        for (new, &old) in atoms.iter().enumerate() {
            map[old] = Some(new);
        }
        let new_atoms = atoms.iter().map(|&i| self.atoms[i]).collect();
        let new_bonds = self
            .bonds
            .iter()
            .filter_map(|b| match (map[b.a], map[b.b]) {
                (Some(a), Some(c)) => Some(Bond::new(a, c, b.order)),
                _ => None,
            })
            .collect();
        let g = MolGraph::new(new_atoms, new_bonds).expect("subgraph of valid graph");
        (g, map)
    }

    /// Relabels atoms: atom `i` moves to position `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![Atom::new(Element::C); self.atoms.len()];
        for (i, &p) in perm.iter().enumerate() {
            atoms[p] = self.atoms[i];
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(perm[b.a], perm[b.b], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("permutation preserves validity")
    }

    /// Disjoint union; indices of `other` are shifted by `self.atom_count()`.
    pub fn union(&self, other: &MolGraph) -> MolGraph {
        let offset = self.atoms.len();
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut bonds = self.bonds.clone();
        bonds.extend(
            other
                .bonds
                .iter()
                .map(|b| Bond::new(b.a + offset, b.b + offset, b.order)),
        );
        MolGraph::new(atoms, bonds).expect("disjoint union")
    }

    pub fn into_parts(self) -> (Vec<Atom>, Vec<Bond>) {
        (self.atoms, self.bonds)
    }

    /// Simple cycles of length `min..=max`, each as an atom sequence.
    /// Every cycle is reported once, starting at its smallest atom.
    pub fn cycles(&self, min: usize, max: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        let mut on_path = vec![false; self.atoms.len()];
        for start in 0..self.atoms.len() {
            if !self.is_ring_atom(start) {
                continue;
            }
            path.clear();
            path.push(start);
            on_path[start] = true;
            self.extend_cycles(start, min, max, &mut path, &mut on_path, &mut out);
            on_path[start] = false;
        }
        out
    }

    fn extend_cycles(
        &self,
        start: usize,
        min: usize,
        max: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        for &(nb, b) in &self.adjacency[last] {
            if !self.ring[b] {
                continue;
            }
            if nb == start && path.len() >= min.max(3) {
                // direction dedup: second atom smaller than the last one
                if path[1] < last {
                    out.push(path.clone());
                }
                continue;
            }
            if nb <= start || on_path[nb] || path.len() >= max {
                continue;
            }
            path.push(nb);
            on_path[nb] = true;
            self.extend_cycles(start, min, max, path, on_path, out);
            on_path[nb] = false;
            path.pop();
        }
    }
}

fn ring_flags(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    // Iterative Tarjan bridge finding.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent bond, next neighbour cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (u, parent_bond) = (top.0, top.1);
            if top.2 < adjacency[u].len() {
                let (v, b) = adjacency[u][top.2];
                top.2 += 1;
                if b == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|&b| !b).collect()
}
