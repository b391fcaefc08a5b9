//! Graph-based genetic operators over molecules: single-bond and ring
//! crossover, a table of local mutations, and the bounded population.

use fragrag_chem::graph::implicit_hydrogens;
use fragrag_chem::{canonical_key, Atom, Bond, BondOrder, Element, MolGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const DEFAULT_MUTATION_RATE: f64 = 0.1;
pub const DEFAULT_N_MOL: usize = 50;
pub const CROSSOVER_RETRIES: usize = 20;

/// Elements an atom may be changed into or appended as.
pub const SUBSTITUTION_ALPHABET: [Element; 7] = [
    Element::C,
    Element::N,
    Element::O,
    Element::S,
    Element::F,
    Element::Cl,
    Element::Br,
];

#[derive(Debug, Clone)]
pub struct Member {
    pub graph: MolGraph,
    pub y: f64,
    pub key: String,
}

/// The top-`capacity` molecules by property, unique by key.
#[derive(Debug, Clone)]
pub struct Population {
    entries: Vec<Member>,
    capacity: usize,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        Population {
            entries: Vec::new(),
            capacity,
        }
    }

    pub fn entries(&self) -> &[Member] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Inserts unless the key is present; returns whether the molecule is in
    /// the population afterwards.
    pub fn insert(&mut self, graph: MolGraph, y: f64, key: String) -> bool {
        if self.entries.iter().any(|m| m.key == key) {
            return false;
        }
        self.entries.push(Member {
            graph,
            y,
            key: key.clone(),
        });
        self.entries
            .sort_by(|a, b| b.y.total_cmp(&a.y).then_with(|| a.key.cmp(&b.key)));
        self.entries.truncate(self.capacity);
        self.entries.iter().any(|m| m.key == key)
    }

    pub fn min_y(&self) -> Option<f64> {
        self.entries.last().map(|m| m.y)
    }
}

/// Two uniform draws with replacement.
pub fn select_parents<'a, R: Rng + ?Sized>(pop: &'a Population, rng: &mut R) -> Result<(&'a MolGraph, &'a MolGraph)> {
    let a = pop.entries.choose(rng).ok_or(CoreError::EmptyPopulation)?;
    let b = pop.entries.choose(rng).ok_or(CoreError::EmptyPopulation)?;
    Ok((&a.graph, &b.graph))
}

fn build(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Option<MolGraph> {
    let g = MolGraph::new(atoms, bonds).ok()?;
    g.validate().ok()?;
    Some(g)
}

/// Joins two graphs with extra bonds `(atom in a, atom in b, order)`.
fn join(a: &MolGraph, b: &MolGraph, links: &[(usize, usize, BondOrder)]) -> Option<MolGraph> {
    let offset = a.atom_count();
    let (atoms, mut bonds) = a.union(b).into_parts();
    bonds.extend(links.iter().map(|&(x, y, o)| Bond::new(x, offset + y, o)));
    build(atoms, bonds)
}

/// A side of a cut: the piece and its attachment atoms in piece indices.
#[derive(Debug, Clone)]
pub struct Piece {
    pub graph: MolGraph,
    pub ends: Vec<usize>,
}

fn pieces(g: &MolGraph, cut: &[usize], ends_by_comp: impl Fn(&[usize]) -> Vec<usize>) -> Option<Vec<Piece>> {
    let comps = g.components_without(cut);
    if comps.len() != 2 {
        return None;
    }
    Some(
        comps
            .iter()
            .map(|c| {
                let (graph, map) = g.subgraph(c);
                let ends = ends_by_comp(c).into_iter().map(|a| map[a].unwrap()).collect();
                Piece { graph, ends }
            })
            .collect(),
    )
}

/// Both sides of every acyclic single bond.
pub fn single_bond_pieces(g: &MolGraph) -> Vec<Piece> {
    let mut out = Vec::new();
    for (i, b) in g.bonds().iter().enumerate() {
        if b.order != BondOrder::Single || g.is_ring_bond(i) {
            continue;
        }
        let ends = |c: &[usize]| vec![if c.contains(&b.a) { b.a } else { b.b }];
        if let Some(p) = pieces(g, &[i], ends) {
            out.extend(p);
        }
    }
    out
}

/// Non-ring crossover: one side of a random acyclic single bond of each
/// parent, joined by a single bond.
pub fn crossover_non_ring<R: Rng + ?Sized>(p1: &MolGraph, p2: &MolGraph, rng: &mut R) -> Option<MolGraph> {
    let a = single_bond_pieces(p1);
    let b = single_bond_pieces(p2);
    let a = a.choose(rng)?;
    let b = b.choose(rng)?;
    join(&a.graph, &b.graph, &[(a.ends[0], b.ends[0], BondOrder::Single)])
}

/// One side of a two-bond cut through a 5- or 6-membered ring. `ends` holds
/// the ring atoms left open, in ring order along the kept arc.
#[derive(Debug, Clone)]
pub struct RingPiece {
    pub piece: Piece,
    pub ring_size: usize,
    pub arc_len: usize,
    pub order: BondOrder,
}

pub fn ring_pieces(g: &MolGraph) -> Vec<RingPiece> {
    let mut out = Vec::new();
    for cyc in g.cycles(5, 6) {
        let n = cyc.len();
        let ring_bonds: Vec<usize> = (0..n)
            .map(|k| g.bond_between(cyc[k], cyc[(k + 1) % n]).unwrap())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let (bi, bj) = (ring_bonds[i], ring_bonds[j]);
                let order = g.bond(bi).order;
                if order != g.bond(bj).order || !matches!(order, BondOrder::Single | BondOrder::Aromatic) {
                    continue;
                }
                let comps = g.components_without(&[bi, bj]);
                if comps.len() != 2 {
                    continue;
                }
                // arc one runs cyc[i+1]..=cyc[j], arc two cyc[j+1]..=cyc[i]
                let arcs = [
                    (cyc[(i + 1) % n], cyc[j], j - i),
                    (cyc[(j + 1) % n], cyc[i], n - (j - i)),
                ];
                for (s, t, arc_len) in arcs {
                    let comp = comps.iter().find(|c| c.contains(&s)).unwrap();
                    let (graph, map) = g.subgraph(comp);
                    out.push(RingPiece {
                        piece: Piece {
                            graph,
                            ends: vec![map[s].unwrap(), map[t].unwrap()],
                        },
                        ring_size: n,
                        arc_len,
                        order,
                    });
                }
            }
        }
    }
    out
}

/// Ring crossover: an arc of a ring of `p1` is closed with the
/// complementary-length arc of a same-size, same-bond-type ring of `p2`.
pub fn crossover_ring<R: Rng + ?Sized>(p1: &MolGraph, p2: &MolGraph, rng: &mut R) -> Option<MolGraph> {
    let a = ring_pieces(p1);
    let a = a.choose(rng)?;
    let b: Vec<RingPiece> = ring_pieces(p2)
        .into_iter()
        .filter(|b| b.ring_size == a.ring_size && b.order == a.order && b.arc_len + a.arc_len == a.ring_size)
        .collect();
    let b = b.choose(rng)?;
    let (s, t) = (a.piece.ends[0], a.piece.ends[1]);
    let (u, v) = (b.piece.ends[0], b.piece.ends[1]);
    // arc a runs s..t and arc b u..v; close t-u and v-s
    join(&a.piece.graph, &b.piece.graph, &[(t, u, a.order), (s, v, a.order)])
}

/// Fair coin between ring and non-ring crossover.
pub fn crossover<R: Rng + ?Sized>(p1: &MolGraph, p2: &MolGraph, rng: &mut R) -> Option<MolGraph> {
    if rng.gen_bool(0.5) {
        crossover_ring(p1, p2, rng)
    } else {
        crossover_non_ring(p1, p2, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    InsertAtom,
    ChangeBondOrder,
    DeleteRingBond,
    AddRing,
    DeleteAtom,
    ChangeAtom,
    AppendAtom,
}

impl MutationOp {
    pub const ALL: [MutationOp; 7] = [
        MutationOp::InsertAtom,
        MutationOp::ChangeBondOrder,
        MutationOp::DeleteRingBond,
        MutationOp::AddRing,
        MutationOp::DeleteAtom,
        MutationOp::ChangeAtom,
        MutationOp::AppendAtom,
    ];
}

/// Relative probabilities of the mutation operators, in `MutationOp::ALL`
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationWeights(pub [f64; 7]);

impl Default for MutationWeights {
    fn default() -> Self {
        MutationWeights([1.0; 7])
    }
}

fn hydrogens_for(element: Element, aromatic: bool, bond_sum: u32) -> u8 {
    implicit_hydrogens(element, aromatic, bond_sum)
}

fn new_atom(element: Element, bond_sum: u32) -> Atom {
    Atom {
        hydrogens: hydrogens_for(element, false, bond_sum),
        ..Atom::new(element)
    }
}

fn parts(g: &MolGraph) -> (Vec<Atom>, Vec<Bond>) {
    g.clone().into_parts()
}

/// Applies `op` at a random legal site. `None` if no site exists or the
/// edit fails validation.
pub fn mutate_with<R: Rng + ?Sized>(m: &MolGraph, op: MutationOp, rng: &mut R) -> Option<MolGraph> {
    let (mut atoms, mut bonds) = parts(m);
    let heavy = |i: usize| !m.atom(i).is_dummy();
    match op {
        MutationOp::InsertAtom => {
            let sites: Vec<usize> = (0..bonds.len()).filter(|&b| bonds[b].order == BondOrder::Single).collect();
            let &b = sites.choose(rng)?;
            let e = *[Element::C, Element::N, Element::O].choose(rng)?;
            let Bond { a, b: c, .. } = bonds[b];
            let x = atoms.len();
            atoms.push(new_atom(e, 2));
            bonds[b] = Bond::new(a, x, BondOrder::Single);
            bonds.push(Bond::new(x, c, BondOrder::Single));
        }
        MutationOp::ChangeBondOrder => {
            let sites: Vec<usize> = (0..bonds.len()).filter(|&b| bonds[b].order != BondOrder::Aromatic).collect();
            let &b = sites.choose(rng)?;
            let Bond { a, b: c, order } = bonds[b];
            let v = order.valence();
            let can_up = v < 3 && atoms[a].hydrogens > 0 && atoms[c].hydrogens > 0;
            let new = match (v > 1, can_up) {
                (true, true) => if rng.gen_bool(0.5) { v - 1 } else { v + 1 },
                (true, false) => v - 1,
                (false, true) => v + 1,
                (false, false) => return None,
            };
            for x in [a, c] {
                atoms[x].hydrogens = (atoms[x].hydrogens as i32 + v as i32 - new as i32) as u8;
            }
            bonds[b].order = BondOrder::from_valence(new)?;
        }
        MutationOp::DeleteRingBond => {
            let sites: Vec<usize> = (0..bonds.len())
                .filter(|&b| m.is_ring_bond(b) && bonds[b].order != BondOrder::Aromatic)
                .collect();
            let &b = sites.choose(rng)?;
            let Bond { a, b: c, order } = bonds.remove(b);
            atoms[a].hydrogens += order.valence() as u8;
            atoms[c].hydrogens += order.valence() as u8;
        }
        MutationOp::AddRing => {
            let mut sites = Vec::new();
            for i in 0..atoms.len() {
                if atoms[i].aromatic || atoms[i].hydrogens == 0 || !heavy(i) {
                    continue;
                }
                let dist = distances(m, i);
                for j in i + 1..atoms.len() {
                    if matches!(dist[j], Some(4) | Some(5)) && !atoms[j].aromatic && atoms[j].hydrogens > 0 && heavy(j) {
                        sites.push((i, j));
                    }
                }
            }
            let &(i, j) = sites.choose(rng)?;
            atoms[i].hydrogens -= 1;
            atoms[j].hydrogens -= 1;
            bonds.push(Bond::new(i, j, BondOrder::Single));
        }
        MutationOp::DeleteAtom => {
            let sites: Vec<usize> = (0..atoms.len())
                .filter(|&i| {
                    !atoms[i].aromatic
                        && heavy(i)
                        && match m.degree(i) {
                            1 => true,
                            2 => {
                                !m.is_ring_atom(i)
                                    && m.neighbors(i).iter().all(|&(_, b)| bonds[b].order == BondOrder::Single)
                            }
                            _ => false,
                        }
                })
                .collect();
            if atoms.len() < 2 {
                return None;
            }
            let &i = sites.choose(rng)?;
            let nbrs: Vec<(usize, usize)> = m.neighbors(i).to_vec();
            if let [(x, b)] = nbrs[..] {
                atoms[x].hydrogens += bonds[b].order.valence() as u8;
            } else {
                let (x, y) = (nbrs[0].0, nbrs[1].0);
                bonds.push(Bond::new(x, y, BondOrder::Single));
            }
            bonds.retain(|b| b.a != i && b.b != i);
            atoms.remove(i);
            for b in &mut bonds {
                b.a -= usize::from(b.a > i);
                b.b -= usize::from(b.b > i);
            }
        }
        MutationOp::ChangeAtom => {
            let sites: Vec<usize> = (0..atoms.len()).filter(|&i| heavy(i)).collect();
            let &i = sites.choose(rng)?;
            let alphabet: &[Element] = if atoms[i].aromatic {
                &[Element::C, Element::N]
            } else {
                &SUBSTITUTION_ALPHABET
            };
            let choices: Vec<Element> = alphabet.iter().copied().filter(|&e| e != atoms[i].element).collect();
            let &e = choices.choose(rng)?;
            let sum = m.bond_sum(i);
            atoms[i] = Atom {
                element: e,
                charge: 0,
                aromatic: atoms[i].aromatic,
                hydrogens: hydrogens_for(e, atoms[i].aromatic, sum),
            };
        }
        MutationOp::AppendAtom => {
            let sites: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].hydrogens > 0 && heavy(i)).collect();
            let &i = sites.choose(rng)?;
            let &e = SUBSTITUTION_ALPHABET.choose(rng)?;
            atoms[i].hydrogens -= 1;
            let x = atoms.len();
            atoms.push(new_atom(e, 1));
            bonds.push(Bond::new(i, x, BondOrder::Single));
        }
    }
    build(atoms, bonds)
}

/// Breadth-first bond distances from `src`.
fn distances(g: &MolGraph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.atom_count()];
    dist[src] = Some(0);
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(x) = queue.pop_front() {
        let d = dist[x].unwrap();
        for &(y, _) in g.neighbors(x) {
            if dist[y].is_none() {
                dist[y] = Some(d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// One operator drawn from `weights`, applied at a random site.
pub fn mutate<R: Rng + ?Sized>(m: &MolGraph, weights: &MutationWeights, rng: &mut R) -> Option<MolGraph> {
    let total: f64 = weights.0.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    let mut op = MutationOp::ALL[6];
    for (k, &w) in weights.0.iter().enumerate() {
        if r < w {
            op = MutationOp::ALL[k];
            break;
        }
        r -= w;
    }
    mutate_with(m, op, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub mutation_rate: f64,
    pub n_mol: usize,
    pub crossover_retries: usize,
    pub weights: MutationWeights,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            mutation_rate: DEFAULT_MUTATION_RATE,
            n_mol: DEFAULT_N_MOL,
            crossover_retries: CROSSOVER_RETRIES,
            weights: MutationWeights::default(),
        }
    }
}

/// Parents → crossover (retried) → mutation with probability
/// `mutation_rate`. A failed mutation keeps the crossover child. `None`
/// when every crossover attempt failed.
pub fn ga_offspring<R: Rng + ?Sized>(pop: &Population, config: &GaConfig, rng: &mut R) -> Result<Option<MolGraph>> {
    let (p1, p2) = select_parents(pop, rng)?;
    let child = (0..config.crossover_retries).find_map(|_| crossover(p1, p2, rng));
    let Some(child) = child else { return Ok(None) };
    if rng.gen_bool(config.mutation_rate.clamp(0.0, 1.0)) {
        if let Some(m) = mutate(&child, &config.weights, rng) {
            return Ok(Some(m));
        }
    }
    Ok(Some(child))
}

/// Population member keyed by canonical key.
pub fn member(graph: MolGraph, y: f64) -> Member {
    Member {
        key: canonical_key(&graph),
        graph,
        y,
    }
}
