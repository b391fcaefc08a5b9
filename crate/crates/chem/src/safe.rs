//! SAFE-style fragment handling.
//!
//! A [`Fragment`] is a graph plus one (arm) or two (linker) open attachment
//! slots. Fragments are written as dot-separated SMILES blocks whose
//! cross-block bonds are shared ring-closure labels starting at
//! [`FIRST_ATTACHMENT_LABEL`]; in vocabulary storage unfilled slots are `[*]`.

use std::fmt;

use rand::Rng;

use crate::canon::canonical_key;
use crate::element::Element;
use crate::error::{ChemError, Result};
use crate::fingerprint::{morgan_fingerprint, Fingerprint};
use crate::graph::{Atom, Bond, BondOrder, MolGraph};
use crate::smiles::{parse_partial, write_with_attachments, AttachmentLabel};

/// Cross-fragment closures use `%10` and up so they never collide with
/// intra-fragment ring digits 1–9.
pub const FIRST_ATTACHMENT_LABEL: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentKind {
    Arm,
    Linker,
}

impl FragmentKind {
    pub fn slots(self) -> usize {
        match self {
            FragmentKind::Arm => 1,
            FragmentKind::Linker => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FragmentKind::Arm => "arm",
            FragmentKind::Linker => "linker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "arm" => Some(FragmentKind::Arm),
            "linker" => Some(FragmentKind::Linker),
            _ => None,
        }
    }
}

impl fmt::Display for FragmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    graph: MolGraph,
    attachments: Vec<usize>,
}

impl Fragment {
    /// `attachments[k]` is the atom carrying slot `k`. Each slot reserves one
    /// unit of valence for a single bond.
    pub fn new(graph: MolGraph, attachments: Vec<usize>) -> Result<Self> {
        if attachments.is_empty() || attachments.len() > 2 {
            return Err(ChemError::AttachmentMismatch(format!(
                "fragment needs 1 or 2 attachments, got {}",
                attachments.len()
            )));
        }
        let mut open = vec![0u32; graph.atom_count()];
        for &a in &attachments {
            if a >= graph.atom_count() {
                return Err(ChemError::AttachmentMismatch(format!(
                    "attachment atom {a} does not exist"
                )));
            }
            open[a] += 1;
        }
        if graph.atoms().iter().any(Atom::is_dummy) {
            return Err(ChemError::Structure("fragment graph holds dummy atoms".into()));
        }
        graph.check_valence_with(&open)?;
        if !graph.is_connected() {
            return Err(ChemError::Structure("fragment is disconnected".into()));
        }
        Ok(Fragment { graph, attachments })
    }

    /// Parses the `[*]` storage form (or any SMILES whose dummies mark slots).
    pub fn from_smiles(text: &str) -> Result<Self> {
        let parsed = parse_partial(text)?;
        if !parsed.open.is_empty() {
            return Err(ChemError::parse(text.len(), "unmatched ring closure in fragment"));
        }
        from_dummy_graph(&parsed.graph, &[])
    }

    pub fn graph(&self) -> &MolGraph {
        &self.graph
    }

    pub fn attachments(&self) -> &[usize] {
        &self.attachments
    }

    pub fn kind(&self) -> FragmentKind {
        if self.attachments.len() == 1 {
            FragmentKind::Arm
        } else {
            FragmentKind::Linker
        }
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.graph.heavy_atom_count()
    }

    /// The graph with a `*` atom single-bonded at every slot (appended in
    /// slot order).
    pub fn with_dummies(&self) -> MolGraph {
        let (mut atoms, mut bonds) = self.graph.clone().into_parts();
        for &a in &self.attachments {
            let d = atoms.len();
            atoms.push(Atom::new(Element::Dummy));
            bonds.push(Bond::new(a, d, BondOrder::Single));
        }
        MolGraph::new(atoms, bonds).expect("dummy attachment")
    }

    /// Canonical `[*]` form; doubles as the dedup key.
    pub fn to_smiles(&self) -> String {
        canonical_key(&self.with_dummies())
    }

    pub fn canonical_key(&self) -> String {
        self.to_smiles()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        morgan_fingerprint(&self.with_dummies())
    }

    /// One SAFE block with slot `k` written as ring-closure `labels[k]`.
    pub fn block(&self, labels: &[u32]) -> String {
        assert_eq!(labels.len(), self.attachments.len());
        let marks: Vec<AttachmentLabel> = self
            .attachments
            .iter()
            .zip(labels)
            .map(|(&atom, &label)| AttachmentLabel { atom, label })
            .collect();
        write_with_attachments(&self.graph, &marks)
    }

    /// Same fragment with slots listed in the given order.
    pub fn reorder_slots(&self, order: &[usize]) -> Fragment {
        Fragment {
            graph: self.graph.clone(),
            attachments: order.iter().map(|&k| self.attachments[k]).collect(),
        }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_smiles())
    }
}

/// Strips `*` atoms (each must have exactly one neighbour) and records their
/// neighbours as attachments; `extra` adds slots on surviving atoms first.
fn from_dummy_graph(g: &MolGraph, extra: &[usize]) -> Result<Fragment> {
    let mut keep = Vec::new();
    let mut dummy_neighbors = Vec::new();
    for i in 0..g.atom_count() {
        if g.atom(i).is_dummy() {
            let nb = g.neighbors(i);
            if nb.len() != 1 || g.bond(nb[0].1).order != BondOrder::Single {
                return Err(ChemError::AttachmentMismatch(
                    "dummy atom must carry exactly one single bond".into(),
                ));
            }
            if g.atom(nb[0].0).is_dummy() {
                return Err(ChemError::AttachmentMismatch("dummy bonded to dummy".into()));
            }
            dummy_neighbors.push(nb[0].0);
        } else {
            keep.push(i);
        }
    }
    let (sub, map) = g.subgraph(&keep);
    let attachments = extra
        .iter()
        .chain(&dummy_neighbors)
        .map(|&a| map[a].expect("attachment on kept atom"))
        .collect();
    Fragment::new(sub, attachments)
}

/// Predicate deciding whether a bond may be cut during slicing.
pub type CutRule = fn(&MolGraph, usize) -> bool;

/// Single, acyclic, between two non-dummy atoms.
pub fn default_cut_rule(g: &MolGraph, bond: usize) -> bool {
    let b = g.bond(bond);
    b.order == BondOrder::Single
        && !g.is_ring_bond(bond)
        && !g.atom(b.a).is_dummy()
        && !g.atom(b.b).is_dummy()
}

/// An arm–linker–arm decomposition. `linker` slot 0 faces `arm1`, slot 1
/// faces `arm2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slicing {
    pub arm1: Fragment,
    pub linker: Fragment,
    pub arm2: Fragment,
    pub cut: (usize, usize),
}

impl Slicing {
    pub fn fragments(&self) -> [&Fragment; 3] {
        [&self.arm1, &self.linker, &self.arm2]
    }

    pub fn into_vec(self) -> Vec<Fragment> {
        vec![self.arm1, self.linker, self.arm2]
    }
}

/// All unordered pairs of cuttable bonds (indices ascending).
pub fn cut_pairs(g: &MolGraph, rule: CutRule) -> Vec<(usize, usize)> {
    let eligible: Vec<usize> = (0..g.bond_count()).filter(|&b| rule(g, b)).collect();
    let mut pairs = Vec::new();
    for (i, &a) in eligible.iter().enumerate() {
        for &b in &eligible[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Cuts the two given bonds. `None` unless the cut leaves exactly three
/// components with the middle one touching both cuts.
pub fn slice_at(g: &MolGraph, cut: (usize, usize)) -> Option<Slicing> {
    let (b1, b2) = cut;
    if b1 == b2 {
        return None;
    }
    let comps = g.components_without(&[b1, b2]);
    if comps.len() != 3 {
        return None;
    }
    let comp_of = |atom: usize| comps.iter().position(|c| c.contains(&atom)).unwrap();
    let (x1, y1) = (g.bond(b1).a, g.bond(b1).b);
    let (x2, y2) = (g.bond(b2).a, g.bond(b2).b);
    let (c1a, c1b, c2a, c2b) = (comp_of(x1), comp_of(y1), comp_of(x2), comp_of(y2));
    let middle = [c1a, c1b]
        .into_iter()
        .find(|c| *c == c2a || *c == c2b)?;
    let (mid_atom1, arm1_atom) = if c1a == middle { (x1, y1) } else { (y1, x1) };
    let (mid_atom2, arm2_atom) = if c2a == middle { (x2, y2) } else { (y2, x2) };
    let arm1_comp = comp_of(arm1_atom);
    let arm2_comp = comp_of(arm2_atom);
    if arm1_comp == middle || arm2_comp == middle || arm1_comp == arm2_comp {
        return None;
    }
    let build = |members: &[usize], attach: &[usize]| -> Option<Fragment> {
        let (sub, map) = g.subgraph(members);
        let slots = attach.iter().map(|&a| map[a].unwrap()).collect();
        Fragment::new(sub, slots).ok()
    };
    Some(Slicing {
        arm1: build(&comps[arm1_comp], &[arm1_atom])?,
        linker: build(&comps[middle], &[mid_atom1, mid_atom2])?,
        arm2: build(&comps[arm2_comp], &[arm2_atom])?,
        cut,
    })
}

/// Arm–linker–arm slicing with a uniformly sampled valid bond pair.
pub fn slice_arm_linker_arm<R: Rng + ?Sized>(g: &MolGraph, rng: &mut R) -> Option<Slicing> {
    slice_with_rule(g, default_cut_rule, rng)
}

pub fn slice_with_rule<R: Rng + ?Sized>(
    g: &MolGraph,
    rule: CutRule,
    rng: &mut R,
) -> Option<Slicing> {
    // With acyclic cut bonds every pair is valid, but the check stays so
    // custom rules cannot produce malformed slicings.
    let valid: Vec<(usize, usize)> = cut_pairs(g, rule)
        .into_iter()
        .filter(|&p| slice_at(g, p).is_some())
        .collect();
    if valid.is_empty() {
        return None;
    }
    let pick = valid[rng.gen_range(0..valid.len())];
    slice_at(g, pick)
}

/// Bonds slot `slot_a` of `a` to slot `slot_b` of `b`. The result keeps the
/// remaining slots of `a` then `b`; with none left it is a plain molecule.
fn join(a: &Fragment, slot_a: usize, b: &Fragment, slot_b: usize) -> Result<(MolGraph, Vec<usize>)> {
    let offset = a.graph.atom_count();
    let joined = a.graph.union(&b.graph);
    let (atoms, mut bonds) = joined.into_parts();
    let x = a.attachments[slot_a];
    let y = b.attachments[slot_b] + offset;
    bonds.push(Bond::new(x, y, BondOrder::Single));
    let graph = MolGraph::new(atoms, bonds)?;
    let mut rest: Vec<usize> = a
        .attachments
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != slot_a)
        .map(|(_, &v)| v)
        .collect();
    rest.extend(
        b.attachments
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != slot_b)
            .map(|(_, &v)| v + offset),
    );
    let mut open = vec![0u32; graph.atom_count()];
    for &r in &rest {
        open[r] += 1;
    }
    graph.check_valence_with(&open)?;
    Ok((graph, rest))
}

/// Reassembles `[arm, arm]` or `[arm, linker, arm]` into a molecule.
pub fn reattach(fragments: &[Fragment]) -> Result<MolGraph> {
    let kinds: Vec<FragmentKind> = fragments.iter().map(Fragment::kind).collect();
    match kinds.as_slice() {
        [FragmentKind::Arm, FragmentKind::Arm] => {
            let (g, rest) = join(&fragments[0], 0, &fragments[1], 0)?;
            debug_assert!(rest.is_empty());
            Ok(g)
        }
        [FragmentKind::Arm, FragmentKind::Linker, FragmentKind::Arm] => {
            let (g, rest) = join(&fragments[0], 0, &fragments[1], 0)?;
            let partial = Fragment::new(g, rest)?;
            let (g, _) = join(&partial, 0, &fragments[2], 0)?;
            Ok(g)
        }
        other => Err(ChemError::AttachmentMismatch(format!(
            "cannot pair slots of {other:?}"
        ))),
    }
}

/// Joins `arm` onto slot `linker_slot` of `linker`; the result is an arm whose
/// open slot is the linker's other one.
pub fn combine_arm_linker_at(arm: &Fragment, linker: &Fragment, linker_slot: usize) -> Result<Fragment> {
    if arm.kind() != FragmentKind::Arm || linker.kind() != FragmentKind::Linker {
        return Err(ChemError::AttachmentMismatch(
            "combine needs an arm and a linker".into(),
        ));
    }
    let (g, rest) = join(arm, 0, linker, linker_slot)?;
    Fragment::new(g, rest)
}

pub fn combine_arm_linker<R: Rng + ?Sized>(
    arm: &Fragment,
    linker: &Fragment,
    rng: &mut R,
) -> Result<Fragment> {
    combine_arm_linker_at(arm, linker, rng.gen_range(0..2))
}

/// Dot-joined SAFE text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SafeString(String);

impl SafeString {
    pub fn new(text: impl Into<String>) -> Self {
        SafeString(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn blocks(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    /// Parses the whole string (closures span blocks) into one connected,
    /// valence-valid molecule.
    pub fn assemble(&self) -> Result<MolGraph> {
        let parsed = parse_partial(&self.0)?;
        if let Some(open) = parsed.open.first() {
            return Err(ChemError::AttachmentMismatch(format!(
                "unpaired attachment label {}",
                open.label
            )));
        }
        if parsed.graph.atoms().iter().any(Atom::is_dummy) {
            return Err(ChemError::AttachmentMismatch("unfilled [*] attachment".into()));
        }
        parsed.graph.check_valence()?;
        if !parsed.graph.is_connected() {
            return Err(ChemError::Structure("SAFE blocks do not connect".into()));
        }
        Ok(parsed.graph)
    }

    /// Per-block fragments; open labels and `[*]` atoms become slots. Also
    /// returns, per block, the label of each slot (`None` for `[*]`).
    pub fn fragments_with_labels(&self) -> Result<Vec<(Fragment, Vec<Option<u32>>)>> {
        let mut out = Vec::new();
        for block in self.blocks() {
            let parsed = parse_partial(block)?;
            for o in &parsed.open {
                if o.order.is_some_and(|b| b != BondOrder::Single) {
                    return Err(ChemError::AttachmentMismatch(format!(
                        "attachment label {} is not a single bond",
                        o.label
                    )));
                }
            }
            let extra: Vec<usize> = parsed.open.iter().map(|o| o.atom).collect();
            let frag = from_dummy_graph(&parsed.graph, &extra)?;
            let n_dummy = frag.attachments.len() - extra.len();
            let labels = parsed
                .open
                .iter()
                .map(|o| Some(o.label))
                .chain(std::iter::repeat(None).take(n_dummy))
                .collect();
            out.push((frag, labels));
        }
        Ok(out)
    }

    pub fn fragments(&self) -> Result<Vec<Fragment>> {
        Ok(self
            .fragments_with_labels()?
            .into_iter()
            .map(|(f, _)| f)
            .collect())
    }
}

impl fmt::Display for SafeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A slot reference: (fragment index, slot index).
pub type SlotRef = (usize, usize);

/// Writes fragments as SAFE blocks in `order`. Each connection becomes a
/// shared label; labels are numbered from `%10` in order of first appearance
/// (blocks in emission order, slots in slot order). Unconnected slots become
/// `[*]` unless `label_open` is set, in which case they also receive labels.
/// Returns the text and the labels of unconnected slots in the same order.
pub fn write_safe(
    fragments: &[&Fragment],
    connections: &[(SlotRef, SlotRef)],
    order: &[usize],
    label_open: bool,
) -> Result<(SafeString, Vec<u32>)> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..fragments.len()).collect::<Vec<_>>() {
        return Err(ChemError::AttachmentMismatch(
            "order must be a permutation of the fragments".into(),
        ));
    }
    let mut labels: Vec<Vec<Option<u32>>> =
        fragments.iter().map(|f| vec![None; f.attachments.len()]).collect();
    let partner = |slot: SlotRef| -> Option<SlotRef> {
        connections.iter().find_map(|&(a, b)| {
            if a == slot {
                Some(b)
            } else if b == slot {
                Some(a)
            } else {
                None
            }
        })
    };
    for &(a, b) in connections {
        for (f, s) in [a, b] {
            if f >= fragments.len() || s >= fragments[f].attachments.len() {
                return Err(ChemError::AttachmentMismatch(format!("no slot {s} on fragment {f}")));
            }
        }
    }
    let mut next = FIRST_ATTACHMENT_LABEL;
    let mut open_labels = Vec::new();
    for &f in order {
        for s in 0..fragments[f].attachments.len() {
            if labels[f][s].is_some() {
                continue;
            }
            match partner((f, s)) {
                Some((pf, ps)) => {
                    labels[f][s] = Some(next);
                    labels[pf][ps] = Some(next);
                    next += 1;
                }
                None if label_open => {
                    labels[f][s] = Some(next);
                    open_labels.push(next);
                    next += 1;
                }
                None => {}
            }
        }
    }
    let mut blocks = Vec::with_capacity(order.len());
    for &f in order {
        let frag = fragments[f];
        let all_labeled = labels[f].iter().all(Option::is_some);
        if all_labeled {
            let l: Vec<u32> = labels[f].iter().map(|x| x.unwrap()).collect();
            blocks.push(frag.block(&l));
        } else {
            // mixed: dummies for unlabeled slots, labels for the rest
            let (mut atoms, mut bonds) = frag.graph.clone().into_parts();
            let mut marks = Vec::new();
            for (s, &atom) in frag.attachments.iter().enumerate() {
                match labels[f][s] {
                    Some(label) => marks.push(AttachmentLabel { atom, label }),
                    None => {
                        let d = atoms.len();
                        atoms.push(Atom::new(Element::Dummy));
                        bonds.push(Bond::new(atom, d, BondOrder::Single));
                    }
                }
            }
            let g = MolGraph::new(atoms, bonds)?;
            blocks.push(write_with_attachments(&g, &marks));
        }
    }
    Ok((SafeString(blocks.join(".")), open_labels))
}

/// SAFE text for a chain `[arm, arm]`, `[arm, linker, arm]` or a single
/// fragment (stored with `[*]`), emitting blocks in `order`.
pub fn to_safe(fragments: &[Fragment], order: &[usize]) -> Result<SafeString> {
    let refs: Vec<&Fragment> = fragments.iter().collect();
    let kinds: Vec<FragmentKind> = fragments.iter().map(Fragment::kind).collect();
    let connections: Vec<(SlotRef, SlotRef)> = match kinds.as_slice() {
        [_] => vec![],
        [FragmentKind::Arm, FragmentKind::Arm] => vec![((0, 0), (1, 0))],
        [FragmentKind::Arm, FragmentKind::Linker, FragmentKind::Arm] => {
            vec![((0, 0), (1, 0)), ((1, 1), (2, 0))]
        }
        other => {
            return Err(ChemError::AttachmentMismatch(format!(
                "unsupported fragment chain {other:?}"
            )))
        }
    };
    write_safe(&refs, &connections, order, false).map(|(s, _)| s)
}

/// Reassembles a SAFE string produced by [`to_safe`].
pub fn from_safe(s: &SafeString) -> Result<MolGraph> {
    s.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key(g: &MolGraph) -> String {
        canonical_key(g)
    }

    fn frag(s: &str) -> Fragment {
        Fragment::from_smiles(s).unwrap()
    }

    #[test]
    fn too_small_or_cyclic_molecules_do_not_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(slice_arm_linker_arm(&parse_smiles("CC").unwrap(), &mut rng).is_none());
        assert!(slice_arm_linker_arm(&parse_smiles("C1CC1").unwrap(), &mut rng).is_none());
    }

    #[test]
    fn ccocc_slicings_enumerated() {
        let g = parse_smiles("CCOCC").unwrap();
        let pairs = cut_pairs(&g, default_cut_rule);
        assert_eq!(pairs.len(), 6);
        let slicings: Vec<[String; 3]> = pairs
            .iter()
            .map(|&p| {
                let s = slice_at(&g, p).unwrap();
                [s.arm1.to_smiles(), s.linker.to_smiles(), s.arm2.to_smiles()]
            })
            .collect();
        let want = [frag("CC[*]").to_smiles(), frag("[*]O[*]").to_smiles(), frag("[*]CC").to_smiles()];
        assert!(slicings.iter().any(|s| {
            let mut a = s.clone();
            let mut b = want.clone();
            a.sort();
            b.sort();
            a == b
        }));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = slice_arm_linker_arm(&g, &mut rng).unwrap();
            assert_eq!(key(&reattach(&s.clone().into_vec()).unwrap()), key(&g));
        }
    }

    #[test]
    fn smallest_joins() {
        let g = reattach(&[frag("C[*]"), frag("[*]C")]).unwrap();
        assert_eq!(key(&g), key(&parse_smiles("CC").unwrap()));
        let g = reattach(&[frag("CC[*]"), frag("[*]O[*]"), frag("[*]C")]).unwrap();
        assert_eq!(key(&g), key(&parse_smiles("CCOC").unwrap()));
        assert!(matches!(
            reattach(&[frag("C[*]"), frag("[*]O[*]")]),
            Err(ChemError::AttachmentMismatch(_))
        ));
        // carbonyl oxygen arm onto a saturated carbon overflows valence
        let bad = Fragment::new(parse_smiles("C").unwrap(), vec![0]);
        assert!(matches!(bad, Err(ChemError::Valence { .. })));
    }

    #[test]
    fn combine_is_an_arm() {
        let c = combine_arm_linker_at(&frag("C[*]"), &frag("[*]O[*]"), 0).unwrap();
        assert_eq!(c.kind(), FragmentKind::Arm);
        assert_eq!(c.to_smiles(), frag("CO[*]").to_smiles());
        let l = frag("[*]CC[*]");
        let a = combine_arm_linker_at(&frag("N[*]"), &l, 0).unwrap();
        let b = combine_arm_linker_at(&frag("N[*]"), &l, 1).unwrap();
        assert_eq!(a.canonical_key(), b.canonical_key());
    }

    #[test]
    fn safe_order_invariance() {
        let g = parse_smiles("CCOCC").unwrap();
        let s = slice_at(&g, (1, 2)).unwrap().into_vec();
        let a = to_safe(&s, &[0, 1, 2]).unwrap();
        let b = to_safe(&s, &[2, 0, 1]).unwrap();
        assert_eq!(a.blocks().count(), 3);
        assert_eq!(key(&from_safe(&a).unwrap()), key(&from_safe(&b).unwrap()));
        assert_eq!(key(&from_safe(&a).unwrap()), key(&g));
        let single = to_safe(&s[1..2], &[0]).unwrap();
        assert!(single.as_str().contains("[*]"));
    }

    #[test]
    fn block_fragments_recover_slots() {
        let s = SafeString::new("CC%10.O%10%11.C%11C");
        let frags = s.fragments_with_labels().unwrap();
        assert_eq!(frags.len(), 3);
        assert_eq!(frags[1].0.kind(), FragmentKind::Linker);
        assert_eq!(frags[1].1, vec![Some(10), Some(11)]);
        assert!(SafeString::new("CC%10.O%10%11").assemble().is_err());
        assert!(SafeString::new("CC%10.C(").fragments().is_err());
    }
}
