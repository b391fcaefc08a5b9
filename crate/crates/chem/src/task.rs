//! Generation tasks: a SAFE prefix of hard fragments with open attachment
//! labels, completed by one more block.
//!
//! Linker design writes two arms as `A%10.B%11`; the completion must carry
//! both labels. Motif extension writes the arm and linker as two blocks,
//! `A%10.L%10%11`, so the prefix reads exactly like the first two blocks of a
//! sliced molecule; the completion is an arm carrying `%11`.

use std::fmt;

use crate::canon::canonical_key;
use crate::element::Element;
use crate::error::{ChemError, Result};
use crate::graph::{Atom, Bond, BondOrder, MolGraph};
use crate::safe::{combine_arm_linker_at, write_safe, Fragment, FragmentKind, SafeString, SlotRef};
use crate::smiles::parse_partial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskMode {
    LinkerDesign,
    MotifExtension,
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskMode::LinkerDesign => "linker_design",
            TaskMode::MotifExtension => "motif_extension",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GenerationTask {
    mode: TaskMode,
    hard_input: SafeString,
    open_labels: Vec<u32>,
    /// Hard pieces as they must reappear in the output: two arms, or the
    /// combined arm⊕linker.
    hard_units: Vec<Fragment>,
    prefix_atoms: usize,
}

/// A completed task: the assembled molecule, the generated fragment and the
/// number of leading atoms that came from the prefix.
#[derive(Debug, Clone)]
pub struct Completion {
    pub molecule: MolGraph,
    pub generated: Fragment,
    pub prefix_atoms: usize,
}

impl GenerationTask {
    /// Two arms, written in the given order.
    pub fn linker_design(arm1: &Fragment, arm2: &Fragment, swap: bool) -> Result<Self> {
        for a in [arm1, arm2] {
            if a.kind() != FragmentKind::Arm {
                return Err(ChemError::AttachmentMismatch("linker design needs two arms".into()));
            }
        }
        let order = if swap { [1, 0] } else { [0, 1] };
        let (hard_input, open_labels) = write_safe(&[arm1, arm2], &[], &order, true)?;
        Self::finish(
            TaskMode::LinkerDesign,
            hard_input,
            open_labels,
            vec![arm1.clone(), arm2.clone()],
        )
    }

    /// Arm joined to slot `linker_slot` of the linker; the linker's other slot
    /// stays open. `linker_first` emits the linker block first.
    pub fn motif_extension(
        arm: &Fragment,
        linker: &Fragment,
        linker_slot: usize,
        linker_first: bool,
    ) -> Result<Self> {
        let combined = combine_arm_linker_at(arm, linker, linker_slot)?;
        let connections: [(SlotRef, SlotRef); 1] = [((0, 0), (1, linker_slot))];
        let order = if linker_first { [1, 0] } else { [0, 1] };
        let (hard_input, open_labels) = write_safe(&[arm, linker], &connections, &order, true)?;
        Self::finish(TaskMode::MotifExtension, hard_input, open_labels, vec![combined])
    }

    fn finish(
        mode: TaskMode,
        hard_input: SafeString,
        open_labels: Vec<u32>,
        hard_units: Vec<Fragment>,
    ) -> Result<Self> {
        let prefix_atoms = parse_partial(hard_input.as_str())?.graph.atom_count();
        Ok(GenerationTask {
            mode,
            hard_input,
            open_labels,
            hard_units,
            prefix_atoms,
        })
    }

    pub fn mode(&self) -> TaskMode {
        self.mode
    }

    pub fn hard_input(&self) -> &SafeString {
        &self.hard_input
    }

    pub fn open_labels(&self) -> &[u32] {
        &self.open_labels
    }

    pub fn hard_units(&self) -> &[Fragment] {
        &self.hard_units
    }

    pub fn expected_kind(&self) -> FragmentKind {
        match self.mode {
            TaskMode::LinkerDesign => FragmentKind::Linker,
            TaskMode::MotifExtension => FragmentKind::Arm,
        }
    }

    /// Kind of soft fragments that guide this task.
    pub fn soft_kind(&self) -> FragmentKind {
        self.expected_kind()
    }

    /// Text the model sees before generating: the prefix and a trailing dot.
    pub fn prompt(&self) -> String {
        format!("{}.", self.hard_input)
    }

    /// `frag` written as the completion block, its slots taking the open
    /// labels in slot order.
    pub fn target_block(&self, frag: &Fragment) -> Result<String> {
        if frag.kind() != self.expected_kind() {
            return Err(ChemError::AttachmentMismatch(format!(
                "task expects a {}, got a {}",
                self.expected_kind(),
                frag.kind()
            )));
        }
        Ok(frag.block(&self.open_labels))
    }

    /// Assembles prefix plus one generated block.
    pub fn complete(&self, block: &str) -> Result<Completion> {
        if block.contains('.') {
            return Err(ChemError::Structure("completion must be a single block".into()));
        }
        let parsed = parse_partial(block)?;
        if parsed.graph.atom_count() == 0 {
            return Err(ChemError::Structure("empty completion".into()));
        }
        if parsed.graph.atoms().iter().any(Atom::is_dummy) {
            return Err(ChemError::AttachmentMismatch("completion holds [*]".into()));
        }
        let mut labels: Vec<u32> = parsed.open.iter().map(|o| o.label).collect();
        labels.sort_unstable();
        let mut expected = self.open_labels.clone();
        expected.sort_unstable();
        if labels != expected {
            return Err(ChemError::AttachmentMismatch(format!(
                "completion labels {labels:?}, expected {expected:?}"
            )));
        }
        if parsed
            .open
            .iter()
            .any(|o| o.order.is_some_and(|b| b != BondOrder::Single))
        {
            return Err(ChemError::AttachmentMismatch("attachment bond must be single".into()));
        }
        let attachments = parsed.open.iter().map(|o| o.atom).collect();
        let generated = Fragment::new(parsed.graph, attachments)?;
        let molecule = SafeString::new(format!("{}.{}", self.hard_input, block)).assemble()?;
        Ok(Completion {
            molecule,
            generated,
            prefix_atoms: self.prefix_atoms,
        })
    }

    /// Checks that cutting `c.molecule` between prefix and generated atoms
    /// gives back exactly the hard units, each attached at its slots.
    pub fn hard_fragments_present(&self, c: &Completion) -> bool {
        let g = &c.molecule;
        let n = c.prefix_atoms;
        if n > g.atom_count() {
            return false;
        }
        let crossing: Vec<usize> = (0..g.bond_count())
            .filter(|&b| (g.bond(b).a < n) != (g.bond(b).b < n))
            .collect();
        if crossing.len() != self.open_labels.len() {
            return false;
        }
        if crossing.iter().any(|&b| g.bond(b).order != BondOrder::Single) {
            return false;
        }
        let mut found: Vec<String> = Vec::new();
        for comp in g.components_without(&crossing) {
            if comp.iter().any(|&a| a >= n) {
                continue;
            }
            // rebuild the piece with a dummy at each cut
            let (sub, map) = g.subgraph(&comp);
            let (mut atoms, mut bonds) = sub.into_parts();
            for &b in &crossing {
                let inner = if g.bond(b).a < n { g.bond(b).a } else { g.bond(b).b };
                if let Some(local) = map[inner] {
                    let d = atoms.len();
                    atoms.push(Atom::new(Element::Dummy));
                    bonds.push(Bond::new(local, d, BondOrder::Single));
                }
            }
            match MolGraph::new(atoms, bonds) {
                Ok(piece) => found.push(canonical_key(&piece)),
                Err(_) => return false,
            }
        }
        let mut want: Vec<String> = self.hard_units.iter().map(Fragment::canonical_key).collect();
        found.sort();
        want.sort();
        found == want
    }
}
