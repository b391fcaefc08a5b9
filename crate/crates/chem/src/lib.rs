//! Molecular graph toolkit: SMILES, canonical keys, circular fingerprints and
//! SAFE-style arm/linker fragments.

pub mod canon;
pub mod corpus;
pub mod element;
pub mod error;
pub mod fingerprint;
pub mod graph;
pub mod knn;
pub mod safe;
pub mod smiles;
pub mod task;

pub use canon::{canonical_key, canonical_ranks};
pub use element::Element;
pub use error::{ChemError, Result};
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint, FP_BITS, FP_RADIUS};
pub use graph::{Atom, Bond, BondOrder, MolGraph};
pub use safe::{
    combine_arm_linker, combine_arm_linker_at, from_safe, reattach, slice_arm_linker_arm, slice_at,
    to_safe, write_safe, Fragment, FragmentKind, SafeString, Slicing,
};
pub use smiles::{parse_smiles, write_smiles};
pub use task::{Completion, GenerationTask, TaskMode};
pub use knn::{knn_fragments, knn_indices, IndexedFragment};
