mod parse;
pub(crate) mod write;

pub use parse::{parse_partial, parse_smiles, OpenClosure, PartialParse};
pub use write::{write_smiles, write_with_attachments, write_with_ranks, AttachmentLabel};
