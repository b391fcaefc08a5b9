#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fragrag_chem::corpus::{read_corpus, CorpusRecord};
use fragrag_chem::MolGraph;

pub fn corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.tsv")
}

pub fn corpus(n: usize) -> Vec<CorpusRecord> {
    let mut r = read_corpus(&corpus_path()).expect("corpus readable");
    r.truncate(n);
    r
}

pub fn labelled(n: usize) -> Vec<(MolGraph, f64)> {
    corpus(n).into_iter().map(|r| (r.graph, r.property)).collect()
}
