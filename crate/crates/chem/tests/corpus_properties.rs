mod common;

use std::collections::HashMap;

use common::{corpus, isomorphic, random_permutation};
use fragrag_chem::safe::{cut_pairs, default_cut_rule};
use fragrag_chem::{
    canonical_key, morgan_fingerprint, parse_smiles, reattach, slice_arm_linker_arm, slice_at,
    tanimoto, write_smiles, FragmentKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn write_then_parse_is_isomorphic_on_corpus() {
    for rec in corpus(1000) {
        let written = write_smiles(&rec.graph);
        let back = parse_smiles(&written).unwrap();
        assert!(isomorphic(&rec.graph, &back), "{} -> {}", rec.smiles, written);
    }
}

#[test]
fn canonical_key_and_fingerprint_survive_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rec in corpus(150) {
        let key = canonical_key(&rec.graph);
        let fp = morgan_fingerprint(&rec.graph);
        for _ in 0..100 {
            let p = random_permutation(rec.graph.atom_count(), &mut rng);
            let g = rec.graph.permute(&p);
            assert_eq!(canonical_key(&g), key, "{}", rec.smiles);
            assert_eq!(morgan_fingerprint(&g), fp);
        }
    }
}

#[test]
fn key_collisions_match_brute_force_isomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records = corpus(1000);
    // permuted copies of a subset give true positives
    let mut graphs: Vec<_> = records.iter().map(|r| r.graph.clone()).collect();
    for r in records.iter().take(50) {
        let p = random_permutation(r.graph.atom_count(), &mut rng);
        graphs.push(r.graph.permute(&p));
    }
    let keys: Vec<String> = graphs.iter().map(canonical_key).collect();
    let mut by_size: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, g) in graphs.iter().enumerate() {
        by_size
            .entry((g.atom_count(), g.bond_count()))
            .or_default()
            .push(i);
    }
    let mut positives = 0;
    for group in by_size.values() {
        for (x, &i) in group.iter().enumerate() {
            for &j in &group[x + 1..] {
                let iso = isomorphic(&graphs[i], &graphs[j]);
                assert_eq!(keys[i] == keys[j], iso, "{} vs {}", keys[i], keys[j]);
                positives += iso as usize;
            }
        }
    }
    assert!(positives >= 50);
}

#[test]
fn tanimoto_symmetric_and_bounded() {
    let recs = corpus(200);
    let fps: Vec<_> = recs.iter().map(|r| morgan_fingerprint(&r.graph)).collect();
    for i in 0..fps.len() {
        assert_eq!(tanimoto(&fps[i], &fps[i]), 1.0);
        for j in 0..i {
            let s = tanimoto(&fps[i], &fps[j]);
            assert!((0.0..=1.0).contains(&s));
            assert_eq!(s, tanimoto(&fps[j], &fps[i]));
        }
    }
}

#[test]
fn slicing_round_trips_on_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut decomposed = 0;
    for rec in corpus(1000) {
        let Some(s) = slice_arm_linker_arm(&rec.graph, &mut rng) else {
            assert!(cut_pairs(&rec.graph, default_cut_rule).is_empty());
            continue;
        };
        decomposed += 1;
        assert_eq!(s.arm1.kind(), FragmentKind::Arm);
        assert_eq!(s.linker.kind(), FragmentKind::Linker);
        assert_eq!(s.arm2.kind(), FragmentKind::Arm);
        for b in [s.cut.0, s.cut.1] {
            assert!(!rec.graph.is_ring_bond(b));
        }
        let back = reattach(&s.into_vec()).unwrap();
        assert!(isomorphic(&back, &rec.graph), "{}", rec.smiles);
    }
    assert!(decomposed > 900);
}

#[test]
fn every_cut_pair_of_small_molecules_round_trips() {
    for smi in ["CCOCC", "CC(C)Oc1ccccc1N", "O=C(NCC1CC1)c1ccncc1"] {
        let g = parse_smiles(smi).unwrap();
        for p in cut_pairs(&g, default_cut_rule) {
            let s = slice_at(&g, p).unwrap();
            assert!(isomorphic(&reattach(&s.into_vec()).unwrap(), &g));
        }
    }
}
