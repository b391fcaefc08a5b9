mod common;

use fragrag_chem::{canonical_key, parse_smiles, write_smiles, MolGraph};
use fragrag_core::genetic::{
    crossover, mutate, select_parents, GaConfig, MutationWeights, Population, DEFAULT_MUTATION_RATE, DEFAULT_N_MOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Validation plus an independent check: the molecule survives a trip
/// through SMILES text unchanged.
fn sound(g: &MolGraph) -> bool {
    if g.validate().is_err() {
        return false;
    }
    match parse_smiles(&write_smiles(g)) {
        Ok(back) => back.validate().is_ok() && canonical_key(&back) == canonical_key(g),
        Err(_) => false,
    }
}

#[test]
fn defaults() {
    assert_eq!(DEFAULT_MUTATION_RATE, 0.1);
    assert_eq!(DEFAULT_N_MOL, 50);
    let c = GaConfig::default();
    assert_eq!((c.mutation_rate, c.n_mol), (0.1, 50));
}

#[test]
fn operator_outputs_are_valid() {
    let mols: Vec<MolGraph> = common::corpus(400).into_iter().map(|r| r.graph).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let weights = MutationWeights::default();
    let (mut produced, mut valid) = (0usize, 0usize);
    let (mut crossovers, mut mutations) = (0usize, 0usize);
    for i in 0..10_000 {
        let a = &mols[rng.gen_range(0..mols.len())];
        let out = if i % 2 == 0 {
            let b = &mols[rng.gen_range(0..mols.len())];
            let c = crossover(a, b, &mut rng);
            crossovers += c.is_some() as usize;
            c
        } else {
            let m = mutate(a, &weights, &mut rng);
            mutations += m.is_some() as usize;
            m
        };
        if let Some(g) = out {
            produced += 1;
            valid += sound(&g) as usize;
        }
    }
    assert!(crossovers > 1000, "{crossovers}");
    assert!(mutations > 1000, "{mutations}");
    assert!(valid as f64 >= 0.99 * produced as f64, "{valid}/{produced}");
}

#[test]
fn parent_selection_is_uniform() {
    let mut pop = Population::new(50);
    for (i, r) in common::corpus(50).into_iter().enumerate() {
        assert!(pop.insert(r.graph.clone(), i as f64, canonical_key(&r.graph)));
    }
    assert_eq!(pop.len(), 50);
    let index = |g: &MolGraph| pop.entries().iter().position(|m| std::ptr::eq(&m.graph, g)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut slots = [[0usize; 50]; 2];
    for _ in 0..10_000 {
        let (a, b) = select_parents(&pop, &mut rng).unwrap();
        slots[0][index(a)] += 1;
        slots[1][index(b)] += 1;
    }
    for slot in &slots {
        for &c in slot {
            let f = c as f64 / 10_000.0;
            assert!((0.014..=0.026).contains(&f), "{f}");
        }
    }
}

#[test]
fn singleton_population_gives_identical_parents() {
    let mut pop = Population::new(5);
    let g = parse_smiles("CCOc1ccccc1").unwrap();
    pop.insert(g.clone(), 1.0, canonical_key(&g));
    let (a, b) = select_parents(&pop, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(std::ptr::eq(a, b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn population_invariants(inserts in prop::collection::vec((0usize..120, -5i32..5), 1..300), cap in 1usize..60) {
        let mols = common::corpus(120);
        let mut pop = Population::new(cap);
        let mut floor = f64::NEG_INFINITY;
        for (i, y) in inserts {
            let g = &mols[i].graph;
            pop.insert(g.clone(), y as f64, canonical_key(g));
            let e = pop.entries();
            prop_assert!(e.len() <= cap);
            for w in e.windows(2) {
                prop_assert!(w[0].y > w[1].y || (w[0].y == w[1].y && w[0].key < w[1].key));
            }
            let mut keys: Vec<&str> = e.iter().map(|m| m.key.as_str()).collect();
            keys.sort();
            keys.dedup();
            prop_assert_eq!(keys.len(), e.len());
            if e.len() == cap {
                let m = pop.min_y().unwrap();
                prop_assert!(m >= floor);
                floor = m;
            }
        }
    }
}
