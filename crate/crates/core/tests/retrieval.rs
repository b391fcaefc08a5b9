mod common;

use std::collections::HashSet;

use fragrag_chem::{knn_indices, tanimoto, FragmentKind, IndexedFragment, TaskMode};
use fragrag_core::retrieval::{sample_hard, sample_soft};
use fragrag_core::vocab::{FragmentVocabulary, VocabConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_vocab() -> FragmentVocabulary {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    FragmentVocabulary::build_initial(&common::labelled(2000), VocabConfig::default(), &mut rng).unwrap()
}

#[test]
fn hard_split_is_fair_and_soft_kinds_complement() {
    let v = corpus_vocab();
    assert_eq!(v.arms().len(), 50);
    assert_eq!(v.linkers().len(), 50);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut linker_design = 0;
    for _ in 0..10_000 {
        let t = sample_hard(&v, &mut rng).unwrap();
        let soft = sample_soft(&t, &v, 10, &mut rng).unwrap();
        let expected = match t.mode() {
            TaskMode::LinkerDesign => {
                linker_design += 1;
                FragmentKind::Linker
            }
            TaskMode::MotifExtension => FragmentKind::Arm,
        };
        assert_eq!(soft.len(), 10);
        assert!(soft.iter().all(|f| f.kind() == expected));
        // pool of 50 >= K, so no repeats within one draw
        let keys: HashSet<String> = soft.iter().map(|f| f.canonical_key()).collect();
        assert_eq!(keys.len(), 10);
    }
    let freq = linker_design as f64 / 10_000.0;
    assert!((0.48..=0.52).contains(&freq), "{freq}");
}

#[test]
fn hard_fragments_are_drawn_uniformly() {
    let v = corpus_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = std::collections::HashMap::<String, usize>::new();
    let mut draws = 0;
    for _ in 0..20_000 {
        let t = sample_hard(&v, &mut rng).unwrap();
        if t.mode() == TaskMode::LinkerDesign {
            for f in t.hard_units() {
                *counts.entry(f.canonical_key()).or_default() += 1;
                draws += 1;
            }
        }
    }
    let expected = draws as f64 / 50.0;
    assert_eq!(counts.len(), 50);
    for c in counts.values() {
        assert!((*c as f64 - expected).abs() < 0.2 * expected, "{c} vs {expected}");
    }
}

#[test]
fn knn_matches_brute_force_on_a_100_fragment_pool() {
    let v = corpus_vocab();
    let pool: Vec<IndexedFragment> = v
        .arms()
        .iter()
        .chain(v.linkers())
        .map(|r| IndexedFragment::new(r.fragment.clone()))
        .collect();
    assert_eq!(pool.len(), 100);
    for (qi, q) in pool.iter().enumerate() {
        for k in [1, 5, 10, 99] {
            let got = knn_indices(&q.key, &q.fp, &pool, k).unwrap();
            let mut brute: Vec<usize> = (0..pool.len()).filter(|&i| i != qi).collect();
            brute.sort_by(|&a, &b| {
                tanimoto(&q.fp, &pool[b].fp)
                    .partial_cmp(&tanimoto(&q.fp, &pool[a].fp))
                    .unwrap()
                    .then_with(|| pool[a].key.cmp(&pool[b].key))
            });
            brute.truncate(k);
            assert_eq!(got, brute, "query {qi} k {k}");
        }
        assert!(knn_indices(&q.key, &q.fp, &pool, 100).is_err());
    }
    // order does not depend on pool order
    let mut reversed = pool.clone();
    reversed.reverse();
    let q = &pool[3];
    let a: Vec<&str> = knn_indices(&q.key, &q.fp, &pool, 10).unwrap().into_iter().map(|i| pool[i].key.as_str()).collect();
    let b: Vec<&str> = knn_indices(&q.key, &q.fp, &reversed, 10)
        .unwrap()
        .into_iter()
        .map(|i| reversed[i].key.as_str())
        .collect();
    assert_eq!(a, b);
}

#[test]
fn small_pools_sample_with_replacement() {
    let config = VocabConfig {
        n_frag: 3,
        ..VocabConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = FragmentVocabulary::build_initial(&common::labelled(300), config, &mut rng).unwrap();
    let t = sample_hard(&v, &mut rng).unwrap();
    let soft = sample_soft(&t, &v, 10, &mut rng).unwrap();
    assert_eq!(soft.len(), 10);
    let keys: HashSet<String> = soft.iter().map(|f| f.canonical_key()).collect();
    assert!(keys.len() <= 3);
}
