use fragrag_chem::{tanimoto, Fingerprint};
use fragrag_core::metrics::{auc_topk, diversity, novelty, summarize, NOVELTY_THRESHOLD};
use proptest::prelude::*;

fn auc_brute(ys: &[f64], k: usize, budget: usize) -> f64 {
    let mut total = 0.0;
    let mut last = 0.0;
    for t in 1..=ys.len() {
        let mut prefix = ys[..t].to_vec();
        prefix.sort_by(|a, b| b.total_cmp(a));
        prefix.truncate(k);
        last = prefix.iter().sum::<f64>() / prefix.len() as f64;
        total += last;
    }
    for _ in ys.len()..budget {
        total += last;
    }
    total / budget.max(ys.len()) as f64
}

fn diversity_brute(fps: &[Fingerprint]) -> f64 {
    let n = fps.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i < j {
                s += tanimoto(&fps[i], &fps[j]);
            }
        }
    }
    1.0 - (2.0 / (n * (n - 1)) as f64) * s
}

fn novelty_brute(gen: &[Fingerprint], train: &[Fingerprint]) -> f64 {
    let mut novel = 0;
    for g in gen {
        let mut best: f64 = 0.0;
        for t in train {
            best = best.max(tanimoto(g, t));
        }
        if best < NOVELTY_THRESHOLD {
            novel += 1;
        }
    }
    novel as f64 / gen.len() as f64
}

fn fingerprint() -> impl Strategy<Value = Fingerprint> {
    // small bit universe so similarities cover the whole range
    prop::collection::vec(0usize..24, 0..12).prop_map(|bits| Fingerprint::from_bits(&bits))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_matches_direct_summation(
        ys in prop::collection::vec(-1.0f64..1.0, 1..500),
        k in 1usize..120,
        extra in 0usize..300,
    ) {
        let budget = ys.len() + extra;
        prop_assert_eq!(auc_topk(&ys, k, budget).unwrap(), auc_brute(&ys, k, budget));
    }

    #[test]
    fn auc_with_ties_matches(ys in prop::collection::vec(0u8..4, 1..300), k in 1usize..20) {
        let ys: Vec<f64> = ys.into_iter().map(|v| v as f64 / 4.0).collect();
        prop_assert_eq!(auc_topk(&ys, k, ys.len()).unwrap(), auc_brute(&ys, k, ys.len()));
    }

    #[test]
    fn diversity_matches_pairwise_sum(fps in prop::collection::vec(fingerprint(), 2..120)) {
        prop_assert_eq!(diversity(&fps).unwrap(), diversity_brute(&fps));
    }

    #[test]
    fn novelty_matches_nearest_neighbour_scan(
        gen in prop::collection::vec(fingerprint(), 1..100),
        train in prop::collection::vec(fingerprint(), 1..100),
    ) {
        let n = novelty(&gen, &train).unwrap();
        prop_assert_eq!(n, novelty_brute(&gen, &train));
        prop_assert!((0.0..=1.0).contains(&n));
    }
}

#[test]
fn novelty_threshold_is_strict() {
    assert_eq!(NOVELTY_THRESHOLD, 0.4);
    // 2 shared of 5 total bits: exactly 0.4, not novel
    let g = Fingerprint::from_bits(&[0, 1, 2, 3]);
    let at = Fingerprint::from_bits(&[0, 1, 4]);
    assert_eq!(tanimoto(&g, &at), 0.4);
    assert_eq!(novelty(&[g.clone()], &[at.clone()]).unwrap(), 0.0);
    // 2 of 6: below, novel
    let below = Fingerprint::from_bits(&[0, 1, 4, 5]);
    assert_eq!(novelty(&[g.clone()], &[below.clone()]).unwrap(), 1.0);
    assert_eq!(novelty(&[g.clone()], &[below, at]).unwrap(), 0.0);
}

#[test]
fn summary_uses_the_best_hundred() {
    let n = 150;
    let ys: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let keys: Vec<String> = (0..n).map(|i| format!("k{i:03}")).collect();
    let fps: Vec<Fingerprint> = (0..n).map(|i| Fingerprint::from_bits(&[i, i + 1])).collect();
    let train = vec![Fingerprint::from_bits(&[1000])];
    let m = summarize(&ys, &keys, &fps, &train, 200).unwrap();
    assert_eq!(m.diversity_top100, diversity_brute(&fps[50..].iter().rev().cloned().collect::<Vec<_>>()));
    assert_eq!(m.novelty_top100, 1.0);
    assert_eq!(m.auc_top10, auc_brute(&ys, 10, 200));
    assert_eq!(m.auc_top100, auc_brute(&ys, 100, 200));
}
