//! Nearest fragments by fingerprint similarity.

use crate::error::{ChemError, Result};
use crate::fingerprint::{tanimoto, Fingerprint};
use crate::safe::Fragment;

/// A fragment with its key and fingerprint computed once.
#[derive(Debug, Clone)]
pub struct IndexedFragment {
    pub fragment: Fragment,
    pub key: String,
    pub fp: Fingerprint,
}

impl IndexedFragment {
    pub fn new(fragment: Fragment) -> Self {
        IndexedFragment {
            key: fragment.canonical_key(),
            fp: fragment.fingerprint(),
            fragment,
        }
    }
}

/// Indices of the `k` pool entries most similar to the query, by descending
/// Tanimoto and then ascending key. Entries sharing the query key are
/// skipped.
pub fn knn_indices(query_key: &str, query_fp: &Fingerprint, pool: &[IndexedFragment], k: usize) -> Result<Vec<usize>> {
    let mut scored: Vec<(f64, &str, usize)> = pool
        .iter()
        .enumerate()
        .filter(|(_, p)| p.key != query_key)
        .map(|(i, p)| (tanimoto(query_fp, &p.fp), p.key.as_str(), i))
        .collect();
    if scored.len() < k {
        return Err(ChemError::PoolTooSmall {
            needed: k,
            available: scored.len(),
        });
    }
    let cmp = |a: &(f64, &str, usize), b: &(f64, &str, usize)| {
        b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then(a.2.cmp(&b.2))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    Ok(scored.into_iter().map(|(_, _, i)| i).collect())
}

/// The `k` nearest fragments to `query` in `pool`, query excluded.
pub fn knn_fragments<'a>(query: &Fragment, pool: &'a [Fragment], k: usize) -> Result<Vec<&'a Fragment>> {
    let indexed: Vec<IndexedFragment> = pool.iter().cloned().map(IndexedFragment::new).collect();
    let idx = knn_indices(&query.canonical_key(), &query.fingerprint(), &indexed, k)?;
    Ok(idx.into_iter().map(|i| &pool[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frag(s: &str) -> Fragment {
        Fragment::from_smiles(s).unwrap()
    }

    #[test]
    fn query_is_excluded() {
        let q = frag("[*]c1ccccc1");
        let pool = vec![frag("c1ccccc1[*]"), frag("[*]c1ccncc1"), frag("[*]CCCCCl")];
        let nn = knn_fragments(&q, &pool, 1).unwrap();
        assert_eq!(nn[0].canonical_key(), frag("[*]c1ccncc1").canonical_key());
        assert!(matches!(
            knn_fragments(&q, &pool, 3),
            Err(ChemError::PoolTooSmall { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn identical_fingerprint_ranks_first() {
        // long chains differ only in bit counts, so their radius-2 bit sets
        // coincide while their keys do not
        let q = frag("[*]CCCCCCC");
        let twin = frag("[*]CCCCCCCC");
        assert_eq!(q.fingerprint(), twin.fingerprint());
        let pool = vec![frag("[*]Br"), twin.clone()];
        let nn = knn_fragments(&q, &pool, 2).unwrap();
        assert_eq!(nn[0].canonical_key(), twin.canonical_key());
        assert_eq!(nn[1].canonical_key(), pool[0].canonical_key());
    }
}
