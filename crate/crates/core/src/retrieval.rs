//! Hard and soft fragment retrieval from the vocabulary.

use fragrag_chem::{Fragment, GenerationTask};
use rand::seq::SliceRandom;
use rand::Rng;

pub use fragrag_chem::{knn_fragments, knn_indices, IndexedFragment};

use crate::error::{CoreError, Result};
use crate::vocab::{FragmentRecord, FragmentVocabulary};

fn pick<'a, R: Rng + ?Sized>(pool: &'a [FragmentRecord], name: &'static str, rng: &mut R) -> Result<&'a Fragment> {
    pool.choose(rng).map(|r| &r.fragment).ok_or(CoreError::EmptyPool(name))
}

/// Fair coin between linker design (two arms) and motif extension (an arm
/// joined to a random slot of a linker). Fragments are drawn uniformly with
/// replacement; the block order of the prompt is also random.
pub fn sample_hard<R: Rng + ?Sized>(v: &FragmentVocabulary, rng: &mut R) -> Result<GenerationTask> {
    if v.arms().is_empty() {
        return Err(CoreError::EmptyPool("arm"));
    }
    if v.linkers().is_empty() {
        return Err(CoreError::EmptyPool("linker"));
    }
    if rng.gen_bool(0.5) {
        let a = pick(v.arms(), "arm", rng)?;
        let b = pick(v.arms(), "arm", rng)?;
        Ok(GenerationTask::linker_design(a, b, rng.gen_bool(0.5))?)
    } else {
        let a = pick(v.arms(), "arm", rng)?;
        let l = pick(v.linkers(), "linker", rng)?;
        let slot = rng.gen_range(0..2);
        Ok(GenerationTask::motif_extension(a, l, slot, rng.gen_bool(0.5))?)
    }
}

/// `k` uniform draws from the pool complementary to the task's hard
/// fragments: linkers for linker design, arms for motif extension. Draws are
/// distinct when the pool holds at least `k` fragments, with replacement
/// otherwise.
pub fn sample_soft<R: Rng + ?Sized>(
    task: &GenerationTask,
    v: &FragmentVocabulary,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Fragment>> {
    let kind = task.soft_kind();
    let pool = v.pool(kind);
    let name = kind.as_str();
    if k == 0 {
        return Err(CoreError::Config("k must be positive".into()));
    }
    if pool.len() >= k {
        return Ok(rand::seq::index::sample(rng, pool.len(), k)
            .into_iter()
            .map(|i| pool[i].fragment.clone())
            .collect());
    }
    (0..k).map(|_| pick(pool, name, rng).cloned()).collect()
}
