use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Splits distinct score ids into `k` folds of near-equal size. Every
/// annotation of a score follows its score id, so a score never spans folds.
pub fn cv_split<'a>(
    score_ids: impl IntoIterator<Item = &'a str>,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    let unique: BTreeSet<&str> = score_ids.into_iter().collect();
    if k == 0 || k > unique.len() {
        return Err(Error::Folds {
            folds: k,
            scores: unique.len(),
        });
    }
    let mut ids: Vec<&str> = unique.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id.to_string());
    }
    for f in &mut folds {
        f.sort();
    }
    Ok(folds)
}

/// The fold used for early stopping when fold `test` is held out; `None`
/// when there are too few folds to spare one.
pub fn validation_fold(test: usize, k: usize) -> Option<usize> {
    (k >= 3).then_some((test + 1) % k)
}
