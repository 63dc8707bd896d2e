use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng_for;

/// Subject-wise holdout: training groups (one per schema rate) and a
/// disjoint test set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub groups: Vec<Vec<String>>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn train_ids(&self) -> impl Iterator<Item = &String> {
        self.groups.iter().flatten()
    }
}

/// Draw `n_train` training subjects (partitioned into `group_sizes`) and
/// `n_test` test subjects without replacement.
pub fn split_subjects(
    subject_ids: &[String],
    n_train: usize,
    n_test: usize,
    group_sizes: &[usize],
    seed: u64,
) -> Result<SplitSpec> {
    if group_sizes.iter().sum::<usize>() != n_train {
        return invalid(format!(
            "group sizes {group_sizes:?} do not sum to {n_train} training subjects"
        ));
    }
    let mut ids = subject_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() != subject_ids.len() {
        return invalid("duplicate subject ids");
    }
    if ids.len() < n_train + n_test {
        return invalid(format!(
            "need {} subjects ({n_train} train + {n_test} test), corpus has {}",
            n_train + n_test,
            ids.len()
        ));
    }
    ids.shuffle(&mut rng_for(seed, &[]));
    let mut rest = ids.into_iter();
    let groups = group_sizes
        .iter()
        .map(|&g| rest.by_ref().take(g).collect())
        .collect();
    let test = rest.take(n_test).collect();
    Ok(SplitSpec { groups, test, seed })
}
