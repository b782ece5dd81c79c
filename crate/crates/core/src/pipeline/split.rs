use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;

pub const MIN_SPLIT_RECORDS: usize = 10;

/// Drug-wise 8:1:1 partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

/// `(train, valid, test)` sizes: train is round(0.8 n), the remainder is
/// halved with the odd drug going to test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = (0.8 * n as f64).round() as usize;
    let rest = n - train;
    (train, rest / 2, rest - rest / 2)
}

/// Shuffles the sorted drug ids with a seeded ChaCha stream, so the split
/// depends only on the id set and the seed, not on file order.
pub fn split_dataset<S: AsRef<str>>(drug_ids: &[S], seed: u64) -> Result<Split, PipelineError> {
    if drug_ids.len() < MIN_SPLIT_RECORDS {
        return Err(PipelineError::TooFewRecords {
            found: drug_ids.len(),
            min: MIN_SPLIT_RECORDS,
        });
    }
    let mut ids: Vec<String> = drug_ids.iter().map(|s| s.as_ref().to_string()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() != drug_ids.len() {
        return Err(PipelineError::DuplicateDrug);
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_valid, _) = split_sizes(ids.len());
    let test = ids.split_off(n_train + n_valid);
    let valid = ids.split_off(n_train);
    Ok(Split {
        seed,
        train: ids,
        valid,
        test,
    })
}
