use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TleError, TleRecord};

/// Train/test/eval partition of a record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<TleRecord>,
    pub test: Vec<TleRecord>,
    pub eval: Vec<TleRecord>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.test.len(), self.eval.len())
    }

    pub fn all(&self) -> impl Iterator<Item = &TleRecord> {
        self.train.iter().chain(&self.test).chain(&self.eval)
    }
}

/// Seeded 70/15/15 split. Train and test sizes are floored; eval takes the remainder.
pub fn split_dataset(records: &[TleRecord], seed: u64) -> Result<DatasetSplit, TleError> {
    let n = records.len();
    if n < 3 {
        return Err(TleError::InsufficientData { needed: 3, got: n });
    }
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // Integer arithmetic keeps the floors exact (0.7 * 100 is 69.999… in f64).
    let n_train = n * 70 / 100;
    let n_test = n * 15 / 100;
    let eval = shuffled.split_off(n_train + n_test);
    let test = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        test,
        eval,
        seed,
    })
}
