//! Uniform index sampling with reproducible seeding.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Independent draws; duplicates are kept.
    #[default]
    WithReplacement,
    /// Distinct indices, uniformly over subsets of size `l`.
    WithoutReplacement,
}

/// An ordered list of sampled indices in `[0, n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSample {
    indices: Vec<usize>,
    n: usize,
    with_replacement: bool,
}

/// Distinct values of a sample, with the map from draws back to them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplicity {
    /// Distinct indices in order of first appearance.
    pub unique: Vec<usize>,
    /// `position[a]` is the slot of draw `a` in `unique`.
    pub position: Vec<usize>,
    /// How many draws hit each distinct index.
    pub count: Vec<usize>,
}

impl IndexSample {
    pub fn new(indices: Vec<usize>, n: usize, with_replacement: bool) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, bound: n });
        }
        if !with_replacement {
            let mut s = indices.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(
                    "duplicate index in a sample drawn without replacement".into(),
                ));
            }
        }
        Ok(Self {
            indices,
            n,
            with_replacement,
        })
    }

    /// All of `0..n`, in order.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            n,
            with_replacement: false,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn range(&self) -> usize {
        self.n
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    pub fn multiplicity(&self) -> Multiplicity {
        let mut slot = std::collections::HashMap::with_capacity(self.indices.len());
        let mut unique = Vec::new();
        let mut count = Vec::new();
        let position = self
            .indices
            .iter()
            .map(|&i| {
                let p = *slot.entry(i).or_insert_with(|| {
                    unique.push(i);
                    count.push(0);
                    unique.len() - 1
                });
                count[p] += 1;
                p
            })
            .collect();
        Multiplicity {
            unique,
            position,
            count,
        }
    }
}

/// `l` independent uniform draws from `0..n`, order preserved.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<IndexSample> {
    sample_indices(n, l, SamplingMode::WithReplacement, rng)
}

pub fn sample_indices<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<IndexSample> {
    if n < 1 {
        return Err(Error::InvalidParameter("cannot sample from an empty range".into()));
    }
    match mode {
        SamplingMode::WithReplacement => Ok(IndexSample {
            indices: (0..l).map(|_| rng.random_range(0..n)).collect(),
            n,
            with_replacement: true,
        }),
        SamplingMode::WithoutReplacement => {
            if l > n {
                return Err(Error::SampleSize { l, min: 0, max: n });
            }
            Ok(IndexSample {
                indices: index::sample(rng, n, l).into_vec(),
                n,
                with_replacement: false,
            })
        }
    }
}

/// `ceil(10 mu k ln m)`, the sample size at which uniform sampling succeeds
/// with high probability for a `mu`-coherent rank-`k` model.
pub fn recommended_l(mu: f64, k: usize, m: usize) -> usize {
    (10.0 * mu * k as f64 * (m as f64).ln()).ceil() as usize
}

/// Seed for trial `trial` under `master`: a ChaCha8 stream selected by the
/// trial index, first output word.
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

/// Generator for trial `trial`, seeded with [`derive_seed`].
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, trial))
}
