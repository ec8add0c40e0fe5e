//! Prefixes, test identifiers, and the hidden infection vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hash::{hash64, TRIAL_LEVEL};
use crate::params::SchemeParams;

/// The first `len` bits of a `log2 n`-bit label, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    pub len: u32,
    pub value: u64,
}

impl Prefix {
    pub fn new(len: u32, value: u64) -> Self {
        debug_assert!(len >= 64 || value < (1u64 << len));
        Self { len, value }
    }

    /// Length-`len` prefix of `label` in a population with `log2n`-bit labels.
    pub fn of_label(label: u64, log2n: u32, len: u32) -> Self {
        debug_assert!(len <= log2n);
        Self { len, value: label >> (log2n - len) }
    }

    pub fn children(self) -> [Prefix; 2] {
        let len = self.len + 1;
        [
            Prefix { len, value: self.value << 1 },
            Prefix { len, value: (self.value << 1) | 1 },
        ]
    }

    /// Labels included by this prefix.
    pub fn persons(self, log2n: u32) -> std::ops::Range<u64> {
        let shift = log2n - self.len;
        (self.value << shift)..((self.value + 1) << shift)
    }

    pub fn includes(self, label: u64, log2n: u32) -> bool {
        label >> (log2n - self.len) == self.value
    }
}

/// A test in the layout.
///
/// `level` 0 is the flat DD block, `1..=log2 k` are the Phase II rows of the
/// leaf-trim schemes, and the Phase I levels follow from `log2 k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TestId {
    pub level: u32,
    pub bucket: u64,
}

impl TestId {
    pub const DD_BLOCK: u32 = 0;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfectionError {
    #[error("label {label} is outside the population of {n}")]
    LabelOutOfRange { label: u64, n: u64 },
    #[error("{count} infected labels exceed k = {k}")]
    TooMany { count: usize, k: u64 },
    #[error("label {0} listed twice")]
    Duplicate(u64),
}

/// The hidden set of infected labels, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InfectionVector {
    infected: Vec<u64>,
}

impl InfectionVector {
    pub fn new(mut labels: Vec<u64>, n: u64, k: u64) -> Result<Self, InfectionError> {
        if labels.len() as u64 > k {
            return Err(InfectionError::TooMany { count: labels.len(), k });
        }
        labels.sort_unstable();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(InfectionError::Duplicate(w[0]));
            }
        }
        if let Some(&label) = labels.last().filter(|&&l| l >= n) {
            return Err(InfectionError::LabelOutOfRange { label, n });
        }
        Ok(Self { infected: labels })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn labels(&self) -> &[u64] {
        &self.infected
    }

    pub fn len(&self) -> usize {
        self.infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_empty()
    }

    pub fn contains(&self, label: u64) -> bool {
        self.infected.binary_search(&label).is_ok()
    }
}

/// Independent seed for trial `index` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    hash64(seed, TRIAL_LEVEL, index)
}

/// Uniformly random `k`-subset of `0..n`, reproducible from `trial_seed`.
pub fn sample_infection(params: &SchemeParams, trial_seed: u64) -> InfectionVector {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let n = usize::try_from(params.n).expect("population exceeds address space");
    let mut labels: Vec<u64> = rand::seq::index::sample(&mut rng, n, params.k as usize)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    labels.sort_unstable();
    InfectionVector { infected: labels }
}
