//! Test outcomes `y = Gx` under OR semantics.
//!
//! Only the infected labels are hashed, so a table costs `O(k log n)` hash
//! evaluations to build no matter how large the population is.

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::design::{dd_bucket, phase1_bucket, phase2_bucket, DesignLayout};
use crate::params::SchemeParams;
use crate::types::{InfectionVector, Prefix, TestId};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("test (level {}, bucket {}) is not part of the layout", .0.level, .0.bucket)]
pub struct UnknownTest(pub TestId);

/// Positive buckets per level; index 0 holds the DD block.
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    layout: DesignLayout,
    positives: Vec<FxHashSet<u64>>,
}

pub fn simulate_outcomes(params: &SchemeParams, infection: &InfectionVector) -> OutcomeTable {
    let layout = DesignLayout::new(params);
    let mut positives = vec![FxHashSet::default(); params.log2n as usize + 1];

    for &label in infection.labels() {
        for level in params.phase1_levels.clone() {
            let prefix = Prefix::of_label(label, params.log2n, level);
            positives[level as usize].insert(phase1_bucket(params, prefix));
        }
        match params.dd {
            None => {
                for row in 1..=params.log2k {
                    positives[row as usize].insert(phase2_bucket(params, label, row));
                }
            }
            Some(dd) => {
                for row in 1..=dd.column_weight {
                    positives[TestId::DD_BLOCK as usize].insert(dd_bucket(params, &dd, label, row));
                }
            }
        }
    }
    OutcomeTable { layout, positives }
}

impl OutcomeTable {
    pub fn layout(&self) -> &DesignLayout {
        &self.layout
    }

    pub fn params(&self) -> &SchemeParams {
        &self.layout.params
    }

    pub fn query(&self, test: TestId) -> Result<bool, UnknownTest> {
        if !self.layout.contains(test) {
            return Err(UnknownTest(test));
        }
        Ok(self.positives[test.level as usize].contains(&test.bucket))
    }

    /// Lookup without the layout check, for decoders that only generate
    /// in-layout tests.
    #[inline]
    pub(crate) fn is_positive(&self, level: u32, bucket: u64) -> bool {
        self.positives[level as usize].contains(&bucket)
    }

    pub fn positive_count(&self, level: u32) -> usize {
        self.positives.get(level as usize).map_or(0, FxHashSet::len)
    }

    /// Full outcome vector in export row order.
    pub fn to_vector(&self) -> Vec<bool> {
        (0..self.layout.total_tests)
            .map(|r| {
                let t = self.layout.test_at(r).expect("row within layout");
                self.is_positive(t.level, t.bucket)
            })
            .collect()
    }
}
