//! Test-assignment maps and the explicit measurement matrix.
//!
//! Every assignment is a pure function of `(seed, level, prefix or label)`.
//! The matrix export exists for verification: it materializes the same maps
//! person by person so that the fast outcome simulation and the decoders can
//! be checked against a brute-force OR product.

use std::io::{self, Write};

use thiserror::Error;

use crate::hash::{dd_level, hash64, phase2_level};
use crate::params::{DdBlock, Scheme, SchemeParams};
use crate::types::{InfectionVector, Prefix, TestId};

/// Largest population [`export_matrix`] will materialize.
pub const MAX_EXPORT_N: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("level {level} is outside the block's range {lo}..={hi}")]
    LevelOutOfRange { level: u32, lo: u32, hi: u32 },
    #[error("operation not defined for scheme {0}")]
    WrongScheme(Scheme),
    #[error("refusing to export a matrix with n = {0} > 2^20 columns")]
    TooLarge(u64),
}

#[inline]
pub(crate) fn phase1_bucket(params: &SchemeParams, prefix: Prefix) -> u64 {
    hash64(params.seed, prefix.len, prefix.value) % params.buckets
}

#[inline]
pub(crate) fn phase2_bucket(params: &SchemeParams, label: u64, row: u32) -> u64 {
    hash64(params.seed, phase2_level(params.log2n, row), label) % params.buckets
}

#[inline]
pub(crate) fn dd_bucket(params: &SchemeParams, dd: &DdBlock, label: u64, row: u32) -> u64 {
    hash64(params.seed, dd_level(params.log2n, row), label) % dd.tests
}

/// Phase I test holding every person with the given prefix.
pub fn phase1_test(params: &SchemeParams, prefix: Prefix) -> Result<TestId, DesignError> {
    if !params.phase1_levels.contains(&prefix.len) {
        return Err(DesignError::LevelOutOfRange {
            level: prefix.len,
            lo: *params.phase1_levels.start(),
            hi: *params.phase1_levels.end(),
        });
    }
    Ok(TestId { level: prefix.len, bucket: phase1_bucket(params, prefix) })
}

/// Phase II test of `label` in leaf-trim row `row` (`1..=log2 k`).
pub fn phase2_test_comp(
    params: &SchemeParams,
    label: u64,
    row: u32,
) -> Result<TestId, DesignError> {
    if !params.scheme.has_leaf_trim() {
        return Err(DesignError::WrongScheme(params.scheme));
    }
    if row == 0 || row > params.log2k {
        return Err(DesignError::LevelOutOfRange { level: row, lo: 1, hi: params.log2k });
    }
    Ok(TestId { level: row, bucket: phase2_bucket(params, label, row) })
}

/// The `L` DD-block tests of `label`, one per hash row, duplicates kept.
pub fn dd_tests_for(params: &SchemeParams, label: u64) -> Result<Vec<TestId>, DesignError> {
    let dd = params.dd.as_ref().ok_or(DesignError::WrongScheme(params.scheme))?;
    Ok((1..=dd.column_weight)
        .map(|row| TestId { level: TestId::DD_BLOCK, bucket: dd_bucket(params, dd, label, row) })
        .collect())
}

/// Second block of the layout, after the Phase I grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinisherBlock {
    LeafTrim { rows: u32, buckets: u64 },
    Dd(DdBlock),
}

/// Shape of the measurement design and the row numbering of its export.
///
/// Rows are numbered Phase I first (level-major, bucket-minor), then the
/// leaf-trim rows in the same order, or the DD block by test index.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignLayout {
    pub params: SchemeParams,
    pub phase1_tests: u64,
    pub finisher: FinisherBlock,
    pub total_tests: u64,
}

impl DesignLayout {
    pub fn new(params: &SchemeParams) -> Self {
        let phase1_tests = u64::from(params.phase1_level_count()) * params.buckets;
        let finisher = match params.dd {
            Some(dd) => FinisherBlock::Dd(dd),
            None => FinisherBlock::LeafTrim { rows: params.log2k, buckets: params.buckets },
        };
        let finisher_tests = match finisher {
            FinisherBlock::LeafTrim { rows, buckets } => u64::from(rows) * buckets,
            FinisherBlock::Dd(dd) => dd.tests,
        };
        Self {
            params: params.clone(),
            phase1_tests,
            finisher,
            total_tests: phase1_tests + finisher_tests,
        }
    }

    /// Export row of `test`, or `None` when the test is not in this layout.
    pub fn row_of(&self, test: TestId) -> Option<u64> {
        let p = &self.params;
        if p.phase1_levels.contains(&test.level) {
            if test.bucket >= p.buckets {
                return None;
            }
            let offset = u64::from(test.level - p.log2k - 1);
            return Some(offset * p.buckets + test.bucket);
        }
        match self.finisher {
            FinisherBlock::LeafTrim { rows, buckets } => {
                (test.level >= 1 && test.level <= rows && test.bucket < buckets)
                    .then(|| self.phase1_tests + u64::from(test.level - 1) * buckets + test.bucket)
            }
            FinisherBlock::Dd(dd) => (test.level == TestId::DD_BLOCK && test.bucket < dd.tests)
                .then(|| self.phase1_tests + test.bucket),
        }
    }

    /// Inverse of [`row_of`](Self::row_of).
    pub fn test_at(&self, row: u64) -> Option<TestId> {
        let p = &self.params;
        if row >= self.total_tests {
            return None;
        }
        if row < self.phase1_tests {
            let level = p.log2k + 1 + (row / p.buckets) as u32;
            return Some(TestId { level, bucket: row % p.buckets });
        }
        let rest = row - self.phase1_tests;
        Some(match self.finisher {
            FinisherBlock::LeafTrim { buckets, .. } => {
                TestId { level: 1 + (rest / buckets) as u32, bucket: rest % buckets }
            }
            FinisherBlock::Dd(_) => TestId { level: TestId::DD_BLOCK, bucket: rest },
        })
    }

    pub fn contains(&self, test: TestId) -> bool {
        self.row_of(test).is_some()
    }
}

/// Exact constructed test count next to the corresponding theorem's formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestCount {
    pub m: u64,
    pub theorem_estimate: f64,
}

pub fn test_count(params: &SchemeParams) -> TestCount {
    let m = DesignLayout::new(params).total_tests;
    let k = params.k as f64;
    let n = params.n as f64;
    let theorem_estimate = match params.scheme {
        Scheme::Pcns16 => 16.0 * k * n.log2(),
        Scheme::PcnsComp => params.c * params.c * k * n.ln(),
        Scheme::PcnsDd => params.c * params.c * k * (2.0 * n / (params.epsilon * k)).ln(),
    };
    TestCount { m, theorem_estimate }
}

/// Row-major boolean matrix with sorted column lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    cols: u64,
    rows: Vec<Vec<u32>>,
}

impl SparseMatrix {
    /// Builds a matrix from arbitrary row lists; columns are sorted and
    /// deduplicated. Panics if a column index is `>= cols`.
    pub fn from_rows(cols: u64, rows: Vec<Vec<u32>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                assert!(r.last().is_none_or(|&c| u64::from(c) < cols), "column out of range");
                r
            })
            .collect();
        Self { cols, rows }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> u64 {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn column_weights(&self) -> Vec<u32> {
        let mut w = vec![0u32; self.cols as usize];
        for row in &self.rows {
            for &c in row {
                w[c as usize] += 1;
            }
        }
        w
    }

    /// `y_i = OR_j (G_ij AND x_j)`.
    pub fn or_product(&self, infection: &InfectionVector) -> Vec<bool> {
        self.rows
            .iter()
            .map(|row| row.iter().any(|&c| infection.contains(u64::from(c))))
            .collect()
    }

    /// Text export: a `m n` header, then `row degree col col ...` per row.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.rows.len(), self.cols)?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(w, "{} {}", i, row.len())?;
            for c in row {
                write!(w, " {c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Materializes the scheme's design as an explicit `m × n` matrix.
pub fn export_matrix(params: &SchemeParams) -> Result<SparseMatrix, DesignError> {
    if params.n > MAX_EXPORT_N {
        return Err(DesignError::TooLarge(params.n));
    }
    let layout = DesignLayout::new(params);
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); layout.total_tests as usize];
    let mut push = |test: TestId, person: u64| {
        let r = layout.row_of(test).expect("assignment outside layout");
        rows[r as usize].push(person as u32);
    };

    for level in params.phase1_levels.clone() {
        for value in 0..(1u64 << level) {
            let prefix = Prefix::new(level, value);
            let test = TestId { level, bucket: phase1_bucket(params, prefix) };
            for person in prefix.persons(params.log2n) {
                push(test, person);
            }
        }
    }
    match layout.finisher {
        FinisherBlock::LeafTrim { rows: trim_rows, .. } => {
            for person in 0..params.n {
                for row in 1..=trim_rows {
                    push(TestId { level: row, bucket: phase2_bucket(params, person, row) }, person);
                }
            }
        }
        FinisherBlock::Dd(dd) => {
            for person in 0..params.n {
                for row in 1..=dd.column_weight {
                    let bucket = dd_bucket(params, &dd, person, row);
                    push(TestId { level: TestId::DD_BLOCK, bucket }, person);
                }
            }
        }
    }
    Ok(SparseMatrix::from_rows(params.n, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn params(n: u64, k: u64, scheme: Scheme) -> SchemeParams {
        SchemeParams::new(n, k, 0.05, scheme, 11).unwrap()
    }

    #[test]
    fn phase1_buckets_in_range_exhaustive() {
        let p = params(1024, 16, Scheme::Pcns16);
        for level in p.phase1_levels.clone() {
            for v in 0..(1u64 << level) {
                let t = phase1_test(&p, Prefix::new(level, v)).unwrap();
                assert_eq!(t.level, level);
                assert!(t.bucket < p.buckets);
            }
        }
    }

    #[test]
    fn phase1_is_a_function_of_the_prefix() {
        let p = params(1024, 16, Scheme::Pcns16);
        let (a, b) = (0b11_0010_1000_u64, 0b11_0010_1111_u64);
        for level in 5..=7 {
            let pa = Prefix::of_label(a, p.log2n, level);
            let pb = Prefix::of_label(b, p.log2n, level);
            assert_eq!(pa, pb);
            assert_eq!(phase1_test(&p, pa), phase1_test(&p, pb));
        }
    }

    #[test]
    fn level6_uses_at_most_64_buckets() {
        let p = params(1024, 16, Scheme::Pcns16);
        let distinct: HashSet<u64> =
            (0..64).map(|v| phase1_test(&p, Prefix::new(6, v)).unwrap().bucket).collect();
        assert!(distinct.len() <= 64);
        // Birthday bound: 64 draws into 256 buckets collide a few times.
        assert!(distinct.len() >= 40, "suspiciously few buckets: {}", distinct.len());
    }

    #[test]
    fn phase1_level_guard() {
        let p = params(1024, 16, Scheme::Pcns16);
        assert!(matches!(
            phase1_test(&p, Prefix::new(4, 3)),
            Err(DesignError::LevelOutOfRange { level: 4, .. })
        ));
        let dd = params(1024, 8, Scheme::PcnsDd);
        assert!(phase1_test(&dd, Prefix::new(7, 0)).is_ok());
        assert!(phase1_test(&dd, Prefix::new(8, 0)).is_err());
    }

    #[test]
    fn phase2_rows() {
        let p = params(1024, 16, Scheme::PcnsComp);
        for row in 1..=4 {
            let t = phase2_test_comp(&p, 77, row).unwrap();
            assert_eq!(t.level, row);
            assert!(t.bucket < p.buckets);
        }
        assert!(phase2_test_comp(&p, 77, 0).is_err());
        assert!(phase2_test_comp(&p, 77, 5).is_err());
        let dd = params(1024, 8, Scheme::PcnsDd);
        assert_eq!(phase2_test_comp(&dd, 1, 1), Err(DesignError::WrongScheme(Scheme::PcnsDd)));
    }

    #[test]
    fn phase2_depends_on_full_label() {
        let p = params(4096, 16, Scheme::Pcns16);
        // Siblings share every proper prefix but should not share all rows.
        let differ = (0..256u64).any(|v| {
            (1..=4).any(|row| {
                phase2_test_comp(&p, 2 * v, row) != phase2_test_comp(&p, 2 * v + 1, row)
            })
        });
        assert!(differ);
    }

    #[test]
    fn dd_rows() {
        let p = params(1 << 14, 16, Scheme::PcnsDd);
        let dd = p.dd.unwrap();
        assert_eq!(dd.column_weight, 11);
        for label in 0..500 {
            let tests = dd_tests_for(&p, label).unwrap();
            assert_eq!(tests.len(), 11);
            assert!(tests.iter().all(|t| t.level == 0 && t.bucket < dd.tests));
        }
        assert!(dd_tests_for(&params(1024, 16, Scheme::Pcns16), 0).is_err());
    }

    #[test]
    fn row_numbering_round_trips() {
        for scheme in Scheme::ALL {
            let layout = DesignLayout::new(&params(256, 4, scheme));
            for r in 0..layout.total_tests {
                let t = layout.test_at(r).unwrap();
                assert_eq!(layout.row_of(t), Some(r));
            }
            assert_eq!(layout.test_at(layout.total_tests), None);
        }
    }

    #[test]
    fn test_counts() {
        let p = params(1024, 16, Scheme::Pcns16);
        assert_eq!(test_count(&p).m, 2560);
        let c = params(1 << 16, 64, Scheme::PcnsComp);
        assert_eq!(test_count(&c).m, 109 * 16);
    }

    #[test]
    fn comp_count_ratio_near_one_for_small_epsilon() {
        let expected = (2.0f64 - 0.04).ln() / std::f64::consts::LN_2;
        for log2n in 8..=20u32 {
            for log2k in 1..=(log2n - 2).min(8) {
                let p = SchemeParams::new(1 << log2n, 1 << log2k, 0.01, Scheme::PcnsComp, 0)
                    .unwrap();
                let tc = test_count(&p);
                let ratio = tc.m as f64 / tc.theorem_estimate;
                assert!((0.95..=1.0).contains(&ratio), "ratio {ratio} at n=2^{log2n} k=2^{log2k}");
                assert!(ratio >= expected - 1e-12);
            }
        }
    }

    #[test]
    fn export_shape_and_weights() {
        let p = params(256, 4, Scheme::Pcns16);
        let g = export_matrix(&p).unwrap();
        assert_eq!(g.m() as u64, test_count(&p).m);
        assert!(g.column_weights().iter().all(|&w| w == 8));

        let dd = params(256, 4, Scheme::PcnsDd);
        let g = export_matrix(&dd).unwrap();
        let l = dd.dd.unwrap().column_weight;
        for (person, w) in g.column_weights().into_iter().enumerate() {
            let distinct: HashSet<_> = dd_tests_for(&dd, person as u64).unwrap().into_iter().collect();
            assert_eq!(w, dd.phase1_level_count() + distinct.len() as u32);
            assert!(distinct.len() as u32 <= l);
        }
    }

    #[test]
    fn export_refuses_huge_populations() {
        let p = params(1 << 21, 16, Scheme::Pcns16);
        assert_eq!(export_matrix(&p), Err(DesignError::TooLarge(1 << 21)));
    }

    #[test]
    fn text_export_format() {
        let g = SparseMatrix::from_rows(4, vec![vec![2, 0], vec![], vec![3, 3, 1]]);
        let mut out = Vec::new();
        g.write_text(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "3 4\n0 2 0 2\n1 0\n2 2 1 3\n");
    }
}
