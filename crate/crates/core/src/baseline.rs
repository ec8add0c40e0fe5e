//! Classical COMP and DD decoders over an explicit matrix. Linear in the
//! number of matrix entries; used as reference points for the fast schemes.

use thiserror::Error;

use crate::design::SparseMatrix;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("outcome vector has {got} entries, matrix has {expected} rows")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

fn check(matrix: &SparseMatrix, y: &[bool]) -> Result<(), DimensionMismatch> {
    if y.len() != matrix.m() {
        return Err(DimensionMismatch { expected: matrix.m(), got: y.len() });
    }
    Ok(())
}

/// Items that appear in some negative test.
fn cleared(matrix: &SparseMatrix, y: &[bool]) -> Vec<bool> {
    let mut cleared = vec![false; matrix.n() as usize];
    for (row, _) in matrix.rows().zip(y).filter(|(_, &yi)| !yi) {
        for &c in row {
            cleared[c as usize] = true;
        }
    }
    cleared
}

/// Every item that appears in no negative test.
pub fn comp_baseline(matrix: &SparseMatrix, y: &[bool]) -> Result<Vec<u64>, DimensionMismatch> {
    check(matrix, y)?;
    Ok(cleared(matrix, y)
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| !c)
        .map(|(j, _)| j as u64)
        .collect())
}

/// Definite defectives: the sole possible defective of some positive test.
pub fn dd_baseline(matrix: &SparseMatrix, y: &[bool]) -> Result<Vec<u64>, DimensionMismatch> {
    check(matrix, y)?;
    let cleared = cleared(matrix, y);
    let mut declared: Vec<u64> = matrix
        .rows()
        .zip(y)
        .filter(|(_, &yi)| yi)
        .filter_map(|(row, _)| {
            let mut possible = row.iter().filter(|&&c| !cleared[c as usize]);
            match (possible.next(), possible.next()) {
                (Some(&only), None) => Some(u64::from(only)),
                _ => None,
            }
        })
        .collect();
    declared.sort_unstable();
    declared.dedup();
    Ok(declared)
}
