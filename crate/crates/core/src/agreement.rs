//! Cohen's kappa between two raters.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KappaError {
    #[error("raters labeled different subject sets")]
    MismatchedSubjects,
    #[error("a rater labeled the same subject twice")]
    DuplicateSubject,
    #[error("at least two subjects are required, got {0}")]
    TooFewSubjects(usize),
    #[error("confusion table must be square and nonempty")]
    BadTable,
}

/// Kappa from a square confusion table, `table[i][j]` counting subjects put
/// in category `i` by the first rater and `j` by the second.
///
/// When chance agreement is 1 (both raters used one and the same category)
/// the result is 1.
pub fn kappa_from_table(table: &[Vec<u64>]) -> Result<f64, KappaError> {
    let k = table.len();
    if k == 0 || table.iter().any(|row| row.len() != k) {
        return Err(KappaError::BadTable);
    }
    let n: u64 = table.iter().flatten().sum();
    if n < 2 {
        return Err(KappaError::TooFewSubjects(n as usize));
    }
    let n = n as f64;
    let observed = (0..k).map(|i| table[i][i]).sum::<u64>() as f64 / n;
    let expected: f64 = (0..k)
        .map(|i| {
            let row: u64 = table[i].iter().sum();
            let col: u64 = table.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum();
    if expected >= 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

fn index_labels<S: Ord, C: Ord>(labels: &[(S, C)]) -> Result<BTreeMap<&S, &C>, KappaError> {
    let mut m = BTreeMap::new();
    for (s, c) in labels {
        if m.insert(s, c).is_some() {
            return Err(KappaError::DuplicateSubject);
        }
    }
    Ok(m)
}

/// Kappa between two raters' labels over the same subjects.
///
/// Categories are the union of labels either rater used.
pub fn cohen_kappa<S: Ord, C: Ord>(first: &[(S, C)], second: &[(S, C)]) -> Result<f64, KappaError> {
    let (a, b) = (index_labels(first)?, index_labels(second)?);
    if !a.keys().eq(b.keys()) {
        return Err(KappaError::MismatchedSubjects);
    }
    if a.len() < 2 {
        return Err(KappaError::TooFewSubjects(a.len()));
    }
    let categories: Vec<&C> = a
        .values()
        .chain(b.values())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |c: &C| {
        categories
            .binary_search(&c)
            .expect("category collected above")
    };
    let mut table = vec![vec![0u64; categories.len()]; categories.len()];
    for (s, ca) in &a {
        table[pos(ca)][pos(b[s])] += 1;
    }
    kappa_from_table(&table)
}
