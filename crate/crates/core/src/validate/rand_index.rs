//! Rand's measure of agreement between two partitions of the same items.

use std::collections::HashMap;
use std::hash::Hash;

use crate::comm::Communicator;
use crate::error::{Error, Result};

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Rand measure from a contingency table `table[i][j]` = number of items in
/// cluster `i` of the first partition and cluster `j` of the second.
pub fn rand_from_contingency(table: &[Vec<u64>]) -> Result<f64> {
    let n: u64 = table.iter().flatten().sum();
    if n < 2 {
        return Err(Error::arg(format!("rand measure needs at least 2 items, got {n}")));
    }
    let both: u64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: u64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let ncols = table.iter().map(Vec::len).max().unwrap_or(0);
    let cols: u64 = (0..ncols).map(|j| pairs(table.iter().map(|r| r.get(j).copied().unwrap_or(0)).sum())).sum();
    let total = pairs(n);
    // agreements = together in both + apart in both
    let agree = total + 2 * both - rows - cols;
    Ok(agree as f64 / total as f64)
}

/// Fraction of item pairs on which the two labelings agree (grouped
/// together in both, or apart in both).
pub fn rand_measure<A: Eq + Hash, B: Eq + Hash>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    fn index<T: Eq + Hash>(labels: &[T]) -> (Vec<usize>, usize) {
        let mut ids = HashMap::new();
        let coded = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        (coded, ids.len())
    }
    let (ca, ka) = index(a);
    let (cb, kb) = index(b);
    let mut table = vec![vec![0u64; kb]; ka];
    for (i, j) in ca.into_iter().zip(cb) {
        table[i][j] += 1;
    }
    rand_from_contingency(&table)
}

/// Rand measure over row-distributed labels. Labels must lie in `0..ka`
/// and `0..kb`; the contingency table is summed across ranks.
pub fn rand_measure_distributed(
    a: &[usize],
    ka: usize,
    b: &[usize],
    kb: usize,
    comm: &dyn Communicator,
) -> Result<f64> {
    let mut local = vec![0.0; ka * kb];
    let mut bad = a.len() != b.len();
    for (&i, &j) in a.iter().zip(b) {
        if i >= ka || j >= kb {
            bad = true;
            break;
        }
        local[i * kb + j] += 1.0;
    }
    local.push(if bad { 1.0 } else { 0.0 });
    let global = comm.allreduce_sum(&local)?;
    if global[ka * kb] > 0.0 {
        return Err(Error::arg("labels out of range or mismatched lengths"));
    }
    let table: Vec<Vec<u64>> =
        global[..ka * kb].chunks(kb.max(1)).map(|r| r.iter().map(|&c| c as u64).collect()).collect();
    rand_from_contingency(&table)
}
