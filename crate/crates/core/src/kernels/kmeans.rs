use crate::comm::Communicator;
use crate::dmat::{fetch_rows, RowBlockMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// `k x ncols`, identical on every rank.
    pub centroids: Matrix,
    /// Cluster id of each local row.
    pub labels: Vec<usize>,
    /// Number of assignment passes performed.
    pub iterations_run: usize,
    /// True when the last pass changed no label anywhere.
    pub converged: bool,
    /// Global within-cluster sum of squares measured at each assignment pass.
    pub wcss_history: Vec<f64>,
    /// Global number of rows in each cluster.
    pub cluster_sizes: Vec<usize>,
}

/// Picks `k` distinct global rows as starting centroids using the seeded
/// initialisation stream. Rows whose values duplicate an earlier pick are
/// skipped while enough alternatives exist.
pub fn init_centroids(x: &RowBlockMatrix, k: usize, seed: u64, comm: &dyn Communicator) -> Result<Matrix> {
    let n = x.global_nrows();
    if k == 0 || k > n {
        return Err(Error::arg(format!("cannot choose {k} starting rows from {n}")));
    }
    let mut stream = Stream::for_init(seed);
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    // every rank draws the same sequence, so all ranks agree on each pick
    while picked.len() < k {
        attempts += 1;
        let idx = stream.below(n as u64) as usize;
        if picked.contains(&idx) {
            if attempts > 1000 * k + 10 * n {
                return Err(Error::Numeric("could not draw distinct starting rows".into()));
            }
            continue;
        }
        let row = fetch_rows(x, &[idx], comm)?.pop().expect("one row");
        if rows.contains(&row) && attempts <= 100 * k {
            continue;
        }
        picked.push(idx);
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

fn nearest(row: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d: f64 = row.iter().zip(centroids.row(c)).map(|(a, b)| (a - b) * (a - b)).sum();
        // strict: ties stay with the lowest index
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm. Each pass assigns every row to its nearest centroid
/// (squared Euclidean, ties to the lowest index) and then moves each
/// centroid to the global mean of its rows. Stops after `max_iter` passes or
/// at the first pass that changes no label; empty clusters keep their
/// previous centroid.
pub fn kmeans_lloyd(
    x: &RowBlockMatrix,
    k: usize,
    init: &Matrix,
    max_iter: usize,
    comm: &dyn Communicator,
) -> Result<KmeansResult> {
    let p = x.ncols();
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if k > x.global_nrows() {
        return Err(Error::arg(format!("k = {k} exceeds the {} available rows", x.global_nrows())));
    }
    if max_iter == 0 {
        return Err(Error::arg("max_iter must be at least 1"));
    }
    if init.nrows() != k || init.ncols() != p {
        return Err(Error::arg(format!("initial centroids are {}x{}, expected {k}x{p}", init.nrows(), init.ncols())));
    }
    if init.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("initial centroids must be finite"));
    }

    let mut centroids = init.clone();
    let mut labels = vec![usize::MAX; x.local_nrows()];
    let mut wcss_history = Vec::new();
    let mut sizes = vec![0usize; k];
    let mut converged = false;
    let mut iterations = 0;
    // layout: per-cluster sums (k*p), counts (k), changed labels, wcss
    let mut buf = vec![0.0; k * p + k + 2];

    while iterations < max_iter {
        iterations += 1;
        buf.iter_mut().for_each(|v| *v = 0.0);
        let mut changed = 0usize;
        let mut wcss = 0.0;
        for (row, label) in x.rows().zip(labels.iter_mut()) {
            let (c, d) = nearest(row, &centroids);
            if *label != c {
                changed += 1;
                *label = c;
            }
            wcss += d;
            buf[c * p..(c + 1) * p].iter_mut().zip(row).for_each(|(s, v)| *s += v);
            buf[k * p + c] += 1.0;
        }
        buf[k * p + k] = changed as f64;
        buf[k * p + k + 1] = wcss;
        let global = comm.allreduce_sum(&buf)?;
        wcss_history.push(global[k * p + k + 1]);
        for (c, size) in sizes.iter_mut().enumerate() {
            *size = global[k * p + c] as usize;
        }
        if iterations > 1 && global[k * p + k] == 0.0 {
            converged = true;
            break;
        }
        for (c, &count) in sizes.iter().enumerate() {
            if count > 0 {
                let inv = count as f64;
                for j in 0..p {
                    centroids[(c, j)] = global[c * p + j] / inv;
                }
            }
        }
    }
    Ok(KmeansResult { centroids, labels, iterations_run: iterations, converged, wcss_history, cluster_sizes: sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::{InProcessWorld, SingleRank};
    use crate::dmat::column_means;

    fn column(values: &[f64]) -> RowBlockMatrix {
        RowBlockMatrix::new(values.to_vec(), values.len(), 1, values.len(), 0).unwrap()
    }

    #[test]
    fn four_point_example() {
        let x = column(&[0.0, 0.1, 9.9, 10.0]);
        let init = Matrix::from_rows(&[vec![0.0], vec![10.0]]).unwrap();
        let r = kmeans_lloyd(&x, 2, &init, 100, &SingleRank).unwrap();
        assert!((r.centroids[(0, 0)] - 0.05).abs() < 1e-15);
        assert!((r.centroids[(1, 0)] - 9.95).abs() < 1e-15);
        assert!(r.iterations_run <= 2);
        assert!(r.converged);
        assert_eq!(r.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn k_one_is_column_mean() {
        let data: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 - 0.5 * i as f64).collect();
        let x = RowBlockMatrix::new(data, 10, 3, 10, 0).unwrap();
        let init = Matrix::from_rows(&[vec![100.0, -4.0, 2.0]]).unwrap();
        let r = kmeans_lloyd(&x, 1, &init, 10, &SingleRank).unwrap();
        let m = column_means(&x, &SingleRank).unwrap();
        for j in 0..3 {
            assert!((r.centroids[(0, j)] - m[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let x = column(&[5.0, 5.0]);
        let init = Matrix::from_rows(&[vec![4.0], vec![6.0]]).unwrap();
        let r = kmeans_lloyd(&x, 2, &init, 1, &SingleRank).unwrap();
        assert_eq!(r.labels, vec![0, 0]);
    }

    #[test]
    fn empty_cluster_keeps_centroid() {
        let x = column(&[0.0, 1.0]);
        let init = Matrix::from_rows(&[vec![0.5], vec![100.0]]).unwrap();
        let r = kmeans_lloyd(&x, 2, &init, 10, &SingleRank).unwrap();
        assert_eq!(r.centroids[(1, 0)], 100.0);
        assert_eq!(r.cluster_sizes, vec![2, 0]);
    }

    #[test]
    fn argument_errors() {
        let x = column(&[0.0, 1.0]);
        let init3 = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(kmeans_lloyd(&x, 3, &init3, 10, &SingleRank).is_err());
        let init1 = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(kmeans_lloyd(&x, 1, &init1, 10, &SingleRank).is_err());
        let ok = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(kmeans_lloyd(&x, 1, &ok, 0, &SingleRank).is_err());
        assert!(init_centroids(&x, 3, 1, &SingleRank).is_err());
    }

    #[test]
    fn init_draws_distinct_rows_on_all_ranks() {
        let out = InProcessWorld::new(3).run(|c| {
            let g = Matrix::from_rows(&(0..20).map(|i| vec![i as f64, (i % 4) as f64]).collect::<Vec<_>>()).unwrap();
            let x = RowBlockMatrix::from_global(&g, &c).unwrap();
            init_centroids(&x, 4, 11, &c).unwrap()
        });
        assert!(out.windows(2).all(|w| w[0] == w[1]));
        let rows: Vec<&[f64]> = (0..4).map(|i| out[0].row(i)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(rows[i], rows[j]);
            }
        }
    }

    #[test]
    fn duplicate_rows_are_skipped_when_possible() {
        let x = column(&[1.0, 1.0, 1.0, 1.0, 2.0]);
        for seed in 0..20 {
            let c = init_centroids(&x, 2, seed, &SingleRank).unwrap();
            assert_ne!(c[(0, 0)], c[(1, 0)], "seed {seed}");
        }
    }
}
