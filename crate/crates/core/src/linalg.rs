//! Small dense linear algebra: a row-major matrix type, the cyclic Jacobi
//! symmetric eigensolver and a one-sided Jacobi SVD over row blocks.

use crate::comm::{Communicator, SingleRank};
use crate::dmat::RowBlockMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::arg(format!("{} values cannot fill a {nrows}x{ncols} matrix", data.len())));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::arg("ragged rows"));
        }
        Ok(Self { nrows: rows.len(), ncols, data: rows.concat() })
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.ncols != other.nrows {
            return Err(Error::arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = Matrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.nrows {
            for j in i + 1..self.ncols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

pub const SYMMETRY_TOL: f64 = 1e-9;
pub const JACOBI_OFF_TOL: f64 = 1e-11;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending.
pub fn symmetric_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(s)?.values)
}

/// Cyclic Jacobi eigendecomposition. Sweeps stop once the off-diagonal
/// Frobenius norm falls below `JACOBI_OFF_TOL` times the Frobenius norm of
/// the input.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n {
        return Err(Error::arg(format!("need a non-empty square matrix, got {}x{}", n, s.ncols())));
    }
    if s.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::arg(format!("matrix is not symmetric (relative asymmetry {asym:.3e})")));
    }
    // work on the exactly symmetrised copy
    let mut a = s.clone();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let frob = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_OFF_TOL * frob;

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal norm {off:.3e})"
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // rotation angle annihilating a_pq; t = tan(theta), smaller root
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors, sweeps })
}

pub const SVD_MAX_SWEEPS: usize = 60;

/// Thin SVD `A = U diag(s) Vᵀ` of a row-distributed matrix. `u` keeps the
/// row layout of `A`; `s` and `v` are replicated on every rank.
#[derive(Debug, Clone)]
pub struct DistributedSvd {
    pub u: RowBlockMatrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Thin SVD of a dense `m x n` matrix with `m >= n`.
pub fn svd_factor(a: &Matrix) -> Result<Svd> {
    let block = RowBlockMatrix::new(a.as_slice().to_vec(), a.nrows(), a.ncols(), a.nrows(), 0)?;
    let DistributedSvd { u, s, v } = svd_rowblock(&block, &SingleRank)?;
    Ok(Svd { u: Matrix::from_row_major(a.nrows(), a.ncols(), u.into_data())?, s, v })
}

/// One-sided (Hestenes) Jacobi SVD. Column pairs of the working copy of `A`
/// are rotated until mutually orthogonal; the inner products each rotation
/// needs are summed across ranks, so every rank applies identical rotations
/// to its own rows.
pub fn svd_rowblock(a: &RowBlockMatrix, comm: &dyn Communicator) -> Result<DistributedSvd> {
    let m = a.global_nrows();
    let n = a.ncols();
    if m < n {
        return Err(Error::arg(format!("SVD needs m >= n, got {m}x{n}")));
    }
    if a.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let rows = a.local_nrows();
    let mut w = a.data().to_vec();
    let mut v = Matrix::identity(n);

    // column pairs count as orthogonal below sqrt(m) * eps relative
    let tol = (m as f64).sqrt() * f64::EPSILON;
    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let wp = w[r * n + p];
                    let wq = w[r * n + q];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                let g = comm.allreduce_sum(&[alpha, beta, gamma])?;
                let (alpha, beta, gamma) = (g[0], g[1], g[2]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for r in 0..rows {
                    let wp = w[r * n + p];
                    let wq = w[r * n + q];
                    w[r * n + p] = c * wp - sn * wq;
                    w[r * n + q] = sn * wp + c * wq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - sn * vq;
                    v[(k, q)] = sn * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("one-sided Jacobi SVD did not converge in {SVD_MAX_SWEEPS} sweeps")));
    }

    let mut local_sq = vec![0.0; n];
    for r in 0..rows {
        for (j, acc) in local_sq.iter_mut().enumerate() {
            *acc += w[r * n + j] * w[r * n + j];
        }
    }
    let norms: Vec<f64> = comm.allreduce_sum(&local_sq)?.into_iter().map(f64::sqrt).collect();
    let scale = norms.iter().fold(0.0_f64, |m, &x| m.max(x));
    let null_tol = scale * (m.max(n) as f64) * f64::EPSILON;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut s = Vec::with_capacity(n);
    let mut u = vec![0.0; rows * n];
    let mut v_sorted = Matrix::zeros(n, n);
    let mut null_cols = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        for k in 0..n {
            v_sorted[(k, dst)] = v[(k, src)];
        }
        if sigma > null_tol {
            s.push(sigma);
            for r in 0..rows {
                u[r * n + dst] = w[r * n + src] / sigma;
            }
        } else {
            s.push(0.0);
            null_cols.push(dst);
        }
    }
    complete_basis(&mut u, rows, n, a.row_offset(), m, &null_cols, comm)?;
    Ok(DistributedSvd { u: RowBlockMatrix::new(u, rows, n, m, a.row_offset())?, s, v: v_sorted })
}

/// Fills the columns listed in `null_cols` with unit vectors orthogonal to
/// every other column, trying standard basis vectors `e_0, e_1, ...` in turn.
fn complete_basis(
    u: &mut [f64],
    rows: usize,
    n: usize,
    offset: usize,
    m: usize,
    null_cols: &[usize],
    comm: &dyn Communicator,
) -> Result<()> {
    let mut filled: Vec<usize> = (0..n).filter(|c| !null_cols.contains(c)).collect();
    let mut candidate = 0;
    for &col in null_cols {
        loop {
            if candidate == m {
                return Err(Error::Numeric("could not complete orthonormal basis".into()));
            }
            let e = candidate;
            candidate += 1;
            let owns = e >= offset && e < offset + rows;
            // coefficients of e against filled columns are row e of U
            let mut coeffs = vec![0.0; n];
            if owns {
                coeffs.copy_from_slice(&u[(e - offset) * n..(e - offset + 1) * n]);
            }
            let coeffs = comm.allreduce_sum(&coeffs)?;
            let mut x = vec![0.0; rows];
            if owns {
                x[e - offset] = 1.0;
            }
            for &f in &filled {
                for r in 0..rows {
                    x[r] -= coeffs[f] * u[r * n + f];
                }
            }
            // second Gram-Schmidt pass for orthogonality to roundoff
            let mut dots = vec![0.0; n];
            for &f in &filled {
                dots[f] = (0..rows).map(|r| x[r] * u[r * n + f]).sum();
            }
            let dots = comm.allreduce_sum(&dots)?;
            for &f in &filled {
                for r in 0..rows {
                    x[r] -= dots[f] * u[r * n + f];
                }
            }
            let norm = comm.allreduce_scalar(x.iter().map(|v| v * v).sum())?.sqrt();
            if norm > 0.5 {
                for r in 0..rows {
                    u[r * n + col] = x[r] / norm;
                }
                filled.push(col);
                break;
            }
        }
    }
    Ok(())
}
