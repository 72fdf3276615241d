//! Row-block distributed dense matrices and synthetic benchmark data.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::comm::Communicator;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Stream;

/// Rows `[offset, offset + count)` owned by `rank` when `nrows` rows are
/// split over `size` ranks; the first `nrows % size` ranks get one extra.
pub fn row_partition(nrows: usize, size: usize, rank: usize) -> (usize, usize) {
    let base = nrows / size;
    let extra = nrows % size;
    let count = base + usize::from(rank < extra);
    let offset = rank * base + rank.min(extra);
    (offset, count)
}

/// A dense row-major block of a matrix whose rows are split contiguously
/// across ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBlockMatrix {
    data: Vec<f64>,
    local_nrows: usize,
    ncols: usize,
    global_nrows: usize,
    row_offset: usize,
}

impl RowBlockMatrix {
    pub fn new(
        data: Vec<f64>,
        local_nrows: usize,
        ncols: usize,
        global_nrows: usize,
        row_offset: usize,
    ) -> Result<Self> {
        if data.len() != local_nrows * ncols {
            return Err(Error::arg(format!(
                "block of {local_nrows}x{ncols} needs {} values, got {}",
                local_nrows * ncols,
                data.len()
            )));
        }
        if row_offset + local_nrows > global_nrows {
            return Err(Error::arg(format!(
                "rows {row_offset}..{} exceed global row count {global_nrows}",
                row_offset + local_nrows
            )));
        }
        Ok(Self { data, local_nrows, ncols, global_nrows, row_offset })
    }

    /// Takes this rank's block out of a full row-major matrix that every
    /// rank holds.
    pub fn from_global(global: &Matrix, comm: &dyn Communicator) -> Result<Self> {
        let (offset, count) = row_partition(global.nrows(), comm.size(), comm.rank());
        let n = global.ncols();
        let data = global.as_slice()[offset * n..(offset + count) * n].to_vec();
        Self::new(data, count, n, global.nrows(), offset)
    }

    pub fn local_nrows(&self) -> usize {
        self.local_nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn global_nrows(&self) -> usize {
        self.global_nrows
    }

    pub fn row_offset(&self) -> usize {
        self.row_offset
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact on an empty slice with ncols 0 would panic
        self.data.chunks_exact(self.ncols.max(1))
    }

    pub fn owns(&self, global_row: usize) -> bool {
        global_row >= self.row_offset && global_row < self.row_offset + self.local_nrows
    }

    /// Writes the local block: 4-byte magic `RBLK`, row count as u64 LE,
    /// column count as u32 LE, then row-major f64 LE values.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(BLOCK_MAGIC)?;
        out.write_all(&(self.local_nrows as u64).to_le_bytes())?;
        let ncols = u32::try_from(self.ncols).map_err(|_| Error::arg("too many columns for block header"))?;
        out.write_all(&ncols.to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a block written by [`write_binary`](Self::write_binary) as a
    /// standalone single-rank matrix.
    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[..4] != BLOCK_MAGIC {
            return Err(Error::arg("not a row-block file (bad magic or short header)"));
        }
        let nrows = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
        let ncols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let body = &bytes[16..];
        if body.len() != nrows * ncols * 8 {
            return Err(Error::arg(format!(
                "row-block body has {} bytes, header implies {}",
                body.len(),
                nrows * ncols * 8
            )));
        }
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Self::new(data, nrows, ncols, nrows, 0)
    }
}

const BLOCK_MAGIC: &[u8; 4] = b"RBLK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Workload {
    Pca,
    Kmeans,
    Svm,
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Pca => "pca",
            Workload::Kmeans => "kmeans",
            Workload::Svm => "svm",
        }
    }
}

impl std::fmt::Display for Workload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    /// One sequential stream per rank keyed by `seed ^ rank`.
    #[default]
    #[value(name = "per-rank")]
    #[serde(rename = "per-rank")]
    PerRankStream,
    /// Row `i` is a pure function of `(seed, i)`.
    #[value(name = "replicated")]
    #[serde(rename = "replicated")]
    ReplicatedByRowIndex,
}

/// Per-coordinate means of the k-means mixture components.
pub const KMEANS_MEANS: [f64; 3] = [0.0, 2.0, 10.0];
/// Per-coordinate means of the SVM classes labelled -1 and +1.
pub const SVM_MEANS: [f64; 2] = [0.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub workload: Workload,
    pub nrows_global: usize,
    pub ncols: usize,
    pub seed: u64,
    pub mode: GenMode,
    /// Artificial per-rank delay added to generation; for timing tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<Duration>,
}

impl GenSpec {
    pub fn new(workload: Workload, nrows_global: usize, ncols: usize, seed: u64) -> Self {
        Self { workload, nrows_global, ncols, seed, mode: GenMode::default(), delay: None }
    }

    pub fn with_mode(mut self, mode: GenMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRole {
    /// No labels (PCA data); `labels` is empty.
    Unlabeled,
    /// `-1` / `+1` classification response.
    SvmResponse,
    /// Index of the mixture component each row was drawn from.
    KmeansTruth,
}

#[derive(Debug, Clone)]
pub struct LabeledBlock {
    pub x: RowBlockMatrix,
    pub labels: Vec<i32>,
    pub role: LabelRole,
}

/// Fills `row` and returns its label (unused for PCA).
fn fill_row(workload: Workload, stream: &mut Stream, row: &mut [f64]) -> i32 {
    match workload {
        Workload::Pca => {
            row.iter_mut().for_each(|v| *v = stream.normal());
            0
        }
        Workload::Kmeans => {
            let class = stream.below(KMEANS_MEANS.len() as u64) as usize;
            let mu = KMEANS_MEANS[class];
            row.iter_mut().for_each(|v| *v = mu + stream.normal());
            class as i32
        }
        Workload::Svm => {
            let class = stream.below(2) as usize;
            let mu = SVM_MEANS[class];
            row[0] = 1.0;
            row[1..].iter_mut().for_each(|v| *v = mu + stream.normal());
            if class == 0 {
                -1
            } else {
                1
            }
        }
    }
}

/// Generates this rank's share of a synthetic benchmark dataset.
pub fn generate(spec: &GenSpec, comm: &dyn Communicator) -> Result<LabeledBlock> {
    let size = comm.size();
    if spec.nrows_global < size {
        return Err(Error::arg(format!("{} rows cannot be spread over {size} ranks", spec.nrows_global)));
    }
    if spec.ncols == 0 {
        return Err(Error::arg("need at least one column"));
    }
    if spec.workload == Workload::Svm && spec.ncols < 2 {
        return Err(Error::arg("SVM data needs an intercept plus at least one feature column"));
    }
    if let Some(d) = spec.delay {
        std::thread::sleep(d);
    }
    let (offset, count) = row_partition(spec.nrows_global, size, comm.rank());
    let p = spec.ncols;
    let mut data = vec![0.0; count * p];
    let mut labels = Vec::with_capacity(count);
    let mut rank_stream = Stream::for_rank(spec.seed, comm.rank());
    for (i, row) in data.chunks_exact_mut(p).enumerate() {
        let label = match spec.mode {
            GenMode::ReplicatedByRowIndex => {
                fill_row(spec.workload, &mut Stream::for_row(spec.seed, (offset + i) as u64), row)
            }
            GenMode::PerRankStream => fill_row(spec.workload, &mut rank_stream, row),
        };
        labels.push(label);
    }
    let role = match spec.workload {
        Workload::Pca => {
            labels.clear();
            LabelRole::Unlabeled
        }
        Workload::Kmeans => LabelRole::KmeansTruth,
        Workload::Svm => LabelRole::SvmResponse,
    };
    Ok(LabeledBlock { x: RowBlockMatrix::new(data, count, p, spec.nrows_global, offset)?, labels, role })
}

/// Global per-column means, identical on every rank.
pub fn column_means(x: &RowBlockMatrix, comm: &dyn Communicator) -> Result<Vec<f64>> {
    if x.global_nrows() == 0 {
        return Err(Error::arg("column means of a matrix with no rows"));
    }
    let mut sums = vec![0.0; x.ncols()];
    for row in x.rows() {
        sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    let n = x.global_nrows() as f64;
    Ok(comm.allreduce_sum(&sums)?.into_iter().map(|s| s / n).collect())
}

/// Sample covariance `(X - mean)ᵀ(X - mean) / (n - 1)`, identical on every
/// rank.
pub fn covariance(x: &RowBlockMatrix, comm: &dyn Communicator) -> Result<Matrix> {
    if x.global_nrows() < 2 {
        return Err(Error::arg("covariance needs at least two rows"));
    }
    let means = column_means(x, comm)?;
    let p = x.ncols();
    let mut acc = vec![0.0; p * p];
    let mut centered = vec![0.0; p];
    for row in x.rows() {
        centered.iter_mut().zip(row.iter().zip(&means)).for_each(|(c, (v, m))| *c = v - m);
        for j in 0..p {
            let cj = centered[j];
            let dst = &mut acc[j * p + j..(j + 1) * p];
            for (d, ck) in dst.iter_mut().zip(&centered[j..]) {
                *d += cj * ck;
            }
        }
    }
    let total = comm.allreduce_sum(&acc)?;
    let denom = (x.global_nrows() - 1) as f64;
    let mut c = Matrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let v = total[j * p + k] / denom;
            c[(j, k)] = v;
            c[(k, j)] = v;
        }
    }
    Ok(c)
}

/// Copies the requested global rows to every rank.
pub fn fetch_rows(x: &RowBlockMatrix, rows: &[usize], comm: &dyn Communicator) -> Result<Vec<Vec<f64>>> {
    let p = x.ncols();
    let mut buf = vec![0.0; rows.len() * p];
    for (slot, &r) in rows.iter().enumerate() {
        if r >= x.global_nrows() {
            return Err(Error::arg(format!("row {r} out of range ({} rows)", x.global_nrows())));
        }
        if x.owns(r) {
            buf[slot * p..(slot + 1) * p].copy_from_slice(x.row(r - x.row_offset()));
        }
    }
    let all = comm.allreduce_sum(&buf)?;
    Ok(all.chunks_exact(p.max(1)).map(<[f64]>::to_vec).collect())
}
