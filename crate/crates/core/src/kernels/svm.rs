use crate::comm::Communicator;
use crate::dmat::{LabeledBlock, RowBlockMatrix};
use crate::error::{Error, Result};
use crate::kernels::agree_ok;
use crate::optim::{nelder_mead, NmParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// One weight per column; index 0 multiplies the intercept column.
    pub weights: Vec<f64>,
    pub final_loss: f64,
    pub iterations_run: usize,
}

fn check_labels(x: &RowBlockMatrix, y: &[i32]) -> Result<()> {
    if y.len() != x.local_nrows() {
        return Err(Error::arg(format!("{} labels for {} rows", y.len(), x.local_nrows())));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::arg(format!("SVM labels must be -1 or +1, found {bad}")));
    }
    Ok(())
}

fn check_weights(w: &[f64], x: &RowBlockMatrix) -> Result<()> {
    if w.len() != x.ncols() {
        return Err(Error::arg(format!("{} weights for {} columns", w.len(), x.ncols())));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn local_hinge(w: &[f64], x: &RowBlockMatrix, y: &[i32]) -> f64 {
    x.rows().zip(y).map(|(row, &yi)| (1.0 - f64::from(yi) * dot(row, w)).max(0.0)).sum()
}

/// `Σ max(0, 1 - yᵢ xᵢ·w)` over all rows of all ranks.
pub fn hinge_loss(w: &[f64], x: &RowBlockMatrix, y: &[i32], comm: &dyn Communicator) -> Result<f64> {
    check_weights(w, x)?;
    let local = check_labels(x, y);
    let (loss, bad) = if local.is_ok() { (local_hinge(w, x, y), 0.0) } else { (0.0, 1.0) };
    let g = comm.allreduce_sum(&[loss, bad])?;
    local?;
    if g[1] > 0.0 {
        return Err(Error::arg("invalid SVM labels on another rank"));
    }
    Ok(g[0])
}

/// Linear SVM trained by minimising the hinge loss with Nelder–Mead from
/// `w = 0`, for exactly `iters` simplex iterations.
pub fn svm_fit(data: &LabeledBlock, iters: usize, comm: &dyn Communicator) -> Result<SvmModel> {
    svm_fit_with(data, iters, &NmParams::default(), comm)
}

pub fn svm_fit_with(data: &LabeledBlock, iters: usize, params: &NmParams, comm: &dyn Communicator) -> Result<SvmModel> {
    agree_ok(check_labels(&data.x, &data.labels), comm)?;
    let (x, y) = (&data.x, &data.labels[..]);
    let w0 = vec![0.0; x.ncols()];
    let objective = |w: &[f64]| -> Result<f64> { Ok(comm.allreduce_scalar(local_hinge(w, x, y))?) };
    let out = nelder_mead(objective, &w0, iters, params)?;
    Ok(SvmModel { weights: out.x, final_loss: out.fval, iterations_run: iters })
}

/// Fraction of rows with `sign(xᵢ·w) == yᵢ`, where a zero score predicts +1.
pub fn svm_accuracy(model: &SvmModel, data: &LabeledBlock, comm: &dyn Communicator) -> Result<f64> {
    check_weights(&model.weights, &data.x)?;
    agree_ok(check_labels(&data.x, &data.labels), comm)?;
    let correct = data
        .x
        .rows()
        .zip(&data.labels)
        .filter(|(row, &yi)| {
            let pred = if dot(row, &model.weights) >= 0.0 { 1 } else { -1 };
            pred == yi
        })
        .count();
    let total = comm.allreduce_scalar(correct as f64)?;
    Ok(total / data.x.global_nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::SingleRank;
    use crate::dmat::LabelRole;

    fn block(rows: &[Vec<f64>], labels: &[i32]) -> LabeledBlock {
        let p = rows[0].len();
        let x = RowBlockMatrix::new(rows.concat(), rows.len(), p, rows.len(), 0).unwrap();
        LabeledBlock { x, labels: labels.to_vec(), role: LabelRole::SvmResponse }
    }

    #[test]
    fn hinge_examples() {
        let d = block(&[vec![1.0, 2.0], vec![1.0, -3.0], vec![1.0, 0.5]], &[1, -1, 1]);
        assert_eq!(hinge_loss(&[0.0, 0.0], &d.x, &d.labels, &SingleRank).unwrap(), 3.0);
        let one = block(&[vec![1.0, 1.0]], &[1]);
        assert_eq!(hinge_loss(&[2.0, 0.0], &one.x, &one.labels, &SingleRank).unwrap(), 0.0);
        // scores 0.5, -1, 2 against labels +1, +1, -1: 0.5 + 2 + 3
        let d = block(&[vec![0.5], vec![-1.0], vec![2.0]], &[1, 1, -1]);
        assert_eq!(hinge_loss(&[1.0], &d.x, &d.labels, &SingleRank).unwrap(), 5.5);
    }

    #[test]
    fn hinge_errors() {
        let d = block(&[vec![1.0, 2.0]], &[1]);
        assert!(hinge_loss(&[0.0], &d.x, &d.labels, &SingleRank).is_err());
        assert!(hinge_loss(&[0.0, 0.0], &d.x, &[0], &SingleRank).is_err());
        assert!(hinge_loss(&[0.0, 0.0], &d.x, &[1, 1], &SingleRank).is_err());
    }

    #[test]
    fn separable_one_dimensional() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, if i % 2 == 0 { -5.0 } else { 5.0 }]).collect();
        let labels: Vec<i32> = (0..20).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
        let d = block(&rows, &labels);
        let m = svm_fit(&d, 500, &SingleRank).unwrap();
        assert_eq!(svm_accuracy(&m, &d, &SingleRank).unwrap(), 1.0);
        assert_eq!(m.final_loss, hinge_loss(&m.weights, &d.x, &d.labels, &SingleRank).unwrap());
    }

    #[test]
    fn single_iteration_does_not_increase_loss() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64 - 4.5]).collect();
        let labels: Vec<i32> = (0..10).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let d = block(&rows, &labels);
        let m = svm_fit(&d, 1, &SingleRank).unwrap();
        assert!(m.final_loss <= 10.0);
        assert_eq!(m.iterations_run, 1);
    }

    #[test]
    fn accuracy_examples() {
        let d = block(&[vec![1.0], vec![2.0], vec![3.0]], &[1, 1, 1]);
        let all_pos = SvmModel { weights: vec![1.0], final_loss: 0.0, iterations_run: 0 };
        assert_eq!(svm_accuracy(&all_pos, &d, &SingleRank).unwrap(), 1.0);

        let mixed = block(&[vec![1.0], vec![1.0], vec![1.0], vec![1.0]], &[1, -1, -1, 1]);
        let zero = SvmModel { weights: vec![0.0], final_loss: 0.0, iterations_run: 0 };
        assert_eq!(svm_accuracy(&zero, &mixed, &SingleRank).unwrap(), 0.5);

        // predictions +, -, + against all +
        let d = block(&[vec![1.0], vec![-1.0], vec![2.0]], &[1, 1, 1]);
        let w = SvmModel { weights: vec![1.0], final_loss: 0.0, iterations_run: 0 };
        assert!((svm_accuracy(&w, &d, &SingleRank).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
