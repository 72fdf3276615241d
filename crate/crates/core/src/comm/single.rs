use super::{check_root, CommError, Communicator};

/// A communicator of size one. Every collective is a local copy.
#[derive(Debug, Default, Clone, Copy)]
pub struct SingleRank;

impl Communicator for SingleRank {
    fn rank(&self) -> usize {
        0
    }

    fn size(&self) -> usize {
        1
    }

    fn allreduce_sum(&self, local: &[f64]) -> Result<Vec<f64>, CommError> {
        Ok(local.to_vec())
    }

    fn broadcast(&self, value: &[u8], root: usize) -> Result<Vec<u8>, CommError> {
        check_root(root, 1)?;
        Ok(value.to_vec())
    }

    fn gather(&self, value: f64, root: usize) -> Result<Option<Vec<f64>>, CommError> {
        check_root(root, 1)?;
        Ok(Some(vec![value]))
    }

    fn barrier(&self) -> Result<(), CommError> {
        Ok(())
    }
}
