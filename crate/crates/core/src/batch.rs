use crate::error::{Error, Result};

/// Column-oriented block of simplex-valued samples, tagged with the stream
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    columns: Vec<Vec<f64>>,
    seed: u64,
    stream_id: u64,
}

impl SampleBatch {
    pub fn new(dim: usize, seed: u64, stream_id: u64) -> Self {
        Self {
            columns: vec![Vec::new(); dim],
            seed,
            stream_id,
        }
    }

    pub fn with_capacity(dim: usize, capacity: usize, seed: u64, stream_id: u64) -> Self {
        Self {
            columns: (0..dim).map(|_| Vec::with_capacity(capacity)).collect(),
            seed,
            stream_id,
        }
    }

    /// Builds a batch from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], seed: u64, stream_id: u64) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::EmptyBatch)?;
        let mut batch = Self::with_capacity(dim, rows.len(), seed, stream_id);
        for row in rows {
            batch.push(row.as_ref())?;
        }
        Ok(batch)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        for (col, &x) in self.columns.iter_mut().zip(row) {
            col.push(x);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// `∏_j x_j^{s_j}` for every row.
    pub fn monomial(&self, s: &[u32]) -> Result<Vec<f64>> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        let mut out = vec![1.0; self.len()];
        for (col, &sj) in self.columns.iter().zip(s) {
            if sj == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(col) {
                *o *= x.powi(sj as i32);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns_agree() {
        let b = SampleBatch::from_rows(&[[0.1, 0.9], [0.4, 0.6], [0.5, 0.5]], 1, 2).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.dim(), 2);
        assert_eq!(b.column(0), &[0.1, 0.4, 0.5]);
        assert_eq!(b.row(1), vec![0.4, 0.6]);
        assert_eq!((b.seed(), b.stream_id()), (1, 2));
    }

    #[test]
    fn monomial_products() {
        let b = SampleBatch::from_rows(&[[0.5, 0.5], [0.2, 0.8]], 0, 0).unwrap();
        let m = b.monomial(&[2, 1]).unwrap();
        assert!((m[0] - 0.125).abs() < 1e-15);
        assert!((m[1] - 0.032).abs() < 1e-15);
        assert_eq!(b.monomial(&[0, 0]).unwrap(), vec![1.0, 1.0]);
        assert!(b.monomial(&[1]).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut b = SampleBatch::new(3, 0, 0);
        assert!(b.push(&[0.5, 0.5]).is_err());
        assert!(SampleBatch::from_rows::<[f64; 2]>(&[], 0, 0).is_err());
    }
}
