use crate::{QprojError, Result};

/// Dense [batch, seq, dim] tensor of f64 values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    batch: usize,
    seq: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(batch: usize, seq: usize, dim: usize) -> Self {
        Self {
            batch,
            seq,
            dim,
            data: vec![0.0; batch * seq * dim],
        }
    }

    pub fn from_vec(batch: usize, seq: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != batch * seq * dim {
            return Err(QprojError::ShapeMismatch {
                what: "FeatureTensor::from_vec",
                expected: format!("{} values", batch * seq * dim),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            batch,
            seq,
            dim,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.seq, self.dim)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn seq(&self) -> usize {
        self.seq
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.batch * self.seq
    }

    pub fn at(&self, b: usize, l: usize, d: usize) -> f64 {
        self.data[(b * self.seq + l) * self.dim + d]
    }

    pub fn at_mut(&mut self, b: usize, l: usize, d: usize) -> &mut f64 {
        &mut self.data[(b * self.seq + l) * self.dim + d]
    }

    /// Flat row index r = b·L + l.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// 2-D matrix produced by flattening the batch and sequence axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Merges batch and sequence into one circuit-instance axis; row i holds
/// token (i div L, i mod L).
pub fn flatten_batch(x: &FeatureTensor) -> Matrix {
    Matrix {
        rows: x.batch * x.seq,
        cols: x.dim,
        data: x.data.clone(),
    }
}

/// Inverse of [`flatten_batch`]; bit-exact round trip.
pub fn unflatten_batch(m: &Matrix, batch: usize, seq: usize) -> Result<FeatureTensor> {
    if m.rows != batch * seq {
        return Err(QprojError::ShapeMismatch {
            what: "unflatten_batch",
            expected: format!("{} rows (= {batch}·{seq})", batch * seq),
            got: format!("{} rows", m.rows),
        });
    }
    FeatureTensor::from_vec(batch, seq, m.cols, m.data.clone())
}
