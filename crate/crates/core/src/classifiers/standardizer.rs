use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

/// Column-wise z-scoring with the population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::DegenerateInput(format!(
                "standardizer needs at least 2 rows, got {n}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let nf = n as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let x0 = col[0];
            // Shifting by the first value keeps constant columns exact.
            let m = x0 + col.iter().map(|&v| v - x0).sum::<f64>() / nf;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / nf;
            mean.push(m);
            sd.push(var.sqrt());
        }
        Ok(Self { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn z(&self, j: usize, v: f64) -> f64 {
        if self.sd[j] > 0.0 {
            (v - self.mean[j]) / self.sd[j]
        } else {
            0.0
        }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(Array2::from_shape_fn(x.dim(), |(i, j)| self.z(j, x[[i, j]])))
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row.iter().enumerate().map(|(j, &v)| self.z(j, v)).collect())
    }

    /// Restricts the standardizer to the given columns, in order.
    pub fn subset(&self, cols: &[usize]) -> Standardizer {
        Standardizer {
            mean: cols.iter().map(|&c| self.mean[c]).collect(),
            sd: cols.iter().map(|&c| self.sd[c]).collect(),
        }
    }
}
