use crate::error::{Error, Result};

/// A dense matrix of n observations by d coordinates, stored row-major.
///
/// Every entry is finite; this is checked on construction and all other code
/// relies on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DataMatrix {
    /// Builds a matrix from a flat row-major buffer.
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyData);
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} does not match {rows}x{cols}",
                values.len()
            )));
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self { values, rows, cols })
    }

    /// Builds a matrix from row slices, all of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let d = rows[0].len();
        let mut values = Vec::with_capacity(n * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, n, d)
    }

    /// A single observation as a 1-row matrix.
    pub fn from_row(row: &[f64]) -> Result<Self> {
        Self::new(row.to_vec(), 1, row.len())
    }

    /// One-dimensional data as an n x 1 matrix.
    pub fn from_column(col: &[f64]) -> Result<Self> {
        Self::new(col.to_vec(), col.len(), 1)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &j in cols {
                if j >= self.cols {
                    return Err(Error::InvalidParameter(format!(
                        "column index {j} out of range (d = {})",
                        self.cols
                    )));
                }
                values.push(self.get(i, j));
            }
        }
        Self::new(values, self.rows, cols.len())
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            if i >= self.rows {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range (n = {})",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, rows.len(), self.cols)
    }

    /// Per-coordinate mean.
    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                m[j] += v;
            }
        }
        for v in &mut m {
            *v /= self.rows as f64;
        }
        m
    }

    /// Per-coordinate sample standard deviation (divisor n - 1).
    ///
    /// Errors if n < 2 or any coordinate has zero variance.
    pub fn column_sds(&self) -> Result<Vec<f64>> {
        if self.rows < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: self.rows,
            });
        }
        let means = self.column_means();
        let mut ss = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                let dev = v - means[j];
                ss[j] += dev * dev;
            }
        }
        let mut sds = Vec::with_capacity(self.cols);
        for (j, s) in ss.iter().enumerate() {
            let sd = (s / (self.rows as f64 - 1.0)).sqrt();
            if sd == 0.0 {
                return Err(Error::DegenerateCoordinate { index: j });
            }
            sds.push(sd);
        }
        Ok(sds)
    }

    /// Divides each column by the given scale (used to normalise coordinates
    /// before geometric constructions).
    pub fn scale_columns(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: scale.len(),
            });
        }
        let mut values = self.values.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                values[i * self.cols + j] /= scale[j];
            }
        }
        Self::new(values, self.rows, self.cols)
    }
}
