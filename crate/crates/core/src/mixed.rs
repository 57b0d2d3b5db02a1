//! Mixed-type preprocessing: Gower dissimilarity and classical
//! multidimensional scaling, turning arbitrary tables into Euclidean
//! coordinates for the clustering pipeline.

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// How a column enters the Gower coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Numeric,
    /// Ordered categorical; values are rank-transformed before the
    /// range-scaled difference.
    OrderedRatio,
    SymmetricBinary,
    AsymmetricBinary,
    Nominal,
}

/// A column of possibly-missing values with its Gower treatment.
#[derive(Debug, Clone)]
pub struct MixedColumn {
    pub ctype: ColumnType,
    pub values: Vec<Option<f64>>,
}

/// n rows of mixed-type data.
#[derive(Debug, Clone)]
pub struct MixedTable {
    pub columns: Vec<MixedColumn>,
    pub n: usize,
}

impl MixedTable {
    pub fn new(columns: Vec<MixedColumn>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = columns[0].values.len();
        for (j, c) in columns.iter().enumerate() {
            if c.values.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.values.len(),
                });
            }
            if matches!(
                c.ctype,
                ColumnType::SymmetricBinary | ColumnType::AsymmetricBinary
            ) {
                for v in c.values.iter().flatten() {
                    if *v != 0.0 && *v != 1.0 {
                        return Err(Error::InvalidParameter(format!(
                            "binary column {j} holds non-binary value {v}"
                        )));
                    }
                }
            }
        }
        Ok(Self { columns, n })
    }
}

/// Symmetric n x n dissimilarities with zero diagonal.
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn from_values(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidParameter(
                "dissimilarity buffer does not match n x n".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(
                        "dissimilarities must be finite and non-negative".into(),
                    ));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "dissimilarity matrix must be symmetric".into(),
                    ));
                }
            }
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(
                    "dissimilarity diagonal must be zero".into(),
                ));
            }
        }
        Ok(Self { n, values })
    }

    /// Exact Euclidean distances of a coordinate matrix.
    pub fn from_euclidean(coords: &DataMatrix) -> Self {
        let n = coords.nrows();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d: f64 = coords
                    .row(i)
                    .iter()
                    .zip(coords.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Gower dissimilarity with pairwise variable exclusion.
///
/// Numeric and ordered columns contribute range-scaled absolute
/// differences (ordered columns after rank transformation); nominal and
/// symmetric-binary columns contribute 0/1 mismatches; asymmetric-binary
/// columns are excluded for 0/0 pairs. Missing cells always exclude the
/// variable for that pair.
pub fn gower(table: &MixedTable) -> Result<DissimilarityMatrix> {
    let n = table.n;
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }

    // precompute per-column transforms: effective value and range
    struct Prepared {
        ctype: ColumnType,
        values: Vec<Option<f64>>,
        range: f64,
    }
    let mut prepared = Vec::with_capacity(table.columns.len());
    for col in &table.columns {
        let (values, range) = match col.ctype {
            ColumnType::Numeric => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for v in col.values.iter().flatten() {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
                (col.values.clone(), hi - lo)
            }
            ColumnType::OrderedRatio => {
                // dense ranks of the observed levels
                let mut levels: Vec<f64> = col.values.iter().flatten().copied().collect();
                levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
                levels.dedup();
                let rank_of = |v: f64| -> f64 {
                    levels.partition_point(|l| *l < v) as f64 + 1.0
                };
                let ranked: Vec<Option<f64>> =
                    col.values.iter().map(|v| v.map(rank_of)).collect();
                let range = if levels.len() > 1 {
                    levels.len() as f64 - 1.0
                } else {
                    0.0
                };
                (ranked, range)
            }
            _ => (col.values.clone(), 1.0),
        };
        prepared.push(Prepared {
            ctype: col.ctype,
            values,
            range,
        });
    }

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut num = 0.0;
            let mut weight = 0.0;
            for col in &prepared {
                let (a, b) = match (col.values[i], col.values[j]) {
                    (Some(a), Some(b)) => (a, b),
                    _ => continue, // missing: variable excluded for this pair
                };
                match col.ctype {
                    ColumnType::Numeric | ColumnType::OrderedRatio => {
                        if col.range > 0.0 {
                            num += (a - b).abs() / col.range;
                            weight += 1.0;
                        }
                        // zero-range columns carry no information
                    }
                    ColumnType::Nominal | ColumnType::SymmetricBinary => {
                        num += if a == b { 0.0 } else { 1.0 };
                        weight += 1.0;
                    }
                    ColumnType::AsymmetricBinary => {
                        if a == 0.0 && b == 0.0 {
                            continue; // joint absence is excluded
                        }
                        num += if a == 1.0 && b == 1.0 { 0.0 } else { 1.0 };
                        weight += 1.0;
                    }
                }
            }
            if weight == 0.0 {
                return Err(Error::UndefinedDissimilarity { i, j });
            }
            let d = num / weight;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DissimilarityMatrix::from_values(values, n)
}

/// Classical multidimensional scaling of a dissimilarity matrix into k
/// Euclidean coordinates.
///
/// Double-centres the squared dissimilarities, eigendecomposes with a
/// cyclic Jacobi solver, and scales the top-k eigenvectors by the square
/// roots of their eigenvalues. Requesting more coordinates than there are
/// positive eigenvalues is an error. Each output column is signed so its
/// largest-magnitude entry is positive.
pub fn classical_mds(dis: &DissimilarityMatrix, k: usize) -> Result<DataMatrix> {
    let n = dis.n;
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={} for n = {n}, got {k}",
            n - 1
        )));
    }
    // B = -1/2 J D^2 J
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = dis.get(i, j);
            b[i * n + j] = d * d;
        }
    }
    let row_means: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| b[i * n + j]).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (b[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&mut b, n);
    // sorted descending by construction of jacobi_eigen's output

    let positive = eigenvalues.iter().take_while(|v| **v > 1e-9).count();
    if k > positive {
        return Err(Error::Eigen(format!(
            "only {positive} positive eigenvalues; reduce k from {k}"
        )));
    }

    let mut coords = vec![0.0; n * k];
    for c in 0..k {
        let scale = eigenvalues[c].sqrt();
        // sign convention: largest-magnitude entry positive
        let mut max_idx = 0;
        for i in 0..n {
            if eigenvectors[i * n + c].abs() > eigenvectors[max_idx * n + c].abs() {
                max_idx = i;
            }
        }
        let sign = if eigenvectors[max_idx * n + c] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..n {
            coords[i * k + c] = sign * eigenvectors[i * n + c] * scale;
        }
    }
    DataMatrix::new(coords, n, k)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (destroys the
/// input). Returns eigenvalues sorted descending with matching eigenvector
/// columns.
fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    const TOL: f64 = 1e-12;
    const MAX_SWEEPS: usize = 64;
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = (0..n)
        .map(|i| a[i * n + i].abs())
        .fold(1e-300, f64::max);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= TOL * scale * 1e-3 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].partial_cmp(&a[x * n + x]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (c, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + c] = v[i * n + src];
        }
    }
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(vals: &[f64]) -> MixedColumn {
        MixedColumn {
            ctype: ColumnType::Numeric,
            values: vals.iter().map(|v| Some(*v)).collect(),
        }
    }

    #[test]
    fn gower_identical_rows_zero() {
        let t = MixedTable::new(vec![numeric(&[1.0, 1.0]), numeric(&[7.0, 7.0])]);
        // both columns have zero range, so no variable is usable
        assert!(matches!(
            gower(&t.unwrap()),
            Err(Error::UndefinedDissimilarity { i: 0, j: 1 })
        ));
        let t2 = MixedTable::new(vec![numeric(&[1.0, 1.0, 2.0])]).unwrap();
        let d = gower(&t2).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        assert_eq!(d.get(0, 2), 1.0);
    }

    #[test]
    fn gower_asymmetric_binary_rules() {
        let col = MixedColumn {
            ctype: ColumnType::AsymmetricBinary,
            values: vec![Some(1.0), Some(0.0)],
        };
        let t = MixedTable::new(vec![col]).unwrap();
        let d = gower(&t).unwrap();
        assert_eq!(d.get(0, 1), 1.0);

        let col00 = MixedColumn {
            ctype: ColumnType::AsymmetricBinary,
            values: vec![Some(0.0), Some(0.0)],
        };
        let t = MixedTable::new(vec![col00]).unwrap();
        assert!(matches!(
            gower(&t),
            Err(Error::UndefinedDissimilarity { i: 0, j: 1 })
        ));
    }

    #[test]
    fn gower_hand_computed_three_rows() {
        // numeric {0, 5, 10} (range 10) + nominal {a, a, b}
        let num = numeric(&[0.0, 5.0, 10.0]);
        let nom = MixedColumn {
            ctype: ColumnType::Nominal,
            values: vec![Some(1.0), Some(1.0), Some(2.0)],
        };
        let t = MixedTable::new(vec![num, nom]).unwrap();
        let d = gower(&t).unwrap();
        assert!((d.get(0, 1) - (0.5 + 0.0) / 2.0).abs() < 1e-15);
        assert!((d.get(0, 2) - (1.0 + 1.0) / 2.0).abs() < 1e-15);
        assert!((d.get(1, 2) - (0.5 + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gower_missing_excludes_variable() {
        let num = MixedColumn {
            ctype: ColumnType::Numeric,
            values: vec![Some(0.0), None, Some(10.0)],
        };
        let nom = MixedColumn {
            ctype: ColumnType::Nominal,
            values: vec![Some(1.0), Some(1.0), Some(2.0)],
        };
        let t = MixedTable::new(vec![num, nom]).unwrap();
        let d = gower(&t).unwrap();
        assert_eq!(d.get(0, 1), 0.0); // only the nominal column counts
        assert_eq!(d.get(1, 2), 1.0);
    }

    #[test]
    fn gower_values_in_unit_interval_and_symmetric() {
        let t = MixedTable::new(vec![
            numeric(&[0.3, 1.8, 0.9, 2.4]),
            MixedColumn {
                ctype: ColumnType::OrderedRatio,
                values: vec![Some(1.0), Some(3.0), Some(2.0), Some(3.0)],
            },
            MixedColumn {
                ctype: ColumnType::SymmetricBinary,
                values: vec![Some(0.0), Some(1.0), Some(1.0), Some(0.0)],
            },
        ])
        .unwrap();
        let d = gower(&t).unwrap();
        for i in 0..4 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..4 {
                assert!(d.get(i, j) >= 0.0 && d.get(i, j) <= 1.0);
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn mds_two_points() {
        let d = DissimilarityMatrix::from_values(vec![0.0, 2.0, 2.0, 0.0], 2).unwrap();
        let coords = classical_mds(&d, 1).unwrap();
        let a = coords.get(0, 0);
        let b = coords.get(1, 0);
        assert!((a + b).abs() < 1e-9, "centred");
        assert!(((a - b).abs() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mds_recovers_collinear_configuration() {
        // points at 0, 1, 3 on a line
        let pts = DataMatrix::from_column(&[0.0, 1.0, 3.0]).unwrap();
        let d = DissimilarityMatrix::from_euclidean(&pts);
        let coords = classical_mds(&d, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let rec = (coords.get(i, 0) - coords.get(j, 0)).abs();
                assert!((rec - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mds_reconstructs_planar_distances() {
        let pts = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![2.0, 0.5],
            vec![-1.0, 1.5],
            vec![0.5, -2.0],
            vec![3.0, 2.0],
        ])
        .unwrap();
        let d = DissimilarityMatrix::from_euclidean(&pts);
        let coords = classical_mds(&d, 2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let rec: f64 = coords
                    .row(i)
                    .iter()
                    .zip(coords.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!((rec - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mds_rejects_excessive_k() {
        // 3 collinear points have one positive eigenvalue
        let pts = DataMatrix::from_column(&[0.0, 1.0, 3.0]).unwrap();
        let d = DissimilarityMatrix::from_euclidean(&pts);
        assert!(classical_mds(&d, 2).is_err());
    }

    #[test]
    fn mds_sign_convention_is_deterministic() {
        let pts = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![2.0, -0.1],
            vec![3.5, 0.3],
        ])
        .unwrap();
        let d = DissimilarityMatrix::from_euclidean(&pts);
        let c1 = classical_mds(&d, 2).unwrap();
        let c2 = classical_mds(&d, 2).unwrap();
        assert_eq!(c1.values(), c2.values());
        for c in 0..2 {
            let col: Vec<f64> = (0..4).map(|i| c1.get(i, c)).collect();
            let max = col
                .iter()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { *v } else { acc });
            assert!(max > 0.0);
        }
    }
}
