//! Density-based silhouette and adjusted Rand index.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kde::{h_norm, kepdf, BandwidthSpec, KernelKind};
use crate::matrix::DataMatrix;

/// Per-point silhouette values on the [-1, 1] scale.
#[derive(Debug, Clone)]
pub struct DbsResult {
    pub values: Vec<f64>,
    pub labels: Vec<usize>,
    pub priors: Vec<f64>,
    /// True when caller-supplied priors did not sum to one and were
    /// rescaled.
    pub priors_renormalized: bool,
}

/// Density-based silhouette of a labelled data set.
///
/// τ̂_m(x) = π_m f̂_m(x) / Σ_k π_k f̂_k(x) with per-class density estimates;
/// each point's raw value is log(τ̂_{m0}/τ̂_{m1}) for its own class m0
/// against the best alternative m1, and the result is normalized by the
/// largest finite |raw|. Default priors are proportional to class
/// cardinalities.
pub fn dbs(
    data: &DataMatrix,
    labels: &[usize],
    priors: Option<&[f64]>,
    kernel: KernelKind,
    hmult: f64,
) -> Result<DbsResult> {
    let n = data.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let m_classes = *labels.iter().max().unwrap_or(&0);
    if m_classes < 2 {
        return Err(Error::InvalidParameter(
            "density-based silhouette needs at least 2 classes".into(),
        ));
    }
    let mut counts = vec![0usize; m_classes];
    for &l in labels {
        if l == 0 || l > m_classes {
            return Err(Error::InvalidParameter(format!(
                "label {l} outside 1..={m_classes}"
            )));
        }
        counts[l - 1] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidParameter(
            "every class must be non-empty".into(),
        ));
    }

    let mut priors_renormalized = false;
    let priors: Vec<f64> = match priors {
        Some(p) => {
            if p.len() != m_classes {
                return Err(Error::DimensionMismatch {
                    expected: m_classes,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidParameter(
                    "priors must be strictly positive".into(),
                ));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                priors_renormalized = true;
            }
            p.iter().map(|v| v / sum).collect()
        }
        None => {
            let total = n as f64;
            counts.iter().map(|&c| c as f64 / total).collect()
        }
    };

    // per-class density models with cluster-specific normal-reference
    // bandwidths; classes too small or degenerate fall back to the global
    // bandwidth
    let global_h = h_norm(data)?;
    let mut class_density = vec![vec![0.0; m_classes]; n];
    for m in 1..=m_classes {
        let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == m).collect();
        let group = data.select_rows(&rows)?;
        let h = match h_norm(&group) {
            Ok(h) => h,
            Err(_) => global_h.clone(),
        };
        let bw = BandwidthSpec::Fixed(h.iter().map(|v| v * hmult).collect());
        let est = kepdf(data, &group, kernel, &bw)?;
        for (i, v) in est.values.iter().enumerate() {
            class_density[i][m - 1] = *v;
        }
    }

    let mut raw = vec![0.0f64; n];
    for i in 0..n {
        let f = &class_density[i];
        let total: f64 = f
            .iter()
            .zip(&priors)
            .map(|(v, p)| v * p)
            .sum();
        if total == 0.0 {
            raw[i] = 0.0;
            continue;
        }
        let tau: Vec<f64> = f
            .iter()
            .zip(&priors)
            .map(|(v, p)| v * p / total)
            .collect();
        let m0 = labels[i] - 1;
        let mut m1 = None;
        for (m, t) in tau.iter().enumerate() {
            if m != m0 && m1.map_or(true, |b: usize| *t > tau[b]) {
                m1 = Some(m);
            }
        }
        let m1 = m1.unwrap();
        raw[i] = if tau[m1] == 0.0 {
            f64::INFINITY
        } else if tau[m0] == 0.0 {
            f64::NEG_INFINITY
        } else {
            (tau[m0] / tau[m1]).ln()
        };
    }

    let max_finite = raw
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let values: Vec<f64> = raw
        .iter()
        .map(|v| {
            if v.is_infinite() {
                v.signum()
            } else if max_finite == 0.0 {
                0.0
            } else {
                v / max_finite
            }
        })
        .collect();

    Ok(DbsResult {
        values,
        labels: labels.to_vec(),
        priors,
        priors_renormalized,
    })
}

/// Adjusted Rand index between two partitions (Hubert-Arabie form).
pub fn adj_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let comb2 = |x: usize| -> f64 { x as f64 * (x as f64 - 1.0) / 2.0 };

    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let sum_cells: f64 = cells.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let denom = 0.5 * (sum_rows + sum_cols) - expected;
    if denom.abs() < 1e-12 {
        // both all-singletons or both one-class: identical partitions score 1
        return Ok(if partitions_equal(a, b) { 1.0 } else { 0.0 });
    }
    Ok((sum_cells - expected) / denom)
}

/// Whether two label vectors induce the same partition (up to relabeling).
fn partitions_equal(a: &[usize], b: &[usize]) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y {
            return false;
        }
        if *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_identical_partitions() {
        let a = vec![1, 1, 2, 2, 3];
        assert_eq!(adj_rand_index(&a, &a).unwrap(), 1.0);
        let relabeled = vec![7, 7, 1, 1, 4];
        assert_eq!(adj_rand_index(&a, &relabeled).unwrap(), 1.0);
    }

    #[test]
    fn ari_degenerate_rule() {
        // one class vs all singletons: value 0
        let a = vec![1, 1, 1, 1];
        let b = vec![1, 2, 3, 4];
        assert_eq!(adj_rand_index(&a, &b).unwrap(), 0.0);
        // both all singletons: identical partitions, value 1
        assert_eq!(adj_rand_index(&b, &b).unwrap(), 1.0);
        // both one class: identical
        assert_eq!(adj_rand_index(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ari_hand_computed_two_by_two() {
        // a = (1,1,2,2), b = (1,2,1,2): all cells 1, sums 2+2 each side
        // sum_cells = 0, rows = cols = 2, E = 4/6, denom = 2 - 4/6
        let a = vec![1, 1, 2, 2];
        let b = vec![1, 2, 1, 2];
        let expect = (0.0 - 4.0 / 6.0) / (2.0 - 4.0 / 6.0);
        let got = adj_rand_index(&a, &b).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!(got <= 0.0);
    }

    #[test]
    fn ari_symmetry() {
        let a = vec![1, 2, 2, 3, 3, 3, 1];
        let b = vec![2, 2, 1, 1, 3, 3, 3];
        assert_eq!(
            adj_rand_index(&a, &b).unwrap(),
            adj_rand_index(&b, &a).unwrap()
        );
    }

    #[test]
    fn dbs_balanced_point_scores_zero() {
        // the two classes are exact mirror images, each holding one copy of
        // the midpoint, so at the midpoint tau1 = tau2 and dbs = 0
        let mut vals = vec![];
        for k in 0..10 {
            vals.push(-5.0 - 0.1 * k as f64);
            vals.push(5.0 + 0.1 * k as f64);
        }
        vals.push(0.0); // labelled 1
        vals.push(0.0); // labelled 2
        let data = DataMatrix::from_column(&vals).unwrap();
        let mut labels: Vec<usize> = (0..20).map(|k| if k % 2 == 0 { 1 } else { 2 }).collect();
        labels.push(1);
        labels.push(2);
        let r = dbs(
            &data,
            &labels,
            Some(&[0.5, 0.5]),
            KernelKind::Gaussian,
            1.0,
        )
        .unwrap();
        assert!(
            r.values[20].abs() < 1e-9 && r.values[21].abs() < 1e-9,
            "midpoint dbs = {}, {}",
            r.values[20],
            r.values[21]
        );
        // self-normalization
        let maxabs = r.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((maxabs - 1.0).abs() < 1e-12);
        assert!(r.values.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn dbs_rejects_single_class() {
        let data = DataMatrix::from_column(&[0.0, 1.0, 2.0]).unwrap();
        assert!(dbs(&data, &[1, 1, 1], None, KernelKind::Gaussian, 1.0).is_err());
    }

    #[test]
    fn dbs_renormalizes_priors() {
        let mut vals = vec![];
        for k in 0..8 {
            vals.push(k as f64 * 0.1);
            vals.push(6.0 + k as f64 * 0.1);
        }
        let data = DataMatrix::from_column(&vals).unwrap();
        let labels: Vec<usize> = (0..16).map(|k| if k % 2 == 0 { 1 } else { 2 }).collect();
        let r = dbs(&data, &labels, Some(&[2.0, 2.0]), KernelKind::Gaussian, 1.0).unwrap();
        assert!(r.priors_renormalized);
        assert!((r.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dbs_class_permutation_invariance() {
        let mut vals = vec![];
        for k in 0..12 {
            vals.push(k as f64 * 0.2);
            vals.push(8.0 + k as f64 * 0.2);
        }
        let data = DataMatrix::from_column(&vals).unwrap();
        let labels: Vec<usize> = (0..24).map(|k| if k % 2 == 0 { 1 } else { 2 }).collect();
        let swapped: Vec<usize> = labels.iter().map(|&l| 3 - l).collect();
        let r1 = dbs(&data, &labels, None, KernelKind::Gaussian, 0.75).unwrap();
        let r2 = dbs(&data, &swapped, None, KernelKind::Gaussian, 0.75).unwrap();
        for (a, b) in r1.values.iter().zip(&r2.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
