//! Product-kernel density estimation with fixed and adaptive bandwidths.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::matrix::DataMatrix;

/// Kernel function used in the product estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    /// Student's t density with exactly 7 degrees of freedom.
    StudentT7,
}

impl KernelKind {
    /// Normalizing constant of the t7 kernel, Γ(4) / (Γ(7/2) √(7π)).
    fn t7_constant() -> f64 {
        let ln_c = ln_gamma(4.0) - ln_gamma(3.5) - 0.5 * (7.0 * std::f64::consts::PI).ln();
        ln_c.exp()
    }

    /// Evaluates the univariate kernel at u.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => {
                (-(u * u) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            KernelKind::StudentT7 => {
                let b = 1.0 + u * u / 7.0;
                let b2 = b * b;
                *T7_CONST / (b2 * b2)
            }
        }
    }

    /// ∫ K(u)² du, used by the standard-error weighting of log density
    /// ratios.
    pub fn squared_l2_norm(self) -> f64 {
        match self {
            // ∫ φ² = 1 / (2 √π)
            KernelKind::Gaussian => 0.5 / std::f64::consts::PI.sqrt(),
            // c² √(7π) Γ(15/2) / Γ(8)
            KernelKind::StudentT7 => {
                let ln = 2.0 * (ln_gamma(4.0) - ln_gamma(3.5))
                    - 0.5 * (7.0 * std::f64::consts::PI).ln()
                    + ln_gamma(7.5)
                    - ln_gamma(8.0);
                ln.exp()
            }
        }
    }
}

static T7_CONST: std::sync::LazyLock<f64> = std::sync::LazyLock::new(KernelKind::t7_constant);

/// Smoothing specification: one bandwidth vector for all observations, or
/// one per observation.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthSpec {
    Fixed(Vec<f64>),
    Adaptive(DataMatrix),
}

impl BandwidthSpec {
    /// Checks positivity and dimensional consistency against the data.
    pub fn validate(&self, data: &DataMatrix) -> Result<()> {
        match self {
            BandwidthSpec::Fixed(h) => {
                if h.len() != data.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: data.ncols(),
                        got: h.len(),
                    });
                }
                for (j, v) in h.iter().enumerate() {
                    if !(*v > 0.0) || !v.is_finite() {
                        return Err(Error::NonPositiveBandwidth { index: j });
                    }
                }
            }
            BandwidthSpec::Adaptive(hx) => {
                if hx.ncols() != data.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: data.ncols(),
                        got: hx.ncols(),
                    });
                }
                if hx.nrows() != data.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: data.nrows(),
                        got: hx.nrows(),
                    });
                }
                for i in 0..hx.nrows() {
                    for (j, v) in hx.row(i).iter().enumerate() {
                        if !(*v > 0.0) {
                            return Err(Error::NonPositiveBandwidth { index: j });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Multiplies every bandwidth entry by a positive factor.
    pub fn scaled(&self, factor: f64) -> BandwidthSpec {
        match self {
            BandwidthSpec::Fixed(h) => {
                BandwidthSpec::Fixed(h.iter().map(|v| v * factor).collect())
            }
            BandwidthSpec::Adaptive(hx) => {
                let scaled: Vec<f64> = hx.values().iter().map(|v| v * factor).collect();
                BandwidthSpec::Adaptive(
                    DataMatrix::new(scaled, hx.nrows(), hx.ncols()).expect("scaled bandwidths"),
                )
            }
        }
    }
}

/// A density estimate evaluated at a set of points.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub eval_points: DataMatrix,
    pub values: Vec<f64>,
    pub kernel: KernelKind,
    pub bandwidth: BandwidthSpec,
}

/// Normal-reference bandwidth: h_j = s_j (4 / ((d+2) n))^(1/(d+4)).
///
/// s_j is the sample standard deviation (divisor n-1) of coordinate j.
pub fn h_norm(data: &DataMatrix) -> Result<Vec<f64>> {
    let n = data.nrows() as f64;
    let d = data.ncols() as f64;
    let factor = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
    let sds = data.column_sds()?;
    Ok(sds.into_iter().map(|s| s * factor).collect())
}

/// Adaptive bandwidths proportional to the inverse square root of a pilot
/// density estimate.
///
/// Row i is pilot_h · (f̃(x_i) / g)^(-1/2) where g is the geometric mean of
/// the pilot values. The pilot is always a fixed-bandwidth Gaussian
/// estimate.
pub fn hprop2f(data: &DataMatrix, pilot_h: Option<&[f64]>) -> Result<DataMatrix> {
    let pilot = match pilot_h {
        Some(h) => h.to_vec(),
        None => h_norm(data)?,
    };
    let spec = BandwidthSpec::Fixed(pilot.clone());
    spec.validate(data)?;
    let pilot_est = kepdf(data, data, KernelKind::Gaussian, &spec)?;
    let mut log_sum = 0.0;
    for (i, f) in pilot_est.values.iter().enumerate() {
        if *f <= 0.0 {
            return Err(Error::ZeroPilotDensity { index: i });
        }
        log_sum += f.ln();
    }
    let log_gmean = log_sum / data.nrows() as f64;
    let mut rows = Vec::with_capacity(data.nrows() * data.ncols());
    for f in &pilot_est.values {
        let lambda = (-0.5 * (f.ln() - log_gmean)).exp();
        for h in &pilot {
            rows.push(h * lambda);
        }
    }
    DataMatrix::new(rows, data.nrows(), data.ncols())
}

/// Evaluates the product-kernel estimator at each row of `eval`.
///
/// f̂(y) = (1/n) Σ_i Π_j K((y_j - x_ij)/h_ij) / h_ij, with the observation
/// sum taken in ascending index order so results do not depend on the
/// degree of parallelism.
pub fn kepdf(
    eval: &DataMatrix,
    data: &DataMatrix,
    kernel: KernelKind,
    bw: &BandwidthSpec,
) -> Result<DensityEstimate> {
    if eval.ncols() != data.ncols() {
        return Err(Error::DimensionMismatch {
            expected: data.ncols(),
            got: eval.ncols(),
        });
    }
    bw.validate(data)?;
    let n = data.nrows();
    let d = data.ncols();

    // Per-observation inverse bandwidth products, so the inner loop is a
    // plain multiply.
    let values: Vec<f64> = match bw {
        BandwidthSpec::Fixed(h) => {
            let inv_prod = 1.0 / h.iter().product::<f64>();
            (0..eval.nrows())
                .into_par_iter()
                .map(|m| {
                    let y = eval.row(m);
                    let mut sum = 0.0;
                    for i in 0..n {
                        let x = data.row(i);
                        let mut w = 1.0;
                        for j in 0..d {
                            w *= kernel.eval((y[j] - x[j]) / h[j]);
                        }
                        sum += w * inv_prod;
                    }
                    sum / n as f64
                })
                .collect()
        }
        BandwidthSpec::Adaptive(hx) => {
            let inv_prods: Vec<f64> = (0..n)
                .map(|i| 1.0 / hx.row(i).iter().product::<f64>())
                .collect();
            (0..eval.nrows())
                .into_par_iter()
                .map(|m| {
                    let y = eval.row(m);
                    let mut sum = 0.0;
                    for i in 0..n {
                        let x = data.row(i);
                        let hi = hx.row(i);
                        let mut w = 1.0;
                        for j in 0..d {
                            w *= kernel.eval((y[j] - x[j]) / hi[j]);
                        }
                        sum += w * inv_prods[i];
                    }
                    sum / n as f64
                })
                .collect()
        }
    };

    Ok(DensityEstimate {
        eval_points: eval.clone(),
        values,
        kernel,
        bandwidth: bw.clone(),
    })
}

/// Densities along the segment from `a` to `b` at `npts` equispaced points,
/// endpoints included.
pub fn eval_segment(
    a: &[f64],
    b: &[f64],
    npts: usize,
    data: &DataMatrix,
    kernel: KernelKind,
    bw: &BandwidthSpec,
) -> Result<Vec<f64>> {
    if npts < 2 {
        return Err(Error::InvalidParameter(
            "segment evaluation needs at least 2 points".into(),
        ));
    }
    if a.len() != data.ncols() || b.len() != data.ncols() {
        return Err(Error::DimensionMismatch {
            expected: data.ncols(),
            got: a.len().max(b.len()),
        });
    }
    let d = data.ncols();
    let mut pts = Vec::with_capacity(npts * d);
    for k in 0..npts {
        let t = k as f64 / (npts - 1) as f64;
        for j in 0..d {
            pts.push(a[j] + t * (b[j] - a[j]));
        }
    }
    let eval = DataMatrix::new(pts, npts, d)?;
    Ok(kepdf(&eval, data, kernel, bw)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn h_norm_two_point_line() {
        // d = 1, data {0, 2}: s = sqrt(2), h = sqrt(2) (4/6)^(1/5)
        let m = DataMatrix::from_column(&[0.0, 2.0]).unwrap();
        let h = h_norm(&m).unwrap();
        let expect = 2f64.sqrt() * (4.0f64 / 6.0).powf(0.2);
        assert_close(h[0], expect, 1e-15);
    }

    #[test]
    fn h_norm_matches_direct_formula() {
        // pseudo-random standard-normal-ish sample; only the formula matters
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut vals = Vec::new();
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u1 = ((state >> 11) as f64) / (1u64 << 53) as f64;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u2 = ((state >> 11) as f64) / (1u64 << 53) as f64;
            vals.push((-2.0 * u1.max(1e-12).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos());
        }
        let m = DataMatrix::from_column(&vals).unwrap();
        let h = h_norm(&m).unwrap();
        let s = m.column_sds().unwrap()[0];
        assert_close(h[0], s * (4.0f64 / 3000.0).powf(0.2), 1e-14);
    }

    #[test]
    fn single_gaussian_kernel_peak() {
        let data = DataMatrix::from_row(&[0.0]).unwrap();
        let est = kepdf(
            &data.clone(),
            &data,
            KernelKind::Gaussian,
            &BandwidthSpec::Fixed(vec![1.0]),
        )
        .unwrap();
        assert_close(est.values[0], 0.3989422804014327, 1e-12);
    }

    #[test]
    fn t7_constant_from_gamma() {
        // c7 = Γ(4) / (Γ(7/2) √(7π)); Γ(4) = 6, Γ(7/2) = 15√π/8
        let direct = 6.0 / ((15.0 * std::f64::consts::PI.sqrt() / 8.0)
            * (7.0 * std::f64::consts::PI).sqrt());
        assert_close(KernelKind::t7_constant(), direct, 1e-14);
    }

    #[test]
    fn kernels_integrate_to_one() {
        // Simpson quadrature over [-60, 60]
        for kernel in [KernelKind::Gaussian, KernelKind::StudentT7] {
            let m = 40000;
            let (a, b) = (-60.0, 60.0);
            let hstep = (b - a) / m as f64;
            let mut s = kernel.eval(a) + kernel.eval(b);
            for k in 1..m {
                let x = a + k as f64 * hstep;
                s += kernel.eval(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = s * hstep / 3.0;
            assert_close(integral, 1.0, 1e-6);
        }
    }

    #[test]
    fn squared_norms_match_quadrature() {
        for kernel in [KernelKind::Gaussian, KernelKind::StudentT7] {
            let m = 40000;
            let (a, b) = (-60.0, 60.0);
            let hstep = (b - a) / m as f64;
            let sq = |x: f64| {
                let v = kernel.eval(x);
                v * v
            };
            let mut s = sq(a) + sq(b);
            for k in 1..m {
                let x = a + k as f64 * hstep;
                s += sq(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = s * hstep / 3.0;
            assert_close(kernel.squared_l2_norm(), integral, 1e-9);
        }
    }

    #[test]
    fn normalization_in_two_dimensions() {
        // single observation, both kernels: the estimate integrates to ~1
        let data = DataMatrix::from_row(&[0.3, -0.7]).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.8, 1.3]);
        for kernel in [KernelKind::Gaussian, KernelKind::StudentT7] {
            let m = 220;
            let lim = 40.0;
            let step = 2.0 * lim / m as f64;
            let mut pts = Vec::new();
            for i in 0..=m {
                for j in 0..=m {
                    pts.push(vec![
                        0.3 - lim + i as f64 * step,
                        -0.7 - lim + j as f64 * step,
                    ]);
                }
            }
            let eval = DataMatrix::from_rows(&pts).unwrap();
            let est = kepdf(&eval, &data, kernel, &bw).unwrap();
            let integral: f64 = est.values.iter().sum::<f64>() * step * step;
            assert_close(integral, 1.0, 1e-4);
        }
    }

    #[test]
    fn translation_equivariance_is_exact() {
        // coordinates on a 2^-6 lattice so the shifted sums stay exact
        let data = DataMatrix::from_rows(&[
            vec![0.125, 2.0],
            vec![1.40625, -0.3125],
            vec![2.25, 0.890625],
        ])
        .unwrap();
        let eval = DataMatrix::from_rows(&[vec![0.5, 0.5], vec![-1.0, 3.0]]).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.7, 0.9]);
        let base = kepdf(&eval, &data, KernelKind::Gaussian, &bw).unwrap();
        let c = [512.0, -128.0];
        let shift = |m: &DataMatrix| {
            let vals: Vec<f64> = (0..m.nrows())
                .flat_map(|i| {
                    m.row(i)
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v + c[j])
                        .collect::<Vec<_>>()
                })
                .collect();
            DataMatrix::new(vals, m.nrows(), m.ncols()).unwrap()
        };
        let shifted = kepdf(&shift(&eval), &shift(&data), KernelKind::Gaussian, &bw).unwrap();
        assert_eq!(base.values, shifted.values);
    }

    #[test]
    fn adaptive_reduces_to_fixed() {
        let data = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![-1.0, 0.5]])
            .unwrap();
        let h = vec![0.9, 1.7];
        let rows: Vec<f64> = (0..3).flat_map(|_| h.clone()).collect();
        let hx = DataMatrix::new(rows, 3, 2).unwrap();
        let fixed = kepdf(&data, &data, KernelKind::StudentT7, &BandwidthSpec::Fixed(h)).unwrap();
        let adapt =
            kepdf(&data, &data, KernelKind::StudentT7, &BandwidthSpec::Adaptive(hx)).unwrap();
        assert_eq!(fixed.values, adapt.values);
    }

    #[test]
    fn hprop2f_identical_pilot_densities_give_pilot_rows() {
        // two symmetric points: pilot density equal at both, lambda = 1
        let data = DataMatrix::from_column(&[-1.0, 1.0]).unwrap();
        let hx = hprop2f(&data, Some(&[1.0])).unwrap();
        assert_close(hx.get(0, 0), 1.0, 1e-12);
        assert_close(hx.get(1, 0), 1.0, 1e-12);
    }

    #[test]
    fn hprop2f_hand_computed_three_points() {
        // data {0, 1, 10}, pilot 1: hand-evaluate the pilot Gaussian sums
        let data = DataMatrix::from_column(&[0.0, 1.0, 10.0]).unwrap();
        let phi = |u: f64| (-(u * u) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = [
            (phi(0.0) + phi(1.0) + phi(10.0)) / 3.0,
            (phi(1.0) + phi(0.0) + phi(9.0)) / 3.0,
            (phi(10.0) + phi(9.0) + phi(0.0)) / 3.0,
        ];
        let g = (f.iter().map(|v| v.ln()).sum::<f64>() / 3.0).exp();
        let hx = hprop2f(&data, Some(&[1.0])).unwrap();
        for i in 0..3 {
            assert_close(hx.get(i, 0), (f[i] / g).powf(-0.5), 1e-12);
        }
    }

    #[test]
    fn hprop2f_widens_in_sparse_regions() {
        // two tight clusters and one isolated point in the valley
        let mut vals = vec![];
        for k in 0..20 {
            vals.push(k as f64 * 0.05);
            vals.push(10.0 + k as f64 * 0.05);
        }
        vals.push(5.0);
        let data = DataMatrix::from_column(&vals).unwrap();
        let pilot = h_norm(&data).unwrap();
        let hx = hprop2f(&data, Some(&pilot)).unwrap();
        let valley = hx.get(40, 0);
        let mode = hx.get(0, 0);
        assert!(valley > pilot[0], "valley point should widen");
        assert!(mode < valley, "mode point should be narrower than valley");
    }

    #[test]
    fn eval_segment_degenerate_and_two_point() {
        let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let bw = BandwidthSpec::Fixed(vec![1.0, 1.0]);
        let same = eval_segment(&[0.5, 0.5], &[0.5, 0.5], 7, &data, KernelKind::Gaussian, &bw)
            .unwrap();
        for v in &same {
            assert_eq!(*v, same[0]);
        }
        let two = eval_segment(&[0.0, 0.0], &[1.0, 1.0], 2, &data, KernelKind::Gaussian, &bw)
            .unwrap();
        let at = |p: &[f64]| {
            kepdf(
                &DataMatrix::from_row(p).unwrap(),
                &data,
                KernelKind::Gaussian,
                &bw,
            )
            .unwrap()
            .values[0]
        };
        assert_eq!(two[0], at(&[0.0, 0.0]));
        assert_eq!(two[1], at(&[1.0, 1.0]));
    }

    #[test]
    fn eval_segment_matches_pointwise_calls() {
        let vals: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 2.0).collect();
        let data = DataMatrix::from_column(&vals).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.5]);
        let seg = eval_segment(&[-3.0], &[3.0], 101, &data, KernelKind::Gaussian, &bw).unwrap();
        for (k, v) in seg.iter().enumerate() {
            let t = k as f64 / 100.0;
            let x = -3.0 + t * 6.0;
            let direct = kepdf(
                &DataMatrix::from_row(&[x]).unwrap(),
                &data,
                KernelKind::Gaussian,
                &bw,
            )
            .unwrap()
            .values[0];
            assert_close(*v, direct, 1e-12);
        }
    }
}
