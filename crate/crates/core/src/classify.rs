//! Stage-2 allocation of unallocated points to cluster cores via density
//! log-ratios, block-sequential with re-estimation after every block.

use crate::error::{Error, Result};
use crate::kde::{kepdf, BandwidthSpec, KernelKind};
use crate::levelset::CoreAssignment;
use crate::matrix::DataMatrix;

#[derive(Debug, Clone)]
pub struct ClassificationConfig {
    /// Number of allocation blocks; 0 means skip classification entirely.
    pub n_stage: usize,
    /// Order allocations by standard-error-weighted log-ratios.
    pub se: bool,
    /// Reuse the stage-1 bandwidths instead of cluster-specific ones.
    pub hcores: bool,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            n_stage: 5,
            se: true,
            hcores: false,
        }
    }
}

/// One allocation event, kept for the stage-trace export.
#[derive(Debug, Clone)]
pub struct AllocationRecord {
    pub index: usize,
    pub stage: usize,
    pub label: usize,
    pub score: f64,
}

/// Per-stage label snapshots plus the individual allocation events.
#[derive(Debug, Clone, Default)]
pub struct StageTrace {
    pub stages: Vec<Vec<Option<usize>>>,
    pub records: Vec<AllocationRecord>,
}

/// Winning label (1-based) and log-ratio against the runner-up.
///
/// Ties go to the smallest label; a zero runner-up density yields +inf.
pub fn log_ratio(core_densities: &[f64]) -> (usize, f64) {
    assert!(core_densities.len() >= 2);
    let mut best = 0usize;
    for (m, f) in core_densities.iter().enumerate() {
        if *f > core_densities[best] {
            best = m;
        }
    }
    let mut second = f64::NEG_INFINITY;
    for (m, f) in core_densities.iter().enumerate() {
        if m != best && *f > second {
            second = *f;
        }
    }
    let r = if second == 0.0 {
        f64::INFINITY
    } else {
        (core_densities[best] / second).ln()
    };
    (best + 1, r)
}

/// Log-ratio weighted by the approximate standard error of the two log
/// densities.
///
/// Var(log f̂_m(x0)) ≈ R_K^d / (n_m Π_j h_mj f̂_m(x0)) with R_K = ∫K²; the
/// runner-up index is held fixed and the score is r / sqrt(Var_m* + Var_m').
pub fn se_weighted_ratio(
    core_densities: &[f64],
    core_sizes: &[usize],
    bandwidth_products: &[f64],
    kernel: KernelKind,
    dim: usize,
) -> (usize, f64) {
    let (label, r) = log_ratio(core_densities);
    let best = label - 1;
    let mut second = None;
    for (m, f) in core_densities.iter().enumerate() {
        if m != best && second.map_or(true, |s: usize| *f > core_densities[s]) {
            second = Some(m);
        }
    }
    let second = second.expect("at least two classes");
    let f1 = core_densities[best];
    let f2 = core_densities[second];
    if f1 == 0.0 || f2 == 0.0 {
        return (label, if r.is_infinite() { f64::INFINITY } else { r });
    }
    let rk = kernel.squared_l2_norm().powi(dim as i32);
    let var1 = rk / (core_sizes[best] as f64 * bandwidth_products[best] * f1);
    let var2 = rk / (core_sizes[second] as f64 * bandwidth_products[second] * f2);
    (label, r / (var1 + var2).sqrt())
}

/// Density-estimation inputs that stage 2 inherits from the clustering run.
#[derive(Debug, Clone)]
pub struct ClassifyParams<'a> {
    pub kernel: KernelKind,
    /// Bandwidth shrinkage applied to the cluster-specific bandwidths.
    pub hmult: f64,
    /// Bandwidths used to form the cluster cores (the hcores choice, and
    /// the fallback when a cluster-specific bandwidth is unavailable).
    pub stage1_bw: &'a BandwidthSpec,
}

struct GroupModel {
    rows: Vec<usize>,
    bw: BandwidthSpec,
    bw_product: f64,
}

/// Allocates every unallocated point to a cluster over `cfg.n_stage`
/// blocks, re-estimating the per-cluster densities before each block.
///
/// Cluster-specific bandwidths use the full-sample coordinate spread with
/// the normal-reference factor evaluated at the cluster's current size, so
/// small cores get wider kernels and the M density models stay on a common
/// scale.
pub fn classify(
    data: &DataMatrix,
    cores: &CoreAssignment,
    cfg: &ClassificationConfig,
    params: &ClassifyParams,
) -> Result<(Vec<usize>, StageTrace)> {
    if cfg.n_stage == 0 {
        return Err(Error::InvalidParameter(
            "classification skipped (n_stage = 0); caller should keep the cores".into(),
        ));
    }
    let n = data.nrows();
    let d = data.ncols();
    if cores.labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cores.labels.len(),
        });
    }
    let m_clusters = cores.n_clusters;
    let mut labels: Vec<Option<usize>> = cores.labels.clone();
    let mut trace = StageTrace::default();

    if m_clusters == 1 {
        for (i, l) in labels.iter_mut().enumerate() {
            if l.is_none() {
                *l = Some(1);
                trace.records.push(AllocationRecord {
                    index: i,
                    stage: 1,
                    label: 1,
                    score: f64::INFINITY,
                });
            }
        }
        trace.stages.push(labels.clone());
        return Ok((labels.into_iter().map(|l| l.unwrap()).collect(), trace));
    }

    let unallocated0 = labels.iter().filter(|l| l.is_none()).count();
    if unallocated0 == 0 {
        return Ok((labels.into_iter().map(|l| l.unwrap()).collect(), trace));
    }
    let block = unallocated0.div_ceil(cfg.n_stage);
    let global_sds = data.column_sds()?;

    for stage in 1..=cfg.n_stage {
        let pending: Vec<usize> = (0..n).filter(|&i| labels[i].is_none()).collect();
        if pending.is_empty() {
            break;
        }

        // freeze the M density models for this block
        let mut models = Vec::with_capacity(m_clusters);
        for m in 1..=m_clusters {
            let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(m)).collect();
            let bw = if cfg.hcores {
                restrict_bandwidth(params.stage1_bw, &rows)
            } else {
                let nm = rows.len() as f64;
                let factor = (4.0 / ((d as f64 + 2.0) * nm)).powf(1.0 / (d as f64 + 4.0));
                BandwidthSpec::Fixed(
                    global_sds
                        .iter()
                        .map(|s| s * factor * params.hmult)
                        .collect(),
                )
            };
            let bw_product = bandwidth_product(&bw);
            models.push(GroupModel {
                rows,
                bw,
                bw_product,
            });
        }

        let eval = data.select_rows(&pending)?;
        let mut densities = vec![vec![0.0; m_clusters]; pending.len()];
        for (m, model) in models.iter().enumerate() {
            let group = data.select_rows(&model.rows)?;
            let est = kepdf(&eval, &group, params.kernel, &model.bw)?;
            for (row, v) in est.values.iter().enumerate() {
                densities[row][m] = *v;
            }
        }

        let sizes: Vec<usize> = models.iter().map(|g| g.rows.len()).collect();
        let products: Vec<f64> = models.iter().map(|g| g.bw_product).collect();
        let mut scored: Vec<(usize, usize, f64)> = pending
            .iter()
            .enumerate()
            .map(|(row, &i)| {
                let f = &densities[row];
                if f.iter().all(|v| *v == 0.0) {
                    // no kernel mass anywhere: defer, resolved below
                    return (i, 0, f64::NEG_INFINITY);
                }
                let (label, score) = if cfg.se {
                    se_weighted_ratio(f, &sizes, &products, params.kernel, d)
                } else {
                    log_ratio(f)
                };
                (i, label, score)
            })
            .collect();
        scored.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));

        let take = if stage == cfg.n_stage {
            scored.len()
        } else {
            block.min(scored.len())
        };
        for &(i, label, score) in scored.iter().take(take) {
            let label = if label == 0 {
                nearest_core_label(data, i, &models)
            } else {
                label
            };
            labels[i] = Some(label);
            trace.records.push(AllocationRecord {
                index: i,
                stage,
                label,
                score,
            });
        }
        trace.stages.push(labels.clone());
    }

    let final_labels: Vec<usize> = labels.into_iter().map(|l| l.unwrap()).collect();
    Ok((final_labels, trace))
}

/// Nearest core point in Euclidean distance; only reachable when every
/// cluster density underflows to zero at the query point.
fn nearest_core_label(data: &DataMatrix, i: usize, models: &[GroupModel]) -> usize {
    let x = data.row(i);
    let mut best = (f64::INFINITY, 1usize);
    for (m, model) in models.iter().enumerate() {
        for &r in &model.rows {
            let dist: f64 = data
                .row(r)
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist < best.0 {
                best = (dist, m + 1);
            }
        }
    }
    best.1
}

fn restrict_bandwidth(bw: &BandwidthSpec, rows: &[usize]) -> BandwidthSpec {
    match bw {
        BandwidthSpec::Fixed(h) => BandwidthSpec::Fixed(h.clone()),
        BandwidthSpec::Adaptive(hx) => {
            let sel = hx.select_rows(rows).expect("row subset");
            BandwidthSpec::Adaptive(sel)
        }
    }
}

/// Π_j h_j; for adaptive bandwidths the per-coordinate geometric mean over
/// the group's rows stands in for the shared vector.
fn bandwidth_product(bw: &BandwidthSpec) -> f64 {
    match bw {
        BandwidthSpec::Fixed(h) => h.iter().product(),
        BandwidthSpec::Adaptive(hx) => {
            let n = hx.nrows() as f64;
            let mut prod = 1.0;
            for j in 0..hx.ncols() {
                let log_mean: f64 =
                    (0..hx.nrows()).map(|i| hx.get(i, j).ln()).sum::<f64>() / n;
                prod *= log_mean.exp();
            }
            prod
        }
    }
}
