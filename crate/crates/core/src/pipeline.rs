//! End-to-end clustering runs: density estimation, graph construction,
//! level-set scan, stage-2 classification and diagnostics.

use crate::classify::{classify, ClassificationConfig, ClassifyParams, StageTrace};
use crate::diagnostics::{dbs, DbsResult};
use crate::error::{Error, Result};
use crate::graph::{
    build_delaunay, build_pairs, build_unidimensional, graph_from_stored_amplitudes,
    ConnectionGraph, GraphType, PairAmplitudes,
};
use crate::kde::{h_norm, hprop2f, kepdf, BandwidthSpec, KernelKind};
use crate::levelset::{scan, ClusterTree, CoreAssignment, ModeFunction};
use crate::matrix::DataMatrix;

/// Requested connection backend; `Auto` resolves from the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphChoice {
    Auto,
    Unidimensional,
    Delaunay,
    Pairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthType {
    Fixed,
    Adaptive,
}

/// Pipeline settings. `hmult = None` resolves to 3/4 for d <= 6 and 1
/// otherwise.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graphtype: GraphChoice,
    pub lambda: f64,
    pub kernel: KernelKind,
    pub bwtype: BandwidthType,
    pub hmult: Option<f64>,
    pub n_grid: usize,
    pub grid_pairs: usize,
    pub n_stage: usize,
    pub se: bool,
    pub hcores: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graphtype: GraphChoice::Auto,
            lambda: 0.10,
            kernel: KernelKind::Gaussian,
            bwtype: BandwidthType::Fixed,
            hmult: None,
            n_grid: 40,
            grid_pairs: 10,
            n_stage: 5,
            se: true,
            hcores: false,
        }
    }
}

/// The settings a run actually used, with every default resolved.
#[derive(Debug, Clone)]
pub struct EffectiveConfig {
    pub graphtype: GraphType,
    pub lambda: f64,
    pub kernel: KernelKind,
    pub bwtype: BandwidthType,
    pub hmult: f64,
    pub n_grid: usize,
    pub grid_pairs: usize,
    pub n_stage: usize,
    pub se: bool,
    pub hcores: bool,
}

/// Everything a clustering run produces.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    /// Final labels; None only when classification was skipped
    /// (n_stage = 0).
    pub labels: Vec<Option<usize>>,
    pub cores: CoreAssignment,
    pub tree: ClusterTree,
    pub mode_function: ModeFunction,
    pub graph: ConnectionGraph,
    pub densities: Vec<f64>,
    pub bandwidth: BandwidthSpec,
    pub stage_trace: StageTrace,
    pub dbs: Option<DbsResult>,
    pub effective: EffectiveConfig,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if self.n_grid < 2 {
            return Err(Error::InvalidParameter("n_grid must be >= 2".into()));
        }
        if self.grid_pairs < 2 {
            return Err(Error::InvalidParameter("grid_pairs must be >= 2".into()));
        }
        if let Some(h) = self.hmult {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("hmult must be positive".into()));
            }
        }
        Ok(())
    }

    fn effective_hmult(&self, d: usize) -> f64 {
        self.hmult.unwrap_or(if d <= 6 { 0.75 } else { 1.0 })
    }

    fn resolve_graphtype(&self, d: usize) -> Result<GraphType> {
        match self.graphtype {
            GraphChoice::Auto => Ok(if d == 1 {
                GraphType::Unidimensional
            } else if d <= 3 {
                GraphType::Delaunay
            } else {
                GraphType::Pairs
            }),
            GraphChoice::Unidimensional => {
                if d != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "unidimensional backend requires d = 1, got d = {d}"
                    )));
                }
                Ok(GraphType::Unidimensional)
            }
            GraphChoice::Delaunay => {
                if d != 2 && d != 3 {
                    return Err(Error::InvalidParameter(format!(
                        "delaunay backend requires d in {{2, 3}}, got d = {d}"
                    )));
                }
                Ok(GraphType::Delaunay)
            }
            GraphChoice::Pairs => Ok(GraphType::Pairs),
        }
    }
}

/// Bandwidths for the main estimate per the configuration: fixed
/// normal-reference scaled by hmult, or adaptive with the shrinkage folded
/// into the pilot.
fn main_bandwidth(data: &DataMatrix, cfg: &RunConfig, hmult: f64) -> Result<BandwidthSpec> {
    let base = h_norm(data)?;
    let pilot: Vec<f64> = base.iter().map(|h| h * hmult).collect();
    match cfg.bwtype {
        BandwidthType::Fixed => Ok(BandwidthSpec::Fixed(pilot)),
        BandwidthType::Adaptive => Ok(BandwidthSpec::Adaptive(hprop2f(data, Some(&pilot))?)),
    }
}

fn build_graph(
    data: &DataMatrix,
    gtype: GraphType,
    cfg: &RunConfig,
    bw: &BandwidthSpec,
) -> Result<ConnectionGraph> {
    match gtype {
        GraphType::Unidimensional => build_unidimensional(data),
        GraphType::Delaunay => {
            // Delaunay connectivity is taken on coordinates standardized by
            // the per-coordinate sample spread, so no single scale dominates
            // the triangulation.
            let sds = data.column_sds()?;
            let scaled = data.scale_columns(&sds)?;
            build_delaunay(&scaled)
        }
        GraphType::Pairs => build_pairs(data, cfg.kernel, bw, cfg.grid_pairs, cfg.lambda),
    }
}

fn finish_run(
    data: &DataMatrix,
    cfg: &RunConfig,
    hmult: f64,
    bw: BandwidthSpec,
    graph: ConnectionGraph,
    densities: Vec<f64>,
) -> Result<RunArtifact> {
    let (mode_function, tree, cores) = scan(&graph, &densities, cfg.n_grid)?;

    let (labels, stage_trace) = if cfg.n_stage == 0 {
        (cores.labels.clone(), StageTrace::default())
    } else {
        let (finals, trace) = classify(
            data,
            &cores,
            &ClassificationConfig {
                n_stage: cfg.n_stage,
                se: cfg.se,
                hcores: cfg.hcores,
            },
            &ClassifyParams {
                kernel: cfg.kernel,
                hmult,
                stage1_bw: &bw,
            },
        )?;
        (finals.into_iter().map(Some).collect(), trace)
    };

    // diagnostics need a complete labelling and at least two clusters;
    // priors default to the core cardinalities
    let dbs_result = if cores.n_clusters >= 2 && labels.iter().all(|l| l.is_some()) {
        let flat: Vec<usize> = labels.iter().map(|l| l.unwrap()).collect();
        let core_counts: Vec<f64> = cores.class_counts().iter().map(|&c| c as f64).collect();
        let priors: Option<Vec<f64>> = if core_counts.iter().all(|&c| c > 0.0) {
            Some(core_counts)
        } else {
            None
        };
        Some(dbs(data, &flat, priors.as_deref(), cfg.kernel, hmult)?)
    } else {
        None
    };

    let effective = EffectiveConfig {
        graphtype: graph.graph_type(),
        lambda: cfg.lambda,
        kernel: cfg.kernel,
        bwtype: cfg.bwtype,
        hmult,
        n_grid: cfg.n_grid,
        grid_pairs: cfg.grid_pairs,
        n_stage: cfg.n_stage,
        se: cfg.se,
        hcores: cfg.hcores,
    };

    Ok(RunArtifact {
        labels,
        cores,
        tree,
        mode_function,
        graph,
        densities,
        bandwidth: bw,
        stage_trace,
        dbs: dbs_result,
        effective,
    })
}

/// Runs the whole clustering pipeline on numeric data.
pub fn run_cluster(data: &DataMatrix, cfg: &RunConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let d = data.ncols();
    let hmult = cfg.effective_hmult(d);
    let gtype = cfg.resolve_graphtype(d)?;
    let bw = main_bandwidth(data, cfg, hmult)?;
    let densities = kepdf(data, data, cfg.kernel, &bw)?.values;
    let graph = build_graph(data, gtype, cfg, &bw)?;
    finish_run(data, cfg, hmult, bw, graph, densities)
}

/// Re-runs the pipeline on a previously built pairs graph with a new
/// tolerance, reusing the stored valley amplitudes (no pairwise density
/// evaluation).
pub fn run_rethreshold(
    data: &DataMatrix,
    amplitudes: PairAmplitudes,
    cfg: &RunConfig,
) -> Result<RunArtifact> {
    cfg.validate()?;
    if amplitudes.n() != data.nrows() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            got: amplitudes.n(),
        });
    }
    let d = data.ncols();
    let hmult = cfg.effective_hmult(d);
    let bw = main_bandwidth(data, cfg, hmult)?;
    let densities = kepdf(data, data, cfg.kernel, &bw)?.values;
    let graph = graph_from_stored_amplitudes(amplitudes, cfg.lambda)?;
    finish_run(data, cfg, hmult, bw, graph, densities)
}
