//! densitree: clustering via nonparametric density estimation.

mod artifacts;
mod io;
mod plots;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use densitree::kde::{h_norm, hprop2f, kepdf, BandwidthSpec, KernelKind};
use densitree::mixed::{classical_mds, gower, ColumnType, MixedColumn, MixedTable};
use densitree::pipeline::{
    run_cluster, run_rethreshold, BandwidthType, GraphChoice, RunConfig,
};
use densitree::{DataMatrix, Error as CoreError};

use artifacts::{effective_params, write_run_artifacts, ParamsFile};
use io::{fmt_f64, read_labels_csv, read_numeric_csv, CsvWriter};

/// CLI failure with the exit code contract: 2 = input/parse problem,
/// 3 = degenerate data or missing run state, 4 = internal error.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    fn parse(message: String) -> Self {
        Self { message, code: 2 }
    }
    fn data(message: String) -> Self {
        Self { message, code: 3 }
    }
    fn io(message: String) -> Self {
        Self { message, code: 4 }
    }
    fn from_core(err: CoreError) -> Self {
        let code = match &err {
            CoreError::InvalidParameter(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::NonFiniteValue { .. } => 2,
            CoreError::DegenerateCoordinate { .. }
            | CoreError::DegenerateGeometry(_)
            | CoreError::ZeroPilotDensity { .. }
            | CoreError::TooFewObservations { .. }
            | CoreError::EmptyData
            | CoreError::MissingAmplitudes
            | CoreError::UndefinedDissimilarity { .. }
            | CoreError::NonPositiveBandwidth { .. } => 3,
            CoreError::Eigen(_) => 3,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "densitree",
    about = "Clustering via nonparametric kernel density estimation",
    long_about = "Estimates a kernel density over the sample, scans its level sets to build \
a mode function and cluster tree, extracts cluster cores through a connection graph, \
allocates the remaining points by density log-ratios and scores the partition.\n\n\
Graph backends: d = 1 uses sorted-order adjacency, d in {2, 3} the Delaunay \
triangulation, higher dimensions pairwise valley-amplitude connections (the paper-style \
Delaunay default for 4 <= d <= 6 is intentionally narrowed here; force --graphtype pairs \
for any d)."
)]
struct Cli {
    /// Worker threads (default: all cores; DENSITREE_THREADS overrides).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Auto,
    Unidimensional,
    Delaunay,
    Pairs,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    T7,
}

#[derive(Clone, Copy, ValueEnum)]
enum BwArg {
    Fixed,
    Adaptive,
}

#[derive(Args)]
struct EstimationFlags {
    /// Kernel function.
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: KernelArg,
    /// Fixed or per-observation adaptive bandwidths.
    #[arg(long, value_enum, default_value = "fixed")]
    bwtype: BwArg,
    /// Bandwidth shrinkage; defaults to 3/4 for d <= 6, else 1.
    #[arg(long)]
    hmult: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full clustering pipeline and write artifact files.
    Cluster {
        /// Input CSV of numeric columns with a header row.
        #[arg(long, required_unless_present = "params")]
        data: Option<PathBuf>,
        /// Zero-based column indices to cluster on (default: all).
        #[arg(long, value_delimiter = ',')]
        cols: Option<Vec<usize>>,
        /// Reproduce a previous run from its params.json.
        #[arg(long, conflicts_with_all = ["data", "cols"])]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        graphtype: GraphArg,
        /// Valley-amplitude tolerance for the pairs backend.
        #[arg(long, default_value_t = 0.10)]
        lambda: f64,
        #[command(flatten)]
        est: EstimationFlags,
        /// Level-set grid resolution.
        #[arg(long, default_value_t = 40)]
        n_grid: usize,
        /// Points per pairwise density section.
        #[arg(long, default_value_t = 10)]
        grid_pairs: usize,
        /// Classification blocks; 0 stops after the cluster cores.
        #[arg(long, default_value_t = 5)]
        n_stage: usize,
        /// Weight allocation order by log-ratio standard errors.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        se: bool,
        /// Reuse the stage-1 bandwidths when classifying.
        #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
        hcores: bool,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Re-threshold a previous pairs run at a new lambda without
    /// re-evaluating densities along segments.
    Rethreshold {
        /// Directory of a previous `cluster` run with a pairs graph.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Output directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kernel density estimation.
    Density {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',')]
        cols: Option<Vec<usize>>,
        /// Evaluation points CSV (default: the data itself).
        #[arg(long)]
        eval: Option<PathBuf>,
        /// Also write G x G marginal grids for every coordinate pair.
        #[arg(long, value_name = "G")]
        marginal_pairs: Option<usize>,
        #[command(flatten)]
        est: EstimationFlags,
        #[arg(long, default_value = "density.csv")]
        out: PathBuf,
    },
    /// Density-based silhouette of a labelled data set.
    Dbs {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',')]
        cols: Option<Vec<usize>>,
        /// labels.csv from a run, or any index,label file.
        #[arg(long)]
        labels: PathBuf,
        /// Class priors (default: class cardinalities).
        #[arg(long, value_delimiter = ',')]
        priors: Option<Vec<f64>>,
        #[command(flatten)]
        est: EstimationFlags,
        #[arg(long, default_value = "dbs.csv")]
        out: PathBuf,
    },
    /// Adjusted Rand index between two label files.
    Ari {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Gower dissimilarity plus classical MDS for mixed-type tables.
    Mds {
        /// CSV table; empty cells and NA are treated as missing.
        #[arg(long)]
        table: PathBuf,
        /// JSON column-type manifest.
        #[arg(long)]
        types: PathBuf,
        /// Number of principal coordinates.
        #[arg(long)]
        k: usize,
        /// Indices of numeric columns to append raw to the coordinates.
        #[arg(long, value_delimiter = ',')]
        append_numeric: Option<Vec<usize>>,
        #[arg(long, default_value = "coords.csv")]
        out: PathBuf,
    },
    /// Render run artifacts as SVG files.
    Plot {
        #[arg(long)]
        run: PathBuf,
        /// Plots to produce: 1 mode function, 2 tree, 3 scatter, 4 dbs.
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
        which: Vec<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("DENSITREE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let run = || match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("densitree: {}", e.message);
            ExitCode::from(e.code)
        }
    };
    match threads {
        Some(t) if t >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .expect("thread pool");
            pool.install(run)
        }
        _ => run(),
    }
}

fn kernel_of(k: KernelArg) -> KernelKind {
    match k {
        KernelArg::Gaussian => KernelKind::Gaussian,
        KernelArg::T7 => KernelKind::StudentT7,
    }
}

fn load_data(path: &Path, cols: Option<&[usize]>) -> Result<(Vec<String>, DataMatrix), CliError> {
    let (header, full) = read_numeric_csv(path)?;
    match cols {
        None => Ok((header, full)),
        Some(cols) => {
            let sel = full.select_columns(cols).map_err(CliError::from_core)?;
            let names = cols
                .iter()
                .map(|&j| header.get(j).cloned().unwrap_or_else(|| format!("x{j}")))
                .collect();
            Ok((names, sel))
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Cluster {
            data,
            cols,
            params,
            graphtype,
            lambda,
            est,
            n_grid,
            grid_pairs,
            n_stage,
            se,
            hcores,
            out,
        } => {
            let (data_path, cols, cfg) = match params {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| {
                        CliError::parse(format!("cannot read {}: {e}", p.display()))
                    })?;
                    let pf: ParamsFile = serde_json::from_str(&text).map_err(|e| {
                        CliError::parse(format!("{}: {e}", p.display()))
                    })?;
                    let cfg = config_from_params(&pf)?;
                    (PathBuf::from(&pf.data), pf.columns, cfg)
                }
                None => {
                    let cfg = RunConfig {
                        graphtype: match graphtype {
                            GraphArg::Auto => GraphChoice::Auto,
                            GraphArg::Unidimensional => GraphChoice::Unidimensional,
                            GraphArg::Delaunay => GraphChoice::Delaunay,
                            GraphArg::Pairs => GraphChoice::Pairs,
                        },
                        lambda,
                        kernel: kernel_of(est.kernel),
                        bwtype: match est.bwtype {
                            BwArg::Fixed => BandwidthType::Fixed,
                            BwArg::Adaptive => BandwidthType::Adaptive,
                        },
                        hmult: est.hmult,
                        n_grid,
                        grid_pairs,
                        n_stage,
                        se,
                        hcores,
                    };
                    (data.expect("clap guarantees --data"), cols, cfg)
                }
            };
            let (_, matrix) = load_data(&data_path, cols.as_deref())?;
            let art = run_cluster(&matrix, &cfg).map_err(CliError::from_core)?;
            let params = effective_params(&art, &data_path.to_string_lossy(), cols);
            write_run_artifacts(&out, &art, &params)?;
            println!(
                "{} clusters; cores {:?}; artifacts in {}",
                art.cores.n_clusters,
                art.cores.class_counts(),
                out.display()
            );
            Ok(())
        }

        Command::Rethreshold { run, lambda, out } => {
            let params_path = run.join("params.json");
            let text = std::fs::read_to_string(&params_path).map_err(|e| {
                CliError::data(format!("cannot read {}: {e}", params_path.display()))
            })?;
            let mut pf: ParamsFile = serde_json::from_str(&text)
                .map_err(|e| CliError::parse(format!("{}: {e}", params_path.display())))?;
            if pf.graphtype != "pairs" {
                return Err(CliError::data(format!(
                    "run used the {} backend; rethreshold needs a pairs run",
                    pf.graphtype
                )));
            }
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(CliError::parse(format!(
                    "lambda must lie in (0, 1), got {lambda}"
                )));
            }
            let stored = io::read_amplitudes(&run.join("graph.bin"))?;
            pf.lambda = lambda;
            let cfg = config_from_params(&pf)?;
            if stored.kernel_id != artifacts::kernel_id(cfg.kernel) {
                return Err(CliError::data(
                    "amplitude file was built with a different kernel".into(),
                ));
            }
            let (_, matrix) = load_data(Path::new(&pf.data), pf.columns.as_deref())?;
            let art =
                run_rethreshold(&matrix, stored.amps, &cfg).map_err(CliError::from_core)?;
            let out = out.unwrap_or(run);
            write_run_artifacts(&out, &art, &pf)?;
            println!(
                "{} clusters at lambda = {lambda}; artifacts in {}",
                art.cores.n_clusters,
                out.display()
            );
            Ok(())
        }

        Command::Density {
            data,
            cols,
            eval,
            marginal_pairs,
            est,
            out,
        } => {
            let (names, matrix) = load_data(&data, cols.as_deref())?;
            let kernel = kernel_of(est.kernel);
            let hmult = est.hmult.unwrap_or(1.0);
            let bw = density_bandwidth(&matrix, est.bwtype, hmult)?;
            let eval_matrix = match &eval {
                Some(p) => load_data(p, None)?.1,
                None => matrix.clone(),
            };
            let est_out =
                kepdf(&eval_matrix, &matrix, kernel, &bw).map_err(CliError::from_core)?;
            let mut w = CsvWriter::new(&["index", "density"]);
            for (i, v) in est_out.values.iter().enumerate() {
                w.row(&[i.to_string(), fmt_f64(*v)]);
            }
            w.write(&out)?;
            if let Some(g) = marginal_pairs {
                if g < 2 {
                    return Err(CliError::parse("marginal grid needs G >= 2".into()));
                }
                write_marginal_pairs(&matrix, &names, kernel, est.bwtype, hmult, g, &out)?;
            }
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Dbs {
            data,
            cols,
            labels,
            priors,
            est,
            out,
        } => {
            let (_, matrix) = load_data(&data, cols.as_deref())?;
            let label_rows = read_labels_csv(&labels)?;
            let flat: Vec<usize> = label_rows
                .iter()
                .map(|l| l.ok_or_else(|| {
                    CliError::parse("labels contain NA; dbs needs a complete labelling".into())
                }))
                .collect::<Result<_, _>>()?;
            if flat.len() != matrix.nrows() {
                return Err(CliError::parse(format!(
                    "label count {} does not match {} observations",
                    flat.len(),
                    matrix.nrows()
                )));
            }
            let hmult = est.hmult.unwrap_or(1.0);
            let result = densitree::diagnostics::dbs(
                &matrix,
                &flat,
                priors.as_deref(),
                kernel_of(est.kernel),
                hmult,
            )
            .map_err(CliError::from_core)?;
            if result.priors_renormalized {
                eprintln!("densitree: priors did not sum to 1; renormalized");
            }
            let mut order: Vec<usize> = (0..result.values.len()).collect();
            order.sort_by(|&a, &b| {
                result.labels[a]
                    .cmp(&result.labels[b])
                    .then(result.values[b].partial_cmp(&result.values[a]).unwrap())
                    .then(a.cmp(&b))
            });
            let mut w = CsvWriter::new(&["index", "label", "dbs"]);
            for i in order {
                w.row(&[
                    i.to_string(),
                    result.labels[i].to_string(),
                    fmt_f64(result.values[i]),
                ]);
            }
            w.write(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Ari { a, b } => {
            let la = flat_labels(&a)?;
            let lb = flat_labels(&b)?;
            if la.len() != lb.len() {
                return Err(CliError::parse(format!(
                    "label files have different lengths: {} vs {}",
                    la.len(),
                    lb.len()
                )));
            }
            let v = densitree::diagnostics::adj_rand_index(&la, &lb)
                .map_err(CliError::from_core)?;
            println!("{}", fmt_f64(v));
            Ok(())
        }

        Command::Mds {
            table,
            types,
            k,
            append_numeric,
            out,
        } => {
            let (mixed, raw_numeric) = read_mixed_table(&table, &types)?;
            let dis = gower(&mixed).map_err(CliError::from_core)?;
            let coords = classical_mds(&dis, k).map_err(CliError::from_core)?;
            let extra: Vec<usize> = append_numeric.unwrap_or_default();
            let mut header: Vec<String> = (0..k).map(|c| format!("pc{}", c + 1)).collect();
            for &j in &extra {
                header.push(format!("col{j}"));
            }
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let mut w = CsvWriter::new(&header_refs);
            for i in 0..coords.nrows() {
                let mut row: Vec<String> =
                    coords.row(i).iter().map(|v| fmt_f64(*v)).collect();
                for &j in &extra {
                    let v = raw_numeric
                        .get(j)
                        .and_then(|col| col[i])
                        .ok_or_else(|| {
                            CliError::parse(format!(
                                "column {j} is not fully numeric; cannot append"
                            ))
                        })?;
                    row.push(fmt_f64(v));
                }
                w.row(&row);
            }
            w.write(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Plot { run, which } => plot_run(&run, &which),
    }
}

fn config_from_params(pf: &ParamsFile) -> Result<RunConfig, CliError> {
    Ok(RunConfig {
        graphtype: match pf.graphtype.as_str() {
            "auto" => GraphChoice::Auto,
            "unidimensional" => GraphChoice::Unidimensional,
            "delaunay" => GraphChoice::Delaunay,
            "pairs" => GraphChoice::Pairs,
            other => {
                return Err(CliError::parse(format!("unknown graphtype {other:?}")));
            }
        },
        lambda: pf.lambda,
        kernel: match pf.kernel.as_str() {
            "gaussian" => KernelKind::Gaussian,
            "t7" => KernelKind::StudentT7,
            other => return Err(CliError::parse(format!("unknown kernel {other:?}"))),
        },
        bwtype: match pf.bwtype.as_str() {
            "fixed" => BandwidthType::Fixed,
            "adaptive" => BandwidthType::Adaptive,
            other => return Err(CliError::parse(format!("unknown bwtype {other:?}"))),
        },
        hmult: Some(pf.hmult),
        n_grid: pf.n_grid,
        grid_pairs: pf.grid_pairs,
        n_stage: pf.n_stage,
        se: pf.se,
        hcores: pf.hcores,
    })
}

fn density_bandwidth(
    data: &DataMatrix,
    bwtype: BwArg,
    hmult: f64,
) -> Result<BandwidthSpec, CliError> {
    let base = h_norm(data).map_err(CliError::from_core)?;
    let scaled: Vec<f64> = base.iter().map(|h| h * hmult).collect();
    match bwtype {
        BwArg::Fixed => Ok(BandwidthSpec::Fixed(scaled)),
        BwArg::Adaptive => Ok(BandwidthSpec::Adaptive(
            hprop2f(data, Some(&scaled)).map_err(CliError::from_core)?,
        )),
    }
}

fn write_marginal_pairs(
    data: &DataMatrix,
    names: &[String],
    kernel: KernelKind,
    bwtype: BwArg,
    hmult: f64,
    g: usize,
    out: &Path,
) -> Result<(), CliError> {
    let stem = out.with_extension("");
    let stem = stem.to_string_lossy();
    for a in 0..data.ncols() {
        for b in (a + 1)..data.ncols() {
            let pair = data.select_columns(&[a, b]).map_err(CliError::from_core)?;
            let bw = density_bandwidth(&pair, bwtype, hmult)?;
            let mut ranges = Vec::new();
            for j in 0..2 {
                let col = pair.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                ranges.push((lo, hi));
            }
            let mut pts = Vec::with_capacity(g * g * 2);
            for i in 0..g {
                for j in 0..g {
                    let x = ranges[0].0
                        + (ranges[0].1 - ranges[0].0) * i as f64 / (g - 1) as f64;
                    let y = ranges[1].0
                        + (ranges[1].1 - ranges[1].0) * j as f64 / (g - 1) as f64;
                    pts.push(x);
                    pts.push(y);
                }
            }
            let eval = DataMatrix::new(pts, g * g, 2).map_err(CliError::from_core)?;
            let est = kepdf(&eval, &pair, kernel, &bw).map_err(CliError::from_core)?;
            let na = names.get(a).cloned().unwrap_or_else(|| format!("x{a}"));
            let nb = names.get(b).cloned().unwrap_or_else(|| format!("x{b}"));
            let mut w = CsvWriter::new(&[&na, &nb, "density"]);
            for (idx, v) in est.values.iter().enumerate() {
                w.row(&[
                    fmt_f64(eval.get(idx, 0)),
                    fmt_f64(eval.get(idx, 1)),
                    fmt_f64(*v),
                ]);
            }
            w.write(Path::new(&format!("{stem}_pair_{a}_{b}.csv")))?;
        }
    }
    Ok(())
}

fn flat_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    read_labels_csv(path)?
        .into_iter()
        .map(|l| {
            l.ok_or_else(|| CliError::parse("label file contains NA entries".into()))
        })
        .collect()
}

fn read_mixed_table(
    table: &Path,
    types: &Path,
) -> Result<(MixedTable, Vec<Vec<Option<f64>>>), CliError> {
    #[derive(serde::Deserialize)]
    struct TypesFile {
        types: Vec<String>,
    }
    let text = std::fs::read_to_string(types)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", types.display())))?;
    let tf: TypesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{}: {e}", types.display())))?;

    let raw = std::fs::read_to_string(table)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", table.display())))?;
    let mut lines = raw.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(format!("{}: empty file", table.display())))?;
    let ncols = header.split(',').count();
    if tf.types.len() != ncols {
        return Err(CliError::parse(format!(
            "types manifest has {} entries for {ncols} columns",
            tf.types.len()
        )));
    }
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); ncols];
    // nominal columns may hold arbitrary strings; coded per column
    let mut codebooks: Vec<std::collections::HashMap<String, f64>> =
        vec![Default::default(); ncols];
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(CliError::parse(format!(
                "{}: line {}: expected {ncols} fields, got {}",
                table.display(),
                lineno + 1,
                fields.len()
            )));
        }
        for (j, f) in fields.iter().enumerate() {
            let t = f.trim();
            if t.is_empty() || t.eq_ignore_ascii_case("na") {
                cells[j].push(None);
            } else if let Ok(v) = t.parse::<f64>() {
                cells[j].push(Some(v));
            } else if tf.types[j] == "nominal" {
                let next = codebooks[j].len() as f64;
                let code = *codebooks[j].entry(t.to_string()).or_insert(next);
                cells[j].push(Some(code));
            } else {
                return Err(CliError::parse(format!(
                    "{}: line {}: column {} is not numeric: {t:?}",
                    table.display(),
                    lineno + 1,
                    j + 1
                )));
            }
        }
    }
    let mut columns = Vec::with_capacity(ncols);
    for (j, t) in tf.types.iter().enumerate() {
        let ctype = match t.as_str() {
            "numeric" => ColumnType::Numeric,
            "ordered" => ColumnType::OrderedRatio,
            "symm" => ColumnType::SymmetricBinary,
            "asymm" => ColumnType::AsymmetricBinary,
            "nominal" => ColumnType::Nominal,
            other => {
                return Err(CliError::parse(format!(
                    "unknown column type {other:?} (use numeric, ordered, symm, asymm, nominal)"
                )))
            }
        };
        columns.push(MixedColumn {
            ctype,
            values: cells[j].clone(),
        });
    }
    let mixed = MixedTable::new(columns).map_err(CliError::from_core)?;
    Ok((mixed, cells))
}

fn plot_run(run: &Path, which: &[u32]) -> Result<(), CliError> {
    let params_text = std::fs::read_to_string(run.join("params.json"))
        .map_err(|e| CliError::data(format!("cannot read params.json: {e}")))?;
    let pf: ParamsFile = serde_json::from_str(&params_text)
        .map_err(|e| CliError::parse(format!("params.json: {e}")))?;

    for w in which {
        match w {
            1 => {
                let (grid, counts) = read_modefn(&run.join("modefn.csv"))?;
                std::fs::write(run.join("modefn.svg"), plots::mode_function_svg(&grid, &counts))
                    .map_err(|e| CliError::io(format!("modefn.svg: {e}")))?;
            }
            2 => {
                let tree = read_tree(&run.join("tree.json"))?;
                std::fs::write(run.join("tree.svg"), plots::tree_svg(&tree))
                    .map_err(|e| CliError::io(format!("tree.svg: {e}")))?;
            }
            3 => {
                let (names, matrix) = load_data(Path::new(&pf.data), pf.columns.as_deref())?;
                let labels = read_labels_csv(&run.join("labels.csv"))?;
                std::fs::write(
                    run.join("scatter.svg"),
                    plots::scatter_svg(&matrix, &labels, &names),
                )
                .map_err(|e| CliError::io(format!("scatter.svg: {e}")))?;
            }
            4 => {
                let (labels, values) = read_dbs(&run.join("dbs.csv"))?;
                std::fs::write(run.join("dbs.svg"), plots::dbs_svg(&values, &labels))
                    .map_err(|e| CliError::io(format!("dbs.svg: {e}")))?;
            }
            other => {
                return Err(CliError::parse(format!(
                    "unknown plot {other}; use 1..4"
                )))
            }
        }
    }
    println!("plots written to {}", run.display());
    Ok(())
}

fn read_modefn(path: &Path) -> Result<(Vec<f64>, Vec<usize>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut grid = Vec::new();
    let mut counts = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let p: f64 = it.next().unwrap_or("").trim().parse().map_err(|_| {
            CliError::parse(format!("{}: line {}", path.display(), k + 1))
        })?;
        let m: usize = it.next().unwrap_or("").trim().parse().map_err(|_| {
            CliError::parse(format!("{}: line {}", path.display(), k + 1))
        })?;
        grid.push(p);
        counts.push(m);
    }
    Ok((grid, counts))
}

fn read_dbs(path: &Path) -> Result<(Vec<usize>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(CliError::parse(format!(
                "{}: line {}",
                path.display(),
                k + 1
            )));
        }
        labels.push(f[1].trim().parse().map_err(|_| {
            CliError::parse(format!("{}: line {}", path.display(), k + 1))
        })?);
        values.push(f[2].trim().parse().map_err(|_| {
            CliError::parse(format!("{}: line {}", path.display(), k + 1))
        })?);
    }
    Ok((labels, values))
}

fn read_tree(path: &Path) -> Result<densitree::levelset::TreeNode, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    fn node(v: &serde_json::Value) -> densitree::levelset::TreeNode {
        densitree::levelset::TreeNode {
            height: v["height"].as_f64().unwrap_or(0.0),
            children: v["children"]
                .as_array()
                .map(|a| a.iter().map(node).collect())
                .unwrap_or_default(),
            label: v["label"].as_u64().map(|l| l as usize),
            core_size: v["core_size"].as_u64().unwrap_or(0) as usize,
        }
    }
    Ok(node(&v))
}
