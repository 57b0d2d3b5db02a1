//! Artifact files written by a clustering run.

use std::fmt::Write as _;
use std::path::Path;

use densitree::graph::GraphType;
use densitree::kde::KernelKind;
use densitree::levelset::TreeNode;
use densitree::pipeline::{BandwidthType, RunArtifact};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, write_amplitudes, CsvWriter};
use crate::CliError;

/// Effective (post-default) run parameters; serialized as params.json and
/// accepted back via `cluster --params` to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub data: String,
    #[serde(default)]
    pub columns: Option<Vec<usize>>,
    pub graphtype: String,
    pub lambda: f64,
    pub kernel: String,
    pub bwtype: String,
    pub hmult: f64,
    pub n_grid: usize,
    pub grid_pairs: usize,
    pub n_stage: usize,
    pub se: bool,
    pub hcores: bool,
}

pub fn kernel_name(k: KernelKind) -> &'static str {
    match k {
        KernelKind::Gaussian => "gaussian",
        KernelKind::StudentT7 => "t7",
    }
}

pub fn kernel_id(k: KernelKind) -> u32 {
    match k {
        KernelKind::Gaussian => 0,
        KernelKind::StudentT7 => 1,
    }
}

pub fn bwtype_name(b: BandwidthType) -> &'static str {
    match b {
        BandwidthType::Fixed => "fixed",
        BandwidthType::Adaptive => "adaptive",
    }
}

fn label_field(l: &Option<usize>) -> String {
    match l {
        Some(v) => v.to_string(),
        None => "NA".into(),
    }
}

/// Writes labels.csv, cores.csv, tree.json, tree.txt, modefn.csv, dbs.csv,
/// stages.csv, graph.csv, params.json and (pairs backend) graph.bin.
pub fn write_run_artifacts(
    dir: &Path,
    art: &RunArtifact,
    params: &ParamsFile,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;

    let mut labels = CsvWriter::new(&["index", "label"]);
    for (i, l) in art.labels.iter().enumerate() {
        labels.row(&[i.to_string(), label_field(l)]);
    }
    labels.write(&dir.join("labels.csv"))?;

    let mut cores = CsvWriter::new(&["index", "label"]);
    for (i, l) in art.cores.labels.iter().enumerate() {
        cores.row(&[i.to_string(), label_field(l)]);
    }
    cores.write(&dir.join("cores.csv"))?;

    let mut modefn = CsvWriter::new(&["p", "m"]);
    for (p, m) in art.mode_function.grid.iter().zip(&art.mode_function.counts) {
        modefn.row(&[fmt_f64(*p), m.to_string()]);
    }
    modefn.write(&dir.join("modefn.csv"))?;

    std::fs::write(dir.join("tree.json"), tree_json(&art.tree.root))
        .map_err(|e| CliError::io(format!("cannot write tree.json: {e}")))?;
    std::fs::write(dir.join("tree.txt"), tree_text(&art.tree.root))
        .map_err(|e| CliError::io(format!("cannot write tree.txt: {e}")))?;

    // dbs.csv sorted by class, then decreasing dbs, ties by index
    let mut dbs = CsvWriter::new(&["index", "label", "dbs"]);
    if let Some(d) = &art.dbs {
        let mut order: Vec<usize> = (0..d.values.len()).collect();
        order.sort_by(|&a, &b| {
            d.labels[a]
                .cmp(&d.labels[b])
                .then(d.values[b].partial_cmp(&d.values[a]).unwrap())
                .then(a.cmp(&b))
        });
        for i in order {
            dbs.row(&[i.to_string(), d.labels[i].to_string(), fmt_f64(d.values[i])]);
        }
    }
    dbs.write(&dir.join("dbs.csv"))?;

    let mut stages = CsvWriter::new(&["index", "stage", "label", "score"]);
    for r in &art.stage_trace.records {
        stages.row(&[
            r.index.to_string(),
            r.stage.to_string(),
            r.label.to_string(),
            fmt_f64(r.score),
        ]);
    }
    stages.write(&dir.join("stages.csv"))?;

    // edge list; pairs backend carries the valley amplitude per edge
    match art.graph.amplitudes() {
        Some(amps) => {
            let mut graph = CsvWriter::new(&["i", "j", "R"]);
            for (i, j) in art.graph.edges() {
                graph.row(&[
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(amps.get(*i as usize, *j as usize) as f64),
                ]);
            }
            graph.write(&dir.join("graph.csv"))?;
            write_amplitudes(
                &dir.join("graph.bin"),
                amps,
                kernel_id(art.effective.kernel),
            )?;
        }
        None => {
            let mut graph = CsvWriter::new(&["i", "j"]);
            for (i, j) in art.graph.edges() {
                graph.row(&[i.to_string(), j.to_string()]);
            }
            graph.write(&dir.join("graph.csv"))?;
        }
    }

    let json = serde_json::to_string_pretty(params)
        .map_err(|e| CliError::io(format!("params serialization: {e}")))?;
    std::fs::write(dir.join("params.json"), json + "\n")
        .map_err(|e| CliError::io(format!("cannot write params.json: {e}")))?;
    Ok(())
}

pub fn effective_params(
    art: &RunArtifact,
    data_path: &str,
    columns: Option<Vec<usize>>,
) -> ParamsFile {
    let e = &art.effective;
    ParamsFile {
        data: data_path.to_string(),
        columns,
        graphtype: match e.graphtype {
            GraphType::Unidimensional => "unidimensional",
            GraphType::Delaunay => "delaunay",
            GraphType::Pairs => "pairs",
        }
        .into(),
        lambda: e.lambda,
        kernel: kernel_name(e.kernel).into(),
        bwtype: bwtype_name(e.bwtype).into(),
        hmult: e.hmult,
        n_grid: e.n_grid,
        grid_pairs: e.grid_pairs,
        n_stage: e.n_stage,
        se: e.se,
        hcores: e.hcores,
    }
}

fn tree_json(root: &TreeNode) -> String {
    fn node(n: &TreeNode, out: &mut String) {
        out.push('{');
        let _ = write!(out, "\"height\":{}", n.height);
        if let Some(l) = n.label {
            let _ = write!(out, ",\"label\":{l},\"core_size\":{}", n.core_size);
        }
        if !n.children.is_empty() {
            out.push_str(",\"children\":[");
            for (k, c) in n.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                node(c, out);
            }
            out.push(']');
        }
        out.push('}');
    }
    let mut out = String::new();
    node(root, &mut out);
    out.push('\n');
    out
}

fn tree_text(root: &TreeNode) -> String {
    fn members(n: &TreeNode) -> usize {
        if n.is_leaf() {
            1
        } else {
            n.children.iter().map(members).sum()
        }
    }
    fn walk(n: &TreeNode, prefix: &str, connector: &str, out: &mut String) {
        if n.is_leaf() {
            let _ = writeln!(
                out,
                "{prefix}{connector}leaf \"{}\" (h = {}, core size {})",
                n.label.unwrap_or(0),
                n.height,
                n.core_size
            );
            return;
        }
        let _ = writeln!(
            out,
            "{prefix}{connector}[{} branches, {} members at h = {}]",
            n.children.len(),
            members(n),
            n.height
        );
        let child_prefix = if connector == "--" {
            format!("{prefix}  ")
        } else if connector.starts_with('`') {
            format!("{prefix}   ")
        } else {
            format!("{prefix}|  ")
        };
        for (k, c) in n.children.iter().enumerate() {
            let conn = if k + 1 == n.children.len() {
                "`--"
            } else {
                "|--"
            };
            walk(c, &child_prefix, conn, out);
        }
    }
    let mut out = String::new();
    walk(root, "", "--", &mut out);
    out
}
