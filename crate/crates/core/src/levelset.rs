//! Level-set scan over a probability grid: mode function, cluster tree and
//! cluster cores.

use crate::error::{Error, Result};
use crate::graph::ConnectionGraph;

/// Number of connected components of the sample level set, as a function of
/// the probability p spanned by the set.
#[derive(Debug, Clone)]
pub struct ModeFunction {
    /// Increasing p values in (0, 1).
    pub grid: Vec<f64>,
    /// Component count at each grid value.
    pub counts: Vec<usize>,
}

/// Total increments and decrements of the padded mode function
/// (0, m(p_1), ..., m(p_K), 0).
pub fn mode_properties_check(mf: &ModeFunction) -> (usize, usize) {
    let mut prev = 0i64;
    let mut inc = 0i64;
    let mut dec = 0i64;
    for &c in mf.counts.iter().chain(std::iter::once(&0usize)) {
        let delta = c as i64 - prev;
        if delta > 0 {
            inc += delta;
        } else {
            dec -= delta;
        }
        prev = c as i64;
    }
    (inc as usize, dec as usize)
}

/// A node of the cluster tree. Heights live on the p̂ scale; the root sits
/// at height 1.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub height: f64,
    /// Empty for leaves.
    pub children: Vec<TreeNode>,
    /// 1-based cluster label; set on leaves only.
    pub label: Option<usize>,
    /// Core cardinality; leaves only.
    pub core_size: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if n.is_leaf() {
                out.push(n);
            } else {
                for c in n.children.iter().rev() {
                    stack.push(c);
                }
            }
        }
        out
    }
}

/// The merge hierarchy of level-set components.
#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub root: TreeNode,
    pub n_leaves: usize,
}

/// Cluster-core membership: labels 1..=M, None for unallocated points.
#[derive(Debug, Clone)]
pub struct CoreAssignment {
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
}

impl CoreAssignment {
    pub fn unallocated(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_clusters];
        for l in self.labels.iter().flatten() {
            counts[*l - 1] += 1;
        }
        counts
    }
}

/// Observations with estimated density >= c, with the realized fraction
/// p̂ = |S(c)| / n.
pub fn level_set(densities: &[f64], c: f64) -> (Vec<usize>, f64) {
    let idx: Vec<usize> = densities
        .iter()
        .enumerate()
        .filter(|(_, f)| **f >= c)
        .map(|(i, _)| i)
        .collect();
    let p = idx.len() as f64 / densities.len() as f64;
    (idx, p)
}

struct TrackNode {
    height: f64,
    children: Vec<usize>,
    members: Vec<bool>,
    is_leaf: bool,
    founding_index: usize,
}

/// Scans level sets along the probability grid and tracks component
/// membership.
///
/// For each grid value p the threshold is the ⌈p·n⌉-th largest density, so
/// the level set holds roughly a fraction p of the sample. Walking p upward
/// (thresholds downward): a component disjoint from every live group founds
/// a new leaf; a component touching one group extends it; a component
/// touching several merges them into an internal node and the bridging
/// points join no core. Groups still live at the end are joined by the root
/// at height 1.
pub fn scan(
    graph: &ConnectionGraph,
    densities: &[f64],
    n_grid: usize,
) -> Result<(ModeFunction, ClusterTree, CoreAssignment)> {
    let n = densities.len();
    if graph.n() != n {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            got: n,
        });
    }
    if n_grid < 2 {
        return Err(Error::InvalidParameter(
            "n_grid must be at least 2".into(),
        ));
    }

    let mut order_desc: Vec<f64> = densities.to_vec();
    order_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut nodes: Vec<TrackNode> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut grid = Vec::with_capacity(n_grid - 1);
    let mut counts = Vec::with_capacity(n_grid - 1);

    for k in 1..n_grid {
        let p = k as f64 / n_grid as f64;
        let kth = ((p * n as f64).ceil() as usize).clamp(1, n);
        let c = order_desc[kth - 1];
        let mask: Vec<bool> = densities.iter().map(|f| *f >= c).collect();
        let comps = graph.components(&mask);
        grid.push(p);
        counts.push(comps.len());

        for comp in comps {
            let hits: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&a| comp.iter().any(|&v| nodes[a].members[v]))
                .collect();
            match hits.len() {
                0 => {
                    let mut members = vec![false; n];
                    for &v in &comp {
                        members[v] = true;
                    }
                    nodes.push(TrackNode {
                        height: p,
                        children: Vec::new(),
                        members,
                        is_leaf: true,
                        founding_index: comp[0],
                    });
                    active.push(nodes.len() - 1);
                }
                1 => {
                    let a = hits[0];
                    for &v in &comp {
                        nodes[a].members[v] = true;
                    }
                }
                _ => {
                    let mut members = vec![false; n];
                    for &a in &hits {
                        for (v, m) in nodes[a].members.iter().enumerate() {
                            if *m {
                                members[v] = true;
                            }
                        }
                    }
                    for &v in &comp {
                        members[v] = true;
                    }
                    let founding = nodes[hits[0]].founding_index;
                    nodes.push(TrackNode {
                        height: p,
                        children: hits.clone(),
                        members,
                        is_leaf: false,
                        founding_index: founding,
                    });
                    active.retain(|a| !hits.contains(a));
                    active.push(nodes.len() - 1);
                }
            }
        }
    }

    // label leaves by decreasing maximal core density, ties by founding index
    let leaf_ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_leaf).collect();
    let mut ranked: Vec<(usize, f64, usize)> = leaf_ids
        .iter()
        .map(|&i| {
            let max_d = nodes[i]
                .members
                .iter()
                .enumerate()
                .filter(|(_, m)| **m)
                .map(|(v, _)| densities[v])
                .fold(f64::NEG_INFINITY, f64::max);
            (i, max_d, nodes[i].founding_index)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.2.cmp(&b.2)));
    let mut label_of = vec![0usize; nodes.len()];
    for (rank, (i, _, _)) in ranked.iter().enumerate() {
        label_of[*i] = rank + 1;
    }

    let mut labels: Vec<Option<usize>> = vec![None; n];
    for &i in &leaf_ids {
        for (v, m) in nodes[i].members.iter().enumerate() {
            if *m {
                labels[v] = Some(label_of[i]);
            }
        }
    }

    fn build(nodes: &[TrackNode], label_of: &[usize], id: usize) -> TreeNode {
        let nd = &nodes[id];
        if nd.is_leaf {
            TreeNode {
                height: nd.height,
                children: Vec::new(),
                label: Some(label_of[id]),
                core_size: nd.members.iter().filter(|m| **m).count(),
            }
        } else {
            TreeNode {
                height: nd.height,
                children: nd
                    .children
                    .iter()
                    .map(|&c| build(nodes, label_of, c))
                    .collect(),
                label: None,
                core_size: 0,
            }
        }
    }

    let root_children: Vec<TreeNode> = active
        .iter()
        .map(|&a| build(&nodes, &label_of, a))
        .collect();
    let root = TreeNode {
        height: 1.0,
        children: root_children,
        label: None,
        core_size: 0,
    };
    let tree = ClusterTree {
        root,
        n_leaves: leaf_ids.len(),
    };
    let cores = CoreAssignment {
        labels,
        n_clusters: leaf_ids.len(),
    };
    Ok((ModeFunction { grid, counts }, tree, cores))
}
