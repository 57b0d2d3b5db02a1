//! Connection networks among observations and their connected components.

mod delaunay;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kde::{eval_segment, BandwidthSpec, KernelKind};
use crate::matrix::DataMatrix;

/// Backend used to connect observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphType {
    /// Adjacency of consecutive values in sorted order; d = 1 only.
    Unidimensional,
    /// Delaunay triangulation edges; d in {2, 3}.
    Delaunay,
    /// Pairwise valley-amplitude connections; any dimension.
    Pairs,
}

impl GraphType {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphType::Unidimensional => "unidimensional",
            GraphType::Delaunay => "delaunay",
            GraphType::Pairs => "pairs",
        }
    }
}

/// Stored valley amplitudes for the pairs backend, upper triangular by
/// (i, j), i < j.
#[derive(Debug, Clone)]
pub struct PairAmplitudes {
    n: usize,
    values: Vec<f32>,
    pub grid_pairs: usize,
}

impl PairAmplitudes {
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[self.index(a, b)]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn from_values(n: usize, values: Vec<f32>, grid_pairs: usize) -> Result<Self> {
        if values.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "amplitude buffer length {} does not match n = {n}",
                values.len()
            )));
        }
        Ok(Self {
            n,
            values,
            grid_pairs,
        })
    }
}

/// An undirected graph over observation indices.
#[derive(Debug, Clone)]
pub struct ConnectionGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
    gtype: GraphType,
    pairs: Option<PairAmplitudes>,
    lambda: Option<f64>,
}

impl ConnectionGraph {
    /// A graph from an explicit edge list (self-loops rejected, duplicates
    /// collapsed). Useful for feeding externally built connectivity into
    /// the level-set machinery.
    pub fn from_edge_list(
        n: usize,
        edges: Vec<(u32, u32)>,
        gtype: GraphType,
    ) -> Result<Self> {
        for &(i, j) in &edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {i}")));
            }
            if i as usize >= n || j as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) outside 0..{n}"
                )));
            }
        }
        let edges = edges
            .into_iter()
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        Ok(Self::from_edges(n, edges, gtype, None, None))
    }

    fn from_edges(
        n: usize,
        mut edges: Vec<(u32, u32)>,
        gtype: GraphType,
        pairs: Option<PairAmplitudes>,
        lambda: Option<f64>,
    ) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            adjacency,
            gtype,
            pairs,
            lambda,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn graph_type(&self) -> GraphType {
        self.gtype
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn amplitudes(&self) -> Option<&PairAmplitudes> {
        self.pairs.as_ref()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    /// Connected components of the subgraph induced by `active`, each
    /// sorted ascending, ordered by their smallest vertex.
    pub fn components(&self, active: &[bool]) -> Vec<Vec<usize>> {
        assert_eq!(active.len(), self.n);
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.n {
            if !active[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adjacency[v] {
                    let w = w as usize;
                    if active[w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Chains observations adjacent in sorted order; ties broken by index.
pub fn build_unidimensional(data: &DataMatrix) -> Result<ConnectionGraph> {
    if data.ncols() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: data.ncols(),
        });
    }
    let n = data.nrows();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        data.get(a as usize, 0)
            .partial_cmp(&data.get(b as usize, 0))
            .unwrap()
            .then(a.cmp(&b))
    });
    let edges = order
        .windows(2)
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .collect();
    Ok(ConnectionGraph::from_edges(
        n,
        edges,
        GraphType::Unidimensional,
        None,
        None,
    ))
}

/// Delaunay edge graph for d in {2, 3}.
pub fn build_delaunay(data: &DataMatrix) -> Result<ConnectionGraph> {
    let d = data.ncols();
    if d != 2 && d != 3 {
        return Err(Error::InvalidParameter(format!(
            "delaunay backend supports d in {{2, 3}}, got d = {d}"
        )));
    }
    let rows: Vec<&[f64]> = (0..data.nrows()).map(|i| data.row(i)).collect();
    let edges = delaunay::delaunay_edges(&rows, d)?;
    Ok(ConnectionGraph::from_edges(
        data.nrows(),
        edges,
        GraphType::Delaunay,
        None,
        None,
    ))
}

/// Normalized amplitude of the valley along a density section.
///
/// The water-filling envelope is g_t = min(max_{s<=t} f_s, max_{s>=t} f_s);
/// the result is the trapezoid integral of g - f over the trapezoid
/// integral of g, in [0, 1). Monotone or concave sections give 0.
pub fn valley_amplitude(section: &[f64]) -> f64 {
    assert!(section.len() >= 2, "section needs at least 2 values");
    let k = section.len();
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    let mut acc = f64::NEG_INFINITY;
    for (t, &v) in section.iter().enumerate() {
        acc = acc.max(v);
        left[t] = acc;
    }
    acc = f64::NEG_INFINITY;
    for t in (0..k).rev() {
        acc = acc.max(section[t]);
        right[t] = acc;
    }
    let trapezoid = |v: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.5 * (v(0) + v(k - 1));
        for t in 1..k - 1 {
            s += v(t);
        }
        s
    };
    let g = |t: usize| left[t].min(right[t]);
    let denom = trapezoid(&g);
    if denom <= 0.0 {
        return 0.0;
    }
    let num = trapezoid(&|t| g(t) - section[t]);
    (num / denom).clamp(0.0, 1.0)
}

/// Builds the pairwise connection graph: every pair's density section is
/// evaluated on `grid_pairs` points and the pair is connected when its
/// valley amplitude is below `lambda`. All amplitudes are retained so the
/// graph can be rethresholded without re-evaluating densities.
pub fn build_pairs(
    data: &DataMatrix,
    kernel: KernelKind,
    bw: &BandwidthSpec,
    grid_pairs: usize,
    lambda: f64,
) -> Result<ConnectionGraph> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if grid_pairs < 2 {
        return Err(Error::InvalidParameter(
            "grid_pairs must be at least 2".into(),
        ));
    }
    bw.validate(data)?;
    let n = data.nrows();
    let rows: Vec<Result<Vec<f32>>> = (0..n.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(n - 1 - i);
            for j in (i + 1)..n {
                let section =
                    eval_segment(data.row(i), data.row(j), grid_pairs, data, kernel, bw)?;
                out.push(valley_amplitude(&section) as f32);
            }
            Ok(out)
        })
        .collect();
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for r in rows {
        values.extend(r?);
    }
    let pairs = PairAmplitudes {
        n,
        values,
        grid_pairs,
    };
    Ok(graph_from_amplitudes(pairs, lambda))
}

fn graph_from_amplitudes(pairs: PairAmplitudes, lambda: f64) -> ConnectionGraph {
    let n = pairs.n;
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if (pairs.values[k] as f64) < lambda {
                edges.push((i as u32, j as u32));
            }
            k += 1;
        }
    }
    ConnectionGraph::from_edges(n, edges, GraphType::Pairs, Some(pairs), Some(lambda))
}

/// Recomputes the edge set for a new tolerance from stored amplitudes.
pub fn rethreshold(graph: &ConnectionGraph, lambda: f64) -> Result<ConnectionGraph> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    let pairs = graph.pairs.clone().ok_or(Error::MissingAmplitudes)?;
    Ok(graph_from_amplitudes(pairs, lambda))
}

/// Rebuilds a pairs graph directly from persisted amplitudes.
pub fn graph_from_stored_amplitudes(pairs: PairAmplitudes, lambda: f64) -> Result<ConnectionGraph> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    Ok(graph_from_amplitudes(pairs, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unidimensional_chain() {
        // {3, 1, 2}: sorted chain 1-2-3 gives edges (1,2) and (0,2)
        let data = DataMatrix::from_column(&[3.0, 1.0, 2.0]).unwrap();
        let g = build_unidimensional(&data).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn unidimensional_singleton() {
        let data = DataMatrix::from_column(&[5.0]).unwrap();
        let g = build_unidimensional(&data).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn unidimensional_ties_by_index() {
        let data = DataMatrix::from_column(&[1.0, 1.0, 0.0]).unwrap();
        let g = build_unidimensional(&data).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn valley_flat_section_is_zero() {
        assert_eq!(valley_amplitude(&[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn valley_concave_section_is_zero() {
        let f: Vec<f64> = (0..11)
            .map(|k| {
                let x = k as f64 / 10.0;
                1.0 - (x - 0.5) * (x - 0.5)
            })
            .collect();
        assert_eq!(valley_amplitude(&f), 0.0);
    }

    #[test]
    fn valley_hand_computed() {
        // section (1, 0, 1): g = (1,1,1); T(g-f) = 1, T(g) = 2, R = 1/2
        assert!((valley_amplitude(&[1.0, 0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn valley_all_zero_is_zero() {
        assert_eq!(valley_amplitude(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn components_edgeless() {
        let data = DataMatrix::from_column(&[1.0, 2.0]).unwrap();
        let mut g = build_unidimensional(&data).unwrap();
        g.edges.clear();
        g.adjacency = vec![Vec::new(); 2];
        let comps = g.components(&[true, true]);
        assert_eq!(comps, vec![vec![0], vec![1]]);
    }

    #[test]
    fn components_path_split() {
        // path 0-1-2 with middle vertex inactive splits in two
        let data = DataMatrix::from_column(&[0.0, 1.0, 2.0]).unwrap();
        let g = build_unidimensional(&data).unwrap();
        let comps = g.components(&[true, false, true]);
        assert_eq!(comps, vec![vec![0], vec![2]]);
    }

    #[test]
    fn pairs_monotone_section_connects() {
        // two points of a single tight cluster: no valley between them
        let data =
            DataMatrix::from_rows(&[vec![0.0], vec![0.1], vec![0.2], vec![0.05]]).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.5]);
        let g = build_pairs(&data, KernelKind::Gaussian, &bw, 10, 0.1).unwrap();
        let amps = g.amplitudes().unwrap();
        assert_eq!(amps.get(0, 1), 0.0);
        assert!(g.edges().contains(&(0, 1)));
    }

    #[test]
    fn pairs_deep_valley_disconnects() {
        // two well-separated 1-D clusters: centroid pair has R near 1
        let mut vals = Vec::new();
        for k in 0..20 {
            vals.push(k as f64 * 0.01);
            vals.push(10.0 + k as f64 * 0.01);
        }
        let data = DataMatrix::from_column(&vals).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.2]);
        let g = build_pairs(&data, KernelKind::Gaussian, &bw, 10, 0.1).unwrap();
        let amps = g.amplitudes().unwrap();
        // cross-cluster pair: deep valley (8/9 is the ceiling on a 10-point
        // grid with comparable endpoint heights)
        let r10 = amps.get(0, 1) as f64;
        assert!(r10 > 0.8, "r10 = {r10}");
        assert!(!g.edges().contains(&(0, 1)));
        // within-cluster pair stays connected
        assert!(g.edges().contains(&(0, 2)));
    }

    #[test]
    fn moderate_valley_matches_fine_grid_oracle() {
        // two overlapping clusters: a shallow valley, where a 10-point
        // section and a 100-point section must agree closely
        let mut vals = Vec::new();
        for k in 0..20 {
            vals.push(k as f64 * 0.05);
            vals.push(2.4 + k as f64 * 0.05);
        }
        let data = DataMatrix::from_column(&vals).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.45]);
        let coarse =
            eval_segment(data.row(0), data.row(1), 10, &data, KernelKind::Gaussian, &bw)
                .unwrap();
        let fine =
            eval_segment(data.row(0), data.row(1), 100, &data, KernelKind::Gaussian, &bw)
                .unwrap();
        let r10 = valley_amplitude(&coarse);
        let r100 = valley_amplitude(&fine);
        assert!(r100 > 0.05, "expected a real valley, r100 = {r100}");
        assert!((r10 - r100).abs() <= 0.05, "r10 = {r10}, r100 = {r100}");
    }

    #[test]
    fn rethreshold_is_idempotent_and_matches_rebuild() {
        let vals: Vec<f64> = (0..24).map(|k| (k as f64 * 0.7).sin() * 3.0).collect();
        let data = DataMatrix::from_column(&vals).unwrap();
        let bw = BandwidthSpec::Fixed(vec![0.4]);
        let g1 = build_pairs(&data, KernelKind::Gaussian, &bw, 10, 0.1).unwrap();
        let same = rethreshold(&g1, 0.1).unwrap();
        assert_eq!(g1.edges(), same.edges());
        let g2 = rethreshold(&g1, 0.3).unwrap();
        let cold = build_pairs(&data, KernelKind::Gaussian, &bw, 10, 0.3).unwrap();
        assert_eq!(g2.edges(), cold.edges());
        assert_eq!(
            g2.amplitudes().unwrap().values(),
            cold.amplitudes().unwrap().values()
        );
    }

    #[test]
    fn rethreshold_near_one_takes_all_finite_amplitudes() {
        let vals: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let data = DataMatrix::from_column(&vals).unwrap();
        let bw = BandwidthSpec::Fixed(vec![1.0]);
        let g = build_pairs(&data, KernelKind::Gaussian, &bw, 10, 0.1).unwrap();
        let wide = rethreshold(&g, 1.0 - 1e-9).unwrap();
        let expected = g
            .amplitudes()
            .unwrap()
            .values()
            .iter()
            .filter(|v| (**v as f64) < 1.0 - 1e-9)
            .count();
        assert_eq!(wide.edges().len(), expected);
    }

    #[test]
    fn rethreshold_without_amplitudes_errors() {
        let data = DataMatrix::from_column(&[1.0, 2.0, 3.0]).unwrap();
        let g = build_unidimensional(&data).unwrap();
        assert!(matches!(
            rethreshold(&g, 0.2),
            Err(Error::MissingAmplitudes)
        ));
    }
}
