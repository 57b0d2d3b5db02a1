// temporary development parity check against the prototype; removed later
use densitree::pipeline::{run_cluster, RunConfig};
use densitree::DataMatrix;

fn load_wine() -> (DataMatrix, Vec<usize>) {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wine.csv");
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows = Vec::new();
    let mut cult = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            continue;
        }
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        cult.push(vals[13] as usize);
        rows.push(vals[..13].to_vec());
    }
    (DataMatrix::from_rows(&rows).unwrap(), cult)
}

#[test]
#[ignore]
fn wine_subset_parity() {
    let (wine, cult) = load_wine();
    let sub = wine.select_columns(&[0, 3, 6]).unwrap();
    let art = run_cluster(&sub, &RunConfig::default()).unwrap();
    println!("graphtype: {:?}", art.effective.graphtype);
    println!("edges: {}", art.graph.edges().len());
    println!("M = {}", art.cores.n_clusters);
    println!("core counts: {:?}", art.cores.class_counts());
    println!(
        "NA = {}",
        art.cores.labels.iter().filter(|l| l.is_none()).count()
    );
    let mut finals = vec![0usize; 4];
    for l in art.labels.iter().flatten() {
        finals[*l] += 1;
    }
    println!("final counts: {:?}", &finals[1..]);
    // agreement under best label matching (3x3)
    let mut best = 0;
    let perms = [
        [1, 2, 3],
        [1, 3, 2],
        [2, 1, 3],
        [2, 3, 1],
        [3, 1, 2],
        [3, 2, 1],
    ];
    for p in perms {
        let agree = art
            .labels
            .iter()
            .zip(&cult)
            .filter(|(l, c)| p[l.unwrap() - 1] == **c)
            .count();
        best = best.max(agree);
    }
    println!("agreement: {best}/178");
    let heights: Vec<f64> = collect_merge_heights(&art.tree.root);
    println!("merge heights: {heights:?}");
    let pos = art
        .dbs
        .as_ref()
        .unwrap()
        .values
        .iter()
        .filter(|v| **v > 0.0)
        .count();
    println!("dbs > 0: {pos}/178");
}

#[test]
#[ignore]
fn wine_full_parity() {
    use densitree::pipeline::BandwidthType;
    let (wine, cult) = load_wine();
    for (hmult, tag) in [(None, "defaults"), (Some(1.2), "oversmoothed")] {
        let cfg = RunConfig {
            bwtype: BandwidthType::Adaptive,
            hmult,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let art = run_cluster(&wine, &cfg).unwrap();
        println!(
            "{tag}: graphtype {:?} M = {} cores {:?} NA = {} elapsed {:?}",
            art.effective.graphtype,
            art.cores.n_clusters,
            art.cores.class_counts(),
            art.cores.labels.iter().filter(|l| l.is_none()).count(),
            t0.elapsed()
        );
        let m = art.cores.n_clusters;
        let mut finals = vec![0usize; m + 1];
        for l in art.labels.iter().flatten() {
            finals[*l] += 1;
        }
        println!("  finals: {:?}", &finals[1..]);
        // best merge of M clusters into the 3 cultivars
        let mut best = 0;
        let mut assign = vec![1usize; m];
        loop {
            let agree = art
                .labels
                .iter()
                .zip(&cult)
                .filter(|(l, c)| assign[l.unwrap() - 1] == **c)
                .count();
            best = best.max(agree);
            let mut k = 0;
            loop {
                if k == m {
                    break;
                }
                assign[k] += 1;
                if assign[k] <= 3 {
                    break;
                }
                assign[k] = 1;
                k += 1;
            }
            if k == m {
                break;
            }
        }
        println!("  best-merge agreement: {best}/178");
    }
}

fn collect_merge_heights(node: &densitree::levelset::TreeNode) -> Vec<f64> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if !n.is_leaf() && n.height < 1.0 {
            out.push(n.height);
        }
        for c in &n.children {
            stack.push(c);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

#[test]
#[ignore]
fn wine_subset_delaunay_edges_match_qhull() {
    let (wine, _) = load_wine();
    let sub = wine.select_columns(&[0, 3, 6]).unwrap();
    let sds = sub.column_sds().unwrap();
    let scaled = sub.scale_columns(&sds).unwrap();
    let g = densitree::graph::build_delaunay(&scaled).unwrap();
    let mut out = String::new();
    for (i, j) in g.edges() {
        out.push_str(&format!("{i},{j}\n"));
    }
    std::fs::write("/tmp/rust_edges.csv", out).unwrap();
    println!("rust edges: {}", g.edges().len());
}
