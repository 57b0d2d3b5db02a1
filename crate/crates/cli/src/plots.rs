//! Static SVG renderings of run artifacts: mode function, cluster tree,
//! labelled scatter matrix and per-cluster silhouette bars.

use std::fmt::Write as _;

use densitree::levelset::TreeNode;
use densitree::DataMatrix;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn color(label: usize) -> &'static str {
    PALETTE[(label - 1) % PALETTE.len()]
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

struct Frame {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin) * self.width
    }
    fn y(&self, v: f64) -> f64 {
        // SVG y grows downward
        self.y0 + self.height - (v - self.ymin) / (self.ymax - self.ymin) * self.height
    }
    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
            self.x0, self.y0, self.width, self.height
        );
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{xlabel}</text>\n",
            self.x0 + self.width / 2.0,
            self.y0 + self.height + 32.0
        );
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{ylabel}</text>\n",
            self.x0 - 34.0,
            self.y0 + self.height / 2.0,
            self.x0 - 34.0,
            self.y0 + self.height / 2.0
        );
        for k in 0..=4 {
            let xv = self.xmin + (self.xmax - self.xmin) * k as f64 / 4.0;
            let yv = self.ymin + (self.ymax - self.ymin) * k as f64 / 4.0;
            let _ = write!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
                 text-anchor=\"middle\">{:.2}</text>\n",
                self.x(xv),
                self.y0 + self.height + 14.0,
                xv
            );
            let _ = write!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
                 text-anchor=\"end\">{:.2}</text>\n",
                self.x0 - 4.0,
                self.y(yv) + 3.0,
                yv
            );
        }
    }
}

/// Step plot of the mode function.
pub fn mode_function_svg(grid: &[f64], counts: &[usize]) -> String {
    let (w, h) = (520.0, 360.0);
    let mut out = svg_open(w, h);
    let max_m = counts.iter().copied().max().unwrap_or(1) as f64;
    let f = Frame {
        x0: 56.0,
        y0: 20.0,
        width: w - 80.0,
        height: h - 80.0,
        xmin: 0.0,
        xmax: 1.0,
        ymin: 0.0,
        ymax: max_m + 0.5,
    };
    f.axes(&mut out, "p", "m(p)");
    let mut path = String::new();
    let mut prev = 0.0f64;
    let _ = write!(path, "M {} {}", f.x(0.0), f.y(0.0));
    for (p, m) in grid.iter().zip(counts) {
        let _ = write!(path, " L {} {}", f.x(*p), f.y(prev));
        let _ = write!(path, " L {} {}", f.x(*p), f.y(*m as f64));
        prev = *m as f64;
    }
    let _ = write!(path, " L {} {}", f.x(1.0), f.y(prev));
    let _ = write!(path, " L {} {}", f.x(1.0), f.y(0.0));
    let _ = write!(
        out,
        "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>\n",
        PALETTE[0]
    );
    out.push_str("</svg>\n");
    out
}

/// Dendrogram with the root (h = 1) at the top.
pub fn tree_svg(root: &TreeNode) -> String {
    let (w, h) = (520.0, 420.0);
    let mut out = svg_open(w, h);
    let f = Frame {
        x0: 56.0,
        y0: 20.0,
        width: w - 90.0,
        height: h - 90.0,
        xmin: 0.0,
        xmax: 1.0,
        ymin: 0.0,
        ymax: 1.0,
    };
    // leaf x slots in tree order
    fn count_leaves(n: &TreeNode) -> usize {
        if n.is_leaf() {
            1
        } else {
            n.children.iter().map(count_leaves).sum()
        }
    }
    let total = count_leaves(root).max(1);
    fn layout(
        n: &TreeNode,
        next_slot: &mut usize,
        total: usize,
        f: &Frame,
        out: &mut String,
    ) -> f64 {
        if n.is_leaf() {
            let x = (*next_slot as f64 + 0.5) / total as f64;
            *next_slot += 1;
            let px = f.x(x);
            let _ = write!(
                out,
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#333\"/>\n",
                f.y(n.height),
                f.y(0.0)
            );
            let _ = write!(
                out,
                "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
                 text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
                f.y(0.0) + 16.0,
                color(n.label.unwrap_or(1)),
                n.label.unwrap_or(0)
            );
            return x;
        }
        let xs: Vec<f64> = n
            .children
            .iter()
            .map(|c| {
                let cx = layout(c, next_slot, total, f, out);
                // riser from the child's height up to this node's height
                let _ = write!(
                    out,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
                    f.x(cx),
                    f.y(c.height),
                    f.x(cx),
                    f.y(n.height)
                );
                cx
            })
            .collect();
        let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
            f.x(xmin),
            f.y(n.height),
            f.x(xmax),
            f.y(n.height)
        );
        (xmin + xmax) / 2.0
    }
    let mut slot = 0usize;
    let mut body = String::new();
    layout(root, &mut slot, total, &f, &mut body);
    f.axes(&mut out, "clusters", "h");
    out.push_str(&body);
    out.push_str("</svg>\n");
    out
}

/// Scatterplot matrix of up to the first six coordinates, colored by label.
pub fn scatter_svg(data: &DataMatrix, labels: &[Option<usize>], names: &[String]) -> String {
    let d = data.ncols().min(6);
    let panel = 150.0;
    let margin = 40.0;
    let size = margin * 2.0 + panel * d as f64;
    let mut out = svg_open(size, size);
    let mut ranges = Vec::new();
    for j in 0..d {
        let col = data.column(j);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = (hi - lo).max(1e-12) * 0.05;
        ranges.push((lo - pad, hi + pad));
    }
    for row in 0..d {
        for col in 0..d {
            let x0 = margin + panel * col as f64;
            let y0 = margin + panel * row as f64;
            let _ = write!(
                out,
                "<rect x=\"{x0}\" y=\"{y0}\" width=\"{panel}\" height=\"{panel}\" \
                 fill=\"none\" stroke=\"#999\" stroke-width=\"0.6\"/>\n"
            );
            if row == col {
                let name = names.get(row).cloned().unwrap_or_else(|| format!("x{row}"));
                let _ = write!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
                     text-anchor=\"middle\">{name}</text>\n",
                    x0 + panel / 2.0,
                    y0 + panel / 2.0
                );
                continue;
            }
            let (xlo, xhi) = ranges[col];
            let (ylo, yhi) = ranges[row];
            for i in 0..data.nrows() {
                let px = x0 + (data.get(i, col) - xlo) / (xhi - xlo) * panel;
                let py = y0 + panel - (data.get(i, row) - ylo) / (yhi - ylo) * panel;
                let c = labels[i].map(color).unwrap_or("#bbbbbb");
                let _ = write!(
                    out,
                    "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"1.8\" fill=\"{c}\" \
                     fill-opacity=\"0.8\"/>\n"
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Silhouette bars grouped by cluster, each cluster sorted by decreasing
/// dbs.
pub fn dbs_svg(values: &[f64], labels: &[usize]) -> String {
    let (w, h) = (640.0, 360.0);
    let mut out = svg_open(w, h);
    let f = Frame {
        x0: 56.0,
        y0: 20.0,
        width: w - 90.0,
        height: h - 80.0,
        xmin: 0.0,
        xmax: values.len() as f64,
        ymin: -1.0,
        ymax: 1.0,
    };
    f.axes(&mut out, "observations (by cluster)", "dbs");
    let m = labels.iter().copied().max().unwrap_or(1);
    let mut x = 0usize;
    for cluster in 1..=m {
        let mut vals: Vec<f64> = values
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == cluster)
            .map(|(v, _)| *v)
            .collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for v in vals {
            let px = f.x(x as f64);
            let bw = (f.width / values.len() as f64).max(0.5);
            let (top, height) = if v >= 0.0 {
                (f.y(v), f.y(0.0) - f.y(v))
            } else {
                (f.y(0.0), f.y(v) - f.y(0.0))
            };
            let _ = write!(
                out,
                "<rect x=\"{px:.2}\" y=\"{top:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" \
                 fill=\"{}\"/>\n",
                height.max(0.1),
                color(cluster)
            );
            x += 1;
        }
    }
    let _ = write!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\" stroke-dasharray=\"3 2\"/>\n",
        f.x0,
        f.y(0.0),
        f.x0 + f.width,
        f.y(0.0)
    );
    out.push_str("</svg>\n");
    out
}
