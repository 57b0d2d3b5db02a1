//! Incremental (Bowyer-Watson) Delaunay triangulation for d = 2 and d = 3.
//!
//! Conflict predicates are evaluated with a floating-point filter backed by
//! exact rational arithmetic, so the construction is deterministic and valid
//! for any input, including cocircular and cospherical configurations. A
//! point on a circumsphere is by convention *not* in conflict; together with
//! the fixed insertion order (ascending index) this is the degeneracy policy
//! that picks one concrete triangulation among the valid ones.
//!
//! The construction uses a large finite bounding simplex. After removing it,
//! the result is certified: every remaining simplex must have an empty open
//! circumball and every boundary facet must support the full point set on
//! its inner side. If certification fails (conceivable only when
//! circumballs are astronomically larger than the data span), the build is
//! retried with a larger bounding simplex.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

fn big(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

/// Sign of the 2x2 determinant | b-a ; c-a | with an exact fallback.
fn orient2d(a: &[f64], b: &[f64], c: &[f64]) -> i32 {
    let adx = a[0] - c[0];
    let ady = a[1] - c[1];
    let bdx = b[0] - c[0];
    let bdy = b[1] - c[1];
    let det = adx * bdy - ady * bdx;
    let mag = adx.abs() * bdy.abs() + ady.abs() * bdx.abs();
    if det.abs() > 16.0 * EPS * mag {
        return det.signum() as i32;
    }
    // exact
    let adx = big(a[0]) - big(c[0]);
    let ady = big(a[1]) - big(c[1]);
    let bdx = big(b[0]) - big(c[0]);
    let bdy = big(b[1]) - big(c[1]);
    sign_big(&(adx * bdy - ady * bdx))
}

fn sign_big(v: &BigRational) -> i32 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// Sign of det [b-a; c-a; d-a] with an exact fallback.
fn orient3d(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> i32 {
    let m = [
        [a[0] - d[0], a[1] - d[1], a[2] - d[2]],
        [b[0] - d[0], b[1] - d[1], b[2] - d[2]],
        [c[0] - d[0], c[1] - d[1], c[2] - d[2]],
    ];
    let det = det3(&m);
    let mag = perm3(&m);
    if det.abs() > 64.0 * EPS * mag {
        return det.signum() as i32;
    }
    let mb: Vec<Vec<BigRational>> = [(a, d), (b, d), (c, d)]
        .iter()
        .map(|(p, q)| (0..3).map(|j| big(p[j]) - big(q[j])).collect())
        .collect();
    sign_big(&det3_big(&mb))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn perm3(m: &[[f64; 3]; 3]) -> f64 {
    let a = |i: usize, j: usize| m[i][j].abs();
    a(0, 0) * (a(1, 1) * a(2, 2) + a(1, 2) * a(2, 1))
        + a(0, 1) * (a(1, 0) * a(2, 2) + a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) + a(1, 1) * a(2, 0))
}

fn det3_big(m: &[Vec<BigRational>]) -> BigRational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

/// Sign of the incircle determinant for triangle (a, b, c) and query p.
/// Positive when p is strictly inside the circumcircle of a positively
/// oriented triangle.
fn incircle(a: &[f64], b: &[f64], c: &[f64], p: &[f64]) -> i32 {
    let rows: Vec<[f64; 3]> = [a, b, c]
        .iter()
        .map(|q| {
            let dx = q[0] - p[0];
            let dy = q[1] - p[1];
            [dx, dy, dx * dx + dy * dy]
        })
        .collect();
    let m = [rows[0], rows[1], rows[2]];
    let det = det3(&m);
    let mag = perm3(&m);
    if det.abs() > 128.0 * EPS * mag {
        return det.signum() as i32;
    }
    let mb: Vec<Vec<BigRational>> = [a, b, c]
        .iter()
        .map(|q| {
            let dx = big(q[0]) - big(p[0]);
            let dy = big(q[1]) - big(p[1]);
            let norm = &dx * &dx + &dy * &dy;
            vec![dx, dy, norm]
        })
        .collect();
    sign_big(&det3_big(&mb))
}

/// Sign of the insphere determinant for tetrahedron (a, b, c, d) and query
/// p. Positive when p is strictly inside the circumsphere of a positively
/// oriented tetrahedron.
fn insphere(a: &[f64], b: &[f64], c: &[f64], d: &[f64], p: &[f64]) -> i32 {
    let rows: Vec<[f64; 4]> = [a, b, c, d]
        .iter()
        .map(|q| {
            let dx = q[0] - p[0];
            let dy = q[1] - p[1];
            let dz = q[2] - p[2];
            [dx, dy, dz, dx * dx + dy * dy + dz * dz]
        })
        .collect();
    let det = det4(&rows);
    let mag = perm4(&rows);
    if det.abs() > 512.0 * EPS * mag {
        return det.signum() as i32;
    }
    let mb: Vec<Vec<BigRational>> = [a, b, c, d]
        .iter()
        .map(|q| {
            let dx = big(q[0]) - big(p[0]);
            let dy = big(q[1]) - big(p[1]);
            let dz = big(q[2]) - big(p[2]);
            let norm = &dx * &dx + &dy * &dy + &dz * &dz;
            vec![dx, dy, dz, norm]
        })
        .collect();
    sign_big(&det4_big(&mb))
}

fn det4(m: &[[f64; 4]]) -> f64 {
    let minor = |col: usize| -> f64 {
        let mut sub = [[0.0; 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for c in 0..4 {
                if c == col {
                    continue;
                }
                sub[r - 1][cc] = m[r][c];
                cc += 1;
            }
        }
        det3(&sub)
    };
    m[0][0] * minor(0) - m[0][1] * minor(1) + m[0][2] * minor(2) - m[0][3] * minor(3)
}

fn perm4(m: &[[f64; 4]]) -> f64 {
    let minor = |col: usize| -> f64 {
        let mut sub = [[0.0; 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for c in 0..4 {
                if c == col {
                    continue;
                }
                sub[r - 1][cc] = m[r][c];
                cc += 1;
            }
        }
        perm3(&sub)
    };
    m[0][0].abs() * minor(0)
        + m[0][1].abs() * minor(1)
        + m[0][2].abs() * minor(2)
        + m[0][3].abs() * minor(3)
}

fn det4_big(m: &[Vec<BigRational>]) -> BigRational {
    let minor = |col: usize| -> BigRational {
        let sub: Vec<Vec<BigRational>> = (1..4)
            .map(|r| {
                (0..4)
                    .filter(|c| *c != col)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        det3_big(&sub)
    };
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut acc = zero;
    for (col, sgn) in [(0usize, 1), (1, -1), (2, 1), (3, -1)] {
        let term = &m[0][col] * minor(col);
        acc += if sgn > 0 { term } else { -term };
    }
    acc
}

struct Simplex {
    verts: Vec<u32>,
    alive: bool,
}

struct Triangulator<'a> {
    points: Vec<Vec<f64>>, // real points followed by d+1 bounding vertices
    dim: usize,
    simplices: Vec<Simplex>,
    n_real: usize,
    orient_cache: Vec<i32>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<'a> Triangulator<'a> {
    fn new(points: Vec<Vec<f64>>, dim: usize, expand: f64) -> Self {
        let n_real = points.len();
        let mut pts = points;
        // bounding simplex around the data box, blown up by `expand`
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in &pts {
            for j in 0..dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let mut center = vec![0.0; dim];
        let mut w: f64 = 1.0;
        for j in 0..dim {
            center[j] = 0.5 * (lo[j] + hi[j]);
            w = w.max(hi[j] - lo[j]);
        }
        let r = w * expand;
        // a regular-ish simplex with circumradius well beyond the data
        match dim {
            2 => {
                pts.push(vec![center[0], center[1] + 2.0 * r]);
                pts.push(vec![center[0] - 2.0 * r, center[1] - 2.0 * r]);
                pts.push(vec![center[0] + 2.0 * r, center[1] - 2.0 * r]);
            }
            3 => {
                pts.push(vec![center[0], center[1], center[2] + 3.0 * r]);
                pts.push(vec![center[0] - 3.0 * r, center[1] - 2.0 * r, center[2] - r]);
                pts.push(vec![center[0] + 3.0 * r, center[1] - 2.0 * r, center[2] - r]);
                pts.push(vec![center[0], center[1] + 3.0 * r, center[2] - r]);
            }
            _ => unreachable!("dimension checked by caller"),
        }
        let first = Simplex {
            verts: ((n_real as u32)..(n_real + dim + 1) as u32).collect(),
            alive: true,
        };
        let mut t = Self {
            points: pts,
            dim,
            simplices: vec![first],
            n_real,
            orient_cache: Vec::new(),
            _marker: std::marker::PhantomData,
        };
        t.orient_cache = vec![t.orientation(0)];
        t
    }

    fn pt(&self, v: u32) -> &[f64] {
        &self.points[v as usize]
    }

    fn orientation(&self, s: usize) -> i32 {
        let v = &self.simplices[s].verts;
        match self.dim {
            2 => orient2d(self.pt(v[0]), self.pt(v[1]), self.pt(v[2])),
            _ => orient3d(self.pt(v[0]), self.pt(v[1]), self.pt(v[2]), self.pt(v[3])),
        }
    }

    /// Strict conflict test: p inside the open circumball of simplex s.
    fn in_conflict(&self, s: usize, p: &[f64]) -> bool {
        let v = &self.simplices[s].verts;
        let o = self.orient_cache[s];
        debug_assert!(o != 0, "degenerate simplex in triangulation");
        let ins = match self.dim {
            2 => incircle(self.pt(v[0]), self.pt(v[1]), self.pt(v[2]), p),
            _ => insphere(
                self.pt(v[0]),
                self.pt(v[1]),
                self.pt(v[2]),
                self.pt(v[3]),
                p,
            ),
        };
        ins == o
    }

    fn insert(&mut self, idx: u32) -> Result<()> {
        let p = self.points[idx as usize].clone();
        let conflict: Vec<usize> = (0..self.simplices.len())
            .filter(|&s| self.simplices[s].alive && self.in_conflict(s, &p))
            .collect();
        if conflict.is_empty() {
            return Err(Error::DegenerateGeometry(
                "inserted point conflicts with no simplex; bounding simplex too small".into(),
            ));
        }
        // cavity boundary = facets appearing exactly once among conflict simplices
        use std::collections::HashMap;
        let mut facets: HashMap<Vec<u32>, usize> = HashMap::new();
        for &s in &conflict {
            let verts = &self.simplices[s].verts;
            for skip in 0..verts.len() {
                let mut f: Vec<u32> = verts
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, v)| *v)
                    .collect();
                f.sort_unstable();
                *facets.entry(f).or_insert(0) += 1;
            }
        }
        for &s in &conflict {
            self.simplices[s].alive = false;
        }
        let mut boundary: Vec<Vec<u32>> = facets
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| f)
            .collect();
        boundary.sort_unstable();
        for f in boundary {
            let mut verts = f;
            verts.push(idx);
            let s = Simplex { verts, alive: true };
            self.simplices.push(s);
            let o = self.orientation(self.simplices.len() - 1);
            if o == 0 {
                return Err(Error::DegenerateGeometry(
                    "degenerate simplex created during insertion".into(),
                ));
            }
            self.orient_cache.push(o);
        }
        Ok(())
    }

    /// Simplices made of real vertices only.
    fn real_simplices(&self) -> Vec<&Simplex> {
        self.simplices
            .iter()
            .filter(|s| s.alive && s.verts.iter().all(|&v| (v as usize) < self.n_real))
            .collect()
    }

    /// Empty-circumball and hull-coverage certification over the real part.
    fn certify(&self) -> bool {
        let real = self.real_simplices();
        if real.is_empty() {
            return false;
        }
        // (a) no real point strictly inside any real simplex circumball
        for (s_idx, s) in self.simplices.iter().enumerate() {
            if !s.alive || s.verts.iter().any(|&v| (v as usize) >= self.n_real) {
                continue;
            }
            for q in 0..self.n_real {
                if s.verts.contains(&(q as u32)) {
                    continue;
                }
                if self.in_conflict(s_idx, &self.points[q]) {
                    return false;
                }
            }
        }
        // (b) every boundary facet of the real complex supports all points
        use std::collections::HashMap;
        let mut facets: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        for s in &real {
            for skip in 0..s.verts.len() {
                let mut f: Vec<u32> = s
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, v)| *v)
                    .collect();
                f.sort_unstable();
                facets.entry(f).or_default().push(s.verts[skip]);
            }
        }
        for (f, opposite) in facets {
            if opposite.len() != 1 {
                continue; // interior facet
            }
            let inner = self.pt(opposite[0]);
            let side = |q: &[f64]| -> i32 {
                match self.dim {
                    2 => orient2d(self.pt(f[0]), self.pt(f[1]), q),
                    _ => orient3d(self.pt(f[0]), self.pt(f[1]), self.pt(f[2]), q),
                }
            };
            let inner_side = side(inner);
            if inner_side == 0 {
                return false;
            }
            for q in 0..self.n_real {
                let qs = side(&self.points[q]);
                if qs != 0 && qs != inner_side {
                    return false;
                }
            }
        }
        true
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        use std::collections::BTreeSet;
        let mut set = BTreeSet::new();
        for s in self.real_simplices() {
            for a in 0..s.verts.len() {
                for b in (a + 1)..s.verts.len() {
                    let (i, j) = (s.verts[a].min(s.verts[b]), s.verts[a].max(s.verts[b]));
                    set.insert((i, j));
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Edge set of the Delaunay triangulation of `rows` (each of length 2 or 3).
///
/// Exact duplicate rows are collapsed before triangulating; each duplicate is
/// connected to its representative so the connectivity seen by level-set
/// scans is unchanged.
pub fn delaunay_edges(rows: &[&[f64]], dim: usize) -> Result<Vec<(u32, u32)>> {
    assert!(dim == 2 || dim == 3);
    // collapse exact duplicates, keeping first occurrence as representative
    use std::collections::HashMap;
    let mut rep_of: Vec<u32> = Vec::with_capacity(rows.len());
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    let mut uniq_orig: Vec<u32> = Vec::new();
    let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
    for row in rows {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        match seen.get(&key) {
            Some(&u) => rep_of.push(u),
            None => {
                let u = uniq.len() as u32;
                seen.insert(key, u);
                uniq.push(row.to_vec());
                uniq_orig.push(rep_of.len() as u32);
                rep_of.push(u);
            }
        }
    }
    if uniq.len() < dim + 1 {
        return Err(Error::TooFewObservations {
            needed: dim + 1,
            got: uniq.len(),
        });
    }

    let mut expand = (1u64 << 20) as f64;
    let mut last_err = None;
    for _attempt in 0..3 {
        let mut tri = Triangulator::new(uniq.clone(), dim, expand);
        let mut failed = false;
        for i in 0..uniq.len() {
            if let Err(e) = tri.insert(i as u32) {
                last_err = Some(e);
                failed = true;
                break;
            }
        }
        if !failed && tri.certify() {
            let mut edges: Vec<(u32, u32)> = tri
                .edges()
                .into_iter()
                .map(|(a, b)| {
                    let (i, j) = (uniq_orig[a as usize], uniq_orig[b as usize]);
                    (i.min(j), i.max(j))
                })
                .collect();
            // attach duplicates to their representatives
            for (orig, &u) in rep_of.iter().enumerate() {
                let rep = uniq_orig[u as usize];
                if orig as u32 != rep {
                    edges.push((rep.min(orig as u32), rep.max(orig as u32)));
                }
            }
            edges.sort_unstable();
            edges.dedup();
            return Ok(edges);
        }
        expand *= expand; // certification failure: push the box much further out
    }
    Err(last_err.unwrap_or_else(|| {
        Error::DegenerateGeometry(
            "point configuration spans no full-dimensional simplex".into(),
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicate_signs() {
        // counterclockwise unit triangle, origin inside its circumcircle
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        let c = [-1.0, 0.0];
        assert_eq!(orient2d(&a, &b, &c), 1);
        assert_eq!(incircle(&a, &b, &c, &[0.0, 0.0]), 1);
        assert_eq!(incircle(&a, &b, &c, &[0.0, -1.0]), 0); // on the circle
        assert_eq!(incircle(&a, &b, &c, &[0.0, -2.0]), -1);
        // positively oriented tetra and its circumsphere
        let t = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let o = orient3d(&t[0], &t[1], &t[2], &t[3]);
        assert!(o != 0);
        let ins = insphere(&t[0], &t[1], &t[2], &t[3], &[0.0, 0.0, 0.0]);
        assert_eq!(ins, o, "centre is inside, sign must match orientation");
    }

    #[test]
    fn triangle_gives_all_edges() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let edges = delaunay_edges(&rows, 2).unwrap();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn cocircular_square_has_one_diagonal() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let edges = delaunay_edges(&rows, 2).unwrap();
        assert_eq!(edges.len(), 5, "4 hull edges plus exactly one diagonal");
        let diagonals: Vec<_> = edges
            .iter()
            .filter(|(a, b)| (*a, *b) == (0, 2) || (*a, *b) == (1, 3))
            .collect();
        assert_eq!(diagonals.len(), 1);
        // deterministic: a second run gives the same edge set
        let again = delaunay_edges(&rows, 2).unwrap();
        assert_eq!(edges, again);
    }

    #[test]
    fn collinear_points_error() {
        let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64, 2.0 * k as f64]).collect();
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        assert!(delaunay_edges(&rows, 2).is_err());
    }

    #[test]
    fn too_few_points_error() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        assert!(matches!(
            delaunay_edges(&rows, 2),
            Err(Error::TooFewObservations { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn duplicates_attach_to_representative() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0], // duplicate of 0
        ];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let edges = delaunay_edges(&rows, 2).unwrap();
        assert!(edges.contains(&(0, 3)));
        assert_eq!(edges.len(), 4);
    }

    #[test]
    fn single_tetrahedron() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let edges = delaunay_edges(&rows, 3).unwrap();
        assert_eq!(edges.len(), 6);
    }

    /// Brute-force check: every returned 2-D edge admits an empty circumdisk
    /// through its endpoints (witnessed by some third point or by the edge
    /// midpoint disk when the pair is on the hull).
    fn brute_delaunay_edge(pts: &[Vec<f64>], i: usize, j: usize) -> bool {
        let n = pts.len();
        // diametral disk first
        let cx = 0.5 * (pts[i][0] + pts[j][0]);
        let cy = 0.5 * (pts[i][1] + pts[j][1]);
        let r2 = (pts[i][0] - cx).powi(2) + (pts[i][1] - cy).powi(2);
        let diametral_empty = (0..n).all(|q| {
            q == i || q == j || (pts[q][0] - cx).powi(2) + (pts[q][1] - cy).powi(2) >= r2 - 1e-12
        });
        if diametral_empty {
            return true;
        }
        'witness: for k in 0..n {
            if k == i || k == j {
                continue;
            }
            if orient2d(&pts[i], &pts[j], &pts[k]) == 0 {
                continue;
            }
            for q in 0..n {
                if q == i || q == j || q == k {
                    continue;
                }
                let o = orient2d(&pts[i], &pts[j], &pts[k]);
                let ins = incircle(&pts[i], &pts[j], &pts[k], &pts[q]);
                if ins == o {
                    continue 'witness;
                }
            }
            return true;
        }
        false
    }

    #[test]
    fn random_points_pass_circumcircle_oracle() {
        // deterministic pseudo-random 2-D cloud
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64
        };
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![next() * 10.0, next() * 10.0]).collect();
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let edges = delaunay_edges(&rows, 2).unwrap();
        assert!(edges.len() >= 50); // a triangulation of 50 points has >= n edges
        for (a, b) in edges {
            assert!(
                brute_delaunay_edge(&pts, a as usize, b as usize),
                "edge ({a},{b}) fails the empty-circumcircle oracle"
            );
        }
    }
}
