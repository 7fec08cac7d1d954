//! Independent reference assembly of A, B and M for k = 1 on small meshes.
//!
//! Everything is done in physical coordinates: the local BDM space is the
//! full quadratic vector space in monomials, the degrees of freedom are the
//! moment functionals written out by hand, and integrals use a collapsed
//! 5-point Gauss rule coded here. Nothing is shared with the library except
//! the mesh topology.

#![allow(dead_code, clippy::needless_range_loop)]

use mixest::mesh::{Mesh, Point2};

const GL5_X: [f64; 5] = [0.046910077030668, 0.2307653449471585, 0.5, 0.7692346550528415, 0.953089922969332];
const GL5_W: [f64; 5] =
    [0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324, 0.11846344252809454];

/// Collapsed Gauss rule on the reference triangle, exact to degree 8.
pub fn triangle_rule() -> Vec<([f64; 2], f64)> {
    let mut out = Vec::new();
    for (i, &s) in GL5_X.iter().enumerate() {
        for (j, &t) in GL5_X.iter().enumerate() {
            out.push(([s * (1.0 - t), t], GL5_W[i] * GL5_W[j] * (1.0 - t)));
        }
    }
    out
}

/// Degree-1 orthonormal modes on the reference triangle.
pub fn modes(x: f64, y: f64) -> [f64; 3] {
    [2f64.sqrt(), 12f64.sqrt() * (2.0 * x + y - 1.0), 2.0 * (3.0 * y - 1.0)]
}

/// Orthonormal Legendre polynomials on [0, 1] up to degree 2.
pub fn legendre(t: f64) -> [f64; 3] {
    [1.0, 3f64.sqrt() * (2.0 * t - 1.0), 5f64.sqrt() * (6.0 * t * t - 6.0 * t + 1.0)]
}

/// Quadratic vector monomial basis: index c·6 + m with m over
/// 1, x, y, x², xy, y². Returns value and divergence.
pub fn monomial(i: usize, x: f64, y: f64) -> ([f64; 2], f64) {
    let (c, m) = (i / 6, i % 6);
    let (v, dx, dy) = match m {
        0 => (1.0, 0.0, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (y, 0.0, 1.0),
        3 => (x * x, 2.0 * x, 0.0),
        4 => (x * y, y, x),
        _ => (y * y, 0.0, 2.0 * y),
    };
    if c == 0 {
        ([v, 0.0], dx)
    } else {
        ([0.0, v], dy)
    }
}

struct Affine {
    v0: Point2,
    j: [[f64; 2]; 2],
    det: f64,
}

impl Affine {
    fn new(p: [Point2; 3]) -> Self {
        let j = [[p[1].x - p[0].x, p[2].x - p[0].x], [p[1].y - p[0].y, p[2].y - p[0].y]];
        Self { v0: p[0], j, det: j[0][0] * j[1][1] - j[0][1] * j[1][0] }
    }
    fn map(&self, r: [f64; 2]) -> (f64, f64) {
        (self.v0.x + self.j[0][0] * r[0] + self.j[0][1] * r[1], self.v0.y + self.j[1][0] * r[0] + self.j[1][1] * r[1])
    }
}

/// Solves X·D = I for the 12×12 moment matrix by Gauss-Jordan elimination
/// with partial pivoting; returns D⁻¹.
fn invert(mut d: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| d[a][col].abs().total_cmp(&d[b][col].abs())).unwrap();
        d.swap(col, piv);
        inv.swap(col, piv);
        let p = d[col][col];
        assert!(p.abs() > 1e-12, "singular moment matrix");
        for j in 0..n {
            d[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = d[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        d[r][j] -= f * d[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

pub struct Oracle {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
}

/// Global A (Σ×Σ), B (U×Σ) and M (U×U) for k = 1.
pub fn assemble_k1(mesh: &Mesh) -> Oracle {
    let ne = mesh.num_edges();
    let nt = mesh.num_triangles();
    let (ns, nu) = (3 * ne + 3 * nt, 3 * nt);
    let mut a = vec![vec![0.0; ns]; ns];
    let mut b = vec![vec![0.0; ns]; nu];
    let mut m = vec![vec![0.0; nu]; nu];
    let rule = triangle_rule();
    for t in 0..nt {
        let tri = mesh.triangles()[t];
        let f = Affine::new(tri.map(|v| mesh.vertices()[v]));
        // moment matrix: rows are functionals, columns monomials
        let mut d = vec![vec![0.0; 12]; 12];
        let mut glob = [0usize; 12];
        for (i, &e) in mesh.edge_of_triangle(t).iter().enumerate() {
            let [va, vb] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[va], mesh.vertices()[vb]);
            let rot = [pb.y - pa.y, -(pb.x - pa.x)];
            for j in 0..3 {
                glob[3 * i + j] = 3 * e + j;
                for c in 0..12 {
                    d[3 * i + j][c] = GL5_X
                        .iter()
                        .zip(GL5_W)
                        .map(|(&s, w)| {
                            let (v, _) = monomial(c, pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y));
                            w * (v[0] * rot[0] + v[1] * rot[1]) * legendre(s)[j]
                        })
                        .sum();
                }
            }
        }
        for (i, g) in glob.iter_mut().enumerate().skip(9) {
            *g = 3 * ne + 3 * t + (i - 9);
        }
        for &(r, w) in &rule {
            let (x, y) = f.map(r);
            let wq = w * f.det;
            let psi = modes(r[0], r[1]);
            // bubble 27√2 xy(1-x-y) on the reference, curl (∂y, -∂x), Piola mapped
            let s2 = 27.0 * 2f64.sqrt();
            let (bx, by) = (r[0], r[1]);
            let db = [s2 * by * (1.0 - 2.0 * bx - by), s2 * bx * (1.0 - bx - 2.0 * by)];
            let lh = [db[1], -db[0]];
            let l = [(f.j[0][0] * lh[0] + f.j[0][1] * lh[1]) / f.det, (f.j[1][0] * lh[0] + f.j[1][1] * lh[1]) / f.det];
            for c in 0..12 {
                let (v, div) = monomial(c, x, y);
                d[9][c] += wq * div * psi[1];
                d[10][c] += wq * div * psi[2];
                d[11][c] += wq * (v[0] * l[0] + v[1] * l[1]);
            }
        }
        let dinv = invert(d);
        // basis function q = Σ_c dinv[c][q] monomial_c
        let eval = |q: usize, x: f64, y: f64| {
            let mut v = [0.0; 2];
            let mut div = 0.0;
            for c in 0..12 {
                let (mv, md) = monomial(c, x, y);
                v[0] += dinv[c][q] * mv[0];
                v[1] += dinv[c][q] * mv[1];
                div += dinv[c][q] * md;
            }
            (v, div)
        };
        for &(r, w) in &rule {
            let (x, y) = f.map(r);
            let wq = w * f.det;
            let phys: Vec<f64> = modes(r[0], r[1]).iter().map(|p| p / f.det.sqrt()).collect();
            let vals: Vec<([f64; 2], f64)> = (0..12).map(|q| eval(q, x, y)).collect();
            for p in 0..12 {
                for q in 0..12 {
                    a[glob[p]][glob[q]] += wq * (vals[p].0[0] * vals[q].0[0] + vals[p].0[1] * vals[q].0[1]);
                }
                for (i, ph) in phys.iter().enumerate() {
                    b[3 * t + i][glob[p]] += wq * vals[p].1 * ph;
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    m[3 * t + i][3 * t + j] += wq * phys[i] * phys[j];
                }
            }
        }
    }
    Oracle { a, b, m }
}

/// Two skewed triangles sharing one edge.
pub fn two_triangle_mesh() -> Mesh {
    let v = vec![Point2::new(0.0, 0.0), Point2::new(1.3, 0.1), Point2::new(0.2, 0.9), Point2::new(1.1, 1.2)];
    Mesh::from_triangles(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap()
}

/// Largest entry-wise difference relative to the largest entry.
pub fn rel_diff(lib: &mixest::assembly::SparseMatrix, oracle: &[Vec<f64>]) -> f64 {
    assert_eq!((lib.nrows(), lib.ncols()), (oracle.len(), oracle[0].len()));
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (r, row) in oracle.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            diff = diff.max((lib.get(r, c) - v).abs());
            scale = scale.max(v.abs());
        }
    }
    diff / scale
}
