//! Global degrees of freedom, sparse matrices and the mixed system matrices.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::femcore::geometry::{reference_edge_point, ElementGeometry};
use crate::femcore::poly::{dim_p, dubiner, legendre01, Jet};
use crate::femcore::quadrature::{edge_rule, quadrature, QuadRule};
use crate::femcore::spaces::{lattice_nodes, raw_div_table, HdivFamily};
use crate::mesh::{Mesh, Point2};

/// Identifies a global finite element space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceTag {
    /// Discontinuous P^m, orthonormal modal basis per element.
    ScalarDg(usize),
    /// Continuous P^m, nodal basis on the principal lattice.
    Lagrange(usize),
    /// BDM of degree k + 1.
    Bdm(usize),
    /// Reduced-trace space of degree k + 3.
    Reduced(usize),
}

/// Element-to-global index map. Numbering: edges first in edge order, then
/// element interiors in element order; Lagrange spaces start with vertices.
#[derive(Clone, Debug)]
pub struct DofMap {
    tag: SpaceTag,
    n_dofs: usize,
    n_local: usize,
    local: Vec<usize>,
}

impl DofMap {
    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn element(&self, t: usize) -> &[usize] {
        &self.local[t * self.n_local..(t + 1) * self.n_local]
    }
}

pub fn build_dofmap(mesh: &Mesh, tag: SpaceTag) -> DofMap {
    let nt = mesh.num_triangles();
    let ne = mesh.num_edges();
    match tag {
        SpaceTag::ScalarDg(m) => {
            let n = dim_p(m);
            DofMap { tag, n_dofs: nt * n, n_local: n, local: (0..nt * n).collect() }
        }
        SpaceTag::Bdm(k) | SpaceTag::Reduced(k) => {
            let per_edge = k + 2;
            let n_int = match tag {
                SpaceTag::Bdm(_) => k * (k + 2),
                _ => (k + 2) * (k + 4),
            };
            let n_local = 3 * per_edge + n_int;
            let mut local = Vec::with_capacity(nt * n_local);
            for t in 0..nt {
                for e in mesh.edge_of_triangle(t) {
                    local.extend(e * per_edge..(e + 1) * per_edge);
                }
                let base = ne * per_edge + t * n_int;
                local.extend(base..base + n_int);
            }
            DofMap { tag, n_dofs: ne * per_edge + nt * n_int, n_local, local }
        }
        SpaceTag::Lagrange(m) => lagrange_dofmap(mesh, m),
    }
}

fn lagrange_dofmap(mesh: &Mesh, m: usize) -> DofMap {
    assert!(m >= 1, "continuous spaces need degree >= 1");
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let nt = mesh.num_triangles();
    let per_edge = m - 1;
    let n_int = if m >= 3 { (m - 1) * (m - 2) / 2 } else { 0 };
    let nodes = lattice_nodes(m);
    let mut local = Vec::with_capacity(nt * nodes.len());
    for t in 0..nt {
        let tri = mesh.triangles()[t];
        let eot = mesh.edge_of_triangle(t);
        let sgn = mesh.edge_sign(t);
        let mut interior = 0;
        for node in &nodes {
            let i = (node[0] * m as f64).round() as usize;
            let j = (node[1] * m as f64).round() as usize;
            // (local edge, position along its counter-clockwise traversal)
            let at_vertex = (i, j) == (0, 0) || (i, j) == (m, 0) || (i, j) == (0, m);
            let on_edge = if at_vertex {
                None
            } else if i + j == m {
                Some((0, j))
            } else if i == 0 {
                Some((1, m - j))
            } else if j == 0 {
                Some((2, i))
            } else {
                let idx = nv + ne * per_edge + t * n_int + interior;
                interior += 1;
                local.push(idx);
                continue;
            };
            let idx = match on_edge {
                None => {
                    let v = if i == m {
                        1
                    } else if j == m {
                        2
                    } else {
                        0
                    };
                    tri[v]
                }
                Some((le, s)) => {
                    let g = if sgn[le] > 0 { s } else { m - s };
                    nv + eot[le] * per_edge + g - 1
                }
            };
            local.push(idx);
        }
    }
    DofMap { tag: SpaceTag::Lagrange(m), n_dofs: nv + ne * per_edge + nt * n_int, n_local: nodes.len(), local }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries; the result does not depend on triplet order
    /// beyond the order of summation of duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest |a_ij - a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let worst = self.triplets().fold(0.0f64, |a, (r, c, v)| a.max((v - self.get(c, r)).abs()));
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Coefficients of a global finite element function.
#[derive(Clone, Debug, PartialEq)]
pub struct FeFunction {
    pub tag: SpaceTag,
    pub coeffs: Vec<f64>,
}

/// Element-wise scalar polynomials in the orthonormal element basis
/// `ψ̂_a(F⁻¹x)/sqrt(det J)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrokenScalar {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl BrokenScalar {
    pub fn zeros(degree: usize, n_elements: usize) -> Self {
        Self { degree, coeffs: vec![0.0; dim_p(degree) * n_elements] }
    }

    pub fn n_local(&self) -> usize {
        dim_p(self.degree)
    }

    pub fn n_elements(&self) -> usize {
        self.coeffs.len() / self.n_local()
    }

    pub fn element(&self, t: usize) -> &[f64] {
        let n = self.n_local();
        &self.coeffs[t * n..(t + 1) * n]
    }

    pub fn element_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.n_local();
        &mut self.coeffs[t * n..(t + 1) * n]
    }

    /// Value and physical gradient at a reference point, given Dubiner values
    /// of degree at least `self.degree`.
    pub fn eval(&self, t: usize, geom: &ElementGeometry, dub: &[Jet]) -> (f64, [f64; 2]) {
        let s = 1.0 / geom.det.sqrt();
        let mut acc = Jet::default();
        for (c, d) in self.element(t).iter().zip(dub) {
            acc = acc + *c * *d;
        }
        let g = geom.grad([acc.dx, acc.dy]);
        (acc.v * s, [g[0] * s, g[1] * s])
    }

    pub fn value_at(&self, t: usize, geom: &ElementGeometry, x: Point2) -> f64 {
        let xh = geom.inverse_map(x);
        self.eval(t, geom, &dubiner(self.degree, xh[0], xh[1])).0
    }

    /// Element-wise projection onto P^l (coefficient truncation).
    pub fn truncate(&self, l: usize) -> BrokenScalar {
        assert!(l <= self.degree);
        let nt = self.n_elements();
        let n = dim_p(l);
        let mut out = BrokenScalar::zeros(l, nt);
        for t in 0..nt {
            out.element_mut(t).copy_from_slice(&self.element(t)[..n]);
        }
        out
    }

    /// L² inner product; exact by orthonormality.
    pub fn dot(&self, other: &BrokenScalar) -> f64 {
        let n = self.n_local().min(other.n_local());
        (0..self.n_elements())
            .map(|t| self.element(t)[..n].iter().zip(&other.element(t)[..n]).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&self, alpha: f64, other: &BrokenScalar) -> BrokenScalar {
        let degree = self.degree.max(other.degree);
        let nt = self.n_elements();
        let mut out = BrokenScalar::zeros(degree, nt);
        for t in 0..nt {
            let dst = out.element_mut(t);
            for (i, v) in self.element(t).iter().enumerate() {
                dst[i] += v;
            }
            for (i, v) in other.element(t).iter().enumerate() {
                dst[i] += alpha * v;
            }
        }
        out
    }
}

/// Element-wise vector polynomials stored as Piola-mapped reference Dubiner
/// coefficients (component-major).
#[derive(Clone, Debug, PartialEq)]
pub struct BrokenFlux {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl BrokenFlux {
    pub fn zeros(degree: usize, n_elements: usize) -> Self {
        Self { degree, coeffs: vec![0.0; 2 * dim_p(degree) * n_elements] }
    }

    pub fn n_local(&self) -> usize {
        2 * dim_p(self.degree)
    }

    pub fn n_elements(&self) -> usize {
        self.coeffs.len() / self.n_local()
    }

    pub fn element(&self, t: usize) -> &[f64] {
        let n = self.n_local();
        &self.coeffs[t * n..(t + 1) * n]
    }

    pub fn element_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.n_local();
        &mut self.coeffs[t * n..(t + 1) * n]
    }

    /// Physical value and divergence at a reference point.
    pub fn eval(&self, t: usize, geom: &ElementGeometry, dub: &[Jet]) -> ([f64; 2], f64) {
        let w = self.element(t);
        let np = w.len() / 2;
        let mut v = [0.0; 2];
        let mut div = 0.0;
        for a in 0..np {
            v[0] += w[a] * dub[a].v;
            v[1] += w[np + a] * dub[a].v;
            div += w[a] * dub[a].dx + w[np + a] * dub[a].dy;
        }
        (geom.piola(v), geom.piola_div(div))
    }

    pub fn value_at(&self, t: usize, geom: &ElementGeometry, x: Point2) -> ([f64; 2], f64) {
        let xh = geom.inverse_map(x);
        self.eval(t, geom, &dubiner(self.degree, xh[0], xh[1]))
    }

    /// Re-expresses the field in a higher-degree coefficient layout.
    pub fn widen(&self, degree: usize) -> BrokenFlux {
        assert!(degree >= self.degree);
        let nt = self.n_elements();
        let (n0, n1) = (dim_p(self.degree), dim_p(degree));
        let mut out = BrokenFlux::zeros(degree, nt);
        for t in 0..nt {
            let src = self.element(t);
            let dst = out.element_mut(t);
            dst[..n0].copy_from_slice(&src[..n0]);
            dst[n1..n1 + n0].copy_from_slice(&src[n0..]);
        }
        out
    }

    /// Squared L²(K) norm, exact by orthonormality of the Dubiner basis.
    pub fn element_norm_sq(&self, t: usize, geom: &ElementGeometry) -> f64 {
        flux_norm_sq(self.element(t), geom)
    }
}

/// Squared L²(K) norm of a Piola field with Dubiner coefficients `w`.
pub fn flux_norm_sq(w: &[f64], geom: &ElementGeometry) -> f64 {
    let np = w.len() / 2;
    let g = geom.metric();
    let mut s = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let dot: f64 = (0..np).map(|a| w[r * np + a] * w[c * np + a]).sum();
            s += g[r][c] * dot;
        }
    }
    s / geom.det
}

/// Dubiner values and gradients of one degree at the points of one rule.
#[derive(Clone, Debug)]
pub struct DubinerTable {
    pub degree: usize,
    pub rule: QuadRule,
    vals: Vec<Jet>,
}

impl DubinerTable {
    pub fn new(degree: usize, quad_degree: usize) -> Result<Self> {
        let rule = quadrature(quad_degree)?;
        let n = dim_p(degree);
        let mut vals = vec![Jet::default(); rule.len() * n];
        for i in 0..rule.len() {
            let [x, y] = rule.ref_point(i);
            crate::femcore::poly::dubiner_into(degree, x, y, &mut vals[i * n..(i + 1) * n]);
        }
        Ok(Self { degree, rule, vals })
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn at(&self, i: usize) -> &[Jet] {
        let n = dim_p(self.degree);
        &self.vals[i * n..(i + 1) * n]
    }
}

/// A global H(div) space: dof numbering plus the dual basis on every element.
#[derive(Clone, Debug)]
pub struct HdivSpace {
    family: HdivFamily,
    dofmap: DofMap,
    geometry: Vec<ElementGeometry>,
    duals: Vec<Mat<f64>>,
}

impl HdivSpace {
    pub fn new(mesh: &Mesh, family: HdivFamily) -> Result<Self> {
        let tag = match family.kind() {
            crate::femcore::SpaceKind::HdivBdm(_) => SpaceTag::Bdm(family.order()),
            _ => SpaceTag::Reduced(family.order()),
        };
        let dofmap = build_dofmap(mesh, tag);
        let geometry: Vec<_> = (0..mesh.num_triangles()).map(|t| ElementGeometry::of(mesh, t)).collect();
        let duals = geometry
            .iter()
            .enumerate()
            .map(|(t, g)| family.dual_basis(g, mesh.edge_sign(t), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { family, dofmap, geometry, duals })
    }

    pub fn family(&self) -> &HdivFamily {
        &self.family
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    /// Dubiner coefficients of the local basis on element `t` (one column
    /// per local dof).
    pub fn dual(&self, t: usize) -> &Mat<f64> {
        &self.duals[t]
    }

    /// Element-wise representation of a global coefficient vector.
    pub fn to_broken(&self, coeffs: &[f64]) -> BrokenFlux {
        assert_eq!(coeffs.len(), self.n_dofs());
        let nt = self.geometry.len();
        let mut out = BrokenFlux::zeros(self.family.degree(), nt);
        for t in 0..nt {
            let c = &self.duals[t];
            let dofs = self.dofmap.element(t);
            let dst = out.element_mut(t);
            for (j, &g) in dofs.iter().enumerate() {
                let x = coeffs[g];
                if x != 0.0 {
                    for (i, d) in dst.iter_mut().enumerate() {
                        *d += c[(i, j)] * x;
                    }
                }
            }
        }
        out
    }

    /// Canonical interpolant of a smooth vector field: applies every moment
    /// functional by quadrature. Divergence moments are evaluated after
    /// integration by parts so only point values of `f` are needed.
    pub fn interpolate<F: Fn(Point2) -> [f64; 2]>(&self, mesh: &Mesh, f: F, quad_degree: usize) -> Result<Vec<f64>> {
        let fam = &self.family;
        let ne = fam.edge_dofs();
        let mut out = vec![0.0; self.n_dofs()];
        let (ts, ws) = edge_rule(quad_degree);
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let n = mesh.edge_normal(e);
            let len = mesh.edge_length(e);
            for (&t, &w) in ts.iter().zip(&ws) {
                let v = f(pa + t * (pb - pa));
                let flux = v[0] * n.x + v[1] * n.y;
                let leg = legendre01(ne - 1, t);
                for j in 0..ne {
                    out[e * ne + j] += w * len * flux * leg[j];
                }
            }
        }
        let rule = quadrature(quad_degree)?;
        let nd = fam.div_dofs();
        let dd = fam.div_degree();
        for t in 0..mesh.num_triangles() {
            let g = &self.geometry[t];
            let dofs = self.dofmap.element(t);
            let mut div = vec![0.0; nd];
            // boundary term ∫_∂K f·n ψ̂ ds in reference parametrization
            for le in 0..3 {
                let (pa, pb) = g.edge(le);
                let tang = pb - pa;
                let nvec = [tang.y, -tang.x];
                for (&s, &w) in ts.iter().zip(&ws) {
                    let xh = reference_edge_point(le, s);
                    let v = f(g.map(xh));
                    let psi = dubiner(dd, xh[0], xh[1]);
                    let flux = v[0] * nvec[0] + v[1] * nvec[1];
                    for i in 0..nd {
                        div[i] += w * flux * psi[i + 1].v;
                    }
                }
            }
            let mut vol = vec![0.0; fam.vol_dofs()];
            for p in 0..rule.len() {
                let xh = rule.ref_point(p);
                let w = rule.weights[p];
                let v = f(g.map(xh));
                let psi = dubiner(dd, xh[0], xh[1]);
                for i in 0..nd {
                    let gr = g.grad(psi[i + 1].grad());
                    div[i] -= w * g.det * (v[0] * gr[0] + v[1] * gr[1]);
                }
                for (m, (l, _)) in fam.bubbles().eval(xh).iter().enumerate() {
                    let jl = [g.jac[0][0] * l[0] + g.jac[0][1] * l[1], g.jac[1][0] * l[0] + g.jac[1][1] * l[1]];
                    vol[m] += w * (v[0] * jl[0] + v[1] * jl[1]);
                }
            }
            for (i, v) in div.into_iter().chain(vol).enumerate() {
                out[dofs[3 * ne + i]] = v;
            }
        }
        Ok(out)
    }
}

/// The discrete mixed problem on one mesh: spaces and the matrices
/// A = (φ_i, φ_j), B = (div φ_j, ψ_v), M = (ψ_v, ψ_w).
#[derive(Clone, Debug)]
pub struct Discretization {
    pub k: usize,
    pub sigma: HdivSpace,
    pub u_map: DofMap,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub m: SparseMatrix,
}

impl Discretization {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        let sigma = HdivSpace::new(mesh, HdivFamily::bdm(k)?)?;
        let u_map = build_dofmap(mesh, SpaceTag::ScalarDg(k));
        let (a, b, m) = assemble_with(mesh, &sigma, &u_map);
        Ok(Self { k, sigma, u_map, a, b, m })
    }

    pub fn n_sigma(&self) -> usize {
        self.sigma.n_dofs()
    }

    pub fn n_u(&self) -> usize {
        self.u_map.n_dofs()
    }

    /// `∫_K ψ_v dx` for every U_h basis function; also the U_h coefficients
    /// of the constant 1.
    pub fn integral_weights(&self) -> Vec<f64> {
        let n = self.u_map.n_local();
        let nt = self.u_map.n_dofs() / n;
        let mut w = vec![0.0; self.u_map.n_dofs()];
        for t in 0..nt {
            w[t * n] = (0.5 * self.sigma.geometry(t).det).sqrt();
        }
        w
    }

    /// u as element-wise orthonormal coefficients (the U_h layout is already
    /// element-major).
    pub fn u_broken(&self, u: &[f64]) -> BrokenScalar {
        BrokenScalar { degree: self.k, coeffs: u.to_vec() }
    }
}

/// Assembles A, B and M for order k.
pub fn assemble(mesh: &Mesh, k: usize) -> Result<(SparseMatrix, SparseMatrix, SparseMatrix)> {
    let d = Discretization::new(mesh, k)?;
    Ok((d.a, d.b, d.m))
}

fn assemble_with(mesh: &Mesh, sigma: &HdivSpace, u_map: &DofMap) -> (SparseMatrix, SparseMatrix, SparseMatrix) {
    let fam = sigma.family();
    let np = dim_p(fam.degree());
    let n = fam.dim();
    let nu = u_map.n_local();
    let div = raw_div_table(fam.degree(), fam.order());
    let nt = mesh.num_triangles();
    let mut ta = Vec::with_capacity(nt * n * n);
    let mut tb = Vec::with_capacity(nt * n * nu);
    let mut tm = Vec::with_capacity(nt * nu);
    for t in 0..nt {
        let g = sigma.geometry(t);
        let c = sigma.dual(t);
        let dofs = sigma.dofmap().element(t);
        let udofs = u_map.element(t);
        let metric = g.metric();
        let cr = |r: usize| c.subrows(r * np, np);
        let mut ak = Mat::<f64>::zeros(n, n);
        for r in 0..2 {
            for cc in 0..2 {
                if metric[r][cc] != 0.0 {
                    ak += (metric[r][cc] / g.det) * (cr(r).transpose() * cr(cc));
                }
            }
        }
        let bk = (1.0 / g.det.sqrt()) * (&div * c);
        for i in 0..n {
            for j in 0..n {
                ta.push((dofs[i], dofs[j], ak[(i, j)]));
            }
        }
        for v in 0..nu {
            for j in 0..n {
                tb.push((udofs[v], dofs[j], bk[(v, j)]));
            }
            tm.push((udofs[v], udofs[v], 1.0));
        }
    }
    let ns = sigma.n_dofs();
    let nu_tot = u_map.n_dofs();
    (
        SparseMatrix::from_triplets(ns, ns, ta),
        SparseMatrix::from_triplets(nu_tot, ns, tb),
        SparseMatrix::from_triplets(nu_tot, nu_tot, tm),
    )
}

/// L² norm of a function given pointwise, by element quadrature.
pub fn norm_l2<F: Fn(Point2) -> f64>(mesh: &Mesh, f: F, quad_degree: usize) -> Result<f64> {
    let rule = quadrature(quad_degree)?;
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let g = ElementGeometry::of(mesh, t);
        for p in 0..rule.len() {
            let v = f(g.map(rule.ref_point(p)));
            s += rule.weights[p] * g.det * v * v;
        }
    }
    Ok(s.sqrt())
}

/// `Σ_F h_F⁻¹ ‖[u]‖²_F` over interior edges, plus boundary traces when
/// `include_boundary` (homogeneous Dirichlet data).
pub fn jump_seminorm_sq(mesh: &Mesh, u: &BrokenScalar, include_boundary: bool, quad_degree: usize) -> f64 {
    let (ts, ws) = edge_rule(quad_degree);
    let mut s = 0.0;
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let (t0, t1) = mesh.edge_triangles(e);
        if t1.is_none() && !include_boundary {
            continue;
        }
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let h = mesh.edge_length(e);
        let g0 = ElementGeometry::of(mesh, t0);
        let g1 = t1.map(|t| ElementGeometry::of(mesh, t));
        let mut acc = 0.0;
        for (&t, &w) in ts.iter().zip(&ws) {
            let x = pa + t * (pb - pa);
            let mut jump = u.value_at(t0, &g0, x);
            if let (Some(t1), Some(g1)) = (t1, g1.as_ref()) {
                jump -= u.value_at(t1, g1, x);
            }
            acc += w * h * jump * jump;
        }
        s += acc / h;
    }
    s
}

/// Broken H¹ error `(Σ_K ‖∇(u − u_h)‖²_K + Σ_F h_F⁻¹‖[u_h]‖²_F)^{1/2}` against
/// an exact solution vanishing on the boundary.
pub fn broken_h1_norm<G: Fn(Point2) -> [f64; 2]>(
    mesh: &Mesh,
    u_h: &BrokenScalar,
    grad_u: G,
    quad_degree: usize,
) -> Result<f64> {
    let table = DubinerTable::new(u_h.degree, quad_degree)?;
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let g = ElementGeometry::of(mesh, t);
        for p in 0..table.len() {
            let (_, gh) = u_h.eval(t, &g, table.at(p));
            let ge = grad_u(g.map(table.rule.ref_point(p)));
            s += table.rule.weights[p] * g.det * ((ge[0] - gh[0]).powi(2) + (ge[1] - gh[1]).powi(2));
        }
    }
    Ok((s + jump_seminorm_sq(mesh, u_h, true, quad_degree)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_unit_square;

    #[test]
    fn dof_counts() {
        let m = make_unit_square(4).unwrap();
        assert_eq!(build_dofmap(&m, SpaceTag::ScalarDg(1)).n_dofs(), 96);
        assert_eq!(build_dofmap(&m, SpaceTag::Bdm(1)).n_dofs(), 56 * 3 + 32 * 3);
        let m1 = make_unit_square(1).unwrap();
        assert_eq!(build_dofmap(&m1, SpaceTag::Lagrange(3)).n_dofs(), 16);
    }

    #[test]
    fn dofmaps_are_surjective() {
        let m = make_unit_square(3).unwrap();
        for tag in [
            SpaceTag::Lagrange(1),
            SpaceTag::Lagrange(3),
            SpaceTag::Lagrange(5),
            SpaceTag::Bdm(2),
            SpaceTag::Reduced(1),
        ] {
            let d = build_dofmap(&m, tag);
            let mut seen = vec![false; d.n_dofs()];
            for t in 0..m.num_triangles() {
                for &i in d.element(t) {
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "{tag:?}");
        }
    }

    #[test]
    fn lagrange_nodes_agree_across_edges() {
        let m = make_unit_square(2).unwrap();
        let d = build_dofmap(&m, SpaceTag::Lagrange(4));
        let nodes = lattice_nodes(4);
        let mut pos = vec![None::<Point2>; d.n_dofs()];
        for t in 0..m.num_triangles() {
            let g = ElementGeometry::of(&m, t);
            for (i, &gi) in d.element(t).iter().enumerate() {
                let x = g.map(nodes[i]);
                if let Some(p) = pos[gi] {
                    assert!((p - x).norm() < 1e-14);
                }
                pos[gi] = Some(x);
            }
        }
    }

    #[test]
    fn sparse_sums_duplicates() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 2.0), (0, 1, 3.0)]);
        assert_eq!(s.get(0, 1), 4.0);
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.mul_vec(&[1.0, 1.0]), vec![4.0, 2.0]);
        assert_eq!(s.mul_transpose_vec(&[1.0, 1.0]), vec![2.0, 4.0]);
    }

    #[test]
    fn constant_field_mass_consistency() {
        let mesh = make_unit_square(2).unwrap();
        let d = Discretization::new(&mesh, 1).unwrap();
        let c = [0.7, -1.3];
        let tau = d.sigma.interpolate(&mesh, |_| c, 8).unwrap();
        let at = d.a.mul_vec(&tau);
        // (c, φ_j) via broken evaluation of unit vectors
        for j in 0..d.n_sigma() {
            let mut e = vec![0.0; d.n_sigma()];
            e[j] = 1.0;
            let phi = d.sigma.to_broken(&e);
            let table = DubinerTable::new(2, 6).unwrap();
            let mut s = 0.0;
            for t in 0..mesh.num_triangles() {
                let g = d.sigma.geometry(t);
                for p in 0..table.len() {
                    let (v, _) = phi.eval(t, g, table.at(p));
                    s += table.rule.weights[p] * g.det * (v[0] * c[0] + v[1] * c[1]);
                }
            }
            assert!((at[j] - s).abs() < 1e-11, "dof {j}: {} vs {s}", at[j]);
        }
    }

    #[test]
    fn divergence_consistency() {
        let mesh = make_unit_square(2).unwrap();
        let d = Discretization::new(&mesh, 2).unwrap();
        // τ = (x², xy) has div 3x ∈ P^1 and lies in BDM_3 ⊇ P^2
        let tau = d.sigma.interpolate(&mesh, |p| [p.x * p.x, p.x * p.y], 10).unwrap();
        let bt = d.b.mul_vec(&tau);
        for t in 0..mesh.num_triangles() {
            let g = d.sigma.geometry(t);
            let load = crate::femcore::project(2, |p| 3.0 * p.x, g, 6).unwrap();
            for (i, &gi) in d.u_map.element(t).iter().enumerate() {
                assert!((bt[gi] - load[i]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn matrices_are_symmetric_and_divergence_lies_in_u() {
        let mesh = make_unit_square(2).unwrap();
        for k in 1..=3 {
            let d = Discretization::new(&mesh, k).unwrap();
            assert!(d.a.asymmetry() < 1e-13);
            assert!(d.m.asymmetry() == 0.0);
            // div of every basis function is in P^k: its P^{k+1} projection has no degree-(k+1) modes
            let fam = d.sigma.family();
            let hi = raw_div_table(fam.degree(), k + 1);
            for t in 0..mesh.num_triangles() {
                let r = &hi * d.sigma.dual(t);
                for v in dim_p(k)..dim_p(k + 1) {
                    for j in 0..r.ncols() {
                        assert!(r[(v, j)].abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn l2_norm_of_sine_mode() {
        let mesh = make_unit_square(8).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let n = norm_l2(&mesh, |p| 2.0 * (tau * p.x).sin() * (tau * p.y).sin(), 20).unwrap();
        assert!((n - 1.0).abs() < 1e-10);
    }

    #[test]
    fn jump_of_piecewise_constant() {
        let mesh = make_unit_square(1).unwrap();
        let mut u = BrokenScalar::zeros(0, 2);
        // unit value on element 1: coefficient sqrt(|K|) times the constant mode sqrt(2)⁻¹ scaling
        let g = ElementGeometry::of(&mesh, 1);
        u.element_mut(1)[0] = crate::femcore::project(0, |_| 1.0, &g, 1).unwrap()[0];
        let j = jump_seminorm_sq(&mesh, &u, false, 2);
        assert!((j - 1.0).abs() < 1e-12, "{j}");
        let cont = BrokenScalar::zeros(1, 2);
        assert_eq!(jump_seminorm_sq(&mesh, &cont, true, 2), 0.0);
    }
}
