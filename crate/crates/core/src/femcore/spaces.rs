//! Local polynomial spaces on the reference triangle.
//!
//! Every field is stored through reference Dubiner coefficients. A scalar
//! function u on K is `Σ c_a ψ̂_a(F⁻¹x) / sqrt(det J)`, which makes the element
//! basis L²(K)-orthonormal. A vector field is the Piola image of
//! `Σ_c Σ_a w_{c,a} ψ̂_a e_c`, stored component-major (`c * np + a`).
//!
//! The H(div) families are defined by their moment functionals:
//!
//! * edge moments `∫_e τ·n_e r_j ds`, with n_e the unit normal of the global
//!   edge orientation (tangent rotated by -90°) and r_j the orthonormal
//!   Legendre polynomials in the global edge parameter;
//! * divergence moments `sqrt(det J) ∫_K div τ ψ_i dx` for the non-constant
//!   modes of the scalar basis;
//! * interior moments `∫_K τ·l dx` against Piola images of the normal bubbles
//!   `curl(27 b q̂)`, with b the cubic bubble and q̂ a Dubiner function.
//!
//! The physical basis on K is dual to these functionals.

use faer::Mat;

use super::dense::{null_space, row_scaled_condition, DenseLu};
use super::geometry::{reference_edge_point, ElementGeometry};
use super::poly::{dim_p, dubiner, legendre01, Jet};
use super::quadrature::{edge_rule, quadrature};
use crate::error::{Error, Result};
use crate::mesh::Point2;

/// Highest polynomial degree supported for scalar spaces.
pub const MAX_SCALAR_DEGREE: usize = 8;
/// Highest order k supported for the H(div) families.
pub const MAX_ORDER: usize = 4;

/// Global edge orientation signs of the reference element when its vertices
/// carry the indices 0, 1, 2.
pub const REFERENCE_SIGNS: [i8; 3] = [1, -1, 1];

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Discontinuous P^m with the orthonormal modal basis.
    ScalarDg(usize),
    /// Nodal P^m on the principal lattice.
    Lagrange(usize),
    /// Full vector P^m with BDM moments; m = k + 1.
    HdivBdm(usize),
    /// Vector P^{k+3} with normal traces in P^{k+1}.
    HdivReduced(usize),
}

/// Rotated (outward, unnormalized) tangent of reference edge `i`.
fn reference_edge_normal(i: usize) -> [f64; 2] {
    let a = REF_VERTICES[(i + 1) % 3];
    let b = REF_VERTICES[(i + 2) % 3];
    [b[1] - a[1], -(b[0] - a[0])]
}

/// Value and divergence of a vector field given by Dubiner coefficients in
/// column `col` of `coeffs`.
pub fn eval_vector(coeffs: &Mat<f64>, col: usize, dub: &[Jet]) -> ([f64; 2], f64) {
    let np = coeffs.nrows() / 2;
    let mut v = [0.0; 2];
    let mut div = 0.0;
    for (a, d) in dub.iter().enumerate().take(np) {
        let w0 = coeffs[(a, col)];
        let w1 = coeffs[(np + a, col)];
        v[0] += w0 * d.v;
        v[1] += w1 * d.v;
        div += w0 * d.dx + w1 * d.dy;
    }
    (v, div)
}

/// `∫_0^1 (e_c ψ̂_a)·n̂_i r_m(t) dt` for the Dubiner vectors of `degree`, one
/// row per Legendre mode in `modes`. `reversed` runs the Legendre parameter
/// against the counter-clockwise traversal.
pub fn raw_edge_table(degree: usize, edge: usize, reversed: bool, modes: std::ops::Range<usize>) -> Mat<f64> {
    let np = dim_p(degree);
    let (ts, ws) = edge_rule(degree + modes.end);
    let n = reference_edge_normal(edge);
    let mut out = Mat::<f64>::zeros(modes.len(), 2 * np);
    for (&t, &w) in ts.iter().zip(&ws) {
        let x = reference_edge_point(edge, t);
        let tg = if reversed { 1.0 - t } else { t };
        let leg = legendre01(modes.end.saturating_sub(1), tg);
        let dub = dubiner(degree, x[0], x[1]);
        for (row, m) in modes.clone().enumerate() {
            for a in 0..np {
                let base = w * leg[m] * dub[a].v;
                out[(row, a)] += base * n[0];
                out[(row, np + a)] += base * n[1];
            }
        }
    }
    out
}

/// `∫ div(e_c ψ̂_a) ψ̂_v` over the reference triangle for v < dim_p(vdeg).
pub fn raw_div_table(degree: usize, vdeg: usize) -> Mat<f64> {
    let np = dim_p(degree);
    let nv = dim_p(vdeg);
    let q = quadrature(degree + vdeg).expect("supported degree");
    let mut out = Mat::<f64>::zeros(nv, 2 * np);
    for i in 0..q.len() {
        let [x, y] = q.ref_point(i);
        let dub = dubiner(degree.max(vdeg), x, y);
        let w = q.weights[i];
        for v in 0..nv {
            for a in 0..np {
                out[(v, a)] += w * dub[a].dx * dub[v].v;
                out[(v, np + a)] += w * dub[a].dy * dub[v].v;
            }
        }
    }
    out
}

/// Normal bubbles curl(27 b q̂) with q̂ ranging over the Dubiner basis of
/// `q_degree`; the result has vector degree `q_degree + 2`.
#[derive(Clone, Debug)]
pub struct BubbleSpace {
    pub degree: usize,
    /// Dubiner coefficients, 2 dim_p(degree) rows, one column per bubble.
    pub coeffs: Mat<f64>,
}

impl BubbleSpace {
    pub fn new(q_degree: usize) -> Self {
        let degree = q_degree + 2;
        let np = dim_p(degree);
        let nb = dim_p(q_degree);
        let q = quadrature(2 * degree).expect("supported degree");
        let mut coeffs = Mat::<f64>::zeros(2 * np, nb);
        for i in 0..q.len() {
            let [x, y] = q.ref_point(i);
            let w = q.weights[i];
            let b = 27.0
                * (Jet { v: x, dx: 1.0, dy: 0.0 } * Jet { v: y, dx: 0.0, dy: 1.0 })
                * Jet { v: 1.0 - x - y, dx: -1.0, dy: -1.0 };
            let dub = dubiner(degree, x, y);
            for m in 0..nb {
                let bq = b * dub[m];
                let l = [bq.dy, -bq.dx];
                for a in 0..np {
                    coeffs[(a, m)] += w * l[0] * dub[a].v;
                    coeffs[(np + a, m)] += w * l[1] * dub[a].v;
                }
            }
        }
        Self { degree, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Values and divergences of all bubbles at a reference point.
    pub fn eval(&self, x: [f64; 2]) -> Vec<([f64; 2], f64)> {
        let dub = dubiner(self.degree, x[0], x[1]);
        (0..self.dim()).map(|m| eval_vector(&self.coeffs, m, &dub)).collect()
    }
}

/// An H(div) element family: a spanning set of reference vector polynomials
/// together with the moment functionals that select the dual basis.
#[derive(Clone, Debug)]
pub struct HdivFamily {
    kind: SpaceKind,
    k: usize,
    degree: usize,
    div_degree: usize,
    span: Mat<f64>,
    edge_tab: [[Mat<f64>; 2]; 3],
    div_tab: Mat<f64>,
    bubbles: BubbleSpace,
    /// `vol_tab[r][c] = L_rᵀ S_c` with L the bubble and S the span coefficients.
    vol_tab: [[Mat<f64>; 2]; 2],
}

impl HdivFamily {
    /// BDM of degree k + 1.
    pub fn bdm(k: usize) -> Result<Self> {
        check_order(k)?;
        let degree = k + 1;
        let span = Mat::<f64>::identity(2 * dim_p(degree), 2 * dim_p(degree));
        Self::build(SpaceKind::HdivBdm(degree), k, degree, k, k - 1, span)
    }

    /// Vector P^{k+3} whose normal traces lie in P^{k+1}.
    pub fn reduced(k: usize) -> Result<Self> {
        check_order(k)?;
        let degree = k + 3;
        let np = dim_p(degree);
        let mut constraints = Mat::<f64>::zeros(6, 2 * np);
        for e in 0..3 {
            let t = raw_edge_table(degree, e, false, k + 2..k + 4);
            for r in 0..2 {
                for c in 0..2 * np {
                    constraints[(2 * e + r, c)] = t[(r, c)];
                }
            }
        }
        let span = null_space(&constraints).ok_or(Error::SingularMoments { what: "trace constraints", element: 0 })?;
        Self::build(SpaceKind::HdivReduced(k), k, degree, k + 2, k + 1, span)
    }

    fn build(
        kind: SpaceKind,
        k: usize,
        degree: usize,
        div_degree: usize,
        bubble_degree: usize,
        span: Mat<f64>,
    ) -> Result<Self> {
        let edge_tab =
            std::array::from_fn(|e| std::array::from_fn(|rev| raw_edge_table(degree, e, rev == 1, 0..k + 2) * &span));
        let div_raw = raw_div_table(degree, div_degree) * &span;
        let nd = dim_p(div_degree) - 1;
        let div_tab = Mat::from_fn(nd, span.ncols(), |i, j| div_raw[(i + 1, j)]);
        let bubbles = BubbleSpace::new(bubble_degree);
        debug_assert_eq!(bubbles.degree, degree);
        let np = dim_p(degree);
        let lc = |r: usize| Mat::from_fn(np, bubbles.dim(), |a, m| bubbles.coeffs[(r * np + a, m)]);
        let sc = |c: usize| Mat::from_fn(np, span.ncols(), |a, j| span[(c * np + a, j)]);
        let vol_tab = std::array::from_fn(|r| std::array::from_fn(|c| lc(r).transpose() * sc(c)));
        let family = Self { kind, k, degree, div_degree, span, edge_tab, div_tab, bubbles, vol_tab };
        let counted = 3 * family.edge_dofs() + family.div_dofs() + family.vol_dofs();
        if counted != family.dim() {
            return Err(Error::SingularMoments { what: "moment count", element: 0 });
        }
        Ok(family)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// Polynomial degree of the vector fields.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Degree of the scalar space tested by the divergence moments.
    pub fn div_degree(&self) -> usize {
        self.div_degree
    }

    pub fn dim(&self) -> usize {
        self.span.ncols()
    }

    /// Moments per edge.
    pub fn edge_dofs(&self) -> usize {
        self.k + 2
    }

    pub fn div_dofs(&self) -> usize {
        dim_p(self.div_degree) - 1
    }

    pub fn vol_dofs(&self) -> usize {
        self.bubbles.dim()
    }

    /// Interior (non-edge) moments per element.
    pub fn interior_dofs(&self) -> usize {
        self.div_dofs() + self.vol_dofs()
    }

    pub fn bubbles(&self) -> &BubbleSpace {
        &self.bubbles
    }

    /// Spanning set as Dubiner coefficient columns.
    pub fn span(&self) -> &Mat<f64> {
        &self.span
    }

    /// Moment functionals applied to the Piola images of the spanning set.
    pub fn moment_matrix(&self, geom: &ElementGeometry, signs: [i8; 3]) -> Mat<f64> {
        let n = self.dim();
        let ne = self.edge_dofs();
        let nd = self.div_dofs();
        let mut d = Mat::<f64>::zeros(n, n);
        for e in 0..3 {
            let s = f64::from(signs[e]);
            let t = &self.edge_tab[e][usize::from(signs[e] < 0)];
            for j in 0..ne {
                for c in 0..n {
                    d[(e * ne + j, c)] = s * t[(j, c)];
                }
            }
        }
        for i in 0..nd {
            for c in 0..n {
                d[(3 * ne + i, c)] = self.div_tab[(i, c)];
            }
        }
        let g = geom.metric();
        let off = 3 * ne + nd;
        for m in 0..self.vol_dofs() {
            for c in 0..n {
                let mut v = 0.0;
                for r in 0..2 {
                    for cc in 0..2 {
                        v += g[r][cc] * self.vol_tab[r][cc][(m, c)];
                    }
                }
                d[(off + m, c)] = v / geom.det;
            }
        }
        d
    }

    /// Dubiner coefficients of the dual basis on an element: column j is the
    /// basis function whose j-th moment is one and all others vanish.
    pub fn dual_basis(&self, geom: &ElementGeometry, signs: [i8; 3], element: usize) -> Result<Mat<f64>> {
        let lu = self.factor(geom, signs, element)?;
        Ok(&self.span * lu.inverse())
    }

    /// Factorized moment matrix of an element.
    pub fn factor(&self, geom: &ElementGeometry, signs: [i8; 3], element: usize) -> Result<MomentSolver<'_>> {
        let d = self.moment_matrix(geom, signs);
        let lu = DenseLu::new(&d).ok_or(Error::SingularMoments { what: self.name(), element })?;
        Ok(MomentSolver { family: self, lu })
    }

    /// Condition number of the row-scaled moment matrix.
    pub fn scaled_condition(&self, geom: &ElementGeometry, signs: [i8; 3]) -> f64 {
        row_scaled_condition(&self.moment_matrix(geom, signs))
    }

    /// Interior moment values `∫_K τ·l_m dx` of a Piola field with Dubiner
    /// coefficients `w` of any degree ≤ this family's degree.
    pub fn bubble_moments(&self, geom: &ElementGeometry, w: &[f64]) -> Vec<f64> {
        let np = dim_p(self.degree);
        let nw = w.len() / 2;
        debug_assert!(nw <= np);
        let g = geom.metric();
        let l = &self.bubbles.coeffs;
        (0..self.vol_dofs())
            .map(|m| {
                let mut v = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        let dot: f64 = (0..nw).map(|a| l[(r * np + a, m)] * w[c * nw + a]).sum();
                        v += g[r][c] * dot;
                    }
                }
                v / geom.det
            })
            .collect()
    }

    fn name(&self) -> &'static str {
        match self.kind {
            SpaceKind::HdivBdm(_) => "BDM moments",
            _ => "reduced-trace moments",
        }
    }
}

/// Factorized element moment matrix, mapping moment values to Dubiner
/// coefficients.
pub struct MomentSolver<'a> {
    family: &'a HdivFamily,
    lu: DenseLu,
}

impl MomentSolver<'_> {
    pub fn coefficients(&self, moments: &[f64]) -> Vec<f64> {
        let x = self.lu.solve_vec(moments);
        let s = &self.family.span;
        (0..s.nrows()).map(|i| (0..s.ncols()).map(|j| s[(i, j)] * x[j]).sum()).collect()
    }

    pub fn inverse(&self) -> Mat<f64> {
        self.lu.inverse()
    }
}

fn check_order(k: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("order k = {k} outside 1..={MAX_ORDER}")))
    }
}

/// Principal lattice of degree m, ordered row by row in y. Degree 0 uses the
/// centroid.
pub fn lattice_nodes(m: usize) -> Vec<[f64; 2]> {
    if m == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let mut out = Vec::with_capacity(dim_p(m));
    for j in 0..=m {
        for i in 0..=m - j {
            out.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    out
}

/// Inverse of the Dubiner Vandermonde matrix `V[i][a] = ψ̂_a(node_i)`: maps
/// nodal values to Dubiner coefficients.
pub fn lagrange_to_modal(m: usize) -> Mat<f64> {
    let nodes = lattice_nodes(m);
    let n = nodes.len();
    let v = Mat::from_fn(n, n, |i, a| dubiner(m, nodes[i][0], nodes[i][1])[a].v);
    DenseLu::new(&v).expect("lattice Vandermonde is invertible").inverse()
}

#[derive(Clone, Debug)]
enum Repr {
    Modal,
    Lagrange(Mat<f64>),
    Hdiv(Box<HdivFamily>, Mat<f64>),
}

/// Element-local space descriptor on the reference triangle.
#[derive(Clone, Debug)]
pub struct LocalSpace {
    kind: SpaceKind,
    repr: Repr,
}

pub fn make_scalar_space(m: usize, modal: bool) -> Result<LocalSpace> {
    if m > MAX_SCALAR_DEGREE {
        return Err(Error::InvalidArgument(format!("degree {m} exceeds {MAX_SCALAR_DEGREE}")));
    }
    Ok(if modal {
        LocalSpace { kind: SpaceKind::ScalarDg(m), repr: Repr::Modal }
    } else {
        LocalSpace { kind: SpaceKind::Lagrange(m), repr: Repr::Lagrange(lagrange_to_modal(m)) }
    })
}

pub fn make_bdm_space(k: usize) -> Result<LocalSpace> {
    LocalSpace::hdiv(HdivFamily::bdm(k)?)
}

pub fn make_reduced_space(k: usize) -> Result<LocalSpace> {
    LocalSpace::hdiv(HdivFamily::reduced(k)?)
}

impl LocalSpace {
    fn hdiv(family: HdivFamily) -> Result<Self> {
        let basis = family.dual_basis(&ElementGeometry::reference(), REFERENCE_SIGNS, 0)?;
        Ok(Self { kind: family.kind(), repr: Repr::Hdiv(Box::new(family), basis) })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::ScalarDg(m) | SpaceKind::Lagrange(m) => dim_p(m),
            _ => match &self.repr {
                Repr::Hdiv(f, _) => f.dim(),
                _ => unreachable!(),
            },
        }
    }

    pub fn family(&self) -> Option<&HdivFamily> {
        match &self.repr {
            Repr::Hdiv(f, _) => Some(f),
            _ => None,
        }
    }

    /// Basis values with reference gradients at a reference point (scalar spaces).
    pub fn eval_scalar(&self, x: [f64; 2]) -> Vec<Jet> {
        match (&self.kind, &self.repr) {
            (SpaceKind::ScalarDg(m), Repr::Modal) => dubiner(*m, x[0], x[1]),
            (SpaceKind::Lagrange(m), Repr::Lagrange(c)) => {
                let dub = dubiner(*m, x[0], x[1]);
                (0..c.ncols()).map(|i| (0..c.nrows()).fold(Jet::default(), |acc, a| acc + c[(a, i)] * dub[a])).collect()
            }
            _ => panic!("eval_scalar on a vector space"),
        }
    }

    /// Basis values and divergences at a reference point (H(div) spaces, on
    /// the reference element with vertex indices 0, 1, 2).
    pub fn eval_vector(&self, x: [f64; 2]) -> Vec<([f64; 2], f64)> {
        match &self.repr {
            Repr::Hdiv(f, basis) => {
                let dub = dubiner(f.degree(), x[0], x[1]);
                (0..basis.ncols()).map(|j| eval_vector(basis, j, &dub)).collect()
            }
            _ => panic!("eval_vector on a scalar space"),
        }
    }

    /// `dof_i(φ_j)` on the reference element, with the functionals evaluated
    /// by quadrature from point values. The identity for a correct basis.
    pub fn reference_dof_matrix(&self) -> Mat<f64> {
        match (&self.kind, &self.repr) {
            (SpaceKind::ScalarDg(m), _) => {
                let q = quadrature(2 * m).expect("supported degree");
                let n = dim_p(*m);
                let mut out = Mat::<f64>::zeros(n, n);
                for p in 0..q.len() {
                    let [x, y] = q.ref_point(p);
                    let b = dubiner(*m, x, y);
                    for i in 0..n {
                        for j in 0..n {
                            out[(i, j)] += q.weights[p] * b[i].v * b[j].v;
                        }
                    }
                }
                out
            }
            (SpaceKind::Lagrange(_), Repr::Lagrange(_)) => {
                let nodes = lattice_nodes(self.lagrange_degree());
                let n = nodes.len();
                let mut out = Mat::<f64>::zeros(n, n);
                for (i, &x) in nodes.iter().enumerate() {
                    for (j, v) in self.eval_scalar(x).iter().enumerate() {
                        out[(i, j)] = v.v;
                    }
                }
                out
            }
            (_, Repr::Hdiv(f, _)) => self.hdiv_dofs_by_quadrature(f),
            _ => unreachable!(),
        }
    }

    fn lagrange_degree(&self) -> usize {
        match self.kind {
            SpaceKind::Lagrange(m) | SpaceKind::ScalarDg(m) => m,
            _ => unreachable!(),
        }
    }

    fn hdiv_dofs_by_quadrature(&self, f: &HdivFamily) -> Mat<f64> {
        let n = f.dim();
        let ne = f.edge_dofs();
        let mut out = Mat::<f64>::zeros(n, n);
        let (ts, ws) = edge_rule(2 * f.degree() + 2);
        for e in 0..3 {
            let s = f64::from(REFERENCE_SIGNS[e]);
            let nrm = reference_edge_normal(e);
            for (&t, &w) in ts.iter().zip(&ws) {
                let tg = if s < 0.0 { 1.0 - t } else { t };
                let leg = legendre01(ne - 1, tg);
                let vals = self.eval_vector(reference_edge_point(e, t));
                for (j, (v, _)) in vals.iter().enumerate() {
                    let flux = s * (v[0] * nrm[0] + v[1] * nrm[1]);
                    for r in 0..ne {
                        out[(e * ne + r, j)] += w * leg[r] * flux;
                    }
                }
            }
        }
        let q = quadrature(2 * f.degree() + 3).expect("supported degree");
        let off = 3 * ne;
        for p in 0..q.len() {
            let x = q.ref_point(p);
            let w = q.weights[p];
            let vals = self.eval_vector(x);
            let psi = dubiner(f.div_degree(), x[0], x[1]);
            let bub = f.bubbles().eval(x);
            for (j, (v, div)) in vals.iter().enumerate() {
                for i in 0..f.div_dofs() {
                    out[(off + i, j)] += w * div * psi[i + 1].v;
                }
                for (m, (l, _)) in bub.iter().enumerate() {
                    out[(off + f.div_dofs() + m, j)] += w * (v[0] * l[0] + v[1] * l[1]);
                }
            }
        }
        out
    }
}

/// Element-wise L² projection onto P^l: coefficients in the orthonormal
/// element basis `ψ̂_a(F⁻¹x)/sqrt(det J)`.
pub fn project<F: Fn(Point2) -> f64>(l: usize, f: F, geom: &ElementGeometry, quad_degree: usize) -> Result<Vec<f64>> {
    let q = quadrature(quad_degree)?;
    let n = dim_p(l);
    let mut c = vec![0.0; n];
    for p in 0..q.len() {
        let x = q.ref_point(p);
        let fv = f(geom.map(x));
        let b = dubiner(l, x[0], x[1]);
        for a in 0..n {
            c[a] += q.weights[p] * fv * b[a].v;
        }
    }
    let s = geom.det.abs().sqrt();
    Ok(c.into_iter().map(|v| v * s).collect())
}

/// Evaluates an element function given by orthonormal coefficients.
pub fn eval_scalar_coeffs(c: &[f64], geom: &ElementGeometry, x: Point2) -> f64 {
    let m = degree_of_len(c.len());
    let xh = geom.inverse_map(x);
    let b = dubiner(m, xh[0], xh[1]);
    c.iter().zip(&b).map(|(c, b)| c * b.v).sum::<f64>() / geom.det.abs().sqrt()
}

/// Polynomial degree m with dim_p(m) == n.
pub fn degree_of_len(n: usize) -> usize {
    let mut m = 0;
    while dim_p(m) < n {
        m += 1;
    }
    assert_eq!(dim_p(m), n, "length {n} is not a P^m dimension");
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::quadrature::QuadRule;

    fn max_identity_error(m: &Mat<f64>) -> f64 {
        let mut e = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((m[(i, j)] - target).abs());
            }
        }
        e
    }

    #[test]
    fn dimensions() {
        for k in 1..=4 {
            assert_eq!(make_bdm_space(k).unwrap().dim(), (k + 2) * (k + 3));
            let r = make_reduced_space(k).unwrap();
            assert_eq!(r.dim(), (k + 4) * (k + 5) - 6);
            let f = r.family().unwrap();
            assert_eq!(3 * (k + 2) + (k + 3) * (k + 4) / 2 - 1 + (k + 2) * (k + 3) / 2, r.dim());
            assert_eq!(f.vol_dofs(), (k + 2) * (k + 3) / 2);
        }
        assert_eq!(make_scalar_space(3, false).unwrap().dim(), 10);
        assert!(make_bdm_space(0).is_err());
        assert!(make_scalar_space(9, true).is_err());
    }

    #[test]
    fn scalar_spaces() {
        let s = make_scalar_space(2, true).unwrap();
        assert!(max_identity_error(&s.reference_dof_matrix()) < 1e-12);
        let c = make_scalar_space(0, true).unwrap().eval_scalar([0.2, 0.3]);
        assert!((c[0].v - 2f64.sqrt()).abs() < 1e-15);
        let l = make_scalar_space(3, false).unwrap();
        assert!(max_identity_error(&l.reference_dof_matrix()) < 1e-12);
        for x in [[0.1, 0.2], [0.7, 0.05], [0.33, 0.4]] {
            let sum: f64 = l.eval_scalar(x).iter().map(|j| j.v).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_basis_property_on_reference() {
        for k in 1..=3 {
            for space in [make_bdm_space(k).unwrap(), make_reduced_space(k).unwrap()] {
                let err = max_identity_error(&space.reference_dof_matrix());
                assert!(err < 1e-10, "k={k} {:?}: {err}", space.kind());
            }
        }
    }

    #[test]
    fn bdm_condition_k1() {
        let f = HdivFamily::bdm(1).unwrap();
        assert!(f.scaled_condition(&ElementGeometry::reference(), REFERENCE_SIGNS) < 1e6);
    }

    #[test]
    fn bubbles_are_divergence_free_with_zero_trace() {
        for q in 0..=4 {
            let b = BubbleSpace::new(q);
            assert_eq!(b.dim(), dim_p(q));
            let rule: QuadRule = quadrature(10).unwrap();
            for p in 0..rule.len() {
                for (l, div) in b.eval(rule.ref_point(p)) {
                    let scale = 1.0 + l[0].abs() + l[1].abs();
                    assert!(div.abs() < 1e-11 * scale);
                }
            }
            let (ts, _) = edge_rule(10);
            for e in 0..3 {
                let n = reference_edge_normal(e);
                for &t in &ts {
                    for (l, _) in b.eval(reference_edge_point(e, t)) {
                        assert!((l[0] * n[0] + l[1] * n[1]).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_traces_have_low_degree() {
        for k in 1..=3 {
            let f = HdivFamily::reduced(k).unwrap();
            for e in 0..3 {
                let t = raw_edge_table(f.degree(), e, false, k + 2..f.degree() + 1) * f.span();
                for i in 0..t.nrows() {
                    for j in 0..t.ncols() {
                        assert!(t[(i, j)].abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn projection() {
        let g = ElementGeometry::reference();
        let c = project(0, |p| p.x, &g, 2).unwrap();
        assert!((eval_scalar_coeffs(&c, &g, Point2::new(0.5, 0.2)) - 1.0 / 3.0).abs() < 1e-14);
        let f = |p: Point2| 1.0 + 2.0 * p.x - p.x * p.y;
        let c = project(2, f, &g, 6).unwrap();
        let p = Point2::new(0.3, 0.1);
        assert!((eval_scalar_coeffs(&c, &g, p) - f(p)).abs() < 1e-12);
    }
}
