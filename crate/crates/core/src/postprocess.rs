//! Local post-processing of a discrete eigenpair: the higher-order scalar
//! u*, its conforming average u**, the eigenvalue λ* and the flux σ* with
//! divergence −λ_h u*.

use faer::Mat;

use crate::assembly::{build_dofmap, BrokenFlux, BrokenScalar, Discretization, DofMap, FeFunction, SpaceTag};
use crate::eigensolve::MixedEigenSolution;
use crate::error::{Error, Result};
use crate::femcore::dense::DenseLu;
use crate::femcore::poly::{dim_p, dubiner};
use crate::femcore::quadrature::quadrature;
use crate::femcore::spaces::{lagrange_to_modal, lattice_nodes, raw_div_table, HdivFamily};
use crate::femcore::ElementGeometry;
use crate::mesh::Mesh;

#[derive(Clone, Debug)]
pub struct PostProcessed {
    pub u_star: BrokenScalar,
    pub u_star2: BrokenScalar,
    /// Nodal values of u** in the continuous Lagrange space.
    pub u_star2_nodal: FeFunction,
    pub lambda_star: f64,
    pub sigma_star: BrokenFlux,
}

/// Reference tables shared by all post-processing steps of one order k.
#[derive(Clone, Debug)]
pub struct PostProcessor {
    k: usize,
    /// `stiff[r][c][(a, b)] = ∫ ∂_r ψ̂_a ∂_c ψ̂_b`, degree k + 2.
    stiff: [[Mat<f64>; 2]; 2],
    /// `∫ ∂_r ψ̂_c ψ̂_a`: rows a < dim_p(k+1), columns (r, c) with c < dim_p(k+2).
    grad_moments: Mat<f64>,
    vandermonde: Mat<f64>,
    inv_vandermonde: Mat<f64>,
    reduced: HdivFamily,
}

impl PostProcessor {
    pub fn new(k: usize) -> Result<Self> {
        let m = k + 2;
        let n = dim_p(m);
        let q = quadrature(2 * m)?;
        let mut stiff: [[Mat<f64>; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| Mat::zeros(n, n)));
        for p in 0..q.len() {
            let [x, y] = q.ref_point(p);
            let d = dubiner(m, x, y);
            let w = q.weights[p];
            for a in 0..n {
                let ga = d[a].grad();
                for b in 0..n {
                    let gb = d[b].grad();
                    for r in 0..2 {
                        for c in 0..2 {
                            stiff[r][c][(a, b)] += w * ga[r] * gb[c];
                        }
                    }
                }
            }
        }
        let nodes = lattice_nodes(m);
        let vandermonde = Mat::from_fn(n, n, |i, a| dubiner(m, nodes[i][0], nodes[i][1])[a].v);
        Ok(Self {
            k,
            stiff,
            grad_moments: raw_div_table(m, k + 1),
            vandermonde,
            inv_vandermonde: lagrange_to_modal(m),
            reduced: HdivFamily::reduced(k)?,
        })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn reduced_family(&self) -> &HdivFamily {
        &self.reduced
    }

    /// Runs all post-processings.
    pub fn run(&self, mesh: &Mesh, disc: &Discretization, sol: &MixedEigenSolution) -> Result<PostProcessed> {
        let sigma_h = disc.sigma.to_broken(&sol.sigma_h);
        let u_h = disc.u_broken(&sol.u_h);
        let u_star = self.postprocess_u(mesh, &u_h, &sigma_h)?;
        let (u_star2_nodal, u_star2) = self.oswald_average(mesh, &u_star);
        let lambda_star = postprocess_lambda(disc, &sol.sigma_h, &u_star)?;
        let sigma_star = self.postprocess_sigma(mesh, &sol.sigma_h, &sigma_h, &u_star, sol.lambda_h)?;
        Ok(PostProcessed { u_star, u_star2, u_star2_nodal, lambda_star, sigma_star })
    }

    /// Element-wise u* ∈ P^{k+2}: Π^k u* = u_h and (∇u*, ∇v)_K = (σ_h, ∇v)_K
    /// for v orthogonal to P^k.
    pub fn postprocess_u(&self, mesh: &Mesh, u_h: &BrokenScalar, sigma_h: &BrokenFlux) -> Result<BrokenScalar> {
        let k = self.k;
        let (nlo, n) = (dim_p(k), dim_p(k + 2));
        let nh = n - nlo;
        let nt = mesh.num_triangles();
        let mut out = BrokenScalar::zeros(k + 2, nt);
        for t in 0..nt {
            let g = ElementGeometry::of(mesh, t);
            let gi = g.inverse_metric();
            let s = |a: usize, b: usize| -> f64 {
                let mut v = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        v += gi[r][c] * self.stiff[r][c][(a, b)];
                    }
                }
                v
            };
            let lo = u_h.element(t);
            let w = sigma_h.element(t);
            let nw = w.len() / 2;
            let sq = g.det.sqrt();
            let mut rhs = vec![0.0; nh];
            for (h, r) in rhs.iter_mut().enumerate() {
                let b = nlo + h;
                let mut v = 0.0;
                for a in 0..nw {
                    v += w[a] * self.grad_moments[(a, b)] + w[nw + a] * self.grad_moments[(a, n + b)];
                }
                *r = v / sq - (0..nlo).map(|a| s(a, b) * lo[a]).sum::<f64>();
            }
            let mat = Mat::from_fn(nh, nh, |i, j| s(nlo + i, nlo + j));
            let lu = DenseLu::new(&mat).ok_or(Error::SingularMoments { what: "local stiffness", element: t })?;
            let hi = lu.solve_vec(&rhs);
            let dst = out.element_mut(t);
            dst[..nlo].copy_from_slice(lo);
            dst[nlo..].copy_from_slice(&hi);
        }
        Ok(out)
    }

    /// Nodal averaging onto continuous P^{k+2} with zero boundary values.
    /// Returns the nodal vector and its element-wise modal form.
    pub fn oswald_average(&self, mesh: &Mesh, u_star: &BrokenScalar) -> (FeFunction, BrokenScalar) {
        let m = self.k + 2;
        let dm = build_dofmap(mesh, SpaceTag::Lagrange(m));
        oswald_with(mesh, u_star, &dm, &self.vandermonde, &self.inv_vandermonde)
    }

    /// Σ* flux with σ*·n = σ_h·n, −div σ* = λ_h u*, and bubble moments of σ_h.
    pub fn postprocess_sigma(
        &self,
        mesh: &Mesh,
        sigma_coeffs: &[f64],
        sigma_h: &BrokenFlux,
        u_star: &BrokenScalar,
        lambda_h: f64,
    ) -> Result<BrokenFlux> {
        let fam = &self.reduced;
        let ne = fam.edge_dofs();
        let nd = fam.div_dofs();
        let nt = mesh.num_triangles();
        let mut out = BrokenFlux::zeros(fam.degree(), nt);
        let mut moments = vec![0.0; fam.dim()];
        for t in 0..nt {
            let g = ElementGeometry::of(mesh, t);
            for (le, e) in mesh.edge_of_triangle(t).into_iter().enumerate() {
                moments[le * ne..(le + 1) * ne].copy_from_slice(&sigma_coeffs[e * ne..(e + 1) * ne]);
            }
            let us = u_star.element(t);
            let sq = g.det.sqrt();
            for i in 0..nd {
                moments[3 * ne + i] = -lambda_h * sq * us[i + 1];
            }
            let vol = fam.bubble_moments(&g, sigma_h.element(t));
            moments[3 * ne + nd..].copy_from_slice(&vol);
            let solver = fam.factor(&g, mesh.edge_sign(t), t)?;
            out.element_mut(t).copy_from_slice(&solver.coefficients(&moments));
        }
        Ok(out)
    }
}

pub(crate) fn oswald_with(
    mesh: &Mesh,
    u: &BrokenScalar,
    dm: &DofMap,
    vandermonde: &Mat<f64>,
    inv_vandermonde: &Mat<f64>,
) -> (FeFunction, BrokenScalar) {
    let m = match dm.tag() {
        SpaceTag::Lagrange(m) => m,
        _ => unreachable!(),
    };
    let n = dim_p(m);
    let nt = mesh.num_triangles();
    let mut sum = vec![0.0; dm.n_dofs()];
    let mut count = vec![0u32; dm.n_dofs()];
    for t in 0..nt {
        let sq = ElementGeometry::of(mesh, t).det.sqrt();
        let c = u.element(t);
        for (i, &gi) in dm.element(t).iter().enumerate() {
            let v: f64 = (0..c.len().min(n)).map(|a| vandermonde[(i, a)] * c[a]).sum();
            sum[gi] += v / sq;
            count[gi] += 1;
        }
    }
    let boundary = lagrange_boundary_flags(mesh, m, dm.n_dofs());
    let nodal: Vec<f64> =
        (0..dm.n_dofs()).map(|i| if boundary[i] { 0.0 } else { sum[i] / f64::from(count[i]) }).collect();
    let mut out = BrokenScalar::zeros(m, nt);
    for t in 0..nt {
        let sq = ElementGeometry::of(mesh, t).det.sqrt();
        let vals: Vec<f64> = dm.element(t).iter().map(|&g| nodal[g]).collect();
        let dst = out.element_mut(t);
        for (a, d) in dst.iter_mut().enumerate() {
            *d = sq * (0..n).map(|i| inv_vandermonde[(a, i)] * vals[i]).sum::<f64>();
        }
    }
    (FeFunction { tag: SpaceTag::Lagrange(m), coeffs: nodal }, out)
}

/// Boundary flags of the continuous P^m nodes.
pub fn lagrange_boundary_flags(mesh: &Mesh, m: usize, n_dofs: usize) -> Vec<bool> {
    let nv = mesh.num_vertices();
    let per_edge = m - 1;
    let bv = mesh.boundary_vertices();
    (0..n_dofs)
        .map(|i| {
            if i < nv {
                bv[i]
            } else if i < nv + mesh.num_edges() * per_edge {
                mesh.is_boundary_edge((i - nv) / per_edge)
            } else {
                false
            }
        })
        .collect()
}

/// λ* = −(div σ_h, u*) / ‖u*‖².
pub fn postprocess_lambda(disc: &Discretization, sigma_h: &[f64], u_star: &BrokenScalar) -> Result<f64> {
    let nrm2 = u_star.dot(u_star);
    if nrm2.is_nan() || nrm2 <= 0.0 {
        return Err(Error::VanishingNorm);
    }
    let div = disc.b.mul_vec(sigma_h);
    let n = disc.u_map.n_local();
    let mut s = 0.0;
    for t in 0..u_star.n_elements() {
        let us = u_star.element(t);
        s += (0..n).map(|a| div[t * n + a] * us[a]).sum::<f64>();
    }
    Ok(-s / nrm2)
}
