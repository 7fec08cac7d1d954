//! A posteriori estimators η, η_λ and, given an exact solution, the true
//! errors, the higher-order remainders and the efficiency indices.

use std::f64::consts::PI;

use crate::assembly::{Discretization, DubinerTable};
use crate::eigensolve::MixedEigenSolution;
use crate::error::Result;
use crate::femcore::{project, ElementGeometry};
use crate::mesh::{Mesh, Point2};
use crate::postprocess::PostProcessed;

type ScalarFn = Box<dyn Fn(Point2) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

/// Exact eigenpair with σ = ∇u and ‖u‖₀ = 1.
pub struct ExactSolution {
    pub u: ScalarFn,
    pub sigma: VectorFn,
    pub lambda: f64,
}

impl ExactSolution {
    /// First Dirichlet eigenpair of the unit square, u = 2 sin(πx) sin(πy).
    pub fn unit_square() -> Self {
        Self {
            u: Box::new(|p| 2.0 * (PI * p.x).sin() * (PI * p.y).sin()),
            sigma: Box::new(|p| {
                [2.0 * PI * (PI * p.x).cos() * (PI * p.y).sin(), 2.0 * PI * (PI * p.x).sin() * (PI * p.y).cos()]
            }),
            lambda: 2.0 * PI * PI,
        }
    }
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution").field("lambda", &self.lambda).finish_non_exhaustive()
    }
}

/// Reference data available for error measurement.
#[derive(Clone, Copy, Debug)]
pub enum Reference<'a> {
    None,
    Eigenvalue(f64),
    Exact(&'a ExactSolution),
}

impl Reference<'_> {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Reference::None => None,
            Reference::Eigenvalue(l) => Some(*l),
            Reference::Exact(e) => Some(e.lambda),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EstimatorReport {
    pub eta_k: Vec<f64>,
    pub eta: f64,
    pub eta_lambda: f64,
    /// ‖σ_h − σ*‖₀.
    pub sigma_h_minus_star: f64,
    pub err_lambda: Option<f64>,
    pub err_lambda_star: Option<f64>,
    pub err_grad_u2: Option<f64>,
    pub err_sigma_star: Option<f64>,
    pub err_u2_l2: Option<f64>,
    pub err_u_star_l2: Option<f64>,
    pub err_sigma_h: Option<f64>,
    pub err_u_h: Option<f64>,
    /// ‖div(σ − σ*)‖₀ = ‖λu − λ_h u*‖₀.
    pub err_div_sigma_star: Option<f64>,
    /// ‖Π^k u − u_h‖₀.
    pub superconv_proj_err: Option<f64>,
    /// (u, u_h).
    pub overlap: Option<f64>,
    /// (σ* − σ, ∇(u − u**)), signed.
    pub cross: Option<f64>,
    /// −(div(σ* − σ), u − u**), the cross term after integration by parts.
    pub cross_by_parts: Option<f64>,
    pub hot: Option<f64>,
    pub hot_tilde: Option<f64>,
    pub eff: Option<f64>,
    pub eff_lambda: Option<f64>,
}

/// Computes every estimator quantity available for the given reference.
pub fn estimate(
    mesh: &Mesh,
    disc: &Discretization,
    sol: &MixedEigenSolution,
    post: &PostProcessed,
    reference: Reference<'_>,
    quad_degree: usize,
) -> Result<EstimatorReport> {
    let k = disc.k;
    let nt = mesh.num_triangles();
    let sigma_h = disc.sigma.to_broken(&sol.sigma_h);
    let u_h = disc.u_broken(&sol.u_h);
    let table = DubinerTable::new(k + 3, 2 * (k + 3))?;

    let mut eta_k = Vec::with_capacity(nt);
    let diff = sigma_h.widen(k + 3);
    let mut sig_diff = 0.0;
    for t in 0..nt {
        let g = ElementGeometry::of(mesh, t);
        let mut s = 0.0;
        for p in 0..table.len() {
            let (_, gu) = post.u_star2.eval(t, &g, table.at(p));
            let (ss, _) = post.sigma_star.eval(t, &g, table.at(p));
            s += table.rule.weights[p] * g.det * ((gu[0] - ss[0]).powi(2) + (gu[1] - ss[1]).powi(2));
        }
        eta_k.push(s.sqrt());
        let mut d = diff.element(t).to_vec();
        for (x, y) in d.iter_mut().zip(post.sigma_star.element(t)) {
            *x -= y;
        }
        sig_diff += crate::assembly::flux_norm_sq(&d, &g);
    }
    let eta2: f64 = eta_k.iter().map(|e| e * e).sum();
    let mixed = post.lambda_star * post.u_star.dot(&post.u_star2) - sol.lambda_h * u_h.dot(&post.u_star2);
    let eta_lambda = eta2 + sig_diff + mixed.abs();
    let mut report = EstimatorReport {
        eta_k,
        eta: eta2.sqrt(),
        eta_lambda,
        sigma_h_minus_star: sig_diff.sqrt(),
        ..Default::default()
    };
    if let Some(lambda) = reference.lambda() {
        report.err_lambda = Some((lambda - sol.lambda_h).abs());
        report.err_lambda_star = Some((lambda - post.lambda_star).abs());
        report.eff_lambda = Some(eta_lambda / (lambda - post.lambda_star).abs());
    }
    if let Reference::Exact(ex) = reference {
        exact_errors(mesh, disc, sol, post, ex, quad_degree, &mut report)?;
    }
    Ok(report)
}

fn exact_errors(
    mesh: &Mesh,
    disc: &Discretization,
    sol: &MixedEigenSolution,
    post: &PostProcessed,
    ex: &ExactSolution,
    quad_degree: usize,
    report: &mut EstimatorReport,
) -> Result<()> {
    let k = disc.k;
    let sigma_h = disc.sigma.to_broken(&sol.sigma_h);
    let u_h = disc.u_broken(&sol.u_h);
    let table = DubinerTable::new(k + 3, quad_degree)?;
    let (mut eg, mut es, mut eu2, mut eus, mut esh, mut euh) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut overlap, mut cross, mut by_parts, mut superconv, mut ediv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let g = ElementGeometry::of(mesh, t);
        for p in 0..table.len() {
            let dub = table.at(p);
            let x = g.map(table.rule.ref_point(p));
            let w = table.rule.weights[p] * g.det;
            let u = (ex.u)(x);
            let s = (ex.sigma)(x);
            let (u2, gu2) = post.u_star2.eval(t, &g, dub);
            let (us, _) = post.u_star.eval(t, &g, dub);
            let (uh, _) = u_h.eval(t, &g, dub);
            let (ss, _) = post.sigma_star.eval(t, &g, dub);
            let (sh, _) = sigma_h.eval(t, &g, dub);
            let dg = [s[0] - gu2[0], s[1] - gu2[1]];
            let dss = [ss[0] - s[0], ss[1] - s[1]];
            eg += w * (dg[0] * dg[0] + dg[1] * dg[1]);
            es += w * (dss[0] * dss[0] + dss[1] * dss[1]);
            esh += w * ((sh[0] - s[0]).powi(2) + (sh[1] - s[1]).powi(2));
            eu2 += w * (u - u2).powi(2);
            eus += w * (u - us).powi(2);
            euh += w * (u - uh).powi(2);
            overlap += w * u * uh;
            cross += w * (dss[0] * dg[0] + dss[1] * dg[1]);
            // div σ* = −λ_h u*, div σ = −λ u
            by_parts -= w * (-sol.lambda_h * us + ex.lambda * u) * (u - u2);
            ediv += w * (ex.lambda * u - sol.lambda_h * us).powi(2);
        }
        let pu = project(k, &ex.u, &g, quad_degree)?;
        superconv += pu.iter().zip(u_h.element(t)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    let (eg, es, eu2, eus) = (eg.sqrt(), es.sqrt(), eu2.sqrt(), eus.sqrt());
    report.err_grad_u2 = Some(eg);
    report.err_sigma_star = Some(es);
    report.err_u2_l2 = Some(eu2);
    report.err_u_star_l2 = Some(eus);
    report.err_sigma_h = Some(esh.sqrt());
    report.err_u_h = Some(euh.sqrt());
    report.superconv_proj_err = Some(superconv.sqrt());
    report.err_div_sigma_star = Some(ediv.sqrt());
    report.overlap = Some(overlap);
    report.cross = Some(cross);
    report.cross_by_parts = Some(by_parts);
    report.hot = Some(2.0 * cross.abs());
    report.hot_tilde = Some(eus * eu2 + eu2 * eu2);
    report.eff = Some(report.eta * report.eta / (eg * eg + es * es));
    Ok(())
}

/// Checks ‖∇(u − u**)‖² + ‖σ − σ*‖² = η² − 2(σ* − σ, ∇(u − u**)).
pub fn guaranteed_bound_check(report: &EstimatorReport) -> bool {
    match (report.err_grad_u2, report.err_sigma_star, report.cross) {
        (Some(eg), Some(es), Some(cross)) => {
            let lhs = eg * eg + es * es;
            let rhs = report.eta * report.eta - 2.0 * cross;
            let scale = lhs + report.eta * report.eta + 2.0 * cross.abs();
            (lhs - rhs).abs() <= 1e-9 * scale
        }
        _ => false,
    }
}
