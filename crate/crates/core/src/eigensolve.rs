//! Smallest eigenpair of the discrete mixed problem by inverse iteration.
//!
//! Every step solves the saddle point system
//!
//! ```text
//! [ A  Bᵀ ] [ s ]   [   0    ]
//! [ B  0  ] [ w ] = [ -M u_i ]
//! ```
//!
//! so that w = (B A⁻¹ Bᵀ)⁻¹ M u_i and s = -A⁻¹ Bᵀ w. The saddle matrix is
//! factorized once per mesh.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use crate::assembly::{Discretization, SparseMatrix};
use crate::error::{Error, Result};

/// Factorized saddle point operator of one discretization.
pub struct SaddleSolver {
    lu: Lu<usize, f64>,
    a: SparseMatrix,
    b: SparseMatrix,
}

impl SaddleSolver {
    pub fn new(a: &SparseMatrix, b: &SparseMatrix) -> Result<Self> {
        let ns = a.nrows();
        let nu = b.nrows();
        let mut t: Vec<(usize, usize, f64)> = a.triplets().collect();
        for (r, c, v) in b.triplets() {
            t.push((ns + r, c, v));
            t.push((c, ns + r, v));
        }
        let k = SparseMatrix::from_triplets(ns + nu, ns + nu, t).to_faer()?;
        let lu = k.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { lu, a: a.clone(), b: b.clone() })
    }

    pub fn n_sigma(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.nrows()
    }

    fn apply(&self, s: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut top = self.a.mul_vec(s);
        for (x, y) in top.iter_mut().zip(self.b.mul_transpose_vec(w)) {
            *x += y;
        }
        (top, self.b.mul_vec(s))
    }

    fn raw_solve(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ns = f.len();
        let rhs = Mat::from_fn(ns + g.len(), 1, |i, _| if i < ns { f[i] } else { g[i - ns] });
        let x = self.lu.solve(&rhs);
        let s = (0..ns).map(|i| x[(i, 0)]).collect();
        let w = (0..g.len()).map(|i| x[(ns + i, 0)]).collect();
        (s, w)
    }

    /// Solves the saddle system with right-hand side (f, g), followed by one
    /// step of iterative refinement.
    pub fn solve(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut s, mut w) = self.raw_solve(f, g);
        let (rf, rg) = self.apply(&s, &w);
        let df: Vec<f64> = f.iter().zip(&rf).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = g.iter().zip(&rg).map(|(a, b)| a - b).collect();
        let (cs, cw) = self.raw_solve(&df, &dg);
        s.iter_mut().zip(cs).for_each(|(x, c)| *x += c);
        w.iter_mut().zip(cw).for_each(|(x, c)| *x += c);
        (s, w)
    }

    /// Mixed source problem −(div σ, v) = (load, v): returns (σ, u) for a
    /// load given by its U_h moments.
    pub fn solve_source(&self, load: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f = vec![0.0; self.n_sigma()];
        let g: Vec<f64> = load.iter().map(|v| -v).collect();
        self.solve(&f, &g)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Relative Rayleigh quotient change at convergence.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 500 }
    }
}

/// Discrete eigentriple with ‖u_h‖₀ = 1 and ∫ u_h > 0.
#[derive(Clone, Debug)]
pub struct MixedEigenSolution {
    pub lambda_h: f64,
    pub u_h: Vec<f64>,
    pub sigma_h: Vec<f64>,
    pub iterations: usize,
    /// ‖−div σ_h − λ_h u_h‖₀.
    pub residual: f64,
}

fn m_norm(m: &SparseMatrix, x: &[f64]) -> f64 {
    m.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

/// Inverse iteration started from the projection of the constant 1.
pub fn solve_eigenpair(disc: &Discretization, opts: EigenOptions) -> Result<(MixedEigenSolution, SaddleSolver)> {
    let solver = SaddleSolver::new(&disc.a, &disc.b)?;
    let start = disc.integral_weights();
    let sol = inverse_iteration(&solver, &disc.m, &start, &start, opts)?;
    Ok((sol, solver))
}

/// Inverse iteration from `start`; the sign is fixed so that
/// `sign_weights · u_h > 0`.
pub fn inverse_iteration(
    solver: &SaddleSolver,
    m: &SparseMatrix,
    start: &[f64],
    sign_weights: &[f64],
    opts: EigenOptions,
) -> Result<MixedEigenSolution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("tolerance and iteration limit must be positive".into()));
    }
    // The eigenvector must settle well below the Rayleigh quotient tolerance
    // for the discrete equation −div σ_h = λ_h u_h to hold to rounding; a
    // stagnating change means the rounding floor has been reached.
    let vec_tol = 10.0 * opts.tol;
    let mut vchange_old = f64::INFINITY;
    let n0 = m_norm(m, start);
    if n0 == 0.0 || !n0.is_finite() {
        return Err(Error::InvalidArgument("initial iterate has zero norm".into()));
    }
    let mut u: Vec<f64> = start.iter().map(|v| v / n0).collect();
    let mut lambda_old = f64::NAN;
    let mut change = f64::INFINITY;
    let f = vec![0.0; solver.n_sigma()];
    for it in 1..=opts.max_iter {
        let g: Vec<f64> = m.mul_vec(&u).iter().map(|v| -v).collect();
        let (s, w) = solver.solve(&f, &g);
        let nw = m_norm(m, &w);
        if nw == 0.0 || !nw.is_finite() {
            return Err(Error::Factorization("inverse iteration produced a zero iterate".into()));
        }
        let mut sign = 1.0 / nw;
        let orient: f64 = w.iter().zip(sign_weights).map(|(a, b)| a * b).sum();
        if orient < 0.0 {
            sign = -sign;
        }
        let u_new: Vec<f64> = w.iter().map(|v| v * sign).collect();
        let sigma: Vec<f64> = s.iter().map(|v| v * sign).collect();
        let lambda: f64 = solver.a.mul_vec(&sigma).iter().zip(&sigma).map(|(a, b)| a * b).sum();
        let diff: Vec<f64> = u_new.iter().zip(&u).map(|(a, b)| a - b).collect();
        let vchange = m_norm(m, &diff);
        change = ((lambda - lambda_old) / lambda).abs();
        u = u_new;
        lambda_old = lambda;
        let stagnated = vchange > 0.9 * vchange_old && vchange < 1e-8;
        vchange_old = vchange;
        if change <= opts.tol && (vchange <= vec_tol || stagnated) {
            let bs = solver.b.mul_vec(&sigma);
            let mu = m.mul_vec(&u);
            let residual = bs.iter().zip(&mu).map(|(a, b)| (a + lambda * b).powi(2)).sum::<f64>().sqrt();
            return Ok(MixedEigenSolution { lambda_h: lambda, u_h: u, sigma_h: sigma, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_unit_square;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_first_eigenvalue() {
        let mesh = make_unit_square(4).unwrap();
        let disc = Discretization::new(&mesh, 1).unwrap();
        let (sol, _) = solve_eigenpair(&disc, EigenOptions::default()).unwrap();
        assert!((sol.lambda_h - 2.0 * PI * PI).abs() < 0.05 * 2.0 * PI * PI, "{}", sol.lambda_h);
        assert!(sol.iterations <= 60, "{}", sol.iterations);
        assert!(sol.residual <= 1e-9 * sol.lambda_h, "{}", sol.residual);
        let norm: f64 = sol.u_h.iter().map(|v| v * v).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
        let mean: f64 = sol.u_h.iter().zip(disc.integral_weights()).map(|(a, b)| a * b).sum();
        assert!(mean > 0.0);
    }

    #[test]
    fn scaled_start_gives_same_pair() {
        let mesh = make_unit_square(2).unwrap();
        let disc = Discretization::new(&mesh, 1).unwrap();
        let solver = SaddleSolver::new(&disc.a, &disc.b).unwrap();
        let w = disc.integral_weights();
        let s1 = inverse_iteration(&solver, &disc.m, &w, &w, EigenOptions::default()).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| -3.5 * v).collect();
        let s2 = inverse_iteration(&solver, &disc.m, &scaled, &w, EigenOptions::default()).unwrap();
        assert!((s1.lambda_h - s2.lambda_h).abs() < 1e-12 * s1.lambda_h);
        for (a, b) in s1.u_h.iter().zip(&s2.u_h) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_options() {
        let mesh = make_unit_square(1).unwrap();
        let disc = Discretization::new(&mesh, 1).unwrap();
        assert!(solve_eigenpair(&disc, EigenOptions { tol: 0.0, max_iter: 10 }).is_err());
        let r = solve_eigenpair(&disc, EigenOptions { tol: 1e-13, max_iter: 1 });
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
