//! Convergence studies: uniform refinement on the unit square, the adaptive
//! loop on the L-shaped domain, and the superconvergence harness.

use std::fmt::Write as _;
use std::io::Write;

use crate::assembly::Discretization;
use crate::eigensolve::{solve_eigenpair, EigenOptions, MixedEigenSolution, SaddleSolver};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorReport, ExactSolution, Reference};
use crate::femcore::{project, ElementGeometry};
use crate::mesh::{make_lshape, make_unit_square, Mesh};
use crate::postprocess::{PostProcessed, PostProcessor};

/// Reference eigenvalue of the L-shaped domain (−1,1)² \ [0,1]×[−1,0].
pub const LSHAPE_LAMBDA: f64 = 9.6397238440219;

/// λ-errors below this level are rounding dominated and excluded from fits.
pub const ROUNDING_FLOOR: f64 = 1e-11;

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    pub eigen: EigenOptions,
    /// Quadrature degree for integrals against the exact solution.
    pub quad_degree: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { eigen: EigenOptions::default(), quad_degree: 20 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub lambda_h: f64,
    pub lambda_star: f64,
    pub err_lambda: Option<f64>,
    pub err_lambda_star: Option<f64>,
    pub err_u2_l2: Option<f64>,
    pub err_grad_u2: Option<f64>,
    pub err_sigma_star: Option<f64>,
    pub eta: f64,
    pub eta_lambda: f64,
    pub hot: Option<f64>,
    pub hot_tilde: Option<f64>,
    pub eff: Option<f64>,
    pub eff_lambda: Option<f64>,
    pub superconv_proj_err: Option<f64>,
    pub aux_proj_err: Option<f64>,
}

/// Everything computed on one mesh.
pub struct LevelResult {
    pub row: ConvergenceRow,
    pub disc: Discretization,
    pub solution: MixedEigenSolution,
    pub post: PostProcessed,
    pub report: EstimatorReport,
    pub solver: SaddleSolver,
    pub aux: Option<AuxData>,
}

/// Auxiliary source problem −(div σ̂, v) = λ(u, v) on the same mesh.
#[derive(Clone, Debug)]
pub struct AuxData {
    pub u_hat: Vec<f64>,
    /// |λ_h(û_h, u_h) − λ(u, u_h)|.
    pub identity_residual: f64,
    /// ‖Π^k u − û_h‖₀.
    pub proj_err: f64,
    /// ‖u_h − û_h‖₀.
    pub uh_minus_hat: f64,
}

/// Solves, post-processes and estimates on one mesh.
pub fn solve_level(
    mesh: &Mesh,
    k: usize,
    level: usize,
    pp: &PostProcessor,
    reference: Reference<'_>,
    opts: &StudyOptions,
) -> Result<LevelResult> {
    let disc = Discretization::new(mesh, k)?;
    let (solution, solver) = solve_eigenpair(&disc, opts.eigen)?;
    let post = pp.run(mesh, &disc, &solution)?;
    let report = estimate(mesh, &disc, &solution, &post, reference, opts.quad_degree)?;
    if let Some(o) = report.overlap {
        if o <= 0.0 {
            return Err(Error::SignMismatch);
        }
    }
    let aux = match reference {
        Reference::Exact(ex) => Some(auxiliary(mesh, &disc, &solver, &solution, ex, opts.quad_degree)?),
        _ => None,
    };
    let row = ConvergenceRow {
        level,
        n_elements: mesh.num_triangles(),
        n_dofs: disc.n_sigma() + disc.n_u(),
        lambda_h: solution.lambda_h,
        lambda_star: post.lambda_star,
        err_lambda: report.err_lambda,
        err_lambda_star: report.err_lambda_star,
        err_u2_l2: report.err_u2_l2,
        err_grad_u2: report.err_grad_u2,
        err_sigma_star: report.err_sigma_star,
        eta: report.eta,
        eta_lambda: report.eta_lambda,
        hot: report.hot,
        hot_tilde: report.hot_tilde,
        eff: report.eff,
        eff_lambda: report.eff_lambda,
        superconv_proj_err: report.superconv_proj_err,
        aux_proj_err: aux.as_ref().map(|a| a.proj_err),
    };
    Ok(LevelResult { row, disc, solution, post, report, solver, aux })
}

fn auxiliary(
    mesh: &Mesh,
    disc: &Discretization,
    solver: &SaddleSolver,
    sol: &MixedEigenSolution,
    ex: &ExactSolution,
    quad_degree: usize,
) -> Result<AuxData> {
    let n = disc.u_map.n_local();
    let mut pu = vec![0.0; disc.n_u()];
    for t in 0..mesh.num_triangles() {
        let g = ElementGeometry::of(mesh, t);
        pu[t * n..(t + 1) * n].copy_from_slice(&project(disc.k, &ex.u, &g, quad_degree)?);
    }
    let load: Vec<f64> = pu.iter().map(|v| ex.lambda * v).collect();
    let (_, u_hat) = solver.solve_source(&load);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let identity_residual = (sol.lambda_h * dot(&u_hat, &sol.u_h) - ex.lambda * dot(&pu, &sol.u_h)).abs();
    Ok(AuxData { identity_residual, proj_err: dist(&pu, &u_hat), uh_minus_hat: dist(&sol.u_h, &u_hat), u_hat })
}

fn check_order(k: usize, allowed: std::ops::RangeInclusive<usize>) -> Result<()> {
    if allowed.contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("order k = {k} outside {}..={}", allowed.start(), allowed.end())))
    }
}

/// Uniform refinement of the 32-element unit square mesh; `levels` meshes.
pub fn run_square_levels(
    k: usize,
    levels: usize,
    opts: &StudyOptions,
    mut on_level: impl FnMut(&LevelResult),
) -> Result<Vec<ConvergenceRow>> {
    check_order(k, 1..=3)?;
    if levels == 0 || levels > 7 {
        return Err(Error::InvalidArgument(format!("levels = {levels} outside 1..=7")));
    }
    let ex = ExactSolution::unit_square();
    let pp = PostProcessor::new(k)?;
    let mut mesh = make_unit_square(4)?;
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refine_uniform();
        }
        let res = solve_level(&mesh, k, level, &pp, Reference::Exact(&ex), opts)?;
        on_level(&res);
        rows.push(res.row);
    }
    Ok(rows)
}

pub fn run_square_study(k: usize, levels: usize, opts: &StudyOptions) -> Result<Vec<ConvergenceRow>> {
    run_square_levels(k, levels, opts, |_| {})
}

/// Superconvergence harness: rows with ‖Π^k u − u_h‖₀ and the auxiliary
/// problem data per level.
pub fn run_superconvergence_check(
    k: usize,
    levels: usize,
    opts: &StudyOptions,
) -> Result<Vec<(ConvergenceRow, AuxData)>> {
    let mut aux = Vec::new();
    let rows = run_square_levels(k, levels, opts, |r| aux.push(r.aux.clone().expect("exact solution present")))?;
    Ok(rows.into_iter().zip(aux).collect())
}

/// Adaptive loop SOLVE → ESTIMATE → MARK → REFINE on the L-shape, marking
/// every element with η(K) ≥ max η / 4, while the dof count stays within
/// `max_dofs`.
pub fn run_lshape_adaptive(
    k: usize,
    max_dofs: usize,
    opts: &StudyOptions,
    mut on_level: impl FnMut(&LevelResult),
) -> Result<Vec<ConvergenceRow>> {
    check_order(k, 1..=3)?;
    let pp = PostProcessor::new(k)?;
    let mut mesh = make_lshape(2)?;
    let mut rows = Vec::new();
    for level in 0.. {
        if dofs_of(&mesh, k) > max_dofs {
            if rows.is_empty() {
                return Err(Error::InvalidArgument(format!("budget {max_dofs} is below the initial mesh size")));
            }
            break;
        }
        let res = solve_level(&mesh, k, level, &pp, Reference::Eigenvalue(LSHAPE_LAMBDA), opts)?;
        on_level(&res);
        let marked = mark(&res.report.eta_k);
        rows.push(res.row);
        mesh = mesh.refine_adaptive(&marked)?;
    }
    Ok(rows)
}

/// dim Σ_h + dim U_h.
pub fn dofs_of(mesh: &Mesh, k: usize) -> usize {
    mesh.num_edges() * (k + 2) + mesh.num_triangles() * (k * (k + 2) + (k + 1) * (k + 2) / 2)
}

/// Elements with η(K) ≥ ¼ max η(K).
pub fn mark(eta_k: &[f64]) -> Vec<usize> {
    let max = eta_k.iter().cloned().fold(0.0f64, f64::max);
    (0..eta_k.len()).filter(|&t| eta_k[t] >= 0.25 * max).collect()
}

/// log₂ of consecutive ratios; `None` where either value is absent or zero.
pub fn rates(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = vec![None];
    for w in values.windows(2) {
        out.push(match (w[0], w[1]) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
            _ => None,
        });
    }
    out.truncate(values.len());
    out
}

/// Empirical orders with respect to the dof count: −Δlog e / Δlog N, scaled
/// so that uniform 2D refinement (N × 4) reports the same numbers as `rates`.
pub fn dof_rates(n: &[usize], values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = vec![None];
    for i in 1..values.len() {
        out.push(match (values[i - 1], values[i]) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 && n[i] != n[i - 1] => {
                Some(2.0 * (a / b).ln() / (n[i] as f64 / n[i - 1] as f64).ln())
            }
            _ => None,
        });
    }
    out.truncate(values.len());
    out
}

/// Least-squares slope of log y against log x.
pub fn lsq_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope fit over the asymptotic tail: rows with N ≥ N_last / 100 and, for
/// eigenvalue errors, values above the rounding floor.
pub fn tail_slope(rows: &[ConvergenceRow], value: impl Fn(&ConvergenceRow) -> Option<f64>, floor: f64) -> Option<f64> {
    let last = rows.last()?.n_dofs as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.n_dofs as f64 >= last / 100.0)
        .filter_map(|r| value(r).filter(|v| *v >= floor).map(|v| (r.n_dofs as f64, v)))
        .unzip();
    lsq_slope(&x, &y)
}

/// Error-like columns that carry a rate column in the CSV output.
pub const RATE_COLUMNS: [&str; 11] = [
    "err_lambda",
    "err_lambda_star",
    "err_u2_L2",
    "err_grad_u2",
    "err_sigma_star",
    "eta",
    "eta_lambda",
    "hot",
    "hot_tilde",
    "superconv_proj_err",
    "aux_proj_err",
];

impl ConvergenceRow {
    fn rated(&self) -> [Option<f64>; 11] {
        [
            self.err_lambda,
            self.err_lambda_star,
            self.err_u2_l2,
            self.err_grad_u2,
            self.err_sigma_star,
            Some(self.eta),
            Some(self.eta_lambda),
            self.hot,
            self.hot_tilde,
            self.superconv_proj_err,
            self.aux_proj_err,
        ]
    }
}

/// How the rate columns are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateBasis {
    /// Consecutive uniform refinements, log₂ ratios.
    Uniform,
    /// Arbitrary meshes, orders with respect to the dof count.
    Dofs,
}

fn rate_table(rows: &[ConvergenceRow], basis: RateBasis) -> Vec<Vec<Option<f64>>> {
    let cols: Vec<Vec<Option<f64>>> =
        (0..RATE_COLUMNS.len()).map(|c| rows.iter().map(|r| r.rated()[c]).collect()).collect();
    let n: Vec<usize> = rows.iter().map(|r| r.n_dofs).collect();
    cols.iter()
        .map(|v| match basis {
            RateBasis::Uniform => rates(v),
            RateBasis::Dofs => dof_rates(&n, v),
        })
        .collect()
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// CSV with the row fields followed by one rate column per error column.
pub fn to_csv(rows: &[ConvergenceRow], basis: RateBasis) -> String {
    let mut s = String::from(
        "level,n_elements,n_dofs,lambda_h,lambda_star,err_lambda,err_lambda_star,err_u2_L2,err_grad_u2,\
         err_sigma_star,eta,eta_lambda,hot,hot_tilde,eff,eff_lambda,superconv_proj_err,aux_proj_err",
    );
    for c in RATE_COLUMNS {
        let _ = write!(s, ",rate_{c}");
    }
    s.push('\n');
    let rates = rate_table(rows, basis);
    for (i, r) in rows.iter().enumerate() {
        let fields = [
            r.level.to_string(),
            r.n_elements.to_string(),
            r.n_dofs.to_string(),
            fmt_f(r.lambda_h),
            fmt_f(r.lambda_star),
            fmt_opt(r.err_lambda),
            fmt_opt(r.err_lambda_star),
            fmt_opt(r.err_u2_l2),
            fmt_opt(r.err_grad_u2),
            fmt_opt(r.err_sigma_star),
            fmt_f(r.eta),
            fmt_f(r.eta_lambda),
            fmt_opt(r.hot),
            fmt_opt(r.hot_tilde),
            fmt_opt(r.eff),
            fmt_opt(r.eff_lambda),
            fmt_opt(r.superconv_proj_err),
            fmt_opt(r.aux_proj_err),
        ];
        s.push_str(&fields.join(","));
        for col in &rates {
            s.push(',');
            s.push_str(&fmt_opt(col[i]));
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &std::path::Path, rows: &[ConvergenceRow], basis: RateBasis) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(to_csv(rows, basis).as_bytes())?;
    Ok(())
}

/// Human-readable table; error columns show their rate in parentheses.
pub fn format_table(rows: &[ConvergenceRow], basis: RateBasis) -> String {
    let rates = rate_table(rows, basis);
    // (header, rate column index into RATE_COLUMNS, value)
    type Getter = fn(&ConvergenceRow) -> Option<f64>;
    let cols: [(&str, Option<usize>, Getter); 11] = [
        ("|grad(u-u**)|", Some(3), |r| r.err_grad_u2),
        ("|sigma-sigma*|", Some(4), |r| r.err_sigma_star),
        ("eta", Some(5), |r| Some(r.eta)),
        ("hot", Some(7), |r| r.hot),
        ("eff", None, |r| r.eff),
        ("|lambda-lambda*|", Some(1), |r| r.err_lambda_star),
        ("eta_lambda", Some(6), |r| Some(r.eta_lambda)),
        ("|u-u**|", Some(2), |r| r.err_u2_l2),
        ("eff_lambda", None, |r| r.eff_lambda),
        ("|P u-u_h|", Some(9), |r| r.superconv_proj_err),
        ("|P u-u^_h|", Some(10), |r| r.aux_proj_err),
    ];
    let present: Vec<_> = cols.iter().filter(|c| rows.iter().any(|r| (c.2)(r).is_some())).collect();
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut header = vec!["|T|".to_string(), "N".to_string()];
    header.extend(present.iter().map(|c| c.0.to_string()));
    cells.push(header);
    for (i, r) in rows.iter().enumerate() {
        let mut line = vec![r.n_elements.to_string(), r.n_dofs.to_string()];
        for c in &present {
            let v = (c.2)(r).map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
            let rate = c.1.and_then(|j| rates[j][i]).map(|x| format!(" ({x:.2})")).unwrap_or_default();
            line.push(format!("{v}{rate}"));
        }
        cells.push(line);
    }
    let widths: Vec<usize> =
        (0..cells[0].len()).map(|j| cells.iter().map(|l| l[j].chars().count()).max().unwrap()).collect();
    let mut out = String::new();
    for line in &cells {
        let parts: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_recover_geometric_sequences() {
        let v: Vec<Option<f64>> = (0..6).map(|i| Some(3.0 * 2f64.powi(-3 * i))).collect();
        let r = rates(&v);
        assert!(r[0].is_none());
        for x in &r[1..] {
            assert!((x.unwrap() - 3.0).abs() < 1e-12);
        }
        let n: Vec<usize> = (0..6).map(|i| 100 * 4usize.pow(i)).collect();
        for x in &dof_rates(&n, &v)[1..] {
            assert!((x.unwrap() - 3.0).abs() < 1e-12);
        }
        let xs: Vec<f64> = (1..8).map(|i| 10f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 5.0 * x.powf(-2.5)).collect();
        assert!((lsq_slope(&xs, &ys).unwrap() + 2.5).abs() < 1e-12);
    }

    #[test]
    fn marking_contains_maximum() {
        let m = mark(&[0.1, 0.4, 0.09, 1.0, 0.25]);
        assert_eq!(m, vec![1, 3, 4]);
    }

    #[test]
    fn dof_count_matches_discretization() {
        let mesh = make_lshape(1).unwrap();
        for k in 1..=3 {
            let d = Discretization::new(&mesh, k).unwrap();
            assert_eq!(dofs_of(&mesh, k), d.n_sigma() + d.n_u());
        }
    }

    #[test]
    fn csv_schema() {
        let rows = run_square_study(1, 2, &StudyOptions::default()).unwrap();
        let csv = to_csv(&rows, RateBasis::Uniform);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let ncols = lines[0].split(',').count();
        assert_eq!(ncols, 18 + RATE_COLUMNS.len());
        assert!(lines.iter().all(|l| l.split(',').count() == ncols));
        // first row has empty rate columns, second row has them
        assert!(lines[1].split(',').skip(18).all(|f| f.is_empty()));
        assert!(lines[2].split(',').skip(18).take(9).all(|f| !f.is_empty()));
        assert_eq!(csv, to_csv(&run_square_study(1, 2, &StudyOptions::default()).unwrap(), RateBasis::Uniform));
        assert!(format_table(&rows, RateBasis::Uniform).lines().count() == 3);
    }
}
