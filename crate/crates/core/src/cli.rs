//! Command line front end of the `mixest` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::eigensolve::EigenOptions;
use crate::error::{Error, Result};
use crate::experiments::{
    format_table, run_lshape_adaptive, run_square_levels, tail_slope, to_csv, ConvergenceRow, RateBasis, StudyOptions,
    ROUNDING_FLOOR,
};

#[derive(Parser, Debug)]
#[command(name = "mixest", version, about = "Mixed FEM eigenvalue estimators for the Laplacian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Uniform refinement on the unit square
    Square(StudyArgs),
    /// Adaptive refinement on the L-shaped domain
    Lshape(StudyArgs),
    /// Superconvergence and auxiliary problem check on the unit square
    Superconv(StudyArgs),
    /// Invariant suite on small meshes, no exact solution needed
    Verify(StudyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    /// Polynomial order of the BDM space
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub k: u64,
    /// Number of meshes in the uniform studies, starting from 32 triangles
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..=7))]
    pub levels: u64,
    /// Write the CSV to this path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Degree-of-freedom budget of the adaptive loop
    #[arg(long, default_value_t = 200_000)]
    pub max_dofs: usize,
    /// Quadrature degree for errors against the exact solution
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..=40))]
    pub quad_degree: u64,
    /// Relative eigenvalue tolerance of the inverse iteration
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
}

impl StudyArgs {
    fn options(&self) -> Result<StudyOptions> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.tol >= 1.0 {
            return Err(Error::InvalidArgument(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(StudyOptions {
            eigen: EigenOptions { tol: self.tol, ..EigenOptions::default() },
            quad_degree: self.quad_degree as usize,
        })
    }
}

/// Runs a parsed command, writing the report to `out`. Returns the process
/// exit code.
pub fn run(cli: &Cli, out: &mut impl std::io::Write) -> Result<i32> {
    match &cli.command {
        Command::Square(a) => {
            let rows = run_square_levels(a.k as usize, a.levels as usize, &a.options()?, |_| {})?;
            emit(out, a, &rows, RateBasis::Uniform)?;
            Ok(0)
        }
        Command::Superconv(a) => {
            let mut extra = Vec::new();
            let rows = run_square_levels(a.k as usize, a.levels as usize, &a.options()?, |r| {
                let aux = r.aux.as_ref().expect("exact solution present");
                extra.push((aux.identity_residual, aux.uh_minus_hat));
            })?;
            emit(out, a, &rows, RateBasis::Uniform)?;
            writeln!(
                out,
                "\n{:>8}  {:>24}  {:>14}  {:>14}",
                "|T|", "|l_h(uh^,u_h)-l(u,u_h)|", "|u_h-uh^|", "|P u-uh^|"
            )?;
            for (r, (id, d)) in rows.iter().zip(extra) {
                writeln!(
                    out,
                    "{:>8}  {:>24.3e}  {:>14.4e}  {:>14.4e}",
                    r.n_elements,
                    id,
                    d,
                    r.aux_proj_err.unwrap_or(f64::NAN)
                )?;
            }
            Ok(0)
        }
        Command::Lshape(a) => {
            let rows = run_lshape_adaptive(a.k as usize, a.max_dofs, &a.options()?, |_| {})?;
            emit(out, a, &rows, RateBasis::Dofs)?;
            let eta = tail_slope(&rows, |r| Some(r.eta), 0.0);
            let lam = tail_slope(&rows, |r| r.err_lambda_star, ROUNDING_FLOOR);
            let f = |s: Option<f64>| s.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            writeln!(out, "\nslope vs N: eta {}, |lambda-lambda*| {}", f(eta), f(lam))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let checks = crate::verify::run_suite(a.k as usize, a.options()?.eigen)?;
            for c in &checks {
                writeln!(out, "{c}")?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(out, "{} checks, {failed} failed", checks.len())?;
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn emit(out: &mut impl std::io::Write, a: &StudyArgs, rows: &[ConvergenceRow], basis: RateBasis) -> Result<()> {
    write!(out, "{}", format_table(rows, basis))?;
    if let Some(path) = &a.out {
        std::fs::write(path, to_csv(rows, basis))?;
    }
    Ok(())
}

/// Exit code for an error: 2 for invalid input, 1 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::MeshParse { .. } => 2,
        _ => 1,
    }
}
