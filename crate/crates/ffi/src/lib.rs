//! C ABI over the `mixest` library.
//!
//! Objects are exposed as opaque handles created by `mixest_*` constructors
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`MixestStatus`]; the message of the last failure on the calling
//! thread is available from [`mixest_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mixest::eigensolve::EigenOptions;
use mixest::estimator::Reference;
use mixest::experiments::{run_square_study, solve_level, ConvergenceRow, StudyOptions};
use mixest::mesh::{make_lshape, make_unit_square, Mesh};
use mixest::postprocess::PostProcessor;
use mixest::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixestStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    NullPointer = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Opaque triangulation.
pub struct MixestMesh(Mesh);

/// Opaque result of a solve: eigenpair, post-processed eigenvalue and
/// estimator on one mesh.
pub struct MixestSolution {
    n_elements: usize,
    n_dofs: usize,
    iterations: usize,
    lambda_h: f64,
    lambda_star: f64,
    eta: f64,
    eta_lambda: f64,
    eta_k: Vec<f64>,
    u_h: Vec<f64>,
}

/// One row of a convergence study. Quantities without a reference value are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MixestRow {
    pub n_elements: usize,
    pub n_dofs: usize,
    pub lambda_h: f64,
    pub lambda_star: f64,
    pub err_lambda_star: f64,
    pub err_u2_l2: f64,
    pub err_grad_u2: f64,
    pub err_sigma_star: f64,
    pub eta: f64,
    pub eta_lambda: f64,
    pub hot: f64,
    pub eff: f64,
    pub eff_lambda: f64,
    pub superconv_proj_err: f64,
}

impl From<&ConvergenceRow> for MixestRow {
    fn from(r: &ConvergenceRow) -> Self {
        let n = |v: Option<f64>| v.unwrap_or(f64::NAN);
        Self {
            n_elements: r.n_elements,
            n_dofs: r.n_dofs,
            lambda_h: r.lambda_h,
            lambda_star: r.lambda_star,
            err_lambda_star: n(r.err_lambda_star),
            err_u2_l2: n(r.err_u2_l2),
            err_grad_u2: n(r.err_grad_u2),
            err_sigma_star: n(r.err_sigma_star),
            eta: r.eta,
            eta_lambda: r.eta_lambda,
            hot: n(r.hot),
            eff: n(r.eff),
            eff_lambda: n(r.eff_lambda),
            superconv_proj_err: n(r.superconv_proj_err),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(MixestStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) | Error::MeshParse { .. } => MixestStatus::InvalidArgument,
            _ => MixestStatus::NumericalFailure,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MixestStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MixestStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MixestStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MixestStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn order(k: u32) -> Result<usize, Fail> {
    if (1..=3).contains(&k) {
        Ok(k as usize)
    } else {
        Err(Fail(MixestStatus::InvalidArgument, format!("order k = {k} outside 1..=3")))
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mixest_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Unit square split into `n`×`n` squares, each cut into two triangles.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_unit_square(n: usize, out: *mut *mut MixestMesh) -> MixestStatus {
    guard(|| write_out(out, MixestMesh(make_unit_square(n)?)))
}

/// L-shaped domain (−1,1)² minus the lower right quadrant, `n` squares per
/// unit length.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_lshape(n: usize, out: *mut *mut MixestMesh) -> MixestStatus {
    guard(|| write_out(out, MixestMesh(make_lshape(n)?)))
}

/// Parses a mesh from its text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_from_text(text: *const c_char, out: *mut *mut MixestMesh) -> MixestStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Fail(MixestStatus::InvalidArgument, "mesh text is not UTF-8".into()))?;
        write_out(out, MixestMesh(Mesh::from_text(s)?))
    })
}

/// One uniform red refinement.
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_refine_uniform(
    mesh: *const MixestMesh,
    out: *mut *mut MixestMesh,
) -> MixestStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        write_out(out, MixestMesh(m.0.refine_uniform()))
    })
}

/// Newest vertex bisection of the `n_marked` listed triangles plus closure.
///
/// # Safety
/// `mesh` must be a live handle, `marked` must point to `n_marked` indices
/// (or be NULL when `n_marked` is 0) and `out` a valid handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_refine_adaptive(
    mesh: *const MixestMesh,
    marked: *const usize,
    n_marked: usize,
    out: *mut *mut MixestMesh,
) -> MixestStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        let marked = if n_marked == 0 {
            &[][..]
        } else if marked.is_null() {
            return Err(null("marked"));
        } else {
            std::slice::from_raw_parts(marked, n_marked)
        };
        write_out(out, MixestMesh(m.0.refine_adaptive(marked)?))
    })
}

/// Number of triangles, or 0 for a NULL handle.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_num_triangles(mesh: *const MixestMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_triangles())
}

/// Number of vertices, or 0 for a NULL handle.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_num_vertices(mesh: *const MixestMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// Releases a mesh; NULL is ignored.
///
/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mixest_mesh_free(mesh: *mut MixestMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Solves for the first eigenpair with BDM elements of order `k`, then
/// post-processes and evaluates the estimators. `tol` ≤ 0 selects the default
/// eigenvalue tolerance.
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mixest_solve(
    mesh: *const MixestMesh,
    k: u32,
    tol: f64,
    out: *mut *mut MixestSolution,
) -> MixestStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        let k = order(k)?;
        let mut opts = StudyOptions::default();
        if tol > 0.0 {
            opts.eigen = EigenOptions { tol, ..opts.eigen };
        }
        let pp = PostProcessor::new(k)?;
        let r = solve_level(&m.0, k, 0, &pp, Reference::None, &opts)?;
        write_out(
            out,
            MixestSolution {
                n_elements: r.row.n_elements,
                n_dofs: r.row.n_dofs,
                iterations: r.solution.iterations,
                lambda_h: r.solution.lambda_h,
                lambda_star: r.post.lambda_star,
                eta: r.report.eta,
                eta_lambda: r.report.eta_lambda,
                eta_k: r.report.eta_k,
                u_h: r.solution.u_h,
            },
        )
    })
}

/// Scalar summary of a solution. Any output pointer may be NULL.
///
/// # Safety
/// `sol` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mixest_solution_summary(
    sol: *const MixestSolution,
    lambda_h: *mut f64,
    lambda_star: *mut f64,
    eta: *mut f64,
    eta_lambda: *mut f64,
) -> MixestStatus {
    guard(|| {
        let s = borrow(sol, "solution")?;
        for (p, v) in [(lambda_h, s.lambda_h), (lambda_star, s.lambda_star), (eta, s.eta), (eta_lambda, s.eta_lambda)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Mesh size, dof count dim Σ_h + dim U_h and inverse iteration count.
///
/// # Safety
/// `sol` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mixest_solution_sizes(
    sol: *const MixestSolution,
    n_elements: *mut usize,
    n_dofs: *mut usize,
    iterations: *mut usize,
) -> MixestStatus {
    guard(|| {
        let s = borrow(sol, "solution")?;
        for (p, v) in [(n_elements, s.n_elements), (n_dofs, s.n_dofs), (iterations, s.iterations)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if let Some(l) = len.as_mut() {
        *l = src.len();
    }
    if buf.is_null() && cap == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if cap < src.len() {
        return Err(Fail(MixestStatus::BufferTooSmall, format!("need {} entries, got {cap}", src.len())));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Per-element indicators η(K). Call with `buf` NULL and `cap` 0 to query the
/// length through `len`.
///
/// # Safety
/// `sol` must be a live handle, `buf` must hold `cap` doubles, `len` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mixest_solution_eta_k(
    sol: *const MixestSolution,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MixestStatus {
    guard(|| copy_out(&borrow(sol, "solution")?.eta_k, buf, cap, len))
}

/// Coefficients of u_h in the element-wise orthonormal basis, element by element.
///
/// # Safety
/// As for [`mixest_solution_eta_k`].
#[no_mangle]
pub unsafe extern "C" fn mixest_solution_u_h(
    sol: *const MixestSolution,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MixestStatus {
    guard(|| copy_out(&borrow(sol, "solution")?.u_h, buf, cap, len))
}

/// Releases a solution; NULL is ignored.
///
/// # Safety
/// `sol` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mixest_solution_free(sol: *mut MixestSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Uniform refinement study on the unit square starting from 32 triangles.
/// Writes `levels` rows into `rows`, which must hold at least `levels` entries.
///
/// # Safety
/// `rows` must point to `cap` writable rows.
#[no_mangle]
pub unsafe extern "C" fn mixest_square_study(k: u32, levels: usize, rows: *mut MixestRow, cap: usize) -> MixestStatus {
    guard(|| {
        let k = order(k)?;
        if rows.is_null() {
            return Err(null("rows"));
        }
        if cap < levels {
            return Err(Fail(MixestStatus::BufferTooSmall, format!("need {levels} rows, got {cap}")));
        }
        let out = run_square_study(k, levels, &StudyOptions::default())?;
        for (i, r) in out.iter().enumerate() {
            *rows.add(i) = MixestRow::from(r);
        }
        Ok(())
    })
}
