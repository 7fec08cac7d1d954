//! Small dense linear algebra helpers on top of faer.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;

/// Factorized square matrix, or `None` if it is numerically singular.
pub struct DenseLu {
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl DenseLu {
    pub fn new(a: &Mat<f64>) -> Option<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let n = u.nrows();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if n > 0 && (!lo.is_finite() || !hi.is_finite() || lo <= 1e-14 * hi || hi == 0.0) {
            return None;
        }
        Some(Self { lu })
    }

    pub fn solve(&self, b: &Mat<f64>) -> Mat<f64> {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    pub fn inverse(&self) -> Mat<f64> {
        self.lu.inverse()
    }
}

/// 2-norm condition number.
pub fn condition_number(a: &Mat<f64>) -> f64 {
    match a.singular_values() {
        Ok(s) if !s.is_empty() => {
            let lo = *s.last().unwrap();
            if lo == 0.0 {
                f64::INFINITY
            } else {
                s[0] / lo
            }
        }
        _ => f64::INFINITY,
    }
}

/// Condition number after scaling every row to unit Euclidean norm.
pub fn row_scaled_condition(a: &Mat<f64>) -> f64 {
    let scaled = Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let n = (0..a.ncols()).map(|c| a[(i, c)] * a[(i, c)]).sum::<f64>().sqrt();
        if n == 0.0 {
            0.0
        } else {
            a[(i, j)] / n
        }
    });
    condition_number(&scaled)
}

/// Orthonormal basis of the null space of a full-row-rank `c` (rows are
/// constraints), from the QR factorization of cᵀ. Returns `None` when the
/// constraints are rank deficient.
pub fn null_space(c: &Mat<f64>) -> Option<Mat<f64>> {
    let (m, n) = (c.nrows(), c.ncols());
    assert!(m <= n);
    let s = c.singular_values().ok()?;
    if s.is_empty() || *s.last().unwrap() <= 1e-12 * s[0] {
        return None;
    }
    let q = c.transpose().to_owned().qr().compute_Q();
    Some(Mat::from_fn(n, n - m, |i, j| q[(i, m + j)]))
}

pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Mat<f64> {
    assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}
