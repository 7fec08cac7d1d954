//! Quadrature on the reference triangle with vertices (0,0), (1,0), (0,1)
//! and on the unit interval.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 30;

/// A positive-weight rule on the reference triangle. Points are barycentric
/// triples `(1 - x - y, x, y)`; weights sum to the reference area 1/2.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cartesian reference coordinates of point `i`.
    pub fn ref_point(&self, i: usize) -> [f64; 2] {
        [self.points[i][1], self.points[i][2]]
    }

    pub fn ref_points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.ref_point(i)).collect()
    }
}

/// Rule exact for polynomials of total degree `degree`.
///
/// Degrees 0..=2 use the symmetric centroid and three-point rules; higher
/// degrees use a collapsed (Duffy) tensor product of Gauss-Legendre rules.
pub fn quadrature(degree: usize) -> Result<QuadRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree(degree));
    }
    let rule = match degree {
        0 | 1 => QuadRule { points: vec![[1.0 / 3.0; 3]], weights: vec![0.5], degree },
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            QuadRule { points: vec![[a, b, b], [b, a, b], [b, b, a]], weights: vec![1.0 / 6.0; 3], degree }
        }
        _ => collapsed_rule(degree),
    };
    Ok(rule)
}

fn collapsed_rule(degree: usize) -> QuadRule {
    // x = s (1 - t), y = t, dx dy = (1 - t) ds dt: degree `degree` in s and
    // `degree + 1` in t.
    let (s_pts, s_wts) = gauss_legendre((degree + 2) / 2);
    let (t_pts, t_wts) = gauss_legendre((degree + 2).div_ceil(2));
    let mut points = Vec::with_capacity(s_pts.len() * t_pts.len());
    let mut weights = Vec::with_capacity(s_pts.len() * t_pts.len());
    for (&t, &wt) in t_pts.iter().zip(&t_wts) {
        for (&s, &ws) in s_pts.iter().zip(&s_wts) {
            let x = s * (1.0 - t);
            let y = t;
            points.push([1.0 - x - y, x, y]);
            weights.push(ws * wt * (1.0 - t));
        }
    }
    QuadRule { points, weights, degree }
}

/// `n`-point Gauss-Legendre rule on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        pts[i] = 0.5 * (1.0 - x);
        pts[n - 1 - i] = 0.5 * (1.0 + x);
        wts[i] = 0.5 * w;
        wts[n - 1 - i] = 0.5 * w;
    }
    (pts, wts)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on [0, 1] exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre((degree + 2) / 2)
}
