//! Orthonormal polynomial bases: the Dubiner basis on the reference triangle
//! and Legendre polynomials on [0, 1].

use std::ops::{Add, Mul, Sub};

/// A value together with its first partial derivatives in x and y.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self { v, dx: 0.0, dy: 0.0 }
    }

    pub fn grad(self) -> [f64; 2] {
        [self.dx, self.dy]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, dx: self.dx + o.dx, dy: self.dy + o.dy }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet { v: self.v * o.v, dx: self.dx * o.v + self.v * o.dx, dy: self.dy * o.v + self.v * o.dy }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet { v: self * o.v, dx: self * o.dx, dy: self * o.dy }
    }
}

/// Dimension of P^m in two variables.
pub const fn dim_p(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Position of the Dubiner function ψ_{p,q} (total degree p + q) in the
/// hierarchical ordering.
pub const fn dubiner_index(p: usize, q: usize) -> usize {
    let n = p + q;
    n * (n + 1) / 2 + q
}

/// Evaluates the L²(reference)-orthonormal Dubiner basis of degree `m` with
/// gradients at the reference point (x, y). Functions are ordered by total
/// degree, so truncating to the first `dim_p(l)` entries spans P^l.
pub fn dubiner(m: usize, x: f64, y: f64) -> Vec<Jet> {
    let mut out = vec![Jet::default(); dim_p(m)];
    dubiner_into(m, x, y, &mut out);
    out
}

pub fn dubiner_into(m: usize, x: f64, y: f64, out: &mut [Jet]) {
    debug_assert!(out.len() >= dim_p(m));
    // collapsed coordinates on the (-1,1) reference: r = 2x - 1, s = 2y - 1
    let s = Jet { v: 2.0 * y - 1.0, dx: 0.0, dy: 2.0 };
    let one = Jet::constant(1.0);
    // (1 + 2r + s)/2 = 2x + y - 1
    let lin = Jet { v: 2.0 * x + y - 1.0, dx: 2.0, dy: 1.0 };
    // ((1 - s)/2)^2 = (1 - y)^2
    let half_one_minus_s = Jet { v: 1.0 - y, dx: 0.0, dy: -1.0 };
    let sq = half_one_minus_s * half_one_minus_s;

    let mut f_prev = one;
    let mut f = one;
    for p in 0..=m {
        if p == 1 {
            f_prev = one;
            f = lin;
        } else if p >= 2 {
            let pm = (p - 1) as f64;
            let next = (1.0 / p as f64) * ((2.0 * pm + 1.0) * (lin * f) - pm * (sq * f_prev));
            f_prev = f;
            f = next;
        }
        // Jacobi P_q^{(2p+1, 0)}(s)
        let a = (2 * p + 1) as f64;
        let mut g_prev = one;
        let mut g = one;
        for q in 0..=(m - p) {
            if q == 1 {
                g_prev = one;
                g = 0.5 * ((a + 2.0) * s + Jet::constant(a));
            } else if q >= 2 {
                let n = q as f64;
                let c = 2.0 * n * (n + a) * (2.0 * n + a - 2.0);
                let c1 = (2.0 * n + a - 1.0) / c;
                let c2 = 2.0 * (n + a - 1.0) * (n - 1.0) * (2.0 * n + a) / c;
                let next = c1 * ((2.0 * n + a) * (2.0 * n + a - 2.0) * s + Jet::constant(a * a)) * g - c2 * g_prev;
                g_prev = g;
                g = next;
            }
            let norm = (2.0 * (2 * p + 1) as f64 * (p + q + 1) as f64).sqrt();
            out[dubiner_index(p, q)] = norm * (f * g);
        }
    }
}

/// Legendre polynomials orthonormal on [0, 1], degrees 0..=n, at t.
pub fn legendre01(n: usize, t: f64) -> Vec<f64> {
    let x = 2.0 * t - 1.0;
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
        p.push(next);
    }
    for (k, v) in p.iter_mut().enumerate() {
        *v *= ((2 * k + 1) as f64).sqrt();
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::quadrature::{edge_rule, quadrature};

    #[test]
    fn dubiner_is_orthonormal() {
        let m = 8;
        let q = quadrature(2 * m).unwrap();
        let n = dim_p(m);
        let mut gram = vec![0.0; n * n];
        for i in 0..q.len() {
            let [x, y] = q.ref_point(i);
            let b = dubiner(m, x, y);
            for a in 0..n {
                for c in 0..n {
                    gram[a * n + c] += q.weights[i] * b[a].v * b[c].v;
                }
            }
        }
        for a in 0..n {
            for c in 0..n {
                let expect = if a == c { 1.0 } else { 0.0 };
                assert!((gram[a * n + c] - expect).abs() < 1e-12, "({a},{c}) = {}", gram[a * n + c]);
            }
        }
    }

    #[test]
    fn dubiner_constant_and_low_modes() {
        let b = dubiner(1, 0.3, 0.2);
        assert!((b[0].v - 2f64.sqrt()).abs() < 1e-15);
        // ψ_{1,0} = sqrt(12) (2x + y - 1), ψ_{0,1} = 2 (3y - 1)
        assert!((b[1].v - 12f64.sqrt() * (0.6 + 0.2 - 1.0)).abs() < 1e-14);
        assert!((b[2].v - 2.0 * (0.6 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn dubiner_gradients_match_finite_differences() {
        let m = 6;
        let (x, y, h) = (0.27, 0.41, 1e-6);
        let b = dubiner(m, x, y);
        let bx = (dubiner(m, x + h, y), dubiner(m, x - h, y));
        let by = (dubiner(m, x, y + h), dubiner(m, x, y - h));
        for i in 0..dim_p(m) {
            let fdx = (bx.0[i].v - bx.1[i].v) / (2.0 * h);
            let fdy = (by.0[i].v - by.1[i].v) / (2.0 * h);
            assert!((b[i].dx - fdx).abs() < 1e-6 * (1.0 + fdx.abs()));
            assert!((b[i].dy - fdy).abs() < 1e-6 * (1.0 + fdy.abs()));
        }
    }

    #[test]
    fn legendre_is_orthonormal() {
        let (p, w) = edge_rule(20);
        for a in 0..=9 {
            for b in 0..=9 {
                let v: f64 = p
                    .iter()
                    .zip(&w)
                    .map(|(&t, &w)| {
                        let l = legendre01(9, t);
                        w * l[a] * l[b]
                    })
                    .sum();
                assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }
}
