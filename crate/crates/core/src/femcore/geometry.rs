//! Affine element maps and the contravariant Piola transform.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point2};

/// Affine map F(x̂) = v0 + J x̂ from the reference triangle onto an element.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [Point2; 3],
    /// `jac[r][c]`: row r, column c; columns are v1 - v0 and v2 - v0.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    inv: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn new(vertices: [Point2; 3]) -> Result<Self> {
        Self::try_new(vertices, 0)
    }

    pub fn of(mesh: &Mesh, t: usize) -> Self {
        Self::try_new(mesh.triangle_points(t), t).expect("mesh triangles are non-degenerate")
    }

    fn try_new(vertices: [Point2; 3], element: usize) -> Result<Self> {
        let [v0, v1, v2] = vertices;
        let jac = [[v1.x - v0.x, v2.x - v0.x], [v1.y - v0.y, v2.y - v0.y]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = (jac[0][0].abs() + jac[0][1].abs() + jac[1][0].abs() + jac[1][1].abs()).powi(2);
        if det == 0.0 || !det.is_finite() || det.abs() <= 1e-14 * scale {
            return Err(Error::DegenerateElement { element, det });
        }
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Ok(Self { vertices, jac, det, inv })
    }

    pub fn reference() -> Self {
        Self::new([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]).expect("reference triangle")
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn map(&self, xh: [f64; 2]) -> Point2 {
        let v0 = self.vertices[0];
        Point2::new(
            v0.x + self.jac[0][0] * xh[0] + self.jac[0][1] * xh[1],
            v0.y + self.jac[1][0] * xh[0] + self.jac[1][1] * xh[1],
        )
    }

    pub fn inverse_map(&self, x: Point2) -> [f64; 2] {
        let d = x - self.vertices[0];
        [self.inv[0][0] * d.x + self.inv[0][1] * d.y, self.inv[1][0] * d.x + self.inv[1][1] * d.y]
    }

    /// Contravariant Piola transform of a reference vector: J v̂ / det J.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }

    /// Physical divergence of a Piola-mapped field from its reference divergence.
    pub fn piola_div(&self, div_ref: f64) -> f64 {
        div_ref / self.det
    }

    /// Physical gradient of a pulled-back scalar: J^{-T} ∇̂.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [self.inv[0][0] * g[0] + self.inv[1][0] * g[1], self.inv[0][1] * g[0] + self.inv[1][1] * g[1]]
    }

    /// Metric JᵀJ.
    pub fn metric(&self) -> [[f64; 2]; 2] {
        let j = &self.jac;
        [
            [j[0][0] * j[0][0] + j[1][0] * j[1][0], j[0][0] * j[0][1] + j[1][0] * j[1][1]],
            [j[0][1] * j[0][0] + j[1][1] * j[1][0], j[0][1] * j[0][1] + j[1][1] * j[1][1]],
        ]
    }

    /// Inverse metric J⁻¹J⁻ᵀ, the pullback of the physical gradient inner product.
    pub fn inverse_metric(&self) -> [[f64; 2]; 2] {
        let i = &self.inv;
        [
            [i[0][0] * i[0][0] + i[0][1] * i[0][1], i[0][0] * i[1][0] + i[0][1] * i[1][1]],
            [i[1][0] * i[0][0] + i[1][1] * i[0][1], i[1][0] * i[1][0] + i[1][1] * i[1][1]],
        ]
    }

    /// Endpoints of local edge `i` in counter-clockwise traversal.
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[(i + 1) % 3], self.vertices[(i + 2) % 3])
    }

    /// Outward unit normal and length of local edge `i`.
    pub fn outward_normal(&self, i: usize) -> (Point2, f64) {
        let (a, b) = self.edge(i);
        let t = b - a;
        let l = t.norm();
        let n = Point2::new(t.y / l, -t.x / l);
        (if self.det > 0.0 { n } else { -1.0 * n }, l)
    }
}

/// Reference coordinates of the point at parameter `t` along local edge `i`,
/// traversed counter-clockwise.
pub fn reference_edge_point(i: usize, t: f64) -> [f64; 2] {
    const V: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let a = V[(i + 1) % 3];
    let b = V[(i + 2) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Pushes a reference vector field forward to the physical element.
pub fn piola_map<F>(geom: &ElementGeometry, field: F) -> impl Fn(Point2) -> [f64; 2] + '_
where
    F: Fn([f64; 2]) -> [f64; 2] + 'static,
{
    move |x| geom.piola(field(geom.inverse_map(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::poly::legendre01;
    use crate::femcore::quadrature::edge_rule;

    fn random_geometry(seed: u64) -> ElementGeometry {
        // small deterministic LCG, enough for well-shaped test elements
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let v0 = Point2::new(next(), next());
        let v1 = v0 + Point2::new(1.0 + 0.3 * next(), 0.3 * next());
        let v2 = v0 + Point2::new(0.3 * next(), 1.0 + 0.3 * next());
        ElementGeometry::new([v0, v1, v2]).unwrap()
    }

    #[test]
    fn identity_element() {
        let g = ElementGeometry::reference();
        assert_eq!(g.piola([0.3, -0.7]), [0.3, -0.7]);
        assert_eq!(g.grad([1.0, 2.0]), [1.0, 2.0]);
    }

    #[test]
    fn degenerate_is_rejected() {
        let p = Point2::new(0.0, 0.0);
        assert!(ElementGeometry::new([p, Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)]).is_err());
    }

    #[test]
    fn edge_flux_moments_are_piola_invariant() {
        let field = |x: [f64; 2]| [1.0 + x[0] * x[1] - 2.0 * x[1] * x[1], x[0] - 3.0 * x[0] * x[0] * x[1]];
        let (ts, ws) = edge_rule(12);
        for seed in 0..3 {
            let g = random_geometry(seed);
            let phys = piola_map(&g, field);
            for e in 0..3 {
                let (a, b) = g.edge(e);
                let (n, len) = g.outward_normal(e);
                let nref = ElementGeometry::reference().outward_normal(e);
                for j in 0..3 {
                    let mut physical = 0.0;
                    let mut reference = 0.0;
                    for (&t, &w) in ts.iter().zip(&ws) {
                        let r = legendre01(2, t)[j];
                        let x = a + t * (b - a);
                        let v = phys(x);
                        physical += w * r * (v[0] * n.x + v[1] * n.y) * len;
                        let vr = field(reference_edge_point(e, t));
                        reference += w * r * (vr[0] * nref.0.x + vr[1] * nref.0.y) * nref.1;
                    }
                    assert!((physical - reference).abs() < 1e-12, "{physical} vs {reference}");
                }
            }
        }
    }

    #[test]
    fn piola_preserves_divergence_free() {
        // curl of a scalar is divergence free; its Piola image has zero physical divergence
        let g = random_geometry(7);
        let div_ref = 0.0;
        assert_eq!(g.piola_div(div_ref), 0.0);
        // finite-difference check of the physical field
        let field = |x: [f64; 2]| [2.0 * x[1] + x[0], -x[1]];
        let phys = piola_map(&g, field);
        let c = g.map([0.3, 0.3]);
        let h = 1e-5;
        let dx = (phys(c + Point2::new(h, 0.0))[0] - phys(c - Point2::new(h, 0.0))[0]) / (2.0 * h);
        let dy = (phys(c + Point2::new(0.0, h))[1] - phys(c - Point2::new(0.0, h))[1]) / (2.0 * h);
        assert!((dx + dy).abs() < 1e-9);
    }
}
