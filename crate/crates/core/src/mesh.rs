//! Conforming triangulations of polygonal domains.
//!
//! Triangles are stored counter-clockwise. Local edge `i` of a triangle joins
//! local vertices `(i + 1) % 3` and `(i + 2) % 3`, i.e. it lies opposite local
//! vertex `i`. Global edges are oriented from the lower to the higher vertex
//! index; their unit normal is the tangent rotated by -90 degrees.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.x, self * p.y)
    }
}

const NO_TRIANGLE: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_of_triangle: Vec<[usize; 3]>,
    /// +1 when the global edge orientation agrees with the counter-clockwise
    /// traversal of the triangle, -1 otherwise.
    edge_sign: Vec<[i8; 3]>,
    edge_triangles: Vec<[usize; 2]>,
    boundary_edge: Vec<bool>,
    level: Vec<u32>,
    refinement_edge: Vec<u8>,
}

impl Mesh {
    /// Builds the edge topology for a triangle soup. Triangles must be
    /// counter-clockwise; `refinement_edge` holds local edge indices.
    pub fn new(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        level: Vec<u32>,
        refinement_edge: Vec<u8>,
    ) -> Result<Self> {
        let nt = triangles.len();
        if level.len() != nt || refinement_edge.len() != nt {
            return Err(Error::InvalidArgument("per-triangle arrays must match the triangle count".into()));
        }
        for v in &vertices {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::InvalidArgument("non-finite vertex coordinate".into()));
            }
        }
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * nt);
        let mut edges = Vec::with_capacity(2 * nt);
        let mut edge_triangles: Vec<[usize; 2]> = Vec::with_capacity(2 * nt);
        let mut edge_of_triangle = Vec::with_capacity(nt);
        let mut edge_sign = Vec::with_capacity(nt);
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            if refinement_edge[t] > 2 {
                return Err(Error::InvalidArgument(format!("triangle {t} has refinement edge > 2")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::DegenerateElement { element: t, det: 2.0 * area });
            }
            let mut eot = [0usize; 3];
            let mut sgn = [0i8; 3];
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_triangles.push([NO_TRIANGLE, NO_TRIANGLE]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0] == NO_TRIANGLE {
                    slot[0] = t;
                } else if slot[1] == NO_TRIANGLE {
                    slot[1] = t;
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key.0, key.1
                    )));
                }
                eot[i] = e;
                sgn[i] = if a < b { 1 } else { -1 };
            }
            edge_of_triangle.push(eot);
            edge_sign.push(sgn);
        }
        let boundary_edge = edge_triangles.iter().map(|s| s[1] == NO_TRIANGLE).collect();
        Ok(Self {
            vertices,
            triangles,
            edges,
            edge_of_triangle,
            edge_sign,
            edge_triangles,
            boundary_edge,
            level,
            refinement_edge,
        })
    }

    /// Builds a level-0 mesh whose refinement edges follow the longest-edge
    /// rule (ties broken by the lowest opposite vertex index).
    pub fn from_triangles(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let refinement_edge = triangles.iter().map(|t| longest_edge(&vertices, t)).collect();
        let level = vec![0; triangles.len()];
        Self::new(vertices, triangles, level, refinement_edge)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_of_triangle(&self, t: usize) -> [usize; 3] {
        self.edge_of_triangle[t]
    }

    pub fn edge_sign(&self, t: usize) -> [i8; 3] {
        self.edge_sign[t]
    }

    /// Triangles adjacent to edge `e`; the second entry is `None` on the boundary.
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        let [a, b] = self.edge_triangles[e];
        (a, (b != NO_TRIANGLE).then_some(b))
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn boundary_edges(&self) -> &[bool] {
        &self.boundary_edge
    }

    pub fn level(&self, t: usize) -> u32 {
        self.level[t]
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.refinement_edge[t] as usize
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Unit normal of edge `e` in its global orientation.
    pub fn edge_normal(&self, e: usize) -> Point2 {
        let [a, b] = self.edges[e];
        let t = self.vertices[b] - self.vertices[a];
        let l = t.norm();
        Point2::new(t.y / l, -t.x / l)
    }

    /// Vertices that are endpoints of at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.boundary_edge[e] {
                flag[a] = true;
                flag[b] = true;
            }
        }
        flag
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let p = self.triangle_points(t);
                (0..3)
                    .map(|i| {
                        let u = p[(i + 1) % 3] - p[i];
                        let v = p[(i + 2) % 3] - p[i];
                        (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that no vertex lies in the relative interior of an edge and
    /// that every edge has one or two neighbours.
    pub fn is_conforming(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let (mut xmin, mut ymin, mut xmax, mut ymax) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
            xmax = xmax.max(p.x);
            ymax = ymax.max(p.y);
        }
        let nb = ((self.vertices.len() as f64).sqrt().ceil() as usize).max(1);
        let wx = ((xmax - xmin) / nb as f64).max(f64::MIN_POSITIVE);
        let wy = ((ymax - ymin) / nb as f64).max(f64::MIN_POSITIVE);
        let cell = |p: Point2| {
            let i = (((p.x - xmin) / wx) as usize).min(nb - 1);
            let j = (((p.y - ymin) / wy) as usize).min(nb - 1);
            (i, j)
        };
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nb * nb];
        for (v, p) in self.vertices.iter().enumerate() {
            let (i, j) = cell(*p);
            bins[j * nb + i].push(v);
        }
        for &[a, b] in &self.edges {
            let pa = self.vertices[a];
            let pb = self.vertices[b];
            let d = pb - pa;
            let len2 = d.dot(d);
            let (i0, j0) = cell(Point2::new(pa.x.min(pb.x), pa.y.min(pb.y)));
            let (i1, j1) = cell(Point2::new(pa.x.max(pb.x), pa.y.max(pb.y)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &v in &bins[j * nb + i] {
                        if v == a || v == b {
                            continue;
                        }
                        let w = self.vertices[v] - pa;
                        let cross = d.x * w.y - d.y * w.x;
                        let s = w.dot(d) / len2;
                        if cross.abs() <= 1e-12 * len2 && s > 1e-12 && s < 1.0 - 1e-12 {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Red refinement: every triangle is split into four congruent children.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|&[a, b]| self.vertices[a].midpoint(self.vertices[b])));
        let nt = self.num_triangles();
        let mut triangles = Vec::with_capacity(4 * nt);
        let mut level = Vec::with_capacity(4 * nt);
        let mut refinement_edge = Vec::with_capacity(4 * nt);
        for t in 0..nt {
            let [v0, v1, v2] = self.triangles[t];
            let [e0, e1, e2] = self.edge_of_triangle[t];
            let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
            for child in [[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]] {
                triangles.push(child);
                level.push(self.level[t] + 1);
                // every child edge is parallel to the parent edge with the same local index
                refinement_edge.push(self.refinement_edge[t]);
            }
        }
        Mesh::new(vertices, triangles, level, refinement_edge).expect("red refinement of a valid mesh is valid")
    }

    /// Newest-vertex bisection of the marked triangles followed by the
    /// closure that restores conformity.
    pub fn refine_adaptive(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&t) = marked.iter().find(|&&t| t >= self.num_triangles()) {
            return Err(Error::InvalidArgument(format!("marked triangle {t} does not exist")));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let mut edge_marked = vec![false; self.num_edges()];
        for &t in marked {
            edge_marked[self.edge_of_triangle[t][self.refinement_edge(t)]] = true;
        }
        loop {
            let mut changed = false;
            for t in 0..self.num_triangles() {
                let eot = self.edge_of_triangle[t];
                let re = eot[self.refinement_edge(t)];
                if !edge_marked[re] && eot.iter().any(|&e| edge_marked[e]) {
                    edge_marked[re] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if edge_marked[e] {
                midpoint.insert((a, b), vertices.len());
                vertices.push(self.vertices[a].midpoint(self.vertices[b]));
            }
        }

        let mut triangles = Vec::with_capacity(self.num_triangles() * 2);
        let mut level = Vec::with_capacity(self.num_triangles() * 2);
        let mut refinement_edge = Vec::with_capacity(self.num_triangles() * 2);
        let mut stack = Vec::new();
        for t in 0..self.num_triangles() {
            stack.push((self.triangles[t], self.refinement_edge[t], self.level[t]));
            while let Some((tri, r, lvl)) = stack.pop() {
                let r = r as usize;
                let apex = tri[r];
                let p = tri[(r + 1) % 3];
                let q = tri[(r + 2) % 3];
                match midpoint.get(&(p.min(q), p.max(q))) {
                    Some(&m) => {
                        // pushed in reverse so the first child is emitted first
                        stack.push(([apex, m, q], 1, lvl + 1));
                        stack.push(([apex, p, m], 2, lvl + 1));
                    }
                    None => {
                        triangles.push(tri);
                        level.push(lvl);
                        refinement_edge.push(r as u8);
                    }
                }
            }
        }
        Mesh::new(vertices, triangles, level, refinement_edge)
    }

    /// Plain-text dump: `v x y` per vertex and `t i j k` per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e}", p.x, p.y);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    /// Parses the format written by [`Mesh::to_text`]. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let fields: Vec<&str> = it.collect();
            let err = |msg: &str| Error::MeshParse { line: line_no, msg: msg.to_string() };
            match tag {
                "v" if fields.len() == 2 => {
                    let x = fields[0].parse().map_err(|_| err("bad x coordinate"))?;
                    let y = fields[1].parse().map_err(|_| err("bad y coordinate"))?;
                    vertices.push(Point2::new(x, y));
                }
                "t" if fields.len() == 3 => {
                    let mut tri = [0usize; 3];
                    for (slot, f) in tri.iter_mut().zip(&fields) {
                        *slot = f.parse().map_err(|_| err("bad vertex index"))?;
                    }
                    triangles.push(tri);
                }
                _ => return Err(err("expected `v x y` or `t i j k`")),
            }
        }
        Mesh::from_triangles(vertices, triangles)
    }
}

pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn longest_edge(vertices: &[Point2], tri: &[usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = -1.0;
    for i in 0..3 {
        let a = vertices[tri[(i + 1) % 3]];
        let b = vertices[tri[(i + 2) % 3]];
        let l = (b - a).dot(b - a);
        let tie = (l - best_len).abs() <= 1e-12 * l.max(best_len);
        if (tie && tri[i] < tri[best]) || (!tie && l > best_len) {
            best = i;
            best_len = l;
        }
    }
    best as u8
}

/// Structured `n x n` grid on the unit square, each cell split along the
/// diagonal from its lower-left to its upper-right corner.
pub fn make_unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 * h, j as f64 * h));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::from_triangles(vertices, triangles)
}

/// L-shaped domain (-1,1)^2 minus [0,1]x[-1,0]: three unit squares, each
/// meshed as in [`make_unit_square`], with the reentrant corner at the origin.
pub fn make_lshape(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let h = 1.0 / n as f64;
    let m = 2 * n;
    let inside = |i: usize, j: usize| !(i > n && j < n);
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            if inside(i, j) {
                index[j * (m + 1) + i] = vertices.len();
                vertices.push(Point2::new(-1.0 + i as f64 * h, -1.0 + j as f64 * h));
            }
        }
    }
    let id = |i: usize, j: usize| index[j * (m + 1) + i];
    let mut triangles = Vec::with_capacity(6 * n * n);
    for j in 0..m {
        for i in 0..m {
            if i >= n && j < n {
                continue;
            }
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::from_triangles(vertices, triangles)
}
