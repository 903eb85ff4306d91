//! Labelled compact convex polygons.
//!
//! A labelled polygon stores its vertices in counterclockwise order together
//! with one affine label per edge. Label `i` vanishes on the edge from vertex
//! `i` to vertex `i + 1` (cyclically) and is positive on the interior. Labels
//! are kept at the scale the caller supplied: the boundary measure `dσ` and
//! every weighted integral downstream depend on that scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point};

/// Relative tolerance for parallel edge directions.
pub const PARALLEL_TOL: f64 = 1e-10;

/// Relative tolerance used when validating that a label vanishes on its edge.
const VANISH_TOL: f64 = 1e-10;

/// Relative turn below which three consecutive vertices count as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

/// Affine function `c0 + c1·x1 + c2·x2` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl AffineMap2 {
    pub const fn new(c0: f64, c1: f64, c2: f64) -> Self {
        Self { c0, c1, c2 }
    }

    pub const fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    pub const fn one() -> Self {
        Self::constant(1.0)
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.c0 + self.c1 * x[0] + self.c2 * x[1]
    }

    #[inline]
    pub fn gradient(&self) -> Point {
        [self.c1, self.c2]
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }

    pub fn from_coefficients(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    pub fn add(&self, other: &AffineMap2) -> AffineMap2 {
        Self::new(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)
    }

    pub fn sub(&self, other: &AffineMap2) -> AffineMap2 {
        Self::new(self.c0 - other.c0, self.c1 - other.c1, self.c2 - other.c2)
    }

    pub fn scale(&self, s: f64) -> AffineMap2 {
        Self::new(self.c0 * s, self.c1 * s, self.c2 * s)
    }

    pub fn neg(&self) -> AffineMap2 {
        self.scale(-1.0)
    }

    /// The map `y ↦ self(y + t)`.
    pub fn shifted(&self, t: Point) -> AffineMap2 {
        Self::new(self.eval(t), self.c1, self.c2)
    }

    pub fn is_constant(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0
    }

    /// Largest coefficient difference in absolute value.
    pub fn max_coeff_distance(&self, other: &AffineMap2) -> f64 {
        let d = self.sub(other);
        d.c0.abs().max(d.c1.abs()).max(d.c2.abs())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c0.abs().max(self.c1.abs()).max(self.c2.abs())
    }
}

/// Shape class of a convex quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadType {
    Parallelogram,
    TrapezoidNotParallelogram,
    GenericQuadrilateral,
}

impl QuadType {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuadType::Parallelogram => "Parallelogram",
            QuadType::TrapezoidNotParallelogram => "TrapezoidNotParallelogram",
            QuadType::GenericQuadrilateral => "GenericQuadrilateral",
        }
    }
}

/// Compact convex polygon with one affine label per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledPolytope2 {
    vertices: Vec<Point>,
    labels: Vec<AffineMap2>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    vertices: Vec<[f64; 2]>,
    labels: Vec<AffineMap2>,
}

impl LabelledPolytope2 {
    /// Builds a labelled polygon from explicit vertex and label data and checks
    /// every invariant, naming the first one violated.
    pub fn new(vertices: Vec<Point>, labels: Vec<AffineMap2>) -> Result<Self> {
        validate(&vertices, &labels)?;
        Ok(Self { vertices, labels })
    }

    /// Realizes the region `{x : L(x) ≥ 0 for every label}` as vertex data.
    ///
    /// The first vertex is the lowest one (smallest `x2`, then smallest `x1`);
    /// labels are reordered to follow the edges but never rescaled.
    pub fn from_halfplanes(labels: &[AffineMap2]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::UnboundedRegion);
        }
        for (i, l) in labels.iter().enumerate() {
            if geom::norm(l.gradient()) == 0.0 {
                return Err(if l.c0 > 0.0 {
                    Error::RedundantLabel { index: i }
                } else {
                    Error::EmptyInterior
                });
            }
        }
        if has_recession_direction(labels) {
            return Err(Error::UnboundedRegion);
        }

        let scale = labels
            .iter()
            .map(|l| l.c0.abs() / geom::norm(l.gradient()))
            .fold(1.0, f64::max);
        let feasible = |x: Point| {
            labels.iter().all(|l| {
                let g = geom::norm(l.gradient());
                l.eval(x) >= -1e-11 * g * (scale + geom::norm(x))
            })
        };

        let mut points: Vec<Point> = Vec::new();
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                let (a, b) = (labels[i], labels[j]);
                let det = a.c1 * b.c2 - a.c2 * b.c1;
                if det.abs() <= 1e-14 * geom::norm(a.gradient()) * geom::norm(b.gradient()) {
                    continue;
                }
                // Adding 0.0 folds -0.0 into +0.0.
                let x = [
                    (-a.c0 * b.c2 + a.c2 * b.c0) / det + 0.0,
                    (-a.c1 * b.c0 + a.c0 * b.c1) / det + 0.0,
                ];
                if feasible(x)
                    && !points
                        .iter()
                        .any(|p| geom::dist(*p, x) <= 1e-12 * (scale + geom::norm(x)))
                {
                    points.push(x);
                }
            }
        }
        if points.len() < 3 {
            return Err(Error::EmptyInterior);
        }

        let mean = geom::scale(
            points.iter().fold([0.0, 0.0], |acc, p| geom::add(acc, *p)),
            1.0 / points.len() as f64,
        );
        points.sort_by(|p, q| {
            let ap = (p[1] - mean[1]).atan2(p[0] - mean[0]);
            let aq = (q[1] - mean[1]).atan2(q[0] - mean[0]);
            ap.total_cmp(&aq)
        });
        drop_collinear(&mut points);
        if points.len() < 3 || geom::signed_area2(&points) <= 1e-14 * scale * scale {
            return Err(Error::EmptyInterior);
        }
        let ytol = 1e-12 * (scale + geom::diameter(&points));
        let mut start = 0;
        for i in 1..points.len() {
            let (p, q) = (points[i], points[start]);
            if p[1] < q[1] - ytol || ((p[1] - q[1]).abs() <= ytol && p[0] < q[0]) {
                start = i;
            }
        }
        points.rotate_left(start);

        let n = points.len();
        let mut used = vec![false; labels.len()];
        let mut ordered = Vec::with_capacity(n);
        for i in 0..n {
            let (p, q) = (points[i], points[(i + 1) % n]);
            let found = labels.iter().enumerate().position(|(k, l)| {
                let tol = 1e-9 * geom::norm(l.gradient()) * (scale + geom::norm(p).max(geom::norm(q)));
                !used[k] && l.eval(p).abs() <= tol && l.eval(q).abs() <= tol
            });
            match found {
                Some(k) => {
                    used[k] = true;
                    ordered.push(labels[k]);
                }
                None => {
                    return Err(Error::InvalidPolytope(format!("no label vanishes on edge {i}")))
                }
            }
        }
        if let Some(index) = used.iter().position(|u| !u) {
            return Err(Error::RedundantLabel { index });
        }
        Self::new(points, ordered)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: PolytopeJson = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        Self::new(raw.vertices, raw.labels)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(PolytopeJson {
            vertices: self.vertices.clone(),
            labels: self.labels.clone(),
        })
        .expect("polytope data is always serializable")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn labels(&self) -> &[AffineMap2] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Endpoints of edge `i`, which carries label `i`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn area(&self) -> f64 {
        0.5 * geom::signed_area2(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        geom::area_centroid(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        geom::diameter(&self.vertices)
    }

    /// True when every label is strictly positive at `x`.
    pub fn contains_interior(&self, x: Point) -> bool {
        self.labels.iter().all(|l| l.eval(x) > 0.0)
    }

    /// Smallest Euclidean distance from `x` to an edge line (signed: negative
    /// outside).
    pub fn boundary_margin(&self, x: Point) -> f64 {
        self.labels
            .iter()
            .map(|l| l.eval(x) / geom::norm(l.gradient()))
            .fold(f64::INFINITY, f64::min)
    }

    /// The polygon moved by `-t`: vertices `v - t`, labels `y ↦ L(y + t)`.
    pub fn translated(&self, t: Point) -> Result<Self> {
        Self::new(
            self.vertices.iter().map(|v| geom::sub(*v, t)).collect(),
            self.labels.iter().map(|l| l.shifted(t)).collect(),
        )
    }

    /// Image under the invertible affine map `x ↦ m·x + t`. Labels transform
    /// by `L ∘ map⁻¹`; orientation-reversing maps reverse the vertex order.
    pub fn affine_image(&self, m: [[f64; 2]; 2], t: Point) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::ParameterOutOfRange("affine map is singular".into()));
        }
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let apply = |v: Point| [m[0][0] * v[0] + m[0][1] * v[1] + t[0], m[1][0] * v[0] + m[1][1] * v[1] + t[1]];
        let pull = |l: &AffineMap2| {
            // L(inv·(y - t)) = c0 - g·inv·t + (g·inv)·y
            let g = [l.c1 * inv[0][0] + l.c2 * inv[1][0], l.c1 * inv[0][1] + l.c2 * inv[1][1]];
            AffineMap2::new(l.c0 - geom::dot(g, t), g[0], g[1])
        };
        let mut vertices: Vec<Point> = self.vertices.iter().map(|v| apply(*v)).collect();
        let mut labels: Vec<AffineMap2> = self.labels.iter().map(pull).collect();
        if det < 0.0 {
            // Edge i joins v_i and v_{i+1}; after reversal edge j joins
            // v'_j = v_{n-1-j} and v'_{j+1} = v_{n-2-j}, i.e. old edge n-2-j.
            let n = vertices.len();
            vertices.reverse();
            labels = (0..n).map(|j| labels[(2 * n - 2 - j) % n]).collect();
        }
        Self::new(vertices, labels)
    }

    /// Advisory lattice check: integral primitive normals forming a lattice
    /// basis at every vertex.
    pub fn is_integral_delzant(&self) -> bool {
        let ints: Option<Vec<[i64; 2]>> = self
            .labels
            .iter()
            .map(|l| {
                let r = [l.c1.round(), l.c2.round()];
                ((l.c1 - r[0]).abs() <= 1e-9 && (l.c2 - r[1]).abs() <= 1e-9)
                    .then_some([r[0] as i64, r[1] as i64])
            })
            .collect();
        let Some(normals) = ints else { return false };
        if normals.iter().any(|e| gcd(e[0].unsigned_abs(), e[1].unsigned_abs()) != 1) {
            return false;
        }
        let n = normals.len();
        (0..n).all(|i| {
            let a = normals[(i + n - 1) % n];
            let b = normals[i];
            (a[0] * b[1] - a[1] * b[0]).abs() == 1
        })
    }

    /// Recognizes `Δ_{p,k}` from its vertex data.
    pub fn hirzebruch_params(&self) -> Option<(f64, u32)> {
        if self.len() != 4 {
            return None;
        }
        let v = &self.vertices;
        let p = v[1][0];
        let kf = v[3][1];
        let k = kf.round();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        let ok = close(v[0][0], 0.0)
            && close(v[0][1], 0.0)
            && close(v[1][1], 0.0)
            && close(v[3][0], 0.0)
            && close(kf, k)
            && k >= 1.0
            && p > 0.0
            && p < 1.0
            && close(v[2][0], p)
            && close(v[2][1], (1.0 - p) * k);
        ok.then_some((p, k as u32))
    }

    /// Uniform random interior points, each kept at least `margin_fraction`
    /// of the diameter away from the boundary.
    pub fn sample_interior_points(&self, n: usize, seed: u64, margin_fraction: f64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = self.centroid();
        let margin = margin_fraction * self.diameter();
        let verts = &self.vertices;
        let m = verts.len();
        let areas: Vec<f64> = (0..m)
            .map(|i| 0.5 * geom::cross(geom::sub(verts[i], c), geom::sub(verts[(i + 1) % m], c)))
            .collect();
        let total: f64 = areas.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n && attempts < 1000 * n.max(1) {
            attempts += 1;
            let mut r = rng.gen::<f64>() * total;
            let mut tri = m - 1;
            for (i, a) in areas.iter().enumerate() {
                if r < *a {
                    tri = i;
                    break;
                }
                r -= a;
            }
            let (mut s, mut t) = (rng.gen::<f64>(), rng.gen::<f64>());
            if s + t > 1.0 {
                s = 1.0 - s;
                t = 1.0 - t;
            }
            let a = verts[tri];
            let b = verts[(tri + 1) % m];
            let x = [
                c[0] + s * (a[0] - c[0]) + t * (b[0] - c[0]),
                c[1] + s * (a[1] - c[1]) + t * (b[1] - c[1]),
            ];
            if self.boundary_margin(x) >= margin {
                out.push(x);
            }
        }
        out
    }
}

impl Serialize for LabelledPolytope2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeJson {
            vertices: self.vertices.clone(),
            labels: self.labels.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelledPolytope2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolytopeJson::deserialize(d)?;
        LabelledPolytope2::new(raw.vertices, raw.labels).map_err(serde::de::Error::custom)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn has_recession_direction(labels: &[AffineMap2]) -> bool {
    let mut candidates = Vec::with_capacity(3 * labels.len());
    for l in labels {
        let g = l.gradient();
        candidates.push([-g[1], g[0]]);
        candidates.push([g[1], -g[0]]);
        candidates.push(g);
    }
    candidates.iter().any(|d| {
        let dn = geom::norm(*d);
        labels
            .iter()
            .all(|l| geom::dot(l.gradient(), *d) >= -1e-12 * geom::norm(l.gradient()) * dn)
    })
}

fn drop_collinear(points: &mut Vec<Point>) {
    loop {
        let n = points.len();
        if n < 3 {
            return;
        }
        let idx = (0..n).find(|&i| {
            let a = points[(i + n - 1) % n];
            let b = points[i];
            let c = points[(i + 1) % n];
            let (u, v) = (geom::sub(b, a), geom::sub(c, b));
            geom::cross(u, v).abs() <= COLLINEAR_TOL * geom::norm(u) * geom::norm(v)
        });
        match idx {
            Some(i) => {
                points.remove(i);
            }
            None => return,
        }
    }
}

fn validate(vertices: &[Point], labels: &[AffineMap2]) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidPolytope(msg));
    let n = vertices.len();
    if n < 3 {
        return bad(format!("need at least 3 vertices, got {n}"));
    }
    if labels.len() != n {
        return bad(format!(
            "number of labels ({}) must equal number of vertices ({n})",
            labels.len()
        ));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite())
        || labels.iter().flat_map(|l| l.coefficients()).any(|c| !c.is_finite())
    {
        return bad("non-finite coordinate or coefficient".into());
    }
    if geom::signed_area2(vertices) <= 0.0 {
        return bad("vertices must be counterclockwise with positive area".into());
    }
    for i in 0..n {
        let a = vertices[(i + n - 1) % n];
        let b = vertices[i];
        let c = vertices[(i + 1) % n];
        let (u, v) = (geom::sub(b, a), geom::sub(c, b));
        if geom::cross(u, v) <= COLLINEAR_TOL * geom::norm(u) * geom::norm(v) {
            return bad(format!("polygon is not strictly convex at vertex {i}"));
        }
    }
    let diam = geom::diameter(vertices);
    let reach = vertices.iter().map(|v| geom::norm(*v)).fold(0.0, f64::max);
    for (i, l) in labels.iter().enumerate() {
        let g = geom::norm(l.gradient());
        if g == 0.0 {
            return bad(format!("label {i} has zero gradient"));
        }
        let tol = VANISH_TOL * g * (diam + reach);
        for j in [i, (i + 1) % n] {
            if l.eval(vertices[j]).abs() > tol {
                return bad(format!("label {i} does not vanish at vertex {j}"));
            }
        }
        for (j, v) in vertices.iter().enumerate() {
            if j != i && j != (i + 1) % n && l.eval(*v) <= tol {
                return bad(format!("label {i} is not positive at vertex {j}"));
            }
        }
    }
    let c = geom::area_centroid(vertices);
    if let Some(i) = labels.iter().position(|l| l.eval(c) <= 0.0) {
        return bad(format!("label {i} is not positive at the centroid"));
    }
    Ok(())
}

/// The trapezoid `Δ_{p,k}` of the Hirzebruch surface `F_k`.
///
/// Vertices `(0,0), (p,0), (p,(1-p)k), (0,k)`; edge labels in that cyclic
/// order are `x2`, `p - x1`, `k(1 - x1) - x2`, `x1`.
pub fn hirzebruch_delzant(p: f64, k: u32) -> Result<LabelledPolytope2> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("p = {p} must lie in (0, 1)")));
    }
    if k == 0 {
        return Err(Error::ParameterOutOfRange("k must be at least 1".into()));
    }
    let kf = k as f64;
    LabelledPolytope2::new(
        vec![[0.0, 0.0], [p, 0.0], [p, (1.0 - p) * kf], [0.0, kf]],
        vec![
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(p, -1.0, 0.0),
            AffineMap2::new(kf, -kf, -1.0),
            AffineMap2::new(0.0, 1.0, 0.0),
        ],
    )
}

/// The unit square `[0,1]²` with labels `x2, 1 - x1, 1 - x2, x1`.
pub fn unit_square() -> LabelledPolytope2 {
    LabelledPolytope2::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(1.0, -1.0, 0.0),
            AffineMap2::new(1.0, 0.0, -1.0),
            AffineMap2::new(0.0, 1.0, 0.0),
        ],
    )
    .expect("unit square is valid")
}

/// Minimum of `f` over the vertices and the lowest index attaining it.
pub fn min_over_vertices(p: &LabelledPolytope2, f: &AffineMap2) -> (f64, usize) {
    p.vertices()
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(best, bi), (i, v)| {
            let val = f.eval(*v);
            if val < best {
                (val, i)
            } else {
                (best, bi)
            }
        })
}

/// Errors with [`Error::NonPositiveWeight`] unless `f` is positive at every
/// vertex (hence on the whole polygon).
pub fn ensure_positive(p: &LabelledPolytope2, f: &AffineMap2) -> Result<()> {
    let (value, vertex) = min_over_vertices(p, f);
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveWeight { vertex, value })
    }
}

fn parallel(u: Point, v: Point) -> bool {
    geom::cross(u, v).abs() <= PARALLEL_TOL * geom::norm(u) * geom::norm(v)
}

pub fn classify_quadrilateral(p: &LabelledPolytope2) -> Result<QuadType> {
    if p.len() != 4 {
        return Err(Error::NotAQuadrilateral { vertices: p.len() });
    }
    let v = p.vertices();
    let e: Vec<Point> = (0..4).map(|i| geom::sub(v[(i + 1) % 4], v[i])).collect();
    Ok(match (parallel(e[0], e[2]), parallel(e[1], e[3])) {
        (true, true) => QuadType::Parallelogram,
        (true, false) | (false, true) => QuadType::TrapezoidNotParallelogram,
        (false, false) => QuadType::GenericQuadrilateral,
    })
}

/// Sutherland-Hodgman clip of a convex polygon against `ell ≥ 0`.
pub fn clip_halfplane(vertices: &[Point], ell: &AffineMap2) -> Vec<Point> {
    let n = vertices.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let (la, lb) = (ell.eval(a), ell.eval(b));
        if la >= 0.0 {
            out.push(a);
        }
        if (la > 0.0 && lb < 0.0) || (la < 0.0 && lb > 0.0) {
            out.push(geom::lerp(a, b, la / (la - lb)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_from_halfplanes() {
        let labels = [
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(1.0, -1.0, 0.0),
            AffineMap2::new(1.0, 0.0, -1.0),
        ];
        let p = LabelledPolytope2::from_halfplanes(&labels).unwrap();
        assert_eq!(p.vertices(), &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        // Edge 0 is the bottom edge, carried by x2.
        assert_eq!(p.labels()[0], labels[1]);
        assert_eq!(p.labels()[3], labels[0]);
    }

    #[test]
    fn hirzebruch_from_halfplanes_matches_explicit() {
        let (p, k) = (0.5, 1.0);
        let labels = [
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(p, -1.0, 0.0),
            AffineMap2::new(k, -k, -1.0),
        ];
        let q = LabelledPolytope2::from_halfplanes(&labels).unwrap();
        assert_eq!(q.vertices(), &[[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 1.0]]);
        let h = hirzebruch_delzant(0.5, 1).unwrap();
        assert_eq!(q, h);
    }

    #[test]
    fn halfplane_errors() {
        let unbounded = [
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(-1.0, -1.0, 0.0),
        ];
        assert_eq!(
            LabelledPolytope2::from_halfplanes(&unbounded),
            Err(Error::UnboundedRegion)
        );
        // x1 ≥ 0, x2 ≥ 0, x1 + x2 ≤ -1: bounded directions but empty.
        let empty = [
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(-1.0, -1.0, -1.0),
        ];
        assert_eq!(LabelledPolytope2::from_halfplanes(&empty), Err(Error::EmptyInterior));
        let redundant = [
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(1.0, -1.0, -1.0),
            AffineMap2::new(5.0, -1.0, -1.0),
        ];
        assert_eq!(
            LabelledPolytope2::from_halfplanes(&redundant),
            Err(Error::RedundantLabel { index: 3 })
        );
    }

    #[test]
    fn hirzebruch_vertices_and_range() {
        let h = hirzebruch_delzant(0.5, 2).unwrap();
        assert_eq!(h.vertices(), &[[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 2.0]]);
        assert!(matches!(hirzebruch_delzant(1.0, 1), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(hirzebruch_delzant(0.0, 1), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(hirzebruch_delzant(0.5, 0), Err(Error::ParameterOutOfRange(_))));
        assert_eq!(h.hirzebruch_params(), Some((0.5, 2)));
        assert!(h.is_integral_delzant());
    }

    #[test]
    fn min_over_vertices_examples() {
        let sq = unit_square();
        assert_eq!(min_over_vertices(&sq, &AffineMap2::new(1.0, 1.0, 1.0)), (1.0, 0));
        assert_eq!(min_over_vertices(&sq, &AffineMap2::constant(0.0)), (0.0, 0));
        // Substituting p = 3/4 (so sqrt(1 - p) = 1/2) gives f = 1/3 - (2/9) x1;
        // vertex values 1/3, 1/6, 1/6, 1/3 and the lower index wins the tie.
        let h = hirzebruch_delzant(0.75, 1).unwrap();
        let (v, i) = min_over_vertices(&h, &AffineMap2::new(1.0 / 3.0, -2.0 / 9.0, 0.0));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(i, 1);
    }

    #[test]
    fn quadrilateral_classes() {
        assert_eq!(classify_quadrilateral(&unit_square()).unwrap(), QuadType::Parallelogram);
        for &(p, k) in &[(0.1, 1), (0.5, 2), (0.9, 4)] {
            let h = hirzebruch_delzant(p, k).unwrap();
            assert_eq!(
                classify_quadrilateral(&h).unwrap(),
                QuadType::TrapezoidNotParallelogram
            );
        }
        let labels = [
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(4.0, -2.0, 1.0),
            AffineMap2::new(3.0, 1.0, -3.0),
            AffineMap2::new(0.0, 1.0, 0.0),
        ];
        let q = LabelledPolytope2::new(vec![[0.0, 0.0], [2.0, 0.0], [3.0, 2.0], [0.0, 1.0]], labels.to_vec())
            .unwrap();
        assert_eq!(classify_quadrilateral(&q).unwrap(), QuadType::GenericQuadrilateral);
        let tri = LabelledPolytope2::from_halfplanes(&[
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(1.0, -1.0, -1.0),
        ])
        .unwrap();
        assert_eq!(
            classify_quadrilateral(&tri),
            Err(Error::NotAQuadrilateral { vertices: 3 })
        );
    }

    #[test]
    fn validation_names_first_violation() {
        let sq = unit_square();
        let mut v = sq.vertices().to_vec();
        v.reverse();
        let err = LabelledPolytope2::new(v, sq.labels().to_vec()).unwrap_err();
        assert!(err.to_string().contains("counterclockwise"));
        let mut labels = sq.labels().to_vec();
        labels[1] = AffineMap2::new(2.0, -1.0, 0.0);
        let err = LabelledPolytope2::new(sq.vertices().to_vec(), labels).unwrap_err();
        assert!(err.to_string().contains("label 1 does not vanish at vertex 1"));
        let err = LabelledPolytope2::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
            sq.labels().to_vec(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("not strictly convex"));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let h = hirzebruch_delzant(0.3, 2).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(LabelledPolytope2::from_json_str(&s).unwrap(), h);
        let bad = r#"{"vertices": [[0,0],[1,0],[0,1]], "labels": [{"c0":0,"c1":0,"c2":1}]}"#;
        let err = LabelledPolytope2::from_json_str(bad).unwrap_err();
        assert!(err.to_string().contains("number of labels"));
        assert!(matches!(LabelledPolytope2::from_json_str("{"), Err(Error::Json(_))));
    }

    #[test]
    fn clipping_square() {
        let sq = unit_square();
        let half = clip_halfplane(sq.vertices(), &AffineMap2::new(-0.5, 1.0, 0.0));
        assert!((0.5 * geom::signed_area2(&half) - 0.5).abs() < 1e-15);
        let none = clip_halfplane(sq.vertices(), &AffineMap2::new(-2.0, 1.0, 0.0));
        assert!(none.is_empty());
    }

    #[test]
    fn orientation_reversing_image_keeps_labels_on_edges() {
        let h = hirzebruch_delzant(0.4, 3).unwrap();
        let img = h.affine_image([[-1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]).unwrap();
        assert_eq!(img.len(), 4);
        assert_eq!(classify_quadrilateral(&img).unwrap(), QuadType::TrapezoidNotParallelogram);
    }
}
