//! Adaptive quadrature of weighted integrands `g / f^k` over polygons and
//! over the labelled boundary measure `dσ`.
//!
//! Triangles are integrated with a collapsed tensor Gauss-Legendre rule
//! (`x = A + u(B - A) + uv(C - B)`, Jacobian `2·area·u`); the order-10 and
//! order-6 rules are both exact up to total degree `2n - 2`, and their
//! difference is the local error estimate. Refinement is global: the triangle
//! with the largest estimate is split into four by edge midpoints. Edges use
//! the same pair of rules with bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::polytope::{AffineMap2, LabelledPolytope2};

/// Maximum refinement depth of any triangle or segment.
pub const MAX_DEPTH: u32 = 24;

/// Hard cap on integrand evaluations per call.
pub const MAX_EVALUATIONS: usize = 40_000_000;

/// Absolute floor of the tolerance scale.
pub const FLOOR_SCALE: f64 = 1e-12;

const HIGH: usize = 10;
const LOW: usize = 6;

/// The weight `f^{-k}`; `f` must be positive on the integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub f: AffineMap2,
    pub k: f64,
}

impl WeightSpec {
    pub fn new(f: AffineMap2, k: f64) -> Self {
        Self { f, k }
    }

    /// `f ≡ 1`, no weight.
    pub fn unit() -> Self {
        Self::new(AffineMap2::one(), 0.0)
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        let fx = self.f.eval(x);
        if self.k == 0.0 {
            1.0
        } else if self.k.fract() == 0.0 && self.k.abs() <= 64.0 {
            fx.powi(-(self.k as i32))
        } else {
            fx.powf(-self.k)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub est_error: f64,
    pub evaluations: usize,
}

/// Result of a vector-valued integration; each component carries its own
/// error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecQuadrature<const N: usize> {
    pub value: [f64; N],
    pub est_error: [f64; N],
    pub evaluations: usize,
}

impl<const N: usize> VecQuadrature<N> {
    fn zero() -> Self {
        Self {
            value: [0.0; N],
            est_error: [0.0; N],
            evaluations: 0,
        }
    }

    fn accumulate(&mut self, other: &Self) {
        for j in 0..N {
            self.value[j] += other.value[j];
            self.est_error[j] += other.est_error[j];
        }
        self.evaluations += other.evaluations;
    }

    pub fn component(&self, j: usize) -> QuadratureResult {
        QuadratureResult {
            value: self.value[j],
            est_error: self.est_error[j],
            evaluations: self.evaluations,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

struct Rules {
    line_high: Vec<(f64, f64)>,
    line_low: Vec<(f64, f64)>,
    tri_high: Vec<(f64, f64, f64)>,
    tri_low: Vec<(f64, f64, f64)>,
}

fn collapsed(line: &[(f64, f64)]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(line.len() * line.len());
    for &(u, wu) in line {
        for &(v, wv) in line {
            // Point A + u(B-A) + uv(C-B); the area factor is applied per triangle.
            out.push((u, u * v, wu * wv * u));
        }
    }
    out
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let line_high = gauss_legendre_unit(HIGH);
        let line_low = gauss_legendre_unit(LOW);
        Rules {
            tri_high: collapsed(&line_high),
            tri_low: collapsed(&line_low),
            line_high,
            line_low,
        }
    })
}

struct Cell<const N: usize> {
    err: f64,
    depth: u32,
    pts: [Point; 3],
    value: [f64; N],
    err_vec: [f64; N],
    abs: [f64; N],
}

impl<const N: usize> PartialEq for Cell<N> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const N: usize> Eq for Cell<N> {}
impl<const N: usize> PartialOrd for Cell<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Cell<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn apply_rule<const N: usize, G: Fn(Point) -> [f64; N]>(
    g: &G,
    pts: &[Point; 3],
    rule: &[(f64, f64, f64)],
    value: &mut [f64; N],
    abs: &mut [f64; N],
) {
    let [a, b, c] = *pts;
    let ab = geom::sub(b, a);
    let bc = geom::sub(c, b);
    let jac = geom::cross(ab, bc).abs();
    for &(s, t, w) in rule {
        let x = [a[0] + s * ab[0] + t * bc[0], a[1] + s * ab[1] + t * bc[1]];
        let y = g(x);
        for j in 0..N {
            let v = w * jac * y[j];
            value[j] += v;
            abs[j] += v.abs();
        }
    }
}

fn triangle_cell<const N: usize, G: Fn(Point) -> [f64; N]>(
    g: &G,
    pts: [Point; 3],
    depth: u32,
) -> Cell<N> {
    let r = rules();
    let mut hi = [0.0; N];
    let mut abs = [0.0; N];
    apply_rule(g, &pts, &r.tri_high, &mut hi, &mut abs);
    let mut lo = [0.0; N];
    let mut scratch = [0.0; N];
    apply_rule(g, &pts, &r.tri_low, &mut lo, &mut scratch);
    let mut err_vec = [0.0; N];
    for j in 0..N {
        err_vec[j] = (hi[j] - lo[j]).abs();
    }
    Cell {
        err: 0.0,
        depth,
        pts,
        value: hi,
        err_vec,
        abs,
    }
}

/// Largest ratio of component error to its tolerance allowance.
fn excess<const N: usize>(err: &[f64; N], abs: &[f64; N], tol: f64) -> f64 {
    (0..N)
        .map(|j| err[j] / (tol * abs[j].max(FLOOR_SCALE)))
        .fold(0.0, f64::max)
}

/// Adaptive vector integration over a set of triangles.
fn integrate_triangles<const N: usize, G: Fn(Point) -> [f64; N]>(
    tris: &[[Point; 3]],
    g: &G,
    tol: f64,
) -> Result<VecQuadrature<N>> {
    let per_cell = rules().tri_high.len() + rules().tri_low.len();
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    let mut total_abs = [0.0; N];
    let mut done: Vec<Cell<N>> = Vec::new();

    let mut cells0: Vec<Cell<N>> = Vec::with_capacity(tris.len());
    for t in tris {
        let cell = triangle_cell(g, *t, 0);
        evaluations += per_cell;
        for j in 0..N {
            total[j] += cell.value[j];
            total_err[j] += cell.err_vec[j];
            total_abs[j] += cell.abs[j];
        }
        cells0.push(cell);
    }
    // Priorities compare errors relative to each component's overall scale.
    let inv_scale: [f64; N] = std::array::from_fn(|j| 1.0 / total_abs[j].max(FLOOR_SCALE));
    let weigh = |cell: &mut Cell<N>| {
        cell.err = (0..N).map(|j| cell.err_vec[j] * inv_scale[j]).fold(0.0, f64::max);
    };
    for mut cell in cells0 {
        weigh(&mut cell);
        heap.push(cell);
    }

    while excess(&total_err, &total_abs, tol) > 1.0 {
        let Some(cell) = heap.pop() else { break };
        if cell.depth >= MAX_DEPTH || evaluations + 4 * per_cell > MAX_EVALUATIONS {
            done.push(cell);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        for j in 0..N {
            total[j] -= cell.value[j];
            total_err[j] -= cell.err_vec[j];
            total_abs[j] -= cell.abs[j];
        }
        let [a, b, c] = cell.pts;
        let (ab, bc, ca) = (geom::lerp(a, b, 0.5), geom::lerp(b, c, 0.5), geom::lerp(c, a, 0.5));
        for pts in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]] {
            let mut child = triangle_cell(g, pts, cell.depth + 1);
            evaluations += per_cell;
            for j in 0..N {
                total[j] += child.value[j];
                total_err[j] += child.err_vec[j];
                total_abs[j] += child.abs[j];
            }
            weigh(&mut child);
            heap.push(child);
        }
    }

    // Recompute totals in a fixed order to avoid drift from the running sums.
    let mut cells: Vec<Cell<N>> = heap.into_vec();
    cells.extend(done);
    cells.sort_by(|x, y| {
        x.pts[0][0]
            .total_cmp(&y.pts[0][0])
            .then(x.pts[0][1].total_cmp(&y.pts[0][1]))
            .then(x.pts[1][0].total_cmp(&y.pts[1][0]))
            .then(x.pts[1][1].total_cmp(&y.pts[1][1]))
            .then(x.pts[2][0].total_cmp(&y.pts[2][0]))
            .then(x.pts[2][1].total_cmp(&y.pts[2][1]))
    });
    let mut out = VecQuadrature::<N>::zero();
    let mut abs = [0.0; N];
    for c in &cells {
        for j in 0..N {
            out.value[j] += c.value[j];
            out.est_error[j] += c.err_vec[j];
            abs[j] += c.abs[j];
        }
    }
    out.evaluations = evaluations;
    let ex = excess(&out.est_error, &abs, tol);
    if ex > 1.0 {
        return Err(Error::ToleranceNotReached {
            est_error: out.est_error.iter().fold(0.0, |a: f64, b| a.max(*b)),
            evaluations,
        });
    }
    Ok(out)
}

fn fan(vertices: &[Point]) -> Vec<[Point; 3]> {
    let c = geom::area_centroid(vertices);
    let n = vertices.len();
    (0..n).map(|i| [c, vertices[i], vertices[(i + 1) % n]]).collect()
}

fn check_weight(vertices: &[Point], w: &WeightSpec) -> Result<()> {
    if w.k == 0.0 {
        return Ok(());
    }
    for (i, v) in vertices.iter().enumerate() {
        let val = w.f.eval(*v);
        if !(val > 0.0) {
            return Err(Error::NonPositiveWeight { vertex: i, value: val });
        }
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!("tolerance {tol} must be positive")))
    }
}

/// `∫ g·f^{-k} dx` over a convex polygon given by counterclockwise vertices.
/// Polygons with fewer than three vertices integrate to zero.
pub fn integrate_polygon_vec<const N: usize, G: Fn(Point) -> [f64; N]>(
    vertices: &[Point],
    g: G,
    w: &WeightSpec,
    tol: f64,
) -> Result<VecQuadrature<N>> {
    check_tol(tol)?;
    if vertices.len() < 3 || geom::signed_area2(vertices).abs() == 0.0 {
        return Ok(VecQuadrature::zero());
    }
    check_weight(vertices, w)?;
    let weighted = |x: Point| {
        let s = w.eval(x);
        let mut y = g(x);
        for v in y.iter_mut() {
            *v *= s;
        }
        y
    };
    integrate_triangles(&fan(vertices), &weighted, tol)
}

pub fn integrate_interior_vec<const N: usize, G: Fn(Point) -> [f64; N]>(
    p: &LabelledPolytope2,
    g: G,
    w: &WeightSpec,
    tol: f64,
) -> Result<VecQuadrature<N>> {
    integrate_polygon_vec(p.vertices(), g, w, tol)
}

/// `∫_P g(x)·f(x)^{-k} dx` with Lebesgue measure.
pub fn integrate_interior<G: Fn(Point) -> f64>(
    p: &LabelledPolytope2,
    g: G,
    w: &WeightSpec,
    tol: f64,
) -> Result<QuadratureResult> {
    integrate_interior_vec(p, |x| [g(x)], w, tol).map(|r| r.component(0))
}

/// `∫ g·f^{-k}` along the segment `a → b` against `mass·dt`, `t ∈ [0,1]`.
pub fn integrate_segment_vec<const N: usize, G: Fn(Point) -> [f64; N]>(
    a: Point,
    b: Point,
    mass: f64,
    g: &G,
    w: &WeightSpec,
    tol: f64,
) -> Result<VecQuadrature<N>> {
    check_tol(tol)?;
    if w.k != 0.0 {
        for (i, v) in [a, b].iter().enumerate() {
            let val = w.f.eval(*v);
            if !(val > 0.0) {
                return Err(Error::NonPositiveWeight { vertex: i, value: val });
            }
        }
    }
    let r = rules();
    let eval = |t0: f64, t1: f64, rule: &[(f64, f64)], abs: &mut [f64; N]| {
        let mut acc = [0.0; N];
        let len = t1 - t0;
        for &(t, wt) in rule {
            let x = geom::lerp(a, b, t0 + len * t);
            let s = w.eval(x);
            let y = g(x);
            for j in 0..N {
                let v = wt * len * mass * s * y[j];
                acc[j] += v;
                abs[j] += v.abs();
            }
        }
        acc
    };
    let per_seg = r.line_high.len() + r.line_low.len();
    // Stack of (t0, t1, depth, value, err, abs).
    let mut segs: Vec<(f64, f64, u32, [f64; N], [f64; N], [f64; N])> = Vec::new();
    let make = |t0: f64, t1: f64, depth: u32| {
        let mut abs = [0.0; N];
        let hi = eval(t0, t1, &r.line_high, &mut abs);
        let lo = eval(t0, t1, &r.line_low, &mut [0.0; N]);
        let mut err = [0.0; N];
        for j in 0..N {
            err[j] = (hi[j] - lo[j]).abs();
        }
        (t0, t1, depth, hi, err, abs)
    };
    segs.push(make(0.0, 1.0, 0));
    let mut evaluations = per_seg;
    loop {
        let mut err = [0.0; N];
        let mut abs = [0.0; N];
        for s in &segs {
            for j in 0..N {
                err[j] += s.4[j];
                abs[j] += s.5[j];
            }
        }
        if excess(&err, &abs, tol) <= 1.0 {
            break;
        }
        let worst = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.2 < MAX_DEPTH)
            .max_by(|x, y| {
                let ex = x.1 .4.iter().fold(0.0, |a: f64, b| a.max(*b));
                let ey = y.1 .4.iter().fold(0.0, |a: f64, b| a.max(*b));
                ex.total_cmp(&ey)
            })
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(Error::ToleranceNotReached {
                est_error: err.iter().fold(0.0, |a: f64, b| a.max(*b)),
                evaluations,
            });
        };
        if evaluations + 2 * per_seg > MAX_EVALUATIONS {
            return Err(Error::ToleranceNotReached {
                est_error: err.iter().fold(0.0, |a: f64, b| a.max(*b)),
                evaluations,
            });
        }
        let (t0, t1, depth, ..) = segs.swap_remove(i);
        let mid = 0.5 * (t0 + t1);
        segs.push(make(t0, mid, depth + 1));
        segs.push(make(mid, t1, depth + 1));
        evaluations += 2 * per_seg;
    }
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = VecQuadrature::<N>::zero();
    for s in &segs {
        for j in 0..N {
            out.value[j] += s.3[j];
            out.est_error[j] += s.4[j];
        }
    }
    out.evaluations = evaluations;
    Ok(out)
}

/// `∫_{∂P} g·f^{-k} dσ`, where on edge `i` the measure is
/// `(|Q_i - P_i| / |e_i|)·dt` with `e_i` the gradient of label `i`.
pub fn integrate_boundary_vec<const N: usize, G: Fn(Point) -> [f64; N]>(
    p: &LabelledPolytope2,
    g: G,
    w: &WeightSpec,
    tol: f64,
) -> Result<VecQuadrature<N>> {
    check_weight(p.vertices(), w)?;
    let mut out = VecQuadrature::<N>::zero();
    for (i, l) in p.labels().iter().enumerate() {
        let (a, b) = p.edge(i);
        let mass = geom::dist(a, b) / geom::norm(l.gradient());
        let r = integrate_segment_vec(a, b, mass, &g, w, tol)?;
        out.accumulate(&r);
    }
    Ok(out)
}

pub fn integrate_boundary<G: Fn(Point) -> f64>(
    p: &LabelledPolytope2,
    g: G,
    w: &WeightSpec,
    tol: f64,
) -> Result<QuadratureResult> {
    integrate_boundary_vec(p, |x| [g(x)], w, tol).map(|r| r.component(0))
}

/// Total `dσ` mass of the boundary, `Σ |edge_i| / |e_i|`.
pub fn boundary_mass(p: &LabelledPolytope2) -> f64 {
    p.labels()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let (a, b) = p.edge(i);
            geom::dist(a, b) / geom::norm(l.gradient())
        })
        .sum()
}
