//! Multistart Newton recovery of the affine weights `f` whose extremal affine
//! function is constant, extremal-pair checks, and the stability verdict.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{self, FamilyId, Sign};
use crate::futaki::{self, CreaseScanReport, ExtremalAffine};
use crate::geom::{self, Point};
use crate::linalg;
use crate::poly::{count_roots_in, isolate_roots, sturm_sequence, to_rational, Poly, Scalar};
use crate::polytope::{
    classify_quadrilateral, ensure_positive, min_over_vertices, AffineMap2, LabelledPolytope2, QuadType,
};
use crate::twist::{self, TWIST_WEIGHT};

/// Finite-difference step of the Newton Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 60;
pub const MAX_HALVINGS: usize = 30;
/// Roots closer than this in coefficient distance, relative to the larger
/// coefficient scale, are merged.
pub const DEDUP_DISTANCE: f64 = 1e-7;
/// Coefficient distance under which a root is attributed to a family.
pub const FAMILY_MATCH_DISTANCE: f64 = 1e-6;
/// Shell starts sit on the positive region scaled by this factor.
pub const SHELL_SCALE: f64 = 1.6;
/// Quadrature tolerance used to re-verify positive roots.
pub const VERIFY_QUAD_TOL: f64 = 1e-10;
/// Range of `log10` of the relative depth of layered starts.
const LAYER_DEPTHS: (f64, f64) = (-4.0, -0.5);
/// A converged point is kept only if `residual_a` is below this multiple of
/// the solver tolerance.
pub const ROOT_ACCEPT_FACTOR: f64 = 10.0;
/// Points per axis of the residual screening grid.
pub const SCREEN_RESOLUTION: usize = 128;
/// Extra Newton steps taken after convergence while the residual decreases.
const POLISH_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMatch {
    pub id: FamilyId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub distance: f64,
    pub in_stated_domain: bool,
    /// The `-√(1-p)` branch of the LeBrun–Calabi expression.
    pub conjugate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionASolution {
    /// Normalized so that the vertex values sum to one.
    pub f: AffineMap2,
    pub residual_a: f64,
    pub positive_on_polytope: bool,
    pub min_vertex_value: f64,
    pub matched_family: Option<FamilyMatch>,
    /// `residual_a` recomputed independently of the Newton backend: by
    /// quadrature for positive roots, by the closed form otherwise.
    pub verified_residual_a: f64,
    pub verification: &'static str,
    pub start_index: usize,
    pub iterations: usize,
}

/// Affine weights with unit vertex sum, parametrized by `(c1, c2)`.
struct Gauge {
    n: f64,
    sx: f64,
    sy: f64,
}

impl Gauge {
    fn new(p: &LabelledPolytope2) -> Self {
        let (sx, sy) = p
            .vertices()
            .iter()
            .fold((0.0, 0.0), |(a, b), v| (a + v[0], b + v[1]));
        Self {
            n: p.len() as f64,
            sx,
            sy,
        }
    }

    fn weight(&self, c: Point) -> AffineMap2 {
        AffineMap2::new((1.0 - c[0] * self.sx - c[1] * self.sy) / self.n, c[0], c[1])
    }

    /// Vertex value `f(v)` as an affine function of `(c1, c2)`.
    fn vertex_value(&self, v: Point) -> AffineMap2 {
        AffineMap2::new(1.0 / self.n, v[0] - self.sx / self.n, v[1] - self.sy / self.n)
    }
}

fn zeta_for(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Result<ExtremalAffine> {
    if w == TWIST_WEIGHT {
        futaki::extremal_affine_closed_form(p, f)
    } else {
        futaki::extremal_affine(p, f, w, tol)
    }
}

/// Gram system `(M, b)` of the extremal affine function.
fn gram_for(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Result<(linalg::Mat3, [f64; 3])> {
    if w == TWIST_WEIGHT {
        futaki::gram_system_closed_form(p, f)
    } else {
        let ea = futaki::extremal_affine(p, f, w, tol)?;
        Ok((ea.gram, ea.rhs))
    }
}

/// `ζ` is constant exactly when `b = c0 M e0`, i.e. when the barycenter of
/// `f^{-(w-1)} dσ` coincides with that of `f^{-(w+1)} dx`. Their difference,
/// over the diameter, is the Newton residual: unlike `(ζ.c1, ζ.c2)` it stays
/// bounded near weights with a small vertex value.
fn scaled_residual(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Option<Point> {
    let (m, b) = gram_for(p, f, w, tol).ok()?;
    let d = p.diameter();
    let r = [
        (b[1] / b[0] - m[1][0] / m[0][0]) / d,
        (b[2] / b[0] - m[2][0] / m[0][0]) / d,
    ];
    (r[0].is_finite() && r[1].is_finite()).then_some(r)
}

struct NewtonOutcome {
    c: Point,
    iterations: usize,
}

fn newton_step<E: Fn(Point) -> Option<Point>>(eval: &E, c: Point, r: Point) -> Option<Point> {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = JACOBIAN_STEP * c[j].abs().max(1.0);
        let mut cp = c;
        let mut cm = c;
        cp[j] += h;
        cm[j] -= h;
        let (rp, rm) = (eval(cp)?, eval(cm)?);
        for i in 0..2 {
            jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    linalg::solve2(&jac, [-r[0], -r[1]])
}

/// Full Newton steps past convergence, kept only while they reduce the
/// residual, so that duplicate roots agree to near machine precision.
fn polish<E: Fn(Point) -> Option<Point>>(eval: &E, mut c: Point, mut r: Point, iterations: usize) -> NewtonOutcome {
    for _ in 0..POLISH_STEPS {
        let Some(step) = newton_step(eval, c, r) else { break };
        let trial = geom::add(c, step);
        match eval(trial) {
            Some(rt) if geom::norm(rt) < geom::norm(r) => {
                c = trial;
                r = rt;
            }
            _ => break,
        }
    }
    NewtonOutcome { c, iterations }
}

/// Damped Newton from `start`. A start with `f > 0` at every vertex keeps its
/// iterates there, so it cannot jump across the poles of the system.
fn newton(p: &LabelledPolytope2, gauge: &Gauge, w: f64, tol: f64, start: Point) -> Option<NewtonOutcome> {
    let positive = |c: Point| min_over_vertices(p, &gauge.weight(c)).0 > 0.0;
    let interior = positive(start);
    let eval = |c: Point| {
        if interior && !positive(c) {
            return None;
        }
        scaled_residual(p, &gauge.weight(c), w, VERIFY_QUAD_TOL)
    };
    let mut c = start;
    let mut r = eval(c)?;
    for it in 0..MAX_ITERATIONS {
        if geom::norm(r) < tol {
            return Some(polish(&eval, c, r, it));
        }
        let step = newton_step(&eval, c, r)?;
        let norm0 = geom::norm(r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = geom::add(c, geom::scale(step, lambda));
            if let Some(rt) = eval(trial) {
                if geom::norm(rt) < norm0 {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (cn, rn) = accepted?;
        c = cn;
        r = rn;
    }
    (geom::norm(r) < tol).then_some(NewtonOutcome {
        c,
        iterations: MAX_ITERATIONS,
    })
}

/// Grid-local minima of `|F|` over the bounding box of the shell, in grid
/// order. Every root sits in a local minimum at a resolution finer than its
/// basin, which can be narrow when a vertex value is small.
fn screening_starts(p: &LabelledPolytope2, gauge: &Gauge, w: f64, region: &LabelledPolytope2) -> Vec<Point> {
    let centre = region.centroid();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in region.vertices() {
        let s = geom::add(centre, geom::scale(geom::sub(*v, centre), SHELL_SCALE));
        for j in 0..2 {
            lo[j] = lo[j].min(s[j]);
            hi[j] = hi[j].max(s[j]);
        }
    }
    let n = SCREEN_RESOLUTION;
    let at = |i: usize, j: usize| {
        [
            lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / n as f64,
            lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / n as f64,
        ]
    };
    let values: Vec<f64> = (0..n * n)
        .map(|idx| {
            let c = at(idx / n, idx % n);
            scaled_residual(p, &gauge.weight(c), w, VERIFY_QUAD_TOL).map_or(f64::NAN, geom::norm)
        })
        .collect();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let v = values[i * n + j];
            if !v.is_finite() {
                continue;
            }
            let is_min = (i - 1..=i + 1).all(|a| {
                (j - 1..=j + 1).all(|b| {
                    let u = values[a * n + b];
                    (a == i && b == j) || !u.is_finite() || v <= u
                })
            });
            if is_min {
                out.push(at(i, j));
            }
        }
    }
    out
}

/// Start points: a seeded spread over the region where `f > 0` at every
/// vertex, geometric layers approaching the corners and edges of that region
/// (roots with a nearly vanishing vertex value have narrow basins), and
/// points on the region scaled by [`SHELL_SCALE`] about its centroid.
fn start_points(p: &LabelledPolytope2, gauge: &Gauge, w: f64, starts: usize, seed: u64) -> Result<Vec<Point>> {
    let labels: Vec<AffineMap2> = p.vertices().iter().map(|v| gauge.vertex_value(*v)).collect();
    let region = LabelledPolytope2::from_halfplanes(&labels)
        .map_err(|e| Error::DegeneratePolytope(format!("positive weight region: {e}")))?;
    let (layered, shell) = if starts >= 4 { (starts / 4, starts / 4) } else { (0, 0) };
    let inner = starts - layered - shell;
    let mut out = screening_starts(p, gauge, w, &region);
    let screened = out.len();
    out.extend(region.sample_interior_points(inner, seed, 0.02));
    let centre = region.centroid();
    let verts = region.vertices();
    let n = verts.len();

    let mut anchors = Vec::with_capacity(4 * n);
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        anchors.extend([a, geom::lerp(a, b, 0.25), geom::lerp(a, b, 0.5), geom::lerp(a, b, 0.75)]);
    }
    let levels = layered / anchors.len();
    for m in 0..levels {
        let t = if levels > 1 { m as f64 / (levels - 1) as f64 } else { 0.5 };
        let depth = 10f64.powf(LAYER_DEPTHS.0 + t * (LAYER_DEPTHS.1 - LAYER_DEPTHS.0));
        for a in &anchors {
            out.push(geom::lerp(*a, centre, depth));
        }
    }

    let perimeter: Vec<f64> = (0..n).map(|i| geom::dist(verts[i], verts[(i + 1) % n])).collect();
    let total: f64 = perimeter.iter().sum();
    let shell = starts + screened - out.len();
    for j in 0..shell {
        let mut s = total * (j as f64 + 0.5) / shell as f64;
        let mut i = 0;
        while i + 1 < n && s > perimeter[i] {
            s -= perimeter[i];
            i += 1;
        }
        let b = geom::lerp(verts[i], verts[(i + 1) % n], s / perimeter[i]);
        out.push(geom::add(centre, geom::scale(geom::sub(b, centre), SHELL_SCALE)));
    }
    Ok(out)
}

fn match_family(p: &LabelledPolytope2, f: &AffineMap2) -> Option<FamilyMatch> {
    let (pp, k) = p.hirzebruch_params()?;
    let mut best: Option<FamilyMatch> = None;
    let mut consider = |m: FamilyMatch| {
        if m.distance < FAMILY_MATCH_DISTANCE && best.as_ref().map_or(true, |b| m.distance < b.distance) {
            best = Some(m);
        }
    };
    for inst in families::candidate_families(pp, k).ok()? {
        consider(FamilyMatch {
            id: inst.id,
            sign: inst.sign,
            b: None,
            distance: inst.f.max_coeff_distance(f),
            in_stated_domain: inst.in_stated_domain,
            conjugate: false,
        });
    }
    let conj = families::normalize_vertex_sum(p, &families::lebrun_calabi_conjugate_raw(pp));
    consider(FamilyMatch {
        id: FamilyId::LebrunCalabi,
        sign: None,
        b: None,
        distance: conj.max_coeff_distance(f),
        in_stated_domain: false,
        conjugate: true,
    });
    if k == 1 {
        for inst in families::case12_members_through(pp, f) {
            consider(FamilyMatch {
                id: inst.id,
                sign: inst.sign,
                b: inst.b,
                distance: inst.f.max_coeff_distance(f),
                in_stated_domain: inst.in_stated_domain,
                conjugate: false,
            });
        }
    }
    best
}

/// Multistart Newton on `(ζ.c1, ζ.c2) = 0` over weights with unit vertex
/// sum. For `w = 4` the closed-form Gram system is used, which also defines
/// the system for weights that vanish inside the polytope; other weights use
/// quadrature and need positivity.
pub fn solve_condition_a(
    p: &LabelledPolytope2,
    w: f64,
    starts: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<ConditionASolution>> {
    if p.len() != 4 {
        return Err(Error::DegeneratePolytope(format!(
            "expected a quadrilateral, got {} vertices",
            p.len()
        )));
    }
    if starts == 0 {
        return Err(Error::ParameterOutOfRange("starts must be at least 1".into()));
    }
    let gauge = Gauge::new(p);
    let mut roots: Vec<ConditionASolution> = Vec::new();
    for (index, start) in start_points(p, &gauge, w, starts, seed)?.into_iter().enumerate() {
        let Some(out) = newton(p, &gauge, w, tol, start) else {
            continue;
        };
        let f = gauge.weight(out.c);
        // The barycenters also meet in the degenerate limit where a vertex
        // value tends to zero; only genuine roots have a constant ζ.
        let Ok(ea) = zeta_for(p, &f, w, VERIFY_QUAD_TOL) else {
            continue;
        };
        if !(ea.residual_a < ROOT_ACCEPT_FACTOR * tol) {
            continue;
        }
        let duplicate = roots.iter().any(|r| {
            let scale = r.f.max_abs_coeff().max(f.max_abs_coeff()).max(1.0);
            r.f.max_coeff_distance(&f) < DEDUP_DISTANCE * scale
        });
        if duplicate {
            continue;
        }
        let (min_vertex_value, _) = min_over_vertices(p, &f);
        let positive = min_vertex_value > 0.0;
        let (verified_residual_a, verification) = if positive {
            match futaki::extremal_affine(p, &f, w, VERIFY_QUAD_TOL) {
                Ok(q) => (q.residual_a, "quadrature"),
                Err(_) => (f64::INFINITY, "quadrature"),
            }
        } else {
            match futaki::gram_system_closed_form(p, &f).and_then(|(m, b)| {
                linalg::solve_sym3(&m, b).ok_or(Error::IllConditioned {
                    condition: linalg::condition3(&m),
                })
            }) {
                Ok(c) => (futaki::residual_a(p, &AffineMap2::from_coefficients(c)), "closed-form"),
                Err(_) => (f64::INFINITY, "closed-form"),
            }
        };
        roots.push(ConditionASolution {
            f,
            residual_a: ea.residual_a,
            positive_on_polytope: positive,
            min_vertex_value,
            matched_family: match_family(p, &f),
            verified_residual_a,
            verification,
            start_index: index,
            iterations: out.iterations,
        });
    }
    if roots.is_empty() {
        return Err(Error::NoConvergence);
    }
    Ok(roots)
}

/// Polynomials `A`, `B` with their intervals and boundary slopes.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ExtremalPair {
    /// Coefficients from the constant term up, degree at most 4.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub r_alpha: [f64; 2],
    pub r_beta: [f64; 2],
}

impl ExtremalPair {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidExtremalPair(m.into()));
        if self.a.len() > 5 || self.b.len() > 5 {
            return bad("A and B must have degree at most 4");
        }
        let [b1, b2] = self.beta;
        let [a1, a2] = self.alpha;
        if !(0.0 < b1 && b1 < b2 && b2 < a1 && a1 < a2) {
            return bad("intervals must satisfy 0 < beta1 < beta2 < alpha1 < alpha2");
        }
        if !self.r_alpha.iter().chain(&self.r_beta).all(|r| *r > 0.0 && r.is_finite()) {
            return bad("boundary slopes must be positive");
        }
        if !self.a.iter().chain(&self.b).all(|c| c.is_finite()) {
            return bad("coefficients must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: String,
    pub passed: bool,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPositivity {
    pub polynomial: &'static str,
    pub interval: [f64; 2],
    pub sturm_positive: bool,
    pub sampled_positive: bool,
    pub sampled_min: f64,
    /// Set when the floating-point Sturm count disagreed with sampling and
    /// was redone in exact arithmetic.
    pub rational_recheck: bool,
    /// Midpoints of isolating intervals for the roots of the polynomial on
    /// the slightly widened closed interval.
    pub roots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalPairReport {
    pub quad_type: QuadType,
    pub clauses: Vec<Clause>,
    pub positivity: Vec<IntervalPositivity>,
    pub passed: bool,
}

const PAIR_TOL: f64 = 1e-10;
const SAMPLES: usize = 2000;

fn poly_scale(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().map(|(j, a)| a.abs() * x.abs().powi(j as i32)).sum::<f64>().max(f64::MIN_POSITIVE)
}

fn coeff(c: &[f64], j: usize) -> f64 {
    c.get(j).copied().unwrap_or(0.0)
}

fn negligible_above(c: &[f64], deg: usize) -> f64 {
    let scale = c.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(f64::MIN_POSITIVE);
    c.iter().skip(deg + 1).fold(0.0f64, |m, a| m.max(a.abs())) / scale
}

fn boundary_clauses(pair: &ExtremalPair) -> Vec<Clause> {
    let a = Poly::new(pair.a.clone());
    let b = Poly::new(pair.b.clone());
    let (da, db) = (a.derivative(), b.derivative());
    let mut out = Vec::new();
    let mut push = |name: String, value: f64, target: f64, scale: f64| {
        let deviation = (value - target).abs() / scale.max(target.abs());
        out.push(Clause {
            name,
            passed: deviation <= PAIR_TOL,
            deviation,
        });
    };
    for i in 0..2 {
        let x = pair.alpha[i];
        push(format!("A(alpha{}) = 0", i + 1), a.eval(&x), 0.0, poly_scale(&pair.a, x));
        let y = pair.beta[i];
        push(format!("B(beta{}) = 0", i + 1), b.eval(&y), 0.0, poly_scale(&pair.b, y));
    }
    let sa = |x: f64| poly_scale(da.coeffs(), x);
    let sb = |x: f64| poly_scale(db.coeffs(), x);
    let [a1, a2] = pair.alpha;
    let [b1, b2] = pair.beta;
    push("A'(alpha1) = r_alpha1".into(), da.eval(&a1), pair.r_alpha[0], sa(a1));
    push("A'(alpha2) = -r_alpha2".into(), da.eval(&a2), -pair.r_alpha[1], sa(a2));
    push("B'(beta1) = r_beta1".into(), db.eval(&b1), pair.r_beta[0], sb(b1));
    push("B'(beta2) = -r_beta2".into(), db.eval(&b2), -pair.r_beta[1], sb(b2));
    out
}

fn type_clauses(pair: &ExtremalPair, quad: QuadType) -> Vec<Clause> {
    let clause = |name: &str, deviation: f64| Clause {
        name: name.into(),
        passed: deviation <= PAIR_TOL,
        deviation,
    };
    match quad {
        QuadType::Parallelogram => vec![
            clause("deg A <= 3", negligible_above(&pair.a, 3)),
            clause("deg B <= 3", negligible_above(&pair.b, 3)),
        ],
        QuadType::TrapezoidNotParallelogram => {
            let a2 = coeff(&pair.a, 2);
            let b2 = coeff(&pair.b, 2);
            let scale = a2.abs().max(b2.abs()).max(f64::MIN_POSITIVE);
            let convex = Clause {
                name: "A''(0) > 0".into(),
                passed: a2 > 0.0,
                deviation: if a2 > 0.0 { 0.0 } else { -a2 / scale.max(1.0) },
            };
            vec![
                clause("deg B = 2", negligible_above(&pair.b, 2)),
                clause("B'' = -A''(0)", (b2 + a2).abs() / scale),
                convex,
            ]
        }
        QuadType::GenericQuadrilateral => {
            let n = pair.a.len().max(pair.b.len());
            let sum: Vec<f64> = (0..n).map(|j| coeff(&pair.a, j) + coeff(&pair.b, j)).collect();
            let scale = pair.a.iter().chain(&pair.b).fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
            let top = sum.iter().skip(2).fold(0.0f64, |m, c| m.max(c.abs()));
            vec![clause("deg(A + B) <= 1", top / scale)]
        }
    }
}

/// Whether `q` has no root on `[lo, hi]` and is positive at the midpoint.
fn no_roots_and_positive<T: Scalar>(q: &Poly<T>, lo: &T, hi: &T) -> bool {
    if q.is_zero() {
        return false;
    }
    let two = T::one() + T::one();
    let mid = (lo.clone() + hi.clone()) / two;
    if !q.eval(&mid).is_positive() {
        return false;
    }
    if !q.eval(lo).is_positive() {
        return false;
    }
    let seq = sturm_sequence(q);
    count_roots_in(&seq, lo, hi) == 0
}

/// `(ξ - lo)(hi - ξ)`.
fn vanishing_factor<T: Scalar>(lo: &T, hi: &T) -> Poly<T> {
    Poly::new(vec![-(lo.clone() * hi.clone()), lo.clone() + hi.clone(), -T::one()])
}

fn interval_positivity(name: &'static str, coeffs: &[f64], interval: [f64; 2]) -> IntervalPositivity {
    let [lo, hi] = interval;
    let p = Poly::new(coeffs.to_vec());
    // Deflate the endpoint roots; strict positivity inside then reduces to
    // the quotient having no roots on the closed interval.
    let (q, _) = p.div_rem(&vanishing_factor(&lo, &hi));
    let sturm_float = no_roots_and_positive(&q, &lo, &hi);
    let sampled_min = (0..SAMPLES)
        .map(|i| p.eval(&(lo + (hi - lo) * (i as f64 + 0.5) / SAMPLES as f64)))
        .fold(f64::INFINITY, f64::min);
    let sampled_positive = sampled_min > 0.0;
    let (sturm_positive, rational_recheck) = if sturm_float == sampled_positive {
        (sturm_float, false)
    } else {
        let pr = to_rational(&p);
        let (lr, hr) = (BigRationalExt::from(lo), BigRationalExt::from(hi));
        let (qr, _) = pr.div_rem(&vanishing_factor(&lr, &hr));
        (no_roots_and_positive(&qr, &lr, &hr), true)
    };
    let pad = 1e-6 * (hi - lo);
    let roots = if p.is_zero() {
        Vec::new()
    } else {
        let seq = sturm_sequence(&p);
        isolate_roots(&seq, &(lo - pad), &(hi + pad), &(1e-12 * (hi - lo)))
            .into_iter()
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    };
    IntervalPositivity {
        polynomial: name,
        interval,
        sturm_positive,
        sampled_positive,
        sampled_min,
        rational_recheck,
        roots,
    }
}

struct BigRationalExt;

impl BigRationalExt {
    fn from(x: f64) -> num_rational::BigRational {
        num_rational::BigRational::from_float(x).expect("finite interval endpoint")
    }
}

/// Checks the boundary conditions, the type-specific relations and strict
/// positivity of `A` on `(α1, α2)` and `B` on `(β1, β2)`.
pub fn check_extremal_pair(pair: &ExtremalPair, quad: QuadType) -> ExtremalPairReport {
    let mut clauses = Vec::new();
    if let Err(e) = pair.validate() {
        clauses.push(Clause {
            name: format!("invariants: {e}"),
            passed: false,
            deviation: f64::INFINITY,
        });
        return ExtremalPairReport {
            quad_type: quad,
            clauses,
            positivity: Vec::new(),
            passed: false,
        };
    }
    clauses.extend(boundary_clauses(pair));
    clauses.extend(type_clauses(pair, quad));
    let positivity = vec![
        interval_positivity("A", &pair.a, pair.alpha),
        interval_positivity("B", &pair.b, pair.beta),
    ];
    for p in &positivity {
        clauses.push(Clause {
            name: format!("{} > 0 on ({}, {})", p.polynomial, p.interval[0], p.interval[1]),
            passed: p.sturm_positive,
            deviation: if p.sturm_positive { 0.0 } else { 1.0 },
        });
    }
    let passed = clauses.iter().all(|c| c.passed);
    ExtremalPairReport {
        quad_type: quad,
        clauses,
        positivity,
        passed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    #[serde(rename = "STABLE-BY-THEOREM")]
    StableByTheorem,
    #[serde(rename = "EVIDENCE-ONLY")]
    EvidenceOnly,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::StableByTheorem => "STABLE-BY-THEOREM",
            VerdictKind::EvidenceOnly => "EVIDENCE-ONLY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOptions {
    pub tol: f64,
    pub tau_a: f64,
    pub tau_eq: f64,
    pub creases: usize,
    pub seed: u64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            tau_a: 1e-7,
            tau_eq: 1e-8,
            creases: 200,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistReport {
    pub polytope: LabelledPolytope2,
    pub translation: Point,
    pub f_centered: AffineMap2,
    pub f_tilde: AffineMap2,
    pub quad_type: Option<QuadType>,
    /// Ambitoric branch suggested by the twist's shape.
    pub branch: Option<&'static str>,
    pub zeta_tilde: AffineMap2,
    /// `ζ̃` obtained by transforming `ζ` instead of solving on the twist.
    pub zeta_tilde_transformed: AffineMap2,
    pub zeta_tilde_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub zeta: AffineMap2,
    pub residual_a: f64,
    pub twist: TwistReport,
    /// Alternating vertex sum of `ζ̃` divided by its largest vertex value.
    pub equipoised_sum: f64,
    pub equipoised_sum_raw: f64,
    pub crease_min: f64,
    pub crease_scan: CreaseScanReport,
    pub roots: Vec<ConditionASolution>,
}

fn branch(q: QuadType) -> &'static str {
    match q {
        QuadType::Parallelogram => "product",
        QuadType::TrapezoidNotParallelogram => "calabi",
        QuadType::GenericQuadrilateral => "orthotoric",
    }
}

/// Twists `(P, f)` and decides stability through the equipoised criterion on
/// the twist, with a crease scan as supporting evidence.
pub fn stability_verdict(p: &LabelledPolytope2, f: &AffineMap2, w: f64, opts: &VerdictOptions) -> Result<Verdict> {
    ensure_positive(p, f)?;
    let ea = futaki::extremal_affine(p, f, w, opts.tol)?;
    if !(ea.residual_a < opts.tau_a) {
        return Err(Error::ConditionANotMet {
            residual: ea.residual_a,
            threshold: opts.tau_a,
        });
    }
    let centered = twist::center(p, f)?;
    let zeta_centered = ea.zeta.shifted(centered.translation);
    let twisted = twist::twist_polytope(&centered.polytope, &centered.f)?;
    let one = AffineMap2::one();
    let zeta_tilde = futaki::extremal_affine(&twisted, &one, TWIST_WEIGHT, opts.tol)?.zeta;
    let zeta_tilde_transformed = twist::twist_affine(&centered.f, &zeta_centered)?;
    let quad_type = if twisted.len() == 4 {
        Some(classify_quadrilateral(&twisted)?)
    } else {
        None
    };
    let (equipoised_sum, equipoised_sum_raw) = if quad_type.is_some() {
        let raw = families::alternating_vertex_sum(&twisted, &zeta_tilde)?;
        let scale = twisted
            .vertices()
            .iter()
            .map(|v| zeta_tilde.eval(*v).abs())
            .fold(0.0, f64::max);
        (raw / scale, raw)
    } else {
        (f64::NAN, f64::NAN)
    };
    let crease_scan =
        futaki::crease_scan_with_zeta(&twisted, &one, TWIST_WEIGHT, &zeta_tilde, opts.creases, opts.seed, opts.tol)?;
    let verdict = if quad_type.is_some() && equipoised_sum.abs() < opts.tau_eq {
        VerdictKind::StableByTheorem
    } else {
        VerdictKind::EvidenceOnly
    };
    Ok(Verdict {
        verdict,
        zeta: ea.zeta,
        residual_a: ea.residual_a,
        twist: TwistReport {
            translation: centered.translation,
            f_centered: centered.f,
            f_tilde: twist::dual_weight(&centered.f)?,
            quad_type,
            branch: quad_type.map(branch),
            zeta_tilde_distance: zeta_tilde.max_coeff_distance(&zeta_tilde_transformed),
            zeta_tilde,
            zeta_tilde_transformed,
            polytope: twisted,
        },
        equipoised_sum,
        equipoised_sum_raw,
        crease_min: crease_scan.min,
        crease_scan,
        roots: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::family_f;
    use crate::polytope::hirzebruch_delzant;

    #[test]
    fn recovers_lebrun_calabi_at_one_half() {
        let p = hirzebruch_delzant(0.5, 1).unwrap();
        let roots = solve_condition_a(&p, 4.0, 40, 7, 1e-10).unwrap();
        let positive: Vec<_> = roots.iter().filter(|r| r.positive_on_polytope).collect();
        assert_eq!(positive.len(), 1, "{roots:#?}");
        let m = positive[0].matched_family.as_ref().unwrap();
        assert_eq!(m.id, FamilyId::LebrunCalabi);
        assert!(!m.conjugate);
        assert!(positive[0].verified_residual_a < 1e-9);
        for r in &roots {
            let s: f64 = p.vertices().iter().map(|v| r.f.eval(*v)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let p = hirzebruch_delzant(0.3, 2).unwrap();
        let a = solve_condition_a(&p, 4.0, 16, 3, 1e-10).unwrap();
        let b = solve_condition_a(&p, 4.0, 16, 3, 1e-10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_quadrilaterals() {
        let tri = LabelledPolytope2::from_halfplanes(&[
            AffineMap2::new(0.0, 1.0, 0.0),
            AffineMap2::new(0.0, 0.0, 1.0),
            AffineMap2::new(1.0, -1.0, -1.0),
        ])
        .unwrap();
        assert!(matches!(
            solve_condition_a(&tri, 4.0, 4, 0, 1e-10),
            Err(Error::DegeneratePolytope(_))
        ));
    }

    fn pair_from(a: Vec<f64>, b: Vec<f64>, alpha: [f64; 2], beta: [f64; 2]) -> ExtremalPair {
        let da = Poly::new(a.clone()).derivative();
        let db = Poly::new(b.clone()).derivative();
        ExtremalPair {
            r_alpha: [da.eval(&alpha[0]), -da.eval(&alpha[1])],
            r_beta: [db.eval(&beta[0]), -db.eval(&beta[1])],
            a,
            b,
            alpha,
            beta,
        }
    }

    fn mul(x: &[f64], y: &[f64]) -> Vec<f64> {
        Poly::new(x.to_vec()).mul(&Poly::new(y.to_vec())).coeffs().to_vec()
    }

    #[test]
    fn orthotoric_pair_passes() {
        // A = (ξ-3)(4-ξ)(ξ²+1), B = ℓ - A with ℓ the chord of A over [1, 2].
        let a = mul(&mul(&[-3.0, 1.0], &[4.0, -1.0]), &[1.0, 0.0, 1.0]);
        let pa = Poly::new(a.clone());
        let (a1, a2) = (pa.eval(&1.0), pa.eval(&2.0));
        let slope = a2 - a1;
        let ell = [a1 - slope, slope];
        let b: Vec<f64> = (0..5).map(|j| coeff(&ell, j) - coeff(&a, j)).collect();
        let pair = pair_from(a, b, [3.0, 4.0], [1.0, 2.0]);
        let report = check_extremal_pair(&pair, QuadType::GenericQuadrilateral);
        assert!(report.passed, "{report:#?}");
        for p in &report.positivity {
            assert_eq!(p.sturm_positive, p.sampled_positive);
            assert_eq!(p.roots.len(), 2);
        }
    }

    #[test]
    fn calabi_pair_needs_convex_a() {
        // A = (ξ-3)(4-ξ)((ξ-m)² + 1) has A''(0)/2 = -12 - 14m - m² - 1.
        // B = c(ξ-1)(2-ξ) with c > 0 satisfies the coupling only when c = A''(0)/2.
        for (m, expect) in [(-2.0, true), (0.0, false)] {
            let a = mul(&mul(&[-3.0, 1.0], &[4.0, -1.0]), &[m * m + 1.0, -2.0 * m, 1.0]);
            let a2 = a[2];
            assert_eq!(a2 > 0.0, expect);
            let c = if expect { a2 } else { 1.0 };
            let b: Vec<f64> = mul(&[-1.0, 1.0], &[2.0, -1.0]).iter().map(|x| x * c).collect();
            let pair = pair_from(a, b, [3.0, 4.0], [1.0, 2.0]);
            let report = check_extremal_pair(&pair, QuadType::TrapezoidNotParallelogram);
            let convex = report.clauses.iter().find(|c| c.name == "A''(0) > 0").unwrap();
            assert_eq!(convex.passed, expect);
            assert_eq!(report.passed, expect, "{report:#?}");
        }
    }

    #[test]
    fn lebrun_calabi_verdict_is_stable() {
        let p = hirzebruch_delzant(0.5, 1).unwrap();
        let f = family_f(FamilyId::LebrunCalabi, 0.5, 1, Sign::Plus, None).unwrap();
        let opts = VerdictOptions {
            creases: 20,
            ..VerdictOptions::default()
        };
        let v = stability_verdict(&p, &f, 4.0, &opts).unwrap();
        assert_eq!(v.verdict, VerdictKind::StableByTheorem, "{v:#?}");
        assert_eq!(v.twist.quad_type, Some(QuadType::TrapezoidNotParallelogram));
        assert!(v.crease_min > 0.0);
    }

    #[test]
    fn verdict_requires_condition_a() {
        let p = hirzebruch_delzant(0.5, 1).unwrap();
        assert!(matches!(
            stability_verdict(&p, &AffineMap2::one(), 4.0, &VerdictOptions::default()),
            Err(Error::ConditionANotMet { .. })
        ));
    }
}
