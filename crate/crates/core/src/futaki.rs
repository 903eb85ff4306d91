//! The weighted Donaldson-Futaki invariant
//!
//! ```text
//! F(φ) = 2 ∫_∂P φ f^{1-w} dσ - ∫_P φ ζ f^{-w-1} dx
//! ```
//!
//! and the extremal affine function `ζ` that makes `F` vanish on affine `φ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::linalg::{self, Mat3};
use crate::polytope::{clip_halfplane, ensure_positive, AffineMap2, LabelledPolytope2};
use crate::quadrature::{
    integrate_interior_vec, integrate_polygon_vec, integrate_segment_vec, WeightSpec,
};

/// Gram matrices with condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Number of crease directions in a scan.
pub const SCAN_DIRECTIONS: usize = 20;

/// Extremal affine function and the data it was solved from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalAffine {
    pub zeta: AffineMap2,
    pub gram_condition_number: f64,
    pub residual_a: f64,
    #[serde(skip)]
    pub gram: Mat3,
    #[serde(skip)]
    pub rhs: [f64; 3],
}

impl ExtremalAffine {
    fn from_system(p: &LabelledPolytope2, gram: Mat3, rhs: [f64; 3]) -> Result<Self> {
        let condition = linalg::condition3(&gram);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let c = linalg::solve_sym3(&gram, rhs).ok_or(Error::IllConditioned { condition })?;
        let zeta = AffineMap2::from_coefficients(c);
        Ok(Self {
            zeta,
            gram_condition_number: condition,
            residual_a: residual_a(p, &zeta),
            gram,
            rhs,
        })
    }

    /// `F(1), F(x1), F(x2)` evaluated from the stored system, i.e. `b - M c`.
    pub fn orthogonality_defect(&self) -> [f64; 3] {
        let mc = linalg::mat3_vec(&self.gram, self.zeta.coefficients());
        [self.rhs[0] - mc[0], self.rhs[1] - mc[1], self.rhs[2] - mc[2]]
    }
}

/// Dimensionless non-constancy `(|c1| + |c2|)·diam / |ζ(centroid)|`.
pub fn residual_a(p: &LabelledPolytope2, zeta: &AffineMap2) -> f64 {
    (zeta.c1.abs() + zeta.c2.abs()) * p.diameter() / zeta.eval(p.centroid()).abs()
}

/// Solves `M c = b` with `M_ij = ∫ φ_i φ_j f^{-(w+1)} dx` and
/// `b_i = 2 ∫_∂ φ_i f^{-(w-1)} dσ` over the basis `(1, x1, x2)`.
pub fn extremal_affine(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Result<ExtremalAffine> {
    ensure_positive(p, f)?;
    let (gram, rhs) = gram_system(p, f, w, tol)?;
    ExtremalAffine::from_system(p, gram, rhs)
}

fn gram_system(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Result<(Mat3, [f64; 3])> {
    let inner = integrate_interior_vec(
        p,
        |x: Point| [1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]],
        &WeightSpec::new(*f, w + 1.0),
        tol,
    )?
    .value;
    let boundary = boundary_moments(p, f, w - 1.0, tol)?;
    let gram = [
        [inner[0], inner[1], inner[2]],
        [inner[1], inner[3], inner[4]],
        [inner[2], inner[4], inner[5]],
    ];
    Ok((gram, [2.0 * boundary[0], 2.0 * boundary[1], 2.0 * boundary[2]]))
}

/// The right-hand side `b_i = 2 ∫_∂ φ_i f^{-(w-1)} dσ` of the Gram system.
pub fn boundary_rhs(p: &LabelledPolytope2, f: &AffineMap2, w: f64, tol: f64) -> Result<[f64; 3]> {
    boundary_moments(p, f, w - 1.0, tol).map(|m| m.map(|v| 2.0 * v))
}

fn boundary_moments(p: &LabelledPolytope2, f: &AffineMap2, k: f64, tol: f64) -> Result<[f64; 3]> {
    let w = WeightSpec::new(*f, k);
    let g = |x: Point| [1.0, x[0], x[1]];
    let mut out = [0.0; 3];
    for (i, l) in p.labels().iter().enumerate() {
        let (a, b) = p.edge(i);
        let mass = geom::dist(a, b) / geom::norm(l.gradient());
        let r = integrate_segment_vec(a, b, mass, &g, &w, tol)?;
        for j in 0..3 {
            out[j] += r.value[j];
        }
    }
    Ok(out)
}

/// Exact Gram system for `w = 4`.
///
/// On a triangle with area `A` and vertex values `z_j = f(v_j)`, the
/// Hermite-Genocchi formula gives
/// `∫ φ_a φ_b f^{-5} dx = 2A Σ_{j,l} φ_a(v_j) φ_b(v_l) c_{jl} / (24 z_0 z_1 z_2 z_j z_l)`
/// with `c_jj = 2`, `c_jl = 1` otherwise, and along an edge `v_0 v_1` with
/// `dσ` mass `m`, `∫ φ f^{-3} dσ = m Σ_j φ(v_j) / (2 z_0 z_1 z_j)`. Both are
/// rational in the vertex values, so they continue past `f > 0` as long as
/// `f` does not vanish at a vertex.
pub fn gram_system_closed_form(p: &LabelledPolytope2, f: &AffineMap2) -> Result<(Mat3, [f64; 3])> {
    let v = p.vertices();
    let z: Vec<f64> = v.iter().map(|x| f.eval(*x)).collect();
    if let Some(index) = z.iter().position(|zi| *zi == 0.0) {
        return Err(Error::VertexZero { index });
    }
    let basis = |x: Point| [1.0, x[0], x[1]];
    let mut gram = [[0.0; 3]; 3];
    for t in 1..v.len() - 1 {
        let idx = [0, t, t + 1];
        let area2 = geom::cross(geom::sub(v[t], v[0]), geom::sub(v[t + 1], v[0]));
        let zz: [f64; 3] = idx.map(|i| z[i]);
        let prod = zz[0] * zz[1] * zz[2];
        let phis = idx.map(|i| basis(v[i]));
        for j in 0..3 {
            for l in 0..3 {
                let c = if j == l { 2.0 } else { 1.0 };
                let factor = area2 * c / (24.0 * prod * zz[j] * zz[l]);
                for a in 0..3 {
                    for b in 0..3 {
                        gram[a][b] += factor * phis[j][a] * phis[l][b];
                    }
                }
            }
        }
    }
    let mut rhs = [0.0; 3];
    for (i, l) in p.labels().iter().enumerate() {
        let n = v.len();
        let (i0, i1) = (i, (i + 1) % n);
        let mass = geom::dist(v[i0], v[i1]) / geom::norm(l.gradient());
        let prod = z[i0] * z[i1];
        for j in [i0, i1] {
            let phi = basis(v[j]);
            for a in 0..3 {
                rhs[a] += 2.0 * mass * phi[a] / (2.0 * prod * z[j]);
            }
        }
    }
    Ok((gram, rhs))
}

/// [`extremal_affine`] for `w = 4` through the exact rational formulas. The
/// Gram matrix is only positive definite when `f > 0`; otherwise the solve
/// falls back to pivoting.
pub fn extremal_affine_closed_form(p: &LabelledPolytope2, f: &AffineMap2) -> Result<ExtremalAffine> {
    let (gram, rhs) = gram_system_closed_form(p, f)?;
    ExtremalAffine::from_system(p, gram, rhs)
}

/// The constant `2 ∫_∂ f^{-(2m-1)} dσ / ∫ f^{-(2m+1)} dx`.
pub fn ckem_constant(p: &LabelledPolytope2, f: &AffineMap2, m: u32, tol: f64) -> Result<f64> {
    ensure_positive(p, f)?;
    let m = m as f64;
    let boundary = boundary_moments(p, f, 2.0 * m - 1.0, tol)?[0];
    let inner = integrate_interior_vec(p, |_| [1.0], &WeightSpec::new(*f, 2.0 * m + 1.0), tol)?.value[0];
    let c = 2.0 * boundary / inner;
    debug_assert!(c > 0.0);
    Ok(c)
}

/// `x ↦ max(0, ell(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CreaseFunction {
    pub ell: AffineMap2,
}

impl CreaseFunction {
    pub fn new(ell: AffineMap2) -> Self {
        Self { ell }
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.ell.eval(x).max(0.0)
    }

    /// Whether the crease line meets the interior of `p`, i.e. the function
    /// is not affine on `p`.
    pub fn is_proper(&self, p: &LabelledPolytope2) -> bool {
        let vals: Vec<f64> = p.vertices().iter().map(|v| self.ell.eval(*v)).collect();
        vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0)
    }
}

/// A test function for the Donaldson-Futaki invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Affine(AffineMap2),
    Crease(CreaseFunction),
}

impl TestFunction {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            TestFunction::Affine(a) => a.eval(x),
            TestFunction::Crease(c) => c.eval(x),
        }
    }
}

/// The two terms of `F(φ)`: `boundary = 2∫_∂ φ f^{1-w} dσ` and
/// `interior = ∫ φ ζ f^{-w-1} dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfParts {
    pub boundary: f64,
    pub interior: f64,
}

impl DfParts {
    pub fn value(&self) -> f64 {
        self.boundary - self.interior
    }

    /// Magnitude against which cancellation in `value` is judged.
    pub fn scale(&self) -> f64 {
        self.boundary.abs() + self.interior.abs()
    }
}

pub fn df_parts(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    phi: &TestFunction,
    zeta: &AffineMap2,
    tol: f64,
) -> Result<DfParts> {
    ensure_positive(p, f)?;
    let wb = WeightSpec::new(*f, w - 1.0);
    let wi = WeightSpec::new(*f, w + 1.0);
    let (affine, region): (AffineMap2, Vec<Point>) = match phi {
        TestFunction::Affine(a) => (*a, p.vertices().to_vec()),
        TestFunction::Crease(c) => (c.ell, clip_halfplane(p.vertices(), &c.ell)),
    };
    let interior = integrate_polygon_vec(&region, |x| [affine.eval(x) * zeta.eval(x)], &wi, tol)?.value[0];
    let mut boundary = 0.0;
    let g = |x: Point| [affine.eval(x)];
    for (i, l) in p.labels().iter().enumerate() {
        let (a, b) = p.edge(i);
        let Some((s, t)) = (match phi {
            TestFunction::Affine(_) => Some((a, b)),
            TestFunction::Crease(c) => clip_segment(a, b, &c.ell),
        }) else {
            continue;
        };
        let mass = geom::dist(s, t) / geom::norm(l.gradient());
        if mass == 0.0 {
            continue;
        }
        boundary += integrate_segment_vec(s, t, mass, &g, &wb, tol)?.value[0];
    }
    Ok(DfParts {
        boundary: 2.0 * boundary,
        interior,
    })
}

/// `F(φ)` for an affine or crease test function.
pub fn df_invariant(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    phi: &TestFunction,
    zeta: &AffineMap2,
    tol: f64,
) -> Result<f64> {
    df_parts(p, f, w, phi, zeta, tol).map(|d| d.value())
}

/// The part of segment `a → b` where `ell ≥ 0`.
fn clip_segment(a: Point, b: Point, ell: &AffineMap2) -> Option<(Point, Point)> {
    let (la, lb) = (ell.eval(a), ell.eval(b));
    match (la >= 0.0, lb >= 0.0) {
        (true, true) => Some((a, b)),
        (false, false) => None,
        (true, false) => Some((a, geom::lerp(a, b, la / (la - lb)))),
        (false, true) => Some((geom::lerp(a, b, la / (la - lb)), b)),
    }
}

/// Deterministic crease family: `min(n, 20)` directions evenly spaced in
/// angle with a seeded phase, and offsets at jittered interior quantiles of
/// the support function in each direction.
pub fn sample_creases(p: &LabelledPolytope2, n: usize, seed: u64) -> Vec<CreaseFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = n.min(SCAN_DIRECTIONS).max(1);
    let phase = rng.gen::<f64>() * std::f64::consts::TAU / dirs as f64;
    let mut out = Vec::with_capacity(n);
    for d in 0..dirs {
        let count = n / dirs + usize::from(d < n % dirs);
        let theta = phase + std::f64::consts::TAU * d as f64 / dirs as f64;
        let u = [theta.cos(), theta.sin()];
        let proj: Vec<f64> = p.vertices().iter().map(|v| geom::dot(u, *v)).collect();
        let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..count {
            let q = (j as f64 + 0.25 + 0.5 * rng.gen::<f64>()) / count as f64;
            let s = lo + q * (hi - lo);
            out.push(CreaseFunction::new(AffineMap2::new(-s, u[0], u[1])));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreaseScanReport {
    pub creases: usize,
    pub min: f64,
    pub argmin: AffineMap2,
    /// `min` divided by the magnitude of the two terms at the minimizer.
    pub min_relative: f64,
    pub violations: usize,
}

/// Evaluates `F` on [`sample_creases`] with the supplied `ζ`.
pub fn crease_scan_with_zeta(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    zeta: &AffineMap2,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<CreaseScanReport> {
    let creases = sample_creases(p, n, seed);
    let mut report = CreaseScanReport {
        creases: creases.len(),
        min: f64::INFINITY,
        argmin: AffineMap2::constant(0.0),
        min_relative: f64::INFINITY,
        violations: 0,
    };
    for c in &creases {
        let parts = df_parts(p, f, w, &TestFunction::Crease(*c), zeta, tol)?;
        let v = parts.value();
        if v <= 0.0 {
            report.violations += 1;
        }
        if v < report.min {
            report.min = v;
            report.argmin = c.ell;
            report.min_relative = v / parts.scale().max(f64::MIN_POSITIVE);
        }
    }
    Ok(report)
}

/// Crease scan with `ζ` from [`extremal_affine`].
pub fn crease_scan(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<CreaseScanReport> {
    let ea = extremal_affine(p, f, w, tol)?;
    crease_scan_with_zeta(p, f, w, &ea.zeta, n, seed, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{hirzebruch_delzant, unit_square};

    #[test]
    fn square_zeta_is_eight() {
        let sq = unit_square();
        for w in [0.0, 2.0, 4.0, 7.5] {
            let ea = extremal_affine(&sq, &AffineMap2::one(), w, 1e-10).unwrap();
            assert!((ea.zeta.c0 - 8.0).abs() < 1e-12);
            assert!(ea.zeta.c1.abs() < 1e-12 && ea.zeta.c2.abs() < 1e-12);
            assert!(ea.residual_a < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let h = hirzebruch_delzant(0.3, 2).unwrap();
        let f = AffineMap2::new(0.5, 0.3, -0.1);
        let (m1, b1) = gram_system(&h, &f, 4.0, 1e-12).unwrap();
        let (m2, b2) = gram_system_closed_form(&h, &f).unwrap();
        for i in 0..3 {
            assert!((b1[i] - b2[i]).abs() < 1e-11 * b1[0].abs());
            for j in 0..3 {
                assert!((m1[i][j] - m2[i][j]).abs() < 1e-11 * m1[0][0].abs());
            }
        }
    }

    #[test]
    fn crease_example_on_square() {
        // ∫_∂ φ dσ = 1/8 + 1/8 + 1/2 + 0, ∫ φ dx = 1/8, so F = 2·3/4 - 8/8.
        let sq = unit_square();
        let phi = TestFunction::Crease(CreaseFunction::new(AffineMap2::new(-0.5, 1.0, 0.0)));
        let v = df_invariant(&sq, &AffineMap2::one(), 4.0, &phi, &AffineMap2::constant(8.0), 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-13, "{v}");
    }

    #[test]
    fn affine_test_functions_vanish() {
        let h = hirzebruch_delzant(0.6, 1).unwrap();
        let f = AffineMap2::new(1.0, 0.4, 0.2);
        let ea = extremal_affine(&h, &f, 3.0, 1e-11).unwrap();
        for phi in [AffineMap2::one(), AffineMap2::new(0.0, 1.0, 0.0), AffineMap2::new(0.3, -2.0, 5.0)] {
            let v = df_invariant(&h, &f, 3.0, &TestFunction::Affine(phi), &ea.zeta, 1e-11).unwrap();
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn ckem_constant_homogeneity() {
        let sq = unit_square();
        let c = ckem_constant(&sq, &AffineMap2::one(), 2, 1e-10).unwrap();
        assert!((c - 8.0).abs() < 1e-12);
        let c = ckem_constant(&sq, &AffineMap2::constant(3.0), 2, 1e-10).unwrap();
        assert!((c - 72.0).abs() < 1e-10);
    }

    #[test]
    fn square_scan_is_positive_and_deterministic() {
        let sq = unit_square();
        let a = crease_scan(&sq, &AffineMap2::one(), 4.0, 200, 42, 1e-10).unwrap();
        let b = crease_scan(&sq, &AffineMap2::one(), 4.0, 200, 42, 1e-10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.creases, 200);
        assert!(a.min > 0.0 && a.violations == 0);
    }

    #[test]
    fn closed_form_reports_vertex_zero() {
        let sq = unit_square();
        assert_eq!(
            extremal_affine_closed_form(&sq, &AffineMap2::new(1.0, -1.0, 0.0)).unwrap_err(),
            Error::VertexZero { index: 1 }
        );
    }
}
