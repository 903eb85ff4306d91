//! Guillemin potential `u = ½ Σ L_r log L_r`, its Hessian
//! `G = Σ e_r e_rᵀ / (2 L_r)`, and the weighted Abreu scalar curvature
//!
//! ```text
//! S_{f,w}(u) = -f^{w+1} Σ_ij ∂_i ∂_j (f^{1-w} H_ij),   H = G⁻¹.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::linalg::{self, Mat2, Mat3};
use crate::polytope::{ensure_positive, AffineMap2, LabelledPolytope2};
use crate::quadrature::{integrate_interior_vec, WeightSpec};

/// Determinant floor below which `G` counts as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// Default finite-difference step as a fraction of the diameter.
pub const DEFAULT_STEP_FRACTION: f64 = 1e-4;

fn check_interior(p: &LabelledPolytope2, x: Point) -> Result<()> {
    if p.contains_interior(x) && x.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NotInterior { x: x[0], y: x[1] })
    }
}

pub fn guillemin_potential(p: &LabelledPolytope2, x: Point) -> Result<f64> {
    check_interior(p, x)?;
    Ok(p.labels().iter().map(|l| {
        let v = l.eval(x);
        0.5 * v * v.ln()
    }).sum())
}

pub fn guillemin_gradient(p: &LabelledPolytope2, x: Point) -> Result<Point> {
    check_interior(p, x)?;
    let mut g = [0.0; 2];
    for l in p.labels() {
        let s = 0.5 * (l.eval(x).ln() + 1.0);
        g[0] += s * l.c1;
        g[1] += s * l.c2;
    }
    Ok(g)
}

pub fn guillemin_hessian(p: &LabelledPolytope2, x: Point) -> Result<Mat2> {
    check_interior(p, x)?;
    let mut g = [[0.0; 2]; 2];
    for l in p.labels() {
        let s = 0.5 / l.eval(x);
        let e = l.gradient();
        g[0][0] += s * e[0] * e[0];
        g[0][1] += s * e[0] * e[1];
        g[1][1] += s * e[1] * e[1];
    }
    g[1][0] = g[0][1];
    Ok(g)
}

pub fn inverse_hessian(p: &LabelledPolytope2, x: Point) -> Result<Mat2> {
    let g = guillemin_hessian(p, x)?;
    let det = linalg::det2(&g);
    if !(det.abs() >= DET_FLOOR) {
        return Err(Error::SingularHessian { det });
    }
    Ok([[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]])
}

/// Distance from `x` to the nearest edge line.
pub fn boundary_margin(p: &LabelledPolytope2, x: Point) -> f64 {
    p.boundary_margin(x)
}

fn weighted_inverse(p: &LabelledPolytope2, f: &AffineMap2, w: f64, x: Point) -> Result<[f64; 3]> {
    let h = inverse_hessian(p, x)?;
    let s = f.eval(x).powf(1.0 - w);
    Ok([s * h[0][0], s * h[0][1], s * h[1][1]])
}

/// `Σ_ij ∂_i ∂_j Q_ij` for `Q = f^{1-w} H` by central differences at step `h`.
fn divergence2(p: &LabelledPolytope2, f: &AffineMap2, w: f64, x: Point, h: f64) -> Result<f64> {
    let q = |dx: f64, dy: f64| weighted_inverse(p, f, w, [x[0] + dx, x[1] + dy]);
    let c = q(0.0, 0.0)?;
    let d11 = (q(h, 0.0)?[0] - 2.0 * c[0] + q(-h, 0.0)?[0]) / (h * h);
    let d22 = (q(0.0, h)?[2] - 2.0 * c[2] + q(0.0, -h)?[2]) / (h * h);
    let d12 = (q(h, h)?[1] - q(h, -h)?[1] - q(-h, h)?[1] + q(-h, -h)?[1]) / (4.0 * h * h);
    Ok(d11 + 2.0 * d12 + d22)
}

/// `S_{f,w}(u)` at `x` from step-`h` central differences with one Richardson
/// level. Requires a boundary margin of at least `4h`.
pub fn weighted_scalar_curvature(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    x: Point,
    h: f64,
) -> Result<f64> {
    check_interior(p, x)?;
    ensure_positive(p, f)?;
    let margin = p.boundary_margin(x);
    if !(h > 0.0) || 4.0 * h > margin {
        return Err(Error::StepTooLarge { step: h, margin });
    }
    scalar_curvature_unchecked(p, f, w, x, h)
}

fn scalar_curvature_unchecked(p: &LabelledPolytope2, f: &AffineMap2, w: f64, x: Point, h: f64) -> Result<f64> {
    let d1 = divergence2(p, f, w, x, h)?;
    let d2 = divergence2(p, f, w, x, 2.0 * h)?;
    let div = (4.0 * d1 - d2) / 3.0;
    Ok(-f.eval(x).powf(w + 1.0) * div)
}

/// Abreu's scalar curvature of the Guillemin metric (`f ≡ 1`).
pub fn scalar_curvature(p: &LabelledPolytope2, x: Point, h: f64) -> Result<f64> {
    weighted_scalar_curvature(p, &AffineMap2::one(), 0.0, x, h)
}

/// Integration-by-parts data for the basis `(1, x1, x2)`:
/// `lhs_i = ∫ S_{f,w} φ_i f^{-(w+1)} dx` and `rhs_i = 2∫_∂ φ_i f^{-(w-1)} dσ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartsIdentity {
    pub lhs: [f64; 3],
    pub rhs: [f64; 3],
    pub max_relative_deviation: f64,
}

/// Evaluates both sides of the integration-by-parts identity. Inside the
/// integral the difference step shrinks to a quarter of the local margin.
pub fn integration_by_parts(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    tol: f64,
) -> Result<PartsIdentity> {
    ensure_positive(p, f)?;
    let h = DEFAULT_STEP_FRACTION * p.diameter();
    let lhs_vec = integrate_interior_vec(
        p,
        |x: Point| {
            let hl = h.min(0.25 * p.boundary_margin(x));
            let s = scalar_curvature_unchecked(p, f, w, x, hl).unwrap_or(f64::NAN);
            [s, s * x[0], s * x[1]]
        },
        &WeightSpec::new(*f, w + 1.0),
        tol,
    )?;
    let rhs = crate::futaki::boundary_rhs(p, f, w, tol)?;
    let lhs = lhs_vec.value;
    let max_relative_deviation = (0..3)
        .map(|i| (lhs[i] - rhs[i]).abs() / rhs[i].abs().max(rhs[0].abs()))
        .fold(0.0, f64::max);
    Ok(PartsIdentity {
        lhs,
        rhs,
        max_relative_deviation,
    })
}

/// Weighted `L²` projection of `S_{f,w}(u)` onto affine functions with weight
/// `f^{-(w+1)} dx`.
pub fn project_scalar_curvature(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    w: f64,
    tol: f64,
) -> Result<AffineMap2> {
    let parts = integration_by_parts(p, f, w, tol)?;
    let inner = integrate_interior_vec(
        p,
        |x: Point| [1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]],
        &WeightSpec::new(*f, w + 1.0),
        tol,
    )?
    .value;
    let gram: Mat3 = [
        [inner[0], inner[1], inner[2]],
        [inner[1], inner[3], inner[4]],
        [inner[2], inner[4], inner[5]],
    ];
    let c = linalg::solve_sym3(&gram, parts.lhs).ok_or(Error::IllConditioned {
        condition: linalg::condition3(&gram),
    })?;
    Ok(AffineMap2::from_coefficients(c))
}

/// Behaviour of `H` near the midpoint of edge `i`, probed at inward distance
/// `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryProbe {
    pub edge: usize,
    pub eps: f64,
    /// `|H(x_ε) e_i|`.
    pub h_times_normal: f64,
    /// Differential of `x ↦ H(x)(e_i, e_i)` at `x_ε`, expected near `2 e_i`.
    pub d_h_normal_normal: [f64; 2],
}

pub fn boundary_probe(p: &LabelledPolytope2, edge: usize, eps: f64) -> Result<BoundaryProbe> {
    let l = p.labels()[edge];
    let (a, b) = p.edge(edge);
    let e = l.gradient();
    let n = geom::scale(e, 1.0 / geom::norm(e));
    let x = geom::add(geom::lerp(a, b, 0.5), geom::scale(n, eps));
    let hmat = inverse_hessian(p, x)?;
    let he = [hmat[0][0] * e[0] + hmat[0][1] * e[1], hmat[1][0] * e[0] + hmat[1][1] * e[1]];
    let hee = |y: Point| -> Result<f64> {
        let m = inverse_hessian(p, y)?;
        Ok(e[0] * (m[0][0] * e[0] + m[0][1] * e[1]) + e[1] * (m[1][0] * e[0] + m[1][1] * e[1]))
    };
    let d = 0.25 * eps;
    let dx = (hee([x[0] + d, x[1]])? - hee([x[0] - d, x[1]])?) / (2.0 * d);
    let dy = (hee([x[0], x[1] + d])? - hee([x[0], x[1] - d])?) / (2.0 * d);
    Ok(BoundaryProbe {
        edge,
        eps,
        h_times_normal: geom::norm(he),
        d_h_normal_normal: [dx, dy],
    })
}
