//! The projective change of variables `T(x) = x / f(x)` and its action on
//! affine functions, labelled polygons and potentials.
//!
//! For `f = a0 + a1 x1 + a2 x2` with `a0 > 0`, the inverse is
//! `x̃ ↦ x̃ / f̃(x̃)` where `f̃ = (1 - a1 x̃1 - a2 x̃2) / a0`, and
//! `f̃(T(x))·f(x) = 1`.

use serde::Serialize;

use crate::abreu;
use crate::error::{Error, Result};
use crate::futaki::{self, TestFunction};
use crate::geom::{self, Point};
use crate::linalg;
use crate::polytope::{ensure_positive, AffineMap2, LabelledPolytope2};

/// Exponent in the Hessian determinant law, `m + 2` with `m = 2`.
pub const DET_EXPONENT: i32 = 4;

/// Weight paired with the twist, `m + 2`.
pub const TWIST_WEIGHT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistMap {
    pub f: AffineMap2,
    pub f_tilde: AffineMap2,
}

impl TwistMap {
    pub fn new(f: AffineMap2) -> Result<Self> {
        Ok(Self {
            f,
            f_tilde: dual_weight(&f)?,
        })
    }

    pub fn forward(&self, x: Point) -> Point {
        geom::scale(x, 1.0 / self.f.eval(x))
    }

    pub fn inverse(&self, y: Point) -> Point {
        geom::scale(y, 1.0 / self.f_tilde.eval(y))
    }
}

/// `f̃ = (1 - a1 x̃1 - a2 x̃2) / a0 = 1/f`, the twist of the constant `1`.
pub fn dual_weight(f: &AffineMap2) -> Result<AffineMap2> {
    twist_affine(f, &AffineMap2::one())
}

/// The affine `φ̃` with `φ̃(T(x)) = φ(x) / f(x)`.
pub fn twist_affine(f: &AffineMap2, phi: &AffineMap2) -> Result<AffineMap2> {
    let a0 = f.c0;
    if a0 == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    let b0 = phi.c0;
    // φ/f = b0/f + Σ b_i x̃_i and 1/f = (1 - Σ a_i x̃_i)/a0.
    Ok(AffineMap2::new(
        b0 / a0,
        phi.c1 - b0 * f.c1 / a0,
        phi.c2 - b0 * f.c2 / a0,
    ))
}

/// Image of `(P, L)` under `T`: vertices `T(v)`, labels `L / f`.
pub fn twist_polytope(p: &LabelledPolytope2, f: &AffineMap2) -> Result<LabelledPolytope2> {
    if !p.contains_interior([0.0, 0.0]) {
        return Err(Error::OriginNotInterior);
    }
    ensure_positive(p, f)?;
    let map = TwistMap::new(*f)?;
    let vertices = p.vertices().iter().map(|v| map.forward(*v)).collect();
    let labels = p
        .labels()
        .iter()
        .map(|l| twist_affine(f, l))
        .collect::<Result<Vec<_>>>()?;
    LabelledPolytope2::new(vertices, labels)
}

/// `ũ(x̃) = u(T⁻¹ x̃)·f̃(x̃)`, i.e. `u(x)/f(x)` at `x̃ = T(x)`.
pub fn twist_scalar<U: Fn(Point) -> f64>(map: TwistMap, u: U) -> impl Fn(Point) -> f64 {
    move |y| u(map.inverse(y)) * map.f_tilde.eval(y)
}

/// A polygon moved so that the origin is interior, together with the
/// translated weight and the translation that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Centered {
    pub polytope: LabelledPolytope2,
    pub f: AffineMap2,
    /// The polygon was moved by `-translation`.
    pub translation: Point,
}

/// Translates the area centroid to the origin unless the origin is already
/// strictly interior, in which case nothing moves.
pub fn center(p: &LabelledPolytope2, f: &AffineMap2) -> Result<Centered> {
    if p.contains_interior([0.0, 0.0]) {
        return Ok(Centered {
            polytope: p.clone(),
            f: *f,
            translation: [0.0, 0.0],
        });
    }
    let t = p.centroid();
    Ok(Centered {
        polytope: p.translated(t)?,
        f: f.shifted(t),
        translation: t,
    })
}

/// Hessian of a scalar function by central differences with one Richardson
/// level.
pub fn fd_hessian<U: Fn(Point) -> f64>(u: &U, x: Point, h: f64) -> linalg::Mat2 {
    let at = |s: f64| {
        let c = u(x);
        let d11 = (u([x[0] + s, x[1]]) - 2.0 * c + u([x[0] - s, x[1]])) / (s * s);
        let d22 = (u([x[0], x[1] + s]) - 2.0 * c + u([x[0], x[1] - s])) / (s * s);
        let d12 = (u([x[0] + s, x[1] + s]) - u([x[0] + s, x[1] - s]) - u([x[0] - s, x[1] + s])
            + u([x[0] - s, x[1] - s]))
            / (4.0 * s * s);
        [d11, d12, d22]
    };
    let a = at(h);
    let b = at(2.0 * h);
    let r: Vec<f64> = (0..3).map(|i| (4.0 * a[i] - b[i]) / 3.0).collect();
    [[r[0], r[1]], [r[1], r[2]]]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianDetReport {
    pub samples: usize,
    pub max_relative_deviation: f64,
}

/// Compares `det Hess ũ(T x)` (finite differences of the twisted Guillemin
/// potential) with `f(x)^4 / a0² · det G(x)` at each sample `x`.
pub fn check_hessian_det_law(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    samples: &[Point],
) -> Result<HessianDetReport> {
    let twisted = twist_polytope(p, f)?;
    let map = TwistMap::new(*f)?;
    let u = |x: Point| abreu::guillemin_potential(p, x).unwrap_or(f64::NAN);
    let ut = twist_scalar(map, u);
    let h0 = abreu::DEFAULT_STEP_FRACTION * twisted.diameter();
    let mut worst: f64 = 0.0;
    for x in samples {
        let g = abreu::guillemin_hessian(p, *x)?;
        let y = map.forward(*x);
        let h = h0.min(0.125 * twisted.boundary_margin(y));
        let gt = fd_hessian(&ut, y, h);
        let expected = f.eval(*x).powi(DET_EXPONENT) / (f.c0 * f.c0) * linalg::det2(&g);
        let dev = (linalg::det2(&gt) - expected).abs() / expected.abs();
        worst = worst.max(dev);
    }
    Ok(HessianDetReport {
        samples: samples.len(),
        max_relative_deviation: worst,
    })
}

/// Twist of a test function: `φ / f` is again affine, and a crease
/// `max(0, ℓ)` becomes `max(0, ℓ̃)` because `f > 0`.
pub fn twist_test_function(f: &AffineMap2, phi: &TestFunction) -> Result<TestFunction> {
    Ok(match phi {
        TestFunction::Affine(a) => TestFunction::Affine(twist_affine(f, a)?),
        TestFunction::Crease(c) => {
            TestFunction::Crease(futaki::CreaseFunction::new(twist_affine(f, &c.ell)?))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEntry {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DfCovarianceReport {
    /// `twist_affine(f, ζ)` from the source side.
    pub zeta_twisted: AffineMap2,
    /// `ζ̃` solved directly on the twisted polygon.
    pub zeta_direct: AffineMap2,
    pub zeta_max_coeff_distance: f64,
    pub entries: Vec<CovarianceEntry>,
    pub max_relative_deviation: f64,
}

/// Evaluates `F_{P,f,4}(φ)` and `f(0)⁻¹ F_{P̃}(φ̃)` independently for each
/// test function, and compares the two extremal affine functions.
pub fn check_df_covariance(
    p: &LabelledPolytope2,
    f: &AffineMap2,
    phis: &[TestFunction],
    tol: f64,
) -> Result<DfCovarianceReport> {
    let twisted = twist_polytope(p, f)?;
    let one = AffineMap2::one();
    let zeta = futaki::extremal_affine(p, f, TWIST_WEIGHT, tol)?.zeta;
    let zeta_direct = futaki::extremal_affine(&twisted, &one, TWIST_WEIGHT, tol)?.zeta;
    let zeta_twisted = twist_affine(f, &zeta)?;
    let mut entries = Vec::with_capacity(phis.len());
    let mut worst: f64 = 0.0;
    for phi in phis {
        let lhs_parts = futaki::df_parts(p, f, TWIST_WEIGHT, phi, &zeta, tol)?;
        let phi_t = twist_test_function(f, phi)?;
        let rhs_parts = futaki::df_parts(&twisted, &one, TWIST_WEIGHT, &phi_t, &zeta_direct, tol)?;
        let lhs = lhs_parts.value();
        let rhs = rhs_parts.value() / f.c0;
        let scale = lhs_parts.scale().max(rhs_parts.scale() / f.c0.abs());
        let relative_deviation = (lhs - rhs).abs() / scale;
        worst = worst.max(relative_deviation);
        entries.push(CovarianceEntry {
            lhs,
            rhs,
            scale,
            relative_deviation,
        });
    }
    Ok(DfCovarianceReport {
        zeta_max_coeff_distance: zeta_twisted.max_coeff_distance(&zeta_direct),
        zeta_twisted,
        zeta_direct,
        entries,
        max_relative_deviation: worst,
    })
}
