//! Explicit affine families on the Hirzebruch trapezoids `Δ_{p,k}` and the
//! algebra around them.
//!
//! Every family is stated with the gauge `Σ_vertices f = 1`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::rational_from_i64;
use crate::polytope::{hirzebruch_delzant, min_over_vertices, AffineMap2, LabelledPolytope2};

/// Distance kept from the degenerate endpoints `p = 0` and `p = 1`.
pub const GUARD: f64 = 1e-9;

/// Negative discriminants down to this (relative) size are clamped to zero.
const DISCRIMINANT_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    LebrunCalabi,
    LebrunB,
    FutakiOno,
    FoCase12,
}

impl FamilyId {
    pub const ALL: [FamilyId; 4] = [
        FamilyId::LebrunCalabi,
        FamilyId::LebrunB,
        FamilyId::FutakiOno,
        FamilyId::FoCase12,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyId::LebrunCalabi => "lebrun-calabi",
            FamilyId::LebrunB => "lebrun-b",
            FamilyId::FutakiOno => "futaki-ono",
            FamilyId::FoCase12 => "fo-case12",
        }
    }

    /// Whether the family has two branches selected by a sign.
    pub fn has_sign(&self) -> bool {
        !matches!(self, FamilyId::LebrunCalabi)
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::ParameterOutOfRange(format!("unknown family id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(&self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "p" => Ok(Sign::Plus),
            "-" | "minus" | "m" => Ok(Sign::Minus),
            _ => Err(Error::ParameterOutOfRange(format!("sign must be + or -, got {s:?}"))),
        }
    }
}

/// `F_k(p) = 4(1-p)²k² - 4(p-1)(p-2)pk + p⁴`, by Horner in `p`.
pub fn f_k(p: f64, k: u32) -> f64 {
    let k = k as f64;
    (((p - 4.0 * k) * p + 4.0 * k * k + 12.0 * k) * p - 8.0 * k * k - 8.0 * k) * p + 4.0 * k * k
}

/// The two roots `r_k < s_k` of `F_k` in `(0, 1)`.
pub fn roots_f_k(k: u32) -> (f64, f64) {
    static CACHE: OnceLock<Mutex<HashMap<u32, (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().map(|c| c.get(&k).copied()).ok().flatten() {
        return r;
    }
    let r = compute_roots(k);
    if let Ok(mut c) = cache.lock() {
        c.insert(k, r);
    }
    r
}

fn compute_roots(k: u32) -> (f64, f64) {
    // F_k is positive at both ends of [0, 1] and dips below zero in between.
    let n = 4096;
    let neg = (1..n)
        .map(|i| i as f64 / n as f64)
        .find(|&p| f_k(p, k) < 0.0)
        .expect("F_k changes sign on (0, 1)");
    let bisect = |mut lo: f64, mut hi: f64| {
        let rising = f_k(hi, k) > f_k(lo, k);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if (f_k(mid, k) > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(0.0, neg), bisect(neg, 1.0))
}

/// The smaller root `r_k` of `F_k` in `(0, 1)`.
pub fn r_k(k: u32) -> f64 {
    roots_f_k(k).0
}

/// `E_b(p) = b²(1-p)(2-3p)² + p² + p - 1`.
pub fn e_b(p: f64, b: f64) -> f64 {
    let t = 2.0 - 3.0 * p;
    b * b * (1.0 - p) * t * t + p * p + p - 1.0
}

fn clamped_sqrt(value: f64, scale: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value >= -DISCRIMINANT_CLAMP * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NegativeDiscriminant { value })
    }
}

/// `f_p = ((p + 2√(1-p) - 2)/(2p²)) x1 - (√(1-p) - 1)/(2p)`, any `k`.
pub fn lebrun_calabi_raw(p: f64) -> AffineMap2 {
    let s = (1.0 - p).sqrt();
    AffineMap2::new(-(s - 1.0) / (2.0 * p), (p + 2.0 * s - 2.0) / (2.0 * p * p), 0.0)
}

/// The same expression with `-√(1-p)` in place of `√(1-p)`. It also solves
/// the condition-(a) system but is never positive on the polytope.
pub fn lebrun_calabi_conjugate_raw(p: f64) -> AffineMap2 {
    let s = -(1.0 - p).sqrt();
    AffineMap2::new(-(s - 1.0) / (2.0 * p), (p + 2.0 * s - 2.0) / (2.0 * p * p), 0.0)
}

/// `f_p^± = ((-p ± D)/(4p²)) x1 + 3/8 ∓ D/(8p)` with `D = √(9p² - 8p)`, `k = 1`.
pub fn lebrun_b_raw(p: f64, sign: Sign) -> Result<AffineMap2> {
    let d = clamped_sqrt(9.0 * p * p - 8.0 * p, 9.0 * p * p)?;
    let s = sign.value();
    Ok(AffineMap2::new(
        0.375 - s * d / (8.0 * p),
        (-p + s * d) / (4.0 * p * p),
        0.0,
    ))
}

/// `f^±_{p,k} = a x1 + b x2 + c` with
/// `a = (±√F_k + 2(p-1)k - p(p-2)) / (2(2(p-1)(p-2)k - p³))`,
/// `b = ±√F_k / (k(2(p-1)(p-2)k - p³))`, `c = ¼(1 + (p-2)k b - 2p a)`.
pub fn futaki_ono_raw(p: f64, k: u32, sign: Sign) -> Result<AffineMap2> {
    let kf = k as f64;
    let root = sign.value() * clamped_sqrt(f_k(p, k), 4.0 * kf * kf)?;
    let den = 2.0 * (p - 1.0) * (p - 2.0) * kf - p * p * p;
    let a = (root + 2.0 * (p - 1.0) * kf - p * (p - 2.0)) / (2.0 * den);
    let b = root / (kf * den);
    let c = 0.25 * (1.0 + (p - 2.0) * kf * b - 2.0 * p * a);
    Ok(AffineMap2::new(c, a, b))
}

/// `f^±_b = a x1 + b x2 + c` on `Δ_{p,1}` with
/// `a = (3bp² + (1-2b)p ± 2√E_b) / (2p(3p-2))` and `c = ¼(1 - (2-p)b - 2pa)`.
pub fn fo_case12_raw(p: f64, b: f64, sign: Sign) -> Result<AffineMap2> {
    let e = clamped_sqrt(e_b(p, b), 1.0 + b * b)?;
    let a = (3.0 * b * p * p + (1.0 - 2.0 * b) * p + sign.value() * 2.0 * e) / (2.0 * p * (3.0 * p - 2.0));
    let c = 0.25 * (1.0 - (2.0 - p) * b - 2.0 * p * a);
    Ok(AffineMap2::new(c, a, b))
}

fn out_of_domain(msg: String) -> Error {
    Error::ParameterOutOfDomain(msg)
}

/// Checks `p` against a family's stated domain. Endpoints where a
/// discriminant vanishes are closed; `p = 0` and `p = 1` keep a guard band.
pub fn check_domain(id: FamilyId, p: f64, k: u32, b: Option<f64>) -> Result<()> {
    if !(p >= GUARD && p <= 1.0 - GUARD) {
        return Err(out_of_domain(format!("p = {p} must lie in (0, 1)")));
    }
    if k == 0 {
        return Err(out_of_domain("k must be at least 1".into()));
    }
    match id {
        FamilyId::LebrunCalabi => Ok(()),
        FamilyId::LebrunB => {
            if k != 1 {
                Err(out_of_domain(format!("{id} requires k = 1, got {k}")))
            } else if p < 8.0 / 9.0 {
                Err(out_of_domain(format!("{id} requires 8/9 <= p < 1, got {p}")))
            } else {
                Ok(())
            }
        }
        FamilyId::FutakiOno => {
            if k > 4 {
                Err(out_of_domain(format!("{id} is stated for k <= 4, got {k}")))
            } else if p > r_k(k) {
                Err(out_of_domain(format!("{id} requires 0 < p <= r_{k} = {}, got {p}", r_k(k))))
            } else {
                Ok(())
            }
        }
        FamilyId::FoCase12 => {
            let Some(b) = b else {
                return Err(out_of_domain(format!("{id} requires a value for b")));
            };
            if k != 1 {
                Err(out_of_domain(format!("{id} requires k = 1, got {k}")))
            } else if (3.0 * p - 2.0).abs() <= GUARD {
                Err(out_of_domain(format!("{id} excludes p = 2/3")))
            } else if !b.is_finite() {
                Err(out_of_domain(format!("b = {b} must be finite")))
            } else {
                Ok(())
            }
        }
    }
}

/// The affine function of a paper family, after domain checks.
pub fn family_f(id: FamilyId, p: f64, k: u32, sign: Sign, b: Option<f64>) -> Result<AffineMap2> {
    check_domain(id, p, k, b)?;
    match id {
        FamilyId::LebrunCalabi => Ok(lebrun_calabi_raw(p)),
        FamilyId::LebrunB => lebrun_b_raw(p, sign),
        FamilyId::FutakiOno => futaki_ono_raw(p, k, sign),
        FamilyId::FoCase12 => fo_case12_raw(p, b.unwrap_or(0.0), sign),
    }
}

/// `f / Σ_vertices f`.
pub fn normalize_vertex_sum(p: &LabelledPolytope2, f: &AffineMap2) -> AffineMap2 {
    let s: f64 = p.vertices().iter().map(|v| f.eval(*v)).sum();
    f.scale(1.0 / s)
}

/// `Σ_{i=1}^4 (-1)^i g(s_i)` over the stored cyclic vertex order.
pub fn alternating_vertex_sum(p: &LabelledPolytope2, g: &AffineMap2) -> Result<f64> {
    if p.len() != 4 {
        return Err(Error::NotAQuadrilateral { vertices: p.len() });
    }
    Ok(p.vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { -g.eval(*v) } else { g.eval(*v) })
        .sum())
}

/// `Σ_{i=1}^4 (-1)^i / f(s_i)` over the stored cyclic vertex order.
pub fn equipoised_check(p: &LabelledPolytope2, f: &AffineMap2) -> Result<f64> {
    if p.len() != 4 {
        return Err(Error::NotAQuadrilateral { vertices: p.len() });
    }
    let mut sum = 0.0;
    for (i, v) in p.vertices().iter().enumerate() {
        let z = f.eval(*v);
        if z == 0.0 {
            return Err(Error::VertexZero { index: i });
        }
        sum += if i % 2 == 0 { -1.0 / z } else { 1.0 / z };
    }
    Ok(sum)
}

/// `V² + (1-p)(p F_1(p) - U²)` with `U = p² + 2p - 2`,
/// `V = p³ - 3p² + 4p - 2`, in exact arithmetic.
pub fn identity_e2(p: &BigRational) -> BigRational {
    let c = rational_from_i64;
    let p2 = p * p;
    let p3 = &p2 * p;
    let p4 = &p3 * p;
    let u = &p2 + p * c(2) - c(2);
    let v = &p3 - &p2 * c(3) + p * c(4) - c(2);
    let f1 = &p4 - &p3 * c(4) + &p2 * c(16) - p * c(16) + c(4);
    &v * &v + (c(1) - p) * (p * f1 - &u * &u)
}

/// Whether [`identity_e2`] vanishes at `p`.
pub fn identity_e2_is_zero(p: &BigRational) -> bool {
    identity_e2(p).is_zero()
}

/// `b²` at equality in `b² ≥ (1-p-p²)/((1-p)(2-3p)²)`, where `E_b(p) = 0`.
pub fn case12_b_squared_bound(p: f64) -> f64 {
    let t = 2.0 - 3.0 * p;
    (1.0 - p - p * p) / ((1.0 - p) * t * t)
}

/// Deterministic `(p, b)` samples satisfying the discriminant inequality,
/// including equality cases.
pub fn case12_samples(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: f64 = rng.gen_range(0.01..0.99);
        if (3.0 * p - 2.0).abs() < 3e-3 {
            continue;
        }
        let bound = case12_b_squared_bound(p);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let b = if bound > 0.0 {
            let stretch = if out.len() % 5 == 0 { 1.0 } else { 1.0 + rng.gen_range(0.0..2.0) };
            sign * bound.sqrt() * stretch
        } else {
            rng.gen_range(-3.0..3.0)
        };
        out.push((p, b));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case12Counterexample {
    pub p: f64,
    pub b: f64,
    pub sign: Sign,
    pub min_vertex_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case12Report {
    pub samples: usize,
    pub evaluations: usize,
    pub max_of_min_vertex_values: f64,
    pub all_negative: bool,
    pub counterexamples: Vec<Case12Counterexample>,
}

/// For each sample and sign, the minimum of `f^±_b` over the vertices of
/// `Δ_{p,1}`; all of them are expected to be negative.
pub fn positivity_scan_case12(samples: &[(f64, f64)]) -> Result<Case12Report> {
    let mut worst = f64::NEG_INFINITY;
    let mut counterexamples = Vec::new();
    let mut evaluations = 0;
    for &(p, b) in samples {
        let poly = hirzebruch_delzant(p, 1)?;
        for sign in Sign::BOTH {
            let f = family_f(FamilyId::FoCase12, p, 1, sign, Some(b))?;
            let (m, _) = min_over_vertices(&poly, &f);
            evaluations += 1;
            worst = worst.max(m);
            if m >= 0.0 {
                counterexamples.push(Case12Counterexample {
                    p,
                    b,
                    sign,
                    min_vertex_value: m,
                });
            }
        }
    }
    Ok(Case12Report {
        samples: samples.len(),
        evaluations,
        max_of_min_vertex_values: worst,
        all_negative: counterexamples.is_empty() && evaluations > 0,
        counterexamples,
    })
}

/// A paper family instance, normalized to vertex sum one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyInstance {
    pub id: FamilyId,
    pub sign: Option<Sign>,
    pub b: Option<f64>,
    pub f: AffineMap2,
    pub in_stated_domain: bool,
}

/// Every discrete family member defined on `Δ_{p,k}`. Members are computed
/// from the closed forms even slightly outside the stated domains (flagged),
/// as long as the discriminant is non-negative.
pub fn candidate_families(p: f64, k: u32) -> Result<Vec<FamilyInstance>> {
    let poly = hirzebruch_delzant(p, k)?;
    let mut out = Vec::new();
    let mut push = |id: FamilyId, sign: Option<Sign>, f: Result<AffineMap2>| {
        if let Ok(f) = f {
            let in_stated_domain = check_domain(id, p, k, None).is_ok();
            out.push(FamilyInstance {
                id,
                sign,
                b: None,
                f: normalize_vertex_sum(&poly, &f),
                in_stated_domain,
            });
        }
    };
    push(FamilyId::LebrunCalabi, None, Ok(lebrun_calabi_raw(p)));
    if k == 1 {
        for s in Sign::BOTH {
            push(FamilyId::LebrunB, Some(s), lebrun_b_raw(p, s));
        }
    }
    for s in Sign::BOTH {
        push(FamilyId::FutakiOno, Some(s), futaki_ono_raw(p, k, s));
    }
    Ok(out)
}

/// The member of the one-parameter family `f^±_b` through a normalized `f`
/// on `Δ_{p,1}`, if the `x2` coefficient gives a valid `b`.
pub fn case12_members_through(p: f64, f: &AffineMap2) -> Vec<FamilyInstance> {
    let b = f.c2;
    Sign::BOTH
        .into_iter()
        .filter_map(|s| {
            let g = fo_case12_raw(p, b, s).ok()?;
            Some(FamilyInstance {
                id: FamilyId::FoCase12,
                sign: Some(s),
                b: Some(b),
                f: g,
                in_stated_domain: check_domain(FamilyId::FoCase12, p, 1, Some(b)).is_ok(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;

    #[test]
    fn f_k_matches_expanded_form() {
        for &p in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let f1 = p * p * p * p - 4.0 * p * p * p + 16.0 * p * p - 16.0 * p + 4.0;
            assert!((f_k(p, 1) - f1).abs() < 1e-14);
            for k in 1..6 {
                let kf = k as f64;
                let direct = 4.0 * (1.0 - p) * (1.0 - p) * kf * kf
                    - 4.0 * (p - 1.0) * (p - 2.0) * p * kf
                    + p.powi(4);
                assert!((f_k(p, k) - direct).abs() < 1e-12);
            }
        }
        assert_eq!(f_k(0.0, 3), 36.0);
    }

    #[test]
    fn roots_bracket_sign_change() {
        for k in 1..=4 {
            let (r, s) = roots_f_k(k);
            assert!(0.0 < r && r < s && s < 1.0);
            assert!(f_k(r - 1e-9, k) > 0.0 && f_k(r + 1e-9, k) < 0.0);
            assert!(f_k(s - 1e-9, k) < 0.0 && f_k(s + 1e-9, k) > 0.0);
        }
        assert!((r_k(1) - 0.386_016_517_283_345_3).abs() < 1e-13);
    }

    #[test]
    fn family_examples() {
        let f = family_f(FamilyId::LebrunCalabi, 0.75, 1, Sign::Plus, None).unwrap();
        assert!(f.max_coeff_distance(&AffineMap2::new(1.0 / 3.0, -2.0 / 9.0, 0.0)) < 1e-15);
        let plus = family_f(FamilyId::LebrunB, 8.0 / 9.0, 1, Sign::Plus, None).unwrap();
        let minus = family_f(FamilyId::LebrunB, 8.0 / 9.0, 1, Sign::Minus, None).unwrap();
        assert!(plus.max_coeff_distance(&minus) < 1e-7);
        let r = r_k(1);
        let plus = family_f(FamilyId::FutakiOno, r, 1, Sign::Plus, None).unwrap();
        let minus = family_f(FamilyId::FutakiOno, r, 1, Sign::Minus, None).unwrap();
        assert!(plus.max_coeff_distance(&minus) < 1e-5);
        assert!(matches!(
            family_f(FamilyId::LebrunB, 0.5, 1, Sign::Plus, None),
            Err(Error::ParameterOutOfDomain(_))
        ));
        assert!(matches!(
            family_f(FamilyId::FutakiOno, 0.5, 1, Sign::Plus, None),
            Err(Error::ParameterOutOfDomain(_))
        ));
    }

    #[test]
    fn families_are_normalized() {
        for &(id, p, k) in &[
            (FamilyId::LebrunCalabi, 0.3, 2),
            (FamilyId::LebrunB, 0.95, 1),
            (FamilyId::FutakiOno, 0.2, 3),
        ] {
            let poly = hirzebruch_delzant(p, k).unwrap();
            for s in Sign::BOTH {
                let f = family_f(id, p, k, s, None).unwrap();
                let sum: f64 = poly.vertices().iter().map(|v| f.eval(*v)).sum();
                assert!((sum - 1.0).abs() < 1e-13);
            }
        }
        let poly = hirzebruch_delzant(0.4, 1).unwrap();
        let f = family_f(FamilyId::FoCase12, 0.4, 1, Sign::Minus, Some(2.0)).unwrap();
        let sum: f64 = poly.vertices().iter().map(|v| f.eval(*v)).sum();
        assert!((sum - 1.0).abs() < 1e-13);
    }

    #[test]
    fn e_b_examples() {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!(e_b(golden, 0.0).abs() < 1e-15);
        assert!((e_b(2.0 / 3.0, 17.0) - 1.0 / 9.0).abs() < 1e-12);
        let p = 0.4;
        let b = case12_b_squared_bound(p).sqrt();
        assert!(e_b(p, b).abs() < 1e-14);
    }

    #[test]
    fn e2_identity_is_exact() {
        for (n, d) in [(1, 2), (7, 10), (1, 3), (2, 7), (5, 9), (11, 13), (3, 100)] {
            assert!(identity_e2_is_zero(&rational(n, d)));
        }
    }

    #[test]
    fn case12_examples_are_not_positive() {
        let p = 0.4;
        let b = case12_b_squared_bound(p).sqrt();
        let report = positivity_scan_case12(&[(p, b), (0.9, 2.0)]).unwrap();
        assert!(report.all_negative, "{report:?}");
    }
}
