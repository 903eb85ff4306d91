//! Dense univariate polynomials and Sturm sequences, generic over `f64` and
//! exact rationals.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Coefficient field for [`Poly`].
pub trait Scalar: Clone + Debug + Num + Signed + PartialOrd {
    /// Whether `self` should be treated as zero relative to `scale`.
    fn negligible(&self, scale: &Self) -> bool;
    fn from_float(x: f64) -> Self;
    fn as_float(&self) -> f64;
}

/// Relative cutoff for dropping near-zero coefficients in floating point.
pub const F64_TRUNCATION: f64 = 1e-12;

impl Scalar for f64 {
    fn negligible(&self, scale: &Self) -> bool {
        self.abs() <= F64_TRUNCATION * scale.abs()
    }
    fn from_float(x: f64) -> Self {
        x
    }
    fn as_float(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }
    fn from_float(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
    }
    fn as_float(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Polynomial with coefficients in increasing degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.clone() * T::from_float(i as f64))
            .collect();
        Self::new(coeffs)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Drops coefficients negligible relative to `scale`.
    pub fn truncated(&self, scale: &T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.negligible(scale) { T::zero() } else { c.clone() })
            .collect();
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[T], i: usize| v.get(i).cloned().unwrap_or_else(T::zero);
        Self::new((0..n).map(|i| get(&self.coeffs, i) + get(&other.coeffs, i)).collect())
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    /// Euclidean division `self = q·d + r`. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![T::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = r[i + dd].clone() / lead.clone();
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] = r[i + j].clone() - c.clone() * dc.clone();
            }
            r[i + dd] = T::zero();
            q[i] = c;
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }
}

/// Sturm sequence `p, p', -rem(p_{i-1}, p_i), ...`. In floating point each
/// remainder is truncated relative to the largest coefficient of `p`.
pub fn sturm_sequence<T: Scalar>(p: &Poly<T>) -> Vec<Poly<T>> {
    let scale = p.max_abs_coeff();
    let mut seq = vec![p.clone()];
    let d = p.derivative().truncated(&scale);
    if d.is_zero() {
        return seq;
    }
    seq.push(d);
    loop {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        let r = r.scale(&-T::one()).truncated(&scale);
        if r.is_zero() {
            break;
        }
        seq.push(r);
    }
    seq
}

fn sign_changes<T: Scalar>(seq: &[Poly<T>], x: &T) -> usize {
    let mut last: Option<bool> = None;
    let mut n = 0;
    for p in seq {
        let v = p.eval(x);
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if let Some(l) = last {
            if l != pos {
                n += 1;
            }
        }
        last = Some(pos);
    }
    n
}

/// Number of distinct real roots in the half-open interval `(a, b]`.
pub fn count_roots_in<T: Scalar>(seq: &[Poly<T>], a: &T, b: &T) -> usize {
    sign_changes(seq, a).saturating_sub(sign_changes(seq, b))
}

/// Disjoint intervals `(lo, hi]`, each holding exactly one root of the
/// sequence's first polynomial, bisected until narrower than `width`.
pub fn isolate_roots<T: Scalar>(seq: &[Poly<T>], a: &T, b: &T, width: &T) -> Vec<(T, T)> {
    let two = T::one() + T::one();
    let mut out = Vec::new();
    let mut stack = vec![(a.clone(), b.clone(), 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let n = count_roots_in(seq, &lo, &hi);
        if n == 0 {
            continue;
        }
        if (n == 1 && hi.clone() - lo.clone() <= *width) || depth >= 200 {
            out.push((lo, hi));
            continue;
        }
        let mid = (lo.clone() + hi.clone()) / two.clone();
        stack.push((mid.clone(), hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Converts an `f64` polynomial to exact rationals (coefficients are exact
/// binary fractions).
pub fn to_rational(p: &Poly<f64>) -> Poly<BigRational> {
    Poly::new(p.coeffs().iter().map(|c| <BigRational as Scalar>::from_float(*c)).collect())
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_from_i64(n: i64) -> BigRational {
    BigRational::from_i64(n).expect("i64 fits")
}
