//! Plane vector helpers on `[f64; 2]`.

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of `a × b`; positive when `b` is counterclockwise from `a`.
#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Twice the signed area of a closed polygon (shoelace).
pub fn signed_area2(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| cross(vertices[i], vertices[(i + 1) % n]))
        .sum()
}

/// Area centroid of a simple polygon. Falls back to the vertex mean when the
/// area vanishes.
pub fn area_centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let a2 = signed_area2(vertices);
    if a2.abs() <= f64::MIN_POSITIVE || n < 3 {
        let s = vertices.iter().fold([0.0, 0.0], |acc, v| add(acc, *v));
        return scale(s, 1.0 / n.max(1) as f64);
    }
    // Translate to the first vertex to limit cancellation.
    let o = vertices[0];
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = sub(vertices[i], o);
        let q = sub(vertices[(i + 1) % n], o);
        let c = cross(p, q);
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    [o[0] + cx / (3.0 * a2), o[1] + cy / (3.0 * a2)]
}

pub fn diameter(vertices: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            d = d.max(dist(*a, *b));
        }
    }
    d
}
