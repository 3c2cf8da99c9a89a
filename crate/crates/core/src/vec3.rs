//! Small fixed-size vector helpers for ℝ³.

pub type Vec3 = [f64; 3];

pub const ZERO: Vec3 = [0.0; 3];
pub const E1: Vec3 = [1.0, 0.0, 0.0];
pub const E2: Vec3 = [0.0, 1.0, 0.0];
pub const E3: Vec3 = [0.0, 0.0, 1.0];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(k: f64, a: Vec3) -> Vec3 {
    [k * a[0], k * a[1], k * a[2]]
}

#[inline]
pub fn neg(a: Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Unit vector along `a`; zero stays zero.
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n == 0.0 {
        a
    } else {
        scale(1.0 / n, a)
    }
}

/// Component of `a` orthogonal to the unit vector `n`.
pub fn reject(a: Vec3, n: Vec3) -> Vec3 {
    sub(a, scale(dot(a, n), n))
}

/// Some unit vector orthogonal to `a` (which must be nonzero).
pub fn any_orthogonal(a: Vec3) -> Vec3 {
    let k = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
        E1
    } else if a[1].abs() <= a[2].abs() {
        E2
    } else {
        E3
    };
    normalize(cross(a, k))
}

pub fn max_abs_diff(a: Vec3, b: Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}
