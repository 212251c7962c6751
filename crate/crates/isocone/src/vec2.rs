//! Minimal planar vector helpers on `[f64; 2]`.

pub type V2 = [f64; 2];
pub type M2 = [[f64; 2]; 2];

#[inline]
pub fn add(a: V2, b: V2) -> V2 {
    [a[0] + b[0], a[1] + b[1]]
}
#[inline]
pub fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}
#[inline]
pub fn scale(a: V2, t: f64) -> V2 {
    [a[0] * t, a[1] * t]
}
#[inline]
pub fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
pub fn cross(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
#[inline]
pub fn norm(a: V2) -> f64 {
    a[0].hypot(a[1])
}
#[inline]
pub fn dist(a: V2, b: V2) -> f64 {
    norm(sub(a, b))
}
/// Counterclockwise rotation by a right angle.
#[inline]
pub fn perp(a: V2) -> V2 {
    [-a[1], a[0]]
}

/// Unit vector at angle `t`, exact at integer multiples of a right angle so
/// that points on the coordinate axes land exactly on them.
pub fn unit(t: f64) -> V2 {
    let q = t / std::f64::consts::FRAC_PI_2;
    let k = q.round();
    if (q - k).abs() < 1e-15 {
        match (k as i64).rem_euclid(4) {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        }
    } else {
        [t.cos(), t.sin()]
    }
}

/// Symmetric 2x2 eigenvalues in ascending order.
pub fn sym_eigenvalues(m: M2) -> (f64, f64) {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Unit eigenvector of a symmetric 2x2 matrix for the smaller eigenvalue.
pub fn sym_min_eigvec(m: M2) -> V2 {
    let (l0, _) = sym_eigenvalues(m);
    let a = m[0][0] - l0;
    let d = m[1][1] - l0;
    let b = 0.5 * (m[0][1] + m[1][0]);
    // rows of (M - l0 I) are orthogonal to the eigenvector
    let v = if a.abs() + b.abs() >= d.abs() + b.abs() {
        [-b, a]
    } else {
        [d, -b]
    };
    let n = norm(v);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        scale(v, 1.0 / n)
    }
}
