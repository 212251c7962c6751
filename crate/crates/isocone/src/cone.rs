//! Planar convex cones as angular sectors, and the splitting of the plane
//! into line directions, weight-constancy directions and the rest.

use crate::error::{Error, Result};
use crate::vec2::{self, V2};
use crate::weight::HomWeight;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance used to recognise an opening of exactly a half turn.
const HALF_PLANE_TOL: f64 = 1e-12;

/// A closed angular sector `{t (cos a, sin a) : t >= 0, lo <= a <= hi}`.
///
/// Proper sectors and the half-plane are the convex cones of the plane.
/// The whole plane is also representable; it only serves the unweighted
/// anisotropic problems, which do not live in a cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub angle_lo: f64,
    pub angle_hi: f64,
}

impl Cone {
    pub fn new(angle_lo: f64, angle_hi: f64) -> Result<Self> {
        if !angle_lo.is_finite() || !angle_hi.is_finite() {
            return Err(Error::InvalidCone("non-finite angle".into()));
        }
        let opening = angle_hi - angle_lo;
        if opening <= 0.0 {
            return Err(Error::InvalidCone(format!("opening {opening} is not positive")));
        }
        if (opening - PI).abs() <= HALF_PLANE_TOL {
            return Ok(Cone { angle_lo, angle_hi: angle_lo + PI });
        }
        if (opening - 2.0 * PI).abs() <= HALF_PLANE_TOL {
            return Ok(Cone::plane_from(angle_lo));
        }
        if opening > PI {
            return Err(Error::InvalidCone(format!(
                "opening {opening} exceeds a half turn, the sector is not convex"
            )));
        }
        Ok(Cone { angle_lo, angle_hi })
    }

    /// The first quadrant `{x >= 0, y >= 0}`.
    pub fn quadrant() -> Self {
        Cone { angle_lo: 0.0, angle_hi: PI / 2.0 }
    }

    /// The upper half-plane `{y >= 0}`.
    pub fn half_plane() -> Self {
        Cone { angle_lo: 0.0, angle_hi: PI }
    }

    /// The whole plane (anisotropic mode only).
    pub fn plane() -> Self {
        Cone::plane_from(0.0)
    }

    fn plane_from(lo: f64) -> Self {
        Cone { angle_lo: lo, angle_hi: lo + 2.0 * PI }
    }

    pub fn opening(&self) -> f64 {
        self.angle_hi - self.angle_lo
    }

    pub fn is_plane(&self) -> bool {
        self.opening() > 1.5 * PI
    }

    pub fn is_half_plane(&self) -> bool {
        (self.opening() - PI).abs() <= HALF_PLANE_TOL
    }

    /// Number of independent line directions contained in the cone.
    pub fn k(&self) -> usize {
        if self.is_plane() {
            2
        } else if self.is_half_plane() {
            1
        } else {
            0
        }
    }

    pub fn dir_lo(&self) -> V2 {
        vec2::unit(self.angle_lo)
    }

    pub fn dir_hi(&self) -> V2 {
        vec2::unit(self.angle_hi)
    }

    /// Outward unit normals of the two boundary rays.
    pub fn outward_normals(&self) -> (V2, V2) {
        let lo = vec2::perp(self.dir_lo());
        let hi = vec2::perp(self.dir_hi());
        ([-lo[0], -lo[1]], hi)
    }

    /// Angle of `p` normalised into `[lo, lo + 2 pi)`.
    pub fn angle_of(&self, p: V2) -> f64 {
        let mut a = p[1].atan2(p[0]);
        while a < self.angle_lo {
            a += 2.0 * PI;
        }
        while a >= self.angle_lo + 2.0 * PI {
            a -= 2.0 * PI;
        }
        a
    }

    /// Closed-cone membership with a tolerance relative to `|p|`.
    pub fn contains(&self, p: V2, tol: f64) -> bool {
        if self.is_plane() {
            return true;
        }
        let r = vec2::norm(p);
        if r == 0.0 {
            return true;
        }
        let slack = tol * r.max(1.0);
        let c_lo = vec2::cross(self.dir_lo(), p);
        let c_hi = vec2::cross(p, self.dir_hi());
        if self.is_half_plane() {
            return c_lo >= -slack;
        }
        c_lo >= -slack && c_hi >= -slack
    }

    /// Euclidean distance from a point of the cone to its boundary.
    pub fn dist_to_boundary(&self, p: V2) -> f64 {
        if self.is_plane() {
            return f64::INFINITY;
        }
        let ray = |d: V2| {
            if vec2::dot(p, d) >= 0.0 {
                vec2::cross(d, p).abs()
            } else {
                vec2::norm(p)
            }
        };
        ray(self.dir_lo()).min(ray(self.dir_hi()))
    }

    /// Position along the arc rescaled to `[0, pi]`.
    pub fn theta_hat(&self, theta: f64) -> f64 {
        PI * (theta - self.angle_lo) / self.opening()
    }

    /// `n` equally spaced angles covering the closed arc (the periodic
    /// plane omits the duplicated endpoint).
    pub fn angle_grid(&self, n: usize) -> Vec<f64> {
        if self.is_plane() {
            let h = self.opening() / n as f64;
            (0..n).map(|j| self.angle_lo + h * j as f64).collect()
        } else {
            let h = self.opening() / (n - 1) as f64;
            (0..n)
                .map(|j| if j + 1 == n { self.angle_hi } else { self.angle_lo + h * j as f64 })
                .collect()
        }
    }

    /// Quadrature weights matching [`Cone::angle_grid`].
    pub fn angle_weights(&self, n: usize) -> Vec<f64> {
        if self.is_plane() {
            vec![self.opening() / n as f64; n]
        } else {
            crate::quad::trapezoid_weights(n, self.angle_lo, self.angle_hi)
        }
    }
}

/// Orthonormal bases of the line subspace, the constancy subspace and
/// their orthogonal complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspaces {
    pub l: Vec<V2>,
    pub c: Vec<V2>,
    pub e: Vec<V2>,
}

/// Relative tolerance of the sampled constancy test.
pub const CONSTANCY_TOL: f64 = 1e-10;

/// Splits the plane into line directions of the cone, directions orthogonal
/// to them along which the weight is constant, and the remainder.
pub fn decompose_subspaces(cone: &Cone, weight: &HomWeight) -> Result<Subspaces> {
    weight.check_homogeneity()?;
    let l: Vec<V2> = match cone.k() {
        0 => vec![],
        1 => vec![cone.dir_lo()],
        _ => return Err(Error::InvalidCone("the whole plane has no subspace split".into())),
    };
    let candidate = if let Some(&d) = l.first() {
        vec2::perp(d)
    } else {
        // the gradients of a weight constant along xi are all orthogonal to xi
        let mut g = [[0.0; 2]; 2];
        for x in interior_samples(cone) {
            let (v, grad) = weight.eval_grad_unchecked(x);
            if v <= 0.0 || !grad[0].is_finite() || !grad[1].is_finite() {
                continue;
            }
            let s = 1.0 / (v * v);
            for a in 0..2 {
                for b in 0..2 {
                    g[a][b] += grad[a] * grad[b] * s;
                }
            }
        }
        vec2::sym_min_eigvec(g)
    };
    let candidate = canonical_sign(candidate);
    let other = canonical_sign(vec2::perp(candidate));
    if is_constancy_direction(cone, weight, candidate) {
        Ok(Subspaces { l, c: vec![candidate], e: if cone.k() == 1 { vec![] } else { vec![other] } })
    } else if cone.k() == 1 {
        Ok(Subspaces { l, c: vec![], e: vec![candidate] })
    } else {
        Ok(Subspaces { l, c: vec![], e: vec![[1.0, 0.0], [0.0, 1.0]] })
    }
}

/// Flips a unit vector so that its largest component is positive.
fn canonical_sign(v: V2) -> V2 {
    let big = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
    if big < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Sample points strictly inside the cone and the unit ball.
pub(crate) fn interior_samples(cone: &Cone) -> Vec<V2> {
    let mut pts = Vec::new();
    let n_ang = 24;
    for i in 1..n_ang {
        let t = cone.angle_lo + cone.opening() * i as f64 / n_ang as f64;
        for &r in &[0.15, 0.4, 0.7, 1.0] {
            pts.push(vec2::scale(vec2::unit(t), r));
        }
    }
    pts
}

/// Sampled test of `w(x + t xi) = w(x)` at admissible pairs.
pub fn is_constancy_direction(cone: &Cone, weight: &HomWeight, xi: V2) -> bool {
    let mut tested = 0usize;
    for x in interior_samples(cone) {
        let wx = weight.eval_unchecked(x);
        for &t in &[-0.5, -0.2, -0.05, 0.05, 0.2, 0.5] {
            let y = vec2::add(x, vec2::scale(xi, t));
            if !cone.contains(y, 0.0) {
                continue;
            }
            tested += 1;
            let wy = weight.eval_unchecked(y);
            if (wy - wx).abs() > CONSTANCY_TOL * wx.abs().max(1.0) {
                return false;
            }
        }
    }
    tested > 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::HomWeight;

    #[test]
    fn half_plane_detection_and_k() {
        let c = Cone::new(0.0, PI).unwrap();
        assert!(c.is_half_plane());
        assert_eq!(c.k(), 1);
        assert_eq!(Cone::quadrant().k(), 0);
        assert!(Cone::new(0.0, 3.5).is_err());
        assert!(Cone::new(1.0, 1.0).is_err());
    }

    #[test]
    fn membership_and_boundary_distance() {
        let q = Cone::quadrant();
        assert!(q.contains([1.0, 0.0], 0.0));
        assert!(q.contains([0.0, 2.0], 0.0));
        assert!(!q.contains([-0.1, 1.0], 1e-12));
        assert!((q.dist_to_boundary([0.3, 0.5]) - 0.3).abs() < 1e-15);
        let h = Cone::half_plane();
        assert!(h.contains([-5.0, 0.0], 0.0));
        assert!(!h.contains([0.0, -1e-3], 1e-12));
    }

    #[test]
    fn decomposition_examples() {
        let q = Cone::quadrant();
        let xy = HomWeight::monomial(q, [1.0, 1.0]).unwrap();
        let s = decompose_subspaces(&q, &xy).unwrap();
        assert!(s.l.is_empty() && s.c.is_empty());
        assert_eq!(s.e, vec![[1.0, 0.0], [0.0, 1.0]]);

        let x = HomWeight::monomial(q, [1.0, 0.0]).unwrap();
        let s = decompose_subspaces(&q, &x).unwrap();
        assert!(s.l.is_empty());
        assert_eq!(s.c.len(), 1);
        assert!((s.c[0][0]).abs() < 1e-12 && (s.c[0][1] - 1.0).abs() < 1e-12);
        assert!((s.e[0][0] - 1.0).abs() < 1e-12 && s.e[0][1].abs() < 1e-12);

        let h = Cone::half_plane();
        let y = HomWeight::monomial(h, [0.0, 1.0]).unwrap();
        let s = decompose_subspaces(&h, &y).unwrap();
        assert_eq!(s.l, vec![[1.0, 0.0]]);
        assert!(s.c.is_empty());
        assert_eq!(s.e.len(), 1);
        assert!((s.e[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bases_are_orthonormal() {
        for (cone, a) in [
            (Cone::quadrant(), [1.0, 1.0]),
            (Cone::quadrant(), [1.0, 0.0]),
            (Cone::quadrant(), [0.0, 2.0]),
            (Cone::half_plane(), [0.0, 1.0]),
        ] {
            let w = HomWeight::monomial(cone, a).unwrap();
            let s = decompose_subspaces(&cone, &w).unwrap();
            let all: Vec<V2> = s.l.iter().chain(&s.c).chain(&s.e).copied().collect();
            assert_eq!(all.len(), 2);
            assert!((vec2::norm(all[0]) - 1.0).abs() < 1e-12);
            assert!((vec2::norm(all[1]) - 1.0).abs() < 1e-12);
            assert!(vec2::dot(all[0], all[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn inhomogeneous_weight_is_rejected() {
        let q = Cone::quadrant();
        let bad = HomWeight::custom(q, 1.0, |p| p[0] + p[1] * p[1]);
        assert!(matches!(decompose_subspaces(&q, &bad), Err(Error::Inhomogeneous(_))));
    }
}
