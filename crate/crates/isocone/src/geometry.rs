//! Sets inside the cone and their weighted functionals.
//!
//! A [`StarSet`] is `{t theta : 0 <= t < r(theta)}` sampled on an equally
//! spaced angular grid; volumes and perimeters use the polar formulas with
//! trapezoid quadrature. A [`GridSet`] is a cell bitmask used for
//! connectivity and cross-checks.

use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::vec2::{self, V2};
use crate::weight::HomWeight;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Default angular resolution.
pub const DEFAULT_N_THETA: usize = 4096;
/// Default radius cap for star sets.
pub const DEFAULT_RADIUS_CAP: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StarSet {
    pub cone: Cone,
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub radius_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub w_volume: f64,
    pub w_perimeter: f64,
    pub deficit: f64,
    pub r_eq: f64,
}

impl StarSet {
    pub fn new(cone: Cone, r: Vec<f64>, radius_cap: f64) -> Result<Self> {
        let min_n = if cone.is_plane() { 8 } else { 3 };
        if r.len() < min_n {
            return Err(Error::InvalidSet(format!("need at least {min_n} radial samples")));
        }
        if let Some(bad) = r.iter().find(|x| !(**x > 0.0 && **x <= radius_cap)) {
            return Err(Error::InvalidSet(format!("radius {bad} outside (0, {radius_cap}]")));
        }
        let theta = cone.angle_grid(r.len());
        Ok(StarSet { cone, theta, r, radius_cap })
    }

    pub fn from_fn(cone: Cone, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let r = cone.angle_grid(n).into_iter().map(f).collect();
        Self::new(cone, r, DEFAULT_RADIUS_CAP)
    }

    /// `B_rho ∩ Σ`.
    pub fn ball(cone: Cone, n: usize, rho: f64) -> Result<Self> {
        Self::from_fn(cone, n, |_| rho)
    }

    /// `B_rho(x0) ∩ Σ` for a centre with `|x0| < rho`.
    pub fn translated_ball(cone: Cone, n: usize, x0: V2, rho: f64) -> Result<Self> {
        if vec2::norm(x0) >= rho {
            return Err(Error::UnsupportedTranslation(vec2::norm(x0), rho));
        }
        Self::from_fn(cone, n, |t| ray_ball(vec2::unit(t), x0, rho).1)
    }

    /// `E_eps = {r < 1 + eps eta}` with `eta` the weighted-mean-zero
    /// projection of `cos(m theta_hat)`.
    pub fn perturbed_ball(w: &HomWeight, n: usize, eps: f64, m: u32) -> Result<Self> {
        let eta = eta_tilde(w, n, m)?;
        let r = eta.iter().map(|e| 1.0 + eps * e).collect();
        Self::new(w.cone, r, DEFAULT_RADIUS_CAP)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn quad_weights(&self) -> Vec<f64> {
        self.cone.angle_weights(self.n())
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let r = self.r.iter().map(|x| x * lambda).collect();
        Self::new(self.cone, r, self.radius_cap * lambda.max(1.0))
    }

    fn step(&self) -> f64 {
        if self.cone.is_plane() {
            self.cone.opening() / self.n() as f64
        } else {
            self.cone.opening() / (self.n() - 1) as f64
        }
    }

    /// `dr/dtheta` by central differences, second-order one-sided at the rays.
    pub fn dr(&self) -> Vec<f64> {
        let n = self.n();
        let h = self.step();
        let r = &self.r;
        (0..n)
            .map(|j| {
                if self.cone.is_plane() {
                    (r[(j + 1) % n] - r[(j + n - 1) % n]) / (2.0 * h)
                } else if j == 0 {
                    (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h)
                } else if j == n - 1 {
                    (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h)
                } else {
                    (r[j + 1] - r[j - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// Boundary point on the ray of grid index `j`.
    pub fn boundary_point(&self, j: usize) -> V2 {
        vec2::scale(vec2::unit(self.theta[j]), self.r[j])
    }

    /// Radius at an arbitrary angle of the cone, linear in angle.
    pub fn radius_at(&self, theta: f64) -> f64 {
        let n = self.n();
        let u = (theta - self.cone.angle_lo) / self.step();
        if self.cone.is_plane() {
            let u = u.rem_euclid(n as f64);
            let i = (u.floor() as usize).min(n - 1);
            let f = u - i as f64;
            self.r[i] * (1.0 - f) + self.r[(i + 1) % n] * f
        } else {
            let u = u.clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n - 2);
            let f = u - i as f64;
            self.r[i] * (1.0 - f) + self.r[i + 1] * f
        }
    }

    /// Membership of the closed cone and the open radial region.
    pub fn contains(&self, p: V2) -> bool {
        if !self.cone.contains(p, 1e-12) {
            return false;
        }
        let rho = vec2::norm(p);
        rho == 0.0 || rho < self.radius_at(self.cone.angle_of(p))
    }

    /// Weight profile on the angle grid.
    pub fn profile(&self, w: &HomWeight) -> Vec<f64> {
        self.theta.iter().map(|&t| w.profile(t)).collect()
    }

    /// The star set as a closed polygon through its boundary samples, with
    /// the origin prepended for proper cones.
    pub fn boundary_polygon(&self) -> Vec<V2> {
        let mut poly = Vec::with_capacity(self.n() + 1);
        if !self.cone.is_plane() {
            poly.push([0.0, 0.0]);
        }
        poly.extend((0..self.n()).map(|j| self.boundary_point(j)));
        poly
    }
}

/// Weighted-mean-zero projection of `cos(m theta_hat)` on the grid of `n`
/// angles, using the volume quadrature.
pub fn eta_tilde(w: &HomWeight, n: usize, m: u32) -> Result<Vec<f64>> {
    let th = w.cone.angle_grid(n);
    let q = w.cone.angle_weights(n);
    let raw: Vec<f64> = th.iter().map(|&t| (m as f64 * w.cone.theta_hat(t)).cos()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        let p = w.profile(th[j]);
        num += q[j] * p * raw[j];
        den += q[j] * p;
    }
    let mean = num / den;
    let eta: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    if eta.iter().all(|x| x.abs() < 1e-12) {
        return Err(Error::InvalidArgument("projected eta vanishes identically".into()));
    }
    Ok(eta)
}

/// `(1/D) sum_j q_j r_j^D w(theta_j)`.
pub fn weighted_volume(set: &StarSet, w: &HomWeight) -> f64 {
    let q = set.quad_weights();
    let p = set.profile(w);
    (0..set.n()).map(|j| q[j] * set.r[j].powf(w.d) * p[j]).sum::<f64>() / w.d
}

/// `sum_j q_j r_j^{D-1} sqrt(1 + (r'/r)^2) w(theta_j)`.
pub fn weighted_perimeter(set: &StarSet, w: &HomWeight) -> f64 {
    boundary_weighted_integral(set, w, |_| 1.0)
}

/// `∫_{∂E ∩ Σ} g w dH^1` over the polar boundary parametrisation.
pub fn boundary_weighted_integral(set: &StarSet, w: &HomWeight, g: impl Fn(V2) -> f64) -> f64 {
    let q = set.quad_weights();
    let p = set.profile(w);
    let dr = set.dr();
    (0..set.n())
        .map(|j| {
            let r = set.r[j];
            let s = dr[j] / r;
            q[j] * g(set.boundary_point(j)) * r.powf(w.d - 1.0) * (1.0 + s * s).sqrt() * p[j]
        })
        .sum()
}

/// `w(B_1 ∩ Σ)` with the set's own quadrature, so that balls have zero
/// deficit up to rounding.
pub fn grid_unit_ball_mass(set: &StarSet, w: &HomWeight) -> f64 {
    let q = set.quad_weights();
    set.theta.iter().zip(&q).map(|(t, q)| q * w.profile(*t)).sum::<f64>() / w.d
}

pub fn deficit(set: &StarSet, w: &HomWeight) -> Result<MeasureReport> {
    let vol = weighted_volume(set, w);
    if !(vol > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let per = weighted_perimeter(set, w);
    let m = grid_unit_ball_mass(set, w);
    let c_star = w.d * m.powf(1.0 / w.d);
    Ok(MeasureReport {
        w_volume: vol,
        w_perimeter: per,
        deficit: per / (c_star * vol.powf((w.d - 1.0) / w.d)) - 1.0,
        r_eq: (vol / m).powf(1.0 / w.d),
    })
}

/// Largest relative change of (volume, perimeter) and absolute change of
/// the deficit when the resolution of `r(theta)` is doubled.
pub fn resolution_self_check(w: &HomWeight, n: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    let a = StarSet::from_fn(w.cone, n, &f)?;
    let b = StarSet::from_fn(w.cone, 2 * n - 1, &f)?;
    let (ra, rb) = (deficit(&a, w)?, deficit(&b, w)?);
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
    Ok(rel(ra.w_volume, rb.w_volume)
        .max(rel(ra.w_perimeter, rb.w_perimeter))
        .max((ra.deficit - rb.deficit).abs()))
}

/// Intersection of the ray `{t u : t >= 0}` with the open ball `B_rho(x0)`
/// as a parameter interval `(t_lo, t_hi)`; empty intervals have `t_hi <= t_lo`.
pub fn ray_ball(u: V2, x0: V2, rho: f64) -> (f64, f64) {
    let b = vec2::dot(u, x0);
    let disc = b * b - (vec2::dot(x0, x0) - rho * rho);
    if disc < 0.0 {
        return (0.0, 0.0);
    }
    let s = disc.sqrt();
    ((b - s).max(0.0), (b + s).max(0.0))
}

/// `∫ t^{D-1}` over `[0, r] Δ [a, b]`, as `(r^D + |[a,b]| - 2 |[0,r] ∩ [a,b]|) / D`.
fn ray_symdiff(r: f64, a: f64, b: f64, d: f64) -> f64 {
    let f = |t: f64| t.powf(d);
    let ball = if b > a { f(b) - f(a) } else { 0.0 };
    let lo = a;
    let hi = b.min(r);
    let both = if hi > lo { f(hi) - f(lo) } else { 0.0 };
    (f(r) + ball - 2.0 * both) / d
}

/// `w(E Δ (B_rho(x0) ∩ Σ))` for any centre.
pub fn symdiff_general(set: &StarSet, w: &HomWeight, x0: V2, rho: f64) -> f64 {
    let q = set.quad_weights();
    (0..set.n())
        .map(|j| {
            let u = vec2::unit(set.theta[j]);
            let (a, b) = ray_ball(u, x0, rho);
            q[j] * w.profile(set.theta[j]) * ray_symdiff(set.r[j], a, b, w.d)
        })
        .sum()
}

/// `w(E Δ (B_rho(x0) ∩ Σ))` for a centre with `|x0| < rho`.
pub fn symdiff_with_ball(set: &StarSet, w: &HomWeight, x0: V2, rho: f64) -> Result<f64> {
    if vec2::norm(x0) >= rho {
        return Err(Error::UnsupportedTranslation(vec2::norm(x0), rho));
    }
    Ok(symdiff_general(set, w, x0, rho))
}

/// Coarse scan points and golden-section tolerance (relative to `r_eq`) of
/// the translation search along the line subspace.
pub const ASYM_SCAN: usize = 80;
pub const ASYM_TOL: f64 = 1e-6;

/// Weighted asymmetry and the best centre, translations restricted to the
/// line subspace of the cone.
pub fn asymmetry(set: &StarSet, w: &HomWeight) -> Result<(f64, V2)> {
    let rep = deficit(set, w)?;
    let (vol, r_eq) = (rep.w_volume, rep.r_eq);
    match set.cone.k() {
        0 => Ok((symdiff_general(set, w, [0.0, 0.0], r_eq) / vol, [0.0, 0.0])),
        1 => {
            let e = set.cone.dir_lo();
            let f = |t: f64| symdiff_general(set, w, vec2::scale(e, t), r_eq) / vol;
            let span = 2.0 * r_eq;
            let grid: Vec<f64> =
                (0..=ASYM_SCAN).map(|i| -span + 2.0 * span * i as f64 / ASYM_SCAN as f64).collect();
            let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
            let ib = (0..vals.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
            let mut a = grid[ib.saturating_sub(1)];
            let mut b = grid[(ib + 1).min(ASYM_SCAN)];
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (f(c), f(d));
            while b - a > ASYM_TOL * r_eq {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = f(d);
                }
            }
            let mut best = (vals[ib], grid[ib]);
            for (v, t) in [(fc, c), (fd, d)] {
                if v < best.0 {
                    best = (v, t);
                }
            }
            Ok((best.0, vec2::scale(e, best.1)))
        }
        _ => Err(Error::InvalidArgument("asymmetry needs a proper cone".into())),
    }
}

/// Anisotropic perimeter `∫_{∂E} h_K(nu) dH^1` of a star set (unweighted),
/// `h_K` the support function of the slope body.
pub fn anisotropic_perimeter(set: &StarSet, support: impl Fn(V2) -> f64) -> f64 {
    let q = set.quad_weights();
    let dr = set.dr();
    (0..set.n())
        .map(|j| {
            let u = vec2::unit(set.theta[j]);
            // the rotated tangent r u - r' u_perp has length |dP/dtheta|
            let nu = vec2::sub(vec2::scale(u, set.r[j]), vec2::scale(vec2::perp(u), dr[j]));
            q[j] * support(nu)
        })
        .sum()
}

/// Shoelace area of a counterclockwise polygon.
pub fn polygon_area(poly: &[V2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| vec2::cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

/// `sum_edges |e| h_K(nu_e)` for a counterclockwise polygon.
pub fn polygon_anisotropic_perimeter(poly: &[V2], support: impl Fn(V2) -> f64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let e = vec2::sub(poly[(i + 1) % n], poly[i]);
            // outward normal scaled by the edge length
            support([e[1], -e[0]])
        })
        .sum()
}

/// Random smooth star set: `r = exp(sum_m a_m cos(m theta_hat) + b_m sin(m theta_hat))`
/// with decaying random coefficients, `m <= 6`.
pub fn random_star_set<R: Rng>(cone: Cone, n: usize, rng: &mut R) -> Result<StarSet> {
    let modes = 6;
    let mut a = [0.0; 7];
    let mut b = [0.0; 7];
    let amp = rng.random_range(0.05..0.6);
    for m in 0..=modes {
        let s = amp / (1.0 + m as f64);
        a[m] = rng.random_range(-s..s);
        b[m] = rng.random_range(-s..s);
    }
    let scale = rng.random_range(0.3..3.0f64).ln();
    StarSet::from_fn(cone, n, |t| {
        let th = cone.theta_hat(t);
        let mut e = scale;
        for m in 0..=modes {
            let mf = m as f64;
            e += a[m] * (mf * th).cos() + b[m] * (mf * th).sin();
        }
        e.exp()
    })
}

/// A rasterised set: cells of size `h` with lower-left corner `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub cone: Cone,
    pub origin: V2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<bool>,
}

impl GridSet {
    /// Cells whose centres lie in the closed cone and satisfy `inside`.
    pub fn rasterize(
        cone: Cone,
        origin: V2,
        h: f64,
        nx: usize,
        ny: usize,
        inside: impl Fn(V2) -> bool,
    ) -> Result<Self> {
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = [origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h];
                mask[j * nx + i] = cone.contains(c, 0.0) && inside(c);
            }
        }
        Self::from_mask(cone, origin, h, nx, ny, mask)
    }

    pub fn from_mask(cone: Cone, origin: V2, h: f64, nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        let g = GridSet { cone, origin, h, nx, ny, mask };
        if g.mask.len() != nx * ny || !g.mask.iter().any(|m| *m) {
            return Err(Error::InvalidSet("grid set is empty or malformed".into()));
        }
        for idx in g.cells() {
            if !cone.contains(g.center(idx), 1e-12) {
                return Err(Error::InvalidSet("occupied cell outside the cone".into()));
            }
        }
        Ok(g)
    }

    /// Rasterisation of a star set over its bounding box.
    pub fn from_star(set: &StarSet, h: f64) -> Result<Self> {
        let pts = set.boundary_polygon();
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in pts.iter().chain(std::iter::once(&[0.0, 0.0])) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 1;
        let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 1;
        Self::rasterize(set.cone, lo, h, nx, ny, |p| set.contains(p))
    }

    pub fn center(&self, idx: usize) -> V2 {
        let (i, j) = (idx % self.nx, idx / self.nx);
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|&i| self.mask[i])
    }

    /// 4-neighbours of a cell inside the grid bounds.
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (nx, ny) = (self.nx, self.ny);
        let (i, j) = (idx % nx, idx / nx);
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < nx {
            out[1] = idx + 1;
        }
        if j > 0 {
            out[2] = idx - nx;
        }
        if j + 1 < ny {
            out[3] = idx + nx;
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    /// Midpoint rule for `w(E)`.
    pub fn midpoint_volume(&self, w: &HomWeight) -> f64 {
        self.h * self.h * self.cells().map(|c| w.eval_unchecked(self.center(c))).sum::<f64>()
    }
}

/// True iff the occupied cells form one 4-connected component.
pub fn is_indecomposable(set: &GridSet) -> bool {
    let Some(start) = set.cells().next() else { return false };
    let mut seen = vec![false; set.mask.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1usize;
    while let Some(c) = queue.pop_front() {
        for nb in set.neighbours(c) {
            if set.mask[nb] && !seen[nb] {
                seen[nb] = true;
                count += 1;
                queue.push_back(nb);
            }
        }
    }
    count == set.cells().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn xy() -> HomWeight {
        HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap()
    }

    #[test]
    fn ball_volumes() {
        let w = xy();
        let b = StarSet::ball(w.cone, 4096, 1.0).unwrap();
        assert!((weighted_volume(&b, &w) - 0.125).abs() < 1e-7);
        let wx = HomWeight::monomial(Cone::quadrant(), [1.0, 0.0]).unwrap();
        assert!((weighted_volume(&b, &wx) - 1.0 / 3.0).abs() < 1e-7);
        let b2 = StarSet::ball(w.cone, 4096, 2.0).unwrap();
        let ratio = weighted_volume(&b2, &w) / weighted_volume(&b, &w);
        assert!((ratio - 16.0).abs() < 1e-12);
    }

    #[test]
    fn ball_perimeters() {
        let w = xy();
        let b = StarSet::ball(w.cone, 4096, 1.0).unwrap();
        assert!((weighted_perimeter(&b, &w) - 0.5).abs() < 1e-7);
        let h = HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap();
        let b = StarSet::ball(h.cone, 4096, 1.0).unwrap();
        assert!((weighted_perimeter(&b, &h) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn ball_has_zero_deficit_and_asymmetry() {
        let w = xy();
        for rho in [1.0, 3.0] {
            let b = StarSet::ball(w.cone, 4096, rho).unwrap();
            let rep = deficit(&b, &w).unwrap();
            assert!(rep.deficit.abs() < 1e-9);
            assert!((rep.r_eq - rho).abs() < 1e-12);
            let (a, x0) = asymmetry(&b, &w).unwrap();
            assert!(a.abs() < 1e-12 && x0 == [0.0, 0.0]);
        }
    }

    #[test]
    fn translated_half_plane_ball_is_found() {
        let h = HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap();
        let e = StarSet::translated_ball(h.cone, 4096, [0.3, 0.0], 1.0).unwrap();
        let (a, x0) = asymmetry(&e, &h).unwrap();
        assert!(a <= 2e-3, "A = {a}");
        assert!(vec2::dist(x0, [0.3, 0.0]) <= 5e-3);
    }

    #[test]
    fn nested_ball_symdiff() {
        let w = xy();
        let b = StarSet::ball(w.cone, 4096, 1.0).unwrap();
        assert_eq!(symdiff_with_ball(&b, &w, [0.0, 0.0], 1.0).unwrap(), 0.0);
        let s = symdiff_with_ball(&b, &w, [0.0, 0.0], 1.1).unwrap();
        let m = grid_unit_ball_mass(&b, &w);
        assert!((s - (1.1f64.powi(4) - 1.0) * m).abs() < 1e-13);
        assert!(symdiff_with_ball(&b, &w, [1.0, 0.5], 1.0).is_err());
    }

    #[test]
    fn boundary_integral_consistency() {
        let w = xy();
        let b = StarSet::ball(w.cone, 1024, 1.0).unwrap();
        assert_eq!(boundary_weighted_integral(&b, &w, |_| 1.0), weighted_perimeter(&b, &w));
        let g = boundary_weighted_integral(&b, &w, |p| (vec2::norm(p) - 1.0).abs());
        assert!(g < 1e-14);
    }

    #[test]
    fn eta_projection_is_weighted_mean_zero() {
        let w = xy();
        let eta = eta_tilde(&w, 513, 4).unwrap();
        let th = w.cone.angle_grid(513);
        let q = w.cone.angle_weights(513);
        let s: f64 = (0..513).map(|j| q[j] * w.profile(th[j]) * eta[j]).sum();
        assert!(s.abs() < 1e-15);
        assert!(eta_tilde(&w, 513, 0).is_err());
    }

    #[test]
    fn indecomposability() {
        let q = Cone::quadrant();
        let ball = StarSet::ball(q, 512, 1.0).unwrap();
        assert!(is_indecomposable(&GridSet::from_star(&ball, 0.05).unwrap()));
        let two = |p: V2| vec2::dist(p, [0.5, 0.5]) < 0.3 || vec2::dist(p, [1.5, 0.5]) < 0.3;
        let g = GridSet::rasterize(q, [0.0, 0.0], 0.05, 40, 20, two).unwrap();
        assert!(!is_indecomposable(&g));
        let piped = |p: V2| two(p) || (p[1] > 0.5 && p[1] < 0.55 && p[0] > 0.5 && p[0] < 1.5);
        let g = GridSet::rasterize(q, [0.0, 0.0], 0.05, 40, 20, piped).unwrap();
        assert!(is_indecomposable(&g));
        let _ = PI;
    }
}
