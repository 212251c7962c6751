use crate::cone::{decompose_subspaces, Cone};
use crate::error::{Error, Result};
use crate::geometry::{self, StarSet};
use crate::quad::gauss_legendre;
use crate::vec2::{self, V2};
use crate::weight::HomWeight;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlReport {
    /// `w(E Δ (B_1(x0) ∩ Σ))`.
    pub lhs: f64,
    /// `∫_{∂E ∩ Σ} ||x - x0| - 1| w`.
    pub rhs: f64,
    /// `None` when the right side vanishes.
    pub ratio: Option<f64>,
}

/// Symmetric difference with a translated unit ball against the boundary
/// distance integral, for sets holding at least half the mass of `B_{1/2}`.
pub fn translated_ball_control_check(set: &StarSet, w: &HomWeight, x0: V2) -> Result<ControlReport> {
    if vec2::norm(x0) > 0.2 {
        return Err(Error::InvalidArgument(format!("|x0| = {} exceeds 0.2", vec2::norm(x0))));
    }
    let q = set.quad_weights();
    let prof = set.profile(w);
    let inner: f64 = (0..set.n()).map(|j| q[j] * prof[j] * set.r[j].min(0.5).powf(w.d)).sum::<f64>() / w.d;
    let need = 0.5 * geometry::grid_unit_ball_mass(set, w) * 0.5f64.powf(w.d);
    if inner < need {
        return Err(Error::HypothesisFailure(format!("w(E ∩ B_1/2) = {inner} < {need}")));
    }
    let lhs = geometry::symdiff_with_ball(set, w, x0, 1.0)?;
    let rhs = geometry::boundary_weighted_integral(set, w, |x| (vec2::dist(x, x0) - 1.0).abs());
    Ok(ControlReport { lhs, rhs, ratio: (rhs > 0.0).then(|| lhs / rhs) })
}

/// Inward normals of the half-planes cutting out the cone.
fn inward_normals(cone: &Cone) -> Vec<V2> {
    if cone.is_plane() {
        return vec![];
    }
    let (a, b) = cone.outward_normals();
    if cone.is_half_plane() {
        vec![[-a[0], -a[1]]]
    } else {
        vec![[-a[0], -a[1]], [-b[0], -b[1]]]
    }
}

/// `w(B_1(xi) ∩ Σ)` in polar coordinates about `xi`. The angular integral
/// is split where the ray's clipping changes, so each piece is smooth.
fn shifted_ball_mass(w: &HomWeight, xi: V2) -> f64 {
    let normals = inward_normals(&w.cone);
    let mut breaks = vec![0.0, 2.0 * PI];
    let mut push = |a: f64| breaks.push(a.rem_euclid(2.0 * PI));
    for n in &normals {
        let d = vec2::perp(*n);
        push(d[1].atan2(d[0]));
        push((-d[1]).atan2(-d[0]));
        // rays from xi through the boundary line's unit-circle crossings
        let h = vec2::dot(*n, xi);
        let disc = 1.0 - h * h;
        if disc > 0.0 {
            for s in [-1.0, 1.0] {
                let p = vec2::add(vec2::scale(*n, -h), vec2::scale(d, s * disc.sqrt()));
                push(p[1].atan2(p[0]));
            }
        }
    }
    if !normals.is_empty() {
        push((-xi[1]).atan2(-xi[0]));
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let (gx, gw) = gauss_legendre(64);
    let (rx, rw) = gauss_legendre(12);
    let radial = |u: V2| {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for n in &normals {
            let (a, b) = (vec2::dot(*n, xi), vec2::dot(*n, u));
            if b > 0.0 {
                lo = lo.max(-a / b);
            } else if b < 0.0 {
                hi = hi.min(a / -b);
            } else if a < 0.0 {
                return 0.0;
            }
        }
        if hi <= lo {
            return 0.0;
        }
        let half = 0.5 * (hi - lo);
        rx.iter()
            .zip(&rw)
            .map(|(x, wt)| {
                let rho = lo + half * (1.0 + x);
                wt * rho * w.eval_unchecked(vec2::add(xi, vec2::scale(u, rho))).max(0.0)
            })
            .sum::<f64>()
            * half
    };
    breaks
        .windows(2)
        .map(|p| {
            let half = 0.5 * (p[1] - p[0]);
            gx.iter().zip(&gw).map(|(x, wt)| wt * radial(vec2::unit(p[0] + half * (1.0 + x)))).sum::<f64>() * half
        })
        .sum()
}

/// `w(B_1(xi) ∩ Σ) - w(B_1 ∩ Σ)`, both by the same quadrature.
pub fn ball_volume_growth(w: &HomWeight, xi: V2) -> Result<f64> {
    if vec2::norm(xi) > 0.5 {
        return Err(Error::InvalidArgument(format!("|xi| = {} exceeds 1/2", vec2::norm(xi))));
    }
    Ok(shifted_ball_mass(w, xi) - shifted_ball_mass(w, [0.0, 0.0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationReport {
    /// `∫_Q |w^{1/α}(x + xi) - w^{1/α}(x)|`.
    pub value: f64,
    /// Length of the projection of `xi` onto the remainder subspace.
    pub proj_e_norm: f64,
    /// `value / |proj xi|`, when the projection is nonzero.
    pub eps_emp: Option<f64>,
}

/// Separation of a weight from its translate over a box `Q` inside the cone
/// with `|xi| <= dist(Q, ∂Σ)/2`, by the `n x n` midpoint rule.
pub fn shifted_weight_separation(w: &HomWeight, q_lo: V2, q_hi: V2, xi: V2, n: usize) -> Result<SeparationReport> {
    if !(q_lo[0] < q_hi[0] && q_lo[1] < q_hi[1]) || n == 0 {
        return Err(Error::InvalidArgument("empty box or no samples".into()));
    }
    let corners = [q_lo, [q_hi[0], q_lo[1]], q_hi, [q_lo[0], q_hi[1]]];
    let cone = &w.cone;
    if corners.iter().any(|c| !cone.contains(*c, 0.0) || !cone.contains(vec2::add(*c, xi), 0.0)) {
        return Err(Error::InvalidArgument("Q and Q + xi must lie in the cone".into()));
    }
    // distance to the boundary is concave on a convex cone
    let dist = corners.iter().map(|c| cone.dist_to_boundary(*c)).fold(f64::INFINITY, f64::min);
    if vec2::norm(xi) > 0.5 * dist {
        return Err(Error::InvalidArgument(format!("|xi| must be at most dist(Q, ∂Σ)/2 = {}", 0.5 * dist)));
    }
    let value = crate::quad::midpoint_2d(
        |x, y| (w.root(vec2::add([x, y], xi)) - w.root([x, y])).abs(),
        (q_lo[0], q_hi[0]),
        (q_lo[1], q_hi[1]),
        n,
    );
    let sub = decompose_subspaces(cone, w)?;
    let proj_e_norm = sub.e.iter().map(|b| vec2::dot(*b, xi).powi(2)).sum::<f64>().sqrt();
    Ok(SeparationReport { value, proj_e_norm, eps_emp: (proj_e_norm > 0.0).then(|| value / proj_e_norm) })
}
