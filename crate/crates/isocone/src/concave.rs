//! Sampled 1-homogeneous functions on a cone: the spherical concavity
//! criterion, closure operations, and the zero-trace extension.

use crate::cone::Cone;
use crate::error::{Error, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Minimum angular resolution for the concavity criterion.
pub const MIN_GRID: usize = 16;

/// A 1-homogeneous function stored by its values on an equally spaced
/// angular grid of the cone's closed arc.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveHomFn {
    pub cone: Cone,
    pub values: Vec<f64>,
}

impl ConcaveHomFn {
    pub fn new(cone: Cone, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::GridTooCoarse(values.len(), 2));
        }
        Ok(ConcaveHomFn { cone, values })
    }

    /// Samples `f(theta)` on `n` grid angles.
    pub fn from_fn(cone: Cone, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = cone.angle_grid(n).into_iter().map(f).collect();
        ConcaveHomFn { cone, values }
    }

    pub fn angles(&self) -> Vec<f64> {
        self.cone.angle_grid(self.values.len())
    }

    /// Pointwise minimum of two functions on the same grid.
    pub fn min(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() || self.cone != other.cone {
            return Err(Error::InvalidArgument("grids differ".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.min(*b)).collect();
        Ok(ConcaveHomFn { cone: self.cone, values })
    }

    /// Precomposition with the rotation by `-angle`: the result lives on the
    /// rotated cone and takes the same values along the rotated rays.
    pub fn rotate(&self, angle: f64) -> Self {
        let cone = Cone { angle_lo: self.cone.angle_lo + angle, angle_hi: self.cone.angle_hi + angle };
        ConcaveHomFn { cone, values: self.values.clone() }
    }
}

/// Worst violation `[sin t v(-s) + sin s v(t)] / sin(s+t) - v(0)` over
/// geodesic triples of grid nodes. All triples are used when there are at
/// most `n_triples`; otherwise `n_triples` seeded random ones. Triples with
/// `s + t >= pi` are skipped.
pub fn spherical_concavity_check(v: &ConcaveHomFn, n_triples: usize, seed: u64) -> Result<f64> {
    let n = v.values.len();
    if n < MIN_GRID {
        return Err(Error::GridTooCoarse(n, MIN_GRID));
    }
    let th = v.angles();
    let vals = &v.values;
    let eval = |a: usize, c: usize, b: usize| -> Option<f64> {
        let s = th[c] - th[a];
        let t = th[b] - th[c];
        if s + t >= PI - 1e-12 {
            return None;
        }
        Some((t.sin() * vals[a] + s.sin() * vals[b]) / (s + t).sin() - vals[c])
    };
    let total = n * (n - 1) * (n - 2) / 6;
    let mut worst = f64::NEG_INFINITY;
    if total <= n_triples {
        for c in 1..n - 1 {
            for a in 0..c {
                for b in c + 1..n {
                    if let Some(x) = eval(a, c, b) {
                        worst = worst.max(x);
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_triples {
            let c = rng.random_range(1..n - 1);
            let a = rng.random_range(0..c);
            let b = rng.random_range(c + 1..n);
            if let Some(x) = eval(a, c, b) {
                worst = worst.max(x);
            }
        }
    }
    Ok(worst)
}

/// Smallest nonnegative concave 1-homogeneous function on the cone lying
/// above `v` on the inner cone, sampled on `v`'s grid.
///
/// In the plane the hypograph of such a function is generated by the rays
/// `(theta_i, v_i)` over the inner grid and `(lo, 0)`, `(hi, 0)`, so the
/// value at `theta` is the best sine interpolation between two generators
/// bracketing it.
pub fn zero_trace_extension(v: &ConcaveHomFn, inner: &Cone) -> Result<ConcaveHomFn> {
    let outer = v.cone;
    if outer.is_plane()
        || !(inner.angle_lo > outer.angle_lo + 1e-12 && inner.angle_hi < outer.angle_hi - 1e-12)
    {
        return Err(Error::NotCompactlyContained);
    }
    if v.values.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidArgument("v must be nonnegative".into()));
    }
    let th = v.angles();
    let mut gens: Vec<(f64, f64)> = vec![(outer.angle_lo, 0.0)];
    for (t, val) in th.iter().zip(&v.values) {
        if *t >= inner.angle_lo && *t <= inner.angle_hi {
            gens.push((*t, *val));
        }
    }
    gens.push((outer.angle_hi, 0.0));
    let values = th.iter().map(|&t| hull_value(&gens, t)).collect();
    Ok(ConcaveHomFn { cone: outer, values })
}

fn hull_value(gens: &[(f64, f64)], t: f64) -> f64 {
    let mut best = 0.0f64;
    for &(pi, ci) in gens {
        if (pi - t).abs() < 1e-15 {
            best = best.max(ci);
        }
    }
    for &(pi, ci) in gens.iter().filter(|g| g.0 < t) {
        for &(pj, cj) in gens.iter().filter(|g| g.0 > t) {
            let span = pj - pi;
            if span >= PI - 1e-12 {
                continue;
            }
            let val = ((pj - t).sin() * ci + (t - pi).sin() * cj) / span.sin();
            best = best.max(val);
        }
    }
    best
}
