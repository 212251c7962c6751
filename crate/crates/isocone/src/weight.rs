//! Homogeneous weights `w(t x) = t^alpha w(x)` with concave `w^{1/alpha}`.

use crate::cone::{interior_samples, Cone};
use crate::error::{Error, Result};
use crate::quad;
use crate::vec2::{self, V2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Relative tolerance of the homogeneity self-check.
pub const HOMOGENEITY_TOL: f64 = 1e-12;
/// Sampled concavity admission: number of pairs and tolerance.
pub const CONCAVITY_PAIRS: usize = 10_000;
pub const CONCAVITY_TOL: f64 = 1e-10;

type WeightFn = Arc<dyn Fn(V2) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightForm {
    /// `x^a1 y^a2` in standard coordinates.
    Monomial([f64; 2]),
    /// Samples of `w` on the unit arc, equally spaced with both endpoints,
    /// interpolated linearly in angle.
    SphericalProfile(Vec<f64>),
    /// An arbitrary closure; only used to exercise the rejection paths.
    Custom(WeightFn),
}

impl fmt::Debug for WeightForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightForm::Monomial(a) => write!(f, "Monomial({a:?})"),
            WeightForm::SphericalProfile(s) => write!(f, "SphericalProfile({} samples)", s.len()),
            WeightForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HomWeight {
    pub cone: Cone,
    pub alpha: f64,
    pub form: WeightForm,
    /// Effective dimension `2 + alpha`.
    pub d: f64,
    /// `w(B_1 ∩ Σ)`.
    pub unit_ball_mass: f64,
    /// `D w(B_1 ∩ Σ)^{1/D}`.
    pub c_star: f64,
}

#[inline]
fn pow0(b: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        b.max(0.0)
    } else {
        b.max(0.0).powf(e)
    }
}

impl HomWeight {
    pub fn monomial(cone: Cone, a: [f64; 2]) -> Result<Self> {
        if a[0] < 0.0 || a[1] < 0.0 || !(a[0] + a[1] > 0.0) {
            return Err(Error::InadmissibleWeight(format!(
                "monomial exponents {a:?} must be nonnegative with positive sum"
            )));
        }
        if cone.is_plane() {
            return Err(Error::InadmissibleWeight("weights live on a proper cone".into()));
        }
        for t in cone.angle_grid(257) {
            let u = vec2::unit(t);
            if (a[0] > 0.0 && u[0] < -1e-12) || (a[1] > 0.0 && u[1] < -1e-12) {
                return Err(Error::InadmissibleWeight(format!(
                    "monomial {a:?} changes sign inside the cone"
                )));
            }
        }
        Ok(Self::finish(cone, a[0] + a[1], WeightForm::Monomial(a)))
    }

    pub fn spherical_profile(cone: Cone, alpha: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 || alpha <= 0.0 || samples.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InadmissibleWeight(
                "profile needs >= 2 nonnegative samples and alpha > 0".into(),
            ));
        }
        if cone.is_plane() {
            return Err(Error::InadmissibleWeight("weights live on a proper cone".into()));
        }
        Ok(Self::finish(cone, alpha, WeightForm::SphericalProfile(samples)))
    }

    /// Wraps a closure claimed to be `alpha`-homogeneous. Nothing is checked
    /// here; [`HomWeight::check_homogeneity`] does the checking.
    pub fn custom(cone: Cone, alpha: f64, f: impl Fn(V2) -> f64 + Send + Sync + 'static) -> Self {
        Self::finish(cone, alpha, WeightForm::Custom(Arc::new(f)))
    }

    fn finish(cone: Cone, alpha: f64, form: WeightForm) -> Self {
        let d = 2.0 + alpha;
        let mut w = HomWeight { cone, alpha, form, d, unit_ball_mass: 0.0, c_star: 0.0 };
        let arc = match &w.form {
            // exact for the piecewise linear interpolant
            WeightForm::SphericalProfile(s) => {
                let tw = quad::trapezoid_weights(s.len(), cone.angle_lo, cone.angle_hi);
                s.iter().zip(&tw).map(|(a, b)| a * b).sum()
            }
            _ => quad::integrate(|t| w.profile(t), cone.angle_lo, cone.angle_hi, 256, 16),
        };
        w.unit_ball_mass = arc / d;
        w.c_star = d * w.unit_ball_mass.powf(1.0 / d);
        w
    }

    /// `w` on the unit vector at angle `theta`.
    pub fn profile(&self, theta: f64) -> f64 {
        match &self.form {
            WeightForm::Monomial(a) => {
                let u = vec2::unit(theta);
                pow0(u[0], a[0]) * pow0(u[1], a[1])
            }
            WeightForm::SphericalProfile(s) => self.interp(s, theta),
            WeightForm::Custom(f) => f(vec2::unit(theta)),
        }
    }

    fn interp(&self, s: &[f64], theta: f64) -> f64 {
        let n = s.len();
        let u = ((theta - self.cone.angle_lo) / self.cone.opening()).clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (u.floor() as usize).min(n - 2);
        let f = u - i as f64;
        s[i] * (1.0 - f) + s[i + 1] * f
    }

    fn check_in_cone(&self, x: V2) -> Result<()> {
        if self.cone.contains(x, 1e-12) {
            Ok(())
        } else {
            Err(Error::OutsideCone(x[0], x[1]))
        }
    }

    pub fn eval(&self, x: V2) -> Result<f64> {
        self.check_in_cone(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: V2) -> f64 {
        match &self.form {
            WeightForm::Monomial(a) => pow0(x[0], a[0]) * pow0(x[1], a[1]),
            WeightForm::SphericalProfile(s) => {
                let r = vec2::norm(x);
                if r == 0.0 {
                    return 0.0;
                }
                r.powf(self.alpha) * self.interp(s, self.cone.angle_of(x))
            }
            WeightForm::Custom(f) => f(x),
        }
    }

    /// Value and gradient; analytic for monomials, polar central differences
    /// (one grid cell) for profiles.
    pub fn eval_grad(&self, x: V2) -> Result<(f64, V2)> {
        self.check_in_cone(x)?;
        Ok(self.eval_grad_unchecked(x))
    }

    pub fn eval_grad_unchecked(&self, x: V2) -> (f64, V2) {
        match &self.form {
            WeightForm::Monomial(a) => {
                let v = pow0(x[0], a[0]) * pow0(x[1], a[1]);
                let gx = if a[0] == 0.0 { 0.0 } else { a[0] * pow0(x[0], a[0] - 1.0) * pow0(x[1], a[1]) };
                let gy = if a[1] == 0.0 { 0.0 } else { a[1] * pow0(x[0], a[0]) * pow0(x[1], a[1] - 1.0) };
                (v, [gx, gy])
            }
            WeightForm::SphericalProfile(s) => {
                let r = vec2::norm(x);
                if r == 0.0 {
                    return (0.0, [0.0, 0.0]);
                }
                let th = self.cone.angle_of(x);
                let cell = self.cone.opening() / (s.len() - 1) as f64;
                let (lo, hi) = (self.cone.angle_lo, self.cone.angle_hi);
                let a = (th - cell).max(lo);
                let b = (th + cell).min(hi);
                let dp = (self.interp(s, b) - self.interp(s, a)) / (b - a);
                let p = self.interp(s, th);
                let ra = r.powf(self.alpha - 1.0);
                let er = vec2::scale(x, 1.0 / r);
                let et = vec2::perp(er);
                let g = vec2::add(vec2::scale(er, self.alpha * ra * p), vec2::scale(et, ra * dp));
                (r * ra * p, g)
            }
            WeightForm::Custom(f) => {
                let h = 1e-6 * vec2::norm(x).max(1e-3);
                let gx = (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h);
                let gy = (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h);
                (f(x), [gx, gy])
            }
        }
    }

    /// `w^{1/alpha}`, the concave 1-homogeneous root.
    pub fn root(&self, x: V2) -> f64 {
        self.eval_unchecked(x).max(0.0).powf(1.0 / self.alpha)
    }

    /// Checks `w(t x) = t^alpha w(x)` for `t` in {0.5, 2, 7} at sampled points.
    pub fn check_homogeneity(&self) -> Result<()> {
        for x in interior_samples(&self.cone) {
            let wx = self.eval_unchecked(x);
            if !wx.is_finite() || wx < 0.0 {
                return Err(Error::Inhomogeneous(format!("w({x:?}) = {wx}")));
            }
            for &t in &[0.5, 2.0, 7.0] {
                let lhs = self.eval_unchecked(vec2::scale(x, t));
                let rhs = t.powf(self.alpha) * wx;
                if (lhs - rhs).abs() > HOMOGENEITY_TOL * rhs.abs().max(f64::MIN_POSITIVE) {
                    return Err(Error::Inhomogeneous(format!(
                        "w({t} x) = {lhs} but t^alpha w(x) = {rhs} at x = {x:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Worst residual of the concavity condition over random interior pairs.
    pub fn audit_concavity(&self, n_pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let margin = 1e-3 * self.cone.opening();
        let mut worst = f64::INFINITY;
        let draw = |rng: &mut ChaCha8Rng| {
            let t = rng.random_range(self.cone.angle_lo + margin..self.cone.angle_hi - margin);
            let r = rng.random_range(0.1..2.0);
            vec2::scale(vec2::unit(t), r)
        };
        for _ in 0..n_pairs {
            let x = draw(&mut rng);
            let z = draw(&mut rng);
            if let Ok(res) = check_concavity_condition(self, x, z) {
                worst = worst.min(res);
            }
        }
        worst
    }

    /// Sampled admission: homogeneity plus the concavity condition at
    /// [`CONCAVITY_PAIRS`] random pairs.
    pub fn check_admissible(&self) -> Result<()> {
        self.check_homogeneity()?;
        let worst = self.audit_concavity(CONCAVITY_PAIRS, 0x5eed);
        if worst < -CONCAVITY_TOL {
            return Err(Error::InadmissibleWeight(format!(
                "concavity condition fails, worst residual {worst:e}"
            )));
        }
        Ok(())
    }
}

/// Residual `grad w(x).z / w(x) - alpha (w(z)/w(x))^{1/alpha}`; nonnegative
/// for every admissible weight.
pub fn check_concavity_condition(w: &HomWeight, x: V2, z: V2) -> Result<f64> {
    let (wx, g) = w.eval_grad(x)?;
    let wz = w.eval(z)?;
    if wx <= 0.0 {
        return Err(Error::DegeneratePoint);
    }
    Ok(vec2::dot(g, z) / wx - w.alpha * (wz / wx).powf(1.0 / w.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn xy() -> HomWeight {
        HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap()
    }

    #[test]
    fn monomial_values_and_gradients() {
        let w = xy();
        assert_eq!(w.eval_grad([2.0, 3.0]).unwrap(), (6.0, [3.0, 2.0]));
        assert_eq!(w.eval([1.0, 1.5]).unwrap(), 1.5);
        let x = HomWeight::monomial(Cone::quadrant(), [1.0, 0.0]).unwrap();
        assert_eq!(x.eval_grad([0.0, 1.0]).unwrap(), (0.0, [1.0, 0.0]));
        assert!(matches!(w.eval([-1.0, 1.0]), Err(Error::OutsideCone(..))));
    }

    #[test]
    fn derived_constants() {
        // w(B_1) = (1/4) int_0^{pi/2} cos sin = 1/8
        let w = xy();
        assert!((w.unit_ball_mass - 0.125).abs() < 1e-14);
        assert_eq!(w.d, 4.0);
        assert!((w.c_star - 4.0 * 0.125f64.powf(0.25)).abs() < 1e-13);
        let h = HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap();
        assert!((h.unit_ball_mass - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sign_changing_monomial_rejected() {
        assert!(HomWeight::monomial(Cone::half_plane(), [1.0, 0.0]).is_err());
        assert!(HomWeight::monomial(Cone::quadrant(), [0.0, 0.0]).is_err());
    }

    #[test]
    fn concavity_condition_examples() {
        let w = xy();
        assert!(check_concavity_condition(&w, [1.0, 1.0], [1.0, 1.0]).unwrap().abs() < 1e-15);
        let r = check_concavity_condition(&w, [1.0, 1.0], [2.0, 0.5]).unwrap();
        assert!((r - 0.5).abs() < 1e-14);
        // |x|^2 as a profile: its square root |x| is convex, not concave
        let r2 = HomWeight::spherical_profile(Cone::quadrant(), 2.0, vec![1.0; 65]).unwrap();
        let res = check_concavity_condition(&r2, [1.0, 0.01], [0.01, 1.0]).unwrap();
        assert!(res < -1.9);
        assert!(r2.check_admissible().is_err());
        assert!(w.check_admissible().is_ok());
        assert!(matches!(
            check_concavity_condition(&w, [1.0, 0.0], [1.0, 1.0]),
            Err(Error::DegeneratePoint)
        ));
    }

    #[test]
    fn profile_reproduces_monomial_and_euler() {
        let n = 2049;
        let cone = Cone::quadrant();
        let s: Vec<f64> = cone.angle_grid(n).iter().map(|&t| t.cos() * t.sin()).collect();
        let p = HomWeight::spherical_profile(cone, 2.0, s).unwrap();
        let x = [0.7, 0.4];
        assert!((p.eval(x).unwrap() - 0.28).abs() < 1e-6);
        let (v, g) = p.eval_grad(x).unwrap();
        assert!((vec2::dot(g, x) - 2.0 * v).abs() < 1e-12 * v);
        assert!((g[0] - 0.4).abs() < 1e-5 && (g[1] - 0.7).abs() < 1e-5);
        assert!((p.unit_ball_mass - 0.125).abs() < 1e-7);
        let _ = PI;
    }
}
