use crate::error::{Error, Result};
use rand::{Rng, RngExt};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmgmReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum λ_i (x_i - c)^2 <= (8/3) c^{2-s} s^3 / (min λ)^2 (c^s - prod x_i^{λ_i})`
/// for weights with `s = sum λ_i >= 1` and weighted mean at most `c`.
pub fn quantitative_amgm_check(lambda: &[f64], x: &[f64], c: f64) -> Result<AmgmReport> {
    if lambda.is_empty() || lambda.len() != x.len() {
        return Err(Error::InvalidArgument("λ and x must be non-empty and of equal length".into()));
    }
    if !(c > 0.0) || lambda.iter().any(|l| !(*l > 0.0)) || x.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("need λ > 0, x >= 0 and c > 0".into()));
    }
    let s: f64 = lambda.iter().sum();
    if s < 1.0 - 1e-12 {
        return Err(Error::Inadmissible(format!("sum of weights {s} is below 1")));
    }
    let mean: f64 = lambda.iter().zip(x).map(|(l, v)| l * v).sum();
    if mean > c * s * (1.0 + 1e-12) {
        return Err(Error::Inadmissible(format!("weighted sum {mean} exceeds c s = {}", c * s)));
    }
    let lhs: f64 = lambda.iter().zip(x).map(|(l, v)| l * (v - c) * (v - c)).sum();
    let lmin = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    // c^{2-s} (c^s - prod x_i^{λ_i}) = c^2 (1 - prod (x_i/c)^{λ_i}); the
    // expm1 form keeps the equality cases from cancelling to -1e-12
    let log_ratio: f64 = lambda.iter().zip(x).map(|(l, v)| l * (v / c).ln()).sum();
    let rhs = 8.0 / 3.0 * c * c * s.powi(3) / (lmin * lmin) * -log_ratio.exp_m1();
    Ok(AmgmReport { lhs, rhs, holds: lhs <= rhs + 1e-12 * rhs.abs().max(1.0) })
}

/// Random admissible input: `m <= 6` weights with sum in `[1, 10]`, a
/// positive `c`, and a point whose weighted mean is at most `c`.
pub fn sample_amgm_input<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<f64>, f64) {
    let m = rng.random_range(1..=6usize);
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s = rng.random_range(1.0..10.0);
    let total: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|r| r * s / total).collect();
    let c = rng.random_range(0.1..5.0);
    let u: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
    let mean: f64 = lambda.iter().zip(&u).map(|(l, v)| l * v).sum();
    // half of the draws sit exactly on the constraint
    let t = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.0..1.0) };
    let mut x: Vec<f64> = if mean > 0.0 { u.iter().map(|v| v * c * s * t / mean).collect() } else { u };
    // rounding can leave the constraint draws an ulp outside; AM-GM puts
    // the product at most c^s on admissible input, so that is pulled in too
    let s: f64 = lambda.iter().sum();
    let outside = |x: &[f64]| {
        lambda.iter().zip(x).map(|(l, v)| l * v).sum::<f64>() > c * s
            || lambda.iter().zip(x).map(|(l, v)| l * (v / c).ln()).sum::<f64>() > 0.0
    };
    while outside(&x) {
        x.iter_mut().for_each(|v| *v *= 1.0 - 2.0 * f64::EPSILON);
    }
    (lambda, x, c)
}
