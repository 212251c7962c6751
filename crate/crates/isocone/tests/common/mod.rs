//! Oracles and pinned values shared by the integration tests.
#![allow(dead_code)]

use isocone::HomWeight;
use serde_json::Value;

pub fn expectations() -> Value {
    serde_json::from_str(include_str!("../expectations.json")).expect("expectations parse")
}

pub fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

pub fn nums(v: &Value) -> Vec<f64> {
    v.as_array().expect("array").iter().map(num).collect()
}

/// Midpoint-rule oracle for `w(B_1(xi) ∩ Σ) - w(B_1 ∩ Σ)` on the quadrant,
/// cells of side `h` over `[0, 2]^2`.
pub fn tensor_growth(w: &HomWeight, xi: [f64; 2], h: f64) -> f64 {
    let n = (2.0 / h).round() as usize;
    let mut acc = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = (j as f64 + 0.5) * h;
            let a = ((x - xi[0]).powi(2) + (y - xi[1]).powi(2) < 1.0) as i32;
            let b = (x * x + y * y < 1.0) as i32;
            if a != b {
                acc += (a - b) as f64 * w.eval_unchecked([x, y]);
            }
        }
    }
    acc * h * h
}

/// `∫_Q |f(x + xi) - f(x)|` by an `n x n` midpoint rule on a closed-form `f`.
pub fn tensor_separation(f: impl Fn(f64, f64) -> f64, lo: [f64; 2], hi: [f64; 2], xi: [f64; 2], n: usize) -> f64 {
    let (hx, hy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
    let mut acc = 0.0;
    for i in 0..n {
        let x = lo[0] + (i as f64 + 0.5) * hx;
        for j in 0..n {
            let y = lo[1] + (j as f64 + 0.5) * hy;
            acc += (f(x + xi[0], y + xi[1]) - f(x, y)).abs();
        }
    }
    acc * hx * hy
}

/// Largest relative deviation from the mean.
pub fn spread(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max)
}
