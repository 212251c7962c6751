use crate::error::{Error, Result};
use crate::geometry::StarSet;
use crate::weight::HomWeight;
use rayon::prelude::*;
use serde::Serialize;

pub const MAX_INTERVALS: usize = 16;

/// Finitely many disjoint closed intervals of `[0, inf)`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

/// `∫_0^x t^γ dt`.
fn power_primitive(x: f64, gamma: f64) -> f64 {
    x.powf(gamma + 1.0) / (gamma + 1.0)
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.len() > MAX_INTERVALS {
            return Err(Error::InvalidSet(format!("{} intervals, at most {MAX_INTERVALS}", intervals.len())));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(a, b) in &intervals {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::InvalidSet(format!("bad interval [{a}, {b}]")));
            }
            if a <= prev {
                return Err(Error::InvalidSet("intervals must be sorted and separated".into()));
            }
            prev = b;
        }
        Ok(IntervalSet { intervals })
    }

    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// `∫_E t^γ dt`.
    pub fn power_measure(&self, gamma: f64) -> f64 {
        self.intervals.iter().map(|&(a, b)| power_primitive(b, gamma) - power_primitive(a, gamma)).sum()
    }

    /// `∫_{E ∩ [lo, hi]} t^γ dt`.
    pub fn power_measure_in(&self, lo: f64, hi: f64, gamma: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                if b > a {
                    power_primitive(b, gamma) - power_primitive(a, gamma)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Reduced boundary: all endpoints, with 0 dropped unless
    /// `include_origin` (an interval starting at 0 has density one there
    /// relative to the half-line).
    pub fn boundary(&self, include_origin: bool) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&t| include_origin || t > 0.0)
            .collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| t >= a && t <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `∫_{E Δ [0,l]} t^γ`.
    pub lhs: f64,
    /// The bracket multiplying `C_γ`.
    pub denominator: f64,
    pub rhs: f64,
    /// `lhs / denominator`; 0 when both vanish, infinite when only the
    /// denominator does.
    pub ratio: f64,
}

/// One-dimensional stability: `∫_{EΔ[0,l]} t^γ <= C_γ (∫_{[0,1/2]\E} t^γ +
/// sum_{t ∈ ∂E} t^γ |l - t|)`, for `l` in `[3/4, 5/4]`.
pub fn one_dim_stability_check(
    e: &IntervalSet,
    l: f64,
    gamma: f64,
    c_gamma: f64,
    include_origin: bool,
) -> Result<StabilityReport> {
    if !(0.75..=1.25).contains(&l) {
        return Err(Error::Inadmissible(format!("l = {l} outside [3/4, 5/4]")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("γ must be nonnegative".into()));
    }
    let lhs = e.power_measure(gamma) + power_primitive(l, gamma) - 2.0 * e.power_measure_in(0.0, l, gamma);
    let gap = power_primitive(0.5, gamma) - e.power_measure_in(0.0, 0.5, gamma);
    let bdry: f64 = e.boundary(include_origin).iter().map(|&t| t.powf(gamma) * (l - t).abs()).sum();
    let denominator = gap + bdry;
    let ratio = if denominator > 0.0 {
        lhs / denominator
    } else if lhs.abs() <= 1e-15 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(StabilityReport { lhs, denominator, rhs: c_gamma * denominator, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMax {
    pub gamma: f64,
    pub l: f64,
    pub max_ratio: f64,
    pub argmax: Vec<(f64, f64)>,
    pub sets: u64,
}

/// Largest stability ratio over every set of at most `max_intervals`
/// intervals with endpoints on the grid `{0, step, ..., t_max}`.
///
/// Both sides are sums of per-endpoint terms, so the enumeration carries
/// running sums and costs O(1) per set.
pub fn exhaustive_stability_max(
    gamma: f64,
    l: f64,
    step: f64,
    t_max: f64,
    max_intervals: usize,
    include_origin: bool,
) -> Result<FamilyMax> {
    if !(0.75..=1.25).contains(&l) {
        return Err(Error::Inadmissible(format!("l = {l} outside [3/4, 5/4]")));
    }
    let n = (t_max / step).round() as usize + 1;
    if max_intervals > 4 || n > 400 {
        return Err(Error::SearchTooLarge(format!("{n} grid points, {max_intervals} intervals")));
    }
    let pts: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let f = |x: f64| power_primitive(x, gamma);
    let h: Vec<f64> = pts.iter().map(|&x| f(x) - 2.0 * f(x.min(l))).collect();
    let j: Vec<f64> = pts.iter().map(|&x| f(x.min(0.5))).collect();
    let p: Vec<f64> = pts
        .iter()
        .map(|&x| if x > 0.0 || include_origin { x.powf(gamma) * (l - x).abs() } else { 0.0 })
        .collect();
    let base = Terms { h, j, p, num0: f(l), den0: f(0.5) };

    let empty = base.ratio(base.num0, base.den0);
    let best = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut st = Search { t: &base, max_depth: 2 * max_intervals, best: (f64::NEG_INFINITY, Vec::new()), count: 0, stack: vec![first] };
            // opening a left endpoint
            let num = base.num0 - base.h[first];
            let den = base.den0 + base.j[first] + base.p[first];
            st.descend(first, num, den);
            (st.best, st.count)
        })
        .reduce(
            || ((f64::NEG_INFINITY, Vec::new()), 0),
            |a, b| {
                let best = if b.0 .0 > a.0 .0 || (b.0 .0 == a.0 .0 && b.0 .1 < a.0 .1) { b.0 } else { a.0 };
                (best, a.1 + b.1)
            },
        );
    let ((mut max_ratio, mut idx), sets) = best;
    if empty > max_ratio {
        (max_ratio, idx) = (empty, Vec::new());
    }
    let sets = sets + 1;
    let argmax = idx.chunks(2).map(|c| (pts[c[0]], pts[c[1]])).collect();
    Ok(FamilyMax { gamma, l, max_ratio, argmax, sets })
}

struct Terms {
    h: Vec<f64>,
    j: Vec<f64>,
    p: Vec<f64>,
    num0: f64,
    den0: f64,
}

impl Terms {
    fn ratio(&self, num: f64, den: f64) -> f64 {
        if den > 0.0 {
            num / den
        } else if num.abs() <= 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

struct Search<'a> {
    t: &'a Terms,
    max_depth: usize,
    best: (f64, Vec<usize>),
    count: u64,
    stack: Vec<usize>,
}

impl Search<'_> {
    /// `stack` has odd length: the last entry is an open left endpoint.
    fn descend(&mut self, last: usize, num: f64, den: f64) {
        let t = self.t;
        for b in last + 1..t.h.len() {
            let num_c = num + t.h[b];
            let den_c = den - t.j[b] + t.p[b];
            self.stack.push(b);
            self.count += 1;
            let r = t.ratio(num_c, den_c);
            if r > self.best.0 {
                self.best = (r, self.stack.clone());
            }
            if self.stack.len() < self.max_depth {
                for a in b + 1..t.h.len() {
                    self.stack.push(a);
                    self.descend(a, num_c - t.h[a], den_c + t.j[a] + t.p[a]);
                    self.stack.pop();
                }
            }
            self.stack.pop();
        }
    }
}

/// The radial slice `E_θ = {t >= 0 : tθ ∈ E}` of a star set on each ray of
/// its angle grid.
pub fn polar_slices(set: &StarSet) -> Vec<(f64, IntervalSet)> {
    set.theta
        .iter()
        .zip(&set.r)
        .map(|(&t, &r)| (t, IntervalSet { intervals: vec![(0.0, r)] }))
        .collect()
}

/// `w(E) = ∫ w(θ) ∫_{E_θ} t^{D-1} dt dθ` assembled from the slices.
pub fn volume_from_slices(set: &StarSet, w: &HomWeight) -> f64 {
    let q = set.quad_weights();
    polar_slices(set)
        .iter()
        .zip(&q)
        .map(|((t, s), q)| q * w.profile(*t) * s.power_measure(w.d - 1.0))
        .sum()
}

/// Piecewise-linear function through `(xs[i], ys[i])`, constant outside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("knots must be non-empty and strictly increasing".into()));
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.xs.len();
        if t <= self.xs[0] {
            return self.ys[0];
        }
        if t >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|x| *x <= t) - 1;
        let s = (t - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + s * (self.ys[i + 1] - self.ys[i])
    }

    /// Extremes over `[lo, hi]`, attained at the ends or at knots.
    fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut vals = vec![self.eval(lo), self.eval(hi)];
        vals.extend(self.xs.iter().zip(&self.ys).filter(|(x, _)| **x > lo && **x < hi).map(|(_, y)| *y));
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }
}

/// Shift bound: `∫_a^b |η(t+ε) - η(t)| dt >= ε (inf_{|t-b|<=ε} η -
/// sup_{|t-a|<=ε} η)`. Returns `(lhs, rhs)`, the integral exact.
pub fn shift_lower_bound_check(eta: &PiecewiseLinear, a: f64, b: f64, eps: f64) -> Result<(f64, f64)> {
    if !(b > a) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument("need a < b and ε >= 0".into()));
    }
    let mut cuts = vec![a, b];
    for &x in &eta.xs {
        for c in [x, x - eps] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let g = |t: f64| eta.eval(t + eps) - eta.eval(t);
    let mut lhs = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        // the shifted difference is affine between cuts
        let (g0, g1) = (g(w[0]), g(w[1]));
        lhs += if g0 * g1 >= 0.0 {
            0.5 * len * (g0.abs() + g1.abs())
        } else {
            0.5 * len * (g0 * g0 + g1 * g1) / (g0.abs() + g1.abs())
        };
    }
    let inf_b = eta.range_on(b - eps, b + eps).0;
    let sup_a = eta.range_on(a - eps, a + eps).1;
    Ok((lhs, eps * (inf_b - sup_a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exact_interval_has_no_defect() {
        for g in [0.0, 1.0, 2.5] {
            assert_eq!(one_dim_stability_check(&set(&[(0.0, 1.0)]), 1.0, g, 1.0, false).unwrap().lhs, 0.0);
        }
    }

    #[test]
    fn short_interval_ratio() {
        let r = one_dim_stability_check(&set(&[(0.0, 0.8)]), 1.0, 2.0, 1.0, false).unwrap();
        assert!((r.lhs - 0.488 / 3.0).abs() < 1e-15);
        assert!((r.denominator - 0.128).abs() < 1e-15);
        assert!((r.ratio - 1.270_833_333_333_333).abs() < 1e-12);
    }

    #[test]
    fn two_intervals_enumerate_endpoints() {
        let r = one_dim_stability_check(&set(&[(0.0, 1.0), (2.0, 2.1)]), 1.0, 0.0, 1.0, false).unwrap();
        assert!((r.lhs - 0.1).abs() < 1e-12);
        assert!((r.denominator - 2.1).abs() < 1e-12);
        // with the origin counted, γ = 0 adds |l - 0| = 1
        let r = one_dim_stability_check(&set(&[(0.0, 1.0), (2.0, 2.1)]), 1.0, 0.0, 1.0, true).unwrap();
        assert!((r.denominator - 3.1).abs() < 1e-12);
    }

    #[test]
    fn l_outside_range_is_rejected() {
        assert!(one_dim_stability_check(&set(&[(0.0, 1.0)]), 1.3, 0.0, 1.0, false).is_err());
    }

    #[test]
    fn malformed_sets_are_rejected() {
        assert!(IntervalSet::new(vec![(0.5, 0.2)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, 1.0); 17]).is_err());
    }

    #[test]
    fn enumeration_agrees_with_direct_evaluation() {
        let fam = exhaustive_stability_max(2.0, 1.2, 0.25, 2.0, 2, false).unwrap();
        let mut best: f64 = 0.0;
        let pts: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let mut count = 1u64;
        for a in 0..9 {
            for b in a + 1..9 {
                best = best.max(
                    one_dim_stability_check(&set(&[(pts[a], pts[b])]), 1.2, 2.0, 1.0, false).unwrap().ratio,
                );
                count += 1;
                for c in b + 1..9 {
                    for d in c + 1..9 {
                        let s = set(&[(pts[a], pts[b]), (pts[c], pts[d])]);
                        best = best.max(one_dim_stability_check(&s, 1.2, 2.0, 1.0, false).unwrap().ratio);
                        count += 1;
                    }
                }
            }
        }
        let empty = one_dim_stability_check(&IntervalSet::empty(), 1.2, 2.0, 1.0, false).unwrap().ratio;
        best = best.max(empty);
        assert_eq!(fam.sets, count);
        assert!((fam.max_ratio - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn shift_bound_on_a_ramp() {
        let eta = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let (lhs, rhs) = shift_lower_bound_check(&eta, 0.2, 0.8, 0.1).unwrap();
        assert!((lhs - 0.06).abs() < 1e-15);
        assert!((rhs - 0.1 * (0.7 - 0.3)).abs() < 1e-15);
    }
}
