use super::interval::IntervalSet;
use crate::error::{Error, Result};
use crate::geometry::{self, GridSet, StarSet};
use crate::quad::gauss_legendre;
use crate::vec2::V2;
use crate::weight::HomWeight;
use rayon::prelude::*;
use serde::Serialize;

pub const MAX_CHEEGER_INTERVALS: usize = 4;
pub const MAX_CHEEGER_GRID: usize = 200;
pub const MAX_CHEEGER_CELLS: usize = 24;

/// `k(D) = (2 - 2^{(D-1)/D}) / 3`.
pub fn k_of_d(d: f64) -> f64 {
    (2.0 - 2f64.powf((d - 1.0) / d)) / 3.0
}

/// `Ψ(t) = t^{(D-1)/D} + (1-t)^{(D-1)/D} - 1`.
pub fn psi(t: f64, d: f64) -> f64 {
    let b = (d - 1.0) / d;
    t.powf(b) + (1.0 - t).powf(b) - 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct FmpConstants {
    pub d: f64,
    pub k: f64,
    /// `(t, Ψ(t))` on a uniform grid of `[0, 1]`.
    pub table: Vec<(f64, f64)>,
}

impl FmpConstants {
    /// Sampled points of `[0, 1/2]` where `Ψ(t) < 3 k t^{(D-1)/D}`, with a
    /// rounding allowance (the two sides agree at t = 1/2).
    pub fn lower_bound_violations(&self, samples: usize) -> usize {
        let b = (self.d - 1.0) / self.d;
        (0..=samples)
            .map(|i| 0.5 * i as f64 / samples as f64)
            .filter(|&t| {
                let bound = 3.0 * self.k * t.powf(b);
                psi(t, self.d) < bound - 1e-14 * bound.max(1e-300)
            })
            .count()
    }

    /// Second differences of the table are all negative.
    pub fn strictly_concave(&self) -> bool {
        self.table.windows(3).all(|w| w[0].1 - 2.0 * w[1].1 + w[2].1 < 0.0)
    }
}

pub fn psi_k(d: f64) -> Result<FmpConstants> {
    if !(d > 1.0) {
        return Err(Error::InvalidArgument(format!("D = {d} must exceed 1")));
    }
    let n = 1000;
    let table = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (t, psi(t, d))
        })
        .collect();
    Ok(FmpConstants { d, k: k_of_d(d), table })
}

/// `Per_w(F) / H_w(∂F ∩ ∂E)` on the half-line with `w = t^γ`; the origin is
/// not in the open cone and never counts. Infinite when nothing is shared.
pub fn cheeger_ratio_1d(e: &IntervalSet, f: &[(f64, f64)], gamma: f64) -> f64 {
    let e_ends = e.boundary(false);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(a, b) in f {
        for t in [a, b] {
            if t > 0.0 {
                let wt = t.powf(gamma);
                num += wt;
                if e_ends.contains(&t) {
                    den += wt;
                }
            }
        }
    }
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cheeger1d {
    pub tau: f64,
    pub tau_minus_one: f64,
    pub minimizer: Vec<(f64, f64)>,
    pub best_connected: f64,
    pub best_disconnected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Comp {
    lo: f64,
    hi: f64,
    host: usize,
    lo_free: bool,
    hi_free: bool,
}

struct Problem1d<'a> {
    e: &'a IntervalSet,
    gamma: f64,
    half: f64,
}

impl Problem1d<'_> {
    fn mass(&self, f: &[Comp]) -> f64 {
        let g = self.gamma + 1.0;
        f.iter().map(|c| (c.hi.powf(g) - c.lo.powf(g)) / g).sum()
    }

    /// Ratio of an admissible candidate, `None` otherwise.
    fn value(&self, f: &[Comp]) -> Option<f64> {
        for (i, c) in f.iter().enumerate() {
            let (a, b) = self.e.intervals()[c.host];
            if !(c.lo < c.hi && c.lo >= a && c.hi <= b) {
                return None;
            }
            if i > 0 && !(f[i - 1].hi < c.lo) {
                return None;
            }
        }
        let m = self.mass(f);
        if !(m > 0.0 && m <= self.half * (1.0 + 1e-14)) {
            return None;
        }
        let iv: Vec<(f64, f64)> = f.iter().map(|c| (c.lo, c.hi)).collect();
        Some(cheeger_ratio_1d(self.e, &iv, self.gamma))
    }

    /// Zooming coordinate search over the free endpoints.
    fn polish(&self, mut f: Vec<Comp>, step: f64) -> (f64, Vec<Comp>) {
        let mut best = self.value(&f).unwrap_or(f64::INFINITY);
        let mut step = step;
        for _ in 0..10 {
            for ci in 0..f.len() {
                for end in 0..2 {
                    let free = if end == 0 { f[ci].lo_free } else { f[ci].hi_free };
                    if !free {
                        continue;
                    }
                    let orig = if end == 0 { f[ci].lo } else { f[ci].hi };
                    let mut pick = orig;
                    for k in -20i32..=20 {
                        let v = orig + k as f64 * step / 10.0;
                        let mut g = f.clone();
                        if end == 0 {
                            g[ci].lo = v;
                        } else {
                            g[ci].hi = v;
                        }
                        // free ends stay strictly inside the host interval
                        let (a, b) = self.e.intervals()[g[ci].host];
                        if !(v > a && v < b) {
                            continue;
                        }
                        if let Some(r) = self.value(&g) {
                            if r < best {
                                best = r;
                                pick = v;
                            }
                        }
                    }
                    if end == 0 {
                        f[ci].lo = pick;
                    } else {
                        f[ci].hi = pick;
                    }
                }
            }
            step /= 10.0;
        }
        (best, f)
    }
}

/// Cheeger constant of a union of intervals in `(0, inf)` with `w = t^γ`.
///
/// Competitors are unions of at most two components. A component sharing
/// no endpoint with E can be dropped without raising the ratio, so each
/// candidate component is a whole interval of E or a piece anchored at one
/// of its ends, with the free end on a grid of `grid` interior points; the
/// best candidates are then refined by a zooming search.
pub fn cheeger_1d(e: &IntervalSet, gamma: f64, grid: usize) -> Result<Cheeger1d> {
    let iv = e.intervals();
    if iv.is_empty() || iv.len() > MAX_CHEEGER_INTERVALS || grid > MAX_CHEEGER_GRID {
        return Err(Error::SearchTooLarge(format!(
            "{} intervals (1..={MAX_CHEEGER_INTERVALS}) and {grid} grid points (<= {MAX_CHEEGER_GRID})",
            iv.len()
        )));
    }
    let total_len: f64 = iv.iter().map(|(a, b)| b - a).sum();
    let prob = Problem1d { e, gamma, half: 0.5 * e.power_measure(gamma) };
    let mut comps = Vec::new();
    let mut spacing = f64::INFINITY;
    for (host, &(a, b)) in iv.iter().enumerate() {
        comps.push(Comp { lo: a, hi: b, host, lo_free: false, hi_free: false });
        let n = ((grid as f64 * (b - a) / total_len).round() as usize).max(2);
        let h = (b - a) / (n + 1) as f64;
        spacing = spacing.min(h);
        for k in 1..=n {
            let c = a + k as f64 * h;
            comps.push(Comp { lo: a, hi: c, host, lo_free: false, hi_free: true });
            comps.push(Comp { lo: c, hi: b, host, lo_free: true, hi_free: false });
        }
    }
    let keep = 8;
    let top = |mut v: Vec<(f64, Vec<Comp>)>| {
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v.truncate(keep);
        v
    };
    let singles = top(comps.iter().filter_map(|c| prob.value(&[*c]).map(|r| (r, vec![*c]))).collect());
    let pairs = top(
        (0..comps.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let comps = &comps;
                let prob = &prob;
                (0..comps.len()).filter_map(move |j| {
                    let f = [comps[i], comps[j]];
                    prob.value(&f).map(|r| (r, f.to_vec()))
                })
            })
            .collect(),
    );
    let refine = |cands: Vec<(f64, Vec<Comp>)>| {
        cands
            .into_iter()
            .map(|(_, f)| prob.polish(f, spacing))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap_or((f64::INFINITY, Vec::new()))
    };
    let (bc, fc) = refine(singles);
    let (bd, fd) = refine(pairs);
    let (tau, f) = if bd < bc { (bd, fd) } else { (bc, fc) };
    Ok(Cheeger1d {
        tau,
        tau_minus_one: tau - 1.0,
        minimizer: f.iter().map(|c| (c.lo, c.hi)).collect(),
        best_connected: bc,
        best_disconnected: bd,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Cheeger2d {
    pub tau: f64,
    pub tau_minus_one: f64,
    /// Grid indices of a minimising subset.
    pub cells: Vec<usize>,
    pub subsets: u64,
}

fn w_at(w: &HomWeight, p: V2) -> f64 {
    if w.cone.contains(p, 0.0) {
        w.eval_unchecked(p).max(0.0)
    } else {
        0.0
    }
}

/// Cheeger constant of a small rasterised set over its 4-connected subsets.
pub fn cheeger_2d(g: &GridSet, w: &HomWeight) -> Result<Cheeger2d> {
    let cells: Vec<usize> = g.cells().collect();
    let n = cells.len();
    if n > MAX_CHEEGER_CELLS {
        return Err(Error::SearchTooLarge(format!("{n} cells, at most {MAX_CHEEGER_CELLS}")));
    }
    let local = |idx: usize| cells.iter().position(|&c| c == idx);
    let (gx, gw) = gauss_legendre(5);
    let h = g.h;
    let edge_weight = |a: V2, b: V2| {
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        // edges on the cone boundary carry no perimeter
        if g.cone.dist_to_boundary(mid) <= 1e-12 * h {
            return 0.0;
        }
        gx.iter()
            .zip(&gw)
            .map(|(x, wt)| {
                let s = 0.5 * (1.0 + x);
                wt * w_at(w, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
            })
            .sum::<f64>()
            * 0.5
            * h
    };
    let mut mass = vec![0.0; n];
    let mut adj = vec![0u32; n];
    // per cell: (local neighbour or None, edge weight)
    let mut sides: Vec<[(Option<usize>, f64); 4]> = Vec::with_capacity(n);
    for (k, &idx) in cells.iter().enumerate() {
        let c = g.center(idx);
        let (x0, y0) = (c[0] - h / 2.0, c[1] - h / 2.0);
        for (xi, wi) in gx.iter().zip(&gw) {
            for (yi, wj) in gx.iter().zip(&gw) {
                let p = [c[0] + 0.5 * h * xi, c[1] + 0.5 * h * yi];
                mass[k] += wi * wj * w_at(w, p) * 0.25 * h * h;
            }
        }
        let (i, j) = (idx % g.nx, idx / g.nx);
        let nb = |di: i64, dj: i64| {
            let (ii, jj) = (i as i64 + di, j as i64 + dj);
            if ii < 0 || jj < 0 || ii >= g.nx as i64 || jj >= g.ny as i64 {
                None
            } else {
                let t = jj as usize * g.nx + ii as usize;
                if g.mask[t] {
                    local(t)
                } else {
                    None
                }
            }
        };
        let s = [
            (nb(-1, 0), edge_weight([x0, y0], [x0, y0 + h])),
            (nb(1, 0), edge_weight([x0 + h, y0], [x0 + h, y0 + h])),
            (nb(0, -1), edge_weight([x0, y0], [x0 + h, y0])),
            (nb(0, 1), edge_weight([x0, y0 + h], [x0 + h, y0 + h])),
        ];
        for (o, _) in &s {
            if let Some(o) = o {
                adj[k] |= 1 << o;
            }
        }
        sides.push(s);
    }
    let half = 0.5 * mass.iter().sum::<f64>();
    let ratio = |set: u32| {
        let (mut per, mut shared) = (0.0, 0.0);
        for k in 0..n {
            if set & (1 << k) == 0 {
                continue;
            }
            for (o, wt) in &sides[k] {
                match o {
                    Some(o) if set & (1 << o) != 0 => {}
                    Some(_) => per += wt,
                    None => {
                        per += wt;
                        shared += wt;
                    }
                }
            }
        }
        if shared > 0.0 {
            per / shared
        } else {
            f64::INFINITY
        }
    };
    let ctx = Enum { adj: &adj, mass: &mass, half, ratio: &ratio };
    let (best, mask, count) = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut st = (f64::INFINITY, 0u32, 0u64);
            let blocked = (1u32 << v) - 1;
            if mass[v] <= half {
                ctx.rec(1 << v, adj[v] & !blocked & !(1 << v), blocked, mass[v], &mut st);
            }
            st
        })
        .reduce(
            || (f64::INFINITY, 0, 0),
            |a, b| {
                let pick = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { (b.0, b.1) } else { (a.0, a.1) };
                (pick.0, pick.1, a.2 + b.2)
            },
        );
    Ok(Cheeger2d {
        tau: best,
        tau_minus_one: best - 1.0,
        cells: (0..n).filter(|k| mask & (1 << k) != 0).map(|k| cells[k]).collect(),
        subsets: count,
    })
}

struct Enum<'a, F: Fn(u32) -> f64> {
    adj: &'a [u32],
    mass: &'a [f64],
    half: f64,
    ratio: &'a F,
}

impl<F: Fn(u32) -> f64> Enum<'_, F> {
    /// Every connected set whose smallest cell is the seed is reached once:
    /// candidates popped at a level stay blocked for its later branches.
    fn rec(&self, set: u32, mut cand: u32, mut blocked: u32, m: f64, st: &mut (f64, u32, u64)) {
        st.2 += 1;
        let r = (self.ratio)(set);
        if r < st.0 || (r == st.0 && set < st.1) {
            st.0 = r;
            st.1 = set;
        }
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            cand &= !(1 << u);
            let mu = m + self.mass[u];
            // supersets only gain mass
            if mu <= self.half {
                let next = set | (1 << u);
                let ext = cand | (self.adj[u] & !next & !blocked);
                self.rec(next, ext, blocked, mu, st);
            }
            blocked |= 1 << u;
        }
    }
}

/// Piecewise-constant function: `values[i]` between `knots[i-1]` and
/// `knots[i]`, extended constantly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != knots.len() + 1 || values.len() > 8 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("at most 8 pieces with increasing knots".into()));
        }
        Ok(StepFunction { knots, values })
    }

    pub fn right(&self, x: f64) -> f64 {
        self.values[self.knots.partition_point(|k| *k <= x)]
    }

    pub fn left(&self, x: f64) -> f64 {
        self.values[self.knots.partition_point(|k| *k < x)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoincareReport {
    /// Weighted median of f on E.
    pub c: f64,
    /// Total variation of f inside E, `sum |jump| w`.
    pub lhs: f64,
    pub trace_rhs: f64,
    pub poincare_rhs: f64,
    pub trace_holds: bool,
    pub poincare_holds: bool,
}

/// Trace and Sobolev-Poincaré inequalities on the half-line with `w = t^γ`,
/// `γ > 0`, for a step function and a given Cheeger constant `tau` of E.
pub fn trace_poincare_check_1d(e: &IntervalSet, f: &StepFunction, gamma: f64, tau: f64) -> Result<TracePoincareReport> {
    if !(gamma > 0.0) || !(tau >= 1.0) {
        return Err(Error::InvalidArgument("need γ > 0 and τ >= 1".into()));
    }
    let g = gamma + 1.0;
    let d = g;
    let prim = |x: f64| x.powf(g) / g;
    // (value, mass) of f on the pieces of E
    let mut pieces = Vec::new();
    for &(a, b) in e.intervals() {
        let mut cuts = vec![a];
        cuts.extend(f.knots.iter().filter(|k| **k > a && **k < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            pieces.push((f.right(0.5 * (w[0] + w[1])), prim(w[1]) - prim(w[0])));
        }
    }
    let total: f64 = pieces.iter().map(|p| p.1).sum();
    let mut by_value = pieces.clone();
    by_value.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cum = 0.0;
    let mut c = by_value.last().map_or(0.0, |p| p.0);
    for (v, m) in &by_value {
        cum += m;
        if cum >= 0.5 * total {
            c = *v;
            break;
        }
    }
    let lhs: f64 = f
        .knots
        .iter()
        .enumerate()
        .filter(|(_, k)| e.intervals().iter().any(|&(a, b)| **k > a && **k < b))
        .map(|(i, k)| (f.values[i + 1] - f.values[i]).abs() * k.powf(gamma))
        .sum();
    let trace: f64 = e
        .intervals()
        .iter()
        .flat_map(|&(a, b)| [(a, f.right(a)), (b, f.left(b))])
        .filter(|(t, _)| *t > 0.0)
        .map(|(t, v)| (v - c).abs() * t.powf(gamma))
        .sum();
    let p = d / (d - 1.0);
    let lp: f64 = pieces.iter().map(|(v, m)| (v - c).abs().powf(p) * m).sum();
    let trace_rhs = (tau - 1.0) * trace;
    let poincare_rhs = d * (1.0 - 1.0 / tau) * lp.powf((d - 1.0) / d);
    let ok = |r: f64| lhs >= r - 1e-12 * r.abs().max(1.0);
    Ok(TracePoincareReport {
        c,
        lhs,
        trace_rhs,
        poincare_rhs,
        trace_holds: ok(trace_rhs),
        poincare_holds: ok(poincare_rhs),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RemovalReport {
    pub applicable: bool,
    pub k: f64,
    pub w_e: f64,
    pub w_f: f64,
    pub per_e: f64,
    pub per_f: f64,
    pub per_e_minus_f: f64,
    /// `H_w(∂E ∩ ∂F)`.
    pub shared: f64,
    pub delta_e: f64,
    pub delta_e_minus_f: f64,
    /// `(δ(E)/k)^{D/(D-1)} w(E)`.
    pub bound_i: f64,
    pub holds_i: Option<bool>,
    pub holds_ii: Option<bool>,
    /// `None` also when `δ(E) > k(D)`.
    pub holds_iii: Option<bool>,
}

/// Removal of the sector piece `F = E ∩ {θ_ja <= θ <= θ_jb}` (grid indices)
/// from a star set, all quantities by the set's own polar quadrature.
pub fn removal_lemma_check(e: &StarSet, w: &HomWeight, ja: usize, jb: usize) -> Result<RemovalReport> {
    let n = e.n();
    if e.cone.is_plane() || !(ja < jb && jb < n) {
        return Err(Error::InvalidArgument("need a proper cone and 0 <= ja < jb < n".into()));
    }
    let d = w.d;
    let k = k_of_d(d);
    let q = e.quad_weights();
    let h = e.cone.opening() / (n - 1) as f64;
    let prof = e.profile(w);
    let dr = e.dr();
    let vol: Vec<f64> = (0..n).map(|j| e.r[j].powf(d) * prof[j] / d).collect();
    let bnd: Vec<f64> = (0..n)
        .map(|j| {
            let s = dr[j] / e.r[j];
            e.r[j].powf(d - 1.0) * (1.0 + s * s).sqrt() * prof[j]
        })
        .collect();
    let qf: Vec<f64> = (0..n)
        .map(|j| if j < ja || j > jb { 0.0 } else if j == ja || j == jb { 0.5 * h } else { h })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let qc: Vec<f64> = q.iter().zip(&qf).map(|(a, b)| a - b).collect();
    // radial cuts inside the open cone
    let side = |j: usize| prof[j] * e.r[j].powf(d - 1.0) / (d - 1.0);
    let sides = if ja > 0 { side(ja) } else { 0.0 } + if jb + 1 < n { side(jb) } else { 0.0 };

    let w_e = dot(&q, &vol);
    let w_f = dot(&qf, &vol);
    let per_e = dot(&q, &bnd);
    let shared = dot(&qf, &bnd);
    let per_f = shared + sides;
    let per_e_minus_f = dot(&qc, &bnd) + sides;
    let c_star = d * geometry::grid_unit_ball_mass(e, w).powf(1.0 / d);
    let deficit = |per: f64, v: f64| per / (c_star * v.powf((d - 1.0) / d)) - 1.0;
    let delta_e = deficit(per_e, w_e);
    let delta_e_minus_f = deficit(per_e_minus_f, w_e - w_f);
    let bound_i = (delta_e.max(0.0) / k).powf(d / (d - 1.0)) * w_e;

    let applicable = w_f > 0.0 && w_f < 0.5 * w_e && per_f <= (1.0 + k) * shared;
    let tol = 1e-9;
    let (holds_i, holds_ii, holds_iii) = if applicable {
        (
            Some(w_f <= bound_i * (1.0 + tol) + tol * w_e),
            Some(per_e_minus_f <= per_e * (1.0 + tol)),
            (delta_e <= k).then(|| delta_e_minus_f <= 3.0 / k * delta_e.max(0.0) + tol),
        )
    } else {
        (None, None, None)
    };
    Ok(RemovalReport {
        applicable,
        k,
        w_e,
        w_f,
        per_e,
        per_f,
        per_e_minus_f,
        shared,
        delta_e,
        delta_e_minus_f,
        bound_i,
        holds_i,
        holds_ii,
        holds_iii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;

    #[test]
    fn k_and_psi_values() {
        assert!((k_of_d(3.0) - (2.0 - 2f64.powf(2.0 / 3.0)) / 3.0).abs() < 1e-15);
        assert!((k_of_d(3.0) - 0.137_533).abs() < 1e-6);
        for d in [2.5, 3.0, 4.0, 7.2] {
            let c = psi_k(d).unwrap();
            assert_eq!(psi(0.0, d), 0.0);
            assert!(psi(1.0, d).abs() < 1e-15);
            assert!((psi(0.5, d) - (2f64.powf(1.0 / d) - 1.0)).abs() < 1e-15);
            assert_eq!(c.lower_bound_violations(1000), 0);
            assert!(c.strictly_concave());
        }
        assert!(psi_k(1.0).is_err());
    }

    #[test]
    fn interval_cheeger_matches_reduction() {
        let e = IntervalSet::new(vec![(1.0, 2.0)]).unwrap();
        let r = cheeger_1d(&e, 2.0, 200).unwrap();
        let c = 4.5f64.cbrt();
        let exact = (c * c + 4.0) / 4.0;
        assert!((r.tau - exact).abs() < 1e-6, "{} vs {exact}", r.tau);
        assert!(r.best_disconnected >= r.best_connected);
        assert!(cheeger_ratio_1d(&e, &[(1.2, 1.4)], 2.0).is_infinite());
    }

    #[test]
    fn search_limits() {
        let e = IntervalSet::new(vec![(1.0, 2.0)]).unwrap();
        assert!(matches!(cheeger_1d(&e, 2.0, 201), Err(Error::SearchTooLarge(_))));
    }

    #[test]
    fn worked_trace_example() {
        let e = IntervalSet::new(vec![(1.0, 2.0)]).unwrap();
        let tau = (4.5f64.cbrt().powi(2) + 4.0) / 4.0;
        let f = StepFunction::new(vec![1.5], vec![0.0, 1.0]).unwrap();
        let r = trace_poincare_check_1d(&e, &f, 2.0, tau).unwrap();
        assert_eq!(r.c, 1.0);
        assert!((r.lhs - 2.25).abs() < 1e-12);
        assert!((r.trace_rhs - (tau - 1.0)).abs() < 1e-12);
        let expect = 3.0 * (1.0 - 1.0 / tau) * ((1.5f64.powi(3) - 1.0) / 3.0).powf(2.0 / 3.0);
        assert!((r.poincare_rhs - expect).abs() < 1e-12);
        assert!(r.trace_holds && r.poincare_holds);
        let g = StepFunction::new(vec![1.5], vec![0.0, -1.0]).unwrap();
        let s = trace_poincare_check_1d(&e, &g, 2.0, tau).unwrap();
        assert_eq!(s.c, -1.0);
        assert!((s.lhs - r.lhs).abs() < 1e-15 && (s.poincare_rhs - r.poincare_rhs).abs() < 1e-15);
    }

    #[test]
    fn constant_function_is_trivial() {
        let e = IntervalSet::new(vec![(1.0, 2.0)]).unwrap();
        let f = StepFunction::new(vec![], vec![3.0]).unwrap();
        let r = trace_poincare_check_1d(&e, &f, 2.0, 1.5).unwrap();
        assert_eq!((r.lhs, r.trace_rhs, r.poincare_rhs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn heavy_piece_is_inapplicable() {
        let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
        let e = StarSet::ball(w.cone, 1025, 1.0).unwrap();
        let r = removal_lemma_check(&e, &w, 0, 700).unwrap();
        assert!(!r.applicable && r.holds_i.is_none());
        // the two cut sides are counted once in each piece
        assert!((r.per_f + r.per_e_minus_f - r.per_e - 2.0 * (r.per_f - r.shared)).abs() < 1e-12);
    }
}
