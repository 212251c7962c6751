//! Sweeps and diagnostics built from the measure, coupling and analysis
//! modules.

use crate::analysis::{ball_volume_growth, shifted_weight_separation};
use crate::cone::{decompose_subspaces, Cone};
use crate::coupling::{build_coupling, verify_coupling_estimates, Mode, RatioTable, Resolutions};
use crate::error::{Error, Result};
use crate::geometry::{asymmetry, deficit, StarSet, DEFAULT_RADIUS_CAP};
use crate::vec2::{self, V2};
use crate::weight::HomWeight;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Ratios `A_w / sqrt(δ_w)` are only formed above this deficit.
pub const RATIO_DELTA_FLOOR: f64 = 1e-9;
pub const MAX_SHARPNESS_EPS: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub delta_w: f64,
    pub asym: f64,
    pub ratio: Option<f64>,
    pub coupling: Option<RatioTable>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Filled in by the caller that owns the configuration.
    pub config_hash: String,
    pub seed: u64,
    pub n_theta: usize,
    pub mesh_h: Option<f64>,
    pub n_slope: Option<usize>,
    pub eval_h: Option<f64>,
    pub version: String,
}

impl RunManifest {
    fn new(n_theta: usize, res: Option<Resolutions>) -> Self {
        RunManifest {
            n_theta,
            mesh_h: res.map(|r| r.mesh_h),
            n_slope: res.map(|r| r.n_slope),
            eval_h: res.map(|r| r.eval_h),
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// Sorted by `param`.
    pub rows: Vec<SweepRow>,
    pub manifest: RunManifest,
}

impl SweepResult {
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

fn measure_row(param: f64, set: &StarSet, w: &HomWeight, coupling: Option<Resolutions>) -> Result<SweepRow> {
    let rep = deficit(set, w)?;
    let (asym, _) = asymmetry(set, w)?;
    let ratio = (rep.deficit > RATIO_DELTA_FLOOR).then(|| asym / rep.deficit.sqrt());
    let coupling = match coupling {
        Some(res) => {
            let r = build_coupling(set, Mode::Weighted(w), res)?;
            let (lo, hi) = bisector_box(&w.cone);
            Some(verify_coupling_estimates(&r, lo, hi)?)
        }
        None => None,
    };
    Ok(SweepRow { param, delta_w: rep.deficit, asym, ratio, coupling })
}

fn box_at(cone: &Cone, frac: f64, radius: f64, half: f64) -> (V2, V2) {
    let c = vec2::scale(vec2::unit(cone.angle_lo + frac * cone.opening()), radius);
    ([c[0] - half, c[1] - half], [c[0] + half, c[1] + half])
}

/// Box of half-side 0.1 around the point at radius 1/2 on the bisector.
pub fn bisector_box(cone: &Cone) -> (V2, V2) {
    box_at(cone, 0.5, 0.5, 0.1)
}

/// Box for the separation diagnostics, placed off the bisector: for a
/// weight symmetric about the bisector the first-order separation along
/// the antisymmetric direction changes sign there.
pub fn diagnostic_box(cone: &Cone) -> (V2, V2) {
    box_at(cone, 0.3, 0.6, 0.08)
}

pub const DEFAULT_DIAG_T: [f64; 4] = [0.0, 0.01, 0.02, 0.04];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least squares of `log y` against `log x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LogFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::FitRejected(format!("a fit needs at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::FitRejected("log fit of non-positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRejected("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(LogFit { slope, intercept: my - slope * mx, points: lx.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct Sharpness {
    pub result: SweepResult,
    /// Fit of `log A_w` against `log δ_w`.
    pub fit: LogFit,
    pub delta_over_eps2: Vec<f64>,
}

/// The family `E_eps = {r < 1 + eps η̃}` with η̃ the mean-zero projection of
/// `cos(m θ̂)`; the asymmetry exponent should be 1/2.
pub fn sharpness_sweep(w: &HomWeight, m: u32, eps: &[f64], n_theta: usize) -> Result<Sharpness> {
    if eps.len() < 3 {
        return Err(Error::FitRejected(format!("need at least 3 values of eps, got {}", eps.len())));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e <= MAX_SHARPNESS_EPS)) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, {MAX_SHARPNESS_EPS}]")));
    }
    let mut eps = eps.to_vec();
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows = eps
        .par_iter()
        .map(|&e| measure_row(e, &StarSet::perturbed_ball(w, n_theta, e, m)?, w, None))
        .collect::<Result<Vec<_>>>()?;
    let d: Vec<f64> = rows.iter().map(|r| r.delta_w).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.asym).collect();
    let fit = log_log_fit(&d, &a)?;
    let delta_over_eps2 = rows.iter().map(|r| r.delta_w / (r.param * r.param)).collect();
    Ok(Sharpness { result: SweepResult { rows, manifest: RunManifest::new(n_theta, None) }, fit, delta_over_eps2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusMember {
    /// `B_rho ∩ Σ`.
    Dilated { rho: f64 },
    /// `E_eps` with mode `m`.
    Perturbed { eps: f64, m: u32 },
    /// `r = 1 + height exp(-((θ̂ - center)/width)^2)`, θ̂ in `[0, pi]`.
    SectorBump { center: f64, width: f64, height: f64 },
}

impl CorpusMember {
    pub fn build(&self, w: &HomWeight, n_theta: usize) -> Result<StarSet> {
        match *self {
            CorpusMember::Dilated { rho } => StarSet::ball(w.cone, n_theta, rho),
            CorpusMember::Perturbed { eps, m } => StarSet::perturbed_ball(w, n_theta, eps, m),
            CorpusMember::SectorBump { center, width, height } => {
                let cone = w.cone;
                let r = cone
                    .angle_grid(n_theta)
                    .iter()
                    .map(|&t| 1.0 + height * (-((cone.theta_hat(t) - center) / width).powi(2)).exp())
                    .collect();
                StarSet::new(cone, r, DEFAULT_RADIUS_CAP)
            }
        }
    }
}

/// Thirty members: three dilated balls, twenty perturbed balls (modes 2, 3,
/// 4, 6) and seven sector bumps.
pub fn default_corpus() -> Vec<CorpusMember> {
    let mut c: Vec<CorpusMember> = [0.5, 1.0, 2.0].iter().map(|&rho| CorpusMember::Dilated { rho }).collect();
    for m in [2, 3, 4, 6] {
        for eps in [0.02, 0.05, 0.1, 0.15, 0.2] {
            c.push(CorpusMember::Perturbed { eps, m });
        }
    }
    for (center, width, height) in
        [(0.5, 0.3, 0.2), (1.0, 0.3, 0.2), (1.5, 0.5, 0.3), (2.5, 0.3, 0.1), (0.3, 0.2, 0.4), (1.57, 0.8, 0.5), (2.8, 0.2, 0.3)]
    {
        c.push(CorpusMember::SectorBump { center, width, height });
    }
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct Stability {
    /// `param` is the corpus index.
    pub result: SweepResult,
    pub max_ratio: Option<f64>,
    /// Members with `δ_w <= 1e-8` all have `A_w <= 1e-4`.
    pub uniqueness_ok: bool,
    /// Indices whose ratio exceeds the configured `c_max`.
    pub over_c_max: Vec<usize>,
}

pub fn stability_sweep(
    w: &HomWeight,
    corpus: &[CorpusMember],
    n_theta: usize,
    c_max: Option<f64>,
    coupling: Option<Resolutions>,
) -> Result<Stability> {
    let rows = corpus
        .par_iter()
        .enumerate()
        .map(|(i, m)| measure_row(i as f64, &m.build(w, n_theta)?, w, coupling))
        .collect::<Result<Vec<_>>>()?;
    let uniqueness_ok = rows.iter().all(|r| r.delta_w > 1e-8 || r.asym <= 1e-4);
    let over_c_max = match c_max {
        Some(c) => rows.iter().enumerate().filter(|(_, r)| r.ratio.is_some_and(|v| v > c)).map(|(i, _)| i).collect(),
        None => vec![],
    };
    let result = SweepResult { rows, manifest: RunManifest::new(n_theta, coupling) };
    Ok(Stability { max_ratio: result.max_ratio(), result, uniqueness_ok, over_c_max })
}

/// `A_w / sqrt(δ_w)` of one perturbed ball on sectors `[0, β]` of a
/// monomial weight; `param` is the opening.
pub fn opening_sweep(openings: &[f64], exponents: [f64; 2], eps: f64, m: u32, n_theta: usize) -> Result<SweepResult> {
    let mut openings = openings.to_vec();
    openings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows = openings
        .par_iter()
        .map(|&b| {
            let w = HomWeight::monomial(Cone::new(0.0, b)?, exponents)?;
            measure_row(b, &StarSet::perturbed_ball(&w, n_theta, eps, m)?, &w, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows, manifest: RunManifest::new(n_theta, None) })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagRow {
    pub direction: String,
    pub dir: V2,
    pub t: f64,
    pub growth: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionFit {
    pub direction: String,
    /// Least-squares slopes through the origin over `t > 0`.
    pub growth_slope: f64,
    pub separation_slope: f64,
    /// Largest relative deviation of the separation from its linear fit.
    pub separation_linearity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub rows: Vec<DiagRow>,
    pub fits: Vec<DirectionFit>,
}

/// Unit directions from the constancy and remainder bases, plus the
/// diagonals of a two-dimensional remainder.
pub fn diagnostic_directions(w: &HomWeight) -> Result<Vec<(String, V2)>> {
    let sub = decompose_subspaces(&w.cone, w)?;
    let fmt = |v: V2| format!("({:.6},{:.6})", v[0] + 0.0, v[1] + 0.0);
    let mut out: Vec<(String, V2)> = sub.c.iter().chain(&sub.e).map(|&v| (fmt(v), v)).collect();
    if let [a, b] = sub.e[..] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for v in [vec2::scale(vec2::sub(a, b), s), vec2::scale(vec2::add(a, b), s)] {
            out.push((fmt(v), v));
        }
    }
    Ok(out)
}

/// Ball growth and shifted-weight separation along each diagnostic
/// direction; separation over `q` by the `n x n` midpoint rule.
pub fn translation_diagnostics(w: &HomWeight, t_list: &[f64], q: (V2, V2), n: usize) -> Result<Diagnostics> {
    let dirs = diagnostic_directions(w)?;
    let mut ts = t_list.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let jobs: Vec<(usize, f64)> = (0..dirs.len()).flat_map(|d| ts.iter().map(move |&t| (d, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, t)| {
            let (label, dir) = &dirs[d];
            let xi = vec2::scale(*dir, t);
            Ok(DiagRow {
                direction: label.clone(),
                dir: *dir,
                t,
                growth: ball_volume_growth(w, xi)?,
                separation: shifted_weight_separation(w, q.0, q.1, xi, n)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fits = dirs
        .iter()
        .map(|(label, _)| {
            let pts: Vec<&DiagRow> = rows.iter().filter(|r| &r.direction == label && r.t > 0.0).collect();
            let tt: f64 = pts.iter().map(|r| r.t * r.t).sum();
            let slope = |f: fn(&DiagRow) -> f64| {
                if tt > 0.0 {
                    pts.iter().map(|r| r.t * f(r)).sum::<f64>() / tt
                } else {
                    0.0
                }
            };
            let s = slope(|r| r.separation);
            let lin = if s != 0.0 {
                pts.iter().map(|r| (r.separation / (s * r.t) - 1.0).abs()).fold(0.0, f64::max)
            } else {
                0.0
            };
            DirectionFit {
                direction: label.clone(),
                growth_slope: slope(|r| r.growth),
                separation_slope: s,
                separation_linearity: lin,
            }
        })
        .collect();
    Ok(Diagnostics { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x = [1e-4, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.sqrt()).collect();
        let f = log_log_fit(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(log_log_fit(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn corpus_has_thirty_members() {
        assert_eq!(default_corpus().len(), 30);
    }

    #[test]
    fn short_eps_list_is_rejected() {
        let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
        assert!(matches!(sharpness_sweep(&w, 4, &[0.1], 256), Err(Error::FitRejected(_))));
        assert!(sharpness_sweep(&w, 4, &[0.1, 0.2, 0.3], 256).is_err());
    }
}
