//! One PASS/FAIL line per acceptance criterion. The lines go straight to
//! stderr so they show up without `--nocapture`.

use isocone::analysis::*;
use isocone::coupling::{abp_chain_check, anisotropic_deficit, build_coupling, verify_coupling_estimates, Mode, Resolutions, PILOT_BOUNDS};
use isocone::envelope::{support_function, SlopeBody};
use isocone::experiments::*;
use isocone::geometry::{self, random_star_set};
use isocone::pde::{energy_error, fan_triangulate, solve_neumann, Problem};
use isocone::{Cone, Error, HomWeight, StarSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::{Duration, Instant};

mod common;
use common::{expectations, num, nums, spread, tensor_growth, tensor_separation};

/// Outcome of one criterion: the failures found, and a one-line summary.
struct Check {
    failures: Vec<String>,
    summary: String,
}

impl Check {
    fn new() -> Self {
        Check { failures: vec![], summary: String::new() }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.require(t <= limit, || format!("runtime {t:?} over {limit:?}"));
    }
}

fn xy() -> HomWeight {
    HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap()
}

fn configs() -> Vec<(&'static str, HomWeight)> {
    vec![
        ("quadrant xy", xy()),
        ("quadrant x", HomWeight::monomial(Cone::quadrant(), [1.0, 0.0]).unwrap()),
        ("half-plane y", HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap()),
    ]
}

fn nonnegativity() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let n = 4096;
    let mut worst = f64::INFINITY;
    for (k, (name, w)) in configs().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        for i in 0..200 {
            let set = random_star_set(w.cone, n, &mut rng).unwrap();
            let d = geometry::deficit(&set, &w).unwrap().deficit;
            worst = worst.min(d);
            c.require(d >= -5.0 / n as f64, || format!("{name} set {i}: δ = {d:e}"));
        }
    }
    c.runtime(start, Duration::from_secs(60));
    c.summary = format!("600 random sets, min δ_w = {worst:.3e} (floor {:.3e})", -5.0 / n as f64);
    c
}

fn minimizers() -> Check {
    let mut c = Check::new();
    let mut worst = (0.0f64, 0.0f64);
    for (name, w) in configs() {
        for r in [0.5, 1.0, 2.0] {
            let b = StarSet::ball(w.cone, 4096, r).unwrap();
            let d = geometry::deficit(&b, &w).unwrap().deficit;
            let (a, _) = geometry::asymmetry(&b, &w).unwrap();
            worst = (worst.0.max(d.abs()), worst.1.max(a));
            c.require(d.abs() <= 1e-9 && a <= 1e-6, || format!("{name} r = {r}: δ = {d:e}, A = {a:e}"));
        }
    }
    let w = HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap();
    let set = StarSet::translated_ball(w.cone, 4096, [0.3, 0.0], 1.0).unwrap();
    let (a, x0) = geometry::asymmetry(&set, &w).unwrap();
    let err = (x0[0] - 0.3).hypot(x0[1]);
    c.require(a <= 2e-3 && err <= 5e-3, || format!("translated ball: A = {a:e}, x0 = {x0:?}"));
    c.summary = format!("balls: max |δ| {:.1e}, max A {:.1e}; B_1((0.3,0)): A {a:.1e}, |x0 - (0.3,0)| {err:.1e}", worst.0, worst.1);
    c
}

fn sharpness() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let mut parts = vec![];
    let cases = [(xy(), 4, "quadrant xy"), (HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap(), 2, "half-plane y")];
    for (w, m, name) in cases {
        let s = sharpness_sweep(&w, m, &[0.02, 0.04, 0.08, 0.16], 4096).unwrap();
        let sp = spread(&s.delta_over_eps2);
        c.require((s.fit.slope - 0.5).abs() <= 0.05, || format!("{name}: slope {}", s.fit.slope));
        c.require(sp <= 0.2, || format!("{name}: δ/ε² spread {sp}"));
        parts.push(format!("{name} slope {:.4}, δ/ε² spread {:.1}%", s.fit.slope, 100.0 * sp));
    }
    c.runtime(start, Duration::from_secs(120));
    c.summary = parts.join("; ");
    c
}

fn stability() -> Check {
    let mut c = Check::new();
    let w = xy();
    let corpus = default_corpus();
    let a = stability_sweep(&w, &corpus, 4096, None, None).unwrap();
    let b = stability_sweep(&w, &corpus, 8192, None, None).unwrap();
    let (m0, m1) = (a.max_ratio.unwrap_or(f64::NAN), b.max_ratio.unwrap_or(f64::NAN));
    let pinned = num(&expectations()["stability"]["c_max_measured"]);
    c.require(m0.is_finite() && m1.is_finite(), || "max ratio not finite".into());
    c.require((m1 / m0 - 1.0).abs() < 0.25, || format!("doubling moved the max ratio {m0} -> {m1}"));
    c.require((m0 / pinned - 1.0).abs() < 0.25, || format!("max ratio {m0} vs pinned {pinned}"));
    c.require(a.uniqueness_ok && b.uniqueness_ok, || "uniqueness probe failed".into());
    c.summary = format!("C = {m0:.6} at n = 4096, {m1:.6} at 8192, pinned {pinned}");
    c
}

/// Ball plus the perturbed family at h = 0.02, shared by criteria 5 and 6.
fn coupling_family() -> Vec<(String, isocone::coupling::CouplingReport)> {
    let w = xy();
    let mut out = vec![];
    let ball = StarSet::ball(w.cone, 4096, 1.0).unwrap();
    out.push(("ball".into(), build_coupling(&ball, Mode::Weighted(&w), Resolutions::new(0.02)).unwrap()));
    for eps in [0.05, 0.1, 0.2] {
        let set = StarSet::perturbed_ball(&w, 4096, eps, 4).unwrap();
        out.push((format!("ε = {eps}"), build_coupling(&set, Mode::Weighted(&w), Resolutions::new(0.02)).unwrap()));
    }
    out
}

/// Calibrated bound on the energy error of the ball solution over h
/// (measured 0.080 at h = 0.1 and 0.084 at h = 0.05).
const H1_CONSTANT: f64 = 0.1;

fn coupling(family: &[(String, isocone::coupling::CouplingReport)], elapsed: Duration) -> Check {
    let mut c = Check::new();
    let w = xy();
    let ball = StarSet::ball(w.cone, 4096, 1.0).unwrap();
    let err = |h: f64| {
        let m = fan_triangulate(&ball, h).unwrap();
        let u = solve_neumann(&m, Problem::Weighted(&w)).unwrap();
        energy_error(&m, &u.values, Some(&w), |x| x)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    c.require(e1 / e2 >= 1.8, || format!("H1 order {e1:e} -> {e2:e}"));
    c.require(e1 <= H1_CONSTANT * 0.1 && e2 <= H1_CONSTANT * 0.05, || format!("H1 error {e1:e}, {e2:e} over C h"));
    let (lo, hi) = bisector_box(&w.cone);
    let mut hess = vec![];
    for (name, r) in family {
        c.require(r.sup_violation <= r.sup_tolerance(), || format!("{name}: sup {} > {}", r.sup_violation, r.sup_tolerance()));
        c.require(r.range_hausdorff <= 2.0 * r.slope_spacing, || format!("{name}: range {}", r.range_hausdorff));
        c.require(r.lip_grad <= 2.0 * r.b_e, || format!("{name}: lip {}", r.lip_grad));
        match verify_coupling_estimates(r, lo, hi) {
            Ok(t) => {
                c.require(t.within(&PILOT_BOUNDS), || format!("{name}: {t:?}"));
                hess.push(t.hessian_ratio);
            }
            Err(Error::MinimizerDegenerate(_)) if name == "ball" => {}
            Err(e) => c.failures.push(format!("{name}: {e}")),
        }
    }
    let (min, max) = hess.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    c.require(max <= 3.0 * min, || format!("hessian ratios vary {min}..{max}"));
    c.require(elapsed <= Duration::from_secs(300), || format!("family took {elapsed:?}"));
    let worst = family.iter().map(|(_, r)| r.sup_violation / r.sup_tolerance()).fold(0.0, f64::max);
    c.summary = format!(
        "H1 error {e1:.2e} -> {e2:.2e} (order {:.2}), sup/tol ≤ {worst:.2}, hessian ratio {min:.3}..{max:.3}, family {:.0}s",
        e1 / e2,
        elapsed.as_secs_f64()
    );
    c
}

fn abp_chain(family: &[(String, isocone::coupling::CouplingReport)]) -> Check {
    let mut c = Check::new();
    let mut ball_gap = 0.0f64;
    for (name, r) in family {
        match abp_chain_check(r) {
            Ok(ch) => {
                if name == "ball" {
                    ball_gap = ch.excess.iter().fold(0.0, |m, e| m.max(e.abs()));
                    c.require(ball_gap <= 1e-2, || format!("ball links {:?}", ch.excess));
                } else {
                    c.require(ch.excess.iter().all(|e| *e <= 0.0), || format!("{name}: links {:?}", ch.excess));
                }
            }
            Err(e) => c.failures.push(format!("{name}: {e}")),
        }
    }
    // halved resolution on the largest perturbation
    let w = xy();
    let set = StarSet::perturbed_ball(&w, 2048, 0.2, 4).unwrap();
    let r = build_coupling(&set, Mode::Weighted(&w), Resolutions::new(0.04)).unwrap();
    match abp_chain_check(&r) {
        Ok(ch) => c.require(ch.excess.iter().all(|e| *e <= 0.0), || format!("coarse ε = 0.2: {:?}", ch.excess)),
        Err(e) => c.failures.push(format!("coarse ε = 0.2: {e}")),
    }
    c.summary = format!("ordered on {} inputs, ball links within {ball_gap:.1e}", family.len() + 1);
    c
}

fn amgm() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let (l, x, cc) = sample_amgm_input(&mut rng);
        let r = quantitative_amgm_check(&l, &x, cc).unwrap();
        violations += usize::from(!r.holds);
        if r.rhs > 0.0 {
            worst = worst.max(r.lhs / r.rhs);
        }
    }
    c.require(violations == 0, || format!("{violations} violations"));
    c.runtime(start, Duration::from_secs(5));
    c.summary = format!("10^5 inputs, {violations} violations, max lhs/rhs {worst:.4}");
    c
}

fn one_dim() -> Check {
    let mut c = Check::new();
    let ex = expectations();
    let ls = nums(&ex["c_gamma"]["l"]);
    let mut max = 0.0f64;
    for (g, key) in [(0.0, "gamma_0"), (1.0, "gamma_1"), (2.0, "gamma_2")] {
        for (l, pinned) in ls.iter().zip(nums(&ex["c_gamma"][key])) {
            let m = exhaustive_stability_max(g, *l, 0.05, 3.0, 3, false).unwrap();
            max = max.max(m.max_ratio);
            // attained by the empty set, where the ratio is (2l)^(γ+1)
            let closed = (2.0 * l).powf(g + 1.0);
            c.require(m.max_ratio.is_finite(), || format!("γ = {g}, l = {l}: unbounded"));
            c.require((m.max_ratio - closed).abs() <= 1e-9 * closed, || format!("γ = {g}, l = {l}: {} vs {closed}", m.max_ratio));
            c.require((m.max_ratio - pinned).abs() <= 1e-9 * pinned, || format!("γ = {g}, l = {l}: {} vs pinned {pinned}", m.max_ratio));
        }
    }
    let e = IntervalSet::new(vec![(0.0, 0.8)]).unwrap();
    let r = one_dim_stability_check(&e, 1.0, 2.0, 1.0, false).unwrap();
    let worked = (1.0 - 0.512) / 3.0 / (0.64 * 0.2);
    c.require((r.ratio - worked).abs() <= 1e-6, || format!("worked ratio {}", r.ratio));
    c.summary = format!("9 families finite, largest C_γ {max}; worked ratio {:.6}", r.ratio);
    c
}

fn fmp() -> Check {
    let mut c = Check::new();
    for d in [2.5, 3.0, 4.0, 7.2] {
        let k = psi_k(d).unwrap();
        let v = k.lower_bound_violations(1000);
        c.require(v == 0 && k.strictly_concave(), || format!("D = {d}: {v} violations"));
    }
    let e = IntervalSet::new(vec![(1.0, 2.0)]).unwrap();
    let ch = cheeger_1d(&e, 2.0, MAX_CHEEGER_GRID).unwrap();
    c.require((ch.tau - 1.6815).abs() <= 1e-3, || format!("τ = {}", ch.tau));
    let f = StepFunction::new(vec![1.5], vec![0.0, 1.0]).unwrap();
    let t = trace_poincare_check_1d(&e, &f, 2.0, ch.tau).unwrap();
    c.require(
        (t.lhs - 2.25).abs() <= 1e-3 && (t.trace_rhs - 0.6815).abs() <= 1e-3 && (t.poincare_rhs - 1.0405).abs() <= 1e-3,
        || format!("{t:?}"),
    );
    c.require(t.trace_holds && t.poincare_holds, || format!("{t:?}"));
    // removal lemma on necked sets: pieces cut off by narrow necks
    let w = xy();
    let n = 2049;
    let step = std::f64::consts::FRAC_PI_2 / (n - 1) as f64;
    let idx = |t: f64| (t / step).round() as usize;
    let (mut applicable, mut total) = (0, 0);
    for depth in [0.5, 0.85, 0.95] {
        for (a, b) in [(0.5, 1.0), (0.3, 0.7), (0.2, 1.3), (0.9, 1.4)] {
            let set = StarSet::from_fn(w.cone, n, |t| {
                1.0 - depth * [a, b].iter().map(|c: &f64| (-((t - c) / 0.02).powi(2)).exp()).sum::<f64>()
            })
            .unwrap();
            let r = removal_lemma_check(&set, &w, idx(a), idx(b)).unwrap();
            total += 1;
            if r.applicable {
                applicable += 1;
                let ok = r.holds_i == Some(true) && r.holds_ii == Some(true) && r.holds_iii != Some(false);
                c.require(ok, || format!("removal ({a}, {b}) depth {depth}: {r:?}"));
            }
        }
    }
    c.require(applicable > 0, || "no applicable removal subset".into());
    c.summary = format!(
        "Ψ bound clean for 4 D; τ((1,2)) = {:.4}; LHS {:.4} ≥ max({:.4}, {:.4}); removal {applicable}/{total} applicable, all hold",
        ch.tau, t.lhs, t.trace_rhs, t.poincare_rhs
    );
    c
}

fn wulff() -> Check {
    let mut c = Check::new();
    let plane = Cone::plane();
    let set = StarSet::from_fn(plane, 4096, |t| 1.0 / t.cos().abs().max(t.sin().abs())).unwrap();
    let k = SlopeBody::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], 1.0 / 64.0).unwrap();
    // the square has corners, so measure on the boundary polygon
    let poly = set.boundary_polygon();
    let per = geometry::polygon_anisotropic_perimeter(&poly, |v| support_function(&k, v));
    let area = geometry::polygon_area(&poly);
    let def = anisotropic_deficit(&set, &k);
    c.require((per - 8.0).abs() <= 1e-9 && (area - 4.0).abs() <= 1e-9, || format!("Per_K = {per}, |E| = {area}"));
    c.require(def.abs() <= 1e-9, || format!("deficit {def:e}"));
    let r = build_coupling(&set, Mode::Anisotropic(&k), Resolutions::new(0.04)).unwrap();
    c.require(r.range_hausdorff <= 2.0 * r.slope_spacing, || format!("range {} vs spacing {}", r.range_hausdorff, r.slope_spacing));
    c.summary = format!("Per_K = {per:.12}, |E| = {area:.12}, deficit {def:.1e}, range {:.3e} ≤ 2 × {:.3e}", r.range_hausdorff, r.slope_spacing);
    c
}

fn diagnostics() -> Check {
    let mut c = Check::new();
    let mut worst = (0.0f64, 0.0f64);
    for a in [[1.0, 1.0], [1.0, 0.0]] {
        let w = HomWeight::monomial(Cone::quadrant(), a).unwrap();
        let q = diagnostic_box(&w.cone);
        let d = translation_diagnostics(&w, &DEFAULT_DIAG_T, q, 200).unwrap();
        let root = |x: f64, y: f64| x.powf(a[0] / (a[0] + a[1])) * y.powf(a[1] / (a[0] + a[1]));
        for r in d.rows.iter().filter(|r| r.t > 0.0) {
            let xi = [r.dir[0] * r.t, r.dir[1] * r.t];
            let g = (r.growth - tensor_growth(&w, xi, 5e-4)).abs();
            let s = (r.separation - tensor_separation(root, q.0, q.1, xi, 1000)).abs();
            worst = (worst.0.max(g), worst.1.max(s));
            c.require(g <= 1e-3 && s <= 1e-3, || format!("{a:?} {} t = {}: growth off {g:e}, separation off {s:e}", r.direction, r.t));
            if a == [1.0, 0.0] && r.direction == "(0.000000,1.000000)" {
                c.require(r.separation == 0.0, || format!("constancy separation {}", r.separation));
            }
        }
    }
    c.summary = format!("max deviation from oracles: growth {:.1e}, separation {:.1e}; constancy case exactly 0", worst.0, worst.1);
    c
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let family = coupling_family();
    let family_time = start.elapsed();
    let results = [
        (1, "isoperimetric nonnegativity", nonnegativity()),
        (2, "minimizer exactness", minimizers()),
        (3, "sharpness exponent", sharpness()),
        (4, "stability bound", stability()),
        (5, "coupling pipeline", coupling(&family, family_time)),
        (6, "ABP chain", abp_chain(&family)),
        (7, "quantitative AM-GM", amgm()),
        (8, "1-D stability", one_dim()),
        (9, "FMP toolkit", fmp()),
        (10, "Wulff equality", wulff()),
        (11, "translation diagnostics", diagnostics()),
    ];
    let mut err = std::io::stderr().lock();
    let mut failed = vec![];
    // libtest has already written "test acceptance ... " on this line
    writeln!(err).unwrap();
    for (i, name, c) in &results {
        let status = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        writeln!(err, "{status} {i:>2} {name}: {}", c.summary).unwrap();
        for f in &c.failures {
            writeln!(err, "        {f}").unwrap();
        }
        if !c.failures.is_empty() {
            failed.push(*i);
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
