use isocone::experiments::*;
use isocone::{Cone, Error, HomWeight};
use std::f64::consts::FRAC_PI_2;

mod common;
use common::{expectations, num, nums, spread, tensor_growth, tensor_separation};

const EPS: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

#[test]
fn sharpness_exponent_on_both_configurations() {
    let ex = expectations();
    let cases = [
        (HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap(), 4, "quadrant_xy_m4"),
        (HomWeight::monomial(Cone::half_plane(), [0.0, 1.0]).unwrap(), 2, "half_plane_y_m2"),
    ];
    for (w, m, key) in cases {
        let s = sharpness_sweep(&w, m, &EPS, 4096).unwrap();
        assert!((s.fit.slope - 0.5).abs() <= 0.05, "{key}: slope {}", s.fit.slope);
        assert!(spread(&s.delta_over_eps2) <= 0.2, "{key}: {:?}", s.delta_over_eps2);
        let pinned = &ex["sharpness"][key];
        assert!((s.fit.slope - num(&pinned["slope"])).abs() <= 1e-4, "{key}: {}", s.fit.slope);
        assert!((s.fit.intercept - num(&pinned["intercept"])).abs() <= 1e-4);
        for (got, want) in s.delta_over_eps2.iter().zip(nums(&pinned["delta_over_eps2"])) {
            assert!((got / want - 1.0).abs() <= 1e-5, "{key}: {got} vs {want}");
        }
        assert!(s.result.rows.windows(2).all(|p| p[0].param < p[1].param));
        assert!(s.result.rows.iter().all(|r| r.ratio.is_some() && r.coupling.is_none()));
    }
}

#[test]
fn sharpness_rejects_bad_lists() {
    let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
    assert!(matches!(sharpness_sweep(&w, 4, &[0.1], 512), Err(Error::FitRejected(_))));
    assert!(matches!(sharpness_sweep(&w, 4, &[0.1, 0.2, 0.3], 512), Err(Error::InvalidArgument(_))));
}

#[test]
fn stability_corpus_is_resolution_stable() {
    let ex = expectations();
    let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
    let corpus = default_corpus();
    let c_max = num(&ex["stability"]["c_max_configured"]);
    let coarse = stability_sweep(&w, &corpus, 4096, Some(c_max), None).unwrap();
    let fine = stability_sweep(&w, &corpus, 8192, Some(c_max), None).unwrap();
    for s in [&coarse, &fine] {
        assert!(s.uniqueness_ok && s.over_c_max.is_empty(), "{:?}", s.over_c_max);
        assert_eq!(s.result.rows.len(), 30);
    }
    for (a, b) in coarse.result.rows.iter().zip(&fine.result.rows) {
        match (a.ratio, b.ratio) {
            (Some(x), Some(y)) => assert!((x / y - 1.0).abs() < 0.25, "member {}: {x} vs {y}", a.param),
            (None, None) => {}
            other => panic!("member {}: {other:?}", a.param),
        }
    }
    let (m0, m1) = (coarse.max_ratio.unwrap(), fine.max_ratio.unwrap());
    assert!((m0 / m1 - 1.0).abs() < 0.25);
    let pinned = num(&ex["stability"]["c_max_measured"]);
    assert!((m0 - pinned).abs() <= 1e-5, "{m0} vs {pinned}");
    assert!(coarse.result.manifest.n_theta == 4096 && coarse.result.manifest.mesh_h.is_none());
}

#[test]
fn dilated_balls_have_no_ratio() {
    let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
    let corpus: Vec<CorpusMember> = [0.5, 1.0, 2.0, 3.0].iter().map(|&rho| CorpusMember::Dilated { rho }).collect();
    let s = stability_sweep(&w, &corpus, 2048, Some(1.0), None).unwrap();
    for r in &s.result.rows {
        assert!(r.delta_w.abs() <= 1e-9 && r.asym <= 1e-6 && r.ratio.is_none(), "{r:?}");
    }
    assert!(s.max_ratio.is_none() && s.uniqueness_ok);
}

#[test]
fn corpus_ratios_agree_with_the_sharpness_fit() {
    let w = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
    let fit = sharpness_sweep(&w, 4, &EPS, 4096).unwrap().fit;
    let corpus: Vec<CorpusMember> = [0.05, 0.1, 0.15].iter().map(|&eps| CorpusMember::Perturbed { eps, m: 4 }).collect();
    let s = stability_sweep(&w, &corpus, 4096, None, None).unwrap();
    for r in &s.result.rows {
        let predicted = fit.intercept.exp() * r.delta_w.powf(fit.slope - 0.5);
        assert!((r.ratio.unwrap() / predicted - 1.0).abs() <= 0.05, "{r:?} vs {predicted}");
    }
}

#[test]
fn opening_sweep_matches_pinned_values() {
    let ex = expectations();
    let betas = nums(&ex["openings"]["beta"]);
    for (a, key) in [([1.0, 1.0], "xy"), ([0.0, 1.0], "y")] {
        let r = opening_sweep(&betas, a, 0.1, 4, 4096).unwrap();
        let ratios: Vec<f64> = r.rows.iter().map(|r| r.ratio.unwrap()).collect();
        for (got, want) in ratios.iter().zip(nums(&ex["openings"][key])) {
            assert!((got - want).abs() <= 1e-5, "{key}: {got} vs {want}");
        }
        assert!(ratios.windows(2).all(|p| p[0] < p[1]));
    }
    assert!((betas[3] - FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn diagnostics_match_tensor_oracles() {
    let ex = expectations();
    let cases = [([1.0, 1.0], "xy"), ([1.0, 0.0], "x")];
    for (a, key) in cases {
        let w = HomWeight::monomial(Cone::quadrant(), a).unwrap();
        let q = diagnostic_box(&w.cone);
        let d = translation_diagnostics(&w, &DEFAULT_DIAG_T, q, 200).unwrap();
        let root = |x: f64, y: f64| x.powf(a[0] / (a[0] + a[1])) * y.powf(a[1] / (a[0] + a[1]));
        for r in &d.rows {
            if r.t == 0.0 {
                assert_eq!((r.growth, r.separation), (0.0, 0.0));
                continue;
            }
            let xi = [r.dir[0] * r.t, r.dir[1] * r.t];
            let g = tensor_growth(&w, xi, 5e-4);
            assert!((r.growth - g).abs() <= 1e-3, "{key} {}: growth {} vs {g}", r.direction, r.growth);
            let s = tensor_separation(root, q.0, q.1, xi, 1000);
            assert!((r.separation - s).abs() <= 1e-3 * s.max(1e-6), "{key} {}: {} vs {s}", r.direction, r.separation);
        }
        for f in &d.fits {
            let pinned = num(&ex["eps_emp"][key][&f.direction]);
            assert!((f.separation_slope - pinned).abs() <= 1e-6 * pinned.max(1.0), "{key} {}", f.direction);
        }
    }
}

#[test]
fn constancy_and_remainder_directions() {
    let wx = HomWeight::monomial(Cone::quadrant(), [1.0, 0.0]).unwrap();
    let d = translation_diagnostics(&wx, &DEFAULT_DIAG_T, diagnostic_box(&wx.cone), 100).unwrap();
    for r in d.rows.iter().filter(|r| r.direction == "(0.000000,1.000000)") {
        assert_eq!(r.separation, 0.0);
        assert!(r.t == 0.0 || r.growth > 0.0);
    }
    let wxy = HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap();
    let d = translation_diagnostics(&wxy, &DEFAULT_DIAG_T, diagnostic_box(&wxy.cone), 200).unwrap();
    let anti = d.fits.iter().find(|f| f.direction == "(0.707107,-0.707107)").unwrap();
    assert!(anti.separation_slope > 0.0 && anti.separation_linearity <= 0.1, "{anti:?}");
    // every remainder direction separates at least linearly
    for f in &d.fits {
        for r in d.rows.iter().filter(|r| r.direction == f.direction && r.t > 0.0) {
            assert!(r.separation >= 0.9 * f.separation_slope * r.t);
        }
    }
}

#[test]
fn corpus_members_round_trip() {
    let corpus = default_corpus();
    let text = serde_json::to_string(&corpus).unwrap();
    let back: Vec<CorpusMember> = serde_json::from_str(&text).unwrap();
    assert_eq!(corpus, back);
    assert!(text.starts_with(r#"[{"kind":"dilated","rho":0.5}"#));
}
