use isocone::coupling::{abp_chain_check, anisotropic_deficit, build_coupling, verify_coupling_estimates, Mode, Resolutions};
use isocone::envelope::SlopeBody;
use isocone::{Cone, Error, HomWeight, StarSet};

fn xy() -> HomWeight {
    HomWeight::monomial(Cone::quadrant(), [1.0, 1.0]).unwrap()
}

#[test]
fn ball_envelope_is_half_square_norm() {
    let w = xy();
    let set = StarSet::ball(w.cone, 1024, 1.0).unwrap();
    let r = build_coupling(&set, Mode::Weighted(&w), Resolutions::default()).unwrap();
    assert!(r.hessian_l1 <= 1e-2, "hessian_l1 {}", r.hessian_l1);
    assert!(r.sup_violation <= 1e-2, "sup {}", r.sup_violation);
    assert!(r.range_hausdorff <= 2.0 * r.slope_spacing);
    assert!(r.lip_grad <= 2.0 * r.b_e);
    let chain = abp_chain_check(&r).unwrap();
    for e in chain.excess {
        assert!(e.abs() <= 1e-2, "{:?}", chain.excess);
    }
    assert!((chain.perimeter_term / chain.deficit_term - 1.0).abs() <= 1e-2);
    match verify_coupling_estimates(&r, [0.2, 0.2], [0.6, 0.6]) {
        Err(Error::MinimizerDegenerate(_)) => {}
        other => panic!("expected degenerate signal, got {other:?}"),
    }
}

#[test]
fn unit_disk_with_round_body() {
    let plane = Cone::plane();
    let set = StarSet::ball(plane, 1024, 1.0).unwrap();
    let k = SlopeBody::sector_disk(plane, 1.0, 128, 1024).unwrap();
    let res = Resolutions { n_slope: 256, ..Resolutions::new(0.04) };
    let r = build_coupling(&set, Mode::Anisotropic(&k), res).unwrap();
    assert!(r.range_hausdorff <= 2.0 * r.slope_spacing, "{} vs {}", r.range_hausdorff, r.slope_spacing);
    // b_E = Per_K / |E| = 2
    assert!((r.b_e - 2.0).abs() < 1e-3);
    assert!(r.sup_violation <= r.sup_tolerance(), "{} > {}", r.sup_violation, r.sup_tolerance());
    let table = verify_coupling_estimates(&r, [0.2, 0.2], [0.6, 0.6]).unwrap();
    assert!(table.boundary_ratio.is_none() && table.hessian_ratio.is_finite());
}

#[test]
fn square_is_its_own_wulff_shape() {
    let plane = Cone::plane();
    let set = StarSet::from_fn(plane, 4096, |t| 1.0 / t.cos().abs().max(t.sin().abs())).unwrap();
    let k = SlopeBody::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], 1.0 / 64.0).unwrap();
    assert!(anisotropic_deficit(&set, &k).abs() <= 1e-9);
    let r = build_coupling(&set, Mode::Anisotropic(&k), Resolutions::new(0.04)).unwrap();
    assert!(r.range_hausdorff <= 2.0 * r.slope_spacing, "{} vs {}", r.range_hausdorff, r.slope_spacing);
}

#[test]
fn perturbed_ball_quantities_are_finite() {
    let w = xy();
    let set = StarSet::perturbed_ball(&w, 1024, 0.1, 4).unwrap();
    let r = build_coupling(&set, Mode::Weighted(&w), Resolutions::default()).unwrap();
    let t = verify_coupling_estimates(&r, [0.2, 0.2], [0.6, 0.6]).unwrap();
    for v in [r.hessian_l1, r.boundary_term, t.weight_term.unwrap(), r.sup_violation] {
        assert!(v.is_finite());
    }
    assert!(r.hessian_l1 >= 0.0 && r.boundary_term >= -1e-12);
    assert!(t.within(&isocone::coupling::PILOT_BOUNDS), "{t:?}");
    let chain = abp_chain_check(&r).unwrap();
    assert!(chain.excess.iter().all(|e| *e < 0.0), "strict links {:?}", chain.excess);
}
