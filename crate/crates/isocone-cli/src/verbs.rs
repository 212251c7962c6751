use crate::config::RunConfig;
use crate::emit::Table;
use isocone::analysis::{
    cheeger_1d, exhaustive_stability_max, one_dim_stability_check, psi, psi_k, quantitative_amgm_check, sample_amgm_input,
    trace_poincare_check_1d, IntervalSet, StepFunction, MAX_CHEEGER_GRID,
};
use isocone::coupling::{abp_chain_check, anisotropic_deficit, build_coupling, verify_coupling_estimates, Mode};
use isocone::experiments::{
    bisector_box, default_corpus, diagnostic_box, opening_sweep, sharpness_sweep, stability_sweep, translation_diagnostics,
    SweepResult, DEFAULT_DIAG_T,
};
use isocone::geometry::{asymmetry, deficit};
use isocone::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const VERBS: [&str; 9] =
    ["measure", "couple", "sweep", "sharpness", "diag", "check-amgm", "check-1d", "check-fmp", "envelope"];

pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    /// False when an inequality that must hold did not.
    pub verified: bool,
    pub summary: Value,
}

impl Outcome {
    fn one(name: &str, table: Table, verified: bool, summary: Value) -> Self {
        Outcome { tables: vec![(name.to_string(), table)], verified, summary }
    }
}

pub enum Failure {
    /// Bad input or a violated precondition.
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ChainViolation(_) => Failure::Verification(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type VerbResult = Result<Outcome, Failure>;

pub fn run(verb: &str, cfg: &RunConfig, seed: u64) -> VerbResult {
    match verb {
        "measure" => measure(cfg),
        "couple" => couple(cfg),
        "sweep" => sweep(cfg),
        "sharpness" => sharpness(cfg),
        "diag" => diag(cfg),
        "check-amgm" => check_amgm(cfg, seed),
        "check-1d" => check_1d(cfg),
        "check-fmp" => check_fmp(cfg),
        "envelope" => envelope(cfg),
        other => Err(Failure::Usage(format!("unknown verb '{other}'"))),
    }
}

fn measure(cfg: &RunConfig) -> VerbResult {
    let w = cfg.weight()?;
    let set = cfg.star_set(Some(&w))?;
    let rep = deficit(&set, &w)?;
    let (asym, x0) = asymmetry(&set, &w)?;
    let n = set.n();
    let mut t = Table::new(&["n_theta", "w_volume", "w_perimeter", "delta_w", "r_eq", "asym", "x0_1", "x0_2"]);
    t.push(vec![
        n.into(),
        rep.w_volume.into(),
        rep.w_perimeter.into(),
        rep.deficit.into(),
        rep.r_eq.into(),
        asym.into(),
        x0[0].into(),
        x0[1].into(),
    ]);
    // the isoperimetric inequality up to the discretisation bias
    let ok = rep.deficit >= -5.0 / n as f64;
    Ok(Outcome::one("measure", t, ok, json!({ "delta_w": rep.deficit, "asym": asym })))
}

fn couple(cfg: &RunConfig) -> VerbResult {
    let res = cfg.resolutions();
    let body = cfg.body()?;
    let mut t = Table::new(&[
        "delta",
        "hessian_l1",
        "boundary_term",
        "weight_term",
        "sup_violation",
        "sup_tolerance",
        "range_hausdorff",
        "slope_spacing",
        "hessian_ratio",
        "boundary_ratio",
        "weight_ratio",
        "chain_1",
        "chain_2",
        "chain_3",
    ]);
    let (report, chain) = match &body {
        Some(k) => {
            let set = cfg.star_set(None)?;
            let r = build_coupling(&set, Mode::Anisotropic(k), res)?;
            (r, None)
        }
        None => {
            let w = cfg.weight()?;
            let set = cfg.star_set(Some(&w))?;
            let r = build_coupling(&set, Mode::Weighted(&w), res)?;
            let chain = abp_chain_check(&r);
            (r, Some(chain))
        }
    };
    let (lo, hi) = bisector_box(&cfg.cone()?);
    let ratios = match verify_coupling_estimates(&report, lo, hi) {
        Ok(t) => Some(t),
        Err(Error::MinimizerDegenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut ok = report.sup_violation <= report.sup_tolerance() && report.range_hausdorff <= 2.0 * report.slope_spacing;
    let mut message = Value::Null;
    let excess: [Option<f64>; 3] = match chain {
        Some(Ok(c)) => c.excess.map(Some),
        Some(Err(e)) => {
            ok = false;
            message = json!(e.to_string());
            [None; 3]
        }
        None => [None; 3],
    };
    t.push(vec![
        report.delta.into(),
        report.hessian_l1.into(),
        report.boundary_term.into(),
        ratios.and_then(|r| r.weight_term).into(),
        report.sup_violation.into(),
        report.sup_tolerance().into(),
        report.range_hausdorff.into(),
        report.slope_spacing.into(),
        ratios.map(|r| r.hessian_ratio).into(),
        ratios.and_then(|r| r.boundary_ratio).into(),
        ratios.and_then(|r| r.weight_ratio).into(),
        excess[0].into(),
        excess[1].into(),
        excess[2].into(),
    ]);
    Ok(Outcome::one("couple", t, ok, json!({ "chain": message, "b_e": report.b_e })))
}

fn sweep_table(r: &SweepResult) -> Table {
    let mut t = Table::new(&["param", "delta_w", "asym", "ratio"]);
    for row in &r.rows {
        t.push(vec![row.param.into(), row.delta_w.into(), row.asym.into(), row.ratio.into()]);
    }
    t
}

fn sweep(cfg: &RunConfig) -> VerbResult {
    let n = cfg.resolutions.n_theta;
    if let Some(openings) = &cfg.params.openings {
        let exps = match cfg.weight {
            crate::config::WeightSpec::Monomial(a) => a,
            _ => return Err(Failure::Usage("an opening sweep needs a monomial weight".into())),
        };
        let r = opening_sweep(openings, exps, cfg.params.eps.as_ref().and_then(|e| e.first().copied()).unwrap_or(0.1), cfg.params.mode.unwrap_or(4), n)?;
        return Ok(Outcome::one("sweep", sweep_table(&r), true, json!({ "max_ratio": r.max_ratio() })));
    }
    let w = cfg.weight()?;
    let corpus = cfg.corpus.clone().unwrap_or_else(default_corpus);
    let coupling = cfg.params.coupling.unwrap_or(false).then(|| cfg.resolutions());
    let s = stability_sweep(&w, &corpus, n, cfg.params.c_max, coupling)?;
    let ok = s.uniqueness_ok && s.over_c_max.is_empty();
    let summary = json!({
        "max_ratio": s.max_ratio,
        "uniqueness_ok": s.uniqueness_ok,
        "over_c_max": s.over_c_max,
        "members": corpus.len(),
    });
    let mut tables = vec![("sweep".to_string(), sweep_table(&s.result))];
    if coupling.is_some() {
        let mut t = Table::new(&["param", "hessian_ratio", "boundary_ratio", "weight_ratio"]);
        for row in &s.result.rows {
            let c = row.coupling;
            t.push(vec![
                row.param.into(),
                c.map(|c| c.hessian_ratio).into(),
                c.and_then(|c| c.boundary_ratio).into(),
                c.and_then(|c| c.weight_ratio).into(),
            ]);
        }
        tables.push(("coupling".to_string(), t));
    }
    Ok(Outcome { tables, verified: ok, summary })
}

fn sharpness(cfg: &RunConfig) -> VerbResult {
    let w = cfg.weight()?;
    let eps = cfg.params.eps.clone().unwrap_or_else(|| vec![0.02, 0.04, 0.08, 0.16]);
    let s = sharpness_sweep(&w, cfg.params.mode.unwrap_or(4), &eps, cfg.resolutions.n_theta)?;
    let summary = json!({
        "slope": s.fit.slope,
        "intercept": s.fit.intercept,
        "delta_over_eps2": s.delta_over_eps2,
    });
    Ok(Outcome::one("sharpness", sweep_table(&s.result), true, summary))
}

fn diag(cfg: &RunConfig) -> VerbResult {
    let w = cfg.weight()?;
    let t_list = cfg.params.t.clone().unwrap_or_else(|| DEFAULT_DIAG_T.to_vec());
    let q = cfg.params.q_box.map(|b| (b[0], b[1])).unwrap_or_else(|| diagnostic_box(&w.cone));
    let d = translation_diagnostics(&w, &t_list, q, cfg.params.n_sep.unwrap_or(200))?;
    let mut t = Table::new(&["direction", "t", "growth", "separation"]);
    for r in &d.rows {
        t.push(vec![r.direction.clone().into(), r.t.into(), r.growth.into(), r.separation.into()]);
    }
    Ok(Outcome::one("diag", t, true, json!({ "fits": d.fits })))
}

fn check_amgm(cfg: &RunConfig, seed: u64) -> VerbResult {
    let p = &cfg.params;
    if let Some(n) = p.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut violations, mut worst) = (0usize, 0.0f64);
        for _ in 0..n {
            let (l, x, c) = sample_amgm_input(&mut rng);
            let r = quantitative_amgm_check(&l, &x, c)?;
            violations += usize::from(!r.holds);
            if r.rhs > 0.0 {
                worst = worst.max(r.lhs / r.rhs);
            }
        }
        let mut t = Table::new(&["samples", "violations", "worst_ratio"]);
        t.push(vec![n.into(), violations.into(), worst.into()]);
        return Ok(Outcome::one("check-amgm", t, violations == 0, json!({ "violations": violations })));
    }
    let (Some(l), Some(x), Some(c)) = (&p.lambda, &p.x, p.c) else {
        return Err(Failure::Usage("check-amgm needs params.lambda, params.x and params.c, or params.samples".into()));
    };
    let r = quantitative_amgm_check(l, x, c)?;
    let mut t = Table::new(&["lhs", "rhs", "holds"]);
    t.push(vec![r.lhs.into(), r.rhs.into(), r.holds.into()]);
    Ok(Outcome::one("check-amgm", t, r.holds, Value::Null))
}

fn intervals(cfg: &RunConfig) -> Result<Option<IntervalSet>, Failure> {
    match &cfg.params.intervals {
        Some(iv) => Ok(Some(IntervalSet::new(iv.iter().map(|p| (p[0], p[1])).collect())?)),
        None => Ok(None),
    }
}

fn check_1d(cfg: &RunConfig) -> VerbResult {
    let p = &cfg.params;
    let (l, gamma) = (p.l.unwrap_or(1.0), p.gamma.unwrap_or(0.0));
    let include_origin = p.include_origin.unwrap_or(false);
    match intervals(cfg)? {
        Some(e) => {
            let c = p.c_gamma.unwrap_or(1.0);
            let r = one_dim_stability_check(&e, l, gamma, c, include_origin)?;
            let holds = r.lhs <= r.rhs * (1.0 + 1e-12) || p.c_gamma.is_none();
            let mut t = Table::new(&["lhs", "denominator", "rhs", "ratio"]);
            t.push(vec![r.lhs.into(), r.denominator.into(), r.rhs.into(), r.ratio.into()]);
            Ok(Outcome::one("check-1d", t, holds, Value::Null))
        }
        None => {
            let m = exhaustive_stability_max(gamma, l, 0.05, 3.0, 3, include_origin)?;
            let mut t = Table::new(&["gamma", "l", "max_ratio", "sets"]);
            t.push(vec![m.gamma.into(), m.l.into(), m.max_ratio.into(), (m.sets as usize).into()]);
            let ok = p.c_gamma.is_none_or(|c| m.max_ratio <= c);
            Ok(Outcome::one("check-1d", t, ok, json!({ "argmax": m.argmax })))
        }
    }
}

fn check_fmp(cfg: &RunConfig) -> VerbResult {
    let p = &cfg.params;
    let ds = p.d.clone().unwrap_or_else(|| vec![2.5, 3.0, 4.0, 7.2]);
    let mut ok = true;
    let mut t = Table::new(&["d", "k", "psi_half", "violations", "concave"]);
    for d in ds {
        let c = psi_k(d)?;
        let v = c.lower_bound_violations(1000);
        let concave = c.strictly_concave();
        ok &= v == 0 && concave;
        t.push(vec![d.into(), c.k.into(), psi(0.5, d).into(), v.into(), concave.into()]);
    }
    let mut tables = vec![("check-fmp".to_string(), t)];
    if let Some(e) = intervals(cfg)? {
        let gamma = p.gamma.unwrap_or(0.0);
        let ch = cheeger_1d(&e, gamma, MAX_CHEEGER_GRID)?;
        let mut t = Table::new(&["tau", "tau_minus_one", "best_connected", "best_disconnected"]);
        t.push(vec![ch.tau.into(), ch.tau_minus_one.into(), ch.best_connected.into(), ch.best_disconnected.into()]);
        tables.push(("cheeger".to_string(), t));
        if let (Some(k), Some(v)) = (&p.f_knots, &p.f_values) {
            let f = StepFunction::new(k.clone(), v.clone())?;
            let r = trace_poincare_check_1d(&e, &f, gamma, ch.tau)?;
            ok &= r.trace_holds && r.poincare_holds;
            let mut t = Table::new(&["c", "lhs", "trace_rhs", "poincare_rhs", "trace_holds", "poincare_holds"]);
            t.push(vec![
                r.c.into(),
                r.lhs.into(),
                r.trace_rhs.into(),
                r.poincare_rhs.into(),
                r.trace_holds.into(),
                r.poincare_holds.into(),
            ]);
            tables.push(("trace-poincare".to_string(), t));
        }
    }
    Ok(Outcome { tables, verified: ok, summary: Value::Null })
}

fn envelope(cfg: &RunConfig) -> VerbResult {
    let res = cfg.resolutions();
    let body = cfg.body()?;
    let report = match &body {
        Some(k) => build_coupling(&cfg.star_set(None)?, Mode::Anisotropic(k), res)?,
        None => {
            let w = cfg.weight()?;
            build_coupling(&cfg.star_set(Some(&w))?, Mode::Weighted(&w), res)?
        }
    };
    let f = &report.field;
    let mut t = Table::new(&["x", "y", "phi", "xi_1", "xi_2"]);
    for j in 0..f.ny {
        for i in 0..f.nx {
            let (x, k) = (f.node(i, j), f.idx(i, j));
            t.push(vec![x[0].into(), x[1].into(), f.phi[k].into(), f.xi[k][0].into(), f.xi[k][1].into()]);
        }
    }
    let mut s = Table::new(&["lip_grad", "range_hausdorff", "convexity_violation", "slope_spacing"]);
    s.push(vec![
        report.lip_grad.into(),
        report.range_hausdorff.into(),
        report.convexity_violation.into(),
        report.slope_spacing.into(),
    ]);
    let summary = match &body {
        Some(k) => json!({ "anisotropic_deficit": anisotropic_deficit(&cfg.star_set(None)?, k) }),
        None => Value::Null,
    };
    Ok(Outcome { tables: vec![("envelope".into(), t), ("c11".into(), s)], verified: true, summary })
}
