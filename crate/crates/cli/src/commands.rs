use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use infreg::geom::{angular_distance, min_norm_in_slice};
use infreg::lgsolve::{certify_bound, lg_solve};
use infreg::normals::{coderivative_at_infinity, normal_cone_at_infinity, sampled_coderivative_limit};
use infreg::perturb::{build_perturbation, verify_perturbation, PerturbationSpec};
use infreg::regmod::{
    criterion_check_with_tol, estimate_reg_at_infinity, radius_report, rg_plus, strong_regularity_check,
    SamplerConfig,
};
use infreg::svmap::ZeroMap;
use infreg::tol::{CRITERION_REL_TOL, SAMPLED_ANGLE_TOL};
use infreg::{InfinityWindow, SampledMap, SetValuedMap};

use crate::report::{digest, num, nums, Output, Record, RecordBuilder};
use crate::scenario::Scenario;

/// Exit-code classes.
#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Compute(String),
}

impl From<infreg::Error> for Failure {
    fn from(e: infreg::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("i/o: {e}"))
    }
}

pub type Outcome = Result<Vec<Record>, Failure>;

pub struct Context {
    pub scenario: Scenario,
    pub map: SetValuedMap,
    pub window: InfinityWindow,
    pub cfg: SamplerConfig,
    pub tol: Option<f64>,
}

#[derive(Serialize)]
struct DigestInputs<'a> {
    check: &'a str,
    scenario: &'a Scenario,
    seed: u64,
    budget: usize,
    tol: Option<f64>,
}

impl Context {
    fn digest(&self, check: &str) -> String {
        digest(&DigestInputs {
            check,
            scenario: &self.scenario,
            seed: self.cfg.seed,
            budget: self.cfg.samples,
            tol: self.tol,
        })
    }

    fn record(&self, check: &str) -> RecordBuilder {
        RecordBuilder::new(check, &self.digest(check))
    }

    fn ybar(&self) -> &[f64] {
        &self.scenario.ybar
    }

    fn ystar(&self) -> Vec<f64> {
        self.scenario.query.as_ref().and_then(|q| q.ystar.clone()).unwrap_or_else(|| {
            let mut e = vec![0.0; self.map.m()];
            e[0] = 1.0;
            e
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

pub fn slice(ctx: &Context) -> Outcome {
    let q = ctx.scenario.query.as_ref();
    let (x, y) = (q.and_then(|q| q.x.clone()), q.and_then(|q| q.y.clone()));
    if x.is_none() && y.is_none() {
        return Err(Failure::Parse("field `query`: slice needs query.x or query.y".into()));
    }
    let mut r = ctx.record("slice");
    if let Some(x) = &x {
        let img = ctx.map.image_slice(x)?;
        r = r
            .value("image_pieces", json!(img.pieces().len()), "exact")
            .value("image_empty", json!(img.is_empty()), "exact");
    }
    if let Some(y) = &y {
        let pre = ctx.map.preimage_slice(y)?;
        r = r
            .value("preimage_pieces", json!(pre.pieces().len()), "exact")
            .value("preimage_empty", json!(pre.is_empty()), "exact");
    }
    if let (Some(x), Some(y)) = (&x, &y) {
        r = r
            .value("dist_to_image", num(ctx.map.dist_to_image(x, y)?), "projection")
            .value("dist_to_preimage", num(ctx.map.dist_to_preimage(x, y)?), "projection");
    }
    Ok(vec![r.finish(true)])
}

pub fn jelonek(ctx: &Context) -> Outcome {
    let d = ctx.map.jelonek_contains(ctx.ybar())?;
    let feasible = d.grid.iter().filter(|g| g.feasible).count();
    let r = ctx
        .record("jelonek")
        .value("contains", json!(d.contains), "exact recession test")
        .value("witnesses", json!(d.witnesses.len()), "exact recession test")
        .value("grid_feasible", json!(format!("{feasible}/{}", d.grid.len())), "eps-M grid")
        .finish(d.contains);
    Ok(vec![r])
}

pub fn normal_cone(ctx: &Context) -> Outcome {
    let m = &ctx.map;
    let (cone, strata) = normal_cone_at_infinity(m.graph(), m.n(), ctx.ybar())?;
    let tol = ctx.tol.unwrap_or(SAMPLED_ANGLE_TOL);
    let rays: Vec<Value> = cone.rays().iter().map(|r| nums(r)).collect();
    let mut r = ctx
        .record("normal-cone")
        .value("pieces", json!(cone.pieces().len()), "arrangement strata")
        .value("strata", json!(strata.len()), "arrangement strata")
        .value("rays", Value::Array(rays), "extreme rays");
    let ok = match sampled_coderivative_limit(m, ctx.ybar(), &ctx.ystar(), &ctx.window, 48, ctx.cfg.seed) {
        Ok(s) => {
            let d = angular_distance(&s.cone, &cone);
            r = r
                .value("stabilized", json!(s.stabilized), "two-stage drift heuristic")
                .checked("sampled_angular_distance", num(d), tol, "outer-limit sampling");
            s.stabilized && d <= tol
        }
        Err(e) => {
            r = r.value("sampled_error", json!(e.to_string()), "outer-limit sampling");
            false
        }
    };
    Ok(vec![r.finish(ok)])
}

pub fn coderivative_inf(ctx: &Context) -> Outcome {
    let m = &ctx.map;
    let ystar = ctx.ystar();
    let exact = coderivative_at_infinity(m, ctx.ybar(), &ystar)?;
    let zero = vec![0.0; m.n()];
    let exact_min = exact.nearest(&zero)?.map(|(_, p)| norm(&p));
    let tol = ctx.tol.unwrap_or(SAMPLED_ANGLE_TOL);
    let mut r = ctx
        .record("coderivative-inf")
        .value("ystar", nums(&ystar), "input")
        .value("pieces", json!(exact.without_empty().pieces().len()), "exact")
        .value("min_norm", exact_min.map(num).unwrap_or(Value::Null), "exact");
    let ok = match sampled_coderivative_limit(m, ctx.ybar(), &ystar, &ctx.window, 48, ctx.cfg.seed) {
        Ok(s) => {
            // Slice of the sampled limit cone at exactly y*.
            let sampled_min = s
                .cone
                .pieces()
                .iter()
                .filter_map(|p| min_norm_in_slice(p, m.n(), &ystar).ok())
                .map(|v| norm(&v))
                .fold(f64::INFINITY, f64::min);
            let gap = match exact_min {
                Some(e) => (sampled_min - e).abs() / e.max(1.0),
                None if sampled_min.is_infinite() => 0.0,
                None => f64::INFINITY,
            };
            r = r
                .value("stabilized", json!(s.stabilized), "two-stage drift heuristic")
                .value("sampled_min_norm", num(sampled_min), "outer-limit sampling")
                .checked("min_norm_gap", num(gap), tol, "relative");
            s.stabilized && gap <= tol
        }
        Err(e) => {
            r = r.value("sampled_error", json!(e.to_string()), "outer-limit sampling");
            false
        }
    };
    Ok(vec![r.finish(ok)])
}

#[derive(Serialize)]
struct RatioRow {
    x: String,
    y: String,
    preimage_dist: f64,
    image_dist: f64,
    ratio: f64,
}

pub fn reg_estimate(ctx: &Context, out: &Output) -> Outcome {
    let e = estimate_reg_at_infinity(&ctx.map, ctx.ybar(), &ctx.window, &ctx.cfg)?;
    out.csv(
        "ratios.csv",
        e.ratios.iter().map(|s| RatioRow {
            x: join(&s.x),
            y: join(&s.y),
            preimage_dist: s.preimage_dist,
            image_dist: s.image_dist,
            ratio: s.ratio,
        }),
    )?;
    let r = ctx
        .record("reg-estimate")
        .value("reg", num(e.value), "sup of sampled ratios")
        .value("failure", json!(e.failure), "ratio cap")
        .value("samples", json!(e.samples), "admissible samples")
        .value("witness_x", nums(&e.witness.x), "argmax")
        .value("witness_y", nums(&e.witness.y), "argmax")
        .finish(true);
    Ok(vec![r])
}

pub fn rg_plus_cmd(ctx: &Context) -> Outcome {
    let r = rg_plus(&ctx.map, ctx.ybar())?;
    let tol = ctx.tol.unwrap_or(SAMPLED_ANGLE_TOL);
    let gap = r.grid_value.map(|g| (g - r.value).abs()).unwrap_or(0.0);
    let mut b = ctx
        .record("rg-plus")
        .value("rg_plus", num(r.value), "exact face enumeration")
        .value("grid_value", r.grid_value.map(num).unwrap_or(Value::Null), "sphere grid")
        .checked("grid_gap", num(gap), tol, "absolute");
    if let Some(p) = &r.argmin {
        b = b.value("xstar", nums(&p.xstar), "argmin").value("ystar", nums(&p.ystar), "argmin");
    }
    let ok = gap <= tol || (r.value.is_infinite() && r.grid_value.is_some_and(f64::is_infinite));
    Ok(vec![b.finish(ok)])
}

pub fn criterion(ctx: &Context) -> Outcome {
    let tol = ctx.tol.unwrap_or(CRITERION_REL_TOL);
    let c = criterion_check_with_tol(&ctx.map, ctx.ybar(), &ctx.window, &ctx.cfg, tol)?;
    let r = ctx
        .record("criterion-check")
        .value("rg_plus", num(c.rg_plus.value), "exact face enumeration")
        .value("inv_reg", num(c.inv_reg), "sampled")
        .checked("relative_gap", num(c.gap), tol, "|rg+ - 1/reg| / rg+")
        .value("degenerate", json!(c.degenerate), "rg+ = 0 with reg failure")
        .finish(c.pass);
    Ok(vec![r])
}

pub fn strong(ctx: &Context) -> Outcome {
    let s = strong_regularity_check(&ctx.map, ctx.ybar(), &ctx.window, &ctx.cfg)?;
    let r = ctx
        .record("strong-check")
        .value("single_valued", json!(s.single_valued), &s.method)
        .value("diagnostic", serde_json::to_value(&s.diagnostic).expect("serializable"), &s.method)
        .value("grid_points", json!(s.grid_points), "grid")
        .value("nonempty", json!(s.nonempty), "grid")
        .value("lipschitz", num(s.lipschitz), "grid difference quotients")
        .value("reg_estimate", s.reg_estimate.map(num).unwrap_or(Value::Null), "sampled")
        .finish(s.single_valued);
    Ok(vec![r])
}

pub fn perturb(ctx: &Context, out: &Output) -> Outcome {
    let spec = build_perturbation(&ctx.map, ctx.ybar(), ctx.scenario.perturb.bumps, ctx.cfg.seed)?;
    out.json("perturbation.json", &spec)?;
    let v = verify_perturbation(&spec, &ctx.map, &ctx.window, &ctx.cfg)?;
    let covectors: Vec<f64> = v.centers.iter().map(|c| c.covector_norm).collect();
    let expected: Vec<f64> = v.centers.iter().map(|c| c.expected).collect();
    let local: Vec<f64> = v.centers.iter().map(|c| c.local_ratio).collect();
    let r = ctx
        .record("perturb")
        .value("rg_plus", num(spec.rgplus()), "exact")
        .value("bumps", json!(spec.bumps().len()), "construction")
        .value("envelopes", nums(&v.envelopes), "t_k rho_k |x*_k|")
        .checked("lip", num(v.lipschitz.value), 1e-6, "pair sampling, must not exceed rg+")
        .checked("rank_one_residual", num(v.rank_one_residual), 1e-12, "in-ball samples")
        .value("zero_outside", json!(v.zero_outside_pass), "outside samples")
        .checked("covector_norms", nums(&covectors), 1e-9, "analytic Jacobian at centers")
        .value("covector_expected", nums(&expected), "(1 - t_k<y*,v>)|x*|")
        .value("local_ratios", nums(&local), "fixed-point iteration near centers")
        .value("trend_evidence", json!(v.trend_evidence), "finite K")
        .finish(v.pass);
    Ok(vec![r])
}

pub fn radius(ctx: &Context) -> Outcome {
    let mode = ctx.scenario.radius.mode;
    let rep = radius_report(&ctx.map, ctx.ybar(), ctx.scenario.perturb.bumps, mode, &ctx.window, &ctx.cfg)?;
    let tol = CRITERION_REL_TOL;
    let mut b = ctx
        .record("radius-report")
        .value("mode", serde_json::to_value(mode).expect("serializable"), "input")
        .value("rg_plus", num(rep.rg_plus), "exact")
        .value("inv_reg", num(rep.inv_reg), "sampled")
        .value("lip", num(rep.lip), "pair sampling")
        .checked("gap", num(rep.gap), tol, "|lip - 1/reg| / (1/reg)")
        .value("destabilization", json!(rep.perturbation.destabilization_pass), "perturb checks");
    if let Some(s) = &rep.strong_base {
        b = b.value("strong_base", json!(s.single_valued), &s.method);
    }
    if let Some(s) = &rep.strong_perturbed {
        b = b.value("strong_perturbed", json!(s.single_valued), &s.method);
    }
    Ok(vec![b.finish(rep.pass)])
}

#[derive(Serialize)]
struct ResidualRow {
    start: usize,
    iter: usize,
    step: f64,
    ratio: Option<f64>,
    residual: f64,
}

pub fn solve(ctx: &Context, out: &Output) -> Outcome {
    let Some(s) = &ctx.scenario.solve else {
        return Err(Failure::Parse("field `solve`: solve-lg needs a [solve] section".into()));
    };
    let params = s.params();
    params.validate(ctx.window.residual_cap)?;
    let zero = ZeroMap { n: ctx.map.n(), m: ctx.map.m() };
    let bump;
    let g: &dyn SampledMap = match &s.bump {
        Some(b) => {
            bump = PerturbationSpec::new(ctx.map.n(), ctx.map.m(), b.rgplus, vec![b.to_bump(ctx.ybar().to_vec())])?;
            &bump
        }
        None => &zero,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let (mut rows, mut converged, mut bound_ok, mut worst, mut errors) = (Vec::new(), 0, true, 0.0f64, Vec::new());
    for k in 0..s.starts {
        let x0: Vec<f64> = s.center.iter().zip(&s.spread).map(|(c, w)| c + w * rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = ctx.ybar().iter().map(|v| v + s.target_spread * rng.gen_range(-1.0..1.0)).collect();
        match lg_solve(&ctx.map, g, &y, &x0, &params) {
            Ok(t) => {
                for (i, st) in t.steps.iter().enumerate() {
                    rows.push(ResidualRow { start: k, iter: i + 1, step: *st, ratio: t.ratios[i], residual: t.residuals[i + 1] });
                }
                if t.converged {
                    converged += 1;
                    worst = t.ratios.iter().flatten().fold(worst, |a, r| a.max(*r));
                    bound_ok &= certify_bound(&t, &params).0;
                }
            }
            Err(e) => errors.push(format!("start {k}: {e}")),
        }
    }
    out.csv("residuals.csv", rows)?;
    let ok = converged == s.starts && worst <= params.rate() && bound_ok;
    let r = ctx
        .record("solve-lg")
        .value("starts", json!(s.starts), "input")
        .value("converged", json!(converged), "step tolerance")
        .checked("max_ratio", num(worst), params.rate(), "kappa*lambda + epsilon")
        .value("bounds_hold", json!(bound_ok), "kappa/(1 - kappa*lambda) certificate")
        .value("errors", json!(errors), "solver")
        .finish(ok);
    Ok(vec![r])
}

/// Every applicable check; computation errors become FAIL records.
pub fn all(ctx: &Context, out: &Output) -> Outcome {
    let mut records = Vec::new();
    let q = ctx.scenario.query.as_ref();
    let steps: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("slice", Box::new(|| slice(ctx))),
        ("jelonek", Box::new(|| jelonek(ctx))),
        ("normal-cone", Box::new(|| normal_cone(ctx))),
        ("coderivative-inf", Box::new(|| coderivative_inf(ctx))),
        ("reg-estimate", Box::new(|| reg_estimate(ctx, out))),
        ("rg-plus", Box::new(|| rg_plus_cmd(ctx))),
        ("criterion-check", Box::new(|| criterion(ctx))),
        ("strong-check", Box::new(|| strong(ctx))),
        ("perturb", Box::new(|| perturb(ctx, out))),
        ("radius-report", Box::new(|| radius(ctx))),
        ("solve-lg", Box::new(|| solve(ctx, out))),
    ];
    for (name, run) in steps {
        let skip = match name {
            "slice" => q.is_none_or(|q| q.x.is_none() && q.y.is_none()),
            "solve-lg" => ctx.scenario.solve.is_none(),
            _ => false,
        };
        if skip {
            continue;
        }
        match run() {
            Ok(mut r) => records.append(&mut r),
            Err(Failure::Compute(e)) => {
                records.push(ctx.record(name).value("error", json!(e), "computation").finish(false))
            }
            Err(p) => return Err(p),
        }
    }
    Ok(records)
}
