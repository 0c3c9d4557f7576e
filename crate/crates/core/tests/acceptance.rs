//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout. Lines
//! marked `unattainable` are computed in full and printed as they come out;
//! they do not change the exit status. Any other FAIL exits with status 1.

use std::time::Instant;

use infreg::fixtures;
use infreg::geom::angular_distance;
use infreg::lgsolve::{certify_bound, lg_solve, LgParams};
use infreg::normals::{coderivative_at_infinity, normal_cone_at_infinity, sampled_coderivative_limit};
use infreg::perturb::{build_perturbation, verify_perturbation, Bump, PerturbationSpec};
use infreg::regmod::{
    criterion_check, estimate_reg_at_infinity, radius_report, rg_plus, strong_regularity_check, RadiusMode,
    SamplerConfig,
};
use infreg::svmap::ZeroMap;
use infreg::{InfinityWindow, SetValuedMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL_TOL: f64 = 0.05;
const EXACT_TOL: f64 = 1e-9;
const ANGLE_TOL: f64 = 1e-3;

struct Tally {
    failed: Vec<String>,
    unattainable: Vec<String>,
}

impl Tally {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.into());
        }
    }

    /// Printed verbatim; a FAIL here is expected for every map in scope.
    fn unattainable(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id} (unattainable): {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.unattainable.push(id.into());
        }
    }
}

fn window() -> InfinityWindow {
    InfinityWindow::default()
}

fn cfg(samples: usize) -> SamplerConfig {
    SamplerConfig { samples, seed: 2024, shells: 6 }
}

fn criterion_1(t: &mut Tally) {
    let cases = [
        ("x2", fixtures::coordinate_projection(1.0)),
        ("2x2", fixtures::coordinate_projection(2.0)),
        ("piecewise", fixtures::piecewise_three()),
    ];
    for (name, f) in cases {
        let start = Instant::now();
        let r = criterion_check(&f, &[0.0], &window(), &cfg(10_000)).expect("criterion runs");
        let secs = start.elapsed().as_secs_f64();
        let ok = r.gap <= REL_TOL && !r.reg.failure && r.reg.samples == 10_000 && secs < 10.0;
        t.check(
            &format!("1/{name}"),
            ok,
            format!(
                "rg+ = {:.6}, 1/reg = {:.6}, gap = {:.4} (tol {REL_TOL}), samples = {}, {secs:.2} s",
                r.rg_plus.value, r.inv_reg, r.gap, r.reg.samples
            ),
        );
    }
}

fn criterion_2(t: &mut Tally) {
    let f = fixtures::horizontal_ray();
    let rg = rg_plus(&f, &[0.0]).expect("rg+");
    let reg = estimate_reg_at_infinity(&f, &[0.0], &window(), &cfg(2000)).expect("reg");
    t.check(
        "2/horizontal-ray",
        rg.value <= 1e-9 && reg.failure,
        format!("rg+ = {:e}, reg failure flag = {}, max ratio = {:e}", rg.value, reg.failure, reg.witness.ratio),
    );
}

fn criterion_3(t: &mut Tally) {
    let cases: Vec<(&str, SetValuedMap, Vec<f64>, Vec<Vec<f64>>)> = vec![
        ("horizontal-ray", fixtures::horizontal_ray(), vec![0.0], vec![vec![1.0], vec![-1.0]]),
        ("x2", fixtures::coordinate_projection(1.0), vec![0.0], vec![vec![1.0], vec![-1.0]]),
        ("2x2", fixtures::coordinate_projection(2.0), vec![0.0], vec![vec![1.0]]),
        ("piecewise", fixtures::piecewise_three(), vec![0.0], vec![vec![1.0], vec![-1.0]]),
        ("chain", fixtures::inverse_like_chain(), vec![0.0], vec![vec![1.0], vec![-1.0]]),
        (
            "diagonal",
            fixtures::diagonal_scaling(3.0, 0.5),
            vec![0.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.6, 0.8]],
        ),
    ];
    for (name, f, ybar, ystars) in cases {
        let (exact, _) = normal_cone_at_infinity(f.graph(), f.n(), &ybar).expect("exact cone");
        for ystar in ystars {
            let id = format!("3/{name}/y*={ystar:?}");
            match sampled_coderivative_limit(&f, &ybar, &ystar, &window(), 48, 11) {
                Ok(s) => {
                    let d = angular_distance(&s.cone, &exact);
                    t.check(
                        &id,
                        s.stabilized && d <= ANGLE_TOL,
                        format!("stabilized = {}, angular distance = {d:.2e} (tol {ANGLE_TOL})", s.stabilized),
                    );
                }
                Err(e) => t.check(&id, false, format!("error: {e}")),
            }
        }
    }
}

fn criterion_4(t: &mut Tally) {
    let f = fixtures::coordinate_projection(1.0);
    let spec = build_perturbation(&f, &[0.0], 8, 5).expect("spec");
    let r = verify_perturbation(&spec, &f, &window(), &cfg(4000)).expect("verification");
    let rg = spec.rgplus();
    t.check(
        "4/lip",
        r.lipschitz.value <= rg + 1e-6,
        format!("lip f = {:.9}, rg+ = {rg:.9}", r.lipschitz.value),
    );
    let decreasing = r.envelopes.windows(2).all(|w| w[1] < w[0]);
    let last = *r.envelopes.last().expect("eight bumps");
    t.check(
        "4/envelope",
        decreasing && last < 1e-3 && r.decay_pass,
        format!("envelope decreasing = {decreasing}, k = 8 envelope = {last:.3e}, sampled decay = {}", r.decay_pass),
    );
    let worst = r.centers.iter().map(|c| (c.covector_norm - c.expected).abs()).fold(0.0, f64::max);
    t.check(
        "4/covector",
        worst <= EXACT_TOL && r.centers.iter().all(|c| c.in_coderivative && c.covector_norm <= c.bound + 1e-12),
        format!(
            "max |norm - (1 - t_k<y*,v>)|x*|| = {worst:.2e}, k = 8 norm = {:.12}",
            r.centers[7].covector_norm
        ),
    );
    // Literal form (1 - t_k(1 - 1/k))|x*_k|; with v_k = y*_k this is the bound, not the value.
    let literal = r.centers.iter().map(|c| (c.covector_norm - c.bound).abs()).fold(0.0, f64::max);
    t.unattainable(
        "4/covector-literal",
        literal <= EXACT_TOL,
        format!("max |norm - (1 - t_k(1 - 1/k))|x*|| = {literal:.3e}; v_k = y*_k forces norm = (1 - t_k)|x*|"),
    );
    t.check(
        "4/zero-outside",
        r.zero_outside_pass && r.outside_points >= 1000,
        format!("{} outside points, all exactly zero = {}", r.outside_points, r.zero_outside_pass),
    );
    t.check(
        "4/rank-one",
        r.rank_one_pass,
        format!("max off-direction residual = {:.2e}", r.rank_one_residual),
    );
}

fn criterion_5(t: &mut Tally) {
    let f = fixtures::coordinate_projection(1.0);
    let r = radius_report(&f, &[0.0], 8, RadiusMode::Plain, &window(), &cfg(10_000)).expect("radius report");
    t.check(
        "5/radius",
        r.pass,
        format!(
            "lip f = {:.6}, 1/reg = {:.6}, gap = {:.4} (tol {REL_TOL}), rg+ = {:.6}, trend = {}",
            r.lip, r.inv_reg, r.gap, r.rg_plus, r.perturbation.trend_evidence
        ),
    );
}

fn criterion_6(t: &mut Tally) {
    let f = fixtures::coordinate_projection(1.0);
    let bump = Bump {
        k: 1,
        center: vec![50.0, 0.0],
        partner: vec![0.0],
        xstar: vec![0.0, 1.0],
        ystar: vec![1.0],
        direction: vec![1.0],
        radius: 1.0,
        scale: 0.15,
        exponent: 2.0,
    };
    let g = PerturbationSpec::new(2, 1, 0.3, vec![bump]).expect("bump");
    let params = LgParams { kappa: 1.05, lambda: 0.35, epsilon: 0.05, max_iters: 500 };
    params.validate(window().residual_cap).expect("valid parameters");
    let rate = params.rate();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_ratio, mut bound_ok, mut converged) = (0.0f64, true, 0);
    for _ in 0..100 {
        let x0 = vec![50.0 + rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0)];
        let y = vec![rng.gen_range(-0.3..0.3)];
        let trace = lg_solve(&f, &g, &y, &x0, &params).expect("solver runs");
        if trace.converged {
            converged += 1;
            worst_ratio = trace.ratios.iter().flatten().fold(worst_ratio, |a, r| a.max(*r));
            bound_ok &= certify_bound(&trace, &params).0;
        }
    }
    t.check(
        "6/ratios",
        converged == 100 && worst_ratio <= rate,
        format!("{converged}/100 converged, max ratio = {worst_ratio:.4} (bound {rate})"),
    );
    t.check("6/terminal-bound", bound_ok && converged == 100, format!("all bounds hold = {bound_ok}"));
    let mut exact = true;
    for _ in 0..100 {
        let x0 = vec![rng.gen_range(20.0..80.0), rng.gen_range(-3.0..3.0)];
        let y = vec![rng.gen_range(-0.3..0.3)];
        let trace = lg_solve(&f, &ZeroMap { n: 2, m: 1 }, &y, &x0, &params).expect("solver runs");
        let proj = f.preimage_slice(&y).unwrap().nearest(&x0).unwrap().unwrap().1;
        exact &= trace.iterates.get(1).is_none_or(|z| *z == proj) && trace.point() == proj.as_slice();
    }
    t.check("6/zero-perturbation", exact, "f = 0 returns the projection onto F^-1(y) bit for bit".into());
}

fn criterion_7(t: &mut Tally) {
    let chain = fixtures::inverse_like_chain();
    let s = strong_regularity_check(&chain, &[0.0], &window(), &cfg(400)).expect("strong check");
    let reg = s.reg_estimate.unwrap_or(f64::INFINITY);
    t.unattainable(
        "7/strong-yes",
        s.single_valued && s.lipschitz <= reg * (1.0 + REL_TOL),
        format!(
            "single-valued = {}, diagnostic = {:?}, localization lip = {:.4}, reg = {reg:.4}; a far solution set over ybar in J(F) is unbounded",
            s.single_valued, s.diagnostic, s.lipschitz
        ),
    );
    let f = fixtures::coordinate_projection(1.0);
    let s = strong_regularity_check(&f, &[0.0], &window(), &cfg(400)).expect("strong check");
    let reg = estimate_reg_at_infinity(&f, &[0.0], &window(), &cfg(2000)).expect("reg");
    t.check(
        "7/strong-no",
        !s.single_valued && !reg.failure && reg.value.is_finite(),
        format!("single-valued = {}, diagnostic = {:?}, reg = {:.4}", s.single_valued, s.diagnostic, reg.value),
    );
    let r = radius_report(&chain, &[0.0], 8, RadiusMode::Strong, &window(), &cfg(2000)).expect("radius report");
    let base = r.strong_base.as_ref().map(|s| s.single_valued);
    t.unattainable(
        "7/strong-radius",
        r.pass,
        format!("F strongly regular = {base:?}, plain chain = lip {:.4} vs 1/reg {:.4}", r.lip, r.inv_reg),
    );
}

fn criterion_8(t: &mut Tally) {
    let fixtures_m1 = [
        ("x2", fixtures::coordinate_projection(1.0)),
        ("piecewise", fixtures::piecewise_three()),
        ("ray", fixtures::horizontal_ray()),
        ("chain", fixtures::inverse_like_chain()),
    ];
    let mut dual_ok = true;
    let mut homog_ok = true;
    for (_, f) in &fixtures_m1 {
        let (cone, _) = normal_cone_at_infinity(f.graph(), f.n(), &[0.0]).unwrap();
        for p in cone.pieces() {
            dual_ok &= p.polar().polar().same_as(p);
            for g in p.generators() {
                for c in [0.5, 2.0, 10.0] {
                    homog_ok &= p.contains(&g.iter().map(|v| c * v).collect::<Vec<_>>());
                }
            }
        }
        for c in [0.5, 2.0] {
            let base = coderivative_at_infinity(f, &[0.0], &[1.0]).unwrap();
            let scaled = coderivative_at_infinity(f, &[0.0], &[c]).unwrap();
            for probe in [[0.0, 0.0], [1.0, 3.0], [-2.0, 0.5], [0.0, -7.0]] {
                let probe = &probe[..f.n()];
                if let Some((_, p)) = base.nearest(probe).unwrap() {
                    let cp: Vec<f64> = p.iter().map(|v| c * v).collect();
                    homog_ok &= scaled.distance(&cp).unwrap() <= EXACT_TOL;
                }
            }
        }
    }
    t.check("8/polar-double-dual", dual_ok, "K°° = K on every piece of every normal cone at infinity".into());
    t.check("8/homogeneity", homog_ok, "cones closed under c > 0 and D*F(c y*) = c D*F(y*)".into());

    let mut worst_rg: f64 = 0.0;
    let mut products = Vec::new();
    for (_, f) in fixtures_m1.iter().take(2) {
        let rg = rg_plus(f, &[0.0]).unwrap().value;
        for c in [0.5, 2.0] {
            let g = f.scale_output(c).unwrap();
            let rgc = rg_plus(&g, &[0.0]).unwrap().value;
            worst_rg = worst_rg.max((rgc - c * rg).abs());
            let reg = estimate_reg_at_infinity(&g, &[0.0], &window(), &cfg(4000)).unwrap().value;
            products.push(rgc * reg);
        }
    }
    t.check("8/rg-scaling", worst_rg <= EXACT_TOL, format!("max |rg+(cF) - c rg+(F)| = {worst_rg:.2e}"));
    let prod_ok = products.iter().all(|p| (0.95..=1.05).contains(p));
    t.check("8/reg-scaling", prod_ok, format!("rg+(cF) * reg(cF) = {products:.4?}"));
}

fn main() {
    let start = Instant::now();
    let mut t = Tally { failed: Vec::new(), unattainable: Vec::new() };
    criterion_1(&mut t);
    criterion_2(&mut t);
    criterion_3(&mut t);
    criterion_4(&mut t);
    criterion_5(&mut t);
    criterion_6(&mut t);
    criterion_7(&mut t);
    criterion_8(&mut t);
    let secs = start.elapsed().as_secs_f64();
    t.check("8/runtime", secs < 60.0, format!("full suite {secs:.1} s"));
    println!(
        "acceptance: {} failed, {} unattainable failed {:?}",
        t.failed.len(),
        t.unattainable.len(),
        t.unattainable
    );
    if !t.failed.is_empty() {
        println!("failed: {:?}", t.failed);
        std::process::exit(1);
    }
}
