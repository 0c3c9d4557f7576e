//! Regularity moduli at infinity.
//!
//! `estimate_reg_at_infinity` samples the ratio `dist(x, F⁻¹(y)) / dist(y, F(x))`
//! far out in `x` and near `ȳ` in `y`. `rg_plus` computes the dual quantity
//! exactly from the normal cone at infinity, and `criterion_check` compares the
//! two. The radius and strong-regularity checks build on these.

mod radius;
mod rgplus;
mod strong;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add, axpy, dist, norm, normalized, scale, sub};
use crate::sampling::{ball_points, sphere_directions};
use crate::svmap::{InfinityWindow, JelonekDecision, PerturbedMap, SampledMap, SetValuedMap};
use crate::tol::{CRITERION_REL_TOL, RATIO_CAP, ZERO_TOL};

pub use radius::{radius_report, RadiusMode, RadiusReport};
pub use rgplus::{inverse_coderivative_graph, min_ratio, rg_plus, upper_norm, RgMethod, RgPlusResult};
pub use strong::{
    strong_regularity_check, strong_regularity_check_perturbed, StrongDiagnostic, StrongReport,
};

/// Iterations allowed when a perturbed preimage is approached by the
/// fixed-point scheme.
const PERTURBED_PREIMAGE_ITERS: usize = 2000;

/// A mapping whose distance functions can be queried, exactly or through
/// iteration.
pub trait RegTarget: Sync {
    /// The polyhedral part, used for escape anchors.
    fn base(&self) -> &SetValuedMap;
    fn image_distance(&self, x: &[f64], y: &[f64]) -> f64;
    fn preimage_distance(&self, x: &[f64], y: &[f64]) -> f64;
}

impl RegTarget for SetValuedMap {
    fn base(&self) -> &SetValuedMap {
        self
    }
    fn image_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dist_to_image(x, y).unwrap_or(f64::INFINITY)
    }
    fn preimage_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dist_to_preimage(x, y).unwrap_or(f64::INFINITY)
    }
}

impl RegTarget for PerturbedMap<'_> {
    fn base(&self) -> &SetValuedMap {
        self.base
    }
    fn image_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dist_to_image(x, y).unwrap_or(f64::INFINITY)
    }
    fn preimage_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dist_to_preimage_upper(x, y, PERTURBED_PREIMAGE_ITERS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Admissible ratio samples to collect.
    pub samples: usize,
    pub seed: u64,
    /// Number of radii `R·2^s` used for inputs.
    pub shells: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0x5eed, shells: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub preimage_dist: f64,
    pub image_dist: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegEstimate {
    /// Largest sampled ratio, `+∞` when the failure flag is set.
    pub value: f64,
    pub witness: RatioSample,
    pub window: InfinityWindow,
    /// Admissible samples.
    pub samples: usize,
    /// Some ratio was infinite or exceeded the cap.
    pub failure: bool,
    pub ratios: Vec<RatioSample>,
}

impl RegEstimate {
    /// `1/reg` with `1/∞ = 0`.
    pub fn reciprocal(&self) -> f64 {
        if self.value.is_infinite() {
            0.0
        } else {
            1.0 / self.value
        }
    }
}

/// Unit combinations of recession generators attached to each escape witness.
pub(crate) fn escape_anchors(decision: &JelonekDecision, rng: &mut ChaCha8Rng, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let w = &decision.witnesses[k % decision.witnesses.len()];
        let g = &w.recession;
        // First rounds use the generators themselves, later ones mix them.
        let d = if k / decision.witnesses.len() < g.len() {
            g[(k / decision.witnesses.len()) % g.len()].clone()
        } else {
            let mut v = vec![0.0; w.base.len()];
            for r in g {
                v = axpy(&v, rng.gen::<f64>(), r);
            }
            normalized(&v).unwrap_or_else(|| g[0].clone())
        };
        out.push((w.base.clone(), d));
    }
    out
}

/// Point `base + t d` with `‖base + t d‖ = radius` (or the farthest available
/// when the ray starts outside).
pub(crate) fn point_at_radius(base: &[f64], d: &[f64], radius: f64) -> Vec<f64> {
    let bd = crate::linalg::dot(base, d);
    let disc = bd * bd - crate::linalg::dot(base, base) + radius * radius;
    let t = (-bd + disc.max(0.0).sqrt()).max(0.0);
    axpy(base, t, d)
}

/// Samples `(x, y)` with `‖x‖ > R`, `‖y − ȳ‖ < r` and `0 < dist(y, F(x)) < γ`
/// and returns the largest ratio `dist(x, F⁻¹(y)) / dist(y, F(x))`.
///
/// Inputs sit on shells `R·2^s` along escape directions of the graph with a
/// spherical jitter of size `γ`. Outputs come half from a Halton grid in the
/// ball of radius `r` and half from shells shrinking toward `ȳ`.
pub fn estimate_reg_at_infinity<T: RegTarget + ?Sized>(
    target: &T,
    ybar: &[f64],
    window: &InfinityWindow,
    cfg: &SamplerConfig,
) -> Result<RegEstimate> {
    window.validate()?;
    let base = target.base();
    let decision = base.require_jelonek(ybar)?;
    let (n, m) = (base.n(), base.m());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut kept: Vec<RatioSample> = Vec::new();
    let mut batch = 0u64;
    let budget = cfg.samples.max(1);
    while kept.len() < budget && batch < 8 {
        let count = budget;
        let anchors = escape_anchors(&decision, &mut rng, count);
        let xjit = sphere_directions(n, count, &mut rng);
        let ydirs = sphere_directions(m, count, &mut rng);
        let grid = ball_points(m, count, window.output_radius, batch * count as u64);
        let candidates: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
            .map(|k| {
                let s = rng.gen_range(0..cfg.shells.max(1)) as i32;
                let radius = window.radius * 2f64.powi(s) * (1.0 + 0.5 * rng.gen::<f64>()) + 1.0;
                let (b, d) = &anchors[k];
                let x = axpy(&point_at_radius(b, d, radius), window.residual_cap * rng.gen::<f64>(), &xjit[k]);
                let y = if k % 2 == 0 {
                    add(ybar, &grid[k])
                } else {
                    let q = rng.gen_range(0..20) as i32;
                    let rad = window.output_radius * 0.999 * 0.5f64.powi(q) * rng.gen_range(0.5..1.0);
                    axpy(ybar, rad, &ydirs[k])
                };
                (x, y)
            })
            .collect();
        let evaluated: Vec<Option<RatioSample>> = candidates
            .par_iter()
            .map(|(x, y)| {
                if norm(x) <= window.radius || dist(y, ybar) >= window.output_radius {
                    return None;
                }
                let den = target.image_distance(x, y);
                if !(den > 0.0 && den < window.residual_cap) {
                    return None;
                }
                let num = target.preimage_distance(x, y);
                Some(RatioSample { x: x.clone(), y: y.clone(), preimage_dist: num, image_dist: den, ratio: num / den })
            })
            .collect();
        kept.extend(evaluated.into_iter().flatten());
        batch += 1;
    }
    kept.truncate(budget);
    if kept.is_empty() {
        return Err(Error::NoAdmissibleSamples);
    }
    let failure = kept.iter().any(|s| !(s.ratio <= RATIO_CAP));
    let best = kept
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.ratio.total_cmp(&b.ratio).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("nonempty");
    Ok(RegEstimate {
        value: if failure { f64::INFINITY } else { kept[best].ratio },
        witness: kept[best].clone(),
        window: window.clone(),
        samples: kept.len(),
        failure,
        ratios: kept,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub rg_plus: RgPlusResult,
    pub reg: RegEstimate,
    /// `1/reg`, zero when the estimate is infinite.
    pub inv_reg: f64,
    /// `|rg⁺ − 1/reg| / max(rg⁺, 1e−9)`.
    pub gap: f64,
    pub tolerance: f64,
    /// `rg⁺ = 0` paired with an infinite modulus.
    pub degenerate: bool,
    pub pass: bool,
}

/// Compares the exact `rg⁺` with the sampled `1/reg`.
pub fn criterion_check(f: &SetValuedMap, ybar: &[f64], window: &InfinityWindow, cfg: &SamplerConfig) -> Result<CriterionReport> {
    criterion_check_with_tol(f, ybar, window, cfg, CRITERION_REL_TOL)
}

pub fn criterion_check_with_tol(
    f: &SetValuedMap,
    ybar: &[f64],
    window: &InfinityWindow,
    cfg: &SamplerConfig,
    tolerance: f64,
) -> Result<CriterionReport> {
    let rg = rg_plus(f, ybar)?;
    let reg = estimate_reg_at_infinity(f, ybar, window, cfg)?;
    let inv_reg = reg.reciprocal();
    let zero_rg = rg.value <= 1e-9;
    let degenerate = zero_rg && reg.failure;
    let gap = if rg.value.is_infinite() {
        if inv_reg.is_infinite() { 0.0 } else { f64::INFINITY }
    } else {
        (rg.value - inv_reg).abs() / rg.value.max(1e-9)
    };
    let pass = if zero_rg || reg.failure { degenerate } else { gap <= tolerance };
    Ok(CriterionReport { rg_plus: rg, reg, inv_reg, gap, tolerance, degenerate, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipEstimate {
    pub value: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs: usize,
}

/// Largest sampled `‖f(x) − f(x′)‖ / ‖x − x′‖` over pairs outside `B_R`.
///
/// Pairs are drawn at small separations on the shells `R·2^s`, inside and across
/// the boundaries of the map's support balls, and from the map's own probes.
pub fn lip_at_infinity(f: &dyn SampledMap, window: &InfinityWindow, cfg: &SamplerConfig) -> LipEstimate {
    let n = f.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x11f);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = f.probe_pairs();
    let count = cfg.samples.max(1);
    let dirs = sphere_directions(n, count, &mut rng);
    let steps = sphere_directions(n, count, &mut rng);
    for k in 0..count {
        let s = rng.gen_range(0..cfg.shells.max(1)) as i32;
        let radius = window.radius * 2f64.powi(s) * (1.0 + rng.gen::<f64>());
        let x = scale(&dirs[k], radius);
        let h = 10f64.powf(rng.gen_range(-4.0..0.0));
        pairs.push((x.clone(), axpy(&x, h, &steps[k])));
    }
    for (c, rho) in f.support_balls() {
        let per_ball = (count / 8).max(16);
        let inner = sphere_directions(n, per_ball, &mut rng);
        let offs = sphere_directions(n, per_ball, &mut rng);
        for k in 0..per_ball {
            let r1 = rho * rng.gen::<f64>().sqrt();
            let p = axpy(&c, r1, &inner[k]);
            let h = rho * 10f64.powf(rng.gen_range(-4.0..0.3));
            pairs.push((p.clone(), axpy(&p, h, &offs[k])));
            // Straddling the boundary along the radial direction.
            let e = rho * 10f64.powf(rng.gen_range(-5.0..-1.0));
            pairs.push((axpy(&c, rho - e, &inner[k]), axpy(&c, rho + e, &inner[k])));
        }
    }
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| {
            if norm(a) <= window.radius || norm(b) <= window.radius {
                return -1.0;
            }
            let d = dist(a, b);
            if d <= ZERO_TOL {
                return -1.0;
            }
            norm(&sub(&f.eval(a), &f.eval(b))) / d
        })
        .collect();
    let admissible = values.iter().filter(|v| **v >= 0.0).count();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= 0.0)
        .max_by(|(i, a), (j, b)| a.total_cmp(b).then(j.cmp(i)));
    match best {
        Some((i, v)) => LipEstimate { value: *v, witness: Some(pairs[i].clone()), pairs: admissible },
        None => LipEstimate { value: 0.0, witness: None, pairs: 0 },
    }
}
