use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{escape_anchors, estimate_reg_at_infinity, point_at_radius, SamplerConfig};
use crate::error::Result;
use crate::linalg::{add, dist, norm, unit};
use crate::sampling::ball_points;
use crate::svmap::{InfinityWindow, PerturbedMap, SetValuedMap};
use crate::tol::{RATIO_CAP, SINGLETON_DIAM};

/// Grid points in `B_r(ȳ)` visited by the localization test.
const MAX_GRID: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StrongDiagnostic {
    /// No grid point has a solution beyond the radius.
    EmptyLocalization,
    /// Some `y` has more than one solution beyond the radius.
    MultiValued { y: Vec<f64> },
    /// The localization exists but its difference quotients exceed the cap.
    NotLipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongReport {
    /// `y ↦ F⁻¹(y) ∩ {‖x‖ > R}` is single-valued on the grid and Lipschitz.
    pub single_valued: bool,
    pub diagnostic: Option<StrongDiagnostic>,
    pub grid_points: usize,
    /// Grid points with exactly one solution beyond the radius.
    pub nonempty: usize,
    /// Largest difference quotient of the localization over grid pairs.
    pub lipschitz: f64,
    /// Sampled modulus of metric regularity for comparison, when available.
    pub reg_estimate: Option<f64>,
    /// `exact` for polyhedral slices, `sampled` for perturbed maps.
    pub method: String,
}

enum Localized {
    Empty,
    Single(Vec<f64>),
    Multi,
}

/// `ȳ` itself, axis points `ȳ ± r·k/q·eᵢ` and a Halton cloud, all in `B_r(ȳ)`.
fn grid(ybar: &[f64], r: f64, budget: usize) -> Vec<Vec<f64>> {
    let m = ybar.len();
    let q = 8;
    let mut out = vec![ybar.to_vec()];
    for i in 0..m {
        for k in 1..=q {
            let s = 0.999 * r * k as f64 / q as f64;
            out.push(add(ybar, &crate::linalg::scale(&unit(m, i), s)));
            out.push(add(ybar, &crate::linalg::scale(&unit(m, i), -s)));
        }
    }
    let extra = budget.min(MAX_GRID).saturating_sub(out.len());
    out.extend(ball_points(m, extra, 0.999 * r, 0).into_iter().map(|p| add(ybar, &p)));
    out
}

fn localize_exact(f: &SetValuedMap, y: &[f64], radius: f64) -> Localized {
    let Ok(slice) = f.preimage_slice(y) else {
        return Localized::Empty;
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in slice.pieces() {
        if !p.recession_cone().is_zero() {
            return Localized::Multi;
        }
        let verts = p.vertices();
        if verts.iter().all(|v| norm(v) <= radius) {
            continue;
        }
        if p.diameter() > SINGLETON_DIAM {
            return Localized::Multi;
        }
        if !points.iter().any(|q| dist(q, &verts[0]) <= SINGLETON_DIAM) {
            points.push(verts[0].clone());
        }
    }
    match points.len() {
        0 => Localized::Empty,
        1 => Localized::Single(points.pop().expect("one point")),
        _ => Localized::Multi,
    }
}

fn assemble(grid: &[Vec<f64>], local: Vec<Localized>, reg_estimate: Option<f64>, method: &str) -> StrongReport {
    let mut singles: Vec<(&[f64], Vec<f64>)> = Vec::new();
    let mut diagnostic = None;
    for (y, l) in grid.iter().zip(local) {
        match l {
            Localized::Empty => {}
            Localized::Single(x) => singles.push((y, x)),
            Localized::Multi => {
                if diagnostic.is_none() {
                    diagnostic = Some(StrongDiagnostic::MultiValued { y: y.clone() });
                }
            }
        }
    }
    let mut lipschitz: f64 = 0.0;
    for i in 0..singles.len() {
        for j in i + 1..singles.len() {
            let dy = dist(singles[i].0, singles[j].0);
            if dy > 0.0 {
                lipschitz = lipschitz.max(dist(&singles[i].1, &singles[j].1) / dy);
            }
        }
    }
    if diagnostic.is_none() {
        if singles.is_empty() {
            diagnostic = Some(StrongDiagnostic::EmptyLocalization);
        } else if !(lipschitz <= RATIO_CAP) {
            diagnostic = Some(StrongDiagnostic::NotLipschitz);
        }
    }
    StrongReport {
        single_valued: diagnostic.is_none(),
        diagnostic,
        grid_points: grid.len(),
        nonempty: singles.len(),
        lipschitz,
        reg_estimate,
        method: method.into(),
    }
}

/// Tests whether `y ↦ F⁻¹(y) ∩ {‖x‖ > R}` is single-valued and Lipschitz on a
/// grid of `B_r(ȳ)` that contains `ȳ`. Slices are polyhedral, so each grid
/// point is decided exactly by recession cones and vertex enumeration. Outside
/// the Jelonek set no grid point has far solutions and the diagnostic is
/// `EmptyLocalization`.
pub fn strong_regularity_check(
    f: &SetValuedMap,
    ybar: &[f64],
    window: &InfinityWindow,
    cfg: &SamplerConfig,
) -> Result<StrongReport> {
    window.validate()?;
    let pts = grid(ybar, window.output_radius, cfg.samples);
    let local: Vec<Localized> = pts.par_iter().map(|y| localize_exact(f, y, window.radius)).collect();
    let reg = estimate_reg_at_infinity(f, ybar, window, cfg).ok().map(|r| r.value);
    Ok(assemble(&pts, local, reg, "exact"))
}

/// The same test for `F + f`. Solutions are found by running the fixed-point
/// iteration from escape anchors on every shell, so the decision is sampled.
pub fn strong_regularity_check_perturbed(
    pm: &PerturbedMap<'_>,
    ybar: &[f64],
    window: &InfinityWindow,
    cfg: &SamplerConfig,
) -> Result<StrongReport> {
    window.validate()?;
    let decision = pm.base.require_jelonek(ybar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let anchors = escape_anchors(&decision, &mut rng, 2 * decision.witnesses.len().max(1));
    let starts: Vec<Vec<f64>> = (0..cfg.shells.max(1))
        .flat_map(|s| {
            let r = window.radius * 2f64.powi(s as i32) + 1.0;
            anchors.iter().map(move |(b, d)| point_at_radius(b, d, r))
        })
        .collect();
    let pts = grid(ybar, window.output_radius, cfg.samples.min(64));
    let local: Vec<Localized> = pts
        .par_iter()
        .map(|y| {
            let mut sols: Vec<Vec<f64>> = Vec::new();
            for s in &starts {
                let Some(z) = crate::lgsolve::plain_iteration(pm.base, pm.f, y, s, 2000) else {
                    continue;
                };
                if norm(&z) > window.radius && !sols.iter().any(|q| dist(q, &z) <= 1e-6) {
                    sols.push(z);
                }
            }
            match sols.len() {
                0 => Localized::Empty,
                1 => Localized::Single(sols.pop().expect("one")),
                _ => Localized::Multi,
            }
        })
        .collect();
    let reg = estimate_reg_at_infinity(pm, ybar, window, &SamplerConfig { samples: cfg.samples.min(2000), ..*cfg })
        .ok()
        .map(|r| r.value);
    Ok(assemble(&pts, local, reg, "sampled"))
}
