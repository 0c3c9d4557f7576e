use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::limiting_normal_cone;
use crate::error::{Error, Result};
use crate::geom::{angular_distance, min_norm_in_slice, ConeUnion, PolyCone};
use crate::linalg::{add, axpy, concat, dist, dot, norm, scale};
use crate::sampling::sphere_directions;
use crate::svmap::{InfinityWindow, SetValuedMap};
use crate::tol::SAMPLED_ANGLE_TOL;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    /// Shell `[R_{j−1}, R_j]` of input norms.
    pub shell: (f64, f64),
    pub output_radius: f64,
    pub samples: usize,
    /// Angular distance to the previous stage, absent for the first stage.
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledCoderivative {
    /// Union of limiting normal cones over the last two stages.
    pub cone: ConeUnion,
    /// Unit directions of `cone`.
    pub directions: Vec<Vec<f64>>,
    /// Min-norm `x*` with `(x*, −z*) ∈ N_gph(x, y)` at every sample of the last
    /// stage, for `z*` within the stage tolerance of `y*`.
    pub values: Vec<Vec<f64>>,
    pub stages: Vec<StageSummary>,
    pub stabilized: bool,
}

/// Samples graph points with `‖x‖` in each shell of the schedule and `y`
/// within `r/j` of `ȳ`, and accumulates limiting normal cones stage by stage.
///
/// The schedule is declared stabilized once the last two stages agree within
/// the sampled angular tolerance. This is a heuristic stopping rule; the outer
/// limit itself carries no rate.
pub fn sampled_coderivative_limit(
    f: &SetValuedMap,
    ybar: &[f64],
    ystar: &[f64],
    window: &InfinityWindow,
    per_stage: usize,
    seed: u64,
) -> Result<SampledCoderivative> {
    if ystar.len() != f.m() {
        return Err(Error::DimensionMismatch { expected: f.m(), got: ystar.len() });
    }
    window.validate()?;
    let decision = f.require_jelonek(ybar)?;
    let (n, m) = (f.n(), f.m());
    let dim = n + m;
    let anchors: Vec<(usize, Vec<f64>, Vec<f64>)> = decision
        .witnesses
        .iter()
        .flat_map(|w| w.recession.iter().map(move |d| (w.piece, w.base.clone(), d.clone())))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stages = Vec::new();
    let mut cones: Vec<ConeUnion> = Vec::new();
    let mut last_values = Vec::new();
    for j in 1..window.schedule.len() {
        let (lo, hi) = (window.schedule[j - 1], window.schedule[j]);
        let rj = window.output_radius / j as f64;
        let mid = 0.5 * (lo + hi);
        let jitter = 0.5 * rj;
        let xdirs = sphere_directions(n, per_stage.max(1), &mut rng);
        let ydirs = sphere_directions(m, per_stage.max(1), &mut rng);
        let targets: Vec<(usize, Vec<f64>)> = (0..per_stage)
            .map(|k| {
                let (piece, base, d) = &anchors[k % anchors.len()];
                // ‖base + t d‖ = mid
                let bd = dot(base, d);
                let t = -bd + (bd * bd - dot(base, base) + mid * mid).max(0.0).sqrt();
                let x = axpy(&axpy(base, t, d), jitter * rng.gen::<f64>(), &xdirs[k]);
                let y = axpy(ybar, jitter * rng.gen::<f64>(), &ydirs[k]);
                (*piece, concat(&x, &y))
            })
            .collect();

        let graph = f.graph();
        let samples: Vec<Vec<f64>> = targets
            .par_iter()
            .flat_map_iter(|(piece, z)| {
                let mut pts = Vec::new();
                if let Ok(p) = graph.pieces()[*piece].project(z) {
                    pts.push(p);
                }
                if let Ok(Some((_, p))) = graph.nearest(z) {
                    pts.push(p);
                }
                pts.into_iter()
            })
            .filter(|z| {
                let xn = norm(&z[..n]);
                xn >= lo && xn <= hi && dist(&z[n..], ybar) <= rj
            })
            .collect();

        let local: Vec<ConeUnion> = samples.par_iter().map(|z| limiting_normal_cone(graph, z)).collect();
        let mut pieces: Vec<PolyCone> = Vec::new();
        for c in &local {
            for p in c.pieces() {
                if !pieces.iter().any(|q| q.same_as(p)) {
                    pieces.push(p.clone());
                }
            }
        }
        let stage_cone = ConeUnion::new(dim, pieces).simplified();

        let probes = dual_probes(ystar, 0.5 / j as f64);
        last_values = local
            .iter()
            .flat_map(|c| {
                let probes = &probes;
                c.pieces()
                    .iter()
                    .flat_map(move |p| probes.iter().filter_map(move |z| min_norm_in_slice(p, n, z).ok()))
            })
            .collect();

        let drift = cones.last().map(|prev| angular_distance(prev, &stage_cone));
        stages.push(StageSummary { shell: (lo, hi), output_radius: rj, samples: samples.len(), drift });
        cones.push(stage_cone);
    }

    let stabilized = stages.last().and_then(|s| s.drift).is_some_and(|d| d <= SAMPLED_ANGLE_TOL)
        && stages.iter().rev().take(2).all(|s| s.samples > 0);
    if !stabilized {
        return Err(Error::NotStabilized { stages: stages.len() });
    }
    let k = cones.len();
    let mut pieces = cones[k - 1].pieces().to_vec();
    pieces.extend(cones[k - 2].pieces().iter().cloned());
    let cone = ConeUnion::new(dim, pieces).simplified();
    Ok(SampledCoderivative {
        directions: cone.rays(),
        cone,
        values: last_values,
        stages,
        stabilized,
    })
}

/// `y*` and `y* ± δ e_i`.
fn dual_probes(ystar: &[f64], delta: f64) -> Vec<Vec<f64>> {
    let mut out = vec![ystar.to_vec()];
    for i in 0..ystar.len() {
        let mut e = vec![0.0; ystar.len()];
        e[i] = delta;
        out.push(add(ystar, &e));
        out.push(add(ystar, &scale(&e, -1.0)));
    }
    out
}
