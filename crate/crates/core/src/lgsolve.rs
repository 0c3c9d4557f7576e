//! Fixed-point solver for `y ∈ F(x) + f(x)` when `F` is metrically regular
//! at infinity with modulus below `κ` and `f` is `λ`-Lipschitz with `κλ < 1`.
//!
//! Each step moves to the nearest point of `F⁻¹(y − f(zₖ))`. Metric regularity
//! bounds that step by `κ·dist(y − f(zₖ), F(zₖ)) ≤ κλ‖zₖ − zₖ₋₁‖`, so the
//! steps shrink geometrically and the limit solves the inclusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, sub};
use crate::svmap::{SampledMap, SetValuedMap};
use crate::tol::LG_STEP_TOL;

/// Steps shorter than this are too noisy to enter the contraction check.
const RATIO_FLOOR: f64 = 1e-10;
/// Consecutive ratio violations tolerated before giving up.
const MAX_VIOLATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgParams {
    pub kappa: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl LgParams {
    /// Contraction factor the steps are checked against.
    pub fn rate(&self) -> f64 {
        self.kappa * self.lambda + self.epsilon
    }

    /// Requires `κλ < 1` and `0 < ε < min(1 − κλ, γ/λ)`.
    pub fn validate(&self, gamma: f64) -> Result<()> {
        let kl = self.kappa * self.lambda;
        if !(self.kappa > 0.0 && self.lambda >= 0.0 && kl.is_finite()) {
            return Err(Error::InvalidInput("kappa must be positive and lambda nonnegative".into()));
        }
        if kl >= 1.0 {
            return Err(Error::InvalidInput(format!("kappa*lambda = {kl} is not below 1")));
        }
        let cap = if self.lambda > 0.0 { (1.0 - kl).min(gamma / self.lambda) } else { 1.0 - kl };
        if !(self.epsilon > 0.0 && self.epsilon < cap) {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0, {cap})")));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `z₀ = x₀, z₁, …`
    pub iterates: Vec<Vec<f64>>,
    /// `‖zₖ₊₁ − zₖ‖`
    pub steps: Vec<f64>,
    /// `‖zₖ₊₁ − zₖ‖ / ‖zₖ − zₖ₋₁‖`, absent when the previous step is tiny.
    pub ratios: Vec<Option<f64>>,
    /// `dist(y − f(zₖ), F(zₖ))` at every iterate.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn point(&self) -> &[f64] {
        self.iterates.last().expect("trace holds the starting point")
    }

    /// Every step satisfies `sₖ ≤ s₀·qᵏ` up to the step tolerance.
    pub fn geometric_decay(&self, q: f64) -> bool {
        let Some(&s0) = self.steps.first() else {
            return true;
        };
        self.steps
            .iter()
            .enumerate()
            .all(|(k, s)| *s <= s0 * q.powi(k as i32) * (1.0 + 1e-9) + LG_STEP_TOL)
    }
}

fn residual(f: &SetValuedMap, g: &dyn SampledMap, y: &[f64], z: &[f64]) -> Result<f64> {
    f.dist_to_image(z, &sub(y, &g.eval(z)))
}

fn step(f: &SetValuedMap, g: &dyn SampledMap, y: &[f64], z: &[f64]) -> Result<Option<Vec<f64>>> {
    let target = sub(y, &g.eval(z));
    Ok(f.preimage_slice(&target)?.nearest(z)?.map(|(_, p)| p))
}

/// Runs the iteration from `x0` toward a solution of `y ∈ F(x) + f(x)`.
///
/// Stops once a step falls below the step tolerance or the current point
/// already solves the inclusion; a start that solves it yields an empty trace.
pub fn lg_solve(
    f: &SetValuedMap,
    g: &dyn SampledMap,
    y: &[f64],
    x0: &[f64],
    params: &LgParams,
) -> Result<IterationTrace> {
    if x0.len() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), got: x0.len() });
    }
    if y.len() != f.m() {
        return Err(Error::DimensionMismatch { expected: f.m(), got: y.len() });
    }
    let mut trace = IterationTrace {
        iterates: vec![x0.to_vec()],
        steps: Vec::new(),
        ratios: Vec::new(),
        residuals: vec![residual(f, g, y, x0)?],
        converged: false,
    };
    if trace.residuals[0] <= LG_STEP_TOL {
        trace.converged = true;
        return Ok(trace);
    }
    let rate = params.rate();
    let mut violations = 0;
    for k in 0..params.max_iters {
        let z = trace.point().to_vec();
        let next = step(f, g, y, &z)?.ok_or(Error::EmptyPreimage { iter: k })?;
        let s = dist(&z, &next);
        let ratio = trace.steps.last().filter(|p| **p >= RATIO_FLOOR).map(|p| s / p);
        if let Some(r) = ratio {
            if r > rate {
                violations += 1;
                if violations >= MAX_VIOLATIONS {
                    return Err(Error::ContractionViolated { iter: k, ratio: r });
                }
            } else {
                violations = 0;
            }
        }
        let res = residual(f, g, y, &next)?;
        trace.iterates.push(next);
        trace.steps.push(s);
        trace.ratios.push(ratio);
        trace.residuals.push(res);
        if s <= LG_STEP_TOL || res <= LG_STEP_TOL {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// `‖z − x₀‖ ≤ κ/(1 − κλ)·dist(y, (F + f)(x₀))`.
pub fn certify_bound(trace: &IterationTrace, params: &LgParams) -> (bool, f64, f64) {
    let x0 = &trace.iterates[0];
    let moved = dist(trace.point(), x0);
    let bound = params.kappa / (1.0 - params.kappa * params.lambda) * trace.residuals[0];
    (moved <= bound + 1e-9, moved, bound)
}

/// The same iteration without contraction bookkeeping; `None` if it stalls on
/// an empty preimage or does not settle within `max_iters`.
pub(crate) fn plain_iteration(
    f: &SetValuedMap,
    g: &dyn SampledMap,
    y: &[f64],
    x0: &[f64],
    max_iters: usize,
) -> Option<Vec<f64>> {
    let mut z = x0.to_vec();
    if residual(f, g, y, &z).ok()? <= LG_STEP_TOL {
        return Some(z);
    }
    for _ in 0..max_iters {
        let next = step(f, g, y, &z).ok()??;
        let s = dist(&z, &next);
        z = next;
        if s <= LG_STEP_TOL || residual(f, g, y, &z).ok()? <= LG_STEP_TOL {
            return Some(z);
        }
    }
    None
}
