//! Numerical tolerances shared by every module.

/// Absolute tolerance on constraint residuals (`⟨a, z⟩ − b ≤ FEAS_TOL`).
pub const FEAS_TOL: f64 = 1e-9;

/// Threshold under which a quantity is treated as an exact zero inside solvers.
pub const ZERO_TOL: f64 = 1e-12;

/// Angular tolerance for comparing cones computed by exact routes.
pub const EXACT_ANGLE_TOL: f64 = 1e-9;

/// Angular tolerance for comparing sampled cones against exact ones.
pub const SAMPLED_ANGLE_TOL: f64 = 1e-3;

/// Difference quotients above this cap are reported as an infinite modulus.
pub const RATIO_CAP: f64 = 1e9;

/// Relative tolerance of the criterion check `rg⁺ = 1/reg`.
pub const CRITERION_REL_TOL: f64 = 0.05;

/// Diameter under which a preimage slice counts as a single point.
pub const SINGLETON_DIAM: f64 = 1e-9;

/// Residual at which the fixed-point iteration stops.
pub const LG_STEP_TOL: f64 = 1e-12;

/// Relative slack used when comparing a residual against `FEAS_TOL` at scale.
#[inline]
pub fn scaled(tol: f64, scale: f64) -> f64 {
    tol * (1.0 + scale.abs())
}
