use serde::{Deserialize, Serialize};

use super::{
    estimate_reg_at_infinity, rg_plus, strong_regularity_check, strong_regularity_check_perturbed, RegEstimate,
    SamplerConfig, StrongReport,
};
use crate::error::Result;
use crate::perturb::{build_perturbation, verify_perturbation, PerturbationReport, PerturbationSpec};
use crate::svmap::{InfinityWindow, PerturbedMap, SetValuedMap};
use crate::tol::CRITERION_REL_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMode {
    Plain,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub mode: RadiusMode,
    pub rg_plus: f64,
    pub reg: RegEstimate,
    /// `1/reg`, zero for an infinite modulus.
    pub inv_reg: f64,
    pub spec: PerturbationSpec,
    pub perturbation: PerturbationReport,
    /// Sampled `lip f` outside the window.
    pub lip: f64,
    /// `|lip − 1/reg| / (1/reg)`.
    pub gap: f64,
    /// Strong mode only: `F` and `F + f` checks.
    pub strong_base: Option<StrongReport>,
    pub strong_perturbed: Option<StrongReport>,
    pub pass: bool,
}

/// Builds the destabilizing perturbation and checks that its Lipschitz modulus
/// matches `1/reg F(∞|ȳ)` within the criterion tolerance from above, while the
/// regularity of `F + f` is visibly destroyed.
pub fn radius_report(
    f: &SetValuedMap,
    ybar: &[f64],
    bumps: usize,
    mode: RadiusMode,
    window: &InfinityWindow,
    cfg: &SamplerConfig,
) -> Result<RadiusReport> {
    let rg = rg_plus(f, ybar)?;
    let reg = estimate_reg_at_infinity(f, ybar, window, cfg)?;
    let inv_reg = reg.reciprocal();
    let spec = build_perturbation(f, ybar, bumps, cfg.seed)?;
    let perturbation = verify_perturbation(&spec, f, window, cfg)?;
    let lip = perturbation.lipschitz.value;
    let degenerate = rg.value <= 1e-9 && reg.failure;
    let gap = if inv_reg > 0.0 { (lip - inv_reg).abs() / inv_reg } else { lip };
    let evidence = perturbation.destabilization_pass && (spec.is_zero() || perturbation.trend_evidence);
    let mut pass = if degenerate {
        lip == 0.0 && perturbation.pass
    } else {
        gap <= CRITERION_REL_TOL && lip <= rg.value + 1e-6 && evidence && perturbation.pass
    };

    let (strong_base, strong_perturbed) = match mode {
        RadiusMode::Plain => (None, None),
        RadiusMode::Strong => {
            let base = strong_regularity_check(f, ybar, window, cfg)?;
            let pm = PerturbedMap::new(f, &spec)?;
            let pert = strong_regularity_check_perturbed(&pm, ybar, window, cfg)?;
            pass = pass && base.single_valued && !pert.single_valued;
            (Some(base), Some(pert))
        }
    };
    Ok(RadiusReport {
        mode,
        rg_plus: rg.value,
        reg,
        inv_reg,
        spec,
        perturbation,
        lip,
        gap,
        strong_base,
        strong_perturbed,
        pass,
    })
}
