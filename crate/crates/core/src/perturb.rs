//! Rank-one Lipschitz bumps that destroy metric regularity at infinity.
//!
//! Bump `k` lives on the ball `B̄(x_k, ρ_k)` far out on an escaping stratum of
//! the graph and reads
//!
//! ```text
//! f(x) = −t_k s_k(x) ⟨x*_k, x − x_k⟩ v_k,   s_k(x) = max(1 − (‖x − x_k‖/ρ_k)^{1+1/k}, 0)
//! ```
//!
//! with `t_k = k/(k+1) · rg⁺/‖x*_k‖`. Its gradient has norm at most
//! `t_k (1 + 1/k) ‖x*_k‖ = rg⁺`, and at the center it shifts the covector
//! `x*_k` to `(1 − t_k⟨y*_k, v_k⟩) x*_k`, which shrinks with `k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, concat, dist, dot, norm, normalized, scale, sub};
use crate::normals::{coderivative_at_point, normal_cone_at_infinity};
use crate::regmod::{lip_at_infinity, rg_plus, LipEstimate, SamplerConfig};
use crate::sampling::sphere_directions;
use crate::svmap::{InfinityWindow, PerturbedMap, SampledMap, SetValuedMap};

/// One bump of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub k: usize,
    pub center: Vec<f64>,
    /// `y_k` with `(x_k, y_k)` in the graph.
    pub partner: Vec<f64>,
    pub xstar: Vec<f64>,
    pub ystar: Vec<f64>,
    pub direction: Vec<f64>,
    pub radius: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl Bump {
    /// `t_k ρ_k ‖x*_k‖`, the sup of `‖f‖` on the ball.
    pub fn envelope(&self) -> f64 {
        self.scale * self.radius * norm(&self.xstar)
    }

    fn cutoff(&self, x: &[f64]) -> f64 {
        (1.0 - (dist(x, &self.center) / self.radius).powf(self.exponent)).max(0.0)
    }

    fn inside(&self, x: &[f64]) -> bool {
        dist(x, &self.center) < self.radius
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let amp = -self.scale * self.cutoff(x) * dot(&self.xstar, &sub(x, &self.center));
        scale(&self.direction, amp)
    }

    /// Gradient of `s(x)⟨x*, x − c⟩`.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u = sub(x, &self.center);
        let r = norm(&u);
        let s = self.cutoff(x);
        let mut g = scale(&self.xstar, s);
        if r > 0.0 && r < self.radius {
            let p = self.exponent;
            let ds = scale(&u, -p * r.powf(p - 2.0) / self.radius.powf(p));
            g = axpy(&g, dot(&self.xstar, &u), &ds);
        }
        g
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecRepr {
    rgplus: f64,
    bumps: Vec<Bump>,
}

/// The full bump sequence together with the value of `rg⁺` it targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct PerturbationSpec {
    n: usize,
    m: usize,
    rgplus: f64,
    bumps: Vec<Bump>,
}

impl TryFrom<SpecRepr> for PerturbationSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let (n, m) = r
            .bumps
            .first()
            .map(|b| (b.center.len(), b.direction.len()))
            .unwrap_or((1, 1));
        let s = PerturbationSpec { n, m, rgplus: r.rgplus, bumps: r.bumps };
        s.validate()?;
        Ok(s)
    }
}

impl From<PerturbationSpec> for SpecRepr {
    fn from(s: PerturbationSpec) -> Self {
        SpecRepr { rgplus: s.rgplus, bumps: s.bumps }
    }
}

impl PerturbationSpec {
    pub fn new(n: usize, m: usize, rgplus: f64, bumps: Vec<Bump>) -> Result<Self> {
        let s = Self { n, m, rgplus, bumps };
        s.validate()?;
        Ok(s)
    }

    /// `f ≡ 0`.
    pub fn zero(n: usize, m: usize) -> Self {
        Self { n, m, rgplus: 0.0, bumps: Vec::new() }
    }

    pub fn rgplus(&self) -> f64 {
        self.rgplus
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Re-checks every structural property of the construction.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.rgplus.is_finite() && self.rgplus >= 0.0) {
            return bad(format!("rgplus must be finite and nonnegative, got {}", self.rgplus));
        }
        for (i, b) in self.bumps.iter().enumerate() {
            let k = b.k;
            if k != i + 1 {
                return bad(format!("bump {i} carries index {k}, expected {}", i + 1));
            }
            if b.center.len() != self.n || b.xstar.len() != self.n {
                return bad(format!("bump {k}: input dimension differs from {}", self.n));
            }
            if b.partner.len() != self.m || b.ystar.len() != self.m || b.direction.len() != self.m {
                return bad(format!("bump {k}: output dimension differs from {}", self.m));
            }
            if (norm(&b.ystar) - 1.0).abs() > 1e-9 || (norm(&b.direction) - 1.0).abs() > 1e-9 {
                return bad(format!("bump {k}: y* and v must be unit vectors"));
            }
            let kf = k as f64;
            if dot(&b.ystar, &b.direction) <= 1.0 - 1.0 / kf {
                return bad(format!("bump {k}: <y*, v> must exceed 1 - 1/k"));
            }
            let xn = norm(&b.xstar);
            if xn <= 0.0 {
                return bad(format!("bump {k}: x* must be nonzero"));
            }
            let t = kf / (kf + 1.0) * self.rgplus / xn;
            if (b.scale - t).abs() > 1e-12 * t.max(1.0) {
                return bad(format!("bump {k}: scale {} differs from k/(k+1)·rg+/|x*| = {t}", b.scale));
            }
            if (b.exponent - (1.0 + 1.0 / kf)).abs() > 1e-15 {
                return bad(format!("bump {k}: exponent must be 1 + 1/k"));
            }
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return bad(format!("bump {k}: radius must be positive"));
            }
        }
        for w in self.bumps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.radius > a.radius {
                return bad(format!("radii must not increase (bump {})", b.k));
            }
            if norm(&b.center) <= norm(&a.center) + 1.0 {
                return bad(format!("bump {} is not one unit farther out than bump {}", b.k, a.k));
            }
        }
        for i in 0..self.bumps.len() {
            for j in i + 1..self.bumps.len() {
                let (a, b) = (&self.bumps[i], &self.bumps[j]);
                if dist(&a.center, &b.center) <= a.radius + b.radius {
                    return bad(format!("balls of bumps {} and {} intersect", a.k, b.k));
                }
            }
        }
        Ok(())
    }

    fn active(&self, x: &[f64]) -> Option<&Bump> {
        self.bumps.iter().find(|b| b.inside(x))
    }

    /// `f(x)`; exactly zero outside every ball.
    pub fn eval_at(&self, x: &[f64]) -> Vec<f64> {
        match self.active(x) {
            Some(b) => b.eval(x),
            None => vec![0.0; self.m],
        }
    }

    /// Jacobian `m × n` of `f` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self.active(x) {
            Some(b) => {
                let g = b.gradient(x);
                b.direction.iter().map(|v| scale(&g, -b.scale * v)).collect()
            }
            None => vec![vec![0.0; self.n]; self.m],
        }
    }
}

impl SampledMap for PerturbationSpec {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_at(x)
    }
    fn lipschitz_window(&self) -> Option<(f64, f64)> {
        let r = self.bumps.first().map(|b| norm(&b.center) - b.radius).unwrap_or(0.0);
        Some((self.rgplus, r.max(0.0)))
    }
    fn support_balls(&self) -> Vec<(Vec<f64>, f64)> {
        self.bumps.iter().map(|b| (b.center.clone(), b.radius)).collect()
    }
    /// Radial pairs along `±x*` next to each boundary sphere, where the
    /// gradient norm reaches `rg⁺`.
    fn probe_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for b in &self.bumps {
            let Some(a) = normalized(&b.xstar) else { continue };
            for sign in [1.0, -1.0] {
                for e in [1e-3, 1e-5, 1e-7] {
                    let p = axpy(&b.center, sign * b.radius * (1.0 - e), &a);
                    let q = axpy(&b.center, sign * b.radius, &a);
                    out.push((p, q));
                }
            }
        }
        out
    }
}

/// Placement of the bump centers along the escape path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// `‖x_1‖`.
    pub start_radius: f64,
    /// `‖x_{k+1}‖ − ‖x_k‖`.
    pub spacing: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self { start_radius: 20.0, spacing: 4.0 }
    }
}

/// `ρ_k = min(1/k, (gap − 1)/2) · 4^{1−k}`.
pub fn bump_radius(k: usize, gap: f64) -> f64 {
    let kf = k as f64;
    (1.0 / kf).min(0.5 * (gap - 1.0)) * 4f64.powi(1 - k as i32)
}

/// Builds `count` bumps from the minimizer of `rg⁺`.
pub fn build_perturbation(f: &SetValuedMap, ybar: &[f64], count: usize, seed: u64) -> Result<PerturbationSpec> {
    build_perturbation_with(f, ybar, count, seed, &Placement::default())
}

pub fn build_perturbation_with(
    f: &SetValuedMap,
    ybar: &[f64],
    count: usize,
    seed: u64,
    placement: &Placement,
) -> Result<PerturbationSpec> {
    let rg = rg_plus(f, ybar)?;
    if rg.value.is_infinite() {
        return Err(Error::RgPlusInfinite);
    }
    if rg.value <= 1e-12 || count == 0 {
        return Ok(PerturbationSpec::zero(f.n(), f.m()));
    }
    let pair = rg.argmin.expect("finite rg+ has a minimizer");
    let (n, m) = (f.n(), f.m());
    let normal = concat(&pair.xstar, &scale(&pair.ystar, -1.0));
    let (_, strata) = normal_cone_at_infinity(f.graph(), n, ybar)?;
    let carriers: Vec<_> = strata
        .iter()
        .filter(|s| s.escape.is_some() && s.cone.contains(&normal))
        .collect();
    if carriers.is_empty() {
        return Err(Error::InsufficientEscape(0));
    }
    let cell = carriers[(seed % carriers.len() as u64) as usize];
    let w = cell.escape.as_ref().expect("filtered");
    let rep = &cell.representative;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda0 = 0.5 * rng.gen_range(0.5..1.0);

    let mut bumps = Vec::with_capacity(count);
    let mut centers: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(count + 1);
    for k in 1..=count + 1 {
        // Convex combination of the escape base (on the limit output) and an
        // interior point of the cell, pushed out along the escape direction.
        let lambda = lambda0 * 0.5f64.powi(k as i32);
        let bx: Vec<f64> = w.base.iter().zip(&rep[..n]).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        let y: Vec<f64> = ybar.iter().zip(&rep[n..]).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        let target = placement.start_radius + placement.spacing * (k - 1) as f64;
        let x = crate::regmod::point_at_radius(&bx, &w.direction, target);
        if !f.contains(&x, &y) || (norm(&x) - target).abs() > 1e-6 * target {
            return Err(Error::InsufficientEscape(k));
        }
        centers.push((x, y));
    }
    let xn = norm(&pair.xstar);
    for k in 1..=count {
        let gap = norm(&centers[k].0) - norm(&centers[k - 1].0);
        if gap <= 1.0 {
            return Err(Error::InsufficientEscape(k));
        }
        let kf = k as f64;
        bumps.push(Bump {
            k,
            center: centers[k - 1].0.clone(),
            partner: centers[k - 1].1.clone(),
            xstar: pair.xstar.clone(),
            ystar: pair.ystar.clone(),
            direction: pair.ystar.clone(),
            radius: bump_radius(k, gap),
            scale: kf / (kf + 1.0) * rg.value / xn,
            exponent: 1.0 + 1.0 / kf,
        });
    }
    PerturbationSpec::new(n, m, rg.value, bumps)
}

/// Evaluates `f` at `x`.
pub fn eval_perturbation(spec: &PerturbationSpec, x: &[f64]) -> Vec<f64> {
    spec.eval_at(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterCheck {
    pub k: usize,
    /// `‖x*_k + ∇f(x_k)ᵀ y*_k‖`.
    pub covector_norm: f64,
    /// `(1 − t_k⟨y*_k, v_k⟩)‖x*_k‖`.
    pub expected: f64,
    /// `(1 − t_k(1 − 1/k))‖x*_k‖`.
    pub bound: f64,
    /// `x*_k ∈ D*F(x_k, y_k)(y*_k)`.
    pub in_coderivative: bool,
    /// Largest entry gap between the analytic and central-difference Jacobians.
    pub jacobian_fd_error: f64,
    /// Sampled `dist(x, (F+f)⁻¹(y)) / dist(y, (F+f)(x))` next to the center.
    pub local_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub envelopes: Vec<f64>,
    pub decay_pass: bool,
    pub lipschitz: LipEstimate,
    pub lipschitz_pass: bool,
    pub rank_one_residual: f64,
    pub rank_one_pass: bool,
    pub outside_points: usize,
    pub zero_outside_pass: bool,
    pub centers: Vec<CenterCheck>,
    /// Covector norms decrease along `k`. Finite `K` only shows the trend.
    pub trend_evidence: bool,
    pub destabilization_pass: bool,
    pub pass: bool,
}

/// Checks decay, the Lipschitz bound, the rank-one form, vanishing outside the
/// balls and the covector shift at every center.
pub fn verify_perturbation(
    spec: &PerturbationSpec,
    f: &SetValuedMap,
    window: &InfinityWindow,
    cfg: &SamplerConfig,
) -> Result<PerturbationReport> {
    spec.validate()?;
    let (n, m) = (f.n(), f.m());
    if spec.n != n || spec.m != m {
        return Err(Error::DimensionMismatch { expected: n, got: spec.n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb0b);
    let per_ball = 200;

    // Decay: sup of ‖f‖ beyond ‖x_k‖ stays under the k-th envelope.
    let envelopes: Vec<f64> = spec.bumps.iter().map(Bump::envelope).collect();
    let mut decay_pass = envelopes.windows(2).all(|w| w[1] < w[0]);
    let mut rank_one_residual: f64 = 0.0;
    for (i, b) in spec.bumps.iter().enumerate() {
        let dirs = sphere_directions(n, per_ball, &mut rng);
        for d in &dirs {
            let x = axpy(&b.center, b.radius * rng.gen::<f64>(), d);
            let fx = spec.eval_at(&x);
            let nf = norm(&fx);
            // Points of this ball with ‖x‖ ≥ ‖x_j‖ for every j ≤ i.
            for j in 0..=i {
                if norm(&x) >= norm(&spec.bumps[j].center) && nf > envelopes[j] * (1.0 + 1e-12) {
                    decay_pass = false;
                }
            }
            let along = dot(&fx, &b.direction);
            rank_one_residual = rank_one_residual.max(norm(&axpy(&fx, -along, &b.direction)));
        }
    }
    let rank_one_pass = rank_one_residual <= 1e-12;

    let lipschitz = lip_at_infinity(spec, window, cfg);
    let lipschitz_pass = lipschitz.value <= spec.rgplus + 1e-6;

    // Exact zero outside: shells, plus points just beyond each boundary sphere.
    let mut outside = Vec::new();
    for d in sphere_directions(n, 1000, &mut rng) {
        let r = window.radius * (1.0 + 30.0 * rng.gen::<f64>());
        outside.push(scale(&d, r));
    }
    for b in &spec.bumps {
        for d in sphere_directions(n, 50, &mut rng) {
            outside.push(axpy(&b.center, b.radius * (1.0 + 1e-9 + rng.gen::<f64>()), &d));
        }
    }
    let outside: Vec<Vec<f64>> = outside
        .into_iter()
        .filter(|x| spec.bumps.iter().all(|b| dist(x, &b.center) >= b.radius))
        .collect();
    let zero_outside_pass = outside.iter().all(|x| spec.eval_at(x).iter().all(|v| *v == 0.0));

    let pm_f: &dyn SampledMap = spec;
    let pm = PerturbedMap::new(f, pm_f)?;
    let centers: Vec<CenterCheck> = spec
        .bumps
        .par_iter()
        .map(|b| center_check(spec, f, &pm, b))
        .collect::<Result<Vec<_>>>()?;
    let trend_evidence = centers.windows(2).all(|w| w[1].covector_norm < w[0].covector_norm);
    let destabilization_pass = if spec.is_zero() {
        spec.rgplus <= 1e-12
    } else {
        centers.iter().all(|c| c.pass) && trend_evidence
    };

    let pass = decay_pass && lipschitz_pass && rank_one_pass && zero_outside_pass && destabilization_pass;
    Ok(PerturbationReport {
        envelopes,
        decay_pass,
        lipschitz,
        lipschitz_pass,
        rank_one_residual,
        rank_one_pass,
        outside_points: outside.len(),
        zero_outside_pass,
        centers,
        trend_evidence,
        destabilization_pass,
        pass,
    })
}

fn center_check(spec: &PerturbationSpec, f: &SetValuedMap, pm: &PerturbedMap<'_>, b: &Bump) -> Result<CenterCheck> {
    let (n, m) = (f.n(), f.m());
    let jac = spec.jacobian(&b.center);
    // x* + Jᵀ y*
    let mut shifted = b.xstar.clone();
    for (i, row) in jac.iter().enumerate() {
        shifted = axpy(&shifted, b.ystar[i], row);
    }
    let covector_norm = norm(&shifted);
    let kf = b.k as f64;
    let xn = norm(&b.xstar);
    let expected = (1.0 - b.scale * dot(&b.ystar, &b.direction)) * xn;
    let bound = (1.0 - b.scale * (1.0 - 1.0 / kf)) * xn;

    let slice = coderivative_at_point(f, &b.center, &b.partner, &b.ystar)?;
    let in_coderivative = slice.distance(&b.xstar)? <= 1e-9 * xn.max(1.0);

    let h = 1e-6 * b.radius;
    let mut fd_err: f64 = 0.0;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = h;
        let fp = spec.eval_at(&crate::linalg::add(&b.center, &e));
        let fm = spec.eval_at(&sub(&b.center, &e));
        for i in 0..m {
            fd_err = fd_err.max(((fp[i] - fm[i]) / (2.0 * h) - jac[i][j]).abs());
        }
    }

    // Step off the center along x* and back toward the graph by a small residual.
    let a = normalized(&b.xstar).expect("nonzero x*");
    let x = axpy(&b.center, 0.01 * b.radius, &a);
    let y0 = crate::linalg::add(&b.partner, &spec.eval_at(&x));
    let y0 = match f.image_slice(&x)?.nearest(&b.partner)? {
        Some((_, p)) => crate::linalg::add(&p, &spec.eval_at(&x)),
        None => y0,
    };
    let eta = 0.01 * b.radius * (1.0 - b.scale * dot(&b.ystar, &b.direction)) * xn;
    let y = axpy(&y0, eta, &b.ystar);
    let den = pm.dist_to_image(&x, &y)?;
    let num = pm.dist_to_preimage_upper(&x, &y, 5000);
    let local_ratio = if den > 0.0 { num / den } else { f64::INFINITY };

    let pass = (covector_norm - expected).abs() <= 1e-9 && covector_norm <= bound + 1e-12 && in_coderivative;
    Ok(CenterCheck {
        k: b.k,
        covector_norm,
        expected,
        bound,
        in_coderivative,
        jacobian_fd_error: fd_err,
        local_ratio,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn window() -> InfinityWindow {
        InfinityWindow::new(10.0, 0.5, 0.5).unwrap()
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig { samples: 2000, seed: 3, shells: 4 }
    }

    #[test]
    fn spec_on_coordinate_projection() {
        let f = fixtures::coordinate_projection(1.0);
        let spec = build_perturbation(&f, &[0.0], 8, 1).unwrap();
        assert_eq!(spec.bumps().len(), 8);
        for b in spec.bumps() {
            let kf = b.k as f64;
            assert!((b.scale - kf / (kf + 1.0)).abs() < 1e-12);
            assert!(b.direction[0].abs() == 1.0);
            assert_eq!(b.direction, b.ystar);
        }
        let last = &spec.bumps()[7];
        let c = center_check(&spec, &f, &PerturbedMap::new(&f, &spec).unwrap(), last).unwrap();
        assert!((c.covector_norm - 1.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn eval_examples() {
        let f = fixtures::coordinate_projection(1.0);
        let spec = build_perturbation(&f, &[0.0], 3, 1).unwrap();
        let b = &spec.bumps()[0];
        assert_eq!(spec.eval_at(&b.center), vec![0.0]);
        let a = normalized(&b.xstar).unwrap();
        assert_eq!(spec.eval_at(&axpy(&b.center, b.radius, &a)), vec![0.0]);
        assert_eq!(spec.eval_at(&[0.0, 0.0]), vec![0.0]);
        // Oracle: the closed-form bump at half radius along x*.
        let x = axpy(&b.center, 0.5 * b.radius, &a);
        let q = 0.5f64.powf(b.exponent);
        let want = -b.scale * (1.0 - q) * 0.5 * b.radius * norm(&b.xstar) * b.direction[0];
        assert!((spec.eval_at(&x)[0] - want).abs() < 1e-15);
    }

    #[test]
    fn zero_spec_when_rg_plus_vanishes() {
        let f = fixtures::horizontal_ray();
        let spec = build_perturbation(&f, &[0.0], 8, 1).unwrap();
        assert!(spec.is_zero());
        let r = verify_perturbation(&spec, &f, &window(), &cfg()).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn single_bump() {
        let f = fixtures::coordinate_projection(1.0);
        let spec = build_perturbation(&f, &[0.0], 1, 1).unwrap();
        assert_eq!(spec.bumps().len(), 1);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn tampered_specs_are_rejected() {
        let f = fixtures::coordinate_projection(1.0);
        let spec = build_perturbation(&f, &[0.0], 3, 1).unwrap();
        let mut bumps = spec.bumps().to_vec();
        bumps[1].center = axpy(&bumps[0].center, 0.5 * bumps[0].radius, &[1.0, 0.0]);
        assert!(matches!(PerturbationSpec::new(2, 1, 1.0, bumps), Err(Error::InvalidSpec(_))));

        let mut bumps = spec.bumps().to_vec();
        bumps[2].scale *= 1.01;
        assert!(PerturbationSpec::new(2, 1, 1.0, bumps).is_err());

        let json = serde_json::to_string(&spec).unwrap();
        let tampered = json.replacen("\"k\":2", "\"k\":5", 1);
        assert!(serde_json::from_str::<PerturbationSpec>(&tampered).is_err());
        let back: PerturbationSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn jacobian_matches_differences_inside_ball() {
        let f = fixtures::piecewise_three();
        let spec = build_perturbation(&f, &[0.0], 2, 4).unwrap();
        let b = &spec.bumps()[0];
        let x = axpy(&b.center, 0.3 * b.radius, &[0.6, 0.8]);
        let jac = spec.jacobian(&x);
        let h = 1e-7 * b.radius;
        for j in 0..2 {
            let mut e = vec![0.0; 2];
            e[j] = h;
            let d = (spec.eval_at(&crate::linalg::add(&x, &e))[0] - spec.eval_at(&sub(&x, &e))[0]) / (2.0 * h);
            assert!((d - jac[0][j]).abs() < 1e-5 * (1.0 + jac[0][j].abs()), "{d} vs {}", jac[0][j]);
        }
    }

    #[test]
    fn verify_on_coordinate_projection() {
        let f = fixtures::coordinate_projection(1.0);
        let spec = build_perturbation(&f, &[0.0], 8, 1).unwrap();
        let r = verify_perturbation(&spec, &f, &window(), &cfg()).unwrap();
        assert!(r.decay_pass && r.lipschitz_pass && r.rank_one_pass && r.zero_outside_pass, "{r:?}");
        assert!(r.destabilization_pass, "{:?}", r.centers);
        assert!(r.lipschitz.value > 0.99);
        // Local ratios approach 1/((1 − t_k)‖x*‖) = k + 1 from below; the probe
        // sits at 1% of the radius where the cutoff still bends the slope.
        for c in &r.centers {
            let want = c.k as f64 + 1.0;
            assert!(c.local_ratio <= 1.01 * want && c.local_ratio >= 0.85 * want, "{c:?}");
        }
        assert!(r.centers.windows(2).all(|w| w[1].local_ratio > w[0].local_ratio));
    }
}
