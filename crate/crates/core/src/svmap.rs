//! Set-valued mappings `F : ℝⁿ ⇉ ℝᵐ` represented by a closed polyhedral graph,
//! plus black-box single-valued maps used as perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Halfspace, PolyCone, Polyhedron, UnionRegion};
use crate::linalg::{concat, dot, norm, sub};
use crate::tol::{scaled, FEAS_TOL, ZERO_TOL};

/// `F` with `gph F` a finite union of polyhedra in `ℝⁿ × ℝᵐ` (x first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetValuedMap {
    n: usize,
    m: usize,
    graph: UnionRegion,
}

impl SetValuedMap {
    pub fn new(n: usize, m: usize, graph: UnionRegion) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("input and output dimensions must be positive".into()));
        }
        if graph.dim() != n + m {
            return Err(Error::DimensionMismatch { expected: n + m, got: graph.dim() });
        }
        Ok(Self { n, m, graph })
    }

    pub fn from_pieces(n: usize, m: usize, pieces: Vec<Polyhedron>) -> Result<Self> {
        Self::new(n, m, UnionRegion::new(n + m, pieces)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn graph(&self) -> &UnionRegion {
        &self.graph
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: y.len() });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        self.graph.contains(&concat(x, y))
    }

    /// `F(x)` as a union of polyhedra in `ℝᵐ` (empty pieces dropped).
    pub fn image_slice(&self, x: &[f64]) -> Result<UnionRegion> {
        self.check_x(x)?;
        let pieces = self
            .graph
            .pieces()
            .iter()
            .filter_map(|p| slice_piece(p, x, 0, self.n, self.m))
            .collect();
        UnionRegion::new(self.m, pieces)
    }

    /// `F⁻¹(y)` as a union of polyhedra in `ℝⁿ` (empty pieces dropped).
    pub fn preimage_slice(&self, y: &[f64]) -> Result<UnionRegion> {
        self.check_y(y)?;
        let pieces = self
            .graph
            .pieces()
            .iter()
            .filter_map(|p| slice_piece(p, y, self.n, self.m, self.n))
            .collect();
        UnionRegion::new(self.n, pieces)
    }

    /// `dist(y, F(x))`, `+∞` when `F(x) = ∅`.
    pub fn dist_to_image(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_y(y)?;
        self.image_slice(x)?.distance(y)
    }

    /// `dist(x, F⁻¹(y))`, `+∞` when `F⁻¹(y) = ∅`.
    pub fn dist_to_preimage(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        self.preimage_slice(y)?.distance(x)
    }

    /// The graph of `x ↦ c·F(x)`.
    pub fn scale_output(&self, c: f64) -> Result<SetValuedMap> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidInput("output scale must be finite and nonzero".into()));
        }
        let pieces = self
            .graph
            .pieces()
            .iter()
            .map(|p| {
                let rows = p
                    .rows()
                    .iter()
                    .map(|r| {
                        let mut a = r.normal.clone();
                        for v in &mut a[self.n..] {
                            *v /= c;
                        }
                        Halfspace::new(a, r.offset)
                    })
                    .collect();
                Polyhedron::new(self.n + self.m, rows)
            })
            .collect::<Result<Vec<_>>>()?;
        SetValuedMap::from_pieces(self.n, self.m, pieces)
    }

    /// Decides `ȳ ∈ J(F)`: some graph piece has a nonempty slice at `ȳ` whose
    /// recession cone contains a nonzero direction.
    pub fn jelonek_contains(&self, ybar: &[f64]) -> Result<JelonekDecision> {
        self.check_y(ybar)?;
        let mut witnesses = Vec::new();
        let mut grid = Vec::new();
        for (i, p) in self.graph.pieces().iter().enumerate() {
            if let Some(mut w) = escape_witness(p, self.n, ybar) {
                w.piece = i;
                witnesses.push(w);
            }
            for &eps in &JELONEK_EPS {
                for &big in &JELONEK_M {
                    grid.push(GridProbe {
                        piece: i,
                        eps,
                        big,
                        feasible: grid_feasible(p, self.n, ybar, eps, big),
                    });
                }
            }
        }
        Ok(JelonekDecision { contains: !witnesses.is_empty(), witnesses, grid })
    }

    pub fn require_jelonek(&self, ybar: &[f64]) -> Result<JelonekDecision> {
        let d = self.jelonek_contains(ybar)?;
        if d.contains {
            Ok(d)
        } else {
            Err(Error::NotInJelonekSet)
        }
    }
}

/// Fixes the coordinates `[start, start+len)` of a piece to `value` and keeps
/// the remaining `out_dim` coordinates.
fn slice_piece(p: &Polyhedron, value: &[f64], start: usize, len: usize, out_dim: usize) -> Option<Polyhedron> {
    let mut rows = Vec::new();
    for r in p.rows() {
        let fixed = &r.normal[start..start + len];
        let free: Vec<f64> = r
            .normal
            .iter()
            .enumerate()
            .filter(|(j, _)| *j < start || *j >= start + len)
            .map(|(_, v)| *v)
            .collect();
        let rhs = r.offset - dot(fixed, value);
        if norm(&free) <= ZERO_TOL {
            if rhs < -scaled(FEAS_TOL, r.offset + dot(fixed, value).abs()) {
                return None;
            }
            continue;
        }
        rows.push(Halfspace::new(free, rhs));
    }
    let q = Polyhedron::new(out_dim, rows).ok()?;
    (!q.is_empty()).then_some(q)
}

/// `ε` grid of the diagnostic escape probes.
pub const JELONEK_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
/// `M` grid of the diagnostic escape probes.
pub const JELONEK_M: [f64; 3] = [1e2, 1e4, 1e6];

/// Evidence that a piece escapes to infinity over `ȳ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JelonekWitness {
    pub piece: usize,
    /// `x₀` with `(x₀, ȳ)` in the piece.
    pub base: Vec<f64>,
    /// Unit `d` with `(x₀ + t d, ȳ)` in the piece for all `t ≥ 0`.
    pub direction: Vec<f64>,
    /// Generators of the recession cone of the slice at `ȳ`.
    pub recession: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProbe {
    pub piece: usize,
    pub eps: f64,
    pub big: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JelonekDecision {
    pub contains: bool,
    pub witnesses: Vec<JelonekWitness>,
    /// Feasibility of `‖y − ȳ‖∞ ≤ ε, ‖x‖∞ ≥ M` per piece, for reporting.
    pub grid: Vec<GridProbe>,
}

/// For a polyhedron `P ⊂ ℝⁿ × ℝᵐ`, a sequence in `P` with `‖x‖ → ∞` and
/// `y → ȳ` exists iff the slice `{x : (x, ȳ) ∈ P}` is nonempty and unbounded.
pub fn escape_witness(p: &Polyhedron, n: usize, ybar: &[f64]) -> Option<JelonekWitness> {
    let slice = slice_piece(p, ybar, n, ybar.len(), n)?;
    let rec = PolyCone::from_rows(n, p.rows().iter().map(|r| r.normal[..n].to_vec()).collect());
    let direction = rec.generators().first()?.clone();
    let base = slice.project(&vec![0.0; n]).ok()?;
    Some(JelonekWitness {
        piece: 0,
        base,
        direction,
        recession: rec.generators().to_vec(),
    })
}

fn grid_feasible(p: &Polyhedron, n: usize, ybar: &[f64], eps: f64, big: f64) -> bool {
    let dim = p.dim();
    let mut boxed = p.clone();
    for (j, yb) in ybar.iter().enumerate() {
        let mut e = vec![0.0; dim];
        e[n + j] = 1.0;
        boxed = boxed.with_row(e.clone(), yb + eps).expect("unit row");
        e[n + j] = -1.0;
        boxed = boxed.with_row(e, eps - yb).expect("unit row");
    }
    (0..n).any(|i| {
        [1.0, -1.0].iter().any(|s| {
            let mut e = vec![0.0; dim];
            e[i] = -s;
            boxed.with_row(e, -big).map(|q| !q.is_empty()).unwrap_or(false)
        })
    })
}

/// Neighborhood of `(∞, ȳ)`: `‖x‖ > radius`, `‖y − ȳ‖ < output_radius`,
/// residual `dist(y, F(x)) < residual_cap`, and the radii schedule used when
/// detecting limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityWindow {
    pub radius: f64,
    pub output_radius: f64,
    pub residual_cap: f64,
    pub schedule: Vec<f64>,
}

impl InfinityWindow {
    /// Window with the schedule `R_j = radius·2^j`, `j = 0..=10`.
    pub fn new(radius: f64, output_radius: f64, residual_cap: f64) -> Result<Self> {
        let schedule = (0..=10).map(|j| radius * 2f64.powi(j)).collect();
        let w = Self { radius, output_radius, residual_cap, schedule };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.radius, self.output_radius, self.residual_cap];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("window radii and residual cap must be positive".into()));
        }
        if self.schedule.len() < 2 || self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("schedule must be strictly increasing with at least two radii".into()));
        }
        Ok(())
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        let ratio = radius / self.radius;
        Self {
            radius,
            schedule: self.schedule.iter().map(|r| r * ratio).collect(),
            ..self.clone()
        }
    }
}

impl Default for InfinityWindow {
    fn default() -> Self {
        Self::new(10.0, 0.5, 0.5).expect("default window is valid")
    }
}

/// A single-valued map `f : ℝⁿ → ℝᵐ` seen only through evaluations.
///
/// Implementations must be safe to call concurrently.
pub trait SampledMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;

    /// Declared Lipschitz constant and the radius beyond which it holds.
    fn lipschitz_window(&self) -> Option<(f64, f64)> {
        None
    }

    /// Balls `(center, radius)` outside of which the map is known to be zero.
    fn support_balls(&self) -> Vec<(Vec<f64>, f64)> {
        Vec::new()
    }

    /// Point pairs where difference quotients are known to peak.
    fn probe_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroMap {
    pub n: usize,
    pub m: usize,
}

impl SampledMap for ZeroMap {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.m]
    }
    fn lipschitz_window(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct ConstantMap {
    pub n: usize,
    pub value: Vec<f64>,
}

impl SampledMap for ConstantMap {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.value.len()
    }
    fn eval(&self, _x: &[f64]) -> Vec<f64> {
        self.value.clone()
    }
    fn lipschitz_window(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// Wraps a closure.
pub struct FnMap<F> {
    pub n: usize,
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> SampledMap for FnMap<F> {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// `F + f`, with `(F + f)(x) = F(x) + f(x)`.
///
/// Only distance-to-image queries are exact; preimages go through the
/// fixed-point iteration.
pub struct PerturbedMap<'a> {
    pub base: &'a SetValuedMap,
    pub f: &'a dyn SampledMap,
}

impl<'a> PerturbedMap<'a> {
    pub fn new(base: &'a SetValuedMap, f: &'a dyn SampledMap) -> Result<Self> {
        if f.input_dim() != base.n() {
            return Err(Error::DimensionMismatch { expected: base.n(), got: f.input_dim() });
        }
        if f.output_dim() != base.m() {
            return Err(Error::DimensionMismatch { expected: base.m(), got: f.output_dim() });
        }
        Ok(Self { base, f })
    }

    /// `F(x) + f(x)`.
    pub fn image_slice(&self, x: &[f64]) -> Result<UnionRegion> {
        let shift = self.f.eval(x);
        let s = self.base.image_slice(x)?;
        let pieces = s
            .pieces()
            .iter()
            .map(|p| {
                let rows = p
                    .rows()
                    .iter()
                    .map(|r| Halfspace::new(r.normal.clone(), r.offset + dot(&r.normal, &shift)))
                    .collect();
                Polyhedron::new(p.dim(), rows)
            })
            .collect::<Result<Vec<_>>>()?;
        UnionRegion::new(self.base.m(), pieces)
    }

    /// `dist(y, F(x) + f(x)) = dist(y − f(x), F(x))`.
    pub fn dist_to_image(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.base.dist_to_image(x, &sub(y, &self.f.eval(x)))
    }

    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        self.base.contains(x, &sub(y, &self.f.eval(x)))
    }

    /// Upper bound on `dist(x, (F+f)⁻¹(y))` from the limit of the fixed-point
    /// iteration started at `x`; `+∞` if it does not settle.
    pub fn dist_to_preimage_upper(&self, x: &[f64], y: &[f64], max_iters: usize) -> f64 {
        match crate::lgsolve::plain_iteration(self.base, self.f, y, x, max_iters) {
            Some(z) => crate::linalg::dist(x, &z),
            None => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn interval_pts(r: &UnionRegion) -> Vec<(f64, f64)> {
        // [lo, hi] of each 1-d piece via projections of ±∞ proxies.
        r.pieces()
            .iter()
            .map(|p| (p.project(&[-1e12]).unwrap()[0], p.project(&[1e12]).unwrap()[0]))
            .collect()
    }

    #[test]
    fn image_slice_examples() {
        let id = fixtures::identity_1d();
        let s = id.image_slice(&[3.0]).unwrap();
        assert_eq!(s.pieces().len(), 1);
        assert!((s.pieces()[0].project(&[0.0]).unwrap()[0] - 3.0).abs() < 1e-12);

        let ray = fixtures::horizontal_ray();
        assert!(ray.image_slice(&[0.0]).unwrap().is_empty());

        // {y ≥ x} ∪ {y ≤ −x} at x = 1.
        let cone = SetValuedMap::from_pieces(
            1,
            1,
            vec![
                Polyhedron::builder(2).le(vec![1.0, -1.0], 0.0).build().unwrap(),
                Polyhedron::builder(2).le(vec![1.0, 1.0], 0.0).build().unwrap(),
            ],
        )
        .unwrap();
        let mut iv = interval_pts(&cone.image_slice(&[1.0]).unwrap());
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((iv[0].0 + 1e12).abs() < 1.0 && (iv[0].1 + 1.0).abs() < 1e-9);
        assert!((iv[1].0 - 1.0).abs() < 1e-9 && (iv[1].1 - 1e12).abs() < 1.0);
    }

    #[test]
    fn preimage_slice_examples() {
        let id = fixtures::identity_1d();
        let s = id.preimage_slice(&[3.0]).unwrap();
        assert!((s.pieces()[0].project(&[0.0]).unwrap()[0] - 3.0).abs() < 1e-12);
        let ray = fixtures::horizontal_ray();
        let iv = interval_pts(&ray.preimage_slice(&[0.0]).unwrap());
        assert!((iv[0].0 - 1.0).abs() < 1e-9 && iv[0].1 > 1e11);
        assert!(ray.preimage_slice(&[0.1]).unwrap().is_empty());
    }

    #[test]
    fn dist_to_image_examples() {
        let id = fixtures::identity_1d();
        assert_eq!(id.dist_to_image(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!((id.dist_to_image(&[1.0], &[3.0]).unwrap() - 2.0).abs() < 1e-12);
        let ray = fixtures::horizontal_ray();
        assert_eq!(ray.dist_to_image(&[0.0], &[0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn jelonek_examples() {
        let ray = fixtures::horizontal_ray();
        let d = ray.jelonek_contains(&[0.0]).unwrap();
        assert!(d.contains);
        assert!((d.witnesses[0].direction[0] - 1.0).abs() < 1e-12);
        assert!(d.grid.iter().all(|g| g.feasible));

        assert!(!fixtures::identity_1d().jelonek_contains(&[0.0]).unwrap().contains);

        let mixed = SetValuedMap::from_pieces(
            1,
            1,
            vec![
                Polyhedron::builder(2).eq(vec![1.0, -1.0], 0.0).build().unwrap(),
                Polyhedron::builder(2).eq(vec![0.0, 1.0], 0.0).le(vec![1.0, 0.0], -1.0).build().unwrap(),
            ],
        )
        .unwrap();
        let d = mixed.jelonek_contains(&[0.0]).unwrap();
        assert!(d.contains);
        assert_eq!(d.witnesses.len(), 1);
        assert_eq!(d.witnesses[0].piece, 1);
        assert!((d.witnesses[0].direction[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_map_examples() {
        let id = fixtures::identity_1d();
        let zero = ZeroMap { n: 1, m: 1 };
        let pm = PerturbedMap::new(&id, &zero).unwrap();
        assert_eq!(pm.dist_to_image(&[2.0], &[5.0]).unwrap(), id.dist_to_image(&[2.0], &[5.0]).unwrap());
        let c = ConstantMap { n: 1, value: vec![0.25] };
        let pm = PerturbedMap::new(&id, &c).unwrap();
        assert!(pm.dist_to_image(&[0.0], &[0.25]).unwrap() < 1e-15);
        let img = pm.image_slice(&[1.0]).unwrap();
        assert!(img.contains(&[1.25]) && !img.contains(&[1.0]));
    }

    #[test]
    fn scale_output_scales_images() {
        let f = fixtures::coordinate_projection(1.0);
        let g = f.scale_output(2.0).unwrap();
        assert!(g.contains(&[5.0, 1.5], &[3.0]));
        assert!(!g.contains(&[5.0, 1.5], &[1.5]));
    }

    #[test]
    fn window_validation() {
        assert!(InfinityWindow::new(10.0, 0.5, 0.5).is_ok());
        assert!(InfinityWindow::new(-1.0, 0.5, 0.5).is_err());
        let mut w = InfinityWindow::default();
        w.schedule = vec![1.0, 1.0];
        assert!(w.validate().is_err());
    }
}
