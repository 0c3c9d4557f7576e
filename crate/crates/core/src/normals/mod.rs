//! Regular and limiting normal cones to finite unions of polyhedra, their
//! outer limits along sequences escaping to infinity, and the coderivatives
//! built from them.
//!
//! All exact routes work on the hyperplane arrangement generated by the rows
//! of every piece. On each relatively open cell of the arrangement the set of
//! pieces containing a point and their active rows are constant, hence so is
//! the regular normal cone. The limiting cone at `z` is the union over cells
//! whose closure contains `z`; the cone at `(∞, ȳ)` is the union over cells
//! whose closure carries a sequence with `‖x‖ → ∞` and `y → ȳ`.

mod sampled;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{slice_polyhedron, ConeUnion, Halfspace, PolyCone, Polyhedron, UnionRegion};
use crate::linalg::{dot, norm, scale};
use crate::svmap::{escape_witness, JelonekWitness, SetValuedMap};
use crate::tol::FEAS_TOL;

pub use sampled::{sampled_coderivative_limit, SampledCoderivative, StageSummary};

/// A pair `(x*, y*)` of dual vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovectorPair {
    pub xstar: Vec<f64>,
    pub ystar: Vec<f64>,
}

/// One cell of the arrangement together with its regular normal cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stratum {
    /// Pieces containing the cell.
    pub pieces: Vec<usize>,
    /// Active row indices, one list per entry of `pieces`.
    pub active: Vec<Vec<usize>>,
    /// A point of the cell.
    pub representative: Vec<f64>,
    /// Side of every arrangement hyperplane: `-1`, `0` or `1`.
    pub signs: Vec<i8>,
    /// The closure of the cell is unbounded.
    pub unbounded: bool,
    /// Limit of the output coordinates along the escape, for cells at infinity.
    pub y_limit: Option<Vec<f64>>,
    pub escape: Option<JelonekWitness>,
    pub cone: PolyCone,
}

/// Distinct hyperplanes carrying the rows of a union, with each row recorded
/// as `orientation · plane`.
struct Arrangement {
    dim: usize,
    planes: Vec<(Vec<f64>, f64)>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Arrangement {
    fn new(region: &UnionRegion) -> Self {
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut rows = Vec::new();
        for p in region.pieces() {
            let mut piece_rows = Vec::new();
            for r in p.rows() {
                let s = norm(&r.normal);
                let mut a = scale(&r.normal, 1.0 / s);
                let mut b = r.offset / s;
                let lead = a.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
                let orient = lead.signum();
                if orient < 0.0 {
                    a = scale(&a, -1.0);
                    b = -b;
                }
                let idx = planes
                    .iter()
                    .position(|(h, c)| {
                        h.iter().zip(&a).all(|(u, v)| (u - v).abs() <= 1e-12)
                            && (c - b).abs() <= 1e-12 * (1.0 + b.abs())
                    })
                    .unwrap_or_else(|| {
                        planes.push((a, b));
                        planes.len() - 1
                    });
                piece_rows.push((idx, orient));
            }
            rows.push(piece_rows);
        }
        Self { dim: region.dim(), planes, rows }
    }

    fn side(&self, p: usize, z: &[f64]) -> i8 {
        let (h, c) = &self.planes[p];
        let r = dot(h, z) - c;
        let tol = FEAS_TOL * (1.0 + c.abs()) + 1e-12 * norm(z);
        if r > tol {
            1
        } else if r < -tol {
            -1
        } else {
            0
        }
    }

    /// Signs allowed on each plane for cells inside piece `i`.
    fn allowed_in_piece(&self, i: usize) -> Vec<Vec<i8>> {
        let mut allowed = vec![vec![-1i8, 0, 1]; self.planes.len()];
        for &(p, o) in &self.rows[i] {
            allowed[p].retain(|s| (*s as f64) * o <= 0.0);
        }
        allowed
    }

    fn contains_cell(&self, piece: usize, signs: &[i8]) -> bool {
        self.rows[piece].iter().all(|&(p, o)| (signs[p] as f64) * o <= 0.0)
    }

    /// Closure of the cell described by the decided signs.
    fn closure(&self, signs: &[Option<i8>]) -> Polyhedron {
        let mut rows = Vec::new();
        for (p, s) in signs.iter().enumerate() {
            let (h, c) = &self.planes[p];
            match s {
                Some(-1) => rows.push(Halfspace::new(h.clone(), *c)),
                Some(1) => rows.push(Halfspace::new(scale(h, -1.0), -c)),
                Some(_) => {
                    rows.push(Halfspace::new(h.clone(), *c));
                    rows.push(Halfspace::new(scale(h, -1.0), -c));
                }
                None => {}
            }
        }
        Polyhedron::new(self.dim, rows).expect("arrangement normals are unit vectors")
    }

    /// A point of the relatively open cell with the decided signs, through the
    /// homogenized system in `(z, t)` with unit margins.
    fn open_cell_point(&self, signs: &[Option<i8>]) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut rows = vec![Halfspace::new(lift(&vec![0.0; d], -1.0), -1.0)];
        for (p, s) in signs.iter().enumerate() {
            let (h, c) = &self.planes[p];
            match s {
                Some(-1) => rows.push(Halfspace::new(lift(h, -c), -1.0)),
                Some(1) => rows.push(Halfspace::new(lift(&scale(h, -1.0), *c), -1.0)),
                Some(_) => {
                    rows.push(Halfspace::new(lift(h, -c), 0.0));
                    rows.push(Halfspace::new(lift(&scale(h, -1.0), *c), 0.0));
                }
                None => {}
            }
        }
        let sys = Polyhedron::new(d + 1, rows).ok()?;
        let zt = sys.project(&vec![0.0; d + 1]).ok()?;
        let t = zt[d];
        Some(zt[..d].iter().map(|v| v / t).collect())
    }

    /// Local version at `z0`: a point of the cell near `z0`, where only planes
    /// through `z0` carry decided signs.
    fn local_cell_point(&self, z0: &[f64], through: &[usize], signs: &[Option<i8>]) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut rows = Vec::new();
        for &p in through {
            let h = &self.planes[p].0;
            match signs[p] {
                Some(-1) => rows.push(Halfspace::new(h.clone(), -1.0)),
                Some(1) => rows.push(Halfspace::new(scale(h, -1.0), -1.0)),
                Some(_) => {
                    rows.push(Halfspace::new(h.clone(), 0.0));
                    rows.push(Halfspace::new(scale(h, -1.0), 0.0));
                }
                None => {}
            }
        }
        let sys = Polyhedron::new(d, rows).ok()?;
        let w = sys.project(&vec![0.0; d]).ok()?;
        // Stay on the same side of every plane that misses z0.
        let mut tau: f64 = 1e-3 / norm(&w).max(1.0);
        for (p, (h, c)) in self.planes.iter().enumerate() {
            if through.contains(&p) {
                continue;
            }
            let slack = (dot(h, z0) - c).abs();
            let rate = dot(h, &w).abs();
            if rate > 0.0 {
                tau = tau.min(0.5 * slack / rate);
            }
        }
        Some(z0.iter().zip(&w).map(|(a, b)| a + tau * b).collect())
    }

    /// Regular normal cone on a cell: intersection over containing pieces of
    /// the cone spanned by their active unit normals.
    fn stratum(&self, region: &UnionRegion, signs: Vec<i8>, representative: Vec<f64>) -> Stratum {
        let mut pieces = Vec::new();
        let mut active = Vec::new();
        let mut cone = PolyCone::full(self.dim);
        for (i, p) in region.pieces().iter().enumerate() {
            if !self.contains_cell(i, &signs) {
                continue;
            }
            let act: Vec<usize> = self.rows[i]
                .iter()
                .enumerate()
                .filter(|(_, (pl, _))| signs[*pl] == 0)
                .map(|(j, _)| j)
                .collect();
            let gens = act
                .iter()
                .map(|&j| {
                    let a = &p.rows()[j].normal;
                    scale(a, 1.0 / norm(a))
                })
                .collect();
            cone = cone.intersect(&PolyCone::from_generators(self.dim, gens));
            pieces.push(i);
            active.push(act);
        }
        let closure = self.closure(&signs.iter().map(|s| Some(*s)).collect::<Vec<_>>());
        Stratum {
            pieces,
            active,
            representative,
            signs,
            unbounded: !closure.is_bounded(),
            y_limit: None,
            escape: None,
            cone,
        }
    }
}

fn lift(a: &[f64], last: f64) -> Vec<f64> {
    let mut v = a.to_vec();
    v.push(last);
    v
}

enum Locus<'a> {
    Point(&'a [f64]),
    Infinity { n: usize, ybar: &'a [f64] },
}

/// Depth-first enumeration of sign vectors, pruned by open-cell feasibility and
/// by the locus predicate on the closure.
fn enumerate(region: &UnionRegion, locus: Locus<'_>) -> Vec<Stratum> {
    let arr = Arrangement::new(region);
    let np = arr.planes.len();
    let mut found: BTreeMap<Vec<i8>, Stratum> = BTreeMap::new();

    let (through, fixed): (Vec<usize>, Vec<Option<i8>>) = match locus {
        Locus::Point(z0) => {
            let sides: Vec<i8> = (0..np).map(|p| arr.side(p, z0)).collect();
            let through = (0..np).filter(|&p| sides[p] == 0).collect();
            let fixed = sides.iter().map(|s| (*s != 0).then_some(*s)).collect();
            (through, fixed)
        }
        Locus::Infinity { .. } => ((0..np).collect(), vec![None; np]),
    };

    for i in 0..region.pieces().len() {
        let allowed = arr.allowed_in_piece(i);
        if fixed.iter().enumerate().any(|(p, f)| f.is_some_and(|s| !allowed[p].contains(&s))) {
            continue;
        }
        // Forced planes first so pruning bites early.
        let mut order = through.clone();
        order.sort_by_key(|&p| allowed[p].len());
        let mut signs: Vec<Option<i8>> = vec![None; np];
        let ok = |signs: &[Option<i8>]| -> Option<Vec<f64>> {
            match locus {
                Locus::Point(z0) => arr.local_cell_point(z0, &through, signs),
                Locus::Infinity { n, ybar } => {
                    escape_witness(&arr.closure(signs), n, ybar)?;
                    arr.open_cell_point(signs)
                }
            }
        };
        if ok(&signs).is_none() {
            continue;
        }
        dfs(&arr, region, &order, 0, &allowed, &fixed, &mut signs, &ok, &mut found);
    }

    let mut out: Vec<Stratum> = Vec::new();
    for (_, mut s) in found {
        if let Locus::Infinity { n, ybar } = locus {
            let closure = arr.closure(&s.signs.iter().map(|v| Some(*v)).collect::<Vec<_>>());
            s.escape = escape_witness(&closure, n, ybar);
            s.y_limit = Some(ybar.to_vec());
        }
        // Cells with the same pieces and active rows share their cone.
        if !out.iter().any(|t| t.pieces == s.pieces && t.active == s.active) {
            out.push(s);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    arr: &Arrangement,
    region: &UnionRegion,
    order: &[usize],
    depth: usize,
    allowed: &[Vec<i8>],
    fixed: &[Option<i8>],
    signs: &mut Vec<Option<i8>>,
    ok: &dyn Fn(&[Option<i8>]) -> Option<Vec<f64>>,
    found: &mut BTreeMap<Vec<i8>, Stratum>,
) {
    if depth == order.len() {
        let full: Vec<i8> = signs
            .iter()
            .zip(fixed)
            .map(|(s, f)| s.or(*f).expect("every plane decided"))
            .collect();
        if found.contains_key(&full) {
            return;
        }
        if let Some(rep) = ok(signs) {
            let st = arr.stratum(region, full.clone(), rep);
            found.insert(full, st);
        }
        return;
    }
    let p = order[depth];
    for &s in &allowed[p] {
        signs[p] = Some(s);
        if ok(signs).is_some() {
            dfs(arr, region, order, depth + 1, allowed, fixed, signs, ok, found);
        }
    }
    signs[p] = None;
}

/// Cells of the arrangement whose closure contains `z`.
pub fn strata_at_point(region: &UnionRegion, z: &[f64]) -> Vec<Stratum> {
    if z.len() != region.dim() || !region.contains(z) {
        return Vec::new();
    }
    enumerate(region, Locus::Point(z))
}

/// Cells reachable by sequences with `‖x‖ → ∞` and `y → ȳ`, where `x` is made
/// of the first `n` coordinates.
pub fn strata_at_infinity(region: &UnionRegion, n: usize, ybar: &[f64]) -> Result<Vec<Stratum>> {
    if n + ybar.len() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: n + ybar.len() });
    }
    Ok(enumerate(region, Locus::Infinity { n, ybar }))
}

/// Regular normal cone at `z`; empty when `z` lies outside the region.
pub fn regular_normal_cone(region: &UnionRegion, z: &[f64]) -> ConeUnion {
    if z.len() != region.dim() || !region.contains(z) {
        return ConeUnion::empty(region.dim());
    }
    let mut cone = PolyCone::full(region.dim());
    for p in region.pieces() {
        if !p.contains(z) {
            continue;
        }
        let gens = p
            .active_rows(z)
            .into_iter()
            .map(|j| {
                let a = &p.rows()[j].normal;
                scale(a, 1.0 / norm(a))
            })
            .collect();
        cone = cone.intersect(&PolyCone::from_generators(region.dim(), gens));
    }
    ConeUnion::single(cone)
}

fn union_of(dim: usize, strata: &[Stratum]) -> ConeUnion {
    ConeUnion::new(dim, strata.iter().map(|s| s.cone.clone()).collect()).simplified()
}

/// Limiting normal cone at `z`; empty when `z` lies outside the region.
pub fn limiting_normal_cone(region: &UnionRegion, z: &[f64]) -> ConeUnion {
    union_of(region.dim(), &strata_at_point(region, z))
}

/// Outer limit of regular normal cones as `‖x‖ → ∞` and `y → ȳ`, together
/// with the cells it is assembled from. Empty when nothing escapes.
pub fn normal_cone_at_infinity(region: &UnionRegion, n: usize, ybar: &[f64]) -> Result<(ConeUnion, Vec<Stratum>)> {
    let strata = strata_at_infinity(region, n, ybar)?;
    Ok((union_of(region.dim(), &strata), strata))
}

fn slices(cone: &ConeUnion, n: usize, ystar: &[f64]) -> Result<UnionRegion> {
    let pieces = cone
        .pieces()
        .iter()
        .filter_map(|c| slice_polyhedron(c, n, ystar))
        .filter(|p| !p.is_empty())
        .collect();
    UnionRegion::new(n, pieces)
}

/// `{x* : (x*, −y*) ∈ N_gph(x, y)}` as a union of polyhedra in `ℝⁿ`.
pub fn coderivative_at_point(f: &SetValuedMap, x: &[f64], y: &[f64], ystar: &[f64]) -> Result<UnionRegion> {
    if ystar.len() != f.m() {
        return Err(Error::DimensionMismatch { expected: f.m(), got: ystar.len() });
    }
    let z = crate::linalg::concat(x, y);
    slices(&limiting_normal_cone(f.graph(), &z), f.n(), ystar)
}

/// `{x* : (x*, −y*) ∈ N_gph(∞, ȳ)}`.
pub fn coderivative_at_infinity(f: &SetValuedMap, ybar: &[f64], ystar: &[f64]) -> Result<UnionRegion> {
    if ystar.len() != f.m() {
        return Err(Error::DimensionMismatch { expected: f.m(), got: ystar.len() });
    }
    f.require_jelonek(ybar)?;
    let (cone, _) = normal_cone_at_infinity(f.graph(), f.n(), ybar)?;
    slices(&cone, f.n(), ystar)
}
