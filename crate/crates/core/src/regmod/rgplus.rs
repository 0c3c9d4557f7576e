use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{min_norm_in_slice, ConeUnion, PolyCone};
use crate::linalg::{norm, nullspace, scale, subsets, sym_eigen};
use crate::normals::{normal_cone_at_infinity, CovectorPair};
use crate::sampling::sphere_directions;
use crate::svmap::SetValuedMap;
use crate::tol::ZERO_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RgMethod {
    ExactFaceEnumeration,
    SphereGridRefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgPlusResult {
    /// `+∞` when no unit `y*` admits any `x*`.
    pub value: f64,
    /// `(x*, y*)` with `(x*, −y*)` in the normal cone at infinity, `‖y*‖ = 1`
    /// and `‖x*‖ = value`.
    pub argmin: Option<CovectorPair>,
    /// Piece of the normal cone carrying the minimizer.
    pub piece: Option<usize>,
    pub method: RgMethod,
    /// Independent sphere-grid value, when the output dimension allows it.
    pub grid_value: Option<f64>,
}

/// `min ‖u‖/‖v‖` over `(u, v)` in the cone with `v ≠ 0`, where `u` holds the
/// first `split` coordinates. Returns the ratio and a minimizer scaled to
/// `‖v‖ = 1`, or `None` when every point of the cone has `v = 0`.
///
/// The minimum of this homogeneous ratio is attained in the relative interior
/// of some face, where it is a critical point on the face's span. With an
/// orthonormal basis `B` of the span and `P = B_uᵀ B_u`, critical points are
/// eigenvectors of `P` and an eigenvalue `θ < 1` gives the ratio
/// `√(θ / (1 − θ))`. Spans are generated by every subset of at most `dim`
/// rows, which covers all faces including implicit equalities.
pub fn min_ratio(cone: &PolyCone, split: usize) -> Option<(f64, Vec<f64>)> {
    let dim = cone.dim();
    let rows = cone.rows();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=rows.len().min(dim) {
        for s in subsets(rows.len(), k) {
            let eqs: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].clone()).collect();
            let basis = nullspace(&eqs, dim);
            if basis.is_empty() {
                continue;
            }
            let kk = basis.len();
            let p: Vec<Vec<f64>> = (0..kk)
                .map(|a| {
                    (0..kk)
                        .map(|b| (0..split).map(|i| basis[a][i] * basis[b][i]).sum())
                        .collect()
                })
                .collect();
            for (theta, c) in sym_eigen(&p) {
                if theta >= 1.0 - 1e-12 {
                    continue;
                }
                let mut z = vec![0.0; dim];
                for (a, ca) in c.iter().enumerate() {
                    for i in 0..dim {
                        z[i] += ca * basis[a][i];
                    }
                }
                let vn = norm(&z[split..]);
                if vn <= ZERO_TOL {
                    continue;
                }
                let ratio = (theta.max(0.0) / (1.0 - theta)).sqrt();
                for sign in [1.0, -1.0] {
                    let w = scale(&z, sign / vn);
                    if cone.contains(&w) && best.as_ref().is_none_or(|(r, _)| ratio < *r - 1e-15) {
                        best = Some((ratio, w));
                    }
                }
            }
        }
    }
    // Report the ratio of the returned vector itself.
    best.map(|(_, w)| (norm(&w[..split]), w))
}

fn flip_outputs(cone: &PolyCone, n: usize) -> PolyCone {
    cone.map_coords(|v| v.iter().enumerate().map(|(i, x)| if i < n { *x } else { -x }).collect())
}

/// `inf {‖x*‖ : (x*, −y*) ∈ N_gph(∞, ȳ), ‖y*‖ = 1}` by exact face enumeration,
/// cross-checked on a sphere grid over `y*` when `m ≤ 3`.
pub fn rg_plus(f: &SetValuedMap, ybar: &[f64]) -> Result<RgPlusResult> {
    f.require_jelonek(ybar)?;
    let (cone, _) = normal_cone_at_infinity(f.graph(), f.n(), ybar)?;
    Ok(rg_plus_of_cone(&cone, f.n(), f.m()))
}

pub(crate) fn rg_plus_of_cone(cone: &ConeUnion, n: usize, m: usize) -> RgPlusResult {
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for (i, piece) in cone.pieces().iter().enumerate() {
        if let Some((r, w)) = min_ratio(&flip_outputs(piece, n), n) {
            if best.as_ref().is_none_or(|(b, _, _)| r < *b) {
                best = Some((r, w, i));
            }
        }
    }
    let grid_value = sphere_grid(cone, n, m);
    match best {
        Some((value, w, piece)) => RgPlusResult {
            value,
            argmin: Some(CovectorPair { xstar: w[..n].to_vec(), ystar: w[n..].to_vec() }),
            piece: Some(piece),
            method: RgMethod::ExactFaceEnumeration,
            grid_value,
        },
        None => RgPlusResult {
            value: f64::INFINITY,
            argmin: None,
            piece: None,
            method: RgMethod::ExactFaceEnumeration,
            grid_value,
        },
    }
}

fn slice_min(cone: &ConeUnion, n: usize, ystar: &[f64]) -> f64 {
    cone.pieces()
        .iter()
        .filter_map(|p| min_norm_in_slice(p, n, ystar).ok())
        .map(|x| norm(&x))
        .fold(f64::INFINITY, f64::min)
}

/// `min_{‖y*‖=1} min ‖x*‖` on a sphere grid: `±1` for `m = 1`, a one-degree
/// circle grid with three bisection rounds for `m = 2`, and a Fibonacci
/// sphere with three local refinement rounds for `m = 3`.
fn sphere_grid(cone: &ConeUnion, n: usize, m: usize) -> Option<f64> {
    let val = |y: &[f64]| slice_min(cone, n, y);
    match m {
        1 => Some(val(&[1.0]).min(val(&[-1.0]))),
        2 => {
            let step = std::f64::consts::PI / 180.0;
            let at = |a: f64| val(&[a.cos(), a.sin()]);
            let (mut ba, mut bv) = (0.0, at(0.0));
            for k in 1..360 {
                let a = k as f64 * step;
                let v = at(a);
                if v < bv {
                    (ba, bv) = (a, v);
                }
            }
            let mut h = step;
            for _ in 0..3 {
                h *= 0.5;
                for a in [ba - h, ba + h] {
                    let v = at(a);
                    if v < bv {
                        (ba, bv) = (a, v);
                    }
                }
            }
            Some(bv)
        }
        3 => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            let pts = sphere_directions(3, 4000, &mut rng);
            let mut best = pts[0].clone();
            let mut bv = val(&best);
            for p in &pts[1..] {
                let v = val(p);
                if v < bv {
                    (best, bv) = (p.clone(), v);
                }
            }
            let mut h = 0.05;
            for _ in 0..3 {
                h *= 0.5;
                for i in 0..3 {
                    for s in [-h, h] {
                        let mut q = best.clone();
                        q[i] += s;
                        let q = scale(&q, 1.0 / norm(&q));
                        let v = val(&q);
                        if v < bv {
                            (best, bv) = (q, v);
                        }
                    }
                }
            }
            Some(bv)
        }
        _ => None,
    }
}

/// `sup {‖y‖ : y ∈ H(x), ‖x‖ ≤ 1}` for a positively homogeneous `H` whose graph
/// is the given union of cones in `(x, y)`-space with `n_in` input coordinates.
pub fn upper_norm(graph: &ConeUnion, n_in: usize) -> f64 {
    let r = graph
        .pieces()
        .iter()
        .filter_map(|c| min_ratio(c, n_in).map(|(r, _)| r))
        .fold(f64::INFINITY, f64::min);
    if r.is_infinite() {
        0.0
    } else if r <= ZERO_TOL {
        f64::INFINITY
    } else {
        1.0 / r
    }
}

/// Graph of `D*F(∞, ȳ)⁻¹`, i.e. pairs `(x*, y*)` with `(x*, −y*)` in the cone.
pub fn inverse_coderivative_graph(cone: &ConeUnion, n: usize) -> ConeUnion {
    ConeUnion::new(cone.dim(), cone.pieces().iter().map(|p| flip_outputs(p, n)).collect())
}
