//! Small maps with closed-form moduli, used by tests, benches and scenarios.

use crate::geom::Polyhedron;
use crate::svmap::SetValuedMap;

/// `F(x) = {x}` on `ℝ`.
pub fn identity_1d() -> SetValuedMap {
    let p = Polyhedron::builder(2).eq(vec![1.0, -1.0], 0.0).build().expect("valid rows");
    SetValuedMap::from_pieces(1, 1, vec![p]).expect("valid map")
}

/// `gph F = {(x, 0) : x ≥ 1}`. Escapes over `ȳ = 0` with `rg⁺ = 0`.
pub fn horizontal_ray() -> SetValuedMap {
    let p = Polyhedron::builder(2)
        .eq(vec![0.0, 1.0], 0.0)
        .le(vec![-1.0, 0.0], -1.0)
        .build()
        .expect("valid rows");
    SetValuedMap::from_pieces(1, 1, vec![p]).expect("valid map")
}

/// `F(x₁, x₂) = {c·x₂}`: `rg⁺ = |c|` and `reg = 1/|c|` at `(∞, 0)`.
pub fn coordinate_projection(c: f64) -> SetValuedMap {
    let p = Polyhedron::builder(3).eq(vec![0.0, c, -1.0], 0.0).build().expect("valid rows");
    SetValuedMap::from_pieces(2, 1, vec![p]).expect("valid map")
}

/// `F(x₁, x₂) = {2x₂}` for `x₂ ≤ 0`, `{4x₂}` for `0 ≤ x₂ ≤ 1` and
/// `{x₂ + 3}` for `x₂ ≥ 1`. At `(∞, 0)` only the first two pieces matter and
/// `rg⁺ = 2`, `reg = 1/2`.
pub fn piecewise_three() -> SetValuedMap {
    let p1 = Polyhedron::builder(3)
        .eq(vec![0.0, 2.0, -1.0], 0.0)
        .le(vec![0.0, 1.0, 0.0], 0.0)
        .build()
        .expect("valid rows");
    let p2 = Polyhedron::builder(3)
        .eq(vec![0.0, 4.0, -1.0], 0.0)
        .le(vec![0.0, -1.0, 0.0], 0.0)
        .le(vec![0.0, 1.0, 0.0], 1.0)
        .build()
        .expect("valid rows");
    let p3 = Polyhedron::builder(3)
        .eq(vec![0.0, 1.0, -1.0], -3.0)
        .le(vec![0.0, -1.0, 0.0], -1.0)
        .build()
        .expect("valid rows");
    SetValuedMap::from_pieces(2, 1, vec![p1, p2, p3]).expect("valid map")
}

/// `F(x₁, x₂, x₃) = {(a·x₂, b·x₃)}`: `rg⁺ = min(|a|, |b|)` at `(∞, 0)`.
pub fn diagonal_scaling(a: f64, b: f64) -> SetValuedMap {
    let p = Polyhedron::builder(5)
        .eq(vec![0.0, a, 0.0, -1.0, 0.0], 0.0)
        .eq(vec![0.0, 0.0, b, 0.0, -1.0], 0.0)
        .build()
        .expect("valid rows");
    SetValuedMap::from_pieces(3, 2, vec![p]).expect("valid map")
}

/// Polygonal chain through `(1, 1), (2, 1/2), (4, 1/4), (8, 1/8), (16, 0)`
/// followed by the ray `{(x, 0) : x ≥ 16}`. Every `y ∈ (0, 1]` has exactly one
/// preimage; `y = 0` has the whole ray.
pub fn inverse_like_chain() -> SetValuedMap {
    let knots = [(1.0, 1.0), (2.0, 0.5), (4.0, 0.25), (8.0, 0.125), (16.0, 0.0)];
    let mut pieces: Vec<Polyhedron> = knots
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let slope = (y1 - y0) / (x1 - x0);
            Polyhedron::builder(2)
                .eq(vec![slope, -1.0], slope * x0 - y0)
                .le(vec![-1.0, 0.0], -x0)
                .le(vec![1.0, 0.0], x1)
                .build()
                .expect("valid rows")
        })
        .collect();
    pieces.push(
        Polyhedron::builder(2)
            .eq(vec![0.0, 1.0], 0.0)
            .le(vec![-1.0, 0.0], -16.0)
            .build()
            .expect("valid rows"),
    );
    SetValuedMap::from_pieces(1, 1, pieces).expect("valid map")
}
