//! Exact small-dimension convex geometry: H-polyhedra, finite unions of them,
//! polyhedral cones with both representations, projections and distances.

mod cone;
pub(crate) mod qp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, nullspace, norm, rank, solve_square, subsets};
use crate::tol::{scaled, FEAS_TOL};

pub use cone::{angular_distance, extreme_rays, min_norm_in_slice, slice_polyhedron, ConeUnion, PolyCone};

/// Closed halfspace `⟨normal, z⟩ ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `⟨normal, z⟩ − offset`; nonpositive inside.
    pub fn residual(&self, z: &[f64]) -> f64 {
        dot(&self.normal, z) - self.offset
    }

    fn tolerance(&self, z: &[f64]) -> f64 {
        scaled(FEAS_TOL, self.offset) * norm(&self.normal).max(1.0) + FEAS_TOL * norm(z) * 1e-3
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyhedronRepr {
    dim: usize,
    rows: Vec<Halfspace>,
}

/// Convex polyhedron `{z ∈ ℝ^dim : ⟨a_i, z⟩ ≤ b_i}`. May be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyhedronRepr", into = "PolyhedronRepr")]
pub struct Polyhedron {
    dim: usize,
    rows: Vec<Halfspace>,
}

impl TryFrom<PolyhedronRepr> for Polyhedron {
    type Error = Error;
    fn try_from(r: PolyhedronRepr) -> Result<Self> {
        Polyhedron::new(r.dim, r.rows)
    }
}

impl From<Polyhedron> for PolyhedronRepr {
    fn from(p: Polyhedron) -> Self {
        PolyhedronRepr { dim: p.dim, rows: p.rows }
    }
}

impl Polyhedron {
    pub fn new(dim: usize, rows: Vec<Halfspace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("polyhedron dimension must be positive".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.normal.len() });
            }
            if !r.offset.is_finite() || r.normal.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite entry")));
            }
            if norm(&r.normal) == 0.0 {
                return Err(Error::DegenerateRow(i));
            }
        }
        Ok(Self { dim, rows })
    }

    /// The whole space.
    pub fn whole(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn builder(dim: usize) -> PolyhedronBuilder {
        PolyhedronBuilder { dim, rows: Vec::new() }
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        let mut b = Self::builder(dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            b = b.le(e.clone(), hi[i]);
            e[i] = -1.0;
            b = b.le(e, -lo[i]);
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    fn pairs(&self) -> Vec<(Vec<f64>, f64)> {
        self.rows.iter().map(|r| (r.normal.clone(), r.offset)).collect()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.rows.iter().all(|r| r.residual(z) <= r.tolerance(z))
    }

    /// Indices of rows that hold with equality at `z`.
    pub fn active_rows(&self, z: &[f64]) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.residual(z).abs() <= r.tolerance(z))
            .map(|(i, _)| i)
            .collect()
    }

    /// Euclidean projection of `z`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        qp::project(z, &self.pairs())
    }

    pub fn is_empty(&self) -> bool {
        self.project(&vec![0.0; self.dim]).is_err()
    }

    /// Distance from `z`, `+∞` when empty.
    pub fn distance(&self, z: &[f64]) -> f64 {
        match self.project(z) {
            Ok(p) => dist(z, &p),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Polyhedron { dim: self.dim, rows })
    }

    pub fn with_row(&self, normal: Vec<f64>, offset: f64) -> Result<Polyhedron> {
        let mut rows = self.rows.clone();
        rows.push(Halfspace::new(normal, offset));
        Polyhedron::new(self.dim, rows)
    }

    /// `{d : ⟨a_i, d⟩ ≤ 0}`.
    pub fn recession_cone(&self) -> PolyCone {
        PolyCone::from_rows(self.dim, self.rows.iter().map(|r| r.normal.clone()).collect())
    }

    /// Bounded iff nonempty with trivial recession cone (empty sets count as bounded).
    pub fn is_bounded(&self) -> bool {
        self.is_empty() || self.recession_cone().is_zero()
    }

    /// Vertices by enumerating every set of `dim` linearly independent active rows.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let normals: Vec<Vec<f64>> = self.rows.iter().map(|r| r.normal.clone()).collect();
        if rank(&normals, self.dim) < self.dim {
            // Nonzero lineality space: no vertices.
            return Vec::new();
        }
        let mut out: Vec<Vec<f64>> = Vec::new();
        for s in subsets(self.rows.len(), self.dim) {
            let a: Vec<Vec<f64>> = s.iter().map(|&i| self.rows[i].normal.clone()).collect();
            let b: Vec<f64> = s.iter().map(|&i| self.rows[i].offset).collect();
            if rank(&a, self.dim) < self.dim {
                continue;
            }
            let Some(v) = solve_square(&a, &b) else { continue };
            if self.contains(&v) && !out.iter().any(|w| dist(w, &v) < 1e-9 * (1.0 + norm(&v))) {
                out.push(v);
            }
        }
        out
    }

    /// Diameter: `0` for points, `+∞` for unbounded sets, `−∞` for the empty set.
    pub fn diameter(&self) -> f64 {
        if self.is_empty() {
            return f64::NEG_INFINITY;
        }
        if !self.recession_cone().is_zero() {
            return f64::INFINITY;
        }
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist(&v[i], &v[j]));
            }
        }
        d
    }

    /// Lineality space basis, i.e. directions `d` with `⟨a_i, d⟩ = 0` for all rows.
    pub fn lineality(&self) -> Vec<Vec<f64>> {
        let normals: Vec<Vec<f64>> = self.rows.iter().map(|r| r.normal.clone()).collect();
        nullspace(&normals, self.dim)
    }
}

pub struct PolyhedronBuilder {
    dim: usize,
    rows: Vec<Halfspace>,
}

impl PolyhedronBuilder {
    /// `⟨a, z⟩ ≤ b`
    pub fn le(mut self, a: Vec<f64>, b: f64) -> Self {
        self.rows.push(Halfspace::new(a, b));
        self
    }

    /// `⟨a, z⟩ ≥ b`
    pub fn ge(self, a: Vec<f64>, b: f64) -> Self {
        let neg = a.iter().map(|v| -v).collect();
        self.le(neg, -b)
    }

    /// `⟨a, z⟩ = b`, stored as two opposite rows.
    pub fn eq(self, a: Vec<f64>, b: f64) -> Self {
        self.le(a.clone(), b).ge(a, b)
    }

    pub fn build(self) -> Result<Polyhedron> {
        Polyhedron::new(self.dim, self.rows)
    }
}

/// Finite union of closed polyhedra of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionRegion {
    dim: usize,
    pieces: Vec<Polyhedron>,
}

impl UnionRegion {
    pub fn new(dim: usize, pieces: Vec<Polyhedron>) -> Result<Self> {
        for p in &pieces {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        Ok(Self { dim, pieces })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, pieces: Vec::new() }
    }

    pub fn single(p: Polyhedron) -> Self {
        Self { dim: p.dim(), pieces: vec![p] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[Polyhedron] {
        &self.pieces
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.pieces.iter().any(|p| p.contains(z))
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(Polyhedron::is_empty)
    }

    /// Nearest point over all pieces together with its piece index.
    pub fn nearest(&self, z: &[f64]) -> Result<Option<(usize, Vec<f64>)>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (i, p) in self.pieces.iter().enumerate() {
            if let Ok(q) = p.project(z) {
                let d = dist(z, &q);
                if best.as_ref().is_none_or(|b| d < b.2) {
                    best = Some((i, q, d));
                }
            }
        }
        Ok(best.map(|(i, q, _)| (i, q)))
    }

    /// `min_i dist(z, P_i)`, with `inf ∅ = +∞`.
    pub fn distance(&self, z: &[f64]) -> Result<f64> {
        Ok(match self.nearest(z)? {
            Some((_, q)) => dist(z, &q),
            None => f64::INFINITY,
        })
    }

    /// Drops pieces that are empty.
    pub fn without_empty(&self) -> UnionRegion {
        UnionRegion {
            dim: self.dim,
            pieces: self.pieces.iter().filter(|p| !p.is_empty()).cloned().collect(),
        }
    }

    pub fn with_piece(&self, p: Polyhedron) -> Result<UnionRegion> {
        let mut pieces = self.pieces.clone();
        pieces.push(p);
        UnionRegion::new(self.dim, pieces)
    }
}

/// Euclidean projection onto a nonempty polyhedron.
pub fn project(z: &[f64], p: &Polyhedron) -> Result<Vec<f64>> {
    p.project(z)
}

/// Distance to a union; `+∞` exactly when every piece is empty.
pub fn dist_union(z: &[f64], r: &UnionRegion) -> Result<f64> {
    r.distance(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Polyhedron {
        Polyhedron::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn project_examples() {
        assert_eq!(project(&[0.5, 0.5], &unit_box()).unwrap(), vec![0.5, 0.5]);
        let p = project(&[2.0, 0.0], &unit_box()).unwrap();
        assert!(dist(&p, &[1.0, 0.0]) < 1e-12);
        let half = Polyhedron::builder(2).le(vec![1.0, 1.0], 0.0).build().unwrap();
        let p = project(&[1.0, 1.0], &half).unwrap();
        assert!(dist(&p, &[0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn project_empty_errors() {
        let p = Polyhedron::builder(1).le(vec![1.0], -1.0).ge(vec![1.0], 1.0).build().unwrap();
        assert_eq!(project(&[0.0], &p), Err(Error::EmptyPolyhedron));
        assert!(p.is_empty());
        assert_eq!(p.distance(&[3.0]), f64::INFINITY);
    }

    #[test]
    fn degenerate_row_rejected() {
        let r = Polyhedron::builder(2).le(vec![0.0, 0.0], 1.0).build();
        assert_eq!(r, Err(Error::DegenerateRow(0)));
    }

    #[test]
    fn dist_union_examples() {
        let b = UnionRegion::single(unit_box());
        assert_eq!(dist_union(&[0.0, 0.0], &b).unwrap(), 0.0);
        let two = b.with_piece(Polyhedron::boxed(&[5.0, -1.0], &[6.0, 1.0]).unwrap()).unwrap();
        assert!((dist_union(&[3.0, 0.0], &two).unwrap() - 2.0).abs() < 1e-12);
        let empty = Polyhedron::builder(2).le(vec![1.0, 0.0], -1.0).ge(vec![1.0, 0.0], 1.0).build().unwrap();
        let e = UnionRegion::new(2, vec![empty.clone(), empty]).unwrap();
        assert_eq!(dist_union(&[7.0, 1.0], &e).unwrap(), f64::INFINITY);
        assert!(matches!(
            dist_union(&[1.0], &two),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vertices_and_diameter() {
        let v = unit_box().vertices();
        assert_eq!(v.len(), 4);
        assert!((unit_box().diameter() - 8f64.sqrt()).abs() < 1e-12);
        let ray = Polyhedron::builder(1).ge(vec![1.0], 1.0).build().unwrap();
        assert_eq!(ray.diameter(), f64::INFINITY);
        let pt = Polyhedron::builder(2).eq(vec![1.0, 0.0], 2.0).eq(vec![0.0, 1.0], 3.0).build().unwrap();
        assert_eq!(pt.diameter(), 0.0);
    }

    #[test]
    fn serde_round_trip_rejects_zero_rows() {
        let s = serde_json::to_string(&unit_box()).unwrap();
        let back: Polyhedron = serde_json::from_str(&s).unwrap();
        assert_eq!(back, unit_box());
        let bad = r#"{"dim":1,"rows":[{"normal":[0.0],"offset":1.0}]}"#;
        assert!(serde_json::from_str::<Polyhedron>(bad).is_err());
    }
}
