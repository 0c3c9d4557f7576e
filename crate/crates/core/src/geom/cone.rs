use serde::{Deserialize, Serialize};

use super::{qp, Halfspace, Polyhedron};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, normalized, nullspace, subsets, unit};
use crate::tol::ZERO_TOL;

const RAY_TOL: f64 = 1e-9;

fn push_unique(out: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    if !out.iter().any(|w| dist(w, &v) < 1e-9) {
        out.push(v);
    }
}

fn clean_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for r in rows {
        if let Some(u) = normalized(r) {
            if norm(r) > ZERO_TOL {
                push_unique(&mut out, u);
            }
        }
    }
    out
}

/// Unit generators of `{x : ⟨r, x⟩ ≤ 0 for every row r}`: the extreme rays of
/// the pointed part plus `±` an orthonormal basis of the lineality space.
///
/// Extreme rays are found by enumerating every choice of `d' − 1` rows (with
/// `d'` the dimension of the pointed part) whose common null space inside the
/// complement of the lineality space is one-dimensional.
pub fn extreme_rays(dim: usize, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = clean_rows(rows);
    let mut out = Vec::new();
    if rows.is_empty() {
        for i in 0..dim {
            out.push(unit(dim, i));
            out.push(unit(dim, i).iter().map(|v| -v).collect());
        }
        return out;
    }
    let lineality = nullspace(&rows, dim);
    let pointed = dim - lineality.len();
    let feasible = |v: &[f64]| rows.iter().all(|r| dot(r, v) <= RAY_TOL);

    for s in subsets(rows.len(), pointed - 1) {
        let mut eqs: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].clone()).collect();
        eqs.extend(lineality.iter().cloned());
        let ns = nullspace(&eqs, dim);
        if ns.len() != 1 {
            continue;
        }
        let v = &ns[0];
        for sign in [1.0, -1.0] {
            let w: Vec<f64> = v.iter().map(|x| sign * x).collect();
            if feasible(&w) {
                push_unique(&mut out, canonical_sign_zero(w));
            }
        }
    }
    for l in lineality {
        push_unique(&mut out, canonical_sign_zero(l.clone()));
        push_unique(&mut out, canonical_sign_zero(l.iter().map(|x| -x).collect()));
    }
    out
}

// Flush tiny entries so generator lists print and compare cleanly.
fn canonical_sign_zero(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConeRepr {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

/// Polyhedral cone `{z : ⟨r, z⟩ ≤ 0}` stored with both representations.
///
/// Both lists are canonical: generators are unit extreme rays plus `±` a
/// lineality basis, rows are the unit generators of the polar cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ConeRepr", into = "ConeRepr")]
pub struct PolyCone {
    dim: usize,
    rows: Vec<Vec<f64>>,
    generators: Vec<Vec<f64>>,
}

impl From<ConeRepr> for PolyCone {
    fn from(r: ConeRepr) -> Self {
        PolyCone::from_rows(r.dim, r.rows)
    }
}

impl From<PolyCone> for ConeRepr {
    fn from(c: PolyCone) -> Self {
        ConeRepr { dim: c.dim, rows: c.rows }
    }
}

impl PolyCone {
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        let generators = extreme_rays(dim, &rows);
        let rows = extreme_rays(dim, &generators);
        Self { dim, rows, generators }
    }

    /// Conic hull of `generators` (the empty list gives `{0}`).
    pub fn from_generators(dim: usize, generators: Vec<Vec<f64>>) -> Self {
        let rows = extreme_rays(dim, &generators);
        let generators = extreme_rays(dim, &rows);
        Self { dim, rows, generators }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_generators(dim, Vec::new())
    }

    pub fn full(dim: usize) -> Self {
        Self::from_rows(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        let s = norm(z).max(1.0);
        self.rows.iter().all(|r| dot(r, z) <= 1e-9 * s)
    }

    /// `{z* : ⟨z*, z⟩ ≤ 0 for all z in the cone}`.
    pub fn polar(&self) -> PolyCone {
        PolyCone {
            dim: self.dim,
            rows: self.generators.clone(),
            generators: self.rows.clone(),
        }
    }

    pub fn intersect(&self, other: &PolyCone) -> PolyCone {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        PolyCone::from_rows(self.dim, rows)
    }

    /// Every generator of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &PolyCone) -> bool {
        self.generators.iter().all(|g| other.contains(g))
    }

    pub fn same_as(&self, other: &PolyCone) -> bool {
        self.dim == other.dim && self.is_subset_of(other) && other.is_subset_of(self)
    }

    /// Generators and rows describe the same set.
    pub fn cross_validate(&self) -> bool {
        self.generators
            .iter()
            .all(|g| self.rows.iter().all(|r| dot(r, g) <= 1e-9))
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        if self.rows.is_empty() {
            return z.to_vec();
        }
        let rows: Vec<(Vec<f64>, f64)> = self.rows.iter().map(|r| (r.clone(), 0.0)).collect();
        qp::project(z, &rows).expect("a cone is never empty")
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        dist(z, &self.project(z))
    }

    /// Cone with the coordinates reordered/sign-flipped by `f` (applied to both reps).
    pub fn map_coords(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> PolyCone {
        PolyCone {
            dim: self.dim,
            rows: self.rows.iter().map(|r| f(r)).collect(),
            generators: self.generators.iter().map(|g| f(g)).collect(),
        }
    }
}

/// Finite union of polyhedral cones. No pieces means the empty set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeUnion {
    dim: usize,
    pieces: Vec<PolyCone>,
}

impl ConeUnion {
    pub fn new(dim: usize, pieces: Vec<PolyCone>) -> Self {
        Self { dim, pieces }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, pieces: Vec::new() }
    }

    pub fn single(c: PolyCone) -> Self {
        Self { dim: c.dim(), pieces: vec![c] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[PolyCone] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.pieces.iter().any(|c| c.contains(z))
    }

    /// Removes pieces contained in another piece.
    pub fn simplified(&self) -> ConeUnion {
        let mut keep: Vec<PolyCone> = Vec::new();
        for (i, c) in self.pieces.iter().enumerate() {
            let dominated = self.pieces.iter().enumerate().any(|(j, d)| {
                j != i && c.is_subset_of(d) && (!d.is_subset_of(c) || j < i)
            });
            if !dominated {
                keep.push(c.clone());
            }
        }
        ConeUnion { dim: self.dim, pieces: keep }
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|c| c.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// All unit generators over all pieces.
    pub fn rays(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for c in &self.pieces {
            for g in c.generators() {
                push_unique(&mut out, g.clone());
            }
        }
        out
    }

    /// Mutual containment of the two unions, generator by generator.
    pub fn same_as(&self, other: &ConeUnion) -> bool {
        angular_distance(self, other) <= 1e-9 && self.is_empty() == other.is_empty()
    }
}

/// Unit generators of every piece plus the normalized pairwise sums of
/// generators of the same piece, so that wedges differing only in their
/// interiors are told apart.
fn probe_rays(u: &ConeUnion) -> Vec<Vec<f64>> {
    let mut out = u.rays();
    for c in &u.pieces {
        let g = c.generators();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let s: Vec<f64> = g[i].iter().zip(&g[j]).map(|(a, b)| a + b).collect();
                if norm(&s) > 1e-6 {
                    push_unique(&mut out, normalized(&s).expect("nonzero"));
                }
            }
        }
    }
    out
}

/// Hausdorff distance between the unit-sphere traces of two cone unions,
/// evaluated on extreme rays and their pairwise bisectors.
pub fn angular_distance(a: &ConeUnion, b: &ConeUnion) -> f64 {
    let one = |x: &ConeUnion, y: &ConeUnion| {
        probe_rays(x)
            .iter()
            .map(|r| y.distance(r))
            .fold(0.0, f64::max)
    };
    let d = one(a, b).max(one(b, a));
    if a.is_empty() != b.is_empty() {
        return f64::INFINITY;
    }
    d
}

/// `{x* : (x*, −y*) ∈ C}` for a cone in `(x*, y*)`-space with `n` leading
/// coordinates. `None` when a row without `x*`-part is violated.
pub fn slice_polyhedron(cone: &PolyCone, n: usize, ystar: &[f64]) -> Option<Polyhedron> {
    let mut rows = Vec::new();
    for r in cone.rows() {
        let (rx, ry) = r.split_at(n);
        // ⟨rx, x*⟩ − ⟨ry, y*⟩ ≤ 0
        let rhs = dot(ry, ystar);
        if norm(rx) <= ZERO_TOL {
            if -rhs > 1e-9 * norm(ystar).max(1.0) {
                return None;
            }
            continue;
        }
        rows.push(Halfspace::new(rx.to_vec(), rhs));
    }
    Polyhedron::new(n, rows).ok()
}

/// Minimal-norm `x*` with `(x*, −y*) ∈ C`, or `Infeasible`.
pub fn min_norm_in_slice(cone: &PolyCone, n: usize, ystar: &[f64]) -> Result<Vec<f64>> {
    if cone.dim() != n + ystar.len() {
        return Err(Error::DimensionMismatch { expected: cone.dim(), got: n + ystar.len() });
    }
    let p = slice_polyhedron(cone, n, ystar).ok_or(Error::Infeasible)?;
    p.project(&vec![0.0; n]).map_err(|_| Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cu(c: PolyCone) -> ConeUnion {
        ConeUnion::single(c)
    }

    #[test]
    fn polar_of_orthant() {
        let c = PolyCone::from_generators(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let neg = PolyCone::from_generators(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);
        assert!(c.polar().same_as(&neg));
    }

    #[test]
    fn polar_of_zero_is_full() {
        let z = PolyCone::zero(3);
        assert!(z.is_zero());
        assert!(z.polar().same_as(&PolyCone::full(3)));
        assert!(PolyCone::full(3).polar().is_zero());
    }

    #[test]
    fn polar_of_wedge() {
        let c = PolyCone::from_generators(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        let want = PolyCone::from_generators(2, vec![vec![0.0, -1.0], vec![-1.0, 1.0]]);
        assert!(c.polar().same_as(&want));
        assert_eq!(c.generators().len(), 2);
    }

    #[test]
    fn halfplane_and_line() {
        let h = PolyCone::from_rows(2, vec![vec![0.0, 1.0]]);
        assert!(h.contains(&[5.0, -1.0]) && h.contains(&[-5.0, 0.0]));
        assert!(!h.contains(&[0.0, 1.0]));
        // ±e1 lineality plus -e2.
        assert_eq!(h.generators().len(), 3);
        let line = PolyCone::from_generators(2, vec![vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert!(line.contains(&[0.0, -3.0]) && !line.contains(&[1.0, 0.0]));
        assert!(line.cross_validate() && h.cross_validate());
    }

    #[test]
    fn min_norm_examples() {
        // {(x*, −y*) : x* = 2y*}: generated by ±(2, −1).
        let c = PolyCone::from_generators(2, vec![vec![2.0, -1.0], vec![-2.0, 1.0]]);
        let x = min_norm_in_slice(&c, 1, &[1.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        // x*-component forced to zero.
        let c = PolyCone::from_generators(2, vec![vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert!(min_norm_in_slice(&c, 1, &[1.0]).unwrap()[0].abs() < 1e-12);
        // y* must vanish: the slice at y* = 1 is empty.
        let c = PolyCone::from_generators(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert_eq!(min_norm_in_slice(&c, 1, &[1.0]), Err(Error::Infeasible));
    }

    #[test]
    fn simplify_drops_contained() {
        let a = PolyCone::from_generators(2, vec![vec![0.0, 1.0]]);
        let z = PolyCone::zero(2);
        let u = ConeUnion::new(2, vec![z, a.clone(), a]).simplified();
        assert_eq!(u.pieces().len(), 1);
        assert!(angular_distance(&u, &cu(PolyCone::from_generators(2, vec![vec![0.0, 1.0]]))) < 1e-12);
    }
}
