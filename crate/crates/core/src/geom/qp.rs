//! Euclidean projection onto `{x : ⟨a_i, x⟩ ≤ b_i}` by the dual active-set
//! method of Goldfarb and Idnani, specialized to the identity Hessian.
//!
//! The method starts at the unconstrained minimizer `z` and adds violated
//! constraints one at a time, dropping active ones whose multipliers would turn
//! negative. It needs no feasible starting point and reports infeasibility
//! exactly when a violated constraint cannot be reached by any primal or dual
//! step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};

const MAX_STEPS: usize = 10_000;

/// Nearest point of the polyhedron to `z`, or `EmptyPolyhedron`.
pub(crate) fn project(z: &[f64], rows: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    // Unit normals keep the step-length tests scale-free.
    let normals: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|(a, b)| {
            let s = norm(a);
            (a.iter().map(|v| v / s).collect(), b / s)
        })
        .collect();

    let mut x = z.to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut steps = 0usize;

    // Slack of row i; negative means violated.
    let slack = |x: &[f64], i: usize| normals[i].1 - dot(&normals[i].0, x);
    let viol_tol = |x: &[f64], i: usize| 1e-12 * (1.0 + normals[i].1.abs() + norm(x));

    loop {
        // Most violated row, lowest index on ties.
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..normals.len() {
            if active.contains(&i) {
                continue;
            }
            let s = slack(&x, i);
            if s < -viol_tol(&x, i) && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((p, _)) = pick else {
            return Ok(x);
        };

        // In the GI convention the constraint is ⟨n, x⟩ ≥ c with n = −a.
        let np: Vec<f64> = normals[p].0.iter().map(|v| -v).collect();
        let mut mult_plus = mult.clone();
        mult_plus.push(0.0);

        loop {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Numerical("projection did not terminate".into()));
            }
            let q = active.len();
            let (r, zdir) = if q == 0 {
                (Vec::new(), np.clone())
            } else {
                let dim = x.len();
                let nmat = DMatrix::from_fn(dim, q, |i, j| -normals[active[j]].0[i]);
                let gram = nmat.transpose() * &nmat;
                let rhs = nmat.transpose() * DVector::from_column_slice(&np);
                let r = match gram.clone().cholesky() {
                    Some(ch) => ch.solve(&rhs),
                    None => gram
                        .pseudo_inverse(1e-14)
                        .map_err(|e| Error::Numerical(e.to_string()))?
                        * rhs,
                };
                let zd = DVector::from_column_slice(&np) - &nmat * &r;
                (r.iter().cloned().collect(), zd.iter().cloned().collect())
            };

            // Partial (dual) step: first active multiplier to hit zero.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, rj) in r.iter().enumerate() {
                if *rj > 1e-14 {
                    let t = mult_plus[j] / rj;
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            // Full (primal) step: reach the violated constraint.
            let zz = dot(&zdir, &zdir);
            let t2 = if zz.sqrt() > 1e-10 {
                -slack(&x, p) / zz
            } else {
                f64::INFINITY
            };

            if t1.is_infinite() && t2.is_infinite() {
                return Err(Error::EmptyPolyhedron);
            }
            let t = t1.min(t2);
            if t2.is_finite() {
                x = axpy(&x, t, &zdir);
            }
            for (j, rj) in r.iter().enumerate() {
                mult_plus[j] -= t * rj;
            }
            mult_plus[q] += t;

            if t2 <= t1 {
                active.push(p);
                mult = mult_plus;
                break;
            }
            let l = drop.expect("finite partial step has an index");
            active.remove(l);
            mult_plus.remove(l);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Vec<(Vec<f64>, f64)> {
        vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 1.0),
        ]
    }

    #[test]
    fn interior_point_is_fixed() {
        let p = project(&[0.5, 0.5], &unit_box()).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn corner_projection() {
        let p = project(&[3.0, -4.0], &unit_box()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_pair() {
        let rows = vec![(vec![1.0], 0.0), (vec![-1.0], -1.0)];
        assert_eq!(project(&[0.0], &rows), Err(Error::EmptyPolyhedron));
    }

    #[test]
    fn equality_pair() {
        let rows = vec![(vec![1.0, 1.0], 1.0), (vec![-1.0, -1.0], -1.0)];
        let p = project(&[0.0, 0.0], &rows).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn needs_dropping_a_constraint() {
        // Adding y ≥ x first makes x ≤ 0 redundant at the optimum.
        let rows = vec![(vec![1.0, 0.0], 0.0), (vec![1.0, -1.0], 0.0), (vec![0.0, -1.0], -2.0)];
        let p = project(&[3.0, 0.0], &rows).unwrap();
        for (a, b) in &rows {
            assert!(dot(a, &p) <= b + 1e-12);
        }
        // KKT oracle: optimum is (0, 2).
        assert!((p[0]).abs() < 1e-12 && (p[1] - 2.0).abs() < 1e-12, "{p:?}");
    }
}
