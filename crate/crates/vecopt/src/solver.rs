//! Embedded feasibility and projection kernels.
//!
//! These replace a general-purpose convex solver: an exact small LP for the
//! cone's interior direction, Dykstra's alternating projections for the
//! Euclidean cone projection, and a product-space projected-gradient method
//! for the distance between two confidence regions measured against the cone.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::cone::Cone;
use crate::error::{Result, VecoptError};
use crate::policy::NumericPolicy;
use crate::region::Region;

/// Solves `max_{u in box} min_i w_i . u` exactly by enumerating basic
/// feasible solutions of the epigraph LP. Returns the maximizer and the
/// optimum.
///
/// Intended for ordering cones, whose facet counts are small; the enumeration
/// is combinatorial in `rows.len() + 2 * dim`.
pub(crate) fn box_max_min(
    rows: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let dim = rows[0].len();
    let nvars = dim + 1; // (u, t)

    // Constraints a . v >= b over v = (u, t).
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for w in rows {
        let mut a = w.clone();
        a.push(-1.0);
        cons.push((a, 0.0)); // w.u - t >= 0
    }
    for j in 0..dim {
        let mut hi = vec![0.0; nvars];
        hi[j] = -1.0;
        cons.push((hi, -upper[j])); // u_j <= upper_j
        let mut lo = vec![0.0; nvars];
        lo[j] = 1.0;
        cons.push((lo, lower[j])); // u_j >= lower_j
    }

    // The feasible set contains no lines (the box bounds u, which pins t), so
    // the finite optimum is attained at a vertex: some nvars constraints
    // active and linearly independent.
    let mut best: Option<(Vec<f64>, f64)> = None;
    for subset in (0..cons.len()).combinations(nvars) {
        let a = DMatrix::from_fn(nvars, nvars, |r, c| cons[subset[r]].0[c]);
        let b = DVector::from_fn(nvars, |r, _| cons[subset[r]].1);
        let Some(v) = a.lu().solve(&b) else { continue };
        if v.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let feasible = cons.iter().all(|(ai, bi)| {
            ai.iter().zip(v.iter()).map(|(c, x)| c * x).sum::<f64>() >= bi - 1e-9
        });
        if !feasible {
            continue;
        }
        let t = v[dim];
        if best.as_ref().is_none_or(|(_, bt)| t > *bt) {
            best = Some((v.iter().take(dim).copied().collect(), t));
        }
    }
    best.ok_or(VecoptError::EmptyInterior {
        optimum: f64::NEG_INFINITY,
    })
}

/// `max_{||u||_inf <= 1} min_i w_i . u`, the Chebyshev-style interior
/// direction used by cone construction.
pub(crate) fn max_min_direction(rows: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let dim = rows[0].len();
    box_max_min(rows, &vec![-1.0; dim], &vec![1.0; dim])
}

/// Euclidean projection onto `C = { z : W z >= 0 }` via Dykstra's alternating
/// projections over the halfspaces. Plain cyclic projection would only reach
/// a feasible point; Dykstra's increments make the limit the projection.
pub fn project_onto_cone(x: &[f64], cone: &Cone, pol: &NumericPolicy) -> Result<Vec<f64>> {
    if x.len() != cone.dim() {
        return Err(VecoptError::DimensionMismatch {
            expected: cone.dim(),
            actual: x.len(),
        });
    }
    let rows = cone.rows();
    let mut p: Vec<f64> = x.to_vec();
    let mut increments = vec![vec![0.0; x.len()]; rows.len()];

    for _sweep in 0..pol.dykstra_max_sweeps {
        let start = p.clone();
        for (w, q) in rows.iter().zip(increments.iter_mut()) {
            let y: Vec<f64> = p.iter().zip(q.iter()).map(|(a, b)| a + b).collect();
            let viol: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
            let projected: Vec<f64> = if viol < 0.0 {
                y.iter().zip(w).map(|(yi, wi)| yi - viol * wi).collect()
            } else {
                y.clone()
            };
            for k in 0..q.len() {
                q[k] = y[k] - projected[k];
            }
            p = projected;
        }
        let moved = p
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if moved < pol.dykstra_tol {
            let worst = rows
                .iter()
                .map(|w| w.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if worst >= -pol.dykstra_feas_tol {
                return Ok(p);
            }
        }
    }
    let worst = rows
        .iter()
        .map(|w| w.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Err(VecoptError::SolverDidNotConverge {
        best_bound: (-worst).max(0.0),
    })
}

/// Minimum Euclidean distance `min { ||(b - a) - c|| : a in ra, b in rb,
/// c in C }`, i.e. the distance of the difference set `rb - ra` to the cone.
///
/// Solved by projected gradient descent on the product space with exact
/// projections onto each factor. The objective is convex and the iterates
/// stay feasible, so the returned value is always a valid upper bound; at
/// convergence it is the distance up to the policy tolerance.
pub fn set_distance(ra: &Region, rb: &Region, cone: &Cone, pol: &NumericPolicy) -> Result<f64> {
    let dim = cone.dim();
    if ra.dim() != dim || rb.dim() != dim {
        return Err(VecoptError::DimensionMismatch {
            expected: dim,
            actual: if ra.dim() != dim { ra.dim() } else { rb.dim() },
        });
    }

    let mut a = ra.center();
    let mut b = rb.center();
    let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    let mut c = project_onto_cone(&diff, cone, pol)?;

    let objective = |a: &[f64], b: &[f64], c: &[f64]| -> f64 {
        (0..dim).map(|k| (b[k] - a[k] - c[k]).powi(2)).sum()
    };
    let mut prev = objective(&a, &b, &c);
    let mut best = prev;

    for _ in 0..pol.pgd_max_iters {
        // residual r = (b - a) - c; grad_a = -2r, grad_b = 2r, grad_c = -2r
        let r: Vec<f64> = (0..dim).map(|k| b[k] - a[k] - c[k]).collect();
        let step = pol.pgd_step;
        let a_next: Vec<f64> = (0..dim).map(|k| a[k] + 2.0 * step * r[k]).collect();
        let b_next: Vec<f64> = (0..dim).map(|k| b[k] - 2.0 * step * r[k]).collect();
        let c_next: Vec<f64> = (0..dim).map(|k| c[k] + 2.0 * step * r[k]).collect();
        a = ra.project(&a_next);
        b = rb.project(&b_next);
        c = project_onto_cone(&c_next, cone, pol)?;

        let obj = objective(&a, &b, &c);
        best = best.min(obj);
        if (prev - obj).abs() < pol.pgd_obj_tol {
            return Ok(best.max(0.0).sqrt());
        }
        prev = obj;
    }
    Err(VecoptError::SolverDidNotConverge {
        best_bound: best.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const POL: NumericPolicy = NumericPolicy::standard();

    #[test]
    fn orthant_direction_is_diagonal() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (u, t) = max_min_direction(&rows).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-9 && (u[1] - 1.0).abs() < 1e-9);
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn halfplane_has_empty_interior_optimum() {
        // two opposing halfspaces leave only a line; optimum is 0
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let (_, t) = max_min_direction(&rows).unwrap();
        assert!(t.abs() < 1e-9);
    }

    #[test]
    fn clip_projection_on_orthant() {
        let cone = Cone::componentwise(2);
        let p = project_onto_cone(&[-1.0, 2.0], &cone, &POL).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-9 && (p[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_halfspace_projection_formula() {
        let cone = Cone::from_matrix(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // The third row keeps the cone pointed; test a point violating only
        // the first coordinate against the halfspace formula.
        let p = project_onto_cone(&[-2.0, 5.0], &cone, &POL).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-8 && (p[1] - 5.0).abs() < 1e-8);
    }

    // Dense ray-search oracle for 2D sector projection: the projection of a
    // point onto a pointed 2D cone is the point itself (inside), the apex, or
    // its projection onto one of the two boundary rays.
    pub(crate) fn sector_projection_oracle(cone: &Cone, x: &[f64]) -> Vec<f64> {
        if cone.contains(x).unwrap() {
            return x.to_vec();
        }
        let mut cands: Vec<Vec<f64>> = vec![vec![0.0, 0.0]];
        for w in cone.rows() {
            for dir in [[w[1], -w[0]], [-w[1], w[0]]] {
                let ok = cone
                    .rows()
                    .iter()
                    .all(|v| v[0] * dir[0] + v[1] * dir[1] >= -1e-12);
                if ok {
                    let s = (x[0] * dir[0] + x[1] * dir[1]).max(0.0);
                    cands.push(vec![s * dir[0], s * dir[1]]);
                }
            }
        }
        cands
            .into_iter()
            .min_by(|a, b| {
                let da = (a[0] - x[0]).powi(2) + (a[1] - x[1]).powi(2);
                let db = (b[0] - x[0]).powi(2) + (b[1] - x[1]).powi(2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn narrow_cone_projection_matches_ray_oracle() {
        let cone = Cone::theta_2d(60.0).unwrap();
        let p = project_onto_cone(&[1.0, -1.0], &cone, &POL).unwrap();
        let q = sector_projection_oracle(&cone, &[1.0, -1.0]);
        assert!((p[0] - q[0]).abs() < 1e-4 && (p[1] - q[1]).abs() < 1e-4);
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for cone in [
            Cone::componentwise(2),
            Cone::theta_2d(60.0).unwrap(),
            Cone::theta_2d(150.0).unwrap(),
            Cone::icecream_3d(30.0, 6).unwrap(),
        ] {
            let d = cone.dim();
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                let y: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                let px = project_onto_cone(&x, &cone, &POL).unwrap();
                let ppx = project_onto_cone(&px, &cone, &POL).unwrap();
                let drift: f64 = px
                    .iter()
                    .zip(&ppx)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(drift <= 1e-8, "idempotence drift {drift}");
                let py = project_onto_cone(&y, &cone, &POL).unwrap();
                let dp: f64 = px
                    .iter()
                    .zip(&py)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let dxy: f64 = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(dp <= dxy + 1e-8, "expansion {dp} > {dxy}");
            }
        }
    }

    #[test]
    fn projection_optimality_certificate() {
        // (x - p) . (z - p) <= tol for sampled z in C
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let cone = Cone::theta_2d(75.0).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = project_onto_cone(&x, &cone, &POL).unwrap();
            for _ in 0..50 {
                let z: Vec<f64> = loop {
                    let cand: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
                    if cone.contains(&cand).unwrap() {
                        break cand;
                    }
                };
                let inner: f64 = (0..2).map(|k| (x[k] - p[k]) * (z[k] - p[k])).sum();
                assert!(inner <= 1e-6, "optimality violated: {inner}");
            }
        }
    }
}
