//! Prediction-quality metrics: epsilon-F1 score and hypervolume discrepancy
//! against the noiseless ground truth.
//!
//! The epsilon relaxation acts along the cone's central interior direction
//! `u`: precision counts predictions inside the epsilon-Pareto set (designs no
//! other design dominates even after a `-eps u` handicap), recall counts true
//! Pareto designs covered by some prediction boosted by `+eps u`. With the
//! componentwise cone this reduces to the usual multi-objective notion.
//!
//! Hypervolume always uses the componentwise orthant measure from a reference
//! point, regardless of the ordering cone: exact sweeps in 2D and 3D, seeded
//! Monte Carlo above.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::Order;
use crate::error::{Result, VecoptError};
use crate::policy::NumericPolicy;
use crate::problem::TabularProblem;

/// Monte Carlo sample count used by [`hypervolume`] for four or more
/// objectives.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// Metric settings as they appear in experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub epsilon: f64,
    /// Hypervolume reference point; must lie below every evaluated point
    /// componentwise (after the maximization convention).
    pub ref_point: Vec<f64>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_mc_samples() -> usize {
    DEFAULT_MC_SAMPLES
}

/// Epsilon-relaxed F1 score of a predicted Pareto index set.
pub fn eps_f1(
    predicted: &[usize],
    problem: &TabularProblem,
    order: &Order,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(VecoptError::ConfigInvalid(
            "epsilon must be finite and non-negative".into(),
        ));
    }
    let k = problem.len();
    for &p in predicted {
        if p >= k {
            return Err(VecoptError::IndexOutOfRange { index: p, len: k });
        }
    }
    let mut predicted: Vec<usize> = predicted.to_vec();
    predicted.sort_unstable();
    predicted.dedup();

    let rows = problem.objectives();
    let cone = order.cone();
    let tol = NumericPolicy::standard().membership_tol;
    let u = cone.central_direction();
    let shift: Vec<f64> = u.iter().map(|v| epsilon * v).collect();

    // d is eps-dominated by d' when f(d') - f(d) - eps*u lies in the cone and
    // the values differ; exact duplicates never dominate each other.
    let eps_dominated = |d: usize| -> bool {
        (0..k).any(|o| {
            o != d
                && rows[o] != rows[d]
                && cone.rows().iter().all(|w| {
                    w.iter()
                        .enumerate()
                        .map(|(j, wj)| wj * (rows[o][j] - rows[d][j] - shift[j]))
                        .sum::<f64>()
                        >= -tol
                })
        })
    };

    let true_pareto = problem.ground_truth_pareto(order)?;
    if predicted.is_empty() {
        return Ok(0.0);
    }

    let in_eps_pareto = predicted.iter().filter(|&&p| !eps_dominated(p)).count();
    let precision = in_eps_pareto as f64 / predicted.len() as f64;

    let covered = true_pareto
        .iter()
        .filter(|&&d| {
            predicted.iter().any(|&p| {
                p == d
                    || cone.rows().iter().all(|w| {
                        w.iter()
                            .enumerate()
                            .map(|(j, wj)| wj * (rows[p][j] + shift[j] - rows[d][j]))
                            .sum::<f64>()
                            >= -tol
                    })
            })
        })
        .count();
    let recall = covered as f64 / true_pareto.len() as f64;

    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// A hypervolume value with bookkeeping: how many points were clipped to the
/// reference, and the Monte Carlo standard error when estimation was used.
#[derive(Debug, Clone, PartialEq)]
pub struct HvEstimate {
    pub value: f64,
    pub clipped: usize,
    pub std_err: Option<f64>,
}

/// Hypervolume dominated by `points` over the box anchored at `reference`.
/// Exact for one to three objectives; Monte Carlo with
/// [`DEFAULT_MC_SAMPLES`] and a fixed seed above.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    Ok(hypervolume_detailed(points, reference, DEFAULT_MC_SAMPLES, 0)?.value)
}

/// As [`hypervolume`], exposing clipping counts and the Monte Carlo settings.
pub fn hypervolume_detailed(
    points: &[Vec<f64>],
    reference: &[f64],
    mc_samples: usize,
    mc_seed: u64,
) -> Result<HvEstimate> {
    let d = reference.len();
    if d == 0 {
        return Err(VecoptError::EmptyInput);
    }
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(VecoptError::NonFinite);
    }
    let mut clipped = 0;
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != d {
            return Err(VecoptError::DimensionMismatch {
                expected: d,
                actual: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(VecoptError::NonFinite);
        }
        let mut q = p.clone();
        let mut any = false;
        for (v, r) in q.iter_mut().zip(reference) {
            if *v < *r {
                *v = *r;
                any = true;
            }
        }
        if any {
            clipped += 1;
        }
        pts.push(q);
    }
    if pts.is_empty() {
        return Ok(HvEstimate {
            value: 0.0,
            clipped,
            std_err: None,
        });
    }
    let value = match d {
        1 => pts
            .iter()
            .map(|p| p[0] - reference[0])
            .fold(0.0_f64, f64::max),
        2 => hv_2d(&pts, reference),
        3 => hv_3d(&pts, reference),
        _ => {
            let (v, se) = hv_monte_carlo(&pts, reference, mc_samples, mc_seed);
            return Ok(HvEstimate {
                value: v,
                clipped,
                std_err: Some(se),
            });
        }
    };
    Ok(HvEstimate {
        value,
        clipped,
        std_err: None,
    })
}

/// Exact 2D sweep: sort by first coordinate descending and accumulate strips
/// where the second coordinate improves.
fn hv_2d(pts: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut sorted: Vec<&Vec<f64>> = pts.iter().collect();
    sorted.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap().then(b[1].partial_cmp(&a[1]).unwrap()));
    let mut best_y = r[1];
    let mut hv = 0.0;
    for p in sorted {
        if p[1] > best_y {
            hv += (p[0] - r[0]) * (p[1] - best_y);
            best_y = p[1];
        }
    }
    hv
}

/// Exact 3D hypervolume by slicing along the third coordinate: each slab
/// contributes its height times the 2D hypervolume of the points above it.
fn hv_3d(pts: &[Vec<f64>], r: &[f64]) -> f64 {
    // keep only componentwise non-dominated points
    let nd: Vec<&Vec<f64>> = pts
        .iter()
        .filter(|p| {
            !pts.iter().any(|q| {
                q.as_slice() != p.as_slice()
                    && q.iter().zip(p.iter()).all(|(a, b)| a >= b)
                    && q.iter().zip(p.iter()).any(|(a, b)| a > b)
            })
        })
        .collect();
    let mut order: Vec<usize> = (0..nd.len()).collect();
    order.sort_by(|&a, &b| nd[b][2].partial_cmp(&nd[a][2]).unwrap());

    let mut hv = 0.0;
    let mut active: Vec<Vec<f64>> = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        active.push(vec![nd[i][0], nd[i][1]]);
        let z_hi = nd[i][2];
        let z_lo = order
            .get(rank + 1)
            .map(|&j| nd[j][2])
            .unwrap_or(r[2])
            .max(r[2]);
        if z_hi > z_lo {
            hv += hv_2d(&active, &r[..2]) * (z_hi - z_lo);
        }
    }
    hv
}

fn hv_monte_carlo(pts: &[Vec<f64>], r: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    let d = r.len();
    let hi: Vec<f64> = (0..d)
        .map(|j| pts.iter().map(|p| p[j]).fold(r[j], f64::max))
        .collect();
    let volume: f64 = (0..d).map(|j| hi[j] - r[j]).product();
    if volume <= 0.0 {
        return (0.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0usize;
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for j in 0..d {
            x[j] = rng.random_range(r[j]..hi[j]);
        }
        if pts
            .iter()
            .any(|p| x.iter().zip(p).all(|(xi, pi)| xi <= pi))
        {
            inside += 1;
        }
    }
    let frac = inside as f64 / samples as f64;
    let se = volume * (frac * (1.0 - frac) / samples as f64).sqrt();
    (volume * frac, se)
}

/// Hypervolume of the true Pareto front minus hypervolume of the predicted
/// set, both taken from the problem's objective table.
pub fn hv_discrepancy(
    predicted: &[usize],
    problem: &TabularProblem,
    order: &Order,
    reference: &[f64],
) -> Result<f64> {
    let k = problem.len();
    for &p in predicted {
        if p >= k {
            return Err(VecoptError::IndexOutOfRange { index: p, len: k });
        }
    }
    let rows = problem.objectives();
    let truth = problem.ground_truth_pareto(order)?;
    let truth_pts: Vec<Vec<f64>> = truth.iter().map(|&i| rows[i].clone()).collect();
    let pred_pts: Vec<Vec<f64>> = predicted.iter().map(|&i| rows[i].clone()).collect();
    Ok(hypervolume(&truth_pts, reference)? - hypervolume(&pred_pts, reference)?)
}
