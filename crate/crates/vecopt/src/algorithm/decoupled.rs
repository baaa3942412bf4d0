//! Cost-aware decoupled eliminator: one (design, objective) cell per design
//! per round, budget counted in evaluation cost.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::Order;
use crate::error::{Result, VecoptError};
use crate::model::{ConfShape, EmpiricalModel, SurrogateModel};
use crate::policy::NumericPolicy;
use crate::problem::{EvalQuery, TabularProblem};
use crate::region::{EllipsoidRegion, RectRegion, Region};

use super::{
    check_order, elimination_step, epsilon_shift, final_prediction, paveba_beta, sorted_active,
    AlgConfig, RoundRecord, RunResult, TerminatedBy,
};

/// Decoupled variant of the round-based eliminator.
///
/// Per round, each active design queries the single objective maximizing the
/// projected standard error per unit cost, `sigma / (sqrt(n_dj + 1) c_j)`
/// (ties to the lowest objective). Confidence regions use a per-cell
/// schedule: face `j` of design `d` takes `beta = 2 ln(4 K D (n_dj + 1)^2 /
/// delta)`. The budget counts cost-weighted samples.
pub fn decoupled_paveba_run(
    problem: &TabularProblem,
    order: &Order,
    config: &AlgConfig,
) -> Result<RunResult> {
    config.validate()?;
    check_order(problem, order)?;
    let k = problem.len();
    let d = problem.num_objectives();
    let costs = config
        .costs
        .clone()
        .unwrap_or_else(|| problem.costs().to_vec());
    if costs.len() != d || costs.iter().any(|c| !c.is_finite() || *c <= 0.0) {
        return Err(VecoptError::CostVectorInvalid);
    }
    if config.budget < k {
        return Err(VecoptError::BudgetTooSmall {
            budget: config.budget,
            required: k,
        });
    }

    let pol = NumericPolicy::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmpiricalModel::new(k, d, problem.noise_std());
    // Acquisition uses the noise prior, not the fluctuating sample std, so
    // equal costs alternate objectives exactly; the tiny floor keeps the
    // count progression meaningful in noiseless problems.
    let acq_sigma = problem.noise_std().max(1e-12);
    let mut s: BTreeSet<usize> = (0..k).collect();
    let mut p: BTreeSet<usize> = BTreeSet::new();
    let shift = epsilon_shift(order.cone(), config.epsilon);

    let mut rounds = Vec::new();
    let mut samples_used = 0.0_f64;
    let mut t: u32 = 0;
    let terminated_by = loop {
        if s.is_empty() {
            break TerminatedBy::Converged;
        }
        let active = sorted_active(&s, &p);

        // plan this round's (design, objective) queries
        let mut plan = Vec::with_capacity(active.len());
        let mut round_cost = 0.0;
        for &design in &active {
            let mut best_j = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (j, cost) in costs.iter().enumerate() {
                let n = model.count(design, j)? as f64;
                let score = acq_sigma / ((n + 1.0).sqrt() * cost);
                if score > best_score {
                    best_score = score;
                    best_j = j;
                }
            }
            plan.push((design, best_j));
            round_cost += costs[best_j];
        }
        if samples_used + round_cost > config.budget as f64 {
            break TerminatedBy::BudgetExhausted;
        }
        t += 1;
        for &(design, j) in &plan {
            let obs = problem.evaluate(&EvalQuery::single(design, j), &mut rng)?;
            model.update(&obs[0])?;
        }
        samples_used += round_cost;

        // No belief exists for a cell that was never sampled; decisions wait
        // until every active design has touched every objective (the
        // acquisition covers all cells within the first D rounds).
        let mut bootstrapped = true;
        'boot: for &design in &active {
            for j in 0..d {
                if model.count(design, j)? == 0 {
                    bootstrapped = false;
                    break 'boot;
                }
            }
        }

        let mut regions: Vec<Option<Region>> = vec![None; k];
        let mut max_diameter = 0.0_f64;
        for &design in &active {
            let post = model.posterior(design)?;
            let betas: Vec<f64> = (0..d)
                .map(|j| {
                    let n = model.count(design, j).expect("checked index");
                    paveba_beta(k, d, (n + 1) as u32, config.delta)
                })
                .collect();
            let region = match config.conf_shape {
                ConfShape::Rect => {
                    let lower: Vec<f64> = (0..d)
                        .map(|j| post.mean[j] - betas[j].sqrt() * post.scale[j])
                        .collect();
                    let upper: Vec<f64> = (0..d)
                        .map(|j| post.mean[j] + betas[j].sqrt() * post.scale[j])
                        .collect();
                    Region::Rect(RectRegion::new(lower, upper)?)
                }
                ConfShape::Ellipsoid => {
                    let floor = pol.scale_floor;
                    let diag: Vec<f64> = (0..d)
                        .map(|j| {
                            let sc = post.scale[j].max(floor);
                            betas[j] * sc * sc
                        })
                        .collect();
                    Region::Ellipsoid(EllipsoidRegion::axis_aligned(post.mean.clone(), &diag)?)
                }
            };
            max_diameter = max_diameter.max(region.diameter());
            regions[design] = Some(region);
        }

        if bootstrapped {
            elimination_step(&regions, &mut s, &mut p, shift.as_deref(), order.cone(), &pol)?;
        }
        rounds.push(RoundRecord {
            round: t,
            samples_used,
            undecided: s.len(),
            predicted: p.len(),
            max_diameter,
        });
    };

    Ok(RunResult {
        predicted_pareto: final_prediction(&s, &p),
        rounds,
        samples_used,
        terminated_by,
    })
}
