//! GP-based identifier on finite design sets with round-over-round region
//! refinement.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::Order;
use crate::error::{Result, VecoptError};
use crate::model::{GpHyperParams, GpModel, SurrogateModel};
use crate::policy::NumericPolicy;
use crate::problem::{EvalQuery, TabularProblem};
use crate::region::{RectRegion, Region};

use super::{
    check_order, elimination_step, epsilon_shift, final_prediction, gp_beta, sorted_active,
    AlgConfig, RoundRecord, RunResult, TerminatedBy,
};

/// Data-independent default hyperparameters for [`gp_pal_run`]: unit signal,
/// lengthscale twice the median nearest-neighbor feature distance, and the
/// problem's noise level (floored to keep factorizations well-posed).
pub fn default_gp_params(problem: &TabularProblem) -> GpHyperParams {
    let designs = problem.designs();
    let mut nn = Vec::with_capacity(designs.len());
    for (i, a) in designs.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, b) in designs.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d2.sqrt());
        }
        if best.is_finite() {
            nn.push(best);
        }
    }
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = nn.get(nn.len() / 2).copied().unwrap_or(1.0);
    let lengthscale = if median > 1e-12 { 2.0 * median } else { 1.0 };
    GpHyperParams {
        signal: 1.0,
        lengthscale,
        noise: problem.noise_std().max(1e-4),
    }
}

/// GP-based Pareto identification: per round, only the design with the widest
/// cached rectangle is evaluated (ties to the lowest index), rectangles are
/// intersected with the fresh `mean +- sqrt(beta_t) std` box at
/// `beta_t = 2 ln(K D pi^2 t^2 / (6 delta))`, and the shared discard/identify
/// rules run on the result.
pub fn gp_pal_run(problem: &TabularProblem, order: &Order, config: &AlgConfig) -> Result<RunResult> {
    gp_pal_run_with(problem, order, config, default_gp_params(problem))
}

/// [`gp_pal_run`] with explicit kernel hyperparameters.
pub fn gp_pal_run_with(
    problem: &TabularProblem,
    order: &Order,
    config: &AlgConfig,
    params: GpHyperParams,
) -> Result<RunResult> {
    config.validate()?;
    check_order(problem, order)?;
    let k = problem.len();
    let d = problem.num_objectives();
    if config.budget < config.batch_size {
        return Err(VecoptError::BudgetTooSmall {
            budget: config.budget,
            required: config.batch_size,
        });
    }
    if problem.feature_dim() == 0 {
        return Err(VecoptError::ModelError(
            "gp_pal needs design feature vectors".into(),
        ));
    }

    let pol = NumericPolicy::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GpModel::new(problem.designs().to_vec(), d, params)?;
    let mut s: BTreeSet<usize> = (0..k).collect();
    let mut p: BTreeSet<usize> = BTreeSet::new();
    let shift = epsilon_shift(order.cone(), config.epsilon);

    // Cached per-design rectangles, intersected across rounds so they only
    // ever shrink.
    let mut cached: Vec<Option<RectRegion>> = vec![None; k];
    let mut rounds = Vec::new();
    let mut samples_used = 0.0;
    let mut t: u32 = 0;
    let terminated_by = loop {
        if s.is_empty() {
            break TerminatedBy::Converged;
        }
        let active = sorted_active(&s, &p);
        let round_cost = config.batch_size as f64;
        if samples_used + round_cost > config.budget as f64 {
            break TerminatedBy::BudgetExhausted;
        }
        t += 1;

        // widest cached region wins; unexplored designs count as unbounded
        let mut chosen = active[0];
        let mut widest = f64::NEG_INFINITY;
        for &design in &active {
            let diam = cached[design]
                .as_ref()
                .map_or(f64::INFINITY, |r| r.diameter());
            if diam > widest {
                widest = diam;
                chosen = design;
            }
        }
        for obs in problem.evaluate(&EvalQuery::full(chosen, d, config.batch_size), &mut rng)? {
            model.update(&obs)?;
        }
        samples_used += round_cost;

        let beta = gp_beta(k, d, t, config.delta);
        let root = beta.sqrt();
        let mut regions: Vec<Option<Region>> = vec![None; k];
        let mut max_diameter = 0.0_f64;
        for &design in &active {
            let post = model.posterior(design)?;
            let lower: Vec<f64> = post
                .mean
                .iter()
                .zip(&post.scale)
                .map(|(m, sc)| m - root * sc)
                .collect();
            let upper: Vec<f64> = post
                .mean
                .iter()
                .zip(&post.scale)
                .map(|(m, sc)| m + root * sc)
                .collect();
            let fresh = RectRegion::new(lower, upper)?;
            let merged = match cached[design].take() {
                // an empty overlap collapses the region to a point estimate
                // and the run carries on
                Some(prev) => prev.intersect(&fresh)?.0,
                None => fresh,
            };
            max_diameter = max_diameter.max(merged.diameter());
            regions[design] = Some(Region::Rect(merged.clone()));
            cached[design] = Some(merged);
        }

        elimination_step(&regions, &mut s, &mut p, shift.as_deref(), order.cone(), &pol)?;
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

#[cfg(test)]
mod tests {
    use super::super::tests::problem_from_rows;
    use super::*;
    use crate::cone::Cone;

    fn smooth_problem(n: usize, noise: f64) -> TabularProblem {
        let designs: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![2.0 * std::f64::consts::PI * i as f64 / n as f64])
            .collect();
        let objectives: Vec<Vec<f64>> = designs
            .iter()
            .map(|x| vec![x[0].sin(), x[0].cos()])
            .collect();
        TabularProblem::new("smooth", designs, objectives, noise, vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn budget_one_does_single_evaluation() {
        let p = smooth_problem(10, 0.1);
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 1,
            seed: 2,
            ..AlgConfig::default()
        };
        let res = gp_pal_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.samples_used, 1.0);
        assert_eq!(res.terminated_by, TerminatedBy::BudgetExhausted);
    }

    #[test]
    fn cached_regions_shrink_monotonically() {
        let p = smooth_problem(12, 0.05);
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 60,
            epsilon: 0.05,
            seed: 3,
            ..AlgConfig::default()
        };
        let res = gp_pal_run(&p, &ord, &cfg).unwrap();
        for pair in res.rounds.windows(2) {
            assert!(
                pair[1].max_diameter <= pair[0].max_diameter + 1e-12,
                "diameter grew: {} -> {}",
                pair[0].max_diameter,
                pair[1].max_diameter
            );
        }
    }

    #[test]
    fn zero_noise_identifies_exact_pareto() {
        let p = smooth_problem(16, 0.0);
        let ord = Order::new(Cone::componentwise(2));
        let truth = p.ground_truth_pareto(&ord).unwrap();
        let cfg = AlgConfig {
            budget: 400,
            seed: 5,
            ..AlgConfig::default()
        };
        let res = gp_pal_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.predicted_pareto, truth);
        assert_eq!(res.terminated_by, TerminatedBy::Converged);
    }

    #[test]
    fn rejects_problems_without_features() {
        let p = TabularProblem::new(
            "nofeat",
            vec![vec![], vec![]],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            0.0,
            vec![1.0, 1.0],
        )
        .unwrap();
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig::default();
        assert!(matches!(
            gp_pal_run(&p, &ord, &cfg),
            Err(VecoptError::ModelError(_))
        ));
    }

    #[test]
    fn deterministic_across_reruns() {
        let p = smooth_problem(10, 0.05);
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 50,
            epsilon: 0.1,
            seed: 11,
            ..AlgConfig::default()
        };
        assert_eq!(gp_pal_run(&p, &ord, &cfg).unwrap(), gp_pal_run(&p, &ord, &cfg).unwrap());
    }

    #[test]
    fn heuristic_params_reflect_grid_spacing() {
        let p = problem_from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]], 0.02);
        let params = default_gp_params(&p);
        assert!((params.lengthscale - 2.0).abs() < 1e-12); // nn distance 1.0
        assert_eq!(params.noise, 0.02);
        assert_eq!(params.signal, 1.0);
    }
}
