//! Round-based eliminator on the empirical mean/variance model.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::Order;
use crate::error::{Result, VecoptError};
use crate::model::{EmpiricalModel, SurrogateModel};
use crate::policy::NumericPolicy;
use crate::problem::{EvalQuery, TabularProblem};
use crate::region::Region;

use super::{
    check_order, elimination_step, epsilon_shift, final_prediction, paveba_beta, sorted_active,
    AlgConfig, RoundRecord, RunResult, TerminatedBy,
};

/// Vector-bandit elimination with coupled sampling.
///
/// Each round evaluates every active design once, rebuilds confidence regions
/// at `beta_t = 2 ln(4 K D t^2 / delta)`, then discards and identifies through
/// the shared region predicates.
pub fn paveba_run(
    problem: &TabularProblem,
    order: &Order,
    config: &AlgConfig,
) -> Result<RunResult> {
    config.validate()?;
    check_order(problem, order)?;
    let k = problem.len();
    let d = problem.num_objectives();
    if config.budget < k {
        return Err(VecoptError::BudgetTooSmall {
            budget: config.budget,
            required: k,
        });
    }

    let pol = NumericPolicy::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmpiricalModel::new(k, d, problem.noise_std());
    let mut s: BTreeSet<usize> = (0..k).collect();
    let mut p: BTreeSet<usize> = BTreeSet::new();
    let shift = epsilon_shift(order.cone(), config.epsilon);

    let mut rounds = Vec::new();
    let mut samples_used = 0.0;
    let mut t: u32 = 0;
    let terminated_by = loop {
        if s.is_empty() {
            break TerminatedBy::Converged;
        }
        let active = sorted_active(&s, &p);
        let round_cost = active.len() as f64;
        if samples_used + round_cost > config.budget as f64 {
            break TerminatedBy::BudgetExhausted;
        }
        t += 1;
        for &design in &active {
            let obs = problem.evaluate(&EvalQuery::full(design, d, 1), &mut rng)?;
            model.update(&obs[0])?;
        }
        samples_used += round_cost;

        let beta = paveba_beta(k, d, t, config.delta);
        let mut regions: Vec<Option<Region>> = vec![None; k];
        let mut max_diameter = 0.0_f64;
        for &design in &active {
            let region = model.confidence_region(design, beta, config.conf_shape)?;
            max_diameter = max_diameter.max(region.diameter());
            regions[design] = Some(region);
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
    use crate::model::ConfShape;

    #[test]
    fn zero_noise_converges_to_exact_pareto() {
        let p = problem_from_rows(
            vec![
                vec![1.0, 2.0],
                vec![2.0, 1.0],
                vec![0.5, 0.5],
                vec![1.5, 1.8],
                vec![0.0, 2.2],
            ],
            0.0,
        );
        let ord = Order::new(Cone::componentwise(2));
        let truth = p.ground_truth_pareto(&ord).unwrap();
        let cfg = AlgConfig {
            budget: 50,
            ..AlgConfig::default()
        };
        let res = paveba_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.predicted_pareto, truth);
        assert_eq!(res.terminated_by, TerminatedBy::Converged);
    }

    #[test]
    fn zero_noise_also_converges_with_ellipsoids() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 0.5]],
            0.0,
        );
        let ord = Order::new(Cone::theta_2d(60.0).unwrap());
        let truth = p.ground_truth_pareto(&ord).unwrap();
        let cfg = AlgConfig {
            budget: 50,
            conf_shape: ConfShape::Ellipsoid,
            ..AlgConfig::default()
        };
        let res = paveba_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.predicted_pareto, truth);
    }

    #[test]
    fn one_round_budget_leaves_everything_active() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 0.5]],
            0.5,
        );
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 3,
            seed: 4,
            ..AlgConfig::default()
        };
        let res = paveba_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.terminated_by, TerminatedBy::BudgetExhausted);
        assert_eq!(res.samples_used, 3.0);
        // with sigma = 0.5 nothing is decided after a single round
        assert_eq!(res.predicted_pareto, vec![0, 1, 2]);
    }

    #[test]
    fn identical_rows_survive_to_budget_exhaustion() {
        let p = problem_from_rows(vec![vec![1.0, 1.0]; 4], 0.0);
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 40,
            ..AlgConfig::default()
        };
        let res = paveba_run(&p, &ord, &cfg).unwrap();
        assert_eq!(res.predicted_pareto, vec![0, 1, 2, 3]);
        assert_eq!(res.terminated_by, TerminatedBy::BudgetExhausted);
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![1.5, 1.5], vec![0.2, 0.3]],
            0.2,
        );
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 200,
            epsilon: 0.05,
            seed: 7,
            ..AlgConfig::default()
        };
        let a = paveba_run(&p, &ord, &cfg).unwrap();
        let b = paveba_run(&p, &ord, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rounds_csv(), b.rounds_csv());
    }

    #[test]
    fn budget_law_holds() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![1.5, 1.5]],
            0.4,
        );
        let ord = Order::new(Cone::componentwise(2));
        for budget in [3usize, 7, 20, 33] {
            let cfg = AlgConfig {
                budget,
                seed: 1,
                ..AlgConfig::default()
            };
            let res = paveba_run(&p, &ord, &cfg).unwrap();
            assert!(res.samples_used <= budget as f64);
        }
    }
}
