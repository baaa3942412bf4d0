//! Pareto set identification algorithms over finite design sets.
//!
//! All four runners share the same discard/identify core built on the region
//! predicates:
//!
//! - a design `d` is *discarded* when some other active design's region,
//!   handicapped by `-eps * u` along the cone's central direction, still
//!   definitely dominates `d`'s region;
//! - `d` is *identified* (moved to the predicted set) when no other active
//!   design could dominate it even optimistically under the same handicap.
//!
//! At `eps = 0` and with shrinking regions the two rules become complementary,
//! so the undecided set empties and the run reports convergence; otherwise it
//! stops on budget exhaustion and predicts the surviving designs.

mod decoupled;
mod gp_pal;
mod paveba;

pub use decoupled::decoupled_paveba_run;
pub use gp_pal::{default_gp_params, gp_pal_run};
pub use paveba::paveba_run;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, Order};
use crate::error::{Result, VecoptError};
use crate::model::{ConfShape, EmpiricalModel, SurrogateModel};
use crate::policy::NumericPolicy;
use crate::problem::{EvalQuery, TabularProblem};
use crate::region::{definitely_leq, possibly_leq, Region};

/// Shared algorithm settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgConfig {
    /// Accuracy slack applied along the cone's central direction.
    pub epsilon: f64,
    /// Confidence failure probability.
    pub delta: f64,
    /// Total evaluation budget. Coupled evaluations count 1 each; decoupled
    /// evaluations count their per-objective cost.
    pub budget: usize,
    /// Evaluations per acquisition in the GP path.
    pub batch_size: usize,
    pub conf_shape: ConfShape,
    /// Per-objective costs for decoupled sampling; falls back to the
    /// problem's cost vector when absent.
    pub costs: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for AlgConfig {
    fn default() -> Self {
        AlgConfig {
            epsilon: 0.0,
            delta: 0.05,
            budget: 10_000,
            batch_size: 1,
            conf_shape: ConfShape::Rect,
            costs: None,
            seed: 0,
        }
    }
}

impl AlgConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(VecoptError::ConfigInvalid(
                "epsilon must be finite and non-negative".into(),
            ));
        }
        if !(self.delta.is_finite() && self.delta > 0.0 && self.delta < 1.0) {
            return Err(VecoptError::ConfigInvalid(
                "delta must lie in (0, 1)".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(VecoptError::ConfigInvalid(
                "batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    Converged,
    BudgetExhausted,
}

/// One row of the per-round log.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub samples_used: f64,
    pub undecided: usize,
    pub predicted: usize,
    pub max_diameter: f64,
}

/// Outcome of one run: the predicted Pareto indices, the round log, and how
/// the run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub predicted_pareto: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
    pub samples_used: f64,
    pub terminated_by: TerminatedBy,
}

impl RunResult {
    /// The per-round log in its stable five-column CSV schema.
    pub fn rounds_csv(&self) -> String {
        let mut out = String::from("t,samples_used,S_size,P_size,max_diameter\n");
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round, r.samples_used, r.undecided, r.predicted, r.max_diameter
            ));
        }
        out
    }
}

pub(crate) fn paveba_beta(k: usize, d: usize, t: u32, delta: f64) -> f64 {
    2.0 * (4.0 * k as f64 * d as f64 * (t as f64) * (t as f64) / delta).ln()
}

pub(crate) fn gp_beta(k: usize, d: usize, t: u32, delta: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    2.0 * (k as f64 * d as f64 * pi2 * (t as f64) * (t as f64) / (6.0 * delta)).ln()
}

fn check_order(problem: &TabularProblem, order: &Order) -> Result<()> {
    if order.dim() != problem.num_objectives() {
        return Err(VecoptError::DimensionMismatch {
            expected: problem.num_objectives(),
            actual: order.dim(),
        });
    }
    Ok(())
}

fn sorted_active(s: &BTreeSet<usize>, p: &BTreeSet<usize>) -> Vec<usize> {
    let mut active: Vec<usize> = s.iter().chain(p.iter()).copied().collect();
    active.sort_unstable();
    active
}

/// Applies one round of discard/identify decisions to `(s, p)` from the
/// current confidence regions, all evaluated against the round-start sets.
pub(crate) fn elimination_step(
    regions: &[Option<Region>],
    s: &mut BTreeSet<usize>,
    p: &mut BTreeSet<usize>,
    shift: Option<&[f64]>,
    cone: &Cone,
    pol: &NumericPolicy,
) -> Result<()> {
    let active = sorted_active(s, p);
    let mut discards: Vec<usize> = Vec::new();
    let mut identified: Vec<usize> = Vec::new();

    for &d in s.iter() {
        let rd = regions[d].as_ref().expect("region for undecided design");
        let mut discard = false;
        let mut identify = true;
        for &o in &active {
            if o == d {
                continue;
            }
            let ro = regions[o].as_ref().expect("region for active design");
            let identical = ro == rd;
            let shifted = match shift {
                Some(sh) => ro.translated(sh),
                None => ro.clone(),
            };
            if !discard && !identical && definitely_leq(rd, &shifted, cone)? {
                discard = true;
                identify = false;
            } else if identify {
                // An undecided solver bound sits within tolerance of the
                // threshold; treat the comparison as possible, which merely
                // postpones identification to a later round.
                let possible = match possibly_leq(rd, &shifted, cone, 0.0, pol) {
                    Ok(v) => v,
                    Err(VecoptError::SolverDidNotConverge { .. }) => true,
                    Err(e) => return Err(e),
                };
                if possible {
                    identify = false;
                }
            }
            if discard {
                break;
            }
        }
        if discard {
            discards.push(d);
        } else if identify {
            identified.push(d);
        }
    }

    // A round may never empty the whole design pool: mutual elimination of
    // support-identical regions is possible within tolerance, so the lowest
    // surviving index is kept undecided instead.
    if p.is_empty() && identified.is_empty() && !discards.is_empty() && discards.len() == s.len() {
        discards.remove(0);
    }

    for d in discards {
        s.remove(&d);
    }
    for d in identified {
        s.remove(&d);
        p.insert(d);
    }
    Ok(())
}

pub(crate) fn epsilon_shift(cone: &Cone, epsilon: f64) -> Option<Vec<f64>> {
    (epsilon > 0.0).then(|| {
        cone.central_direction()
            .iter()
            .map(|v| -epsilon * v)
            .collect()
    })
}

pub(crate) fn final_prediction(s: &BTreeSet<usize>, p: &BTreeSet<usize>) -> Vec<usize> {
    sorted_active(s, p)
}

/// Uniform-allocation baseline: every design is evaluated exactly
/// `floor(budget / K)` times (coupled), and the Pareto set of the empirical
/// means is returned.
pub fn naive_elimination(
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
    let reps = config.budget / k;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmpiricalModel::new(k, d, problem.noise_std());
    for design in 0..k {
        for obs in problem.evaluate(&EvalQuery::full(design, d, reps), &mut rng)? {
            model.update(&obs)?;
        }
    }
    let means: Vec<Vec<f64>> = (0..k)
        .map(|i| model.posterior(i).map(|s| s.mean))
        .collect::<Result<_>>()?;
    let predicted = order.pareto_indices(&means)?;
    let samples_used = (k * reps) as f64;
    Ok(RunResult {
        rounds: vec![RoundRecord {
            round: 1,
            samples_used,
            undecided: 0,
            predicted: predicted.len(),
            max_diameter: 0.0,
        }],
        predicted_pareto: predicted,
        samples_used,
        terminated_by: TerminatedBy::Converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;
    use rand::Rng;

    pub(crate) fn problem_from_rows(rows: Vec<Vec<f64>>, noise: f64) -> TabularProblem {
        let k = rows.len();
        let d = rows[0].len();
        let designs: Vec<Vec<f64>> = (0..k).map(|i| vec![i as f64]).collect();
        TabularProblem::new("t", designs, rows, noise, vec![1.0; d]).unwrap()
    }

    #[test]
    fn naive_recovers_exact_pareto_without_noise() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]],
            0.0,
        );
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 3,
            ..AlgConfig::default()
        };
        let res = naive_elimination(&p, &ord, &cfg).unwrap();
        assert_eq!(res.predicted_pareto, vec![0, 1]);
        assert_eq!(res.terminated_by, TerminatedBy::Converged);
    }

    #[test]
    fn naive_uses_floor_division_of_budget() {
        let p = problem_from_rows(
            vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]],
            0.1,
        );
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 10,
            ..AlgConfig::default()
        };
        let res = naive_elimination(&p, &ord, &cfg).unwrap();
        assert_eq!(res.samples_used, 9.0);
    }

    #[test]
    fn naive_rejects_budget_below_design_count() {
        let p = problem_from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]], 0.0);
        let ord = Order::new(Cone::componentwise(2));
        let cfg = AlgConfig {
            budget: 1,
            ..AlgConfig::default()
        };
        assert!(matches!(
            naive_elimination(&p, &ord, &cfg),
            Err(VecoptError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn naive_beats_noise_with_enough_budget() {
        let ord = Order::new(Cone::componentwise(2));
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let rows: Vec<Vec<f64>> = (0..10)
                .map(|_| (0..2).map(|_| rng.random_range(0.0..2.0)).collect())
                .collect();
            let p = problem_from_rows(rows, 0.05);
            let truth = p.ground_truth_pareto(&ord).unwrap();
            let cfg = AlgConfig {
                budget: 10 * 200,
                seed,
                ..AlgConfig::default()
            };
            let res = naive_elimination(&p, &ord, &cfg).unwrap();
            if res.predicted_pareto == truth {
                hits += 1;
            }
        }
        assert!(hits >= 18, "only {hits}/20 exact recoveries");
    }

    #[test]
    fn rounds_csv_has_stable_schema() {
        let res = RunResult {
            predicted_pareto: vec![0],
            rounds: vec![RoundRecord {
                round: 1,
                samples_used: 4.0,
                undecided: 2,
                predicted: 1,
                max_diameter: 0.5,
            }],
            samples_used: 4.0,
            terminated_by: TerminatedBy::BudgetExhausted,
        };
        let csv = res.rounds_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,samples_used,S_size,P_size,max_diameter"));
        assert_eq!(lines.next(), Some("1,4,2,1,0.5"));
    }
}
