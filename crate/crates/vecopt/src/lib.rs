//! Black-box vector optimization over finite design sets.
//!
//! `vecopt` identifies the Pareto set of a noisy vector-valued function with
//! respect to a partial order induced by a pointed polyhedral cone. It ships
//! four sequential-sampling algorithms (uniform-allocation baseline, a
//! bandit-style eliminator, a GP-based identifier, and a cost-aware decoupled
//! eliminator), the confidence-region geometry they are built on, surrogate
//! models, oracle-backed metrics, and a seeded benchmark harness.
//!
//! The building blocks compose freely:
//!
//! ```
//! use vecopt::{AlgConfig, Cone, Order, TabularProblem};
//!
//! let problem = TabularProblem::new(
//!     "demo",
//!     vec![vec![0.0], vec![1.0], vec![2.0]],
//!     vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]],
//!     0.0,
//!     vec![1.0, 1.0],
//! )
//! .unwrap();
//! let order = Order::new(Cone::componentwise(2));
//! let config = AlgConfig { budget: 30, ..AlgConfig::default() };
//! let run = vecopt::algorithm::paveba_run(&problem, &order, &config).unwrap();
//! assert_eq!(run.predicted_pareto, vec![0, 1]);
//! ```
//!
//! Runnable walkthroughs for each capability live under `examples/`; the
//! `vecopt` binary wraps the benchmark harness (`run`, `compare`, `pareto`).

pub mod algorithm;
pub mod bench;
pub mod cone;
pub mod error;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod problem;
pub mod region;
pub mod solver;

pub use algorithm::{
    decoupled_paveba_run, gp_pal_run, naive_elimination, paveba_run, AlgConfig, RoundRecord,
    RunResult, TerminatedBy,
};
pub use cone::{Cone, ConeSpec, Order};
pub use error::{Result, VecoptError};
pub use metrics::{eps_f1, hv_discrepancy, hypervolume, HvEstimate, MetricConfig};
pub use model::{
    ConfShape, EmpiricalModel, GpHyperParams, GpModel, Observation, PosteriorSummary,
    SurrogateModel,
};
pub use policy::NumericPolicy;
pub use problem::{EvalQuery, ProblemSpec, TabularProblem};
pub use region::{
    definitely_leq, pessimistic_pareto, possibly_leq, EllipsoidRegion, RectRegion, Region,
};
pub use solver::project_onto_cone;
