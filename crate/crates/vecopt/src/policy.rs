//! Centralized numeric policy.
//!
//! Every tolerance and iteration cap used by the geometric predicates and the
//! embedded solvers lives in this one record, so oracle tests have a single
//! place to tighten. Closed-form operations (dominance checks, support
//! functions) read the [`NumericPolicy::standard`] defaults; the iterative
//! solvers take an explicit `&NumericPolicy`.

/// Tolerances and iteration limits for the numeric kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Componentwise slack on `W(nu - mu)` for cone membership, with unit-norm
    /// rows.
    pub membership_tol: f64,
    /// Singular values below `rank_rtol * sigma_max` count as zero in the
    /// pointedness (rank) check.
    pub rank_rtol: f64,
    /// A cone whose max-min interior optimum is at or below this value is
    /// rejected as having empty interior.
    pub interior_tol: f64,
    /// Slack on the support-function gap in definite region comparisons.
    pub definite_tol: f64,
    /// Geometric tolerance added to the slack in possible (set-distance)
    /// comparisons; also the accuracy target of the set-distance solver.
    pub set_distance_tol: f64,
    /// Projected-gradient step size, `1 / L` with `L = 4` for the quadratic
    /// coupling of the product-space formulation.
    pub pgd_step: f64,
    /// The projected-gradient loop stops once the objective decrease between
    /// successive iterations falls below this value.
    pub pgd_obj_tol: f64,
    pub pgd_max_iters: usize,
    /// A Dykstra sweep whose iterate moves less than this (inf-norm) ends the
    /// cone projection.
    pub dykstra_tol: f64,
    pub dykstra_max_sweeps: usize,
    /// Required feasibility of the returned cone projection: `W p >= -feas`.
    pub dykstra_feas_tol: f64,
    /// Degenerate per-objective scales are floored at this value when building
    /// ellipsoid shape matrices.
    pub scale_floor: f64,
    /// Initial diagonal jitter added when a kernel factorization fails.
    pub jitter_init: f64,
    /// Jitter doubles on repeated failure up to this cap before giving up.
    pub jitter_max: f64,
}

impl NumericPolicy {
    pub const fn standard() -> Self {
        NumericPolicy {
            membership_tol: 1e-12,
            rank_rtol: 1e-9,
            interior_tol: 1e-9,
            definite_tol: 1e-9,
            set_distance_tol: 1e-6,
            pgd_step: 0.25,
            pgd_obj_tol: 1e-12,
            pgd_max_iters: 10_000,
            dykstra_tol: 1e-12,
            dykstra_max_sweeps: 50_000,
            dykstra_feas_tol: 1e-8,
            scale_floor: 1e-12,
            jitter_init: 1e-8,
            jitter_max: 1e-4,
        }
    }
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_positive() {
        let p = NumericPolicy::standard();
        for v in [
            p.membership_tol,
            p.rank_rtol,
            p.interior_tol,
            p.definite_tol,
            p.set_distance_tol,
            p.pgd_step,
            p.pgd_obj_tol,
            p.dykstra_tol,
            p.dykstra_feas_tol,
            p.scale_floor,
            p.jitter_init,
            p.jitter_max,
        ] {
            assert!(v > 0.0);
        }
        assert!(p.jitter_init < p.jitter_max);
    }
}
