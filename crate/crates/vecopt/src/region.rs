//! Rectangular and ellipsoidal confidence regions and the dominance
//! predicates between them.
//!
//! Two predicates cover every comparison the identification algorithms need:
//!
//! - [`definitely_leq`]: every point of one region is below every point of the
//!   other (a for-all/for-all test), decided in closed form through support
//!   functions.
//! - [`possibly_leq`]: some pair of points is ordered up to a slack (an
//!   exists/exists test), decided through the set distance of the difference
//!   set to the cone.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cone::Cone;
use crate::error::{Result, VecoptError};
use crate::policy::NumericPolicy;
use crate::solver;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RectRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(VecoptError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(VecoptError::NonFinite);
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(VecoptError::ConfigInvalid(
                "rectangle needs lower <= upper componentwise".into(),
            ));
        }
        Ok(RectRegion { lower, upper })
    }

    /// Degenerate single-point rectangle.
    pub fn point(x: &[f64]) -> Self {
        RectRegion {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn support(&self, w: &[f64]) -> f64 {
        w.iter()
            .enumerate()
            .map(|(j, wj)| wj * if *wj >= 0.0 { self.upper[j] } else { self.lower[j] })
            .sum()
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise intersection. Coordinates with empty overlap collapse to
    /// the midpoint of the gap; the returned flag is true when that happened
    /// (the confidence event failed and the result is a point estimate there).
    pub fn intersect(&self, other: &RectRegion) -> Result<(RectRegion, bool)> {
        if self.dim() != other.dim() {
            return Err(VecoptError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        let mut flagged = false;
        for j in 0..self.dim() {
            let lo = self.lower[j].max(other.lower[j]);
            let up = self.upper[j].min(other.upper[j]);
            if lo > up {
                let mid = 0.5 * (lo + up);
                lower.push(mid);
                upper.push(mid);
                flagged = true;
            } else {
                lower.push(lo);
                upper.push(up);
            }
        }
        Ok((RectRegion { lower, upper }, flagged))
    }

    /// Euclidean projection: componentwise clamp.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| v.clamp(self.lower[j], self.upper[j]))
            .collect()
    }

    pub fn translated(&self, shift: &[f64]) -> RectRegion {
        RectRegion {
            lower: self.lower.iter().zip(shift).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(shift).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Ellipsoid `{ x : (x - center)^T A^{-1} (x - center) <= 1 }` with symmetric
/// positive-definite shape matrix `A`.
#[derive(Debug, Clone)]
pub struct EllipsoidRegion {
    center: Vec<f64>,
    shape: DMatrix<f64>,
    eig_vals: Vec<f64>,
    eig_vecs: DMatrix<f64>,
}

impl EllipsoidRegion {
    pub fn new(center: Vec<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(VecoptError::DimensionMismatch {
                expected: d,
                actual: shape.nrows(),
            });
        }
        if center.iter().any(|v| !v.is_finite()) || shape.iter().any(|v| !v.is_finite()) {
            return Err(VecoptError::NonFinite);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if (shape[(i, j)] - shape[(j, i)]).abs() > 1e-12 {
                    return Err(VecoptError::ConfigInvalid(
                        "ellipsoid shape matrix must be symmetric".into(),
                    ));
                }
            }
        }
        let eig = SymmetricEigen::new(shape.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(VecoptError::ConfigInvalid(
                "ellipsoid shape matrix must be positive-definite".into(),
            ));
        }
        Ok(EllipsoidRegion {
            center,
            shape,
            eig_vals: eig.eigenvalues.iter().copied().collect(),
            eig_vecs: eig.eigenvectors,
        })
    }

    /// Axis-aligned ellipsoid with the given diagonal of `A`.
    pub fn axis_aligned(center: Vec<f64>, diag: &[f64]) -> Result<Self> {
        let d = center.len();
        if diag.len() != d {
            return Err(VecoptError::DimensionMismatch {
                expected: d,
                actual: diag.len(),
            });
        }
        Self::new(center, DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)))
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn support(&self, w: &[f64]) -> f64 {
        let d = self.dim();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += w[i] * self.shape[(i, j)] * w[j];
            }
        }
        let lin: f64 = w.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        lin + quad.max(0.0).sqrt()
    }

    pub fn diameter(&self) -> f64 {
        let lmax = self.eig_vals.iter().cloned().fold(0.0_f64, f64::max);
        2.0 * lmax.sqrt()
    }

    /// Exact Euclidean projection via the secular equation in the eigenbasis.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let y: Vec<f64> = (0..d).map(|k| x[k] - self.center[k]).collect();
        // coordinates in the eigenbasis
        let p: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| self.eig_vecs[(k, i)] * y[k]).sum())
            .collect();
        let level: f64 = (0..d).map(|i| p[i] * p[i] / self.eig_vals[i]).sum();
        if level <= 1.0 {
            return x.to_vec();
        }
        // find mu > 0 with sum_i lambda_i p_i^2 / (lambda_i + mu)^2 = 1
        let g = |mu: f64| -> f64 {
            (0..d)
                .map(|i| {
                    let li = self.eig_vals[i];
                    li * p[i] * p[i] / ((li + mu) * (li + mu))
                })
                .sum::<f64>()
        };
        let mut lo = 0.0;
        let mut hi = (0..d)
            .map(|i| self.eig_vals[i] * p[i] * p[i])
            .sum::<f64>()
            .sqrt();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        let z: Vec<f64> = (0..d)
            .map(|i| self.eig_vals[i] * p[i] / (self.eig_vals[i] + mu))
            .collect();
        (0..d)
            .map(|k| self.center[k] + (0..d).map(|i| self.eig_vecs[(k, i)] * z[i]).sum::<f64>())
            .collect()
    }

    pub fn translated(&self, shift: &[f64]) -> EllipsoidRegion {
        EllipsoidRegion {
            center: self.center.iter().zip(shift).map(|(a, b)| a + b).collect(),
            shape: self.shape.clone(),
            eig_vals: self.eig_vals.clone(),
            eig_vecs: self.eig_vecs.clone(),
        }
    }
}

impl PartialEq for EllipsoidRegion {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.shape == other.shape
    }
}

/// A confidence region of either shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rect(RectRegion),
    Ellipsoid(EllipsoidRegion),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Rect(r) => r.dim(),
            Region::Ellipsoid(e) => e.dim(),
        }
    }

    /// Support function `sup { w . x : x in region }`.
    pub fn support(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dim() {
            return Err(VecoptError::DimensionMismatch {
                expected: self.dim(),
                actual: w.len(),
            });
        }
        Ok(match self {
            Region::Rect(r) => r.support(w),
            Region::Ellipsoid(e) => e.support(w),
        })
    }

    /// Euclidean diameter: `||upper - lower||` for rectangles, twice the
    /// largest semi-axis for ellipsoids.
    pub fn diameter(&self) -> f64 {
        match self {
            Region::Rect(r) => r.diameter(),
            Region::Ellipsoid(e) => e.diameter(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Rect(r) => r
                .lower()
                .iter()
                .zip(r.upper())
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            Region::Ellipsoid(e) => e.center().to_vec(),
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Region::Rect(r) => r.project(x),
            Region::Ellipsoid(e) => e.project(x),
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Region {
        match self {
            Region::Rect(r) => Region::Rect(r.translated(shift)),
            Region::Ellipsoid(e) => Region::Ellipsoid(e.translated(shift)),
        }
    }
}

/// True iff `a <= b` for *every* `a in ra`, `b in rb`: per cone row `w`,
/// `inf_b w . b` must reach `sup_a w . a` up to the definite tolerance.
pub fn definitely_leq(ra: &Region, rb: &Region, cone: &Cone) -> Result<bool> {
    if ra.dim() != cone.dim() || rb.dim() != cone.dim() {
        return Err(VecoptError::DimensionMismatch {
            expected: cone.dim(),
            actual: if ra.dim() != cone.dim() {
                ra.dim()
            } else {
                rb.dim()
            },
        });
    }
    let tol = NumericPolicy::standard().definite_tol;
    let mut neg_w = vec![0.0; cone.dim()];
    for w in cone.rows() {
        for (n, v) in neg_w.iter_mut().zip(w) {
            *n = -v;
        }
        let inf_b = -rb.support(&neg_w)?;
        let sup_a = ra.support(w)?;
        if inf_b - sup_a < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff some `a in ra`, `b in rb` satisfy `a <= b` up to `slack_eps`:
/// the distance of the difference set `rb - ra` to the cone is at most
/// `slack_eps` plus the solver tolerance.
///
/// Cheap support-function bounds decide most instances; the product-space
/// projected-gradient solver runs only when they cannot.
pub fn possibly_leq(
    ra: &Region,
    rb: &Region,
    cone: &Cone,
    slack_eps: f64,
    pol: &NumericPolicy,
) -> Result<bool> {
    assert!(
        slack_eps.is_finite() && slack_eps >= 0.0,
        "slack_eps must be finite and non-negative"
    );
    let dim = cone.dim();
    if ra.dim() != dim || rb.dim() != dim {
        return Err(VecoptError::DimensionMismatch {
            expected: dim,
            actual: if ra.dim() != dim { ra.dim() } else { rb.dim() },
        });
    }
    let threshold = slack_eps + pol.set_distance_tol;

    // Lower bound: C lies in each halfspace, so dist(v, C) >= -w.v for every
    // row; minimized over the difference set this is -sup w.(b - a).
    let mut neg_w = vec![0.0; dim];
    for w in cone.rows() {
        for (n, v) in neg_w.iter_mut().zip(w) {
            *n = -v;
        }
        let h_diff = rb.support(w)? + ra.support(&neg_w)?;
        if -h_diff > threshold {
            return Ok(false);
        }
    }

    // Upper bound probe: one candidate difference point, projected once.
    let probe = match (ra, rb) {
        (Region::Rect(a), Region::Rect(b)) => {
            // closest point of the difference box to the origin
            (0..dim)
                .map(|j| 0.0_f64.clamp(b.lower()[j] - a.upper()[j], b.upper()[j] - a.lower()[j]))
                .collect::<Vec<f64>>()
        }
        _ => {
            let ca = ra.center();
            let cb = rb.center();
            (0..dim).map(|j| cb[j] - ca[j]).collect()
        }
    };
    let proj = solver::project_onto_cone(&probe, cone, pol)?;
    let d0: f64 = probe
        .iter()
        .zip(&proj)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if d0 <= threshold {
        return Ok(true);
    }

    // Rectangles admit an exact certificate: the Chebyshev margin of the
    // difference box against the cone rows decides feasibility outright, and
    // a negative margin is a valid lower bound on the set distance.
    if let (Region::Rect(a), Region::Rect(b)) = (ra, rb) {
        let lo: Vec<f64> = (0..dim).map(|j| b.lower()[j] - a.upper()[j]).collect();
        let hi: Vec<f64> = (0..dim).map(|j| b.upper()[j] - a.lower()[j]).collect();
        let (_, margin) = solver::box_max_min(cone.rows(), &lo, &hi)?;
        if margin >= 0.0 {
            return Ok(true); // difference box meets the cone: distance zero
        }
        if -margin > threshold {
            return Ok(false);
        }
    }

    match solver::set_distance(ra, rb, cone, pol) {
        Ok(dist) => Ok(dist <= threshold),
        // An unconverged upper bound below the threshold still decides the
        // predicate; otherwise surface the failure.
        Err(VecoptError::SolverDidNotConverge { best_bound }) if best_bound <= threshold => {
            Ok(true)
        }
        Err(e) => Err(e),
    }
}

/// Indices of regions not definitely dominated by any other region.
/// Identical regions never eliminate each other, so ties are all retained.
pub fn pessimistic_pareto(regions: &[Region], cone: &Cone) -> Result<Vec<usize>> {
    if regions.is_empty() {
        return Err(VecoptError::EmptyInput);
    }
    let mut out = Vec::new();
    'outer: for i in 0..regions.len() {
        for j in 0..regions.len() {
            if i == j || regions[i] == regions[j] {
                continue;
            }
            if definitely_leq(&regions[i], &regions[j], cone)? {
                continue 'outer;
            }
        }
        out.push(i);
    }
    Ok(out)
}
