//! Polyhedral ordering cones and the partial orders they induce.
//!
//! A pointed polyhedral cone `C = { x : W x >= 0 }` defines the partial order
//! `mu <= nu  iff  nu - mu in C`. The nonnegative orthant recovers ordinary
//! componentwise (multi-objective) dominance; narrower or wider cones encode
//! more or less conservative notions of one design dominating another.
//!
//! Conventions:
//! - Maximization everywhere. Minimization objectives are sign-flipped at
//!   ingestion (see the problem loader).
//! - The 2D cone constructor takes the *total* aperture about the `(1, 1)`
//!   diagonal, so `theta_2d(90)` is exactly the componentwise order.
//! - The 3D ice-cream constructor is an *inner* polyhedral approximation: the
//!   polyhedral cone is contained in the circular cone it approximates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VecoptError};
use crate::policy::NumericPolicy;
use crate::solver;

/// Pointed polyhedral ordering cone in halfspace representation.
///
/// Invariants established at construction: rows of `W` have unit Euclidean
/// norm, `rank(W) = dim` (pointedness), and the stored central direction `u`
/// is a unit vector with `W u > 0` strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    dim: usize,
    halfspaces: Vec<Vec<f64>>,
    central_direction: Vec<f64>,
}

impl Cone {
    /// Builds a cone from the rows of a coefficient matrix `W`, one halfspace
    /// `w . x >= 0` per row.
    ///
    /// Rows are normalized to unit norm. Pointedness is checked through the
    /// rank of `W`; the central direction is the normalized maximizer of
    /// `min_i w_i . u` over the unit box (a small exact LP), and cones whose
    /// optimum is not strictly positive are rejected as having empty interior.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let pol = NumericPolicy::standard();
        if rows.is_empty() {
            return Err(VecoptError::EmptyInput);
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(VecoptError::EmptyInput);
        }
        let mut normalized = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(VecoptError::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(VecoptError::NonFinite);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-300 {
                return Err(VecoptError::ZeroRow(i));
            }
            // already-unit rows pass through untouched so that construction is
            // idempotent and serialized matrices round-trip bit-exactly
            if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
                normalized.push(row.clone());
            } else {
                normalized.push(row.iter().map(|v| v / norm).collect::<Vec<f64>>());
            }
        }

        // Pointedness: C ∩ -C = {0} iff W has full column rank.
        let mat = DMatrix::from_fn(normalized.len(), dim, |r, c| normalized[r][c]);
        let svals = mat.svd(false, false).singular_values;
        let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
        let rank = svals.iter().filter(|&&s| s > pol.rank_rtol * smax).count();
        if rank < dim {
            return Err(VecoptError::NotPointed { rank, dim });
        }

        let (u, optimum) = solver::max_min_direction(&normalized)?;
        if optimum <= pol.interior_tol {
            return Err(VecoptError::EmptyInterior { optimum });
        }
        let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let central_direction: Vec<f64> = u.iter().map(|v| v / unorm).collect();

        Ok(Cone {
            dim,
            halfspaces: normalized,
            central_direction,
        })
    }

    /// The nonnegative orthant: ordinary componentwise dominance.
    pub fn componentwise(dim: usize) -> Self {
        assert!(dim >= 1, "componentwise cone needs dim >= 1");
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut r = vec![0.0; dim];
                r[i] = 1.0;
                r
            })
            .collect();
        Self::from_matrix(&rows).expect("orthant cone is always valid")
    }

    /// 2D cone symmetric about the `(1, 1)` diagonal with the given *total*
    /// aperture in degrees. `theta_2d(90)` coincides with the componentwise
    /// order; smaller apertures order fewer pairs, larger apertures more.
    pub fn theta_2d(aperture_deg: f64) -> Result<Self> {
        if !aperture_deg.is_finite() || aperture_deg <= 0.0 || aperture_deg >= 180.0 {
            return Err(VecoptError::InvalidAngle {
                degrees: aperture_deg,
                expected: "0 < theta < 180",
            });
        }
        let a1 = (45.0 - aperture_deg / 2.0).to_radians();
        let a2 = (45.0 + aperture_deg / 2.0).to_radians();
        let rows = vec![
            vec![-a1.sin(), a1.cos()],
            vec![a2.sin(), -a2.cos()],
        ];
        Self::from_matrix(&rows)
    }

    /// Inner polyhedral approximation of the 3D circular ("ice-cream") cone
    /// around the axis `(1, 1, 1) / sqrt(3)` with the given half-angle in
    /// degrees, using `facets` boundary generators.
    pub fn icecream_3d(half_angle_deg: f64, facets: usize) -> Result<Self> {
        if !half_angle_deg.is_finite() || half_angle_deg <= 0.0 || half_angle_deg >= 90.0 {
            return Err(VecoptError::InvalidAngle {
                degrees: half_angle_deg,
                expected: "0 < alpha < 90",
            });
        }
        if facets < 3 {
            return Err(VecoptError::TooFewFacets(facets));
        }
        let axis = [1.0 / 3f64.sqrt(); 3];
        // Deterministic orthonormal basis of the plane orthogonal to the axis
        // (Gram-Schmidt on (1,-1,0) and (1,1,-2); both are already orthogonal
        // to the axis).
        let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        let e2 = [
            1.0 / 6f64.sqrt(),
            1.0 / 6f64.sqrt(),
            -2.0 / 6f64.sqrt(),
        ];
        let alpha = half_angle_deg.to_radians();
        let generators: Vec<[f64; 3]> = (0..facets)
            .map(|j| {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / facets as f64;
                let mut g = [0.0; 3];
                for k in 0..3 {
                    g[k] = alpha.cos() * axis[k]
                        + alpha.sin() * (phi.cos() * e1[k] + phi.sin() * e2[k]);
                }
                g
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..facets)
            .map(|j| {
                let g = generators[j];
                let h = generators[(j + 1) % facets];
                let mut n = [
                    g[1] * h[2] - g[2] * h[1],
                    g[2] * h[0] - g[0] * h[2],
                    g[0] * h[1] - g[1] * h[0],
                ];
                let toward_axis: f64 = (0..3).map(|k| n[k] * axis[k]).sum();
                if toward_axis < 0.0 {
                    for v in n.iter_mut() {
                        *v = -*v;
                    }
                }
                n.to_vec()
            })
            .collect();
        Self::from_matrix(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unit-norm halfspace rows of the coefficient matrix.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.halfspaces
    }

    pub fn num_rows(&self) -> usize {
        self.halfspaces.len()
    }

    /// Unit interior direction with `W u > 0` strictly, used for epsilon
    /// shifts.
    pub fn central_direction(&self) -> &[f64] {
        &self.central_direction
    }

    /// Membership test `x in C`, i.e. `W x >= -membership_tol` componentwise.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(VecoptError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let tol = NumericPolicy::standard().membership_tol;
        Ok(self
            .halfspaces
            .iter()
            .all(|w| w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() >= -tol))
    }

    /// The serializable description of this cone (matrix form).
    pub fn spec(&self) -> ConeSpec {
        ConeSpec::Matrix {
            w: self.halfspaces.clone(),
        }
    }
}

/// Partial order induced by a cone. The sense is maximization throughout the
/// library; minimization objectives are sign-flipped when problems are loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    cone: Cone,
}

impl Order {
    pub fn new(cone: Cone) -> Self {
        Order { cone }
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn dim(&self) -> usize {
        self.cone.dim
    }

    /// `mu <= nu` in the cone order, i.e. `nu - mu in C`.
    pub fn dominates(&self, mu: &[f64], nu: &[f64]) -> Result<bool> {
        if mu.len() != self.cone.dim || nu.len() != self.cone.dim {
            return Err(VecoptError::DimensionMismatch {
                expected: self.cone.dim,
                actual: if mu.len() != self.cone.dim {
                    mu.len()
                } else {
                    nu.len()
                },
            });
        }
        let tol = NumericPolicy::standard().membership_tol;
        Ok(self.cone.halfspaces.iter().all(|w| {
            let s: f64 = w
                .iter()
                .zip(mu.iter().zip(nu))
                .map(|(wi, (m, n))| wi * (n - m))
                .sum();
            s >= -tol
        }))
    }

    /// Indices of the Pareto set of `points` under this order, sorted
    /// ascending. A point is dominated only by a *distinct* value, so
    /// duplicate-valued points are all retained.
    pub fn pareto_indices(&self, points: &[Vec<f64>]) -> Result<Vec<usize>> {
        if points.is_empty() {
            return Err(VecoptError::EmptyInput);
        }
        for p in points {
            if p.len() != self.cone.dim {
                return Err(VecoptError::DimensionMismatch {
                    expected: self.cone.dim,
                    actual: p.len(),
                });
            }
        }
        let mut out = Vec::new();
        'outer: for i in 0..points.len() {
            for j in 0..points.len() {
                if i == j || points[i] == points[j] {
                    continue;
                }
                if self.dominates(&points[i], &points[j])? {
                    continue 'outer;
                }
            }
            out.push(i);
        }
        Ok(out)
    }
}

/// JSON-serializable cone description.
///
/// `{"type": "matrix", "W": [[..]]}`, `{"type": "componentwise", "dim": D}`,
/// `{"type": "theta2d", "theta": deg}` or
/// `{"type": "icecream3d", "alpha": deg, "facets": k}`. The componentwise
/// `dim` may be omitted when the dimension is known from context (e.g. a
/// problem table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConeSpec {
    Matrix {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
    },
    Componentwise {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Theta2d { theta: f64 },
    Icecream3d { alpha: f64, facets: usize },
}

impl ConeSpec {
    /// Builds the cone, resolving a missing componentwise dimension from
    /// `default_dim`.
    pub fn build(&self, default_dim: Option<usize>) -> Result<Cone> {
        match self {
            ConeSpec::Matrix { w } => Cone::from_matrix(w),
            ConeSpec::Componentwise { dim } => {
                let d = dim.or(default_dim).ok_or_else(|| {
                    VecoptError::ConfigInvalid(
                        "componentwise cone needs \"dim\" when no problem context is available"
                            .into(),
                    )
                })?;
                if d == 0 {
                    return Err(VecoptError::ConfigInvalid(
                        "componentwise cone needs dim >= 1".into(),
                    ));
                }
                Ok(Cone::componentwise(d))
            }
            ConeSpec::Theta2d { theta } => Cone::theta_2d(*theta),
            ConeSpec::Icecream3d { alpha, facets } => Cone::icecream_3d(*alpha, *facets),
        }
    }
}
