//! Surrogate models: beliefs over each design's objective vector from noisy,
//! possibly partial (per-objective) observations.
//!
//! Two models are built in. The empirical model keeps streaming mean/variance
//! statistics per (design, objective) cell; its reported scale is the
//! *standard error* `sigma_hat / sqrt(n)`, falling back to the noise prior
//! while fewer than two samples exist. The GP model fits one independent
//! squared-exponential Gaussian process per objective over the design feature
//! vectors, with incremental Cholesky updates and a jitter ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VecoptError};
use crate::policy::NumericPolicy;
use crate::region::{EllipsoidRegion, RectRegion, Region};

/// One noisy evaluation of a design: full rows for coupled sampling,
/// singletons for decoupled sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub design_index: usize,
    /// `(objective_index, value)` pairs; indices unique within one observation.
    pub values: Vec<(usize, f64)>,
}

impl Observation {
    pub fn full(design_index: usize, values: &[f64]) -> Self {
        Observation {
            design_index,
            values: values.iter().copied().enumerate().collect(),
        }
    }

    pub fn single(design_index: usize, objective: usize, value: f64) -> Self {
        Observation {
            design_index,
            values: vec![(objective, value)],
        }
    }
}

/// Shape of the confidence regions a model emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConfShape {
    #[default]
    Rect,
    Ellipsoid,
}

/// Per-design posterior: mean vector and per-objective uncertainty scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl PosteriorSummary {
    /// Confidence region at confidence parameter `beta`: a rectangle
    /// `mean +- sqrt(beta) * scale` per objective, or the axis-aligned
    /// ellipsoid with `A = beta * diag(scale^2)` (degenerate scales floored).
    pub fn confidence_region(&self, beta: f64, shape: ConfShape) -> Result<Region> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(VecoptError::ConfigInvalid(
                "beta must be finite and positive".into(),
            ));
        }
        let root = beta.sqrt();
        match shape {
            ConfShape::Rect => {
                let lower: Vec<f64> = self
                    .mean
                    .iter()
                    .zip(&self.scale)
                    .map(|(m, s)| m - root * s)
                    .collect();
                let upper: Vec<f64> = self
                    .mean
                    .iter()
                    .zip(&self.scale)
                    .map(|(m, s)| m + root * s)
                    .collect();
                Ok(Region::Rect(RectRegion::new(lower, upper)?))
            }
            ConfShape::Ellipsoid => {
                let floor = NumericPolicy::standard().scale_floor;
                let diag: Vec<f64> = self
                    .scale
                    .iter()
                    .map(|s| beta * s.max(floor) * s.max(floor))
                    .collect();
                Ok(Region::Ellipsoid(EllipsoidRegion::axis_aligned(
                    self.mean.clone(),
                    &diag,
                )?))
            }
        }
    }
}

/// Common interface of the built-in surrogate models.
pub trait SurrogateModel {
    fn num_designs(&self) -> usize;
    fn num_objectives(&self) -> usize;
    fn update(&mut self, obs: &Observation) -> Result<()>;
    fn posterior(&self, design: usize) -> Result<PosteriorSummary>;

    fn confidence_region(&self, design: usize, beta: f64, shape: ConfShape) -> Result<Region> {
        self.posterior(design)?.confidence_region(beta, shape)
    }
}

fn check_obs(obs: &Observation, num_designs: usize, num_objectives: usize) -> Result<()> {
    if obs.design_index >= num_designs {
        return Err(VecoptError::IndexOutOfRange {
            index: obs.design_index,
            len: num_designs,
        });
    }
    for (i, &(j, v)) in obs.values.iter().enumerate() {
        if j >= num_objectives {
            return Err(VecoptError::IndexOutOfRange {
                index: j,
                len: num_objectives,
            });
        }
        if !v.is_finite() {
            return Err(VecoptError::NonFinite);
        }
        if obs.values[..i].iter().any(|&(k, _)| k == j) {
            return Err(VecoptError::ConfigInvalid(format!(
                "objective {j} appears twice in one observation"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Empirical mean/variance model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn sample_std(&self) -> Option<f64> {
        (self.n >= 2).then(|| (self.m2 / (self.n - 1) as f64).max(0.0).sqrt())
    }
}

/// Streaming per-(design, objective) mean and variance.
#[derive(Debug, Clone)]
pub struct EmpiricalModel {
    num_designs: usize,
    num_objectives: usize,
    noise_std_prior: f64,
    cells: Vec<Welford>,
}

impl EmpiricalModel {
    /// `noise_std_prior` is used as the uncertainty scale of a cell with
    /// fewer than two samples.
    pub fn new(num_designs: usize, num_objectives: usize, noise_std_prior: f64) -> Self {
        EmpiricalModel {
            num_designs,
            num_objectives,
            noise_std_prior,
            cells: vec![Welford::default(); num_designs * num_objectives],
        }
    }

    pub fn noise_std_prior(&self) -> f64 {
        self.noise_std_prior
    }

    /// Number of samples seen for one (design, objective) cell.
    pub fn count(&self, design: usize, objective: usize) -> Result<u64> {
        if design >= self.num_designs {
            return Err(VecoptError::IndexOutOfRange {
                index: design,
                len: self.num_designs,
            });
        }
        if objective >= self.num_objectives {
            return Err(VecoptError::IndexOutOfRange {
                index: objective,
                len: self.num_objectives,
            });
        }
        Ok(self.cells[design * self.num_objectives + objective].n)
    }
}

impl SurrogateModel for EmpiricalModel {
    fn num_designs(&self) -> usize {
        self.num_designs
    }

    fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        check_obs(obs, self.num_designs, self.num_objectives)?;
        for &(j, v) in &obs.values {
            self.cells[obs.design_index * self.num_objectives + j].push(v);
        }
        Ok(())
    }

    fn posterior(&self, design: usize) -> Result<PosteriorSummary> {
        if design >= self.num_designs {
            return Err(VecoptError::IndexOutOfRange {
                index: design,
                len: self.num_designs,
            });
        }
        let mut mean = Vec::with_capacity(self.num_objectives);
        let mut scale = Vec::with_capacity(self.num_objectives);
        for j in 0..self.num_objectives {
            let cell = &self.cells[design * self.num_objectives + j];
            mean.push(cell.mean);
            let sigma = cell.sample_std().unwrap_or(self.noise_std_prior);
            scale.push(sigma / (cell.n.max(1) as f64).sqrt());
        }
        Ok(PosteriorSummary { mean, scale })
    }
}

// ---------------------------------------------------------------------------
// Independent-output Gaussian process model
// ---------------------------------------------------------------------------

/// Squared-exponential kernel hyperparameters of one objective's GP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperParams {
    pub signal: f64,
    pub lengthscale: f64,
    pub noise: f64,
}

impl GpHyperParams {
    pub fn new(signal: f64, lengthscale: f64, noise: f64) -> Result<Self> {
        if !(signal > 0.0 && lengthscale > 0.0 && noise > 0.0)
            || !(signal.is_finite() && lengthscale.is_finite() && noise.is_finite())
        {
            return Err(VecoptError::ConfigInvalid(
                "GP hyperparameters must be finite and positive".into(),
            ));
        }
        Ok(GpHyperParams {
            signal,
            lengthscale,
            noise,
        })
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal * self.signal * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Lower-triangular Cholesky factor stored by rows.
#[derive(Debug, Clone, Default)]
struct LowerTri {
    rows: Vec<Vec<f64>>,
}

impl LowerTri {
    fn n(&self) -> usize {
        self.rows.len()
    }

    /// Solves `L x = b` by forward substitution.
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.rows[i][k] * x[k];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }

    /// Solves `L^T x = b` by back substitution.
    fn backward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.rows[k][i] * x[k];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }

    /// Factorizes a dense symmetric matrix; fails on a non-positive pivot.
    fn factor(matrix: &[Vec<f64>]) -> Option<LowerTri> {
        let n = matrix.len();
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i + 1]).collect();
        for i in 0..n {
            for j in 0..=i {
                let mut s = matrix[i][j];
                for k in 0..j {
                    s -= rows[i][k] * rows[j][k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    rows[i][i] = s.sqrt();
                } else {
                    rows[i][j] = s / rows[j][j];
                }
            }
        }
        Some(LowerTri { rows })
    }

    /// Appends one row given the new column `k_vec` (covariances against the
    /// existing points) and the new diagonal entry. Fails when the Schur
    /// complement is not safely positive.
    fn append(&mut self, k_vec: &[f64], k_diag: f64) -> bool {
        let l_row = self.forward(k_vec);
        let rest = k_diag - l_row.iter().map(|v| v * v).sum::<f64>();
        if rest <= 1e-12 * k_diag.max(1e-300) || !rest.is_finite() {
            return false;
        }
        let mut row = l_row;
        row.push(rest.sqrt());
        self.rows.push(row);
        true
    }

    fn log_det(&self) -> f64 {
        2.0 * self.rows.iter().enumerate().map(|(i, r)| r[i].ln()).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
struct ObjectiveGp {
    params: GpHyperParams,
    train_idx: Vec<usize>,
    targets: Vec<f64>,
    chol: LowerTri,
    /// `(K + sigma_n^2 I)^{-1} y`, refreshed after every update.
    alpha: Vec<f64>,
    jitter: f64,
}

impl ObjectiveGp {
    fn kernel_matrix(&self, features: &[Vec<f64>], jitter: f64) -> Vec<Vec<f64>> {
        let n = self.train_idx.len();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = self
                    .params
                    .kernel(&features[self.train_idx[i]], &features[self.train_idx[j]]);
                k[i][j] = v;
                k[j][i] = v;
            }
            k[i][i] += self.params.noise * self.params.noise + jitter;
        }
        k
    }

    fn refactor(&mut self, features: &[Vec<f64>], pol: &NumericPolicy) -> Result<()> {
        let base = self.kernel_matrix(features, 0.0);
        if let Some(l) = LowerTri::factor(&base) {
            self.chol = l;
            self.jitter = 0.0;
            return self.refresh_alpha();
        }
        let mut jitter = pol.jitter_init;
        while jitter <= pol.jitter_max {
            let k = self.kernel_matrix(features, jitter);
            if let Some(l) = LowerTri::factor(&k) {
                self.chol = l;
                self.jitter = jitter;
                return self.refresh_alpha();
            }
            jitter *= 2.0;
        }
        Err(VecoptError::ModelError(format!(
            "kernel factorization failed even with jitter {:.1e}",
            pol.jitter_max
        )))
    }

    fn refresh_alpha(&mut self) -> Result<()> {
        let v = self.chol.forward(&self.targets);
        self.alpha = self.chol.backward(&v);
        Ok(())
    }
}

/// Independent squared-exponential GP per objective over the design features.
#[derive(Debug, Clone)]
pub struct GpModel {
    features: Vec<Vec<f64>>,
    objectives: Vec<ObjectiveGp>,
    policy: NumericPolicy,
}

impl GpModel {
    /// `features` is the full design table (one feature vector per design);
    /// observations refer to designs by index. All objectives share `params`.
    pub fn new(
        features: Vec<Vec<f64>>,
        num_objectives: usize,
        params: GpHyperParams,
    ) -> Result<Self> {
        Self::with_params(features, vec![params; num_objectives])
    }

    /// As [`Self::new`] with per-objective hyperparameters.
    pub fn with_params(features: Vec<Vec<f64>>, params: Vec<GpHyperParams>) -> Result<Self> {
        if features.is_empty() || params.is_empty() {
            return Err(VecoptError::EmptyInput);
        }
        let d = features[0].len();
        for f in &features {
            if f.len() != d {
                return Err(VecoptError::DimensionMismatch {
                    expected: d,
                    actual: f.len(),
                });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(VecoptError::NonFinite);
            }
        }
        let objectives = params
            .into_iter()
            .map(|p| {
                GpHyperParams::new(p.signal, p.lengthscale, p.noise)?;
                Ok(ObjectiveGp {
                    params: p,
                    train_idx: Vec::new(),
                    targets: Vec::new(),
                    chol: LowerTri::default(),
                    alpha: Vec::new(),
                    jitter: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GpModel {
            features,
            objectives,
            policy: NumericPolicy::standard(),
        })
    }

    pub fn params(&self, objective: usize) -> Result<GpHyperParams> {
        self.objectives
            .get(objective)
            .map(|g| g.params)
            .ok_or(VecoptError::IndexOutOfRange {
                index: objective,
                len: self.objectives.len(),
            })
    }

    pub fn num_training_points(&self, objective: usize) -> usize {
        self.objectives[objective].train_idx.len()
    }

    /// Exact log marginal likelihood of one objective's current data under
    /// the given hyperparameters.
    fn log_marginal(&self, objective: usize, params: GpHyperParams) -> Result<f64> {
        let gp = &self.objectives[objective];
        let n = gp.train_idx.len();
        let mut probe = ObjectiveGp {
            params,
            train_idx: gp.train_idx.clone(),
            targets: gp.targets.clone(),
            chol: LowerTri::default(),
            alpha: Vec::new(),
            jitter: 0.0,
        };
        probe.refactor(&self.features, &self.policy)?;
        let v = probe.chol.forward(&probe.targets);
        let quad: f64 = v.iter().map(|x| x * x).sum();
        Ok(-0.5
            * (quad + probe.chol.log_det() + n as f64 * (2.0 * std::f64::consts::PI).ln()))
    }

    /// Grid search for per-objective hyperparameters by exact log marginal
    /// likelihood, ties broken by grid order. Applies and returns the chosen
    /// triple for each objective.
    pub fn fit_hyperparams(&mut self, grid: &[GpHyperParams]) -> Result<Vec<GpHyperParams>> {
        if grid.is_empty() {
            return Err(VecoptError::EmptyInput);
        }
        for gp in &self.objectives {
            if gp.train_idx.len() < 2 {
                return Err(VecoptError::InsufficientData {
                    needed: 2,
                    got: gp.train_idx.len(),
                });
            }
        }
        let mut chosen = Vec::with_capacity(self.objectives.len());
        for j in 0..self.objectives.len() {
            let mut best = grid[0];
            let mut best_lml = f64::NEG_INFINITY;
            for &cand in grid {
                GpHyperParams::new(cand.signal, cand.lengthscale, cand.noise)?;
                let lml = self.log_marginal(j, cand)?;
                if lml > best_lml {
                    best_lml = lml;
                    best = cand;
                }
            }
            self.objectives[j].params = best;
            self.objectives[j].refactor(&self.features.clone(), &self.policy)?;
            chosen.push(best);
        }
        Ok(chosen)
    }
}

impl SurrogateModel for GpModel {
    fn num_designs(&self) -> usize {
        self.features.len()
    }

    fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        check_obs(obs, self.features.len(), self.objectives.len())?;
        let features = self.features.clone();
        for &(j, y) in &obs.values {
            let pol = self.policy;
            let gp = &mut self.objectives[j];
            let x_new = &features[obs.design_index];
            let k_vec: Vec<f64> = gp
                .train_idx
                .iter()
                .map(|&i| gp.params.kernel(&features[i], x_new))
                .collect();
            let k_diag =
                gp.params.kernel(x_new, x_new) + gp.params.noise * gp.params.noise + gp.jitter;
            gp.train_idx.push(obs.design_index);
            gp.targets.push(y);
            if gp.chol.n() + 1 == gp.train_idx.len() && gp.chol.append(&k_vec, k_diag) {
                gp.refresh_alpha()?;
            } else {
                gp.refactor(&features, &pol)?;
            }
        }
        Ok(())
    }

    fn posterior(&self, design: usize) -> Result<PosteriorSummary> {
        if design >= self.features.len() {
            return Err(VecoptError::IndexOutOfRange {
                index: design,
                len: self.features.len(),
            });
        }
        let x = &self.features[design];
        let mut mean = Vec::with_capacity(self.objectives.len());
        let mut scale = Vec::with_capacity(self.objectives.len());
        for gp in &self.objectives {
            if gp.train_idx.is_empty() {
                mean.push(0.0);
                scale.push(gp.params.signal);
                continue;
            }
            let k_vec: Vec<f64> = gp
                .train_idx
                .iter()
                .map(|&i| gp.params.kernel(&self.features[i], x))
                .collect();
            let m: f64 = k_vec.iter().zip(&gp.alpha).map(|(a, b)| a * b).sum();
            let v = gp.chol.forward(&k_vec);
            let var = gp.params.kernel(x, x) - v.iter().map(|t| t * t).sum::<f64>();
            mean.push(m);
            scale.push(var.max(0.0).sqrt());
        }
        Ok(PosteriorSummary { mean, scale })
    }
}
