//! Tabular problems: finite design sets with an objective table, a Gaussian
//! noise model, and per-objective evaluation costs.
//!
//! All objectives follow the library-wide maximization convention; columns
//! flagged `minimize` in the problem spec are negated at ingestion. The RNG
//! stream of [`TabularProblem::evaluate`] is consumed in a fixed, documented
//! order (masked objectives ascending, then batch slots), so runs with equal
//! seeds reproduce bit for bit.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::Order;
use crate::error::{Result, VecoptError};
use crate::model::Observation;

/// Column selection and transforms for loading a CSV dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub path: PathBuf,
    pub design_cols: Vec<String>,
    pub objective_cols: Vec<String>,
    /// Per-objective minimize flags; flagged columns are negated. Defaults to
    /// all-false (every objective already a maximization target).
    #[serde(default)]
    pub minimize: Option<Vec<bool>>,
    /// Per-objective z-score standardization applied after sign flips; the
    /// affine parameters are retained on the loaded problem.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub noise_std: f64,
    /// Per-objective evaluation costs (decoupled sampling); defaults to ones.
    #[serde(default)]
    pub costs: Option<Vec<f64>>,
    #[serde(default)]
    pub name: Option<String>,
}

/// A finite design set with tabulated objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularProblem {
    name: String,
    designs: Vec<Vec<f64>>,
    objectives: Vec<Vec<f64>>,
    noise_std: f64,
    costs: Vec<f64>,
    /// Per-objective `(mean, std)` of the z-score transform, when applied.
    standardization: Option<Vec<(f64, f64)>>,
}

/// A batched, possibly partial evaluation request.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalQuery {
    pub design_index: usize,
    /// Strictly ascending objective indices; never empty.
    pub objective_mask: Vec<usize>,
    pub count: usize,
}

impl EvalQuery {
    pub fn new(design_index: usize, objective_mask: Vec<usize>, count: usize) -> Result<Self> {
        if objective_mask.is_empty() || count == 0 {
            return Err(VecoptError::EmptyInput);
        }
        if !objective_mask.windows(2).all(|w| w[0] < w[1]) {
            return Err(VecoptError::ConfigInvalid(
                "objective mask must be strictly ascending".into(),
            ));
        }
        Ok(EvalQuery {
            design_index,
            objective_mask,
            count,
        })
    }

    /// All objectives of one design, `count` times.
    pub fn full(design_index: usize, num_objectives: usize, count: usize) -> Self {
        EvalQuery {
            design_index,
            objective_mask: (0..num_objectives).collect(),
            count,
        }
    }

    /// A single (design, objective) cell once.
    pub fn single(design_index: usize, objective: usize) -> Self {
        EvalQuery {
            design_index,
            objective_mask: vec![objective],
            count: 1,
        }
    }
}

impl TabularProblem {
    pub fn new(
        name: impl Into<String>,
        designs: Vec<Vec<f64>>,
        objectives: Vec<Vec<f64>>,
        noise_std: f64,
        costs: Vec<f64>,
    ) -> Result<Self> {
        if objectives.is_empty() {
            return Err(VecoptError::EmptyInput);
        }
        let k = objectives.len();
        let d = objectives[0].len();
        if d < 2 {
            return Err(VecoptError::ConfigInvalid(
                "a problem needs at least two objectives".into(),
            ));
        }
        if designs.len() != k {
            return Err(VecoptError::DimensionMismatch {
                expected: k,
                actual: designs.len(),
            });
        }
        let feat = designs.first().map_or(0, |f| f.len());
        for (i, row) in objectives.iter().enumerate() {
            if row.len() != d {
                return Err(VecoptError::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(VecoptError::MalformedRow(i));
            }
        }
        for (i, row) in designs.iter().enumerate() {
            if row.len() != feat {
                return Err(VecoptError::DimensionMismatch {
                    expected: feat,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(VecoptError::MalformedRow(i));
            }
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(VecoptError::ConfigInvalid(
                "noise_std must be finite and non-negative".into(),
            ));
        }
        if costs.len() != d || costs.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(VecoptError::CostVectorInvalid);
        }
        Ok(TabularProblem {
            name: name.into(),
            designs,
            objectives,
            noise_std,
            costs,
            standardization: None,
        })
    }

    /// Loads a problem from the CSV file referenced by `spec`.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        Self::from_spec_at(spec, Path::new(""))
    }

    /// Like [`Self::from_spec`], resolving a relative `spec.path` against
    /// `base` (typically the directory of the config file naming it).
    pub fn from_spec_at(spec: &ProblemSpec, base: &Path) -> Result<Self> {
        let path = if spec.path.is_absolute() {
            spec.path.clone()
        } else {
            base.join(&spec.path)
        };
        if !path.exists() {
            return Err(VecoptError::FileNotFound(path));
        }
        let d = spec.objective_cols.len();
        let minimize = match &spec.minimize {
            Some(flags) => {
                if flags.len() != d {
                    return Err(VecoptError::ConfigInvalid(format!(
                        "minimize has {} flags for {} objectives",
                        flags.len(),
                        d
                    )));
                }
                flags.clone()
            }
            None => vec![false; d],
        };

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(&path)?;
        let headers = reader.headers()?.clone();
        let col_index = |name: &String| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| VecoptError::NonNumericColumn(name.clone()))
        };
        let design_idx: Vec<usize> = spec
            .design_cols
            .iter()
            .map(col_index)
            .collect::<Result<_>>()?;
        let objective_idx: Vec<usize> = spec
            .objective_cols
            .iter()
            .map(col_index)
            .collect::<Result<_>>()?;

        let mut designs = Vec::new();
        let mut objectives = Vec::new();
        for (row_num, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |col: usize, name: &String| -> Result<f64> {
                record
                    .get(col)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| VecoptError::NonNumericColumn(name.clone()))
            };
            let feat: Vec<f64> = design_idx
                .iter()
                .zip(&spec.design_cols)
                .map(|(&c, n)| parse(c, n))
                .collect::<Result<_>>()?;
            let mut obj: Vec<f64> = objective_idx
                .iter()
                .zip(&spec.objective_cols)
                .map(|(&c, n)| parse(c, n))
                .collect::<Result<_>>()?;
            if feat.iter().chain(obj.iter()).any(|v| !v.is_finite()) {
                return Err(VecoptError::MalformedRow(row_num));
            }
            for (v, &flip) in obj.iter_mut().zip(&minimize) {
                if flip {
                    *v = -*v;
                }
            }
            designs.push(feat);
            objectives.push(obj);
        }

        let costs = spec.costs.clone().unwrap_or_else(|| vec![1.0; d]);
        let name = spec.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "problem".into())
        });
        let mut problem = Self::new(name, designs, objectives, spec.noise_std, costs)?;
        if spec.standardize {
            problem.standardize();
        }
        Ok(problem)
    }

    /// Applies a per-objective z-score transform, retaining the affine
    /// parameters. Constant columns keep a unit scale.
    fn standardize(&mut self) {
        let k = self.len() as f64;
        let d = self.num_objectives();
        let mut params = Vec::with_capacity(d);
        for j in 0..d {
            let mean = self.objectives.iter().map(|r| r[j]).sum::<f64>() / k;
            let var = self
                .objectives
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / k;
            let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
            for row in &mut self.objectives {
                row[j] = (row[j] - mean) / std;
            }
            params.push((mean, std));
        }
        self.standardization = Some(params);
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of designs `K`.
    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives[0].len()
    }

    pub fn feature_dim(&self) -> usize {
        self.designs.first().map_or(0, |f| f.len())
    }

    pub fn designs(&self) -> &[Vec<f64>] {
        &self.designs
    }

    pub fn objectives(&self) -> &[Vec<f64>] {
        &self.objectives
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn standardization(&self) -> Option<&[(f64, f64)]> {
        self.standardization.as_deref()
    }

    /// Draws `query.count` noisy observations of the masked objectives.
    ///
    /// The Gaussian stream is consumed per masked objective in ascending
    /// order, and within an objective per batch slot, so identical seeds give
    /// identical observation streams regardless of later use of the RNG.
    pub fn evaluate<R: Rng>(&self, query: &EvalQuery, rng: &mut R) -> Result<Vec<Observation>> {
        if query.design_index >= self.len() {
            return Err(VecoptError::IndexOutOfRange {
                index: query.design_index,
                len: self.len(),
            });
        }
        if query.objective_mask.is_empty() || query.count == 0 {
            return Err(VecoptError::EmptyInput);
        }
        for &j in &query.objective_mask {
            if j >= self.num_objectives() {
                return Err(VecoptError::IndexOutOfRange {
                    index: j,
                    len: self.num_objectives(),
                });
            }
        }
        let row = &self.objectives[query.design_index];
        let mut draws = vec![vec![0.0; query.count]; query.objective_mask.len()];
        for (mi, slots) in draws.iter_mut().enumerate() {
            let base = row[query.objective_mask[mi]];
            for slot in slots.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *slot = base + self.noise_std * z;
            }
        }
        Ok((0..query.count)
            .map(|slot| Observation {
                design_index: query.design_index,
                values: query
                    .objective_mask
                    .iter()
                    .enumerate()
                    .map(|(mi, &j)| (j, draws[mi][slot]))
                    .collect(),
            })
            .collect())
    }

    /// Indices of the noiseless Pareto set of the objective table — the
    /// oracle the metrics are measured against.
    pub fn ground_truth_pareto(&self, order: &Order) -> Result<Vec<usize>> {
        order.pareto_indices(&self.objectives)
    }

    /// Writes the problem back to CSV with generated headers `design_<i>` /
    /// `objective_<j>`. Values print in shortest round-trip form, so a reload
    /// reproduces them bit for bit.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        let mut header: Vec<String> = (0..self.feature_dim())
            .map(|i| format!("design_{i}"))
            .collect();
        header.extend((0..self.num_objectives()).map(|j| format!("objective_{j}")));
        writeln!(out, "{}", header.join(","))?;
        for (feat, obj) in self.designs.iter().zip(&self.objectives) {
            let cells: Vec<String> = feat
                .iter()
                .chain(obj.iter())
                .map(|v| format!("{v}"))
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
