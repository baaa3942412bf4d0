//! Deterministic benchmark harness: run configured algorithm x problem x
//! order experiments over seeds, write per-seed logs and metric summaries.
//!
//! Configs are single JSON files with strict unknown-key rejection. Relative
//! dataset paths resolve against the config file's directory. Per-seed
//! outputs (`rounds.csv`, `summary.json`) are byte-identical across reruns;
//! wall-clock timings are quarantined into a separate `timing.json` that is
//! excluded from every determinism guarantee.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algorithm::{
    decoupled_paveba_run, gp_pal_run, naive_elimination, paveba_run, AlgConfig, RunResult,
    TerminatedBy,
};
use crate::cone::{ConeSpec, Order};
use crate::error::{Result, VecoptError};
use crate::metrics::{eps_f1, hv_discrepancy, MetricConfig};
use crate::model::ConfShape;
use crate::problem::{ProblemSpec, TabularProblem};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmBlock {
    pub name: String,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub budget: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub conf_shape: ConfShape,
    #[serde(default)]
    pub costs: Option<Vec<f64>>,
}

fn default_delta() -> f64 {
    0.05
}

fn default_batch() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsBlock {
    pub seeds: Vec<u64>,
}

/// One experiment: a problem, an order, an algorithm, metric settings, and
/// the seeds to run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub order: ConeSpec,
    pub algorithm: AlgorithmBlock,
    pub metrics: MetricConfig,
    pub trials: TrialsBlock,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

const ALGORITHM_NAMES: [&str; 4] = ["naive", "paveba", "gp_pal", "decoupled_paveba"];

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(VecoptError::FileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| VecoptError::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !ALGORITHM_NAMES.contains(&self.algorithm.name.as_str()) {
            return Err(VecoptError::ConfigInvalid(format!(
                "unknown algorithm name {:?} (expected one of {:?})",
                self.algorithm.name, ALGORITHM_NAMES
            )));
        }
        if self.trials.seeds.is_empty() {
            return Err(VecoptError::ConfigInvalid("trials.seeds is empty".into()));
        }
        let unique: BTreeSet<u64> = self.trials.seeds.iter().copied().collect();
        if unique.len() != self.trials.seeds.len() {
            return Err(VecoptError::ConfigInvalid(
                "trials.seeds contains duplicates".into(),
            ));
        }
        Ok(())
    }

    fn alg_config(&self, seed: u64) -> AlgConfig {
        AlgConfig {
            epsilon: self.algorithm.epsilon,
            delta: self.algorithm.delta,
            budget: self.algorithm.budget,
            batch_size: self.algorithm.batch_size,
            conf_shape: self.algorithm.conf_shape,
            costs: self.algorithm.costs.clone(),
            seed,
        }
    }
}

/// Per-seed summary as written to `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hv_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminated_by: Option<TerminatedBy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
}

fn stats(values: &[f64]) -> MetricStats {
    let n = values.len() as f64;
    if values.is_empty() {
        return MetricStats {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() >= 2 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricStats { mean, std }
}

/// Aggregate written to `aggregate.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub name: String,
    pub seeds: usize,
    pub failed: usize,
    pub eps_f1: MetricStats,
    pub hv_discrepancy: MetricStats,
    pub samples_used: MetricStats,
}

/// Writes `content` to `path` atomically (temp file + rename).
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_algorithm(
    name: &str,
    problem: &TabularProblem,
    order: &Order,
    cfg: &AlgConfig,
) -> Result<RunResult> {
    match name {
        "naive" => naive_elimination(problem, order, cfg),
        "paveba" => paveba_run(problem, order, cfg),
        "gp_pal" => gp_pal_run(problem, order, cfg),
        "decoupled_paveba" => decoupled_paveba_run(problem, order, cfg),
        other => Err(VecoptError::ConfigInvalid(format!(
            "unknown algorithm name {other:?}"
        ))),
    }
}

struct SeedOutcome {
    summary: SeedSummary,
    rounds_csv: Option<String>,
    wall_ms: f64,
}

fn run_seed(
    config: &ExperimentConfig,
    problem: &TabularProblem,
    order: &Order,
    seed: u64,
) -> SeedOutcome {
    let started = Instant::now();
    let cfg = config.alg_config(seed);
    let outcome = run_algorithm(&config.algorithm.name, problem, order, &cfg).and_then(|run| {
        let f1 = eps_f1(&run.predicted_pareto, problem, order, config.metrics.epsilon)?;
        let disc = hv_discrepancy(
            &run.predicted_pareto,
            problem,
            order,
            &config.metrics.ref_point,
        )?;
        Ok((run, f1, disc))
    });
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((run, f1, disc)) => SeedOutcome {
            summary: SeedSummary {
                seed,
                status: "ok".into(),
                predicted: Some(run.predicted_pareto.clone()),
                eps_f1: Some(f1),
                hv_discrepancy: Some(disc),
                samples_used: Some(run.samples_used),
                terminated_by: Some(run.terminated_by),
                error: None,
            },
            rounds_csv: Some(run.rounds_csv()),
            wall_ms,
        },
        Err(e) => SeedOutcome {
            summary: SeedSummary {
                seed,
                status: "failed".into(),
                predicted: None,
                eps_f1: None,
                hv_discrepancy: None,
                samples_used: None,
                terminated_by: None,
                error: Some(e.to_string()),
            },
            rounds_csv: None,
            wall_ms,
        },
    }
}

/// Runs every seed of the experiment, writing per-seed and aggregate outputs
/// under `<output_dir>/<name>/`. Returns `true` when all seeds succeeded;
/// a failing seed is recorded in its own `summary.json` and does not disturb
/// the others.
pub fn run_experiment(
    config_path: &Path,
    jobs: usize,
    output_dir_override: Option<&Path>,
) -> Result<bool> {
    let config = ExperimentConfig::from_path(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(""));
    let problem = TabularProblem::from_spec_at(&config.problem, base)?;
    let order = Order::new(
        config
            .order
            .build(Some(problem.num_objectives()))
            .map_err(|e| VecoptError::ConfigInvalid(format!("order: {e}")))?,
    );
    if order.dim() != problem.num_objectives() {
        return Err(VecoptError::ConfigInvalid(format!(
            "order dimension {} does not match the problem's {} objectives",
            order.dim(),
            problem.num_objectives()
        )));
    }
    if config.metrics.ref_point.len() != problem.num_objectives() {
        return Err(VecoptError::ConfigInvalid(
            "metrics.ref_point dimension does not match the objectives".into(),
        ));
    }
    let out_root = match (output_dir_override, &config.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(VecoptError::ConfigInvalid(
                "no output_dir in config and no --output-dir given".into(),
            ))
        }
    };
    let exp_dir = out_root.join(&config.name);
    fs::create_dir_all(&exp_dir)?;

    // seeds are share-nothing; dispatch them over a small worker pool
    let seeds = config.trials.seeds.clone();
    let jobs = jobs.max(1).min(seeds.len());
    let results: Vec<Option<SeedOutcome>> = {
        let slots: Mutex<Vec<Option<SeedOutcome>>> =
            Mutex::new((0..seeds.len()).map(|_| None).collect());
        let next: Mutex<usize> = Mutex::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let idx = {
                        let mut guard = next.lock().unwrap();
                        let idx = *guard;
                        if idx >= seeds.len() {
                            break;
                        }
                        *guard += 1;
                        idx
                    };
                    let outcome = run_seed(&config, &problem, &order, seeds[idx]);
                    slots.lock().unwrap()[idx] = Some(outcome);
                });
            }
        });
        slots.into_inner().unwrap()
    };

    let mut f1s = Vec::new();
    let mut discs = Vec::new();
    let mut samples = Vec::new();
    let mut failed = 0usize;
    let mut agg_csv = String::from("seed,eps_f1,hv_discrepancy,samples_used\n");
    for (seed, outcome) in seeds.iter().zip(results.into_iter()) {
        let outcome = outcome.expect("worker filled every slot");
        let seed_dir = exp_dir.join(format!("seed{seed}"));
        fs::create_dir_all(&seed_dir)?;
        if let Some(csv) = &outcome.rounds_csv {
            write_atomic(&seed_dir.join("rounds.csv"), csv)?;
        }
        let summary_json = serde_json::to_string_pretty(&outcome.summary)
            .map_err(|e| VecoptError::ConfigInvalid(e.to_string()))?;
        write_atomic(&seed_dir.join("summary.json"), &summary_json)?;
        write_atomic(
            &seed_dir.join("timing.json"),
            &format!("{{\"wall_ms\": {}}}\n", outcome.wall_ms),
        )?;
        if outcome.summary.status == "ok" {
            let f1 = outcome.summary.eps_f1.unwrap();
            let disc = outcome.summary.hv_discrepancy.unwrap();
            let used = outcome.summary.samples_used.unwrap();
            agg_csv.push_str(&format!("{seed},{f1},{disc},{used}\n"));
            f1s.push(f1);
            discs.push(disc);
            samples.push(used);
        } else {
            failed += 1;
        }
    }

    let aggregate = AggregateSummary {
        name: config.name.clone(),
        seeds: seeds.len(),
        failed,
        eps_f1: stats(&f1s),
        hv_discrepancy: stats(&discs),
        samples_used: stats(&samples),
    };
    write_atomic(&exp_dir.join("aggregate.csv"), &agg_csv)?;
    write_atomic(
        &exp_dir.join("aggregate.json"),
        &serde_json::to_string_pretty(&aggregate)
            .map_err(|e| VecoptError::ConfigInvalid(e.to_string()))?,
    )?;
    Ok(failed == 0)
}

/// Renders an aligned comparison table of aggregate files, one row per file
/// in argument order.
pub fn compare(paths: &[PathBuf]) -> Result<String> {
    if paths.is_empty() {
        return Err(VecoptError::EmptyInput);
    }
    let mut rows = Vec::new();
    for path in paths {
        if !path.exists() {
            return Err(VecoptError::FileNotFound(path.clone()));
        }
        let text = fs::read_to_string(path)?;
        let agg: AggregateSummary = serde_json::from_str(&text)
            .map_err(|_| VecoptError::SchemaMismatch(path.clone()))?;
        rows.push(agg);
    }
    let fmt = |s: &MetricStats| format!("{:.4} ± {:.4}", s.mean, s.std);
    let header = ["experiment", "eps_f1", "hv_discrepancy", "samples_used"];
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                fmt(&r.eps_f1),
                fmt(&r.hv_discrepancy),
                fmt(&r.samples_used),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.len());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let render = |cols: [&str; 4], widths: &[usize; 4]| {
        let mut line = String::new();
        for (i, (c, w)) in cols.iter().zip(widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{c:<w$}"));
        }
        line.trim_end().to_string()
    };
    out.push_str(&render(header, &widths));
    out.push('\n');
    for row in &cells {
        out.push_str(&render(
            [&row[0], &row[1], &row[2], &row[3]].map(|s| s.as_str()),
            &widths,
        ));
        out.push('\n');
    }
    Ok(out)
}

/// Ground-truth Pareto indices for a problem/order pair given as JSON files.
pub fn ground_truth(problem_json: &Path, order_json: &Path) -> Result<Vec<usize>> {
    if !problem_json.exists() {
        return Err(VecoptError::FileNotFound(problem_json.to_path_buf()));
    }
    if !order_json.exists() {
        return Err(VecoptError::FileNotFound(order_json.to_path_buf()));
    }
    let pspec: ProblemSpec = serde_json::from_str(&fs::read_to_string(problem_json)?)
        .map_err(|e| VecoptError::ConfigInvalid(e.to_string()))?;
    let base = problem_json.parent().unwrap_or(Path::new(""));
    let problem = TabularProblem::from_spec_at(&pspec, base)?;
    let cspec: ConeSpec = serde_json::from_str(&fs::read_to_string(order_json)?)
        .map_err(|e| VecoptError::ConfigInvalid(e.to_string()))?;
    let order = Order::new(cspec.build(Some(problem.num_objectives()))?);
    problem.ground_truth_pareto(&order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_json(problem_path: &str, output: &str) -> String {
        format!(
            r#"{{
  "name": "tiny_naive",
  "problem": {{
    "path": "{problem_path}",
    "design_cols": ["x"],
    "objective_cols": ["f1", "f2"],
    "noise_std": 0.0
  }},
  "order": {{"type": "componentwise"}},
  "algorithm": {{"name": "naive", "budget": 6}},
  "metrics": {{"epsilon": 0.0, "ref_point": [-0.5, -0.5]}},
  "trials": {{"seeds": [0, 1]}},
  "output_dir": "{output}"
}}"#
        )
    }

    fn write_tiny(dir: &Path) -> PathBuf {
        let csv = dir.join("tiny.csv");
        fs::write(&csv, "x,f1,f2\n0.0,1.0,2.0\n1.0,2.0,1.0\n2.0,0.0,0.0\n").unwrap();
        csv
    }

    #[test]
    fn naive_experiment_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny(dir.path());
        let out = dir.path().join("out");
        let cfg_path = dir.path().join("exp.json");
        fs::write(
            &cfg_path,
            config_json("tiny.csv", out.to_str().unwrap()),
        )
        .unwrap();
        let all_ok = run_experiment(&cfg_path, 1, None).unwrap();
        assert!(all_ok);
        let agg = fs::read_to_string(out.join("tiny_naive/aggregate.csv")).unwrap();
        let lines: Vec<&str> = agg.lines().collect();
        assert_eq!(lines.len(), 3);
        for line in &lines[1..] {
            let f1: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(f1, 1.0);
        }
        let summary: SeedSummary = serde_json::from_str(
            &fs::read_to_string(out.join("tiny_naive/seed0/summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary.status, "ok");
        assert_eq!(summary.predicted, Some(vec![0, 1]));
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny(dir.path());
        let cfg_path = dir.path().join("exp.json");
        let mut text = config_json("tiny.csv", "out");
        text = text.replace("\"name\": \"tiny_naive\",", "\"name\": \"t\", \"bogus_key\": 1,");
        fs::write(&cfg_path, text).unwrap();
        let err = run_experiment(&cfg_path, 1, None).unwrap_err();
        match err {
            VecoptError::ConfigInvalid(msg) => assert!(msg.contains("bogus_key"), "{msg}"),
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn unknown_algorithm_is_named_in_error() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny(dir.path());
        let cfg_path = dir.path().join("exp.json");
        let text = config_json("tiny.csv", "out").replace("\"naive\"", "\"zigzag\"");
        fs::write(&cfg_path, text).unwrap();
        let err = run_experiment(&cfg_path, 1, None).unwrap_err();
        match err {
            VecoptError::ConfigInvalid(msg) => assert!(msg.contains("zigzag"), "{msg}"),
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny(dir.path());
        let cfg_path = dir.path().join("exp.json");
        let text = config_json("tiny.csv", "out").replace("[0, 1]", "[0, 0]");
        fs::write(&cfg_path, text).unwrap();
        assert!(matches!(
            run_experiment(&cfg_path, 1, None),
            Err(VecoptError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn reruns_are_byte_identical_and_jobs_independent() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny(dir.path());
        let cfg_path = dir.path().join("exp.json");
        fs::write(&cfg_path, config_json("tiny.csv", "unused")).unwrap();
        let out1 = dir.path().join("o1");
        let out2 = dir.path().join("o2");
        run_experiment(&cfg_path, 1, Some(&out1)).unwrap();
        run_experiment(&cfg_path, 2, Some(&out2)).unwrap();
        for seed in [0u64, 1] {
            for file in ["rounds.csv", "summary.json"] {
                let a = fs::read(out1.join(format!("tiny_naive/seed{seed}/{file}"))).unwrap();
                let b = fs::read(out2.join(format!("tiny_naive/seed{seed}/{file}"))).unwrap();
                assert_eq!(a, b, "{file} differs for seed {seed}");
            }
        }
        let a = fs::read(out1.join("tiny_naive/aggregate.csv")).unwrap();
        let b = fs::read(out2.join("tiny_naive/aggregate.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compare_renders_aggregate_rows_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let agg = AggregateSummary {
            name: "exp_a".into(),
            seeds: 2,
            failed: 0,
            eps_f1: MetricStats { mean: 1.0, std: 0.0 },
            hv_discrepancy: MetricStats { mean: 0.0, std: 0.0 },
            samples_used: MetricStats { mean: 6.0, std: 0.0 },
        };
        let pa = dir.path().join("a.json");
        fs::write(&pa, serde_json::to_string(&agg).unwrap()).unwrap();
        let table = compare(&[pa.clone()]).unwrap();
        assert_eq!(table.lines().count(), 2);
        assert!(table.contains("exp_a"));
        assert!(table.contains("1.0000 ± 0.0000"));

        let mut agg_b = agg.clone();
        agg_b.name = "exp_b".into();
        let pb = dir.path().join("b.json");
        fs::write(&pb, serde_json::to_string(&agg_b).unwrap()).unwrap();
        let table = compare(&[pb.clone(), pa.clone()]).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[1].starts_with("exp_b"));
        assert!(lines[2].starts_with("exp_a"));

        let bad = dir.path().join("bad.json");
        fs::write(&bad, "{not json").unwrap();
        assert!(matches!(
            compare(&[bad]),
            Err(VecoptError::SchemaMismatch(_))
        ));
        assert!(matches!(
            compare(&[dir.path().join("missing.json")]),
            Err(VecoptError::FileNotFound(_))
        ));
    }

    #[test]
    fn failing_seed_reports_partial_failure() {
        // epsilon-PAL on a problem without features fails per seed but the
        // harness still writes summaries and aggregates
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("tiny.csv");
        fs::write(&csv, "f1,f2\n1.0,2.0\n2.0,1.0\n").unwrap();
        let cfg_path = dir.path().join("exp.json");
        fs::write(
            &cfg_path,
            r#"{
  "name": "nofeat_gp",
  "problem": {"path": "tiny.csv", "design_cols": [], "objective_cols": ["f1", "f2"]},
  "order": {"type": "componentwise"},
  "algorithm": {"name": "gp_pal", "budget": 10},
  "metrics": {"ref_point": [0.0, 0.0]},
  "trials": {"seeds": [3]},
  "output_dir": "OUT"
}"#
            .replace("OUT", dir.path().join("out").to_str().unwrap()),
        )
        .unwrap();
        let all_ok = run_experiment(&cfg_path, 1, None).unwrap();
        assert!(!all_ok);
        let summary: SeedSummary = serde_json::from_str(
            &fs::read_to_string(dir.path().join("out/nofeat_gp/seed3/summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary.status, "failed");
        assert!(summary.error.unwrap().contains("feature"));
    }
}
