//! Run configurations: one JSON file per run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rifb_core::baselines::BaselineConfig;
use rifb_core::crifba::InclusionProblem;
use rifb_core::crifba::{CrifbaParams, Schedule, StopRule, Stride, DEFAULT_W};
use rifb_core::cripda::{CripdaParams, SaddleProblem};
use rifb_core::gcrifba::{GcrifbaParams, SumProblem};
use rifb_core::metric::matrix_from_rows;
use rifb_core::problems::{self, ProblemSpec};
use rifb_core::SpdMap;

/// Overrides the output directory of every run.
pub const OUTPUT_DIR_ENV: &str = "RIFB_OUTPUT_DIR";

pub const DEFAULT_CERTIFY_TOL: f64 = 1e-6;

/// Malformed input: unreadable files, bad JSON, unknown catalog names.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrifbaConfig {
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub w: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Metric `M` as row-major nested arrays; identity when absent.
    #[serde(default)]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcrifbaConfig {
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub w: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CripdaConfig {
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub w: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverConfig {
    Crifba(CrifbaConfig),
    Gcrifba(GcrifbaConfig),
    Cripda(CripdaConfig),
    Baseline { method: BaselineConfig },
}

impl SolverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::Crifba(_) => "crifba",
            SolverConfig::Gcrifba(_) => "gcrifba",
            SolverConfig::Cripda(_) => "cripda",
            SolverConfig::Baseline { method } => method.name(),
        }
    }

    /// The problem family this solver runs on.
    fn family(&self) -> &'static str {
        match self {
            SolverConfig::Crifba(_) | SolverConfig::Baseline { .. } => "inclusion",
            SolverConfig::Gcrifba(_) => "sum",
            SolverConfig::Cripda(_) => "saddle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub solver: SolverConfig,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub stride: Stride,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Also write the full step history (CRIFBA only).
    #[serde(default)]
    pub history: bool,
    /// Adds the summability and trend monitors to the check suite. Meant for
    /// fixed-horizon runs.
    #[serde(default)]
    pub monitors: bool,
    #[serde(default = "default_certify_tol")]
    pub certify_tol: f64,
}

fn default_certify_tol() -> f64 {
    DEFAULT_CERTIFY_TOL
}

impl RunConfig {
    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// SHA-256 of the canonical serialization, so formatting does not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

/// A parsed config with its problem resolved against the catalog.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub path: PathBuf,
    pub config: RunConfig,
    pub spec: ProblemSpec,
}

impl Job {
    pub fn load(path: &Path) -> anyhow::Result<Job> {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let config =
            RunConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let spec = problems::by_name(&config.problem)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if spec.kind.solver_family() != config.solver.family() {
            return Err(usage(format!(
                "{}: solver `{}` needs a {} problem, `{}` is a {} problem",
                path.display(),
                config.solver.name(),
                config.solver.family(),
                spec.name,
                spec.kind.solver_family()
            )));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        Ok(Job {
            name,
            path: path.to_path_buf(),
            config,
            spec,
        })
    }

    /// `RIFB_OUTPUT_DIR`, else the config's `output`, else the config's directory.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            return PathBuf::from(dir);
        }
        let base = self.path.parent().unwrap_or(Path::new(".")).to_path_buf();
        match &self.config.output {
            Some(out) if out.is_absolute() => out.clone(),
            Some(out) => base.join(out),
            None => base,
        }
    }

    pub fn trace_path(&self) -> PathBuf {
        self.output_dir().join(format!("{}.csv", self.name))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.output_dir()
            .join(format!("{}.summary.json", self.name))
    }
}

/// The step history kept next to a trace: `run.csv` pairs with `run.history.jsonl`.
pub fn history_path(trace: &Path) -> PathBuf {
    trace.with_extension("history.jsonl")
}

pub fn crifba_params(
    c: &CrifbaConfig,
    problem: &InclusionProblem,
) -> rifb_core::Result<CrifbaParams> {
    let schedule = c.schedule.unwrap_or_default();
    let w = c.w.unwrap_or(DEFAULT_W);
    let metric = match &c.metric {
        Some(rows) => SpdMap::new(matrix_from_rows(rows)?)?,
        None => SpdMap::identity(problem.dim()),
    };
    let certificate = problem.b.certificate().clone();
    match c.lambda {
        Some(lambda) => CrifbaParams::new(schedule, lambda, w, metric, certificate, c.delta),
        None => {
            let mut params = CrifbaParams::with_default_step(schedule, w, metric, certificate)?;
            if c.delta.is_some() {
                params.delta = c.delta;
            }
            Ok(params)
        }
    }
}

pub fn gcrifba_params(c: &GcrifbaConfig, problem: &SumProblem) -> GcrifbaParams {
    let mut params = GcrifbaParams::with_defaults(
        c.schedule.unwrap_or_default(),
        c.w.unwrap_or(DEFAULT_W),
        problem,
    );
    if let Some(lambda) = c.lambda {
        params.lambda = lambda;
    }
    if let Some(weights) = &c.weights {
        params.weights = weights.clone();
    }
    params
}

pub fn cripda_params(c: &CripdaConfig, problem: &SaddleProblem) -> rifb_core::Result<CripdaParams> {
    let schedule = c.schedule.unwrap_or_default();
    let w = c.w.unwrap_or(DEFAULT_W);
    let mut params = match (c.tau, c.sigma) {
        (Some(tau), Some(sigma)) => CripdaParams {
            schedule,
            tau,
            sigma,
            w,
            delta: None,
        },
        _ => CripdaParams::with_default_steps(schedule, w, problem)?,
    };
    params.tau = c.tau.unwrap_or(params.tau);
    params.sigma = c.sigma.unwrap_or(params.sigma);
    params.delta = c.delta;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_formatting() {
        let a = RunConfig::parse(r#"{"problem":"clamp","solver":{"kind":"crifba"}}"#).unwrap();
        let b = RunConfig::parse(
            "{\n  \"solver\": { \"kind\": \"crifba\" },\n  \"problem\": \"clamp\"\n}",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c =
            RunConfig::parse(r#"{"problem":"clamp","solver":{"kind":"crifba","w":0.4}}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn solver_kinds_parse() {
        let c = RunConfig::parse(
            r#"{"problem":"lasso","solver":{"kind":"baseline","method":{"kind":"fba","lambda":0.5}},
                "stop":{"tol":0,"max_iter":10},"stride":{"every":10}}"#,
        )
        .unwrap();
        assert_eq!(c.solver.name(), "fba");
        assert_eq!(c.stride, Stride::Every(10));
        assert_eq!(c.certify_tol, DEFAULT_CERTIFY_TOL);
        assert!(
            RunConfig::parse(r#"{"problem":"clamp","solver":{"kind":"crifba","bogus":1}}"#)
                .is_err()
        );
        assert!(RunConfig::parse(r#"{"problem":"clamp","solver":{"kind":"newton"}}"#).is_err());
    }

    #[test]
    fn history_sits_next_to_trace() {
        assert_eq!(
            history_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.history.jsonl")
        );
    }
}
