//! Executing a job and writing its trace, history and summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use rifb_core::baselines::run_baseline;
use rifb_core::checks::CheckReport;
use rifb_core::crifba::{run, CrifbaParams, DiagnosticsRecord, RunOptions, RunStatus, StepRecord};
use rifb_core::cripda::{run_cripda, CripdaOptions, SaddleProblem};
use rifb_core::gcrifba::{run_gcrifba, GcrifbaOptions};
use rifb_core::problems::{certify, Certificate};
use rifb_core::rates::{fit_slope, SlopeFit};
use rifb_core::{trace, Vector};

use crate::config::{
    crifba_params, cripda_params, gcrifba_params, history_path, Job, SolverConfig,
};
use crate::suite;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SlopeEntry {
    Fitted(SlopeFit),
    NoFit { reason: String },
}

impl SlopeEntry {
    pub fn of(points: &[(u64, f64)]) -> SlopeEntry {
        if points.is_empty() {
            return SlopeEntry::NoFit {
                reason: "column is empty".into(),
            };
        }
        match fit_slope(points, None) {
            Ok(fit) => SlopeEntry::Fitted(fit),
            Err(e) => SlopeEntry::NoFit {
                reason: e.to_string(),
            },
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeEntry::Fitted(f) => Some(f.slope),
            SlopeEntry::NoFit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slopes {
    pub vel2: SlopeEntry,
    pub vn2: SlopeEntry,
    pub res2: SlopeEntry,
}

impl Slopes {
    pub fn of(trace: &[DiagnosticsRecord]) -> Slopes {
        let column = |f: &dyn Fn(&DiagnosticsRecord) -> Option<f64>| -> Vec<(u64, f64)> {
            trace
                .iter()
                .filter_map(|r| f(r).map(|v| (r.n, v)))
                .collect()
        };
        Slopes {
            vel2: SlopeEntry::of(&column(&|r| Some(r.vel2))),
            vn2: SlopeEntry::of(&column(&|r| r.vn2)),
            res2: SlopeEntry::of(&column(&|r| Some(r.res2))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub problem: String,
    pub solver: String,
    pub outcome: RunStatus,
    pub iterations: u64,
    pub final_res2: f64,
    /// `null` when the problem has no certificate or the candidate is unusable.
    pub certify: Option<Certificate>,
    pub slopes: Slopes,
    pub checks: Vec<CheckReport>,
    pub trace: PathBuf,
    pub history: Option<PathBuf>,
}

impl Summary {
    /// Finite run, certified when certifiable, every executed check passing.
    pub fn passed(&self) -> bool {
        let finite = matches!(
            self.outcome,
            RunStatus::Converged | RunStatus::MaxIterations
        );
        finite && self.certify.is_none_or(|c| c.passed) && suite::all_passed(&self.checks)
    }
}

/// What a finished run leaves behind, before anything is written.
pub struct Outcome {
    pub status: RunStatus,
    pub iterations: u64,
    pub final_res2: f64,
    pub candidate: Vector,
    pub trace: Vec<DiagnosticsRecord>,
    pub history: Option<Vec<StepRecord>>,
    pub checks: Vec<CheckReport>,
}

/// Resolves the parameters and runs the solver. Infeasible parameters are an
/// error; divergence is reported in the outcome with the partial trace.
pub fn execute(job: &Job) -> anyhow::Result<Outcome> {
    let cfg = &job.config;
    let spec = &job.spec;
    match &cfg.solver {
        SolverConfig::Crifba(c) => {
            let problem = spec.inclusion()?;
            let params = crifba_params(c, problem)?;
            params.validate()?;
            let options = RunOptions {
                stop: cfg.stop,
                stride: cfg.stride,
                reference: spec.solution.clone(),
                record_history: cfg.history,
                ..RunOptions::default()
            };
            let out = run(problem, &params, &spec.start, &options)?;
            let checks = suite::crifba_suite(
                problem,
                &params,
                spec.solution.as_ref(),
                &out.trace,
                out.history.as_deref(),
                cfg.monitors,
            );
            Ok(Outcome {
                status: out.status,
                iterations: out.iterations,
                final_res2: out.final_res2,
                candidate: out.solution,
                trace: out.trace,
                history: out.history,
                checks,
            })
        }
        SolverConfig::Gcrifba(c) => {
            let problem = spec.sum()?;
            let params = gcrifba_params(c, problem);
            let options = GcrifbaOptions {
                stop: cfg.stop,
                stride: cfg.stride,
                ..GcrifbaOptions::default()
            };
            let out = run_gcrifba(problem, &params, &spec.start, &options)?;
            // ζ-velocity, correction and fixed-point residual fill the three columns
            let trace: Vec<DiagnosticsRecord> = out
                .trace
                .iter()
                .map(|r| DiagnosticsRecord {
                    n: r.n,
                    vel2: r.zeta_vel2,
                    vn2: Some(r.corr2),
                    res2: r.fpr2,
                    energy: None,
                    ystar_norm: None,
                })
                .collect();
            Ok(Outcome {
                status: out.status,
                iterations: out.iterations,
                final_res2: out.final_fpr2,
                candidate: out.solution,
                checks: suite::trace_suite(&trace),
                trace,
                history: None,
            })
        }
        SolverConfig::Cripda(c) => {
            let problem = spec.saddle()?;
            let params = cripda_params(c, problem)?;
            let (x0, y0) = problem.split(&spec.start);
            let options = CripdaOptions {
                stop: cfg.stop,
                stride: cfg.stride,
                ..CripdaOptions::default()
            };
            let out = run_cripda(problem, &params, &x0, &y0, &options)?;
            let trace: Vec<DiagnosticsRecord> = out
                .trace
                .iter()
                .map(|r| DiagnosticsRecord {
                    n: r.n,
                    vel2: r.vel2_m,
                    vn2: None,
                    res2: r.fpr2_m,
                    energy: None,
                    ystar_norm: None,
                })
                .collect();
            Ok(Outcome {
                status: out.status,
                iterations: out.iterations,
                final_res2: out.final_fpr2_m,
                candidate: SaddleProblem::stack(&out.x, &out.y),
                checks: suite::trace_suite(&trace),
                trace,
                history: None,
            })
        }
        SolverConfig::Baseline { method } => {
            let problem = spec.inclusion()?;
            let baseline = method.resolve(problem)?;
            let options = RunOptions {
                stop: cfg.stop,
                stride: cfg.stride,
                ..RunOptions::default()
            };
            let out = run_baseline(problem, &baseline, &spec.start, &options)?;
            Ok(Outcome {
                status: out.status,
                iterations: out.iterations,
                final_res2: out.final_res2,
                candidate: out.solution,
                checks: suite::trace_suite(&out.trace),
                trace: out.trace,
                history: None,
            })
        }
    }
}

/// Runs the job and writes `<name>.csv`, `<name>.summary.json` and, when
/// requested, `<name>.history.jsonl`.
pub fn run_job(job: &Job) -> anyhow::Result<Summary> {
    let outcome = execute(job)?;
    let dir = job.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let trace_path = job.trace_path();
    let file =
        File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    trace::write_csv(BufWriter::new(file), &outcome.trace)?;
    let history = match &outcome.history {
        Some(h) => {
            let path = history_path(&trace_path);
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            trace::write_history(BufWriter::new(file), h)?;
            Some(path)
        }
        None => None,
    };
    let summary = Summary {
        config_hash: job.config.hash(),
        problem: job.spec.name.to_string(),
        solver: job.config.solver.name().to_string(),
        outcome: outcome.status,
        iterations: outcome.iterations,
        final_res2: outcome.final_res2,
        certify: certify(&job.spec, &outcome.candidate, job.config.certify_tol).ok(),
        slopes: Slopes::of(&outcome.trace),
        checks: outcome.checks,
        trace: trace_path,
        history,
    };
    let path = job.summary_path();
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summary)?;
    Ok(summary)
}

/// Rebuilds the CRIFBA parameters of a job, for replaying its checks.
pub fn crifba_job_params(job: &Job) -> anyhow::Result<Option<CrifbaParams>> {
    match &job.config.solver {
        SolverConfig::Crifba(c) => Ok(Some(crifba_params(c, job.spec.inclusion()?)?)),
        _ => Ok(None),
    }
}
