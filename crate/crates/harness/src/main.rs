//! `rifb`: validate, run, check and compare splitting-solver configurations.
//!
//! Exit codes: 0 when everything passes, 1 on a violation (infeasible
//! parameters, failed certificate or check, divergence), 2 on usage or parse
//! errors.

// negated comparisons are how NaN values get flagged
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod runner;
mod suite;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use rifb_core::checks::CheckReport;
use rifb_core::cripda::validate_cripda;
use rifb_core::trace;

use config::{
    crifba_params, cripda_params, gcrifba_params, history_path, usage, Job, SolverConfig, Usage,
};
use runner::{crifba_job_params, run_job, Summary};

#[derive(Parser)]
#[command(name = "rifb", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every parameter constraint of a config and print its margins
    Validate { config: PathBuf },
    /// Run a config, writing the CSV trace and the JSON summary
    Run { config: PathBuf },
    /// Replay the check suite over a recorded trace
    Check { trace: PathBuf, config: PathBuf },
    /// Run several configs (files or directories of `.json` files) and tabulate them
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { config } => run(&config),
        Command::Check { trace, config } => check(&trace, &config),
        Command::Compare { configs } => compare(&configs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn print_violations(violations: &[String]) {
    for v in violations {
        println!("violation: {v}");
    }
}

fn validate(path: &Path) -> anyhow::Result<bool> {
    let job = Job::load(path)?;
    let spec = &job.spec;
    println!(
        "problem: {} ({}, dim {})",
        spec.name,
        spec.kind.solver_family(),
        spec.dim()
    );
    println!("solver: {}", job.config.solver.name());
    let ok = match &job.config.solver {
        SolverConfig::Crifba(c) => {
            let problem = spec.inclusion()?;
            match crifba_params(c, problem) {
                Err(e) => {
                    print_violations(&c.schedule.unwrap_or_default().violations());
                    println!("violation: {e}");
                    false
                }
                Ok(params) => {
                    let s = params.schedule;
                    println!(
                        "schedule: e = {}, s0 = {}, s1 = {}, nu0 = {}",
                        s.e, s.s0, s.s1, s.nu0
                    );
                    println!(
                        "w = {}, lambda = {}, delta = {:?}",
                        params.w, params.lambda, params.delta
                    );
                    let (b1, b2) = rifb_core::crifba::CrifbaParams::step_bounds(
                        params.w,
                        &params.metric,
                        &params.certificate,
                    )?;
                    println!("step bounds: condition 1 {b1:.6e}, condition 2 {b2:.6e}");
                    let core = params.validate_core();
                    print_violations(&core.violations);
                    println!("{}", params.metric_report()?);
                    match params.validate() {
                        Ok(sel) => {
                            println!(
                                "selector: {} (alpha = {}, margin = {:.6e})",
                                sel.index, sel.alpha, sel.margin
                            );
                            true
                        }
                        Err(e) => {
                            if core.is_valid() {
                                println!("violation: {e}");
                            }
                            false
                        }
                    }
                }
            }
        }
        SolverConfig::Gcrifba(c) => {
            let params = gcrifba_params(c, spec.sum()?);
            let bound = 4.0 * params.w * (1.0 - params.w) * params.beta;
            println!(
                "w = {}, lambda = {}, beta = {}, weights = {:?}",
                params.w, params.lambda, params.beta, params.weights
            );
            println!(
                "margin: 4w(1-w)beta - lambda = {:.6e}",
                bound - params.lambda
            );
            println!(
                "margin: sum of weights - 1 = {:.6e}",
                params.weights.iter().sum::<f64>() - 1.0
            );
            let v = params.violations();
            print_violations(&v);
            v.is_empty()
        }
        SolverConfig::Cripda(c) => {
            let problem = spec.saddle()?;
            match cripda_params(c, problem) {
                Err(e) => {
                    print_violations(&c.schedule.unwrap_or_default().violations());
                    println!("violation: {e}");
                    false
                }
                Ok(params) => {
                    println!(
                        "w = {}, tau = {}, sigma = {}, delta = {:?}",
                        params.w, params.tau, params.sigma, params.delta
                    );
                    print_violations(&params.violations());
                    println!("{}", params.margins(problem)?);
                    match validate_cripda(&params, problem) {
                        Ok(sel) => {
                            println!("selector: {sel}");
                            true
                        }
                        Err(e) => {
                            println!("violation: {e}");
                            false
                        }
                    }
                }
            }
        }
        SolverConfig::Baseline { method } => match method.resolve(spec.inclusion()?) {
            Ok(b) => {
                println!("resolved: {}", serde_json::to_string(&b)?);
                true
            }
            Err(e) => {
                println!("violation: {e}");
                false
            }
        },
    };
    println!("{}", if ok { "valid" } else { "invalid" });
    Ok(ok)
}

fn run(path: &Path) -> anyhow::Result<bool> {
    let job = Job::load(path)?;
    let summary = run_job(&job)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(summary.passed())
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    config_hash: String,
    trace: &'a Path,
    history: Option<PathBuf>,
    passed: bool,
    checks: Vec<CheckReport>,
}

fn check(trace_path: &Path, config: &Path) -> anyhow::Result<bool> {
    let job = Job::load(config)?;
    let file =
        File::open(trace_path).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    let rows =
        trace::read_csv(file).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    let hpath = history_path(trace_path);
    let history = if hpath.exists() {
        let file = File::open(&hpath).map_err(|e| usage(format!("{}: {e}", hpath.display())))?;
        Some(
            trace::read_history(BufReader::new(file))
                .map_err(|e| usage(format!("{}: {e}", hpath.display())))?,
        )
    } else {
        None
    };
    let checks = match crifba_job_params(&job)? {
        Some(params) => suite::crifba_suite(
            job.spec.inclusion()?,
            &params,
            job.spec.solution.as_ref(),
            &rows,
            history.as_deref(),
            job.config.monitors,
        ),
        None => suite::trace_suite(&rows),
    };
    let passed = suite::all_passed(&checks);
    let out = CheckOutput {
        config_hash: job.config.hash(),
        trace: trace_path,
        history: history.is_some().then_some(hpath),
        passed,
        checks,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(passed)
}

fn config_files(args: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for arg in args {
        if arg.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(arg)
                .map_err(|e| usage(format!("{}: {e}", arg.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json") && !is_summary(p))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(arg.clone());
        }
    }
    if out.is_empty() {
        return Err(usage("no config files found"));
    }
    Ok(out)
}

/// Summaries written into a config directory are not configs.
fn is_summary(p: &Path) -> bool {
    p.to_string_lossy().ends_with(".summary.json")
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn compare(args: &[PathBuf]) -> anyhow::Result<bool> {
    let jobs = config_files(args)?
        .iter()
        .map(|p| Job::load(p))
        .collect::<anyhow::Result<Vec<Job>>>()?;
    // independent runs in parallel; each run is single-threaded
    let results: Vec<anyhow::Result<Summary>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| s.spawn(move || run_job(job)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(anyhow::anyhow!("run panicked")))
            })
            .collect()
    });
    println!(
        "{:<24} {:<18} {:<16} {:<16} {:>10} {:>12} {:>8} {:>10} {:>10} {:>10}",
        "config",
        "solver",
        "problem",
        "status",
        "iterations",
        "final_res2",
        "certify",
        "res2",
        "vel2",
        "vn2"
    );
    let mut all = true;
    for (job, result) in jobs.iter().zip(&results) {
        match result {
            Ok(s) => {
                all &= s.passed();
                let status = serde_json::to_value(s.outcome)?["status"]
                    .as_str()
                    .unwrap_or("?")
                    .to_string();
                let certify = s
                    .certify
                    .map_or("-", |c| if c.passed { "pass" } else { "fail" });
                println!(
                    "{:<24} {:<18} {:<16} {:<16} {:>10} {:>12.4e} {:>8} {:>10} {:>10} {:>10}",
                    job.name,
                    s.solver,
                    s.problem,
                    status,
                    s.iterations,
                    s.final_res2,
                    certify,
                    fmt_slope(s.slopes.res2.slope()),
                    fmt_slope(s.slopes.vel2.slope()),
                    fmt_slope(s.slopes.vn2.slope()),
                );
            }
            Err(e) => {
                all = false;
                println!("{:<24} error: {e:#}", job.name);
            }
        }
    }
    Ok(all)
}
