//! The check suite replayed over a recorded run.

use rifb_core::checks::{
    check_anchor_inequalities, check_corrected_velocity, check_correction_identity,
    check_energy_monotone, check_graph_bound, check_graph_inclusion, check_momentum_identity,
    check_residual_transfer, decay_trend, default_rho, summability_monitors, CheckReport,
    CheckStatus,
};
use rifb_core::crifba::{CrifbaParams, DiagnosticsRecord, InclusionProblem, StepRecord};
use rifb_core::Vector;

/// Relative tolerance of the per-iteration identities.
pub const IDENTITY_TOL: f64 = 1e-10;

const HISTORY_CHECKS: [&str; 9] = [
    "correction_identity",
    "momentum_identity",
    "corrected_velocity",
    "residual_transfer",
    "energy_monotone",
    "anchor_inequality",
    "increment_inequality",
    "graph_inclusion",
    "graph_bound",
];

/// The energy column of a trace never increases, up to rounding.
pub fn energy_column(trace: &[DiagnosticsRecord]) -> CheckReport {
    const NAME: &str = "energy_column_monotone";
    let energies: Vec<(u64, f64)> = trace
        .iter()
        .filter_map(|r| r.energy.map(|e| (r.n, e)))
        .collect();
    if energies.len() < 2 {
        return CheckReport::skipped(NAME, "trace has no energy column");
    }
    let (mut worst, mut worst_index) = (0.0f64, None);
    for pair in energies.windows(2) {
        let (prev, next) = (pair[0].1, pair[1].1);
        let v = (next - prev) / (1.0 + prev.abs());
        if !(v <= worst) {
            worst = if v.is_nan() { f64::INFINITY } else { v };
            worst_index = Some(pair[1].0);
        }
    }
    let passed = worst <= IDENTITY_TOL;
    CheckReport {
        name: NAME.into(),
        status: if passed {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        },
        n_checked: energies.len() - 1,
        worst_violation: worst,
        worst_index,
        tolerance: IDENTITY_TOL,
        passed,
        note: Some("increase between consecutive recorded rows, relative to 1 + |E|".into()),
    }
}

fn no_history(reason: &str) -> Vec<CheckReport> {
    HISTORY_CHECKS
        .iter()
        .map(|n| CheckReport::skipped(n, reason))
        .collect()
}

/// Every check for a CRIFBA run. Checks that need the step history, or a
/// reference solution, are reported as skipped when it is missing.
pub fn crifba_suite(
    problem: &InclusionProblem,
    params: &CrifbaParams,
    reference: Option<&Vector>,
    trace: &[DiagnosticsRecord],
    history: Option<&[StepRecord]>,
    monitors: bool,
) -> Vec<CheckReport> {
    let mut out = vec![energy_column(trace)];
    let Some(h) = history else {
        out.extend(no_history("no step history recorded"));
        return out;
    };
    out.push(check_correction_identity(h, params, IDENTITY_TOL));
    out.push(check_momentum_identity(h, params, IDENTITY_TOL));
    out.push(check_corrected_velocity(h, params));
    out.push(check_residual_transfer(h, params));
    let no_reference = "the problem has no unique reference solution";
    match reference {
        Some(q) => {
            out.push(match check_energy_monotone(h, params, q) {
                Ok(r) => r,
                Err(e) => CheckReport::skipped("energy_monotone", e.to_string()),
            });
            match params.validate().and_then(|sel| params.alpha(sel.index)) {
                Ok(alpha) => out.extend(check_anchor_inequalities(h, params, problem, alpha, q)),
                Err(e) => {
                    for name in ["anchor_inequality", "increment_inequality"] {
                        out.push(CheckReport::skipped(name, e.to_string()));
                    }
                }
            }
        }
        None => {
            for name in [
                "energy_monotone",
                "anchor_inequality",
                "increment_inequality",
            ] {
                out.push(CheckReport::skipped(name, no_reference));
            }
        }
    }
    out.push(check_graph_inclusion(h, params, problem));
    out.push(match default_rho(params) {
        Some(rho) => check_graph_bound(h, params, problem, rho),
        None => CheckReport::skipped("graph_bound", "no admissible rho for this metric"),
    });
    if monitors {
        match reference {
            Some(q) => out.extend(summability_monitors(h, params, q)),
            None => out.push(CheckReport::skipped("summability_monitors", no_reference)),
        }
        let points: Vec<(u64, f64)> = trace
            .iter()
            .filter_map(|r| r.ystar_norm.map(|y| (r.n, y)))
            .collect();
        out.push(decay_trend("graph_trend", &points, 2));
    }
    out
}

/// Checks available for solvers other than CRIFBA: those that read the trace.
pub fn trace_suite(trace: &[DiagnosticsRecord]) -> Vec<CheckReport> {
    vec![energy_column(trace)]
}

/// Passes when every executed check passes; skipped checks do not count.
pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().filter(|r| !r.is_skipped()).all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64, energy: Option<f64>) -> DiagnosticsRecord {
        DiagnosticsRecord {
            n,
            vel2: 1.0,
            vn2: None,
            res2: 1.0,
            energy,
            ystar_norm: None,
        }
    }

    #[test]
    fn energy_column_flags_the_first_increase() {
        let good: Vec<_> = (0..5).map(|n| row(n, Some(10.0 - n as f64))).collect();
        assert!(energy_column(&good).passed);
        let mut bad = good.clone();
        bad[3].energy = Some(9.5);
        let r = energy_column(&bad);
        assert!(!r.passed);
        assert_eq!(r.worst_index, Some(3));
        let none: Vec<_> = (0..5).map(|n| row(n, None)).collect();
        let r = energy_column(&none);
        assert!(r.is_skipped());
        assert!(all_passed(&[r]));
    }
}
