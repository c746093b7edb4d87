//! Executable oracles over recorded runs and synthetic data.
//!
//! Every checker is a pure function of its inputs and returns a
//! [`CheckReport`]. Violations are measured relative to the magnitude of the
//! terms involved: an instance with excess `r` and scale `s` passes when
//! `r ≤ rel·s + abs`, and the reported violation is `r / (s + abs/rel)` so that
//! `passed ⇔ worst_violation ≤ rel`.

mod identities;
mod inequalities;
mod monitors;

use serde::{Deserialize, Serialize};

pub use identities::{
    check_correction_identity, check_lyapunov_identity, check_momentum_identity,
    check_schedule_identity, LyapunovInstance,
};
pub use inequalities::{
    check_anchor_inequalities, check_corrected_velocity, check_energy_monotone,
    check_g_cocoercivity, check_graph_bound, check_graph_inclusion, check_residual_transfer,
    default_rho, graph_bound_constant,
};
pub use monitors::{decay_trend, summability_bounds, summability_monitors, Decade};

use crate::crifba::StepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        rel: 1e-10,
        abs: 1e-12,
    };

    /// Purely relative to `scale`, which the caller makes at least 1.
    pub const fn relative(rel: f64) -> Tolerance {
        Tolerance { rel, abs: 0.0 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub n_checked: usize,
    pub worst_violation: f64,
    /// Iteration (or instance) index of the worst violation.
    pub worst_index: Option<u64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        CheckReport {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            n_checked: 0,
            worst_violation: 0.0,
            worst_index: None,
            tolerance: 0.0,
            passed: false,
            note: Some(reason.into()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.status == CheckStatus::Skipped
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Accumulates the worst normalized violation over instances.
pub(crate) struct Accumulator {
    name: String,
    tol: Tolerance,
    n: usize,
    worst: f64,
    worst_index: Option<u64>,
}

impl Accumulator {
    pub(crate) fn new(name: &str, tol: Tolerance) -> Self {
        Accumulator {
            name: name.to_string(),
            tol,
            n: 0,
            worst: 0.0,
            worst_index: None,
        }
    }

    /// Records one instance with signed excess (positive means violated).
    pub(crate) fn push(&mut self, index: u64, excess: f64, scale: f64) {
        self.n += 1;
        let floor = if self.tol.rel > 0.0 {
            self.tol.abs / self.tol.rel
        } else {
            0.0
        };
        let denom = scale.abs() + floor;
        let v = if excess.is_nan() || scale.is_nan() {
            f64::INFINITY
        } else if excess <= 0.0 {
            0.0
        } else if denom > 0.0 {
            excess / denom
        } else {
            f64::INFINITY
        };
        if v > self.worst || (self.worst_index.is_none() && v > 0.0) {
            self.worst = v;
            self.worst_index = Some(index);
        }
    }

    pub(crate) fn finish(self) -> CheckReport {
        let passed = self.worst <= self.tol.rel;
        CheckReport {
            name: self.name,
            status: if passed {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            },
            n_checked: self.n,
            worst_violation: self.worst,
            worst_index: self.worst_index,
            tolerance: self.tol.rel,
            passed,
            note: None,
        }
    }
}

/// Consecutive records `(n, n+1)`.
pub(crate) fn consecutive(
    history: &[StepRecord],
) -> impl Iterator<Item = (&StepRecord, &StepRecord)> {
    history
        .windows(2)
        .filter(|w| w[1].n == w[0].n + 1)
        .map(|w| (&w[0], &w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_normalizes() {
        let mut acc = Accumulator::new("t", Tolerance::DEFAULT);
        acc.push(0, -5.0, 1.0);
        acc.push(1, 1e-12, 0.0);
        acc.push(2, 5e-11, 1.0);
        let r = acc.finish();
        assert!(r.passed);
        assert_eq!(r.n_checked, 3);
        assert_eq!(r.worst_index, Some(1));

        let mut acc = Accumulator::new("t", Tolerance::DEFAULT);
        acc.push(7, 1e-9, 1.0);
        let r = acc.finish();
        assert!(!r.passed);
        assert_eq!(r.status, CheckStatus::Failed);
        assert_eq!(r.worst_index, Some(7));

        let mut acc = Accumulator::new("t", Tolerance::DEFAULT);
        acc.push(3, f64::NAN, 1.0);
        assert!(!acc.finish().passed);
    }
}
