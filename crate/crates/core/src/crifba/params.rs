use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{min_eigenvalue, Matrix, SpdMap};

/// The tuple `(e, s₀, s₁, ν₀)` driving the inertial and correction weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub e: f64,
    pub s0: f64,
    pub s1: f64,
    pub nu0: f64,
}

/// Relaxation used when none is given.
pub const DEFAULT_W: f64 = 0.5;

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            e: 3.0,
            s0: 2.5,
            s1: 1.0,
            nu0: 0.0,
        }
    }
}

/// Per-iteration weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub nu: f64,
    pub theta: f64,
    pub gamma: f64,
    /// `e + ν_{n+1}`
    pub tau: f64,
}

impl Schedule {
    pub fn nu(&self, n: u64) -> f64 {
        self.s1 * n as f64 + self.nu0
    }

    pub fn at(&self, n: u64) -> Coefficients {
        let tau = self.e + self.nu(n + 1);
        Coefficients {
            nu: self.nu(n),
            theta: 1.0 - (self.e + self.s1) / tau,
            gamma: 1.0 - self.s0 / tau,
            tau,
        }
    }

    /// Every violated inequality among `0 ≤ s₁`, `0 ≤ ν₀`, `2s₁ < s₀ < e`.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("e", self.e),
            ("s0", self.s0),
            ("s1", self.s1),
            ("nu0", self.nu0),
        ] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite (got {v})"));
            }
        }
        if !(self.s1 >= 0.0) {
            out.push(format!("s1 >= 0 violated (s1 = {})", self.s1));
        }
        if !(self.nu0 >= 0.0) {
            out.push(format!("nu0 >= 0 violated (nu0 = {})", self.nu0));
        }
        if !(2.0 * self.s1 < self.s0) {
            out.push(format!(
                "2*s1 < s0 violated (2*s1 = {}, s0 = {})",
                2.0 * self.s1,
                self.s0
            ));
        }
        if !(self.s0 < self.e) {
            out.push(format!(
                "s0 < e violated (s0 = {}, e = {})",
                self.s0, self.e
            ));
        }
        out
    }
}

pub(crate) fn relaxation_violation(w: f64) -> Option<String> {
    if w > 0.0 && w < 1.0 {
        None
    } else {
        Some(format!("w in (0,1) violated (w = {w})"))
    }
}

/// Result of [`CrifbaParams::validate_core`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreValidation {
    pub violations: Vec<String>,
}

impl CoreValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Condition 1 data: `λ‖L‖ ≤ 4δ` and `M − δ/(w(1−w))·I` positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition1 {
    pub delta: f64,
    pub step_ok: bool,
    /// Smallest eigenvalue of `M − δ/(w(1−w))·I`.
    pub margin: f64,
}

/// Both metric conditions, evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub condition1: Option<Condition1>,
    /// Smallest eigenvalue of `M − λ/(w(1−w))·L`.
    pub margin2: f64,
    pub selector: Option<u8>,
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.condition1 {
            Some(c) => write!(
                f,
                "condition 1: delta = {}, lambda*|L| <= 4*delta: {}, min eig(M - delta/(w(1-w)) I) = {:.6e}; ",
                c.delta, c.step_ok, c.margin
            )?,
            None => write!(f, "condition 1: no delta supplied; ")?,
        }
        write!(
            f,
            "condition 2: min eig(M - lambda/(w(1-w)) L) = {:.6e}",
            self.margin2
        )
    }
}

/// The condition that certified the metric, with the matching constant `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSelector {
    pub index: u8,
    pub alpha: f64,
    pub margin: f64,
}

/// Parameters `(e, s₀, s₁, ν₀, λ, w, M, L, δ)`.
#[derive(Debug, Clone)]
pub struct CrifbaParams {
    pub schedule: Schedule,
    pub lambda: f64,
    pub w: f64,
    pub metric: SpdMap,
    /// Co-coercivity certificate `L` of `B`.
    pub certificate: SpdMap,
    pub delta: Option<f64>,
}

impl CrifbaParams {
    pub fn new(
        schedule: Schedule,
        lambda: f64,
        w: f64,
        metric: SpdMap,
        certificate: SpdMap,
        delta: Option<f64>,
    ) -> Result<Self> {
        if metric.dim() != certificate.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                found: certificate.dim(),
            });
        }
        Ok(CrifbaParams {
            schedule,
            lambda,
            w,
            metric,
            certificate,
            delta,
        })
    }

    /// Largest admissible step under each metric condition, for the given
    /// relaxation `w`: `(4w(1−w)·λ_min(M)/‖L‖, w(1−w)/λ_max(M⁻¹L))`.
    pub fn step_bounds(w: f64, metric: &SpdMap, certificate: &SpdMap) -> Result<(f64, f64)> {
        let ww = w * (1.0 - w);
        let bound1 = 4.0 * ww * metric.min_eigenvalue() / certificate.norm();
        let bound2 = ww / metric.max_generalized_eigenvalue(certificate.matrix())?;
        Ok((bound1, bound2))
    }

    /// Parameters with `λ = 0.9 ×` the larger feasibility bound. When the
    /// first condition gives the larger bound, `δ = λ‖L‖/4` is set as well.
    pub fn with_default_step(
        schedule: Schedule,
        w: f64,
        metric: SpdMap,
        certificate: SpdMap,
    ) -> Result<Self> {
        if let Some(v) = relaxation_violation(w) {
            return Err(Error::Infeasible(v));
        }
        let (bound1, bound2) = Self::step_bounds(w, &metric, &certificate)?;
        let (lambda, delta) = if bound1 >= bound2 {
            let lambda = 0.9 * bound1;
            (lambda, Some(lambda * certificate.norm() / 4.0))
        } else {
            (0.9 * bound2, None)
        };
        Self::new(schedule, lambda, w, metric, certificate, delta)
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// `2s₁ < s₀ < e`, `0 < w < 1` and `λ > 0`.
    pub fn validate_core(&self) -> CoreValidation {
        let mut violations = self.schedule.violations();
        if let Some(v) = relaxation_violation(self.w) {
            violations.push(v);
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            violations.push(format!("lambda > 0 violated (lambda = {})", self.lambda));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                violations.push(format!("delta > 0 violated (delta = {d})"));
            }
        }
        CoreValidation { violations }
    }

    /// Evaluates both metric conditions without deciding.
    pub fn metric_report(&self) -> Result<MetricReport> {
        let d = self.dim();
        let ww = self.w * (1.0 - self.w);
        let condition1 = match self.delta {
            Some(delta) => {
                let step_ok = self.lambda * self.certificate.norm() <= 4.0 * delta;
                let shifted = self.metric.matrix() - Matrix::identity(d, d) * (delta / ww);
                Some(Condition1 {
                    delta,
                    step_ok,
                    margin: min_eigenvalue(&shifted)?,
                })
            }
            None => None,
        };
        let shifted2 = self.metric.matrix() - self.certificate.matrix() * (self.lambda / ww);
        let margin2 = min_eigenvalue(&shifted2)?;
        let selector = match condition1 {
            Some(c) if c.step_ok && c.margin > 0.0 => Some(1),
            _ if margin2 > 0.0 => Some(2),
            _ => None,
        };
        Ok(MetricReport {
            condition1,
            margin2,
            selector,
        })
    }

    /// Returns the first metric condition that holds, or an infeasibility
    /// error reporting both margins.
    pub fn validate_metric(&self) -> Result<MetricSelector> {
        let report = self.metric_report()?;
        match report.selector {
            Some(1) => {
                let c = report
                    .condition1
                    .expect("selector 1 implies condition data");
                Ok(MetricSelector {
                    index: 1,
                    alpha: self.alpha(1)?,
                    margin: c.margin,
                })
            }
            Some(_) => Ok(MetricSelector {
                index: 2,
                alpha: 0.75,
                margin: report.margin2,
            }),
            None => Err(Error::Infeasible(format!(
                "neither metric condition holds: {report}"
            ))),
        }
    }

    /// `α₁ = 1 − λ‖L‖/(4δ)` or `α₂ = 3/4`.
    pub fn alpha(&self, selector: u8) -> Result<f64> {
        match selector {
            1 => {
                let delta = self
                    .delta
                    .ok_or_else(|| Error::InvalidParameter("alpha_1 needs delta".into()))?;
                Ok(1.0 - self.lambda * self.certificate.norm() / (4.0 * delta))
            }
            2 => Ok(0.75),
            other => Err(Error::InvalidParameter(format!("selector {other}"))),
        }
    }

    /// Core and metric validation together.
    pub fn validate(&self) -> Result<MetricSelector> {
        let core = self.validate_core();
        if !core.is_valid() {
            return Err(Error::Infeasible(core.violations.join("; ")));
        }
        self.validate_metric()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(lambda: f64, w: f64, delta: Option<f64>) -> CrifbaParams {
        CrifbaParams::new(
            Schedule::default(),
            lambda,
            w,
            SpdMap::identity(2),
            SpdMap::identity(2),
            delta,
        )
        .unwrap()
    }

    #[test]
    fn schedule_values() {
        let s = Schedule::default();
        let c0 = s.at(0);
        assert_eq!(c0.nu, 0.0);
        assert_eq!(c0.theta, 0.0);
        assert_eq!(c0.gamma, 0.375);
        assert_eq!(c0.tau, 4.0);
        let c6 = s.at(6);
        assert_relative_eq!(c6.theta, 0.6, epsilon = 1e-15);
        assert_relative_eq!(c6.gamma, 0.75, epsilon = 1e-15);
        assert_eq!(c6.tau, 10.0);

        let flat = Schedule {
            e: 3.0,
            s0: 2.0,
            s1: 0.0,
            nu0: 1.5,
        };
        for n in [0, 1, 17, 10_000] {
            assert_relative_eq!(flat.at(n).theta, 1.0 - 3.0 / 4.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn core_validation() {
        assert!(params(0.1, 0.5, None).validate_core().is_valid());
        let mut p = params(0.1, 0.5, None);
        p.schedule.s0 = 2.0;
        let v = p.validate_core();
        assert_eq!(v.violations.len(), 1);
        assert!(v.violations[0].contains("2*s1 < s0"));
        let v = params(0.1, 1.0, None).validate_core();
        assert!(v.violations.iter().any(|m| m.contains("w in (0,1)")));
        assert!(!params(0.1, 0.0, None).validate_core().is_valid());
    }

    #[test]
    fn metric_selector_cases() {
        let sel = params(0.1, 0.5, Some(0.1)).validate_metric().unwrap();
        assert_eq!(sel.index, 1);
        assert_relative_eq!(sel.margin, 0.6, epsilon = 1e-12);
        assert_relative_eq!(sel.alpha, 0.75, epsilon = 1e-12);

        let err = params(0.3, 0.5, None).validate_metric().unwrap_err();
        match err {
            Error::Infeasible(msg) => assert!(msg.contains("-2.0")),
            other => panic!("unexpected {other:?}"),
        }
        let report = params(0.3, 0.5, None).metric_report().unwrap();
        assert_relative_eq!(report.margin2, -0.2, epsilon = 1e-12);

        // condition 2 alone
        let sel = params(0.2, 0.5, None).validate_metric().unwrap();
        assert_eq!(sel.index, 2);
        assert_eq!(sel.alpha, 0.75);
    }

    #[test]
    fn default_step_is_feasible() {
        let m = SpdMap::diagonal(&[2.0, 0.5, 1.0]).unwrap();
        let l = SpdMap::diagonal(&[3.0, 1.0, 0.2]).unwrap();
        let p = CrifbaParams::with_default_step(Schedule::default(), 0.5, m, l).unwrap();
        assert!(p.validate().is_ok());
        let p = CrifbaParams::with_default_step(
            Schedule::default(),
            0.5,
            SpdMap::identity(1),
            SpdMap::scaled_identity(1, 1.0).unwrap(),
        )
        .unwrap();
        // L = I, M = I: λ = 0.9·4·0.25 = 0.9
        assert_relative_eq!(p.lambda, 0.9, epsilon = 1e-12);
        assert_eq!(p.validate().unwrap().index, 1);
    }
}
