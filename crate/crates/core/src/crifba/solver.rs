use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::diagnostics::{energy, graph_sequence, DiagnosticsRecord};
use super::params::CrifbaParams;
use crate::error::{Error, Result};
use crate::metric::{all_finite, check_dim, SpdMap, Vector};
use crate::operators::{generalized_resolvent, CocoerciveOperator, MonotoneOperator};
use crate::trace::serde_vector;

/// `0 ∈ A(x) + B(x)`.
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    pub a: Arc<dyn MonotoneOperator>,
    pub b: Arc<dyn CocoerciveOperator>,
}

impl InclusionProblem {
    pub fn new(a: Arc<dyn MonotoneOperator>, b: Arc<dyn CocoerciveOperator>) -> Self {
        InclusionProblem { a, b }
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `J_{λM⁻¹A}(x − λM⁻¹B(x))`.
    pub fn forward_backward(
        &self,
        metric: &SpdMap,
        lambda: f64,
        x: &Vector,
        bx: &Vector,
    ) -> Result<Vector> {
        let u = x - metric.solve_unchecked(bx) * lambda;
        generalized_resolvent(self.a.as_ref(), metric, lambda, &u)
    }
}

/// `G(x) = (x − J_{λM⁻¹A}(x − λM⁻¹B(x)))/λ`.
pub fn residual_g(
    problem: &InclusionProblem,
    metric: &SpdMap,
    lambda: f64,
    x: &Vector,
) -> Result<Vector> {
    check_dim(problem.dim(), x)?;
    let p = problem.forward_backward(metric, lambda, x, &problem.b.apply(x))?;
    Ok((x - p) / lambda)
}

/// `(x_{n−1}, x_n, z_{n−1})` at counter `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrifbaState {
    pub n: u64,
    pub x_prev: Vector,
    pub x: Vector,
    pub z_prev: Vector,
}

impl CrifbaState {
    /// `x₋₁ = x₀ = z₋₁`.
    pub fn cold_start(x0: &Vector) -> Self {
        CrifbaState {
            n: 0,
            x_prev: x0.clone(),
            x: x0.clone(),
            z_prev: x0.clone(),
        }
    }
}

/// Intermediate quantities of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub n: u64,
    pub theta: f64,
    pub gamma: f64,
    pub v: Vector,
    pub z: Vector,
    /// `B(z_n)`
    pub b_z: Vector,
    /// `G(z_n)`
    pub g_z: Vector,
    /// `J_{λM⁻¹A}(z_n − λM⁻¹B(z_n))`
    pub p: Vector,
    pub x_next: Vector,
}

/// One iteration, returning the next state and the step trace.
pub fn crifba_step(
    problem: &InclusionProblem,
    params: &CrifbaParams,
    state: &CrifbaState,
) -> Result<(CrifbaState, StepTrace)> {
    let c = params.schedule.at(state.n);
    let v = &state.z_prev - &state.x;
    let z = &state.x + (&state.x - &state.x_prev) * c.theta + &v * c.gamma;
    let b_z = problem.b.apply(&z);
    let p = problem.forward_backward(&params.metric, params.lambda, &z, &b_z)?;
    let x_next = &z * (1.0 - params.w) + &p * params.w;
    if !all_finite(&x_next) {
        return Err(Error::NonFinite(format!("x_{} is not finite", state.n + 1)));
    }
    let g_z = (&z - &p) / params.lambda;
    let next = CrifbaState {
        n: state.n + 1,
        x_prev: state.x.clone(),
        x: x_next.clone(),
        z_prev: z.clone(),
    };
    Ok((
        next,
        StepTrace {
            n: state.n,
            theta: c.theta,
            gamma: c.gamma,
            v,
            z,
            b_z,
            g_z,
            p,
            x_next,
        },
    ))
}

/// Stop when `‖G(x_n)‖_M ≤ tol` or after `max_iter` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            tol: 1e-9,
            max_iter: 1_000_000,
        }
    }
}

/// Which iterations are written to the diagnostics trace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stride {
    /// Every iteration below 10⁴, every tenth after.
    #[default]
    Auto,
    Every(u64),
}

impl Stride {
    pub fn records(&self, n: u64) -> bool {
        match *self {
            Stride::Auto => n < 10_000 || n.is_multiple_of(10),
            Stride::Every(k) => k <= 1 || n.is_multiple_of(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub stop: StopRule,
    pub stride: Stride,
    /// A known solution; enables the energy column.
    pub reference: Option<Vector>,
    pub record_history: bool,
    pub divergence_bound: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stop: StopRule::default(),
            stride: Stride::Auto,
            reference: None,
            record_history: false,
            divergence_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Diverged { n: u64 },
    NonFinite { n: u64 },
}

/// Full per-step state, kept when `record_history` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub theta: f64,
    pub gamma: f64,
    #[serde(with = "serde_vector")]
    pub x_prev: Vector,
    #[serde(with = "serde_vector")]
    pub x: Vector,
    #[serde(with = "serde_vector")]
    pub z_prev: Vector,
    #[serde(with = "serde_vector")]
    pub v: Vector,
    #[serde(with = "serde_vector")]
    pub z: Vector,
    /// `G(x_n)`
    #[serde(with = "serde_vector")]
    pub g_x: Vector,
    /// `G(z_n)`
    #[serde(with = "serde_vector")]
    pub g_z: Vector,
    #[serde(with = "serde_vector")]
    pub x_next: Vector,
    #[serde(with = "serde_vector")]
    pub b_z: Vector,
    #[serde(with = "serde_vector")]
    pub b_zprev: Vector,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub solution: Vector,
    pub iterations: u64,
    pub status: RunStatus,
    pub final_res2: f64,
    pub trace: Vec<DiagnosticsRecord>,
    pub history: Option<Vec<StepRecord>>,
}

/// Runs CRIFBA from a cold start at `x0`. Parameters are validated first.
pub fn run(
    problem: &InclusionProblem,
    params: &CrifbaParams,
    x0: &Vector,
    options: &RunOptions,
) -> Result<RunOutput> {
    run_from_state(problem, params, CrifbaState::cold_start(x0), options)
}

/// Runs CRIFBA from an arbitrary `(x_{n−1}, x_n, z_{n−1})`.
pub fn run_from_state(
    problem: &InclusionProblem,
    params: &CrifbaParams,
    start: CrifbaState,
    options: &RunOptions,
) -> Result<RunOutput> {
    if params.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: params.dim(),
        });
    }
    check_dim(problem.dim(), &start.x)?;
    check_dim(problem.dim(), &start.x_prev)?;
    check_dim(problem.dim(), &start.z_prev)?;
    if let Some(q) = &options.reference {
        check_dim(problem.dim(), q)?;
    }
    params.validate()?;

    let m = &params.metric;
    let mut state = start;
    let mut b_zprev = problem.b.apply(&state.z_prev);
    let mut trace = Vec::new();
    let mut history = options.record_history.then(Vec::new);
    let mut final_res2;
    let status = loop {
        let g_x = residual_g(problem, m, params.lambda, &state.x)?;
        let res2 = m.norm2(&g_x);
        final_res2 = res2;
        if !res2.is_finite() {
            break RunStatus::NonFinite { n: state.n };
        }
        if res2.sqrt() <= options.stop.tol {
            break RunStatus::Converged;
        }
        if state.n >= options.stop.max_iter {
            break RunStatus::MaxIterations;
        }
        let (next, step) = match crifba_step(problem, params, &state) {
            Ok(r) => r,
            Err(Error::NonFinite(_)) => break RunStatus::NonFinite { n: state.n + 1 },
            Err(e) => return Err(e),
        };
        if options.stride.records(state.n) {
            let energy = match &options.reference {
                Some(q) => Some(energy(
                    params,
                    &state.x,
                    &state.x_prev,
                    &step.v,
                    state.n,
                    params.schedule.s0,
                    q,
                )?),
                None => None,
            };
            let ystar_norm = if state.n >= 1 {
                let (_, ystar) = graph_sequence(problem, params, &state.z_prev, &step.v, &b_zprev);
                Some(m.norm2(&ystar).sqrt())
            } else {
                None
            };
            trace.push(DiagnosticsRecord {
                n: state.n,
                vel2: m.norm2(&(&step.x_next - &state.x)),
                vn2: Some(m.norm2(&step.v)),
                res2,
                energy,
                ystar_norm,
            });
        }
        let diverged = step.x_next.norm() > options.divergence_bound;
        if let Some(h) = history.as_mut() {
            h.push(StepRecord {
                n: state.n,
                theta: step.theta,
                gamma: step.gamma,
                x_prev: state.x_prev.clone(),
                x: state.x.clone(),
                z_prev: state.z_prev.clone(),
                v: step.v,
                z: step.z,
                g_x,
                g_z: step.g_z,
                x_next: step.x_next,
                b_z: step.b_z.clone(),
                b_zprev: b_zprev.clone(),
            });
        }
        b_zprev = step.b_z;
        state = next;
        if diverged {
            break RunStatus::Diverged { n: state.n };
        }
    };
    Ok(RunOutput {
        solution: state.x,
        iterations: state.n,
        status,
        final_res2,
        trace,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crifba::Schedule;
    use crate::metric::vector;
    use crate::metric::Matrix;
    use crate::operators::{AffineMap, BoxNormalCone};

    fn clamp_problem() -> InclusionProblem {
        let b = AffineMap::new(Matrix::identity(1, 1), vector(&[-1.0])).unwrap();
        InclusionProblem::new(Arc::new(BoxNormalCone::nonnegative()), Arc::new(b))
    }

    fn unit_params() -> CrifbaParams {
        CrifbaParams::new(
            Schedule::default(),
            0.9,
            0.5,
            SpdMap::identity(1),
            SpdMap::identity(1),
            Some(0.225),
        )
        .unwrap()
    }

    #[test]
    fn first_step_by_hand() {
        let problem = clamp_problem();
        let params = unit_params();
        let state = CrifbaState::cold_start(&vector(&[2.0]));
        let (next, step) = crifba_step(&problem, &params, &state).unwrap();
        assert_eq!(step.v[0], 0.0);
        assert_eq!(step.z[0], 2.0);
        // p = max(0, 2 − 0.9·1) = 1.1, x₁ = 0.5·2 + 0.5·1.1
        assert!((step.p[0] - 1.1).abs() < 1e-15);
        assert!((next.x[0] - 1.55).abs() < 1e-15);
        assert_eq!(next.n, 1);
    }

    #[test]
    fn warm_state_step() {
        let problem = clamp_problem();
        let mut params = unit_params();
        params.lambda = 0.5;
        let state = CrifbaState {
            n: 0,
            x_prev: vector(&[1.5]),
            x: vector(&[1.5]),
            z_prev: vector(&[2.0]),
        };
        let (next, step) = crifba_step(&problem, &params, &state).unwrap();
        assert_eq!(step.v[0], 0.5);
        assert!((step.z[0] - 1.6875).abs() < 1e-15);
        assert!((next.x[0] - 1.515625).abs() < 1e-15);
    }

    #[test]
    fn solution_is_a_fixed_point() {
        let q = vector(&[1.0]);
        let (next, step) = crifba_step(
            &clamp_problem(),
            &unit_params(),
            &CrifbaState::cold_start(&q),
        )
        .unwrap();
        assert_eq!(step.v[0], 0.0);
        assert_eq!(step.z, q);
        assert_eq!(next.x, q);
    }

    #[test]
    fn residual_examples() {
        let m = SpdMap::identity(1);
        let g = residual_g(&clamp_problem(), &m, 0.5, &vector(&[1.0])).unwrap();
        assert_eq!(g[0], 0.0);
        let lin = InclusionProblem::new(
            Arc::new(crate::operators::ZeroOperator),
            Arc::new(AffineMap::new(Matrix::identity(1, 1), vector(&[0.0])).unwrap()),
        );
        let g = residual_g(&lin, &m, 1.0, &vector(&[2.0])).unwrap();
        assert_eq!(g[0], 2.0);
    }

    #[test]
    fn zero_iterations_return_start() {
        let opts = RunOptions {
            stop: StopRule {
                tol: 0.0,
                max_iter: 0,
            },
            ..RunOptions::default()
        };
        let out = run(&clamp_problem(), &unit_params(), &vector(&[5.0]), &opts).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution[0], 5.0);
        assert_eq!(out.status, RunStatus::MaxIterations);
    }

    #[test]
    fn run_converges_on_clamp() {
        let out = run(
            &clamp_problem(),
            &unit_params(),
            &vector(&[5.0]),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert!((out.solution[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn run_rejects_infeasible() {
        let mut p = unit_params();
        p.w = 1.0;
        assert!(matches!(
            run(
                &clamp_problem(),
                &p,
                &vector(&[5.0]),
                &RunOptions::default()
            ),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn stride_rules() {
        assert!(Stride::Auto.records(9_999));
        assert!(!Stride::Auto.records(10_001));
        assert!(Stride::Auto.records(10_010));
        assert!(Stride::Every(3).records(9));
        assert!(!Stride::Every(3).records(10));
    }
}
