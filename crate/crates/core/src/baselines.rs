//! Classical splitting methods for comparison. They share the diagnostics
//! schema of CRIFBA, with the correction, energy and graph columns left empty.
//!
//! | kind               | update                                                          |
//! |--------------------|-----------------------------------------------------------------|
//! | `ppa`              | `x⁺ = J_{λC}(x)` for the single nonzero operator `C`            |
//! | `fba`              | `x⁺ = J_{λA}(x − λB(x))`                                        |
//! | `fbf`              | `y = J_{λA}(x − λB(x))`, `x⁺ = y − λ(B(y) − B(x))`              |
//! | `dr`               | `x⁺ = J_{λA}(2J_{λB}(x) − x) + x − J_{λB}(x)`                   |
//! | `moudafi_oliny`    | `z = x + αẋ`, `x⁺ = J_{λA}(z − λB(x))`                          |
//! | `lorenz_pock`      | `z = x + αẋ`, `x⁺ = J_{λA}(z − λB(z))`                          |
//! | `attouch_cabot`    | `z = x + (1 − α/n)ẋ`, `x⁺ = (1 − w_n)z + w_nJ_{λA}(z − λB(z))`  |
//! | `chambolle_dossal` | `z = x + ((n−1)/(n+α−1))ẋ`, `x⁺ = J_{λA}(z − λB(z))`            |
//!
//! with `w_n = 1 − ρ/n²` for `attouch_cabot`.

use serde::{Deserialize, Serialize};

use crate::crifba::{residual_g, DiagnosticsRecord, InclusionProblem, RunOptions, RunStatus};
use crate::error::{Error, Result};
use crate::metric::{all_finite, check_dim, SpdMap, Vector};

/// User-facing configuration; unset fields take the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineConfig {
    Ppa {
        #[serde(default)]
        lambda: Option<f64>,
    },
    Fba {
        #[serde(default)]
        lambda: Option<f64>,
    },
    Fbf {
        #[serde(default)]
        lambda: Option<f64>,
    },
    Dr {
        #[serde(default)]
        lambda: Option<f64>,
    },
    MoudafiOliny {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    LorenzPock {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    AttouchCabot {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        rho: Option<f64>,
    },
    ChambolleDossal {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
}

/// Constant inertia used by the two fixed-momentum schemes.
pub const DEFAULT_MOMENTUM: f64 = 0.25;
pub const DEFAULT_AC_ALPHA: f64 = 3.0;
pub const DEFAULT_CD_ALPHA: f64 = 4.0;

/// A configuration with every parameter resolved and checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Ppa { lambda: f64 },
    Fba { lambda: f64 },
    Fbf { lambda: f64 },
    Dr { lambda: f64 },
    MoudafiOliny { lambda: f64, alpha: f64 },
    LorenzPock { lambda: f64, alpha: f64 },
    AttouchCabot { lambda: f64, alpha: f64, rho: f64 },
    ChambolleDossal { lambda: f64, alpha: f64 },
}

fn check_step(lambda: f64, upper: Option<f64>, what: &str) -> Result<f64> {
    let ok = lambda > 0.0 && lambda.is_finite() && upper.is_none_or(|u| lambda < u);
    if ok {
        Ok(lambda)
    } else {
        Err(Error::Infeasible(match upper {
            Some(u) => format!("{what}: lambda must lie in (0, {u}), got {lambda}"),
            None => format!("{what}: lambda must be positive, got {lambda}"),
        }))
    }
}

impl BaselineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineConfig::Ppa { .. } => "ppa",
            BaselineConfig::Fba { .. } => "fba",
            BaselineConfig::Fbf { .. } => "fbf",
            BaselineConfig::Dr { .. } => "dr",
            BaselineConfig::MoudafiOliny { .. } => "moudafi_oliny",
            BaselineConfig::LorenzPock { .. } => "lorenz_pock",
            BaselineConfig::AttouchCabot { .. } => "attouch_cabot",
            BaselineConfig::ChambolleDossal { .. } => "chambolle_dossal",
        }
    }

    /// Fills defaults (`0.9 ×` the step bound, unit step when unbounded) and
    /// checks feasibility against `β = 1/‖L‖`.
    pub fn resolve(&self, problem: &InclusionProblem) -> Result<Baseline> {
        let lip = problem.b.lipschitz();
        let beta = 1.0 / lip;
        let name = self.name();
        let step = |given: Option<f64>, bound: Option<f64>| -> Result<f64> {
            let lambda = given.unwrap_or_else(|| bound.map_or(1.0, |b| 0.9 * b));
            check_step(lambda, bound, name)
        };
        Ok(match *self {
            BaselineConfig::Ppa { lambda } => {
                ppa_operator(problem)?;
                Baseline::Ppa {
                    lambda: step(lambda, None)?,
                }
            }
            BaselineConfig::Fba { lambda } => Baseline::Fba {
                lambda: step(lambda, Some(2.0 * beta))?,
            },
            BaselineConfig::Fbf { lambda } => Baseline::Fbf {
                lambda: step(lambda, Some(1.0 / lip))?,
            },
            BaselineConfig::Dr { lambda } => {
                let lambda = step(lambda, None)?;
                if problem
                    .b
                    .resolvent(lambda, &Vector::zeros(problem.dim()))
                    .is_none()
                {
                    return Err(Error::Unsupported(format!(
                        "dr needs a resolvent of `{}`",
                        problem.b.label()
                    )));
                }
                Baseline::Dr { lambda }
            }
            BaselineConfig::MoudafiOliny { lambda, alpha }
            | BaselineConfig::LorenzPock { lambda, alpha } => {
                let alpha = alpha.unwrap_or(DEFAULT_MOMENTUM);
                if !(0.0..0.5).contains(&alpha) {
                    return Err(Error::Infeasible(format!(
                        "{name}: alpha must lie in [0, 1/2), got {alpha}"
                    )));
                }
                // the inertial term eats into the forward-backward step range
                let lambda = step(lambda, Some(2.0 * beta * (1.0 - 2.0 * alpha)))?;
                if matches!(self, BaselineConfig::MoudafiOliny { .. }) {
                    Baseline::MoudafiOliny { lambda, alpha }
                } else {
                    Baseline::LorenzPock { lambda, alpha }
                }
            }
            BaselineConfig::AttouchCabot { lambda, alpha, rho } => {
                // with α_n, w_n → 1 the scheme is unstable on a linear B once
                // λ‖L‖ > 4/3, so the default stays at β
                let lambda = check_step(lambda.unwrap_or(beta), Some(2.0 * beta), name)?;
                let alpha = alpha.unwrap_or(DEFAULT_AC_ALPHA);
                if !(alpha > 2.0) {
                    return Err(Error::Infeasible(format!(
                        "{name}: alpha > 2 required, got {alpha}"
                    )));
                }
                let rho_bound = alpha * (alpha - 2.0) * (1.0 - lambda / (4.0 * beta));
                let rho = rho.unwrap_or(0.9 * rho_bound);
                if !(rho > 0.0 && rho < rho_bound) {
                    return Err(Error::Infeasible(format!(
                        "{name}: rho must lie in (0, {rho_bound}), got {rho}"
                    )));
                }
                let n0 = attouch_cabot_start(alpha) as f64;
                if !(rho < n0 * n0) {
                    return Err(Error::Infeasible(format!(
                        "{name}: relaxation 1 - rho/n^2 is not positive at n = {n0}"
                    )));
                }
                Baseline::AttouchCabot { lambda, alpha, rho }
            }
            BaselineConfig::ChambolleDossal { lambda, alpha } => {
                let lambda = step(lambda, Some(1.0 / lip))?;
                let alpha = alpha.unwrap_or(DEFAULT_CD_ALPHA);
                if !(alpha > 3.0) {
                    return Err(Error::Infeasible(format!(
                        "{name}: alpha > 3 required, got {alpha}"
                    )));
                }
                Baseline::ChambolleDossal { lambda, alpha }
            }
        })
    }
}

/// First counter value with `1 − α/n ≥ 0`.
pub fn attouch_cabot_start(alpha: f64) -> u64 {
    alpha.ceil().max(1.0) as u64
}

enum Single<'a> {
    A(&'a InclusionProblem),
    B(&'a InclusionProblem),
}

fn ppa_operator(problem: &InclusionProblem) -> Result<Single<'_>> {
    if problem.b.is_zero() {
        Ok(Single::A(problem))
    } else if problem.a.is_zero()
        && problem
            .b
            .resolvent(1.0, &Vector::zeros(problem.dim()))
            .is_some()
    {
        Ok(Single::B(problem))
    } else {
        Err(Error::Unsupported(
            "ppa needs one of the two operators to vanish and the other to have a resolvent".into(),
        ))
    }
}

pub fn ppa_step(problem: &InclusionProblem, lambda: f64, x: &Vector) -> Result<Vector> {
    match ppa_operator(problem)? {
        Single::A(p) => p.a.resolvent(lambda, x),
        Single::B(p) => Ok(p.b.resolvent(lambda, x).expect("checked by ppa_operator")),
    }
}

pub fn fba_step(problem: &InclusionProblem, lambda: f64, x: &Vector) -> Result<Vector> {
    problem
        .a
        .resolvent(lambda, &(x - problem.b.apply(x) * lambda))
}

pub fn fbf_step(problem: &InclusionProblem, lambda: f64, x: &Vector) -> Result<Vector> {
    let bx = problem.b.apply(x);
    let y = problem.a.resolvent(lambda, &(x - &bx * lambda))?;
    let by = problem.b.apply(&y);
    Ok(&y - (by - bx) * lambda)
}

/// `J_{λB}(x)`, the point of a Douglas–Rachford iterate that converges to a
/// solution.
pub fn dr_shadow(problem: &InclusionProblem, lambda: f64, x: &Vector) -> Result<Vector> {
    problem
        .b
        .resolvent(lambda, x)
        .ok_or_else(|| Error::Unsupported(format!("no resolvent for `{}`", problem.b.label())))
}

pub fn dr_step(problem: &InclusionProblem, lambda: f64, x: &Vector) -> Result<Vector> {
    let jb = dr_shadow(problem, lambda, x)?;
    let ja = problem.a.resolvent(lambda, &(&jb * 2.0 - x))?;
    Ok(ja + x - jb)
}

/// Inertial schemes share `z = x + α_n(x − x_prev)`; `w_n = 1` except for
/// the relaxed variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InertialKind {
    MoudafiOliny,
    LorenzPock,
    AttouchCabot,
}

pub fn inertial_step(
    kind: InertialKind,
    problem: &InclusionProblem,
    lambda: f64,
    alpha_n: f64,
    w_n: f64,
    x: &Vector,
    x_prev: &Vector,
) -> Result<Vector> {
    let z = x + (x - x_prev) * alpha_n;
    match kind {
        InertialKind::MoudafiOliny => problem
            .a
            .resolvent(lambda, &(&z - problem.b.apply(x) * lambda)),
        InertialKind::LorenzPock => fba_step(problem, lambda, &z),
        InertialKind::AttouchCabot => Ok(&z * (1.0 - w_n) + fba_step(problem, lambda, &z)? * w_n),
    }
}

/// `n = 1` gives zero momentum.
pub fn chambolle_dossal_step(
    problem: &InclusionProblem,
    lambda: f64,
    alpha: f64,
    n: u64,
    x: &Vector,
    x_prev: &Vector,
) -> Result<Vector> {
    let n = n as f64;
    let z = x + (x - x_prev) * ((n - 1.0) / (n + alpha - 1.0));
    fba_step(problem, lambda, &z)
}

impl Baseline {
    pub fn lambda(&self) -> f64 {
        match *self {
            Baseline::Ppa { lambda }
            | Baseline::Fba { lambda }
            | Baseline::Fbf { lambda }
            | Baseline::Dr { lambda }
            | Baseline::MoudafiOliny { lambda, .. }
            | Baseline::LorenzPock { lambda, .. }
            | Baseline::AttouchCabot { lambda, .. }
            | Baseline::ChambolleDossal { lambda, .. } => lambda,
        }
    }

    /// The counter of the first step.
    fn first_counter(&self) -> u64 {
        match *self {
            Baseline::AttouchCabot { alpha, .. } => attouch_cabot_start(alpha),
            Baseline::ChambolleDossal { .. } => 1,
            _ => 0,
        }
    }

    /// `x_{n+1}` from `(x_{n−1}, x_n)`, `k` counting from [`Self::first_counter`].
    pub fn step(
        &self,
        problem: &InclusionProblem,
        k: u64,
        x: &Vector,
        x_prev: &Vector,
    ) -> Result<Vector> {
        match *self {
            Baseline::Ppa { lambda } => ppa_step(problem, lambda, x),
            Baseline::Fba { lambda } => fba_step(problem, lambda, x),
            Baseline::Fbf { lambda } => fbf_step(problem, lambda, x),
            Baseline::Dr { lambda } => dr_step(problem, lambda, x),
            Baseline::MoudafiOliny { lambda, alpha } => inertial_step(
                InertialKind::MoudafiOliny,
                problem,
                lambda,
                alpha,
                1.0,
                x,
                x_prev,
            ),
            Baseline::LorenzPock { lambda, alpha } => inertial_step(
                InertialKind::LorenzPock,
                problem,
                lambda,
                alpha,
                1.0,
                x,
                x_prev,
            ),
            Baseline::AttouchCabot { lambda, alpha, rho } => {
                let kf = k as f64;
                let (a_n, w_n) = (1.0 - alpha / kf, 1.0 - rho / (kf * kf));
                inertial_step(
                    InertialKind::AttouchCabot,
                    problem,
                    lambda,
                    a_n,
                    w_n,
                    x,
                    x_prev,
                )
            }
            Baseline::ChambolleDossal { lambda, alpha } => {
                chambolle_dossal_step(problem, lambda, alpha, k, x, x_prev)
            }
        }
    }

    /// The candidate solution carried by iterate `x`: the shadow `J_{λB}(x)`
    /// for Douglas–Rachford, `x` itself otherwise.
    pub fn candidate(&self, problem: &InclusionProblem, x: &Vector) -> Result<Vector> {
        match *self {
            Baseline::Dr { lambda } => dr_shadow(problem, lambda, x),
            _ => Ok(x.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub baseline: Baseline,
    /// The candidate at stop.
    pub solution: Vector,
    pub iterations: u64,
    pub status: RunStatus,
    pub final_res2: f64,
    pub trace: Vec<DiagnosticsRecord>,
    /// Every iterate `x_n`, when `record_history` is set.
    pub iterates: Option<Vec<Vector>>,
}

/// Runs a baseline from `x₋₁ = x₀`. The residual column is `‖G_λ(c_n)‖²` at
/// the candidate `c_n`, with `M = I` and the baseline's own step.
pub fn run_baseline(
    problem: &InclusionProblem,
    baseline: &Baseline,
    x0: &Vector,
    options: &RunOptions,
) -> Result<BaselineOutput> {
    check_dim(problem.dim(), x0)?;
    let identity = SpdMap::identity(problem.dim());
    let lambda = baseline.lambda();
    let k0 = baseline.first_counter();
    let (mut x_prev, mut x) = (x0.clone(), x0.clone());
    let mut n = 0u64;
    let mut trace = Vec::new();
    let mut iterates = options.record_history.then(Vec::new);
    let mut final_res2;
    let status = loop {
        let cand = baseline.candidate(problem, &x)?;
        let res2 = residual_g(problem, &identity, lambda, &cand)?.norm_squared();
        final_res2 = res2;
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        if !res2.is_finite() {
            break RunStatus::NonFinite { n };
        }
        if res2.sqrt() <= options.stop.tol {
            break RunStatus::Converged;
        }
        if n >= options.stop.max_iter {
            break RunStatus::MaxIterations;
        }
        let next = baseline.step(problem, k0 + n, &x, &x_prev)?;
        if !all_finite(&next) {
            break RunStatus::NonFinite { n: n + 1 };
        }
        if options.stride.records(n) {
            trace.push(DiagnosticsRecord {
                n,
                vel2: (&next - &x).norm_squared(),
                vn2: None,
                res2,
                energy: None,
                ystar_norm: None,
            });
        }
        x_prev = std::mem::replace(&mut x, next);
        n += 1;
        if x.norm() > options.divergence_bound {
            break RunStatus::Diverged { n };
        }
    };
    Ok(BaselineOutput {
        baseline: *baseline,
        solution: baseline.candidate(problem, &x)?,
        iterations: n,
        status,
        final_res2,
        trace,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::metric::{vector, Matrix};
    use crate::operators::{AffineMap, AffineOperator, BoxNormalCone, ZeroOperator};

    fn linear(a: Arc<dyn crate::operators::MonotoneOperator>, q: f64, b: f64) -> InclusionProblem {
        InclusionProblem::new(
            a,
            Arc::new(AffineMap::new(Matrix::from_element(1, 1, q), vector(&[b])).unwrap()),
        )
    }

    #[test]
    fn ppa_examples() {
        let p = linear(Arc::new(ZeroOperator), 0.0, 0.0);
        assert_eq!(ppa_step(&p, 1.0, &vector(&[2.0])).unwrap()[0], 2.0);
        let id = AffineOperator::new(Matrix::identity(1, 1), vector(&[0.0])).unwrap();
        let p = linear(Arc::new(id), 0.0, 0.0);
        approx::assert_relative_eq!(
            ppa_step(&p, 1.0, &vector(&[2.0])).unwrap()[0],
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(ppa_step(&p, 1.0, &vector(&[0.0])).unwrap()[0], 0.0);
        // both operators nonzero
        let both = linear(Arc::new(BoxNormalCone::nonnegative()), 1.0, -1.0);
        assert!(ppa_step(&both, 1.0, &vector(&[2.0])).is_err());
    }

    #[test]
    fn forward_backward_examples() {
        let p = linear(Arc::new(ZeroOperator), 1.0, 0.0);
        assert_eq!(fba_step(&p, 0.5, &vector(&[2.0])).unwrap()[0], 1.0);
        let clamp = linear(Arc::new(BoxNormalCone::nonnegative()), 1.0, -1.0);
        let q = vector(&[1.0]);
        assert_eq!(fba_step(&clamp, 0.7, &q).unwrap(), q);
        assert_eq!(fbf_step(&clamp, 0.7, &q).unwrap(), q);
        // with B = 0, FBF is FBA
        let zero_b = linear(Arc::new(BoxNormalCone::nonnegative()), 0.0, 0.0);
        let x = vector(&[-0.4]);
        assert_eq!(
            fbf_step(&zero_b, 0.7, &x).unwrap(),
            fba_step(&zero_b, 0.7, &x).unwrap()
        );
    }

    #[test]
    fn douglas_rachford_identity_on_zero_operators() {
        let p = linear(Arc::new(ZeroOperator), 0.0, 0.0);
        let x = vector(&[3.5]);
        assert_eq!(dr_step(&p, 0.8, &x).unwrap(), x);
    }

    #[test]
    fn inertial_schemes_reduce_to_forward_backward() {
        let p = linear(Arc::new(BoxNormalCone::nonnegative()), 1.0, -1.0);
        let x = vector(&[2.5]);
        let xp = vector(&[3.0]);
        let fba = fba_step(&p, 0.9, &x).unwrap();
        for kind in [
            InertialKind::MoudafiOliny,
            InertialKind::LorenzPock,
            InertialKind::AttouchCabot,
        ] {
            assert_eq!(
                inertial_step(kind, &p, 0.9, 0.0, 1.0, &x, &xp).unwrap(),
                fba
            );
        }
        assert_eq!(
            chambolle_dossal_step(&p, 0.9, 4.0, 1, &x, &xp).unwrap(),
            fba
        );
    }

    #[test]
    fn resolve_defaults_and_rejections() {
        let p = linear(Arc::new(BoxNormalCone::nonnegative()), 2.0, -1.0);
        assert_eq!(
            BaselineConfig::Fba { lambda: None }.resolve(&p).unwrap(),
            Baseline::Fba { lambda: 0.9 }
        );
        assert_eq!(
            BaselineConfig::Fbf { lambda: None }.resolve(&p).unwrap(),
            Baseline::Fbf { lambda: 0.45 }
        );
        assert!(BaselineConfig::Fba { lambda: Some(1.0) }
            .resolve(&p)
            .is_err());
        assert!(BaselineConfig::ChambolleDossal {
            lambda: None,
            alpha: Some(3.0)
        }
        .resolve(&p)
        .is_err());
        let Baseline::AttouchCabot { rho, .. } = BaselineConfig::AttouchCabot {
            lambda: None,
            alpha: None,
            rho: None,
        }
        .resolve(&p)
        .unwrap() else {
            panic!()
        };
        // β = 1/2, λ = β: α(α−2)(1 − λ/(4β)) = 3·0.75
        assert!((rho - 0.9 * 2.25).abs() < 1e-12);
        assert!(BaselineConfig::Ppa { lambda: None }.resolve(&p).is_err());
    }

    #[test]
    fn clamp_problem_converges_for_every_kind() {
        let p = linear(Arc::new(BoxNormalCone::nonnegative()), 1.0, -1.0);
        let configs = [
            BaselineConfig::Fba { lambda: None },
            BaselineConfig::Fbf { lambda: None },
            BaselineConfig::Dr { lambda: None },
            BaselineConfig::MoudafiOliny {
                lambda: None,
                alpha: None,
            },
            BaselineConfig::LorenzPock {
                lambda: None,
                alpha: None,
            },
            BaselineConfig::AttouchCabot {
                lambda: None,
                alpha: None,
                rho: None,
            },
            BaselineConfig::ChambolleDossal {
                lambda: None,
                alpha: None,
            },
        ];
        for c in configs {
            let b = c.resolve(&p).unwrap();
            let mut opts = RunOptions::default();
            opts.stop.tol = 1e-6;
            let out = run_baseline(&p, &b, &vector(&[5.0]), &opts).unwrap();
            assert_eq!(out.status, RunStatus::Converged, "{}", c.name());
            assert!(
                (out.solution[0] - 1.0).abs() < 1e-6,
                "{} {}",
                c.name(),
                out.solution[0]
            );
        }
    }
}
