//! The primal-dual specialization for
//!
//! ```text
//! min_x max_y  G(x) + Q(x) + ⟨Kx, y⟩ − F*(y) − P*(y)
//! ```
//!
//! with `G, F*` prox-friendly and `Q, P*` smooth quadratics. It is CRIFBA
//! with `λ = 1` on the stacked variable `(x, y)`, the monotone part
//! `A = [[∂G, Kᵀ], [−K, ∂F*]]`, `B = (∇Q, ∇P*)` and the metric
//! `M = [[τ⁻¹I, −Kᵀ], [−K, σ⁻¹I]]`, for which the generalized resolvent is two
//! sequential proximal steps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::crifba::{
    relaxation_violation, CrifbaParams, InclusionProblem, RunStatus, Schedule, StopRule, Stride,
};
use crate::error::{Error, Result};
use crate::metric::{
    all_finite, check_dim, max_eigenvalue, min_eigenvalue, operator_norm, Matrix, SpdMap, Vector,
};
use crate::operators::{AffineMap, CocoerciveOperator, MonotoneOperator};

/// Default `δ` when both smooth parts vanish.
pub const DEFAULT_DELTA: f64 = 1e-3;

fn lipschitz_of(map: &AffineMap) -> Result<f64> {
    if map.matrix().amax() == 0.0 {
        Ok(0.0)
    } else {
        max_eigenvalue(map.matrix())
    }
}

#[derive(Debug, Clone)]
pub struct SaddleProblem {
    pub g: Arc<dyn MonotoneOperator>,
    pub fstar: Arc<dyn MonotoneOperator>,
    pub grad_q: AffineMap,
    pub grad_pstar: AffineMap,
    /// `d_y × d_x`
    pub k: Matrix,
    lip_q: f64,
    lip_pstar: f64,
    k_norm: f64,
}

impl SaddleProblem {
    pub fn new(
        g: Arc<dyn MonotoneOperator>,
        fstar: Arc<dyn MonotoneOperator>,
        grad_q: AffineMap,
        grad_pstar: AffineMap,
        k: Matrix,
    ) -> Result<Self> {
        if grad_q.dim() != k.ncols() || grad_pstar.dim() != k.nrows() {
            return Err(Error::DimensionMismatch {
                expected: k.ncols(),
                found: grad_q.dim(),
            });
        }
        Ok(SaddleProblem {
            lip_q: lipschitz_of(&grad_q)?,
            lip_pstar: lipschitz_of(&grad_pstar)?,
            k_norm: operator_norm(&k)?,
            g,
            fstar,
            grad_q,
            grad_pstar,
            k,
        })
    }

    pub fn dim_x(&self) -> usize {
        self.k.ncols()
    }

    pub fn dim_y(&self) -> usize {
        self.k.nrows()
    }

    pub fn lip_q(&self) -> f64 {
        self.lip_q
    }

    pub fn lip_pstar(&self) -> f64 {
        self.lip_pstar
    }

    pub fn k_norm(&self) -> f64 {
        self.k_norm
    }

    /// `[[τ⁻¹I, −Kᵀ], [−K, σ⁻¹I]]`.
    pub fn metric_matrix(&self, tau: f64, sigma: f64) -> Matrix {
        let (dx, dy) = (self.dim_x(), self.dim_y());
        let mut m = Matrix::zeros(dx + dy, dx + dy);
        m.view_mut((0, 0), (dx, dx)).fill_diagonal(1.0 / tau);
        m.view_mut((dx, dx), (dy, dy)).fill_diagonal(1.0 / sigma);
        m.view_mut((0, dx), (dx, dy))
            .copy_from(&(-self.k.transpose()));
        m.view_mut((dx, 0), (dy, dx)).copy_from(&(-&self.k));
        m
    }

    pub fn split(&self, u: &Vector) -> (Vector, Vector) {
        let dx = self.dim_x();
        (
            u.rows(0, dx).into_owned(),
            u.rows(dx, self.dim_y()).into_owned(),
        )
    }

    pub fn stack(x: &Vector, y: &Vector) -> Vector {
        Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
    }

    /// `(M + A)⁻¹(ξ′, χ′)`: `x = prox_{τG}(τξ′)`, `y = prox_{σF*}(σχ′ + 2σKx)`.
    pub fn precond_resolvent(
        &self,
        tau: f64,
        sigma: f64,
        xi: &Vector,
        chi: &Vector,
    ) -> Result<(Vector, Vector)> {
        check_dim(self.dim_x(), xi)?;
        check_dim(self.dim_y(), chi)?;
        let x = self.g.resolvent(tau, &(xi * tau))?;
        let y = self
            .fstar
            .resolvent(sigma, &((chi + &self.k * &x * 2.0) * sigma))?;
        Ok((x, y))
    }

    /// `T(x, y) = (M + A)⁻¹(M − B)(x, y)`.
    pub fn fixed_point_map(
        &self,
        tau: f64,
        sigma: f64,
        x: &Vector,
        y: &Vector,
    ) -> Result<(Vector, Vector)> {
        let px = self
            .g
            .resolvent(tau, &(x - (self.grad_q.apply(x) + self.k.tr_mul(y)) * tau))?;
        let xbar = &px * 2.0 - x;
        let py = self.fstar.resolvent(
            sigma,
            &(y - (self.grad_pstar.apply(y) - &self.k * xbar) * sigma),
        )?;
        Ok((px, py))
    }

    /// The stacked inclusion with `λ = 1` and the block metric, for running
    /// or cross-checking with generic CRIFBA.
    pub fn as_inclusion(&self, params: &CripdaParams) -> Result<(InclusionProblem, CrifbaParams)> {
        let metric = SpdMap::new(self.metric_matrix(params.tau, params.sigma))?;
        let a = SaddleOperator {
            problem: self.clone(),
            tau: params.tau,
            sigma: params.sigma,
            metric: metric.matrix().clone(),
        };
        let b = StackedGradient::new(self)?;
        let certificate = b.certificate.clone();
        let problem = InclusionProblem::new(Arc::new(a), Arc::new(b));
        let crifba = CrifbaParams::new(
            params.schedule,
            1.0,
            params.w,
            metric,
            certificate,
            params.delta,
        )?;
        Ok((problem, crifba))
    }
}

/// `A(x, y) = (∂G(x) + Kᵀy, ∂F*(y) − Kx)`, whose generalized resolvent is
/// available in closed form for its own block metric at `λ = 1`.
#[derive(Debug, Clone)]
pub struct SaddleOperator {
    problem: SaddleProblem,
    tau: f64,
    sigma: f64,
    metric: Matrix,
}

impl MonotoneOperator for SaddleOperator {
    fn label(&self) -> String {
        format!(
            "saddle[{}, {}]",
            self.problem.g.label(),
            self.problem.fstar.label()
        )
    }

    fn resolvent(&self, _lambda: f64, _x: &Vector) -> Result<Vector> {
        Err(Error::Unsupported(
            "the saddle operator is only resolved in its block metric".into(),
        ))
    }

    fn graph_member(&self, u: &Vector, ustar: &Vector, tol: f64) -> Option<bool> {
        let (x, y) = self.problem.split(u);
        let (a, b) = self.problem.split(ustar);
        let gx = a - self.problem.k.tr_mul(&y);
        let fy = b + &self.problem.k * &x;
        Some(
            self.problem.g.graph_member(&x, &gx, tol)?
                && self.problem.fstar.graph_member(&y, &fy, tol)?,
        )
    }

    fn metric_resolvent(&self, metric: &SpdMap, lambda: f64, u: &Vector) -> Option<Result<Vector>> {
        if lambda != 1.0 || metric.matrix() != &self.metric {
            return None;
        }
        let mu = metric.mul(u);
        let (xi, chi) = self.problem.split(&mu);
        Some(
            self.problem
                .precond_resolvent(self.tau, self.sigma, &xi, &chi)
                .map(|(x, y)| SaddleProblem::stack(&x, &y)),
        )
    }
}

/// `(∇Q(x), ∇P*(y))` with the block-diagonal certificate.
#[derive(Debug, Clone)]
pub struct StackedGradient {
    grad_q: AffineMap,
    grad_pstar: AffineMap,
    certificate: SpdMap,
}

impl StackedGradient {
    pub fn new(problem: &SaddleProblem) -> Result<Self> {
        let (dx, dy) = (problem.dim_x(), problem.dim_y());
        let mut diag = vec![0.0; dx + dy];
        let lq = problem.grad_q.certificate().norm();
        let lp = problem.grad_pstar.certificate().norm();
        diag[..dx].fill(lq);
        diag[dx..].fill(lp);
        Ok(StackedGradient {
            grad_q: problem.grad_q.clone(),
            grad_pstar: problem.grad_pstar.clone(),
            certificate: SpdMap::diagonal(&diag)?,
        })
    }
}

impl CocoerciveOperator for StackedGradient {
    fn label(&self) -> String {
        "stacked_gradient".into()
    }

    fn apply(&self, u: &Vector) -> Vector {
        let dx = self.grad_q.dim();
        let x = u.rows(0, dx).into_owned();
        let y = u.rows(dx, self.grad_pstar.dim()).into_owned();
        SaddleProblem::stack(&self.grad_q.apply(&x), &self.grad_pstar.apply(&y))
    }

    fn certificate(&self) -> &SpdMap {
        &self.certificate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CripdaParams {
    pub schedule: Schedule,
    pub tau: f64,
    pub sigma: f64,
    pub w: f64,
    pub delta: Option<f64>,
}

/// Margins of both step-size conditions. A condition holds when every one of
/// its margins is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CripdaMargins {
    pub delta: Option<f64>,
    /// `δ − max(l_Q, l_P*)/4`, `w(1−w)/δ − τ`, `w(1−w)/δ − σ`,
    /// `(1/τ − δ/(w(1−w)))(1/σ − δ/(w(1−w))) − ‖K‖²`
    pub condition1: Option<[f64; 4]>,
    /// `w(1−w)/l_Q − τ`, `w(1−w)/l_P* − σ` (infinite when the constant is
    /// zero), `(1/τ − l_Q/(w(1−w)))(1/σ − l_P*/(w(1−w))) − ‖K‖²`
    pub condition2: [f64; 3],
    /// Smallest eigenvalue of the block metric.
    pub metric_margin: f64,
    pub selector: Option<u8>,
}

impl std::fmt::Display for CripdaMargins {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.condition1, self.delta) {
            (Some(c), Some(d)) => write!(
                f,
                "condition 1 (delta = {d}): delta - max(lQ, lP*)/4 = {:.6e}, w(1-w)/delta - tau = {:.6e}, w(1-w)/delta - sigma = {:.6e}, product - |K|^2 = {:.6e}; ",
                c[0], c[1], c[2], c[3]
            )?,
            _ => write!(f, "condition 1: no delta; ")?,
        }
        write!(
            f,
            "condition 2: w(1-w)/lQ - tau = {:.6e}, w(1-w)/lP* - sigma = {:.6e}, product - |K|^2 = {:.6e}; min eig(M) = {:.6e}",
            self.condition2[0], self.condition2[1], self.condition2[2], self.metric_margin
        )
    }
}

impl CripdaParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.schedule.violations();
        if let Some(v) = relaxation_violation(self.w) {
            out.push(v);
        }
        for (name, v) in [("tau", self.tau), ("sigma", self.sigma)] {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("{name} > 0 violated ({name} = {v})"));
            }
        }
        out
    }

    /// `δ` used by the first condition: the supplied value, or
    /// [`DEFAULT_DELTA`] when both smooth parts vanish.
    pub fn effective_delta(&self, problem: &SaddleProblem) -> Option<f64> {
        self.delta
            .or((problem.lip_q() == 0.0 && problem.lip_pstar() == 0.0).then_some(DEFAULT_DELTA))
    }

    pub fn margins(&self, problem: &SaddleProblem) -> Result<CripdaMargins> {
        let ww = self.w * (1.0 - self.w);
        let k2 = problem.k_norm().powi(2);
        let (lq, lp) = (problem.lip_q(), problem.lip_pstar());
        let delta = self.effective_delta(problem);
        let condition1 = delta.map(|d| {
            [
                d - 0.25 * lq.max(lp),
                ww / d - self.tau,
                ww / d - self.sigma,
                (1.0 / self.tau - d / ww) * (1.0 / self.sigma - d / ww) - k2,
            ]
        });
        let box_margin = |l: f64, step: f64| {
            if l == 0.0 {
                f64::INFINITY
            } else {
                ww / l - step
            }
        };
        let condition2 = [
            box_margin(lq, self.tau),
            box_margin(lp, self.sigma),
            (1.0 / self.tau - lq / ww) * (1.0 / self.sigma - lp / ww) - k2,
        ];
        let metric_margin = min_eigenvalue(&problem.metric_matrix(self.tau, self.sigma))?;
        // the product margin alone admits two negative factors
        let factors_ok = |a: f64, b: f64| 1.0 / self.tau > a / ww && 1.0 / self.sigma > b / ww;
        let selector = match (condition1, delta) {
            (Some(c), Some(d)) if c.iter().all(|&m| m > 0.0) && factors_ok(d, d) => Some(1),
            _ if condition2.iter().all(|&m| m > 0.0) && factors_ok(lq, lp) => Some(2),
            _ => None,
        };
        Ok(CripdaMargins {
            delta,
            condition1,
            condition2,
            metric_margin,
            selector,
        })
    }

    /// Largest `τ = σ` satisfying the second condition, times 0.9.
    pub fn with_default_steps(schedule: Schedule, w: f64, problem: &SaddleProblem) -> Result<Self> {
        if let Some(v) = relaxation_violation(w) {
            return Err(Error::Infeasible(v));
        }
        let probe = |t: f64| CripdaParams {
            schedule,
            tau: t,
            sigma: t,
            w,
            delta: None,
        };
        // the box margins imply both factors of the product are positive
        let feasible = |t: f64| -> Result<bool> {
            Ok(probe(t)
                .margins(problem)?
                .condition2
                .iter()
                .all(|&m| m > 0.0))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while feasible(hi)? {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(probe(1e12));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo == 0.0 {
            return Err(Error::Infeasible(
                "no positive step satisfies the second condition".into(),
            ));
        }
        Ok(probe(0.9 * lo))
    }
}

/// Returns the selector, or an infeasibility error listing every margin.
pub fn validate_cripda(params: &CripdaParams, problem: &SaddleProblem) -> Result<u8> {
    let v = params.violations();
    if !v.is_empty() {
        return Err(Error::Infeasible(v.join("; ")));
    }
    let m = params.margins(problem)?;
    m.selector
        .ok_or_else(|| Error::Infeasible(format!("neither step condition holds: {m}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    pub n: u64,
    pub x_prev: Vector,
    pub x: Vector,
    pub y_prev: Vector,
    pub y: Vector,
    pub xi_prev: Vector,
    pub chi_prev: Vector,
}

impl SaddleState {
    pub fn cold_start(x0: &Vector, y0: &Vector) -> Self {
        SaddleState {
            n: 0,
            x_prev: x0.clone(),
            x: x0.clone(),
            y_prev: y0.clone(),
            y: y0.clone(),
            xi_prev: x0.clone(),
            chi_prev: y0.clone(),
        }
    }
}

/// One step:
///
/// ```text
/// ξ_n     = x_n + θ_n(x_n − x_{n−1}) + γ_n(ξ_{n−1} − x_n)
/// χ_n     = y_n + θ_n(y_n − y_{n−1}) + γ_n(χ_{n−1} − y_n)
/// x_{n+1} = (1 − w)ξ_n + w·prox_{τG}(ξ_n − τ(∇Q(ξ_n) + Kᵀχ_n))
/// ξ̄_n     = 2w⁻¹(x_{n+1} − (1 − w)ξ_n) − ξ_n
/// y_{n+1} = (1 − w)χ_n + w·prox_{σF*}(χ_n − σ(∇P*(χ_n) − Kξ̄_n))
/// ```
pub fn cripda_step(
    problem: &SaddleProblem,
    params: &CripdaParams,
    s: &SaddleState,
) -> Result<SaddleState> {
    let c = params.schedule.at(s.n);
    let (w, tau, sigma) = (params.w, params.tau, params.sigma);
    let xi = &s.x + (&s.x - &s.x_prev) * c.theta + (&s.xi_prev - &s.x) * c.gamma;
    let chi = &s.y + (&s.y - &s.y_prev) * c.theta + (&s.chi_prev - &s.y) * c.gamma;
    let px = problem.g.resolvent(
        tau,
        &(&xi - (problem.grad_q.apply(&xi) + problem.k.tr_mul(&chi)) * tau),
    )?;
    let x_next = &xi * (1.0 - w) + px * w;
    let xi_bar = (&x_next - &xi * (1.0 - w)) * (2.0 / w) - &xi;
    let py = problem.fstar.resolvent(
        sigma,
        &(&chi - (problem.grad_pstar.apply(&chi) - &problem.k * xi_bar) * sigma),
    )?;
    let y_next = &chi * (1.0 - w) + py * w;
    if !all_finite(&x_next) || !all_finite(&y_next) {
        return Err(Error::NonFinite(format!(
            "iterate {} is not finite",
            s.n + 1
        )));
    }
    Ok(SaddleState {
        n: s.n + 1,
        x_prev: s.x.clone(),
        x: x_next,
        y_prev: s.y.clone(),
        y: y_next,
        xi_prev: xi,
        chi_prev: chi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CripdaRecord {
    pub n: u64,
    /// `‖(x_{n+1}, y_{n+1}) − (x_n, y_n)‖²_M`
    pub vel2_m: f64,
    /// `‖T(x_n, y_n) − (x_n, y_n)‖²_M`
    pub fpr2_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CripdaOptions {
    pub stop: StopRule,
    pub stride: Stride,
    pub divergence_bound: f64,
}

impl Default for CripdaOptions {
    fn default() -> Self {
        CripdaOptions {
            stop: StopRule::default(),
            stride: Stride::Auto,
            divergence_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CripdaOutput {
    pub x: Vector,
    pub y: Vector,
    pub iterations: u64,
    pub status: RunStatus,
    pub final_fpr2_m: f64,
    pub trace: Vec<CripdaRecord>,
}

/// Runs until the `M`-norm fixed-point residual drops to `tol`.
pub fn run_cripda(
    problem: &SaddleProblem,
    params: &CripdaParams,
    x0: &Vector,
    y0: &Vector,
    options: &CripdaOptions,
) -> Result<CripdaOutput> {
    check_dim(problem.dim_x(), x0)?;
    check_dim(problem.dim_y(), y0)?;
    validate_cripda(params, problem)?;
    let metric = SpdMap::new(problem.metric_matrix(params.tau, params.sigma))?;
    let mut s = SaddleState::cold_start(x0, y0);
    let mut trace = Vec::new();
    let mut final_fpr2_m;
    let status = loop {
        let (tx, ty) = problem.fixed_point_map(params.tau, params.sigma, &s.x, &s.y)?;
        let fpr2 = metric.norm2(&SaddleProblem::stack(&(tx - &s.x), &(ty - &s.y)));
        final_fpr2_m = fpr2;
        if !fpr2.is_finite() {
            break RunStatus::NonFinite { n: s.n };
        }
        if fpr2.sqrt() <= options.stop.tol {
            break RunStatus::Converged;
        }
        if s.n >= options.stop.max_iter {
            break RunStatus::MaxIterations;
        }
        let next = match cripda_step(problem, params, &s) {
            Ok(n) => n,
            Err(Error::NonFinite(_)) => break RunStatus::NonFinite { n: s.n + 1 },
            Err(e) => return Err(e),
        };
        if options.stride.records(s.n) {
            let dv = SaddleProblem::stack(&(&next.x - &s.x), &(&next.y - &s.y));
            trace.push(CripdaRecord {
                n: s.n,
                vel2_m: metric.norm2(&dv),
                fpr2_m: fpr2,
            });
        }
        s = next;
        if s.x.norm().max(s.y.norm()) > options.divergence_bound {
            break RunStatus::Diverged { n: s.n };
        }
    };
    Ok(CripdaOutput {
        x: s.x,
        y: s.y,
        iterations: s.n,
        status,
        final_fpr2_m,
        trace,
    })
}
