use super::{consecutive, Accumulator, CheckReport, Tolerance};
use crate::crifba::{
    energy, graph_sequence, residual_g, CrifbaParams, InclusionProblem, StepRecord,
};
use crate::error::Result;
use crate::metric::{min_eigenvalue, Matrix, SpdMap, Vector};

fn sum_abs(terms: &[f64]) -> f64 {
    terms.iter().map(|t| t.abs()).sum()
}

/// `E_{n+1}(s₀,q) ≤ E_n(s₀,q)` for `n ≥ 1`, with slack `1e-10·(1 + |E_n|)`.
pub fn check_energy_monotone(
    history: &[StepRecord],
    params: &CrifbaParams,
    q: &Vector,
) -> Result<CheckReport> {
    let s0 = params.schedule.s0;
    let mut acc = Accumulator::new(
        "energy_monotone",
        Tolerance {
            rel: 1e-10,
            abs: 1e-10,
        },
    );
    let mut prev: Option<(u64, f64)> = None;
    for rec in history.iter().filter(|r| r.n >= 1) {
        let e = energy(params, &rec.x, &rec.x_prev, &rec.v, rec.n, s0, q)?;
        if let Some((n, e_prev)) = prev {
            if rec.n == n + 1 {
                acc.push(rec.n, e - e_prev, e_prev.abs());
            }
        }
        prev = Some((rec.n, e));
    }
    Ok(acc.finish())
}

/// The two anchor inequalities, for `n ≥ 1`:
///
/// ```text
/// ⟨v_n, x_n − q⟩_M         ≥ λwα‖B(z_{n−1}) − B(q)‖²_{L⁻¹} + ((1−w)²/w)‖v_n‖²_M
/// ⟨v̇_{n+1}, ẋ_{n+1}⟩_M    ≥ λwα‖B(z_n) − B(z_{n−1})‖²_{L⁻¹} + ((1−w)²/w)‖v̇_{n+1}‖²_M
/// ```
///
/// `alpha` is the constant of the metric condition that holds. A negative
/// `alpha` is reported as skipped rather than asserted.
pub fn check_anchor_inequalities(
    history: &[StepRecord],
    params: &CrifbaParams,
    problem: &InclusionProblem,
    alpha: f64,
    q: &Vector,
) -> [CheckReport; 2] {
    const NAMES: [&str; 2] = ["anchor_inequality", "increment_inequality"];
    if !(alpha >= 0.0) {
        let why = format!("alpha = {alpha} is negative; the inequalities are not implied");
        return NAMES.map(|n| CheckReport::skipped(n, why.clone()));
    }
    if history.is_empty() {
        return NAMES.map(|n| CheckReport::skipped(n, "no step history"));
    }
    let m = &params.metric;
    let l = &params.certificate;
    let (lw, eta) = (
        params.lambda * params.w,
        (1.0 - params.w).powi(2) / params.w,
    );
    let bq = problem.b.apply(q);

    let mut out1 = Accumulator::new(NAMES[0], Tolerance::DEFAULT);
    for rec in history.iter().filter(|r| r.n >= 1) {
        let lhs = m.inner(&rec.v, &(&rec.x - q));
        let t1 = lw * alpha * l.inv_norm2(&(&rec.b_zprev - &bq));
        let t2 = eta * m.norm2(&rec.v);
        acc_push(&mut out1, rec.n, t1 + t2 - lhs, &[lhs, t1, t2]);
    }
    let mut out2 = Accumulator::new(NAMES[1], Tolerance::DEFAULT);
    for (cur, next) in consecutive(history).filter(|(c, _)| c.n >= 1) {
        let dv = &next.v - &cur.v;
        let dx = &cur.x_next - &cur.x;
        let lhs = m.inner(&dv, &dx);
        let t1 = lw * alpha * l.inv_norm2(&(&cur.b_z - &cur.b_zprev));
        let t2 = eta * m.norm2(&dv);
        acc_push(&mut out2, cur.n, t1 + t2 - lhs, &[lhs, t1, t2]);
    }
    [out1.finish(), out2.finish()]
}

fn acc_push(acc: &mut Accumulator, n: u64, excess: f64, terms: &[f64]) {
    acc.push(n, excess, sum_abs(terms));
}

/// Co-coercivity of `G` in the metric, on sample pairs:
///
/// ```text
/// ⟨ΔG, Δx⟩_M ≥ ‖ΔB‖²_{L⁻¹} + λ‖ΔG‖²_M − λ⟨ΔG, ΔB⟩
/// ⟨ΔG, Δx⟩_M ≥ α_i‖ΔB‖²_{L⁻¹} + λ⟨H_iΔG, ΔG⟩,   i = 1, 2
/// ```
///
/// with `α₁ = 1 − λ‖L‖/(4δ)`, `H₁ = M − δI` (only when `δ` is given) and
/// `α₂ = 3/4`, `H₂ = M − λL`.
pub fn check_g_cocoercivity(
    problem: &InclusionProblem,
    metric: &SpdMap,
    certificate: &SpdMap,
    lambda: f64,
    delta: Option<f64>,
    pairs: &[(Vector, Vector)],
) -> Result<Vec<CheckReport>> {
    let d = metric.dim();
    let mut base = Accumulator::new("g_cocoercivity", Tolerance::DEFAULT);
    let mut split1 = delta.map(|_| Accumulator::new("g_cocoercivity_split_1", Tolerance::DEFAULT));
    let mut split2 = Accumulator::new("g_cocoercivity_split_2", Tolerance::DEFAULT);
    let h1 = delta.map(|dl| metric.matrix() - Matrix::identity(d, d) * dl);
    let h2 = metric.matrix() - certificate.matrix() * lambda;
    let alpha1 = delta.map(|dl| 1.0 - lambda * certificate.norm() / (4.0 * dl));
    for (i, (x1, x2)) in pairs.iter().enumerate() {
        let i = i as u64;
        let dg =
            residual_g(problem, metric, lambda, x1)? - residual_g(problem, metric, lambda, x2)?;
        let db = problem.b.apply(x1) - problem.b.apply(x2);
        let dx = x1 - x2;
        let lhs = metric.inner(&dg, &dx);
        let bl = certificate.inv_norm2(&db);
        let gm = lambda * metric.norm2(&dg);
        let gb = lambda * dg.dot(&db);
        acc_push(&mut base, i, bl + gm - gb - lhs, &[lhs, bl, gm, gb]);
        if let (Some(acc), Some(h), Some(a)) = (split1.as_mut(), h1.as_ref(), alpha1) {
            let hg = lambda * (h * &dg).dot(&dg);
            acc_push(acc, i, a * bl + hg - lhs, &[lhs, a * bl, hg]);
        }
        let hg = lambda * (&h2 * &dg).dot(&dg);
        acc_push(&mut split2, i, 0.75 * bl + hg - lhs, &[lhs, 0.75 * bl, hg]);
    }
    let mut out = vec![base.finish()];
    out.extend(split1.map(Accumulator::finish));
    out.push(split2.finish());
    Ok(out)
}

/// For `n ≥ 1`, with `τ_n = e + ν_{n+1}` and `a_n = v_n + ẋ_n`:
///
/// ```text
/// τ_n²‖a_{n+1}‖²_M − τ_{n−1}²‖a_n‖²_M + (s₀ − 2s₁)τ_n‖a_n‖²_M ≤ s₀⁻¹(e − s₀ + s₁)²τ_n‖ẋ_n‖²_M
/// ```
pub fn check_corrected_velocity(history: &[StepRecord], params: &CrifbaParams) -> CheckReport {
    let sc = params.schedule;
    let m = &params.metric;
    let mut acc = Accumulator::new("corrected_velocity", Tolerance::DEFAULT);
    let k = (sc.e - sc.s0 + sc.s1).powi(2) / sc.s0;
    for (cur, next) in consecutive(history).filter(|(c, _)| c.n >= 1) {
        let tau = sc.at(cur.n).tau;
        let tau_prev = sc.at(cur.n - 1).tau;
        let xdot = &cur.x - &cur.x_prev;
        let a = &cur.v + &xdot;
        let a_next = &next.v + (&cur.x_next - &cur.x);
        let t1 = tau * tau * m.norm2(&a_next);
        let t2 = tau_prev * tau_prev * m.norm2(&a);
        let t3 = (sc.s0 - 2.0 * sc.s1) * tau * m.norm2(&a);
        let rhs = k * tau * m.norm2(&xdot);
        acc_push(&mut acc, cur.n, t1 - t2 + t3 - rhs, &[t1, t2, t3, rhs]);
    }
    acc.finish()
}

/// `‖G(x_{n+1})‖²_M ≤ 2(w + 1)‖G(z_n)‖²_M + 1e-10`.
pub fn check_residual_transfer(history: &[StepRecord], params: &CrifbaParams) -> CheckReport {
    let m = &params.metric;
    let mut acc = Accumulator::new(
        "residual_transfer",
        Tolerance {
            rel: 1e-10,
            abs: 1e-10,
        },
    );
    for (cur, next) in consecutive(history) {
        let lhs = m.norm2(&next.g_x);
        let rhs = 2.0 * (params.w + 1.0) * m.norm2(&cur.g_z);
        acc.push(cur.n, lhs - rhs, 0.0);
    }
    acc.finish()
}

/// `(1/w)(‖M‖/λ + ρ^{−1/2}(‖M‖‖L‖)^{1/2}(1 + ‖L‖^{1/2}))`.
pub fn graph_bound_constant(params: &CrifbaParams, rho: f64) -> f64 {
    let mn = params.metric.norm();
    let ln = params.certificate.norm();
    (mn / params.lambda + (mn * ln / rho).sqrt() * (1.0 + ln.sqrt())) / params.w
}

fn rho_is_valid(params: &CrifbaParams, rho: f64) -> bool {
    let d = params.dim();
    let m = params.metric.matrix();
    rho > 0.0
        && (min_eigenvalue(&(m - params.certificate.matrix() * rho)).is_ok_and(|v| v > 0.0)
            || min_eigenvalue(&(m - Matrix::identity(d, d) * rho)).is_ok_and(|v| v > 0.0))
}

/// A `ρ` with `M − ρL` or `M − ρI` positive definite: 0.99 times the larger
/// of the two thresholds.
pub fn default_rho(params: &CrifbaParams) -> Option<f64> {
    let by_identity = params.metric.min_eigenvalue();
    let by_certificate = params
        .metric
        .max_generalized_eigenvalue(params.certificate.matrix())
        .ok()
        .map(|v| 1.0 / v)
        .unwrap_or(0.0);
    let rho = 0.99 * by_identity.max(by_certificate);
    rho_is_valid(params, rho).then_some(rho)
}

/// `‖y_n*‖_M ≤ C(ρ)‖v_n‖_M` for `n ≥ 1`.
pub fn check_graph_bound(
    history: &[StepRecord],
    params: &CrifbaParams,
    problem: &InclusionProblem,
    rho: f64,
) -> CheckReport {
    const NAME: &str = "graph_bound";
    if !rho_is_valid(params, rho) {
        return CheckReport::skipped(
            NAME,
            format!("rho = {rho}: neither M - rho L nor M - rho I is positive definite"),
        );
    }
    let m = &params.metric;
    let c = graph_bound_constant(params, rho);
    let mut acc = Accumulator::new(NAME, Tolerance::DEFAULT);
    for rec in history.iter().filter(|r| r.n >= 1) {
        let (_, ystar) = graph_sequence(problem, params, &rec.z_prev, &rec.v, &rec.b_zprev);
        let lhs = m.norm2(&ystar).sqrt();
        let rhs = c * m.norm2(&rec.v).sqrt();
        acc_push(&mut acc, rec.n, lhs - rhs, &[lhs, rhs]);
    }
    acc.finish()
}

/// `y_n* − B(y_n) ∈ A(y_n)` for `n ≥ 1`, via the operator's graph test.
pub fn check_graph_inclusion(
    history: &[StepRecord],
    params: &CrifbaParams,
    problem: &InclusionProblem,
) -> CheckReport {
    const NAME: &str = "graph_inclusion";
    let mut acc = Accumulator::new(NAME, Tolerance::relative(0.5));
    for rec in history.iter().filter(|r| r.n >= 1) {
        let (y, ystar) = graph_sequence(problem, params, &rec.z_prev, &rec.v, &rec.b_zprev);
        let by = problem.b.apply(&y);
        let scale = 1.0 + y.amax() + ystar.amax() + by.amax() + rec.b_zprev.amax();
        match problem.a.graph_member(&y, &(&ystar - &by), 1e-10 * scale) {
            None => {
                return CheckReport::skipped(
                    NAME,
                    format!("`{}` has no graph test", problem.a.label()),
                )
            }
            Some(ok) => acc.push(rec.n, if ok { 0.0 } else { 1.0 }, 1.0),
        }
    }
    acc.finish()
        .with_note("violation is 1 for each iteration whose pair is outside the graph")
}
