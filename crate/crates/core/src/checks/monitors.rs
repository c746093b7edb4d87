use super::{consecutive, Accumulator, CheckReport, CheckStatus, Tolerance};
use crate::crifba::{energy, CrifbaParams, StepRecord};
use crate::error::Result;
use crate::metric::Vector;

/// The index windows compared by trend monitors: `[1, 10]` and `[N/10, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decade {
    pub first: (u64, u64),
    pub last: (u64, u64),
}

impl Decade {
    /// `None` when `N < 100`, where the two windows would overlap.
    pub fn for_horizon(n_max: u64) -> Option<Self> {
        (n_max >= 100).then_some(Decade {
            first: (1, 10),
            last: (n_max / 10, n_max),
        })
    }
}

fn window_max(points: &[(u64, f64)], (lo, hi): (u64, u64), power: i32) -> Option<f64> {
    points
        .iter()
        .filter(|(n, _)| *n >= lo && *n <= hi)
        .map(|&(n, v)| (n as f64).powi(power) * v)
        .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// Passes when `max n^power·value` over the final decade is below 10% of the
/// same maximum over the first decade.
pub fn decay_trend(name: &str, points: &[(u64, f64)], power: i32) -> CheckReport {
    let Some(n_max) = points.iter().map(|p| p.0).max() else {
        return CheckReport::skipped(name, "no data");
    };
    let Some(dec) = Decade::for_horizon(n_max) else {
        return CheckReport::skipped(name, format!("horizon N = {n_max} is below 100"));
    };
    let (Some(first), Some(last)) = (
        window_max(points, dec.first, power),
        window_max(points, dec.last, power),
    ) else {
        return CheckReport::skipped(name, "a decade window holds no samples");
    };
    if !(first > 0.0) {
        return CheckReport::skipped(name, "first-decade maximum is zero");
    }
    let ratio = last / first;
    let passed = ratio < 0.1;
    CheckReport {
        name: name.to_string(),
        status: if passed {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        },
        n_checked: points.len(),
        worst_violation: ratio,
        worst_index: None,
        tolerance: 0.1,
        passed,
        note: Some(format!(
            "first decade [1, 10] max {first:.6e}; final decade [{}, {}] max {last:.6e}",
            dec.last.0, dec.last.1
        )),
    }
}

/// Partial sums whose tail over the final decade must be under 1% of the
/// total. A total of zero passes.
fn tail_report(name: &str, terms: &[(u64, f64)]) -> CheckReport {
    let Some(n_max) = terms.iter().map(|t| t.0).max() else {
        return CheckReport::skipped(name, "no terms");
    };
    let total: f64 = terms.iter().map(|t| t.1).sum();
    let tail: f64 = terms
        .iter()
        .filter(|t| t.0 >= n_max / 10)
        .map(|t| t.1)
        .sum();
    let ratio = if total == 0.0 { 0.0 } else { tail / total };
    let passed = ratio.is_finite() && ratio < 0.01;
    CheckReport {
        name: name.to_string(),
        status: if passed {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        },
        n_checked: terms.len(),
        worst_violation: ratio,
        worst_index: None,
        tolerance: 0.01,
        passed,
        note: Some(format!(
            "total {total:.6e} over n in [1, {n_max}], final-decade increment {tail:.6e}"
        )),
    }
}

/// Tail monitors for the summable series along a run, `n ≥ 1`:
///
/// ```text
/// weighted_increment_sum    Σ ν_{n+1}²‖v_{n+1} − v_n‖²_M
/// weighted_velocity_sum     Σ ν_{n+1}‖ẋ_{n+1}‖²_M
/// anchor_gap_sum            Σ ⟨v_n, x_n − q⟩_M
/// acceleration_sum          Σ n²‖ẋ_{n+1} − ẋ_n‖²_M
/// corrected_velocity_sum    Σ n‖ẋ_n + v_n‖²_M
/// velocity_sum              Σ n‖ẋ_{n+1}‖²_M
/// correction_sum            Σ n‖v_n‖²_M
/// residual_sum              Σ n‖G(x_n)‖²_M
/// ```
pub fn summability_monitors(
    history: &[StepRecord],
    params: &CrifbaParams,
    q: &Vector,
) -> Vec<CheckReport> {
    let m = &params.metric;
    let sc = params.schedule;
    let recs: Vec<&StepRecord> = history.iter().filter(|r| r.n >= 1).collect();
    let per = |f: &dyn Fn(&StepRecord) -> f64| -> Vec<(u64, f64)> {
        recs.iter().map(|r| (r.n, f(r))).collect()
    };
    let increments: Vec<(u64, f64)> = consecutive(history)
        .filter(|(c, _)| c.n >= 1)
        .map(|(c, nx)| (c.n, sc.nu(c.n + 1).powi(2) * m.norm2(&(&nx.v - &c.v))))
        .collect();
    vec![
        tail_report("weighted_increment_sum", &increments),
        tail_report(
            "weighted_velocity_sum",
            &per(&|r| sc.nu(r.n + 1) * m.norm2(&(&r.x_next - &r.x))),
        ),
        tail_report("anchor_gap_sum", &per(&|r| m.inner(&r.v, &(&r.x - q)))),
        tail_report(
            "acceleration_sum",
            &per(&|r| {
                let acc = (&r.x_next - &r.x) - (&r.x - &r.x_prev);
                (r.n as f64).powi(2) * m.norm2(&acc)
            }),
        ),
        tail_report(
            "corrected_velocity_sum",
            &per(&|r| r.n as f64 * m.norm2(&(&r.x - &r.x_prev + &r.v))),
        ),
        tail_report(
            "velocity_sum",
            &per(&|r| r.n as f64 * m.norm2(&(&r.x_next - &r.x))),
        ),
        tail_report("correction_sum", &per(&|r| r.n as f64 * m.norm2(&r.v))),
        tail_report("residual_sum", &per(&|r| r.n as f64 * m.norm2(&r.g_x))),
    ]
}

/// Explicit bounds in terms of `E₁ = E_1(s₀, q)`:
///
/// ```text
/// sup ‖x_n − q‖²_M          ≤ 2E₁/(s₀(e − s₀))
/// sup ν_n⟨v_n, x_n − q⟩_M   ≤ E₁/s₀
/// Σ ν_{n+1}²‖v̇_{n+1}‖²_M     ≤ wE₁/(1 − w)²
/// Σ ν_{n+1}‖ẋ_{n+1}‖²_M      ≤ E₁/(e − s₀)
/// Σ ⟨v_n, x_n − q⟩_M        ≤ E₁/(s₀(s₀ − s₁))
/// ```
pub fn summability_bounds(
    history: &[StepRecord],
    params: &CrifbaParams,
    q: &Vector,
) -> Result<Vec<CheckReport>> {
    const NAMES: [&str; 5] = [
        "distance_bound",
        "weighted_gap_bound",
        "weighted_increment_bound",
        "weighted_velocity_bound",
        "anchor_gap_bound",
    ];
    let Some(first) = history.iter().find(|r| r.n == 1) else {
        return Ok(NAMES
            .iter()
            .map(|n| CheckReport::skipped(n, "history lacks n = 1"))
            .collect());
    };
    let sc = params.schedule;
    let (e, s0, s1, w) = (sc.e, sc.s0, sc.s1, params.w);
    let m = &params.metric;
    let e1 = energy(params, &first.x, &first.x_prev, &first.v, 1, s0, q)?;
    let recs = || history.iter().filter(|r| r.n >= 1);

    let mut dist = Accumulator::new(NAMES[0], Tolerance::DEFAULT);
    let mut gap = Accumulator::new(NAMES[1], Tolerance::DEFAULT);
    let b0 = 2.0 * e1 / (s0 * (e - s0));
    let b1 = e1 / s0;
    for r in recs() {
        dist.push(r.n, m.norm2(&(&r.x - q)) - b0, b0);
        gap.push(r.n, sc.nu(r.n) * m.inner(&r.v, &(&r.x - q)) - b1, b1);
    }
    let n_last = recs().map(|r| r.n).max().unwrap_or(1);
    let sum_report = |name: &str, total: f64, bound: f64| {
        let mut acc = Accumulator::new(name, Tolerance::DEFAULT);
        acc.push(n_last, total - bound, bound);
        acc.finish()
            .with_note(format!("partial sum {total:.6e}, bound {bound:.6e}"))
    };
    let incr: f64 = consecutive(history)
        .filter(|(c, _)| c.n >= 1)
        .map(|(c, nx)| sc.nu(c.n + 1).powi(2) * m.norm2(&(&nx.v - &c.v)))
        .sum();
    let vel: f64 = recs()
        .map(|r| sc.nu(r.n + 1) * m.norm2(&(&r.x_next - &r.x)))
        .sum();
    let anchor: f64 = recs().map(|r| m.inner(&r.v, &(&r.x - q))).sum();
    Ok(vec![
        dist.finish(),
        gap.finish(),
        sum_report(NAMES[2], incr, w * e1 / (1.0 - w).powi(2)),
        sum_report(NAMES[3], vel, e1 / (e - s0)),
        sum_report(NAMES[4], anchor, e1 / (s0 * (s0 - s1))),
    ])
}
