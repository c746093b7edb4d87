//! The corrected relaxed inertial forward-backward algorithm (CRIFBA) for
//! `0 ∈ A(x) + B(x)` with `A` maximally monotone and `B` co-coercive.
//!
//! One step, given `x_{n−1}`, `x_n` and `z_{n−1}`:
//!
//! ```text
//! v_n     = z_{n−1} − x_n
//! z_n     = x_n + θ_n (x_n − x_{n−1}) + γ_n v_n
//! x_{n+1} = (1 − w) z_n + w J_{λM⁻¹A}(z_n − λ M⁻¹ B(z_n))
//! ```
//!
//! with `ν_n = s₁n + ν₀`, `θ_n = 1 − (e + s₁)/(e + ν_{n+1})` and
//! `γ_n = 1 − s₀/(e + ν_{n+1})`.

mod diagnostics;
mod params;
mod solver;

pub use diagnostics::{energy, graph_sequence, DiagnosticsRecord};
pub(crate) use params::relaxation_violation;
pub use params::{
    Coefficients, Condition1, CoreValidation, CrifbaParams, MetricReport, MetricSelector, Schedule,
    DEFAULT_W,
};
pub use solver::{
    crifba_step, residual_g, run, run_from_state, CrifbaState, InclusionProblem, RunOptions,
    RunOutput, RunStatus, StepRecord, StepTrace, StopRule, Stride,
};
