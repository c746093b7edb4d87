use serde::{Deserialize, Serialize};

use super::params::CrifbaParams;
use super::solver::InclusionProblem;
use crate::error::{Error, Result};
use crate::metric::{check_dim, Vector};

/// One row of the diagnostics trace. Optional cells are left empty in CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub n: u64,
    /// `‖x_{n+1} − x_n‖²_M`
    pub vel2: f64,
    /// `‖v_n‖²_M`
    pub vn2: Option<f64>,
    /// `‖G(x_n)‖²_M`
    pub res2: f64,
    /// `E_n(s₀, q)`
    pub energy: Option<f64>,
    /// `‖y_n*‖_M`
    pub ystar_norm: Option<f64>,
}

/// The Lyapunov sequence
///
/// ```text
/// E_n(s,q) = ½‖s(q − x_n) − ν_n ẋ_n‖²_M + ½s(e − s)‖x_n − q‖²_M + s(e + ν_n)⟨v_n, x_n − q⟩_M
/// ```
///
/// with `ẋ_n = x_n − x_{n−1}`.
pub fn energy(
    params: &CrifbaParams,
    x: &Vector,
    x_prev: &Vector,
    v: &Vector,
    n: u64,
    s: f64,
    q: &Vector,
) -> Result<f64> {
    let e = params.schedule.e;
    if !(s > 0.0 && s <= e) {
        return Err(Error::InvalidParameter(format!(
            "s must lie in (0, {e}], got {s}"
        )));
    }
    let d = params.dim();
    for u in [x, x_prev, v, q] {
        check_dim(d, u)?;
    }
    let m = &params.metric;
    let nu = params.schedule.nu(n);
    let dq = x - q;
    let first = -&dq * s - (x - x_prev) * nu;
    Ok(0.5 * m.norm2(&first) + 0.5 * s * (e - s) * m.norm2(&dq) + s * (e + nu) * m.inner(v, &dq))
}

/// `y_n = z_{n−1} − v_n/w` and `y_n* = (λw)⁻¹Mv_n + B(y_n) − B(z_{n−1})`.
///
/// `b_zprev` is `B(z_{n−1})`.
pub fn graph_sequence(
    problem: &InclusionProblem,
    params: &CrifbaParams,
    z_prev: &Vector,
    v: &Vector,
    b_zprev: &Vector,
) -> (Vector, Vector) {
    let y = z_prev - v / params.w;
    let ystar = params.metric.mul(v) / (params.lambda * params.w) + problem.b.apply(&y) - b_zprev;
    (y, ystar)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::crifba::Schedule;
    use crate::metric::{vector, Matrix, SpdMap};
    use crate::operators::{AffineMap, BoxNormalCone};

    fn params(w: f64) -> CrifbaParams {
        CrifbaParams::new(
            Schedule::default(),
            0.5,
            w,
            SpdMap::identity(2),
            SpdMap::identity(2),
            None,
        )
        .unwrap()
    }

    #[test]
    fn energy_vanishes_at_rest() {
        let q = vector(&[1.0, -2.0]);
        let z = vector(&[0.0, 0.0]);
        assert_eq!(energy(&params(0.5), &q, &q, &z, 7, 2.5, &q).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_bad_s() {
        let z = vector(&[0.0, 0.0]);
        assert!(energy(&params(0.5), &z, &z, &z, 0, 0.0, &z).is_err());
        assert!(energy(&params(0.5), &z, &z, &z, 0, 3.5, &z).is_err());
        assert!(energy(&params(0.5), &z, &z, &z, 0, 3.0, &z).is_ok());
    }

    #[test]
    fn energy_by_hand() {
        // n = 2: ν = 2; s = e = 3 drops the middle term
        let p = params(0.5);
        let x = vector(&[1.0, 0.0]);
        let xp = vector(&[0.5, 0.0]);
        let v = vector(&[0.0, 1.0]);
        let q = vector(&[0.0, 0.0]);
        // first = −3·(1,0) − 2·(0.5,0) = (−4, 0) → 8; third = 3·5·0 = 0
        assert_eq!(energy(&p, &x, &xp, &v, 2, 3.0, &q).unwrap(), 8.0);
        // s = 1: first = (−2, 0) → 2; middle ½·1·2·1 = 1
        assert_eq!(energy(&p, &x, &xp, &v, 2, 1.0, &q).unwrap(), 3.0);
    }

    #[test]
    fn graph_sequence_cases() {
        let b = AffineMap::new(Matrix::identity(2, 2), vector(&[-1.0, 0.0])).unwrap();
        let problem = InclusionProblem::new(Arc::new(BoxNormalCone::nonnegative()), Arc::new(b));
        let z = vector(&[2.0, 3.0]);
        let bz = problem.b.apply(&z);
        let (y, ys) = graph_sequence(&problem, &params(0.5), &z, &vector(&[0.0, 0.0]), &bz);
        assert_eq!(y, z);
        assert_eq!(ys, vector(&[0.0, 0.0]));

        let (y, ys) = graph_sequence(&problem, &params(0.5), &z, &vector(&[1.0, 0.0]), &bz);
        assert_eq!(y, vector(&[0.0, 3.0]));
        // (λw)⁻¹v + (y − z) = 4·(1,0) + (−2, 0)
        assert_eq!(ys, vector(&[2.0, 0.0]));
    }
}
