use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{consecutive, Accumulator, CheckReport, Tolerance};
use crate::crifba::{CrifbaParams, Schedule, StepRecord};
use crate::metric::{Matrix, SpdMap, Vector};

fn iterate_scale(vs: &[&Vector]) -> f64 {
    1.0 + vs.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `v_{n+1} = λw·G(z_n)` at every consecutive pair of records.
pub fn check_correction_identity(
    history: &[StepRecord],
    params: &CrifbaParams,
    tol: f64,
) -> CheckReport {
    let mut acc = Accumulator::new("correction_identity", Tolerance::relative(tol));
    let c = params.lambda * params.w;
    for (cur, next) in consecutive(history) {
        let r = (&next.v - &cur.g_z * c).norm();
        acc.push(next.n, r, iterate_scale(&[&cur.z, &cur.x_next]));
    }
    acc.finish()
}

/// `ẋ_{n+1} + v_{n+1} = θ_nẋ_n + γ_nv_n`, with `θ_n, γ_n` recomputed from
/// the schedule rather than read from the record.
pub fn check_momentum_identity(
    history: &[StepRecord],
    params: &CrifbaParams,
    tol: f64,
) -> CheckReport {
    let mut acc = Accumulator::new("momentum_identity", Tolerance::relative(tol));
    for (cur, next) in consecutive(history) {
        let c = params.schedule.at(cur.n);
        let lhs = (&cur.x_next - &cur.x) + &next.v;
        let rhs = (&cur.x - &cur.x_prev) * c.theta + &cur.v * c.gamma;
        acc.push(
            cur.n,
            (lhs - rhs).norm(),
            iterate_scale(&[&cur.x, &cur.x_prev, &cur.z, &cur.x_next]),
        );
    }
    acc.finish()
}

/// `(e + ν_{n+1})θ_n = ν_n` for `n < count`.
pub fn check_schedule_identity(schedule: &Schedule, count: u64) -> CheckReport {
    let mut acc = Accumulator::new("schedule_identity", Tolerance::DEFAULT);
    for n in 0..count {
        let c = schedule.at(n);
        acc.push(n, (c.tau * c.theta - c.nu).abs(), c.nu.abs());
    }
    acc.finish()
}

/// One synthetic instance of the discrete Lyapunov identity: sequences
/// satisfying `ẋ_{n+1} − θ_nẋ_n + d_n = 0` with `(e + ν_{n+1})θ_n = ν_n`.
#[derive(Debug, Clone)]
pub struct LyapunovInstance {
    pub metric: SpdMap,
    pub e: f64,
    pub nu: f64,
    pub nu_next: f64,
    pub s: f64,
    pub q: Vector,
    pub x_prev: Vector,
    pub x: Vector,
    pub d: Vector,
}

impl LyapunovInstance {
    pub fn random(rng: &mut impl Rng, dim: usize) -> Self {
        let a = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let m = &a * a.transpose() + Matrix::identity(dim, dim) * 0.1;
        let e = rng.gen_range(0.5..5.0);
        let nu = rng.gen_range(0.0..50.0);
        let nu_next = nu + rng.gen_range(0.0..3.0);
        let s = e * rng.gen_range(0.0f64..1.0).max(1e-3);
        let mut vec = || Vector::from_fn(dim, |_, _| rng.gen_range(-3.0..3.0));
        LyapunovInstance {
            metric: SpdMap::new(m).expect("shifted Gram matrix is SPD"),
            e,
            nu,
            nu_next,
            s,
            q: vec(),
            x_prev: vec(),
            x: vec(),
            d: vec(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.nu / (self.e + self.nu_next)
    }

    pub fn x_next(&self) -> Vector {
        &self.x + (&self.x - &self.x_prev) * self.theta() - &self.d
    }

    fn f(&self, nu: f64, x: &Vector, xdot: &Vector) -> f64 {
        let m = &self.metric;
        let first = (&self.q - x) * self.s - xdot * nu;
        0.5 * m.norm2(&first) + 0.5 * self.s * (self.e - self.s) * m.norm2(&(x - &self.q))
    }

    /// Left side minus right side, and the sum of absolute terms.
    pub fn residual(&self) -> (f64, f64) {
        self.residual_at(&self.x_next())
    }

    fn residual_at(&self, x_next: &Vector) -> (f64, f64) {
        let m = &self.metric;
        let (e, s, tau) = (self.e, self.s, self.e + self.nu_next);
        let xdot = &self.x - &self.x_prev;
        let xdot_next = x_next - &self.x;
        let f_dot = self.f(self.nu_next, x_next, &xdot_next) - self.f(self.nu, &self.x, &xdot);
        let terms = [
            f_dot,
            0.5 * tau * tau * m.norm2(&(&xdot_next - &xdot * self.theta())),
            s * tau * m.inner(&self.d, &(x_next - &self.q)),
            tau * (e - s + self.nu_next) * m.inner(&self.d, &xdot_next),
            0.5 * (e - s) * (e + 2.0 * self.nu_next) * m.norm2(&xdot_next),
        ];
        let scale = terms.iter().map(|t| t.abs()).sum();
        (terms.iter().sum(), scale)
    }
}

/// The discrete Lyapunov identity on `count` random instances.
pub fn check_lyapunov_identity(count: usize, dim: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Accumulator::new("lyapunov_identity", Tolerance::DEFAULT);
    for i in 0..count {
        let inst = LyapunovInstance::random(&mut rng, dim);
        let (r, scale) = inst.residual();
        acc.push(i as u64, r.abs(), scale);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::vector;

    #[test]
    fn lyapunov_identity_holds() {
        let r = check_lyapunov_identity(100, 5, 7);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.n_checked, 100);
    }

    #[test]
    fn lyapunov_identity_at_rest() {
        let x = vector(&[1.0, 2.0]);
        let inst = LyapunovInstance {
            metric: SpdMap::identity(2),
            e: 3.0,
            nu: 0.0,
            nu_next: 1.0,
            s: 3.0,
            q: vector(&[0.0, 0.0]),
            x_prev: x.clone(),
            x,
            d: vector(&[0.0, 0.0]),
        };
        assert_eq!(inst.residual(), (0.0, 0.0));
    }

    #[test]
    fn lyapunov_identity_detects_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = LyapunovInstance::random(&mut rng, 3);
        let (r, scale) = inst.residual_at(&inst.x_next().add_scalar(1e-3));
        assert!(r.abs() > 1e-8 * scale);
    }

    #[test]
    fn schedule_identity_holds() {
        assert!(check_schedule_identity(&Schedule::default(), 100_000).passed);
        let odd = Schedule {
            e: 7.3,
            s0: 1.1,
            s1: 0.3,
            nu0: 2.9,
        };
        assert!(check_schedule_identity(&odd, 10_000).passed);
    }
}
