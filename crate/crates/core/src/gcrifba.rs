//! CRIFBA on the weighted product space `H^p` for `0 ∈ B(x) + Σ_k A_k(x)`.
//!
//! With `z̄ = Σρ_k z_k` the iteration map is
//!
//! ```text
//! T(z)_k = J_{(λ/ρ_k)A_k}(2z̄ − λB(z̄) − z_k) − z̄ + z_k
//! ```
//!
//! and a step reads
//!
//! ```text
//! z_n       = ζ_n + θ_n(ζ_n − ζ_{n−1}) + γ_n(z_{n−1} − ζ_n)
//! u_n       = Σρ_k z_{n,k}
//! ζ_{n+1,k} = z_{n,k} + w(J_{(λ/ρ_k)A_k}(2u_n − λB(u_n) − z_{n,k}) − u_n)
//! x_n       = Σρ_k ζ_{n,k}
//! ```

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::crifba::{RunStatus, Schedule, StopRule, Stride};
use crate::error::{Error, Result};
use crate::metric::{all_finite, check_dim, Vector};
use crate::operators::{CocoerciveOperator, MonotoneOperator};

const WEIGHT_SUM_TOL: f64 = 1e-12;

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one block is required".into(),
        ));
    }
    if let Some(r) = weights.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "weight {r} outside (0, 1]"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Equal weights `1/p`.
pub fn uniform_weights(p: usize) -> Vec<f64> {
    vec![1.0 / p as f64; p]
}

/// An element of `H^p` with its weights `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    blocks: Vec<Vector>,
    weights: Arc<[f64]>,
}

impl ProductVector {
    pub fn new(blocks: Vec<Vector>, weights: &[f64]) -> Result<Self> {
        check_weights(weights)?;
        if blocks.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: blocks.len(),
            });
        }
        let d = blocks[0].len();
        for b in &blocks {
            check_dim(d, b)?;
        }
        Ok(ProductVector {
            blocks,
            weights: weights.into(),
        })
    }

    /// `(x, …, x)`.
    pub fn diagonal(x: &Vector, weights: &[f64]) -> Result<Self> {
        Self::new(vec![x.clone(); weights.len()], weights)
    }

    fn with_blocks(&self, blocks: Vec<Vector>) -> Self {
        ProductVector {
            blocks,
            weights: self.weights.clone(),
        }
    }

    pub fn blocks(&self) -> &[Vector] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].len()
    }

    /// `Σρ_k z_k`.
    pub fn mean(&self) -> Vector {
        let mut out = &self.blocks[0] * self.weights[0];
        for (b, &r) in self.blocks.iter().zip(self.weights.iter()).skip(1) {
            out += b * r;
        }
        out
    }

    /// `Σρ_k⟨x_k, y_k⟩`.
    pub fn inner(&self, other: &ProductVector) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .zip(self.weights.iter())
            .map(|((a, b), &r)| r * a.dot(b))
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.inner(self)
    }

    fn zip_with(
        &self,
        other: &ProductVector,
        f: impl Fn(&Vector, &Vector) -> Vector,
    ) -> ProductVector {
        self.with_blocks(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }
}

impl Add for &ProductVector {
    type Output = ProductVector;
    fn add(self, rhs: &ProductVector) -> ProductVector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ProductVector {
    type Output = ProductVector;
    fn sub(self, rhs: &ProductVector) -> ProductVector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ProductVector {
    type Output = ProductVector;
    fn mul(self, c: f64) -> ProductVector {
        self.with_blocks(self.blocks.iter().map(|b| b * c).collect())
    }
}

/// Orthogonal projection onto the diagonal in the weighted inner product.
pub fn diag_project(z: &ProductVector) -> ProductVector {
    let m = z.mean();
    z.with_blocks(vec![m; z.p()])
}

/// `0 ∈ B(x) + Σ_k A_k(x)`.
#[derive(Debug, Clone)]
pub struct SumProblem {
    pub a: Vec<Arc<dyn MonotoneOperator>>,
    pub b: Arc<dyn CocoerciveOperator>,
}

impl SumProblem {
    pub fn new(a: Vec<Arc<dyn MonotoneOperator>>, b: Arc<dyn CocoerciveOperator>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one operator A_k is required".into(),
            ));
        }
        Ok(SumProblem { a, b })
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Co-coercivity modulus `β = 1/‖L‖`.
    pub fn beta(&self) -> f64 {
        1.0 / self.b.lipschitz()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcrifbaParams {
    pub schedule: Schedule,
    pub lambda: f64,
    pub w: f64,
    pub beta: f64,
    pub weights: Vec<f64>,
}

impl GcrifbaParams {
    /// `λ = 0.9·4w(1−w)β`, equal weights.
    pub fn with_defaults(schedule: Schedule, w: f64, problem: &SumProblem) -> Self {
        let beta = problem.beta();
        GcrifbaParams {
            schedule,
            lambda: 0.9 * 4.0 * w * (1.0 - w) * beta,
            w,
            beta,
            weights: uniform_weights(problem.p()),
        }
    }

    /// Every violated constraint; empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.schedule.violations();
        if let Some(v) = crate::crifba::relaxation_violation(self.w) {
            out.push(v);
        }
        if !(self.beta > 0.0) {
            out.push(format!("beta > 0 violated (beta = {})", self.beta));
        }
        let bound = 4.0 * self.w * (1.0 - self.w) * self.beta;
        if !(self.lambda > 0.0 && self.lambda < bound) {
            out.push(format!(
                "0 < lambda < 4w(1-w)beta violated (lambda = {}, bound = {bound})",
                self.lambda
            ));
        }
        if let Err(e) = check_weights(&self.weights) {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Infeasible(v.join("; ")))
        }
    }
}

fn block_error(k: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Block {
        block: k,
        message: e.to_string(),
    }
}

/// Block `k` of the output is `J_{(λ/ρ_k)A_k}(2z̄ − λB(z̄) − z_k) − z̄ + z_k`.
pub fn apply_t(z: &ProductVector, problem: &SumProblem, lambda: f64) -> Result<ProductVector> {
    if z.p() != problem.p() {
        return Err(Error::DimensionMismatch {
            expected: problem.p(),
            found: z.p(),
        });
    }
    let zbar = z.mean();
    let u = &zbar * 2.0 - problem.b.apply(&zbar) * lambda;
    let mut blocks = Vec::with_capacity(z.p());
    for (k, (zk, a)) in z.blocks.iter().zip(&problem.a).enumerate() {
        let j = a
            .resolvent(lambda / z.weights[k], &(&u - zk))
            .map_err(block_error(k))?;
        blocks.push(j - &zbar + zk);
    }
    Ok(z.with_blocks(blocks))
}

/// `(ζ_{n−1}, ζ_n, z_{n−1})` at counter `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcrifbaState {
    pub n: u64,
    pub zeta_prev: ProductVector,
    pub zeta: ProductVector,
    pub z_prev: ProductVector,
}

impl GcrifbaState {
    pub fn cold_start(x0: &Vector, weights: &[f64]) -> Result<Self> {
        let d = ProductVector::diagonal(x0, weights)?;
        Ok(GcrifbaState {
            n: 0,
            zeta_prev: d.clone(),
            zeta: d.clone(),
            z_prev: d,
        })
    }

    /// `x_n = Σρ_kζ_{n,k}`.
    pub fn x(&self) -> Vector {
        self.zeta.mean()
    }
}

/// One step; also returns `z_n`.
pub fn gcrifba_step(
    problem: &SumProblem,
    params: &GcrifbaParams,
    state: &GcrifbaState,
) -> Result<(GcrifbaState, ProductVector)> {
    let c = params.schedule.at(state.n);
    let zeta = &state.zeta;
    let z =
        &(zeta + &(&(zeta - &state.zeta_prev) * c.theta)) + &(&(&state.z_prev - zeta) * c.gamma);
    let u = z.mean();
    let fwd = &u * 2.0 - problem.b.apply(&u) * params.lambda;
    let mut blocks = Vec::with_capacity(z.p());
    for (k, (zk, a)) in z.blocks.iter().zip(&problem.a).enumerate() {
        let j = a
            .resolvent(params.lambda / z.weights[k], &(&fwd - zk))
            .map_err(block_error(k))?;
        blocks.push(zk + (j - &u) * params.w);
    }
    if !blocks.iter().all(all_finite) {
        return Err(Error::NonFinite(format!(
            "zeta_{} is not finite",
            state.n + 1
        )));
    }
    let next = GcrifbaState {
        n: state.n + 1,
        zeta_prev: state.zeta.clone(),
        zeta: z.with_blocks(blocks),
        z_prev: z.clone(),
    };
    Ok((next, z))
}

/// Trace row, all norms in `H^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcrifbaRecord {
    pub n: u64,
    /// `‖ζ_n − ζ_{n−1}‖²`
    pub zeta_vel2: f64,
    /// `‖ζ_{n+1} − z_n‖²`
    pub corr2: f64,
    /// `‖T(ζ_n) − ζ_n‖²`
    pub fpr2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcrifbaOptions {
    pub stop: StopRule,
    pub stride: Stride,
    pub record_iterates: bool,
    pub divergence_bound: f64,
}

impl Default for GcrifbaOptions {
    fn default() -> Self {
        GcrifbaOptions {
            stop: StopRule::default(),
            stride: Stride::Auto,
            record_iterates: false,
            divergence_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GcrifbaOutput {
    pub solution: Vector,
    pub iterations: u64,
    pub status: RunStatus,
    pub final_fpr2: f64,
    pub trace: Vec<GcrifbaRecord>,
    /// `x_n` for every `n`, when requested.
    pub iterates: Option<Vec<Vector>>,
}

/// Runs until `‖T(ζ_n) − ζ_n‖ ≤ tol` or the iteration cap.
pub fn run_gcrifba(
    problem: &SumProblem,
    params: &GcrifbaParams,
    x0: &Vector,
    options: &GcrifbaOptions,
) -> Result<GcrifbaOutput> {
    check_dim(problem.dim(), x0)?;
    if params.weights.len() != problem.p() {
        return Err(Error::DimensionMismatch {
            expected: problem.p(),
            found: params.weights.len(),
        });
    }
    params.validate()?;
    let mut state = GcrifbaState::cold_start(x0, &params.weights)?;
    let mut trace = Vec::new();
    let mut iterates = options.record_iterates.then(Vec::new);
    let mut final_fpr2;
    let status = loop {
        let fpr2 = (&apply_t(&state.zeta, problem, params.lambda)? - &state.zeta).norm2();
        final_fpr2 = fpr2;
        if let Some(it) = iterates.as_mut() {
            it.push(state.x());
        }
        if !fpr2.is_finite() {
            break RunStatus::NonFinite { n: state.n };
        }
        if fpr2.sqrt() <= options.stop.tol {
            break RunStatus::Converged;
        }
        if state.n >= options.stop.max_iter {
            break RunStatus::MaxIterations;
        }
        let (next, z) = match gcrifba_step(problem, params, &state) {
            Ok(r) => r,
            Err(Error::NonFinite(_)) => break RunStatus::NonFinite { n: state.n + 1 },
            Err(e) => return Err(e),
        };
        if options.stride.records(state.n) {
            trace.push(GcrifbaRecord {
                n: state.n,
                zeta_vel2: (&state.zeta - &state.zeta_prev).norm2(),
                corr2: (&next.zeta - &z).norm2(),
                fpr2,
            });
        }
        state = next;
        if state.x().norm() > options.divergence_bound {
            break RunStatus::Diverged { n: state.n };
        }
    };
    Ok(GcrifbaOutput {
        solution: state.x(),
        iterations: state.n,
        status,
        final_fpr2,
        trace,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::vector;
    use crate::operators::{AffineMap, L1Norm, ZeroOperator};
    use crate::Matrix;

    fn pv(blocks: &[f64], weights: &[f64]) -> ProductVector {
        ProductVector::new(blocks.iter().map(|&b| vector(&[b])).collect(), weights).unwrap()
    }

    #[test]
    fn projection_examples() {
        let p = diag_project(&pv(&[1.0, 3.0], &[0.5, 0.5]));
        assert_eq!(p, pv(&[2.0, 2.0], &[0.5, 0.5]));
        assert_eq!(diag_project(&p), p);
        let p = diag_project(&pv(&[10.0, 0.0, 2.0], &[0.2, 0.3, 0.5]));
        for b in p.blocks() {
            assert!((b[0] - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_are_validated() {
        assert!(ProductVector::new(vec![vector(&[1.0])], &[1.0]).is_ok());
        assert!(ProductVector::new(vec![vector(&[1.0]); 2], &[0.5, 0.6]).is_err());
        assert!(ProductVector::new(vec![vector(&[1.0]); 2], &[1.5, -0.5]).is_err());
        assert!(
            ProductVector::new(vec![vector(&[1.0]), vector(&[1.0, 2.0])], &[0.5, 0.5]).is_err()
        );
    }

    #[test]
    fn zero_operators_diagonalize() {
        let zero_b = AffineMap::new(Matrix::zeros(1, 1), vector(&[0.0])).unwrap();
        let problem = SumProblem::new(
            vec![Arc::new(ZeroOperator), Arc::new(ZeroOperator)],
            Arc::new(zero_b),
        )
        .unwrap();
        let z = pv(&[1.0, 4.0], &[0.25, 0.75]);
        let t = apply_t(&z, &problem, 0.7).unwrap();
        assert_eq!(t, diag_project(&z));
    }

    #[test]
    fn single_block_scalar_hand_value() {
        // p = 1, A = ∂|·|, B(x) = x − 3, λ = 0.5, z = 2:
        // J_{0.5|·|}(2·2 − 0.5·(−1) − 2) = soft(2.5, 0.5) = 2 → T = 2 − 2 + 2 = 2
        let b = AffineMap::new(Matrix::identity(1, 1), vector(&[-3.0])).unwrap();
        let problem =
            SumProblem::new(vec![Arc::new(L1Norm::new(1.0).unwrap())], Arc::new(b)).unwrap();
        let t = apply_t(&pv(&[2.0], &[1.0]), &problem, 0.5).unwrap();
        assert_eq!(t.blocks()[0][0], 2.0);
        // z = 0.2: soft(0.4 + 1.4 − 0.2, 0.5) = 1.1 → T = 1.1
        let t = apply_t(&pv(&[0.2], &[1.0]), &problem, 0.5).unwrap();
        assert!((t.blocks()[0][0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn parameter_constraints() {
        let b = AffineMap::new(Matrix::identity(1, 1), vector(&[0.0])).unwrap();
        let problem = SumProblem::new(vec![Arc::new(ZeroOperator)], Arc::new(b)).unwrap();
        let mut p = GcrifbaParams::with_defaults(Schedule::default(), 0.5, &problem);
        assert!((p.lambda - 0.9).abs() < 1e-15);
        assert!(p.validate().is_ok());
        p.lambda = 1.0;
        assert!(p.violations().iter().any(|v| v.contains("4w(1-w)beta")));
    }
}
