//! Maximally monotone operators (seen through their resolvents), co-coercive
//! single-valued maps, and a small catalog of proximal operators.

use std::fmt;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::metric::{check_dim, max_eigenvalue, min_eigenvalue, Matrix, SpdMap, Vector};

/// Slack allowed in firm non-expansiveness and co-coercivity checks.
pub const MONOTONE_SLACK: f64 = 1e-10;

const PROX_RESIDUAL_TOL: f64 = 1e-10;

/// A maximally monotone operator `A`, accessed only through `J_{λA}`.
pub trait MonotoneOperator: fmt::Debug + Send + Sync {
    fn label(&self) -> String;

    /// `J_{λA}(x) = (I + λA)⁻¹ x`.
    fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector>;

    /// Whether `(x, xstar)` lies (within `tol`) in the graph of `A`. `None`
    /// when the operator cannot answer.
    fn graph_member(&self, _x: &Vector, _xstar: &Vector, _tol: f64) -> Option<bool> {
        None
    }

    /// `(Q, b)` when `A(x) = Qx + b`.
    fn affine_parts(&self) -> Option<(&Matrix, &Vector)> {
        None
    }

    /// Closed-form `(M + λA)⁻¹ M u` for metrics the operator knows about.
    fn metric_resolvent(
        &self,
        _metric: &SpdMap,
        _lambda: f64,
        _u: &Vector,
    ) -> Option<Result<Vector>> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// A single-valued map co-coercive with respect to an SPD map `L`:
/// `⟨Bx − By, x − y⟩ ≥ ‖Bx − By‖²_{L⁻¹}`.
pub trait CocoerciveOperator: fmt::Debug + Send + Sync {
    fn label(&self) -> String;

    fn apply(&self, x: &Vector) -> Vector;

    /// The certificate `L`.
    fn certificate(&self) -> &SpdMap;

    fn dim(&self) -> usize {
        self.certificate().dim()
    }

    /// Lipschitz constant implied by the certificate, `‖L‖`.
    fn lipschitz(&self) -> f64 {
        self.certificate().norm()
    }

    /// `J_{λB}` when available in closed form (needed by Douglas–Rachford).
    fn resolvent(&self, _lambda: f64, _x: &Vector) -> Option<Vector> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "resolvent index must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Soft thresholding: `sign(x_i)·max(|x_i| − λ, 0)`.
pub fn prox_l1(lambda: f64, x: &Vector) -> Vector {
    x.map(|v| v.signum() * (v.abs() - lambda).max(0.0))
}

/// Componentwise clamp onto `[lo, hi]`; the resolvent of the normal cone of
/// the box.
pub fn prox_box(lo: f64, hi: f64, x: &Vector) -> Result<Vector> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidParameter(format!("empty box [{lo}, {hi}]")));
    }
    Ok(x.map(|v| v.clamp(lo, hi)))
}

/// Resolvent of the affine monotone map `A(u) = Qu + b`:
/// `(I + λQ)⁻¹(x − λb)`, checked by plugging back.
pub fn prox_quadratic(lambda: f64, q: &Matrix, b: &Vector, x: &Vector) -> Result<Vector> {
    check_lambda(lambda)?;
    let d = x.len();
    if q.nrows() != d || q.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: q.nrows(),
        });
    }
    check_dim(d, b)?;
    let system = Matrix::identity(d, d) + q * lambda;
    let rhs = x - b * lambda;
    let chol = Cholesky::new(system.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("I + λQ is not positive definite; Q is not PSD".into())
    })?;
    let p = chol.solve(&rhs);
    let residual = (&system * &p - &rhs).norm();
    if residual > PROX_RESIDUAL_TOL * (1.0 + rhs.norm()) {
        return Err(Error::NotPositiveDefinite(format!(
            "quadratic prox residual {residual:.3e}"
        )));
    }
    Ok(p)
}

/// The point `p` with `M p + λ a = M u` for some `a ∈ A(p)`, i.e.
/// `J_{λM⁻¹A}(u)`.
///
/// With `M = I` this dispatches to `A.resolvent`. Otherwise it uses a closed
/// form supplied by the operator, or solves the linear system when `A` is
/// affine. Anything else is rejected.
pub fn generalized_resolvent(
    a: &dyn MonotoneOperator,
    metric: &SpdMap,
    lambda: f64,
    u: &Vector,
) -> Result<Vector> {
    check_lambda(lambda)?;
    if metric.is_identity() {
        return a.resolvent(lambda, u);
    }
    check_dim(metric.dim(), u)?;
    if let Some(result) = a.metric_resolvent(metric, lambda, u) {
        return result;
    }
    if let Some((q, b)) = a.affine_parts() {
        let system = metric.matrix() + q * lambda;
        let rhs = metric.mul(u) - b * lambda;
        let chol = Cholesky::new(system)
            .ok_or_else(|| Error::NotPositiveDefinite("M + λQ is not positive definite".into()))?;
        return Ok(chol.solve(&rhs));
    }
    Err(Error::Unsupported(format!(
        "no generalized resolvent for `{}` under a non-identity metric",
        a.label()
    )))
}

/// The zero operator; its resolvent is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOperator;

impl MonotoneOperator for ZeroOperator {
    fn label(&self) -> String {
        "zero".into()
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        check_lambda(lambda)?;
        Ok(x.clone())
    }

    fn graph_member(&self, _x: &Vector, xstar: &Vector, tol: f64) -> Option<bool> {
        Some(xstar.amax() <= tol)
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// The diagonal of `M` when every off-diagonal entry is zero.
fn diagonal_entries(metric: &SpdMap) -> Option<Vector> {
    let m = metric.matrix();
    let d = m.nrows();
    let off_zero = (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)] == 0.0));
    off_zero.then(|| m.diagonal())
}

/// `∂(weight·‖·‖₁)`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("l1 weight {weight}")));
        }
        Ok(L1Norm { weight })
    }
}

impl MonotoneOperator for L1Norm {
    fn label(&self) -> String {
        format!("l1(weight={})", self.weight)
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        check_lambda(lambda)?;
        Ok(prox_l1(lambda * self.weight, x))
    }

    /// Diagonal metrics only: coordinate `i` uses threshold `λ·weight/m_i`.
    fn metric_resolvent(&self, metric: &SpdMap, lambda: f64, u: &Vector) -> Option<Result<Vector>> {
        let diag = diagonal_entries(metric)?;
        Some(check_lambda(lambda).and_then(|_| {
            check_dim(diag.len(), u)?;
            Ok(u.zip_map(&diag, |ui, mi| {
                let t = lambda * self.weight / mi;
                ui.signum() * (ui.abs() - t).max(0.0)
            }))
        }))
    }

    fn graph_member(&self, x: &Vector, xstar: &Vector, tol: f64) -> Option<bool> {
        if x.len() != xstar.len() {
            return Some(false);
        }
        let w = self.weight;
        Some(x.iter().zip(xstar.iter()).all(|(&xi, &si)| {
            if xi.abs() <= tol {
                si.abs() <= w + tol
            } else {
                (si - w * xi.signum()).abs() <= tol
            }
        }))
    }

    fn is_zero(&self) -> bool {
        self.weight == 0.0
    }
}

/// Normal cone of the box `[lo, hi]^d`; either bound may be infinite.
#[derive(Debug, Clone, Copy)]
pub struct BoxNormalCone {
    pub lo: f64,
    pub hi: f64,
}

impl BoxNormalCone {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidParameter(format!("empty box [{lo}, {hi}]")));
        }
        Ok(BoxNormalCone { lo, hi })
    }

    pub fn nonnegative() -> Self {
        BoxNormalCone {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }
}

impl MonotoneOperator for BoxNormalCone {
    fn label(&self) -> String {
        format!("box[{}, {}]", self.lo, self.hi)
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        check_lambda(lambda)?;
        prox_box(self.lo, self.hi, x)
    }

    /// For a diagonal metric the `M`-projection onto a box is the plain one.
    fn metric_resolvent(&self, metric: &SpdMap, lambda: f64, u: &Vector) -> Option<Result<Vector>> {
        diagonal_entries(metric)?;
        Some(check_lambda(lambda).and_then(|_| {
            check_dim(metric.dim(), u)?;
            prox_box(self.lo, self.hi, u)
        }))
    }

    fn graph_member(&self, x: &Vector, xstar: &Vector, tol: f64) -> Option<bool> {
        if x.len() != xstar.len() {
            return Some(false);
        }
        Some(x.iter().zip(xstar.iter()).all(|(&xi, &si)| {
            if xi < self.lo - tol || xi > self.hi + tol {
                return false;
            }
            let at_lo = xi <= self.lo + tol;
            let at_hi = xi >= self.hi - tol;
            match (at_lo, at_hi) {
                (true, true) => true,
                (true, false) => si <= tol,
                (false, true) => si >= -tol,
                (false, false) => si.abs() <= tol,
            }
        }))
    }
}

/// The affine monotone map `A(u) = Qu + b` with `Q` symmetric PSD.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    q: Matrix,
    b: Vector,
}

impl AffineOperator {
    pub fn new(q: Matrix, b: Vector) -> Result<Self> {
        check_dim(q.nrows(), &b)?;
        let lo = min_eigenvalue(&q)?;
        if lo < -1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "affine operator matrix is not PSD (min eigenvalue {lo:.3e})"
            )));
        }
        let q = (&q + q.transpose()) * 0.5;
        Ok(AffineOperator { q, b })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

impl MonotoneOperator for AffineOperator {
    fn label(&self) -> String {
        format!("affine(d={})", self.dim())
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        prox_quadratic(lambda, &self.q, &self.b, x)
    }

    fn graph_member(&self, x: &Vector, xstar: &Vector, tol: f64) -> Option<bool> {
        if x.len() != self.dim() || xstar.len() != self.dim() {
            return Some(false);
        }
        Some((&self.q * x + &self.b - xstar).amax() <= tol)
    }

    fn affine_parts(&self) -> Option<(&Matrix, &Vector)> {
        Some((&self.q, &self.b))
    }

    fn is_zero(&self) -> bool {
        self.q.amax() == 0.0 && self.b.amax() == 0.0
    }
}

/// `B(x) = Qx + b` with `Q` symmetric PSD; co-coercive w.r.t. `‖Q‖·I`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    q: Matrix,
    b: Vector,
    certificate: SpdMap,
}

impl AffineMap {
    pub fn new(q: Matrix, b: Vector) -> Result<Self> {
        let op = AffineOperator::new(q, b)?;
        let d = op.dim();
        let top = max_eigenvalue(&op.q)?;
        // B constant: any certificate works; use I.
        let scale = if top > 0.0 { top } else { 1.0 };
        Ok(AffineMap {
            q: op.q,
            b: op.b,
            certificate: SpdMap::scaled_identity(d, scale)?,
        })
    }

    /// `B(x) = x − y`, used to compute resolvents of sums at `y`.
    pub fn shift(y: Vector) -> Result<Self> {
        let d = y.len();
        Self::new(Matrix::identity(d, d), -y)
    }

    /// Replaces the default certificate `‖Q‖·I` by `l`.
    pub fn with_certificate(mut self, l: SpdMap) -> Result<Self> {
        check_dim(l.dim(), &self.b)?;
        self.certificate = l;
        Ok(self)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn offset(&self) -> &Vector {
        &self.b
    }
}

impl CocoerciveOperator for AffineMap {
    fn label(&self) -> String {
        format!("affine_map(d={})", self.b.len())
    }

    fn apply(&self, x: &Vector) -> Vector {
        &self.q * x + &self.b
    }

    fn certificate(&self) -> &SpdMap {
        &self.certificate
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Option<Vector> {
        prox_quadratic(lambda, &self.q, &self.b, x).ok()
    }

    fn is_zero(&self) -> bool {
        self.q.amax() == 0.0 && self.b.amax() == 0.0
    }
}

/// `B(x) = x − clamp(x, lo, hi)`, the gradient of `½·dist²(x, [lo, hi]^d)`.
/// It is 1-co-coercive and vanishes on the whole box.
#[derive(Debug, Clone)]
pub struct ClampResidual {
    lo: f64,
    hi: f64,
    certificate: SpdMap,
}

impl ClampResidual {
    pub fn new(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxNormalCone::new(lo, hi)?;
        Ok(ClampResidual {
            lo,
            hi,
            certificate: SpdMap::identity(dim),
        })
    }
}

impl CocoerciveOperator for ClampResidual {
    fn label(&self) -> String {
        format!("clamp_residual[{}, {}]", self.lo, self.hi)
    }

    fn apply(&self, x: &Vector) -> Vector {
        x.map(|v| v - v.clamp(self.lo, self.hi))
    }

    fn certificate(&self) -> &SpdMap {
        &self.certificate
    }

    fn resolvent(&self, lambda: f64, x: &Vector) -> Option<Vector> {
        // p + λ(p − clamp(p)) = x, piecewise linear in each coordinate.
        Some(x.map(|v| {
            if v > self.hi {
                (v + lambda * self.hi) / (1.0 + lambda)
            } else if v < self.lo {
                (v + lambda * self.lo) / (1.0 + lambda)
            } else {
                v
            }
        }))
    }
}

/// Outcome of [`cocoercivity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CocoercivityReport {
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    pub passed: bool,
}

/// Evaluates `⟨Bx − By, x − y⟩ − ‖Bx − By‖²_{L⁻¹}` on each sample pair.
pub fn cocoercivity_check(
    b: &dyn CocoerciveOperator,
    samples: &[(Vector, Vector)],
) -> Result<CocoercivityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one sample pair".into(),
        ));
    }
    let l = b.certificate();
    let mut slacks = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        check_dim(l.dim(), x)?;
        check_dim(l.dim(), y)?;
        let db = b.apply(x) - b.apply(y);
        slacks.push(db.dot(&(x - y)) - l.inv_norm2(&db));
    }
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CocoercivityReport {
        passed: min_slack >= -MONOTONE_SLACK,
        slacks,
        min_slack,
    })
}

/// Slack of firm non-expansiveness `⟨Jx − Jy, x − y⟩ − ‖Jx − Jy‖²` for one pair.
pub fn firm_nonexpansive_slack(jx: &Vector, jy: &Vector, x: &Vector, y: &Vector) -> f64 {
    let dj = jx - jy;
    dj.dot(&(x - y)) - dj.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{matrix_from_rows, vector};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vector {
        Vector::from_fn(d, |_, _| rng.gen_range(-scale..scale))
    }

    fn random_psd(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> Matrix {
        let a = Matrix::from_fn(d, rank, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose()
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(prox_l1(1.0, &vector(&[2.0])), vector(&[1.0]));
        assert_eq!(prox_l1(1.0, &vector(&[0.5])), vector(&[0.0]));
        assert_eq!(prox_l1(1.0, &vector(&[-3.0])), vector(&[-2.0]));
    }

    #[test]
    fn soft_threshold_subgradient_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let op = L1Norm::new(1.0).unwrap();
        for _ in 0..200 {
            let lambda = rng.gen_range(0.1..2.0);
            let x = random_vec(&mut rng, 6, 3.0);
            let p = prox_l1(lambda, &x);
            // (x − p)/λ ∈ ∂‖·‖₁(p)
            let s = (&x - &p) / lambda;
            assert_eq!(op.graph_member(&p, &s, 1e-12), Some(true));
        }
    }

    #[test]
    fn box_values() {
        let x = prox_box(0.0, f64::INFINITY, &vector(&[-1.0, 2.0])).unwrap();
        assert_eq!(x, vector(&[0.0, 2.0]));
        assert_eq!(
            prox_box(-1.0, 1.0, &vector(&[0.5])).unwrap(),
            vector(&[0.5])
        );
        assert_eq!(prox_box(0.0, 1.0, &vector(&[7.0])).unwrap(), vector(&[1.0]));
        assert!(prox_box(1.0, 0.0, &vector(&[0.0])).is_err());
        let once = prox_box(-0.5, 0.25, &vector(&[3.0, -2.0, 0.1])).unwrap();
        assert_eq!(prox_box(-0.5, 0.25, &once).unwrap(), once);
    }

    #[test]
    fn quadratic_prox_values() {
        let i1 = Matrix::identity(1, 1);
        let p = prox_quadratic(1.0, &i1, &vector(&[0.0]), &vector(&[2.0])).unwrap();
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-15);
        let z1 = Matrix::zeros(1, 1);
        let p = prox_quadratic(0.5, &z1, &vector(&[1.0]), &vector(&[0.0])).unwrap();
        assert_relative_eq!(p[0], -0.5, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let q = random_psd(&mut rng, 4, 2);
            let b = random_vec(&mut rng, 4, 1.0);
            let x = random_vec(&mut rng, 4, 3.0);
            let lambda = rng.gen_range(0.05..3.0);
            let p = prox_quadratic(lambda, &q, &b, &x).unwrap();
            // plug back: p + λ(Qp + b) = x
            let residual = (&p + (&q * &p + &b) * lambda - &x).norm();
            assert!(residual <= 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn generalized_resolvent_identity_dispatch_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ops: Vec<Box<dyn MonotoneOperator>> = vec![
            Box::new(L1Norm::new(0.7).unwrap()),
            Box::new(BoxNormalCone::new(-1.0, 2.0).unwrap()),
            Box::new(ZeroOperator),
        ];
        let m = SpdMap::identity(3);
        for op in &ops {
            for _ in 0..20 {
                let u = random_vec(&mut rng, 3, 4.0);
                let lambda = rng.gen_range(0.1..2.0);
                let a = generalized_resolvent(op.as_ref(), &m, lambda, &u).unwrap();
                let b = op.resolvent(lambda, &u).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn generalized_resolvent_affine_metric() {
        // A(x) = x, M = 2: (2 + 1)p = 2·3
        let a = AffineOperator::new(Matrix::identity(1, 1), vector(&[0.0])).unwrap();
        let m = SpdMap::diagonal(&[2.0]).unwrap();
        let p = generalized_resolvent(&a, &m, 1.0, &vector(&[3.0])).unwrap();
        assert_relative_eq!(p[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn generalized_resolvent_diagonal_metric() {
        // 2p + 1 = 2·3 and p + 1 = 3
        let m = SpdMap::diagonal(&[2.0, 1.0]).unwrap();
        let p = generalized_resolvent(&L1Norm::new(1.0).unwrap(), &m, 1.0, &vector(&[3.0, 3.0]))
            .unwrap();
        assert_relative_eq!(p, vector(&[2.5, 2.0]), epsilon = 1e-15);
        let p = generalized_resolvent(
            &BoxNormalCone::nonnegative(),
            &m,
            1.0,
            &vector(&[-1.0, 3.0]),
        )
        .unwrap();
        assert_eq!(p, vector(&[0.0, 3.0]));
    }

    #[test]
    fn generalized_resolvent_rejects_unsupported() {
        let m = SpdMap::new(matrix_from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap()).unwrap();
        let err = generalized_resolvent(&L1Norm::new(1.0).unwrap(), &m, 1.0, &vector(&[1.0, 1.0]));
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn cocoercivity_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pairs: Vec<(Vector, Vector)> = (0..100)
            .map(|_| (random_vec(&mut rng, 3, 3.0), random_vec(&mut rng, 3, 3.0)))
            .collect();

        // B(x) = x, L = I: equality case
        let id = AffineMap::new(Matrix::identity(3, 3), Vector::zeros(3)).unwrap();
        let rep = cocoercivity_check(&id, &pairs).unwrap();
        assert!(rep.passed);
        assert!(rep.slacks.iter().all(|s| s.abs() <= 1e-12));

        // B = x − clamp(x, −1, 1) is 1-co-coercive (the clamp itself is too)
        let clamp = ClampResidual::new(3, -1.0, 1.0).unwrap();
        let rep = cocoercivity_check(&clamp, &pairs).unwrap();
        assert!(rep.passed);
        assert!(rep.min_slack >= -1e-12);

        // a certificate that is too small is caught
        let tight = AffineMap::new(Matrix::identity(3, 3) * 2.0, Vector::zeros(3))
            .unwrap()
            .with_certificate(SpdMap::identity(3))
            .unwrap();
        assert!(!cocoercivity_check(&tight, &pairs).unwrap().passed);
        assert!(cocoercivity_check(&id, &[]).is_err());
    }

    #[test]
    fn clamp_residual_resolvent_plugs_back() {
        let b = ClampResidual::new(1, -1.0, 1.0).unwrap();
        for &x in &[-5.0, -1.2, -0.3, 0.9, 1.0, 4.0] {
            let p = b.resolvent(0.7, &vector(&[x])).unwrap();
            let back = &p + b.apply(&p) * 0.7;
            assert_relative_eq!(back[0], x, epsilon = 1e-14);
        }
    }

    #[test]
    fn box_graph_membership() {
        let c = BoxNormalCone::nonnegative();
        assert_eq!(
            c.graph_member(&vector(&[0.0]), &vector(&[-3.0]), 1e-12),
            Some(true)
        );
        assert_eq!(
            c.graph_member(&vector(&[0.0]), &vector(&[3.0]), 1e-12),
            Some(false)
        );
        assert_eq!(
            c.graph_member(&vector(&[2.0]), &vector(&[0.0]), 1e-12),
            Some(true)
        );
        assert_eq!(
            c.graph_member(&vector(&[2.0]), &vector(&[0.1]), 1e-12),
            Some(false)
        );
        assert_eq!(
            c.graph_member(&vector(&[-1.0]), &vector(&[0.0]), 1e-12),
            Some(false)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vector> {
            proptest::collection::vec(-10.0f64..10.0, 3).prop_map(Vector::from_vec)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn catalog_resolvents_are_firmly_nonexpansive(
                x in vec3(), y in vec3(), lambda in 0.01f64..5.0, weight in 0.0f64..3.0,
            ) {
                let q = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0]);
                let ops: Vec<Box<dyn MonotoneOperator>> = vec![
                    Box::new(L1Norm::new(weight).unwrap()),
                    Box::new(BoxNormalCone::new(-1.0, 2.5).unwrap()),
                    Box::new(BoxNormalCone::nonnegative()),
                    Box::new(AffineOperator::new(q, vector(&[1.0, -2.0, 0.5])).unwrap()),
                    Box::new(ZeroOperator),
                ];
                for op in &ops {
                    let jx = op.resolvent(lambda, &x).unwrap();
                    let jy = op.resolvent(lambda, &y).unwrap();
                    prop_assert!(firm_nonexpansive_slack(&jx, &jy, &x, &y) >= -MONOTONE_SLACK,
                        "{} not firmly non-expansive", op.label());
                }
            }
        }
    }
}
