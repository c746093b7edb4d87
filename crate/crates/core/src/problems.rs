//! Desk-scale problems with independently certified solutions.
//!
//! | name       | problem                                                        | solution        |
//! |------------|----------------------------------------------------------------|-----------------|
//! | `clamp`    | `0 ∈ N_{[0,∞)}(x) + x − 1`                                     | `1`             |
//! | `lasso`    | `min ½‖Kx − b‖² + μ‖x‖₁`, `d = 5`, seeded data                 | active-set oracle |
//! | `flat`     | `0 = x − clamp(x, −1, 1)`                                      | `[−1, 1]`       |
//! | `intervals`| `0 ∈ N_{(−∞,2]}(x) + N_{[1,∞)}(x) + x − 1.5`                   | `1.5`           |
//! | `intervals_edge` | as `intervals` with `x − 3`                              | `2`             |
//! | `saddle_toy` | `min_x max_y ½x² + xy − ½y²`                                 | `(0, 0)`        |
//! | `lasso_saddle` | `min_x max_y μ‖x‖₁ + ⟨Kx, y⟩ − ½‖y‖² − ⟨b, y⟩`             | `(x̄, Kx̄ − b)`   |
//! | `resolvent_sum` | `0 ∈ 2∂|x| + x − 3`, i.e. `J_{∂|·|+∂|·|}(3)`              | `1`             |

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crifba::InclusionProblem;
use crate::cripda::SaddleProblem;
use crate::error::{Error, Result};
use crate::gcrifba::SumProblem;
use crate::metric::{check_dim, vector, Matrix, Vector};
use crate::operators::{
    prox_box, prox_l1, AffineMap, AffineOperator, BoxNormalCone, ClampResidual, CocoerciveOperator,
    L1Norm, MonotoneOperator, ZeroOperator,
};

/// Seed of every random instance.
pub const SEED: u64 = 0x5EED;
/// Threshold of the pre-flight gate on certified solutions.
pub const PREFLIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ProblemKind {
    Inclusion(InclusionProblem),
    Sum(SumProblem),
    Saddle(SaddleProblem),
}

impl ProblemKind {
    pub fn solver_family(&self) -> &'static str {
        match self {
            ProblemKind::Inclusion(_) => "inclusion",
            ProblemKind::Sum(_) => "sum",
            ProblemKind::Saddle(_) => "saddle",
        }
    }
}

type CertificateFn = Arc<dyn Fn(&Vector) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: ProblemKind,
    /// Starting point; stacked `(x, y)` for saddle problems.
    pub start: Vector,
    pub solution: Option<Vector>,
    /// How the residual of [`certify`] is computed.
    pub certification: &'static str,
    certificate: Option<CertificateFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("kind", &self.kind.solver_family())
            .field("start", &self.start)
            .field("solution", &self.solution)
            .finish()
    }
}

impl ProblemSpec {
    /// Total dimension, `d_x + d_y` for saddle problems.
    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn inclusion(&self) -> Result<&InclusionProblem> {
        match &self.kind {
            ProblemKind::Inclusion(p) => Ok(p),
            _ => Err(self.wrong_kind("inclusion")),
        }
    }

    pub fn sum(&self) -> Result<&SumProblem> {
        match &self.kind {
            ProblemKind::Sum(p) => Ok(p),
            _ => Err(self.wrong_kind("sum")),
        }
    }

    pub fn saddle(&self) -> Result<&SaddleProblem> {
        match &self.kind {
            ProblemKind::Saddle(p) => Ok(p),
            _ => Err(self.wrong_kind("saddle")),
        }
    }

    fn wrong_kind(&self, wanted: &str) -> Error {
        Error::Unsupported(format!(
            "problem `{}` is a {} problem, not a {wanted} problem",
            self.name,
            self.kind.solver_family()
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Certificate {
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Evaluates the problem's optimality residual at `candidate`.
pub fn certify(problem: &ProblemSpec, candidate: &Vector, tol: f64) -> Result<Certificate> {
    let Some(cert) = &problem.certificate else {
        return Err(Error::Unsupported(format!(
            "problem `{}` is uncertifiable",
            problem.name
        )));
    };
    check_dim(problem.dim(), candidate)?;
    let residual = cert(candidate)?;
    Ok(Certificate {
        residual,
        tol,
        passed: residual <= tol,
    })
}

/// `‖x − J_A(x − B(x))‖`, zero exactly on the zeros of `A + B`.
pub fn natural_residual(problem: &InclusionProblem, x: &Vector) -> Result<f64> {
    Ok((x - problem.a.resolvent(1.0, &(x - problem.b.apply(x)))?).norm())
}

/// Seeded lasso data `min ½‖Kx − b‖² + μ‖x‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoData {
    pub k: Matrix,
    pub b: Vector,
    pub mu: f64,
}

impl LassoData {
    /// `K = I + U(−1, 1)/√d`, `b ~ U(−1, 1)`, `μ = 0.3‖Kᵀb‖_∞`.
    pub fn seeded(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let mut k = Matrix::identity(d, d);
        for i in 0..d {
            for j in 0..d {
                k[(i, j)] += scale * rng.gen_range(-1.0..1.0);
            }
        }
        let b = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let mu = 0.3 * k.tr_mul(&b).amax();
        LassoData { k, b, mu }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `Kᵀ(Kx − b)`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        self.k.tr_mul(&(&self.k * x - &self.b))
    }

    /// Componentwise distance of `−∇f(x)` to `μ∂‖x‖₁`; exact zeros in `x`
    /// are treated as inactive.
    pub fn subgradient_residual(&self, x: &Vector) -> f64 {
        let g = self.gradient(x);
        x.iter()
            .zip(g.iter())
            .map(|(&xi, &gi)| {
                if xi == 0.0 {
                    (gi.abs() - self.mu).max(0.0)
                } else {
                    (gi + self.mu * xi.signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Exhaustive search over the `3^d` sign patterns: on the support `S`
    /// with signs `s`, solve `K_Sᵀ K_S x_S = K_Sᵀ b − μ s` and accept when
    /// the signs match and the inactive gradients are within `μ`.
    pub fn active_set_solution(&self) -> Result<Vector> {
        let d = self.dim();
        let mut best: Option<(f64, Vector)> = None;
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let signs: Vec<f64> = (0..d)
                .map(|_| {
                    let s = (c % 3) as f64 - 1.0;
                    c /= 3;
                    s
                })
                .collect();
            let support: Vec<usize> = (0..d).filter(|&i| signs[i] != 0.0).collect();
            let mut x = Vector::zeros(d);
            if !support.is_empty() {
                let ks = self.k.select_columns(&support);
                let rhs = ks.tr_mul(&self.b)
                    - Vector::from_iterator(
                        support.len(),
                        support.iter().map(|&i| self.mu * signs[i]),
                    );
                let Some(xs) = (ks.transpose() * &ks).lu().solve(&rhs) else {
                    continue;
                };
                if support
                    .iter()
                    .zip(xs.iter())
                    .any(|(&i, &v)| v * signs[i] <= 0.0)
                {
                    continue;
                }
                for (&i, &v) in support.iter().zip(xs.iter()) {
                    x[i] = v;
                }
            }
            let res = self.subgradient_residual(&x);
            if best.as_ref().is_none_or(|(r, _)| res < *r) {
                best = Some((res, x));
            }
        }
        match best {
            Some((res, x)) if res <= PREFLIGHT_TOL => Ok(x),
            Some((res, _)) => Err(Error::NonFinite(format!(
                "no sign pattern satisfies the optimality conditions (best residual {res:.3e})"
            ))),
            None => Err(Error::NonFinite(
                "no sign pattern yields a solvable system".into(),
            )),
        }
    }

    pub fn inclusion(&self) -> Result<InclusionProblem> {
        let grad = AffineMap::new(self.k.tr_mul(&self.k), -self.k.tr_mul(&self.b))?;
        Ok(InclusionProblem::new(
            Arc::new(L1Norm::new(self.mu)?),
            Arc::new(grad),
        ))
    }
}

fn scalar_map(q: f64, b: f64) -> Result<AffineMap> {
    AffineMap::new(Matrix::from_element(1, 1, q), vector(&[b]))
}

fn inclusion_spec(
    name: &'static str,
    description: &'static str,
    problem: InclusionProblem,
    start: Vector,
    solution: Option<Vector>,
) -> ProblemSpec {
    let p = problem.clone();
    ProblemSpec {
        name,
        description,
        kind: ProblemKind::Inclusion(problem),
        start,
        solution,
        certification: "natural residual ‖x − J_A(x − B(x))‖",
        certificate: Some(Arc::new(move |x| natural_residual(&p, x))),
    }
}

pub fn clamp() -> Result<ProblemSpec> {
    let problem = InclusionProblem::new(
        Arc::new(BoxNormalCone::nonnegative()),
        Arc::new(scalar_map(1.0, -1.0)?),
    );
    Ok(inclusion_spec(
        "clamp",
        "0 ∈ N_[0,∞)(x) + x − 1",
        problem,
        vector(&[5.0]),
        Some(vector(&[1.0])),
    ))
}

pub fn lasso() -> Result<ProblemSpec> {
    let data = LassoData::seeded(5, SEED);
    let solution = data.active_set_solution()?;
    let problem = data.inclusion()?;
    let p = problem.clone();
    Ok(ProblemSpec {
        name: "lasso",
        description: "min ½‖Kx − b‖² + μ‖x‖₁, d = 5, seeded data",
        kind: ProblemKind::Inclusion(problem),
        start: Vector::zeros(5),
        solution: Some(solution),
        certification: "natural residual ‖x − prox_{μ‖·‖₁}(x − Kᵀ(Kx − b))‖; the stored solution also passes the subgradient test",
        certificate: Some(Arc::new(move |x| natural_residual(&p, x))),
    })
}

pub fn flat() -> Result<ProblemSpec> {
    let problem = InclusionProblem::new(
        Arc::new(ZeroOperator),
        Arc::new(ClampResidual::new(1, -1.0, 1.0)?),
    );
    let mut spec = inclusion_spec(
        "flat",
        "0 = x − clamp(x, −1, 1)",
        problem,
        vector(&[5.0]),
        None,
    );
    spec.certification = "distance to the solution set [−1, 1]";
    Ok(spec)
}

fn intervals_spec(
    name: &'static str,
    description: &'static str,
    c: f64,
    solution: f64,
) -> Result<ProblemSpec> {
    let a: Vec<Arc<dyn MonotoneOperator>> = vec![
        Arc::new(BoxNormalCone::new(f64::NEG_INFINITY, 2.0)?),
        Arc::new(BoxNormalCone::new(1.0, f64::INFINITY)?),
    ];
    let b = scalar_map(1.0, -c)?;
    let problem = SumProblem::new(a, Arc::new(b.clone()))?;
    Ok(ProblemSpec {
        name,
        description,
        kind: ProblemKind::Sum(problem),
        start: vector(&[5.0]),
        solution: Some(vector(&[solution])),
        certification:
            "natural residual ‖x − P_[1,2](x − B(x))‖ (the cones sum to the normal cone of [1, 2])",
        certificate: Some(Arc::new(move |x| {
            Ok((x - prox_box(1.0, 2.0, &(x - b.apply(x)))?).norm())
        })),
    })
}

pub fn intervals() -> Result<ProblemSpec> {
    intervals_spec(
        "intervals",
        "0 ∈ N_(−∞,2](x) + N_[1,∞)(x) + x − 1.5",
        1.5,
        1.5,
    )
}

pub fn intervals_edge() -> Result<ProblemSpec> {
    intervals_spec(
        "intervals_edge",
        "0 ∈ N_(−∞,2](x) + N_[1,∞)(x) + x − 3",
        3.0,
        2.0,
    )
}

pub fn resolvent_sum() -> Result<ProblemSpec> {
    let a: Vec<Arc<dyn MonotoneOperator>> =
        vec![Arc::new(L1Norm::new(1.0)?), Arc::new(L1Norm::new(1.0)?)];
    let b = scalar_map(1.0, -3.0)?;
    let problem = SumProblem::new(a, Arc::new(b.clone()))?;
    Ok(ProblemSpec {
        name: "resolvent_sum",
        description: "J_{A1+A2}(3) with A1 = A2 = ∂|·|, as 0 ∈ A1(x) + A2(x) + x − 3",
        kind: ProblemKind::Sum(problem),
        start: vector(&[0.0]),
        solution: Some(vector(&[1.0])),
        certification: "natural residual ‖x − prox_{2|·|}(x − B(x))‖",
        certificate: Some(Arc::new(move |x| {
            Ok((x - prox_l1(2.0, &(x - b.apply(x)))).norm())
        })),
    })
}

/// `sqrt(‖x − J_G(x − ∇Q(x) − Kᵀy)‖² + ‖y − J_{F*}(y + Kx − ∇P*(y))‖²)`.
pub fn saddle_residual(problem: &SaddleProblem, u: &Vector) -> Result<f64> {
    let (x, y) = problem.split(u);
    let px = problem
        .g
        .resolvent(1.0, &(&x - problem.grad_q.apply(&x) - problem.k.tr_mul(&y)))?;
    let py = problem
        .fstar
        .resolvent(1.0, &(&y + &problem.k * &x - problem.grad_pstar.apply(&y)))?;
    Ok(((&x - px).norm_squared() + (&y - py).norm_squared()).sqrt())
}

fn saddle_spec(
    name: &'static str,
    description: &'static str,
    problem: SaddleProblem,
    start: Vector,
    solution: Vector,
) -> ProblemSpec {
    let p = problem.clone();
    ProblemSpec {
        name,
        description,
        kind: ProblemKind::Saddle(problem),
        start,
        solution: Some(solution),
        certification: "primal-dual natural residual with unit steps",
        certificate: Some(Arc::new(move |u| saddle_residual(&p, u))),
    }
}

pub fn saddle_toy() -> Result<ProblemSpec> {
    let problem = SaddleProblem::new(
        Arc::new(ZeroOperator),
        Arc::new(AffineOperator::new(Matrix::identity(1, 1), vector(&[0.0]))?),
        scalar_map(1.0, 0.0)?,
        scalar_map(0.0, 0.0)?,
        Matrix::identity(1, 1),
    )?;
    Ok(saddle_spec(
        "saddle_toy",
        "min_x max_y ½x² + xy − ½y²",
        problem,
        vector(&[1.0, 1.0]),
        vector(&[0.0, 0.0]),
    ))
}

pub fn lasso_saddle() -> Result<ProblemSpec> {
    let data = LassoData::seeded(5, SEED);
    let d = data.dim();
    let x = data.active_set_solution()?;
    let y = &data.k * &x - &data.b;
    let problem = SaddleProblem::new(
        Arc::new(L1Norm::new(data.mu)?),
        Arc::new(AffineOperator::new(Matrix::identity(d, d), data.b.clone())?),
        AffineMap::new(Matrix::zeros(d, d), Vector::zeros(d))?,
        AffineMap::new(Matrix::zeros(d, d), Vector::zeros(d))?,
        data.k.clone(),
    )?;
    Ok(saddle_spec(
        "lasso_saddle",
        "min_x max_y μ‖x‖₁ + ⟨Kx, y⟩ − ½‖y‖² − ⟨b, y⟩ on the lasso data",
        problem,
        Vector::zeros(2 * d),
        SaddleProblem::stack(&x, &y),
    ))
}

pub const NAMES: [&str; 8] = [
    "clamp",
    "lasso",
    "flat",
    "intervals",
    "intervals_edge",
    "saddle_toy",
    "lasso_saddle",
    "resolvent_sum",
];

pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        "clamp" => clamp(),
        "lasso" => lasso(),
        "flat" => flat(),
        "intervals" => intervals(),
        "intervals_edge" => intervals_edge(),
        "saddle_toy" => saddle_toy(),
        "lasso_saddle" => lasso_saddle(),
        "resolvent_sum" => resolvent_sum(),
        other => Err(Error::InvalidParameter(format!(
            "unknown problem `{other}`; known: {}",
            NAMES.join(", ")
        ))),
    }
}

pub fn catalog() -> Result<Vec<ProblemSpec>> {
    NAMES.iter().map(|n| by_name(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_solutions_pass_their_certificates() {
        for spec in catalog().unwrap() {
            if let Some(q) = &spec.solution {
                let c = certify(&spec, q, PREFLIGHT_TOL).unwrap();
                assert!(c.passed, "{}: {}", spec.name, c.residual);
            }
        }
    }

    #[test]
    fn clamp_certificate_examples() {
        let p = clamp().unwrap();
        assert_eq!(certify(&p, &vector(&[1.0]), 0.0).unwrap().residual, 0.0);
        let c = certify(&p, &vector(&[0.9]), 1e-6).unwrap();
        assert!((c.residual - 0.1).abs() < 1e-15);
        assert!(!c.passed);
        let g = crate::crifba::residual_g(
            p.inclusion().unwrap(),
            &crate::SpdMap::identity(1),
            0.5,
            &vector(&[1.0]),
        );
        assert_eq!(g.unwrap()[0], 0.0);
    }

    #[test]
    fn flat_certificate_is_distance_to_interval() {
        let p = flat().unwrap();
        for (x, d) in [(0.3, 0.0), (-1.0, 0.0), (5.0, 4.0), (-1.5, 0.5)] {
            assert_eq!(certify(&p, &vector(&[x]), 0.0).unwrap().residual, d);
        }
    }

    #[test]
    fn lasso_data_is_reproducible_and_sparse() {
        let a = LassoData::seeded(5, SEED);
        assert_eq!(a, LassoData::seeded(5, SEED));
        let q = a.active_set_solution().unwrap();
        assert!(a.subgradient_residual(&q) <= PREFLIGHT_TOL);
        assert!(q.iter().any(|&v| v == 0.0) && q.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(by_name("resolvent_sum").unwrap().name, "resolvent_sum");
        assert!(by_name("nope").is_err());
        assert!(clamp().unwrap().saddle().is_err());
    }
}
