//! Finite-dimensional vectors and self-adjoint positive-definite maps.
//!
//! Every solver in this crate measures distances in an auxiliary metric
//! `‖x‖²_M = ⟨Mx, x⟩` and, for co-coercivity certificates, in the inverse
//! metric `‖x‖²_{L⁻¹}`. [`SpdMap`] packages a dense symmetric positive-definite
//! matrix together with its Cholesky factor and lazily computed spectral data.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative asymmetry tolerated (and removed) when building an [`SpdMap`].
pub const SYMMETRY_TOL: f64 = 1e-10;

const SOLVE_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 200_000;

/// Builds a vector from a slice.
pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

/// Builds a matrix from row-major nested rows.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Row-major nested rows, the serialized form of matrices.
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn check_dim(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn relative_asymmetry(m: &Matrix) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

fn check_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
///
/// Rejects non-square and non-symmetric input (relative asymmetry above
/// [`SYMMETRY_TOL`]).
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    check_square(m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let asym = relative_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.min())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &Matrix) -> Result<f64> {
    Ok(-min_eigenvalue(&(-m))?)
}

fn power_iteration(gram: &Matrix, start: Vector) -> f64 {
    let mut v = start;
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = gram * &v;
        estimate = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        let residual = (&w - &v * estimate).norm();
        v = w / wn;
        if residual <= POWER_TOL * estimate.abs() {
            break;
        }
    }
    estimate.max(0.0)
}

/// Spectral norm `sup_{‖x‖=1} ‖Kx‖` of a (possibly rectangular) matrix.
///
/// Power iteration on `KᵀK` from the normalized all-ones vector. A second
/// deterministic start (the coordinate of the heaviest column) guards against
/// a start vector that happens to be orthogonal to the top singular vector.
pub fn operator_norm(k: &Matrix) -> Result<f64> {
    if k.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    if k.ncols() == 0 || k.nrows() == 0 || k.amax() == 0.0 {
        return Ok(0.0);
    }
    let gram = k.transpose() * k;
    let n = gram.nrows();
    let first = power_iteration(&gram, Vector::from_element(n, 1.0));
    let heaviest = (0..n)
        .max_by(|&a, &b| gram[(a, a)].total_cmp(&gram[(b, b)]))
        .unwrap_or(0);
    let mut alt = Vector::from_element(n, 0.0);
    alt[heaviest] = 1.0;
    let second = power_iteration(&gram, alt);
    Ok(first.max(second).sqrt())
}

/// A linear self-adjoint positive-definite map on `R^d`.
#[derive(Clone)]
pub struct SpdMap {
    matrix: Matrix,
    identity: bool,
    chol: Cholesky<f64, Dyn>,
    sqrt: OnceLock<Matrix>,
    min_eig: OnceLock<f64>,
    max_eig: OnceLock<f64>,
}

impl fmt::Debug for SpdMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.identity {
            write!(f, "SpdMap::identity({})", self.dim())
        } else {
            f.debug_struct("SpdMap")
                .field("matrix", &self.matrix)
                .finish()
        }
    }
}

impl PartialEq for SpdMap {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl SpdMap {
    /// Validates and symmetrizes `matrix`; fails unless it is symmetric (to
    /// [`SYMMETRY_TOL`]) and positive definite.
    pub fn new(matrix: Matrix) -> Result<Self> {
        check_square(&matrix)?;
        if matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let asym = relative_asymmetry(&matrix);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let identity = matrix == Matrix::identity(matrix.nrows(), matrix.ncols());
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(SpdMap {
            matrix,
            identity,
            chol,
            sqrt: OnceLock::new(),
            min_eig: OnceLock::new(),
            max_eig: OnceLock::new(),
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(Matrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn scaled_identity(d: usize, c: f64) -> Result<Self> {
        Self::new(Matrix::identity(d, d) * c)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&vector(diag)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `M·x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        Ok(self.mul(x))
    }

    pub(crate) fn mul(&self, x: &Vector) -> Vector {
        if self.identity {
            x.clone()
        } else {
            &self.matrix * x
        }
    }

    /// Solves `M·x = b`, verifying `‖Mx − b‖ ≤ 1e-10·‖b‖`.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        check_dim(self.dim(), b)?;
        if self.identity {
            return Ok(b.clone());
        }
        let mut x = self.chol.solve(b);
        let bn = b.norm();
        let mut r = b - &self.matrix * &x;
        if r.norm() > SOLVE_TOL * bn {
            // one step of iterative refinement
            x += self.chol.solve(&r);
            r = b - &self.matrix * &x;
        }
        if !all_finite(&x) || r.norm() > SOLVE_TOL * bn {
            return Err(Error::NotPositiveDefinite(format!(
                "solve residual {:.3e} exceeds tolerance",
                r.norm() / bn.max(f64::MIN_POSITIVE)
            )));
        }
        Ok(x)
    }

    pub(crate) fn solve_unchecked(&self, b: &Vector) -> Vector {
        if self.identity {
            b.clone()
        } else {
            self.chol.solve(b)
        }
    }

    /// `⟨Mx, y⟩`.
    pub fn inner_m(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        check_dim(self.dim(), y)?;
        Ok(self.inner(x, y))
    }

    pub(crate) fn inner(&self, x: &Vector, y: &Vector) -> f64 {
        if self.identity {
            x.dot(y)
        } else {
            (&self.matrix * x).dot(y)
        }
    }

    /// `‖x‖²_M`.
    pub fn norm2(&self, x: &Vector) -> f64 {
        self.inner(x, x)
    }

    /// `‖x‖²_{M⁻¹} = ⟨M⁻¹x, x⟩`.
    pub fn inv_norm2(&self, x: &Vector) -> f64 {
        self.solve_unchecked(x).dot(x)
    }

    fn sqrt_matrix(&self) -> Result<&Matrix> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite(
                "non-positive eigenvalue in square root".into(),
            ));
        }
        let roots = eig.eigenvalues.map(f64::sqrt);
        let s = &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let s = (&s + s.transpose()) * 0.5;
        Ok(self.sqrt.get_or_init(|| s))
    }

    /// `M^{1/2}·x` with the symmetric positive-definite square root.
    pub fn sqrt_apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        if self.identity {
            return Ok(x.clone());
        }
        Ok(self.sqrt_matrix()? * x)
    }

    /// The symmetric square root itself.
    pub fn sqrt(&self) -> Result<SpdMap> {
        SpdMap::new(self.sqrt_matrix()?.clone())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self
            .min_eig
            .get_or_init(|| SymmetricEigen::new(self.matrix.clone()).eigenvalues.min())
    }

    /// Largest eigenvalue, which is also the operator norm `‖M‖`.
    pub fn max_eigenvalue(&self) -> f64 {
        *self
            .max_eig
            .get_or_init(|| SymmetricEigen::new(self.matrix.clone()).eigenvalues.max())
    }

    pub fn norm(&self) -> f64 {
        self.max_eigenvalue()
    }

    /// Largest generalized eigenvalue `λ` of `other·u = λ·self·u`, i.e. the
    /// spectral radius of `self^{-1/2} other self^{-1/2}`.
    pub fn max_generalized_eigenvalue(&self, other: &Matrix) -> Result<f64> {
        check_square(other)?;
        if other.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.nrows(),
            });
        }
        let l = self.chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
        let c = &linv * other * linv.transpose();
        max_eigenvalue(&((&c + c.transpose()) * 0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
        let a = Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + Matrix::identity(d, d) * 0.5
    }

    fn naive_matvec(m: &Matrix, x: &Vector) -> Vector {
        let mut out = Vector::zeros(m.nrows());
        for i in 0..m.nrows() {
            let mut acc = 0.0;
            for j in 0..m.ncols() {
                acc += m[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    #[test]
    fn apply_small_cases() {
        let id = SpdMap::identity(2);
        assert_eq!(
            id.apply(&vector(&[3.0, -1.0])).unwrap(),
            vector(&[3.0, -1.0])
        );
        let d = SpdMap::diagonal(&[2.0, 1.0]).unwrap();
        assert_eq!(d.apply(&vector(&[1.0, 1.0])).unwrap(), vector(&[2.0, 1.0]));
        assert!(matches!(
            d.apply(&vector(&[1.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn apply_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = SpdMap::new(random_spd(&mut rng, 3)).unwrap();
        let x = vector(&[0.3, -1.2, 2.5]);
        let got = a.apply(&x).unwrap();
        let want = naive_matvec(a.matrix(), &x);
        assert!((got - want).amax() <= 1e-14);
    }

    #[test]
    fn solve_small_cases() {
        assert_eq!(
            SpdMap::identity(1).solve(&vector(&[5.0])).unwrap(),
            vector(&[5.0])
        );
        let d = SpdMap::diagonal(&[2.0, 4.0]).unwrap();
        let x = d.solve(&vector(&[2.0, 4.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_round_trip_up_to_dim_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1, 2, 5, 10, 25, 50] {
            let m = SpdMap::new(random_spd(&mut rng, d)).unwrap();
            let b = Vector::from_fn(d, |_, _| rng.gen_range(-5.0..5.0));
            let x = m.solve(&b).unwrap();
            assert!((m.apply(&x).unwrap() - &b).norm() <= 1e-10 * b.norm());
            let y = m.solve(&m.apply(&b).unwrap()).unwrap();
            assert!((y - &b).norm() <= 1e-10 * b.norm());
        }
    }

    #[test]
    fn inner_products() {
        let id = SpdMap::identity(2);
        assert_eq!(
            id.inner_m(&vector(&[1.0, 2.0]), &vector(&[1.0, 2.0]))
                .unwrap(),
            5.0
        );
        let d = SpdMap::diagonal(&[2.0, 1.0]).unwrap();
        assert_eq!(
            d.inner_m(&vector(&[1.0, 0.0]), &vector(&[0.0, 1.0]))
                .unwrap(),
            0.0
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = SpdMap::new(random_spd(&mut rng, 4)).unwrap();
        let x = Vector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let y = Vector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let a = m.inner_m(&x, &y).unwrap();
        let b = m.inner_m(&y, &x).unwrap();
        assert!((a - b).abs() <= 1e-12);
        assert!(m.norm2(&x) > 0.0);
    }

    #[test]
    fn square_root() {
        let d = SpdMap::diagonal(&[4.0, 9.0]).unwrap();
        let r = d.sqrt_apply(&vector(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(r[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(r[1], 3.0, epsilon = 1e-14);
        let x = vector(&[0.7, -0.2]);
        assert_eq!(SpdMap::identity(2).sqrt_apply(&x).unwrap(), x);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2, 5, 12] {
            let m = SpdMap::new(random_spd(&mut rng, d)).unwrap();
            let x = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let twice = m.sqrt_apply(&m.sqrt_apply(&x).unwrap()).unwrap();
            assert!((twice - m.apply(&x).unwrap()).norm() <= 1e-10 * (1.0 + x.norm()));
            // ‖M^{1/2}‖² = ‖M‖
            let root = m.sqrt().unwrap();
            assert_relative_eq!(root.norm().powi(2), m.norm(), max_relative = 1e-8);
        }
    }

    #[test]
    fn minimum_eigenvalue() {
        let d = Matrix::from_diagonal(&vector(&[3.0, 1.0, 2.0]));
        assert_relative_eq!(min_eigenvalue(&d).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            min_eigenvalue(&Matrix::identity(5, 5)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // characteristic polynomial (2-t)^2 - 1 = 0 → t ∈ {1, 3}
        let m = matrix_from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_relative_eq!(min_eigenvalue(&m).unwrap(), 1.0, epsilon = 1e-14);
        let bad = matrix_from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(
            min_eigenvalue(&bad),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_input() {
        let asym = matrix_from_rows(&[vec![2.0, 1.0], vec![0.5, 2.0]]).unwrap();
        assert!(matches!(SpdMap::new(asym), Err(Error::NotSymmetric { .. })));
        let indefinite = matrix_from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            SpdMap::new(indefinite),
            Err(Error::NotPositiveDefinite(_))
        ));
        // tiny asymmetry is removed
        let nearly = matrix_from_rows(&[vec![2.0, 1.0 + 1e-13], vec![1.0, 2.0]]).unwrap();
        let m = SpdMap::new(nearly).unwrap();
        assert_eq!(m.matrix()[(0, 1)], m.matrix()[(1, 0)]);
    }

    #[test]
    fn operator_norm_cases() {
        let k = Matrix::from_diagonal(&vector(&[2.0, 1.0]));
        assert_relative_eq!(operator_norm(&k).unwrap(), 2.0, max_relative = 1e-10);
        assert_eq!(operator_norm(&Matrix::zeros(2, 2)).unwrap(), 0.0);
        // all-ones start lies in the null space of KᵀK here
        let k = matrix_from_rows(&[vec![1.0, -1.0]]).unwrap();
        assert_relative_eq!(
            operator_norm(&k).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-10
        );

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let k = Matrix::from_fn(3, 2, |_, _| rng.gen_range(-2.0..2.0));
            let svd = k.clone().svd(false, false);
            let oracle = svd.singular_values.max();
            let got = operator_norm(&k).unwrap();
            assert!((got - oracle).abs() <= 1e-8 * oracle, "{got} vs {oracle}");
        }
    }

    #[test]
    fn generalized_eigenvalue() {
        let m = SpdMap::diagonal(&[2.0, 4.0]).unwrap();
        let l = Matrix::from_diagonal(&vector(&[1.0, 1.0]));
        assert_relative_eq!(
            m.max_generalized_eigenvalue(&l).unwrap(),
            0.5,
            max_relative = 1e-12
        );
    }
}
