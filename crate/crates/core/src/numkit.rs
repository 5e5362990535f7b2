//! Dense complex-matrix kernel.
//!
//! Everything above this module talks to matrices through a small set of
//! primitives: Hermitian eigendecomposition, spectral functional calculus,
//! range projections and generalized inverses, Kronecker products and partial
//! traces. Matrices are `nalgebra::DMatrix<Complex64>`; vectorization is
//! column-major throughout, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numerical tolerances shared by the whole crate.
pub mod tol {
    /// Allowed anti-Hermitian part, relative to `1 + max|A_ij|`.
    pub const HERM: f64 = 1e-10;
    /// Relative eigensolver accuracy used in reconstruction bounds.
    pub const EIG: f64 = 1e-12;
    /// Eigenvalues with `|λ| <= RANK * max|λ|` are treated as zero.
    pub const RANK: f64 = 1e-10;
}

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A square matrix that equals its adjoint up to roundoff.
///
/// The stored matrix is always the symmetrized `(A + A†)/2`, so downstream
/// spectral calculus sees an exactly Hermitian input.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates shape, finiteness and Hermiticity (within [`tol::HERM`]) and
    /// stores the symmetrized matrix.
    pub fn new(a: CMatrix) -> Result<Self> {
        check_square(&a)?;
        check_finite(&a)?;
        let deviation = max_abs(&(&a - a.adjoint()));
        if deviation > tol::HERM * (1.0 + max_abs(&a)) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(a))
    }

    /// Symmetrizes without validation. Use only for matrices that are
    /// Hermitian by construction.
    pub fn symmetrized(a: CMatrix) -> Self {
        let h = (&a + a.adjoint()) * real(0.5);
        HermitianMatrix(h)
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { ZERO }))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * real(s))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 - &other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig_hermitian(self)
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// `A = U diag(λ) U†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    }

    /// Threshold below which an eigenvalue counts as zero.
    pub fn rank_cut(&self) -> f64 {
        tol::RANK * self.max_abs()
    }

    pub fn on_support(&self, lambda: f64) -> bool {
        lambda.abs() > self.rank_cut()
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| self.on_support(l)).count()
    }

    /// `U diag(f(λ)) U†`. Fails if `f` is non-finite at some eigenvalue.
    pub fn apply<F: Fn(f64) -> C64>(&self, f: F) -> Result<CMatrix> {
        let values = self
            .eigenvalues
            .iter()
            .map(|&l| {
                let v = f(l);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::SpectralFunction { eigenvalue: l })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.assemble(&values))
    }

    pub fn apply_real<F: Fn(f64) -> f64>(&self, f: F) -> Result<CMatrix> {
        self.apply(|l| real(f(l)))
    }

    /// Like [`apply_real`](Self::apply_real) but `f` is only evaluated on the
    /// support; eigenvalues below the rank threshold map to zero.
    pub fn apply_on_support<F: Fn(f64) -> f64>(&self, f: F) -> Result<CMatrix> {
        let cut = self.rank_cut();
        self.apply_real(|l| if l.abs() > cut { f(l) } else { 0.0 })
    }

    pub fn reconstruct(&self) -> CMatrix {
        let values: Vec<C64> = self.eigenvalues.iter().map(|&l| real(l)).collect();
        self.assemble(&values)
    }

    fn assemble(&self, values: &[C64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, v) in values.iter().enumerate() {
            for i in 0..u.nrows() {
                scaled[(i, j)] *= v;
            }
        }
        scaled * u.adjoint()
    }
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Empty);
    }
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let m = a.matrix();
    check_finite(m)?;
    let n = m.nrows();
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenSolver)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `f(A)` through the spectral decomposition of `A`.
pub fn spectral_apply<F: Fn(f64) -> C64>(f: F, a: &HermitianMatrix) -> Result<CMatrix> {
    eig_hermitian(a)?.apply(f)
}

/// Orthogonal projection onto the span of eigenvectors with
/// `|λ| > RANK * max|λ|`.
pub fn range_projection(a: &HermitianMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(a)?;
    let cut = eig.rank_cut();
    eig.apply_real(|l| if l.abs() > cut { 1.0 } else { 0.0 })
}

/// Generalized inverse: `1/λ` on the support, zero elsewhere.
pub fn pinv_on_support(a: &HermitianMatrix) -> Result<CMatrix> {
    eig_hermitian(a)?.apply_on_support(|l| 1.0 / l)
}

/// Kronecker product, `(A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l]` with row index
/// `i * rows(B) + k`.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of `X` on `C^{d1} ⊗ C^{d2}` over the given subsystem.
pub fn partial_trace(x: &CMatrix, dims: (usize, usize), traced: Subsystem) -> Result<CMatrix> {
    let (d1, d2) = dims;
    check_square(x)?;
    if x.nrows() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, actual: x.nrows() });
    }
    let out = match traced {
        Subsystem::Second => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| x[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Subsystem::First => CMatrix::from_fn(d2, d2, |k, l| {
            (0..d1).map(|i| x[(i * d2 + k, i * d2 + l)]).sum()
        }),
    };
    Ok(out)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `⟨A, B⟩_HS = tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().fold(0.0_f64, |m, &s| m.max(s))
}

/// Smallest eigenvalue of the Hermitian part of `A`.
pub fn min_eig(a: &CMatrix) -> Result<f64> {
    Ok(eig_hermitian(&HermitianMatrix::symmetrized(a.clone()))?.min())
}

/// `‖A − B‖_F / (1 + ‖B‖_F)`.
pub fn rel_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / (1.0 + frobenius(b))
}

/// Column-major vectorization.
pub fn vec(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, v.len() / n, v.as_slice())
}

/// Matrix of `X ↦ A X` acting on `vec(X)`: `I ⊗ A`.
pub fn left_mult(a: &CMatrix) -> CMatrix {
    identity(a.ncols()).kronecker(a)
}

/// Matrix of `X ↦ X B` acting on `vec(X)`: `Bᵀ ⊗ I`.
pub fn right_mult(b: &CMatrix) -> CMatrix {
    b.transpose().kronecker(&identity(b.nrows()))
}

/// General matrix exponential (scaling and squaring with Padé approximants).
/// Hermitian arguments should go through the spectral calculus instead.
pub fn expm(a: &CMatrix) -> CMatrix {
    a.exp()
}

pub fn is_square(a: &CMatrix) -> bool {
    a.nrows() == a.ncols()
}
