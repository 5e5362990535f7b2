//! Standard form of `Mat(n)` on Hilbert–Schmidt space.
//!
//! A state `ρ` is represented by the vector `Ω = ρ^{1/2}` in `HS(Cⁿ) ≅ C^{n²}`.
//! `Mat(n)` acts by left multiplication, the commutant by right
//! multiplication, and the modular conjugation is `J X = X†`. The modular
//! operator is `Δ X = ρ X ρ⁻¹`; relative modular operators replace the right
//! factor by the generalized inverse of the second state.

use std::ops::Deref;

use crate::algebra::{commutant_of, StarAlgebra};
use crate::error::{Error, Result};
use crate::numkit::{
    frobenius, hs_inner, identity, left_mult, max_abs, range_projection, real, rel_residual,
    right_mult, tol, unvec, vec, CMatrix, CVector, HermitianMatrix, SpectralDecomposition, C64, ZERO,
};

/// Positive semidefinite matrix of arbitrary trace (a positive functional).
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMatrix(HermitianMatrix);

impl PositiveMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        Self::from_hermitian(HermitianMatrix::new(a)?)
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        let eig = h.eig()?;
        let floor = -tol::RANK * eig.max_abs().max(1.0);
        if eig.min() < floor {
            return Err(Error::NotPositive { min_eig: eig.min() });
        }
        Ok(Self(h))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        self.0.eig()
    }

    /// `λ·ρ` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {lambda} must be positive")));
        }
        Ok(Self(self.0.scale(lambda)))
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        (self.matrix() * a).trace()
    }

    pub fn support(&self) -> Result<CMatrix> {
        range_projection(&self.0)
    }

    /// Square root on the support; the GNS vector in the standard form.
    pub fn sqrt(&self) -> Result<CMatrix> {
        self.eig()?.apply_real(|l| l.max(0.0).sqrt())
    }

    pub fn pinv(&self) -> Result<CMatrix> {
        self.eig()?.apply_on_support(|l| 1.0 / l)
    }

    pub fn log_on_support(&self) -> Result<CMatrix> {
        self.eig()?.apply_on_support(f64::ln)
    }

    pub fn is_faithful(&self) -> Result<bool> {
        let eig = self.eig()?;
        Ok(eig.min() > eig.rank_cut())
    }

    /// Divides by the trace. Fails on the zero matrix.
    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(DensityMatrix(Self(self.0.scale(1.0 / t))))
    }
}

/// Trace-one positive matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(PositiveMatrix);

impl DensityMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        let p = PositiveMatrix::new(a)?;
        let t = p.trace();
        if (t - 1.0).abs() > tol::HERM {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(Self(p))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(PositiveMatrix(HermitianMatrix::identity(n).scale(1.0 / n as f64)))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(p).into_matrix())
    }

    /// `ξξ†/‖ξ‖²`.
    pub fn pure(xi: &CVector) -> Result<Self> {
        let norm2 = xi.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::InvalidParameter("zero vector".into()));
        }
        Self::new(xi * xi.adjoint() / real(norm2))
    }

    pub fn positive(&self) -> &PositiveMatrix {
        &self.0
    }
}

impl Deref for DensityMatrix {
    type Target = PositiveMatrix;

    fn deref(&self) -> &PositiveMatrix {
        &self.0
    }
}

impl From<DensityMatrix> for PositiveMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

/// `HS(Cⁿ)` flattened to `C^{n²}` by column-major vectorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardFormRep {
    pub n: usize,
}

impl StandardFormRep {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn flat_dim(&self) -> usize {
        self.n * self.n
    }

    pub fn left_action(&self, a: &CMatrix) -> CMatrix {
        left_mult(a)
    }

    pub fn right_action(&self, b: &CMatrix) -> CMatrix {
        right_mult(b)
    }

    /// `J` on a flat vector: `vec(X) ↦ vec(X†)`.
    pub fn j(&self, v: &CVector) -> CVector {
        vec(&unvec(v, self.n).adjoint())
    }

    pub fn in_cone(&self, x: &CMatrix) -> bool {
        let dev = max_abs(&(x - x.adjoint()));
        if dev > tol::HERM * (1.0 + max_abs(x)) {
            return false;
        }
        crate::numkit::min_eig(x).map(|m| m >= -tol::HERM).unwrap_or(false)
    }
}

/// `Ω = ρ^{1/2}`.
pub fn gns_vector(rho: &DensityMatrix) -> Result<CMatrix> {
    rho.sqrt()
}

/// `S₀(AΩ) = A†Ω`.
pub fn tomita_operator_action(a: &CMatrix, omega: &CMatrix) -> CMatrix {
    a.adjoint() * omega
}

/// Modular data of a faithful state on `Mat(n)`.
#[derive(Debug, Clone)]
pub struct ModularData {
    pub n: usize,
    pub omega: CMatrix,
    pub delta: HermitianMatrix,
    pub log_delta: HermitianMatrix,
    delta_eig: SpectralDecomposition,
}

impl ModularData {
    /// `J X = X†`.
    pub fn j(&self, x: &CMatrix) -> CMatrix {
        x.adjoint()
    }

    /// `Δ^z` for complex `z`, as an operator on `C^{n²}`.
    pub fn delta_pow(&self, z: C64) -> Result<CMatrix> {
        self.delta_eig.apply(|l| real(l).powc(z))
    }

    /// `Δ^z X` at matrix level.
    pub fn apply_delta_pow(&self, z: C64, x: &CMatrix) -> Result<CMatrix> {
        Ok(unvec(&(self.delta_pow(z)? * vec(x)), self.n))
    }

    pub fn delta_eigenvalues(&self) -> &[f64] {
        &self.delta_eig.eigenvalues
    }
}

pub fn modular_data(rho: &DensityMatrix) -> Result<ModularData> {
    let eig = rho.eig()?;
    if eig.min() <= eig.rank_cut() {
        return Err(Error::NotFaithful { min_eig: eig.min() });
    }
    let n = rho.dim();
    let inv = eig.apply_real(|l| 1.0 / l)?;
    let log = eig.apply_real(f64::ln)?;
    let delta = HermitianMatrix::symmetrized(left_mult(rho.matrix()) * right_mult(&inv));
    let log_delta = HermitianMatrix::symmetrized(left_mult(&log) - right_mult(&log));
    let delta_eig = sandwich_eig(&eig, &eig, |l| 1.0 / l);
    Ok(ModularData { n, omega: eig.apply_real(f64::sqrt)?, delta, log_delta, delta_eig })
}

/// Relative modular operator `Δ_{ψ,φ} X = ρ_ψ X ρ_φ⁺` and its support.
#[derive(Debug, Clone)]
pub struct RelativeModularData {
    pub n: usize,
    pub delta: HermitianMatrix,
    /// `X ↦ s(ψ) X s(φ)` on `C^{n²}`.
    pub support: CMatrix,
    left: SpectralDecomposition,
    right: SpectralDecomposition,
}

impl RelativeModularData {
    /// Eigendecomposition assembled from the two factors: the eigenvectors
    /// are `u_i v_j†` with eigenvalues `a_i b_j⁺`.
    pub fn eig(&self) -> Result<SpectralDecomposition> {
        let cut = self.right.rank_cut();
        Ok(sandwich_eig(&self.left, &self.right, |l| if l.abs() > cut { 1.0 / l } else { 0.0 }))
    }
}

/// Spectral decomposition of `X ↦ A X f(B)` from those of `A` and `B`.
fn sandwich_eig<F: Fn(f64) -> f64>(a: &SpectralDecomposition, b: &SpectralDecomposition, f: F) -> SpectralDecomposition {
    let n = a.dim();
    let vecs = b.eigenvectors.map(|z| z.conj()).kronecker(&a.eigenvectors);
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n * n);
    for j in 0..b.dim() {
        let fb = f(b.eigenvalues[j]);
        for i in 0..n {
            pairs.push((a.eigenvalues[i] * fb, j * n + i));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let eigenvectors = CMatrix::from_fn(vecs.nrows(), pairs.len(), |r, k| vecs[(r, pairs[k].1)]);
    SpectralDecomposition { eigenvalues: pairs.iter().map(|p| p.0).collect(), eigenvectors }
}

pub fn relative_modular(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<RelativeModularData> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), actual: phi.dim() });
    }
    let delta = HermitianMatrix::symmetrized(left_mult(psi.matrix()) * right_mult(&phi.pinv()?));
    let support = left_mult(&psi.support()?) * right_mult(&phi.support()?);
    Ok(RelativeModularData { n: psi.dim(), delta, support, left: psi.eig()?, right: phi.eig()? })
}

/// Relative modular operator of two vectors `ξ, η ∈ HS(Cⁿ)` for the left
/// action: `Δ_{ξ,η} = L(ξξ†) R((η†η)⁺)`.
pub fn relative_modular_vectors(xi: &CMatrix, eta: &CMatrix) -> Result<RelativeModularData> {
    let psi = PositiveMatrix(HermitianMatrix::symmetrized(xi * xi.adjoint()));
    let phi_prime = PositiveMatrix(HermitianMatrix::symmetrized(eta.adjoint() * eta));
    let delta = HermitianMatrix::symmetrized(left_mult(psi.matrix()) * right_mult(&phi_prime.pinv()?));
    let support = left_mult(&psi.support()?) * right_mult(&phi_prime.support()?);
    Ok(RelativeModularData { n: xi.nrows(), delta, support, left: psi.eig()?, right: phi_prime.eig()? })
}

/// Residuals of the Tomita–Takesaki relations for `(M, tr(ρ ·)|_M)`.
#[derive(Debug, Clone)]
pub struct TomitaReport {
    /// Dimension of the GNS space (equals `dim M` for a faithful restriction).
    pub gns_dim: usize,
    pub delta_fixes_omega: f64,
    pub j_fixes_omega: f64,
    pub j_involution: f64,
    pub polar_identity: f64,
    /// `max ‖[J π(A) J, π(B)]‖` over basis elements.
    pub jmj_commutes: f64,
    /// `dim span(J π(M) J)` and `dim π(M)′`; equal iff `JMJ = M′`.
    pub jmj_dim: usize,
    pub commutant_dim: usize,
    /// Distance of `Δ^{it} π(A) Δ^{-it}` from `π(M)` at the sampled times.
    pub modular_group: f64,
    /// Same checks directly on `HS(Cⁿ)`; present when `M` is all of `Mat(n)`.
    pub hilbert_schmidt: Option<HsTomitaResiduals>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct HsTomitaResiduals {
    pub jmj_commutes: f64,
    pub modular_group: f64,
    pub j_delta_j: f64,
}

pub const TOMITA_TIMES: [f64; 3] = [0.3, 1.0, 1.7];
const TOMITA_TOL: f64 = 1e-7;

/// Builds the GNS representation of `ω = tr(ρ ·)` restricted to `M` in the
/// coordinates of `M`'s orthonormal basis and checks Tomita's theorem there.
///
/// With Gram matrix `G_ij = ω(B_i† B_j)` and adjoint coefficients
/// `B_i† = Σ_j C_ji B_j`, the Tomita operator is `x ↦ C x̄`, the modular
/// operator is `Δ = G⁻¹ (C† G C)ᵀ` and `J x = C conj(Δ^{-1/2}) x̄`.
pub fn verify_tomita(m: &StarAlgebra, rho: &DensityMatrix) -> Result<TomitaReport> {
    let n = m.ambient_dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: rho.dim() });
    }
    let basis = m.basis();
    let d = basis.len();
    let gram = CMatrix::from_fn(d, d, |i, j| rho.expectation(&(basis[i].adjoint() * &basis[j])));
    let gram = HermitianMatrix::symmetrized(gram);
    let gram_eig = gram.eig()?;
    if gram_eig.min() <= tol::RANK * gram_eig.max_abs() {
        return Err(Error::Precondition(
            "GNS vector is not separating for the algebra (restricted state is not faithful)".into(),
        ));
    }
    let g = gram.matrix();
    let g_half = gram_eig.apply_real(f64::sqrt)?;
    let g_mhalf = gram_eig.apply_real(|l| 1.0 / l.sqrt())?;
    let cmat = CMatrix::from_fn(d, d, |j, i| hs_inner(&basis[j], &basis[i].adjoint()));

    let k = cmat.adjoint() * g * &cmat;
    // Δ̃ = G^{1/2} Δ G^{-1/2} is Hermitian.
    let tilde = HermitianMatrix::symmetrized(&g_mhalf * k.transpose() * &g_mhalf);
    let tilde_eig = tilde.eig()?;
    let delta_pow = |z: C64| -> Result<CMatrix> {
        let f = tilde_eig.apply(|l| real(l.max(0.0)).powc(z))?;
        Ok(&g_mhalf * f * &g_half)
    };
    let delta = delta_pow(real(1.0))?;
    let delta_half = delta_pow(real(0.5))?;
    let delta_mhalf = delta_pow(real(-0.5))?;
    let jmat = &cmat * delta_mhalf.map(|z| z.conj());
    let j_apply = |x: &CVector| -> CVector { &jmat * x.map(|z| z.conj()) };

    let omega = CVector::from_fn(d, |i, _| hs_inner(&basis[i], &identity(n)));
    let delta_fixes_omega = (&delta * &omega - &omega).norm() / (1.0 + omega.norm());
    let j_fixes_omega = (j_apply(&omega) - &omega).norm() / (1.0 + omega.norm());
    let j_involution = rel_residual(&(&jmat * jmat.map(|z| z.conj())), &identity(d));

    let mut polar_identity: f64 = 0.0;
    for b in basis {
        let x = CVector::from_fn(d, |i, _| hs_inner(&basis[i], b));
        let s = &cmat * x.map(|z| z.conj());
        let polar = j_apply(&(&delta_half * &x));
        polar_identity = polar_identity.max((polar - &s).norm() / (1.0 + s.norm()));
    }

    let pi = |a: &CMatrix| -> CMatrix { CMatrix::from_fn(d, d, |i, j| hs_inner(&basis[i], &(a * &basis[j]))) };
    let pis: Vec<CMatrix> = basis.iter().map(pi).collect();
    let jpis: Vec<CMatrix> = pis.iter().map(|p| &jmat * p.map(|z| z.conj()) * jmat.map(|z| z.conj())).collect();

    let mut jmj_commutes: f64 = 0.0;
    for t in &jpis {
        for p in &pis {
            let comm = t * p - p * t;
            jmj_commutes = jmj_commutes.max(frobenius(&comm) / (1.0 + frobenius(t) * frobenius(p)));
        }
    }
    let jmj_dim = StarAlgebra::span_dimension(&jpis);
    let commutant_dim = commutant_of(&pis, d).dim();

    let pi_span = StarAlgebra::orthonormal_span(&pis);
    let mut modular_group: f64 = 0.0;
    for &t in &TOMITA_TIMES {
        let u = delta_pow(C64::new(0.0, t))?;
        let u_inv = delta_pow(C64::new(0.0, -t))?;
        for p in &pis {
            let moved = &u * p * &u_inv;
            let proj = project_onto(&pi_span, &moved);
            modular_group = modular_group.max(rel_residual(&moved, &proj));
        }
    }

    let hilbert_schmidt = if d == n * n { Some(hs_tomita(m, rho)?) } else { None };

    let mut worst = [delta_fixes_omega, j_fixes_omega, j_involution, polar_identity, jmj_commutes, modular_group]
        .into_iter()
        .fold(0.0_f64, f64::max);
    if let Some(hs) = &hilbert_schmidt {
        worst = worst.max(hs.jmj_commutes).max(hs.modular_group).max(hs.j_delta_j);
    }
    let pass = worst <= TOMITA_TOL && jmj_dim == commutant_dim;
    Ok(TomitaReport {
        gns_dim: d,
        delta_fixes_omega,
        j_fixes_omega,
        j_involution,
        polar_identity,
        jmj_commutes,
        jmj_dim,
        commutant_dim,
        modular_group,
        hilbert_schmidt,
        pass,
    })
}

fn project_onto(span: &[CMatrix], x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::from_element(x.nrows(), x.ncols(), ZERO);
    for b in span {
        out += b * hs_inner(b, x);
    }
    out
}

fn hs_tomita(m: &StarAlgebra, rho: &DensityMatrix) -> Result<HsTomitaResiduals> {
    let data = modular_data(rho)?;
    let n = data.n;
    let mut jmj_commutes: f64 = 0.0;
    let mut modular_group: f64 = 0.0;
    for a in m.basis() {
        // J L_A J X = (A X†)† = X A†.
        let jaj = right_mult(&a.adjoint());
        for b in m.basis() {
            let lb = left_mult(b);
            jmj_commutes = jmj_commutes.max(frobenius(&(&jaj * &lb - &lb * &jaj)) / (1.0 + frobenius(&jaj)));
        }
        let la = left_mult(a);
        for &t in &TOMITA_TIMES {
            let moved = data.delta_pow(C64::new(0.0, t))? * &la * data.delta_pow(C64::new(0.0, -t))?;
            modular_group = modular_group.max(distance_from_left_action(&moved, n));
        }
    }
    // J Δ J = Δ⁻¹: conjugating by J maps L(ρ) R(ρ⁻¹) to L(ρ⁻¹) R(ρ).
    let j_delta_j = {
        let mut worst: f64 = 0.0;
        let inv = data.delta_pow(real(-1.0))?;
        let rep = StandardFormRep::new(n);
        for k in 0..n * n {
            let mut e = CVector::from_element(n * n, ZERO);
            e[k] = real(1.0);
            let lhs = rep.j(&(data.delta.matrix() * rep.j(&e)));
            let rhs = &inv * &e;
            worst = worst.max((lhs - &rhs).norm() / (1.0 + rhs.norm()));
        }
        worst
    };
    Ok(HsTomitaResiduals { jmj_commutes, modular_group, j_delta_j })
}

/// Relative distance of an operator on `C^{n²}` from `{I ⊗ Y}`.
fn distance_from_left_action(t: &CMatrix, n: usize) -> f64 {
    let mut y = CMatrix::from_element(n, n, ZERO);
    for k in 0..n {
        y += t.view((k * n, k * n), (n, n));
    }
    y /= real(n as f64);
    rel_residual(t, &left_mult(&y))
}
