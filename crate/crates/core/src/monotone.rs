//! Schwarz and 2-positive maps between matrix algebras, their preduals, and
//! monotonicity of relative entropy under them.
//!
//! A [`QuantumMap`] `α : Mat(in_dim) → Mat(out_dim)` acts on observables.
//! States live on the codomain and are pulled back by the predual
//! `α_*` defined through `tr(ρ α(A)) = tr(α_*(ρ) A)`.

use rand::Rng;

use crate::algebra::{conditional_expectation, cyclic_separating_report, StarAlgebra};
use crate::entropy::{umegaki, EntropyValue};
use crate::error::{Error, Result};
use crate::modular::{DensityMatrix, PositiveMatrix};
use crate::numkit::{frobenius, identity, min_eig, real, CMatrix, CVector, HermitianMatrix};
use crate::random::{self, TrialRng};

const MAP_TOL: f64 = 1e-10;
/// Margin tolerance for operator and entropy inequalities.
pub const MARGIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum MapKind {
    /// `α(A) = V† A V` with `V : C^{out} → C^{in}`, `V†V = I`.
    IsometryConjugation { v: CMatrix },
    /// `α(A) = U A U†`.
    UnitaryConjugation { u: CMatrix },
    /// `α(A) = Σ K_i† A K_i` with `K_i : C^{out} → C^{in}`, `Σ K_i†K_i = I`.
    KrausUnital { kraus: Vec<CMatrix> },
    /// Inclusion of a subalgebra `M ⊆ Mat(n)`.
    SubalgebraEmbedding { algebra: StarAlgebra },
    /// `α(A) = V† P A P V` where `A ↦ PAP` is a *-homomorphism on the domain
    /// algebra (`P` a projection in its commutant), so `A − PAP ⪰ 0` for
    /// `A ⪰ 0`.
    ContractionHom { projection: CMatrix, v: CMatrix, domain: StarAlgebra },
    /// `α(A) = Aᵀ`: positive but not 2-positive.
    Transpose,
}

#[derive(Debug, Clone)]
pub struct QuantumMap {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kind: MapKind,
}

fn is_isometry(v: &CMatrix) -> bool {
    frobenius(&(v.adjoint() * v - identity(v.ncols()))) <= MAP_TOL * (1.0 + v.ncols() as f64)
}

impl QuantumMap {
    pub fn identity(n: usize) -> Self {
        Self { in_dim: n, out_dim: n, kind: MapKind::UnitaryConjugation { u: identity(n) } }
    }

    pub fn isometry(v: CMatrix) -> Result<Self> {
        if !is_isometry(&v) {
            return Err(Error::Precondition("V†V ≠ I".into()));
        }
        Ok(Self { in_dim: v.nrows(), out_dim: v.ncols(), kind: MapKind::IsometryConjugation { v } })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        if u.nrows() != u.ncols() || !is_isometry(&u) {
            return Err(Error::Precondition("U is not unitary".into()));
        }
        let n = u.nrows();
        Ok(Self { in_dim: n, out_dim: n, kind: MapKind::UnitaryConjugation { u } })
    }

    pub fn kraus_unital(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Precondition("no Kraus operators".into()))?;
        let (in_dim, out_dim) = (first.nrows(), first.ncols());
        if kraus.iter().any(|k| k.nrows() != in_dim || k.ncols() != out_dim) {
            return Err(Error::Precondition("Kraus operators have inconsistent shapes".into()));
        }
        let sum = kraus.iter().fold(CMatrix::zeros(out_dim, out_dim), |s, k| s + k.adjoint() * k);
        let dev = frobenius(&(sum - identity(out_dim)));
        if dev > MAP_TOL * (1.0 + out_dim as f64) {
            return Err(Error::Precondition(format!("Σ K†K deviates from I by {dev:.2e}")));
        }
        Ok(Self { in_dim, out_dim, kind: MapKind::KrausUnital { kraus } })
    }

    /// `A ↦ A ⊗ I_{d2}`; the predual is the partial trace over the second
    /// factor.
    pub fn partial_trace(d1: usize, d2: usize) -> Self {
        let kraus = (0..d2)
            .map(|j| {
                let mut e = CMatrix::zeros(1, d2);
                e[(0, j)] = real(1.0);
                identity(d1).kronecker(&e)
            })
            .collect();
        Self { in_dim: d1, out_dim: d1 * d2, kind: MapKind::KrausUnital { kraus } }
    }

    /// `A ↦ Σ P_i A P_i` for a resolution of the identity into projections.
    pub fn pinching(projections: Vec<CMatrix>) -> Result<Self> {
        Self::kraus_unital(projections)
    }

    pub fn embedding(algebra: StarAlgebra) -> Self {
        let n = algebra.ambient_dim();
        Self { in_dim: n, out_dim: n, kind: MapKind::SubalgebraEmbedding { algebra } }
    }

    pub fn contraction_hom(domain: StarAlgebra, projection: CMatrix, v: CMatrix) -> Result<Self> {
        let n = domain.ambient_dim();
        if frobenius(&(&projection * &projection - &projection)) > MAP_TOL
            || frobenius(&(projection.adjoint() - &projection)) > MAP_TOL
        {
            return Err(Error::Precondition("P is not an orthogonal projection".into()));
        }
        for b in domain.basis() {
            if frobenius(&(&projection * b - b * &projection)) > 1e-8 {
                return Err(Error::Precondition("P does not commute with the domain algebra".into()));
            }
        }
        if v.nrows() != n || !is_isometry(&v) {
            return Err(Error::Precondition("V is not an isometry on the ambient space".into()));
        }
        let out_dim = v.ncols();
        Ok(Self { in_dim: n, out_dim, kind: MapKind::ContractionHom { projection, v, domain } })
    }

    pub fn transpose(n: usize) -> Self {
        Self { in_dim: n, out_dim: n, kind: MapKind::Transpose }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MapKind::IsometryConjugation { .. } => "isometry_conjugation",
            MapKind::UnitaryConjugation { .. } => "unitary_conjugation",
            MapKind::KrausUnital { .. } => "kraus_unital",
            MapKind::SubalgebraEmbedding { .. } => "subalgebra_embedding",
            MapKind::ContractionHom { .. } => "contraction_hom",
            MapKind::Transpose => "transpose",
        }
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        match &self.kind {
            MapKind::IsometryConjugation { v } => v.adjoint() * a * v,
            MapKind::UnitaryConjugation { u } => u * a * u.adjoint(),
            MapKind::KrausUnital { kraus } => {
                kraus.iter().fold(CMatrix::zeros(self.out_dim, self.out_dim), |s, k| s + k.adjoint() * a * k)
            }
            MapKind::SubalgebraEmbedding { .. } => a.clone(),
            MapKind::ContractionHom { projection, v, .. } => v.adjoint() * projection * a * projection * v,
            MapKind::Transpose => a.transpose(),
        }
    }

    /// Density of `tr(ρ α(·))` on the domain.
    pub fn apply_predual(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.out_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, actual: rho.dim() });
        }
        let r = rho.matrix();
        let out = match &self.kind {
            MapKind::IsometryConjugation { v } => v * r * v.adjoint(),
            MapKind::UnitaryConjugation { u } => u.adjoint() * r * u,
            MapKind::KrausUnital { kraus } => {
                kraus.iter().fold(CMatrix::zeros(self.in_dim, self.in_dim), |s, k| s + k * r * k.adjoint())
            }
            MapKind::SubalgebraEmbedding { algebra } => conditional_expectation(algebra, r),
            MapKind::ContractionHom { .. } => {
                return Err(Error::Precondition("contraction homomorphisms are not unital; no state predual".into()))
            }
            MapKind::Transpose => r.transpose(),
        };
        let trace = out.trace().re;
        if (trace - 1.0).abs() > 1e-8 {
            return Err(Error::Internal(format!("predual does not preserve the trace ({trace})")));
        }
        DensityMatrix::new(HermitianMatrix::symmetrized(out).into_matrix())
    }

    /// Random element of the domain algebra.
    pub fn random_input<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let g = random::gaussian_matrix(self.in_dim, self.in_dim, rng);
        match &self.kind {
            MapKind::SubalgebraEmbedding { algebra } | MapKind::ContractionHom { domain: algebra, .. } => {
                algebra.project(&g)
            }
            _ => g,
        }
    }

    /// `α ⊗ id₂` applied to a `2·in_dim` block matrix.
    pub fn apply_amplified(&self, block: &CMatrix) -> Result<CMatrix> {
        let n = self.in_dim;
        if block.nrows() != 2 * n || block.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, actual: block.nrows() });
        }
        let m = self.out_dim;
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        for bi in 0..2 {
            for bj in 0..2 {
                let sub = block.view((bi * n, bj * n), (n, n)).into_owned();
                out.view_mut((bi * m, bj * m), (m, m)).copy_from(&self.apply(&sub));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct PositivityReport {
    /// Smallest eigenvalue found among the tested differences or images.
    pub min_eig_worst: f64,
    pub trials: usize,
    pub pass: bool,
}

/// `min-eig(α(A†A) − α(A)†α(A))` over random `A`.
pub fn schwarz_check(alpha: &QuantumMap, trials: usize, seed: u64) -> Result<PositivityReport> {
    let mut rng = random::rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let a = alpha.random_input(&mut rng);
        let scale = frobenius(&a).max(1e-300);
        let a = a / real(scale);
        let fa = alpha.apply(&a);
        let diff = alpha.apply(&(a.adjoint() * &a)) - fa.adjoint() * &fa;
        worst = worst.min(min_eig(&diff)?);
    }
    Ok(PositivityReport { min_eig_worst: worst, trials, pass: worst >= -MARGIN_TOL })
}

/// Random positive element of `Mat(2) ⊗ M` for the domain algebra `M`:
/// `Y†Y` with rank-deficient `Y` so that boundary cases are hit.
fn random_positive_block(alpha: &QuantumMap, rng: &mut TrialRng) -> CMatrix {
    let n = alpha.in_dim;
    let mut y = CMatrix::zeros(2 * n, 2 * n);
    // One block row of Y gives a rank-≤n positive block matrix.
    for bj in 0..2 {
        let b = alpha.random_input(rng);
        y.view_mut((0, bj * n), (n, n)).copy_from(&b);
    }
    if rng.random_bool(0.5) {
        for bj in 0..2 {
            let b = alpha.random_input(rng);
            y.view_mut((n, bj * n), (n, n)).copy_from(&b);
        }
    }
    let x = y.adjoint() * y;
    let s = frobenius(&x).max(1e-300);
    x / real(s)
}

/// Smallest eigenvalue of `(α ⊗ id₂)(X)` over random positive `X`.
pub fn two_positive_check(alpha: &QuantumMap, trials: usize, seed: u64) -> Result<PositivityReport> {
    let mut rng = random::rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let x = random_positive_block(alpha, &mut rng);
        worst = worst.min(min_eig(&alpha.apply_amplified(&x)?)?);
    }
    Ok(PositivityReport { min_eig_worst: worst, trials, pass: worst >= -MARGIN_TOL })
}

/// The 4×4 positive block matrix whose block-wise transpose has a negative
/// eigenvalue. Spectrum `{4, 2, 0, 0}`.
pub fn transpose_witness() -> CMatrix {
    let rows = [[2.0, 0.0, 0.0, 2.0], [0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0], [2.0, 0.0, 0.0, 2.0]];
    CMatrix::from_fn(4, 4, |i, j| real(rows[i][j]))
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    /// `S(ω, φ)` on the codomain.
    pub s_in: EntropyValue,
    /// `S(ω∘α, φ∘α)` on the domain.
    pub s_out: EntropyValue,
    /// `s_in − s_out`; `+∞` when only `s_in` is infinite, `−∞` if the
    /// inequality is violated by an infinite `s_out`.
    pub margin: f64,
    pub pass: bool,
}

fn margin_of(big: EntropyValue, small: EntropyValue) -> f64 {
    match (big, small) {
        (EntropyValue::Infinite, EntropyValue::Infinite) => 0.0,
        (EntropyValue::Infinite, _) => f64::INFINITY,
        (_, EntropyValue::Infinite) => f64::NEG_INFINITY,
        (EntropyValue::Finite(a), EntropyValue::Finite(b)) => a - b,
    }
}

/// Compares `S(ω, φ)` with `S(ω∘α, φ∘α)`. The map is expected to be
/// Schwarz; every kind constructed here except the transpose is completely
/// positive.
pub fn monotonicity_report(psi: &DensityMatrix, phi: &DensityMatrix, alpha: &QuantumMap) -> Result<MonotonicityReport> {
    let s_in = umegaki(psi, phi)?;
    let (psi_out, phi_out) = (alpha.apply_predual(psi)?, alpha.apply_predual(phi)?);
    let s_out = umegaki(&psi_out, &phi_out)?;
    let margin = margin_of(s_in, s_out);
    Ok(MonotonicityReport { s_in, s_out, margin, pass: margin >= -MARGIN_TOL })
}

/// Hilbert-space level monotonicity statements.
#[derive(Debug, Clone)]
pub enum VectorMode {
    /// `R_{M1}(VΩ, VΦ) ≤ R_{M2}(Ω, Φ)` for an isometry `V : H₂ → H₁` with
    /// `V† M1 V ⊆ M2`.
    Isometry { v: CMatrix },
    /// As above for a partial isometry with `Ω` in its initial subspace.
    PartialIsometry { v: CMatrix },
    /// `R_{M1}(Ω, Φ) ≤ R_{M2}(UΩ, UΦ)` for a unitary `U ∈ M2`, with equality
    /// when `M1 = M2`.
    Unitary { u: CMatrix },
    /// `R_{M1}(VΩ, VΦ) ≤ R_{M2}(Ω, Φ)` through the homomorphism `A ↦ PAP`
    /// into `M2`, `P` a projection commuting with `M1`, `V ∈ M2` isometric.
    ContractionHom { v: CMatrix, projection: CMatrix },
    /// `R_{M1}(Ω, Φ) ≤ R_{M2}(Ω, Φ)` for `M1 ⊆ M2`.
    Subalgebra,
}

impl VectorMode {
    pub fn name(&self) -> &'static str {
        match self {
            VectorMode::Isometry { .. } => "isometry",
            VectorMode::PartialIsometry { .. } => "partial_isometry",
            VectorMode::Unitary { .. } => "unitary",
            VectorMode::ContractionHom { .. } => "contraction_hom",
            VectorMode::Subalgebra => "subalgebra",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorMonotonicityReport {
    pub lhs: EntropyValue,
    pub rhs: EntropyValue,
    pub margin: f64,
    /// Equality is asserted (unitary mode with `M1 = M2`).
    pub equality: bool,
    pub pass: bool,
}

/// `R_M(ξ, η)`: relative entropy of the vector functionals `⟨ξ, · ξ⟩` and
/// `⟨η, · η⟩` restricted to `M`.
pub fn vector_relative_entropy(m: &StarAlgebra, xi: &CVector, eta: &CVector) -> Result<EntropyValue> {
    let density = |v: &CVector| -> Result<PositiveMatrix> {
        let outer = v * v.adjoint();
        PositiveMatrix::from_hermitian(HermitianMatrix::symmetrized(conditional_expectation(m, &outer)))
    };
    umegaki(&density(xi)?, &density(eta)?)
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(what.to_string()))
    }
}

fn require_cyclic(m: &StarAlgebra, xi: &CVector, separating: bool, what: &str) -> Result<()> {
    let r = cyclic_separating_report(m, xi)?;
    require(r.cyclic && (!separating || r.separating), what)
}

fn maps_into(m1: &StarAlgebra, m2: &StarAlgebra, f: impl Fn(&CMatrix) -> CMatrix) -> bool {
    m1.basis().iter().all(|b| m2.membership_residual(&f(b)) <= 1e-8)
}

pub fn vector_monotonicity_report(
    mode: &VectorMode,
    m1: &StarAlgebra,
    m2: &StarAlgebra,
    omega: &CVector,
    phi: &CVector,
) -> Result<VectorMonotonicityReport> {
    let n2 = m2.ambient_dim();
    if omega.len() != n2 || phi.len() != n2 {
        return Err(Error::DimensionMismatch { expected: n2, actual: omega.len() });
    }
    let (lhs, rhs, equality) = match mode {
        VectorMode::Isometry { v } | VectorMode::PartialIsometry { v } => {
            let partial = matches!(mode, VectorMode::PartialIsometry { .. });
            require(v.nrows() == m1.ambient_dim() && v.ncols() == n2, "V must map the M2 space into the M1 space")?;
            let p = v.adjoint() * v;
            if partial {
                require(frobenius(&(&p * &p - &p)) <= 1e-10, "V†V is not a projection")?;
                require((&p * omega - omega).norm() <= 1e-10 * (1.0 + omega.norm()), "Ω is not in the initial subspace of V")?;
            } else {
                require(is_isometry(v), "V†V ≠ I")?;
            }
            require(maps_into(m1, m2, |b| v.adjoint() * b * v), "V† M1 V is not contained in M2")?;
            let v_omega = v * omega;
            require_cyclic(m1, &v_omega, partial, "VΩ is not cyclic (and separating) for M1")?;
            require_cyclic(m2, omega, partial, "Ω is not cyclic (and separating) for M2")?;
            (vector_relative_entropy(m1, &v_omega, &(v * phi))?, vector_relative_entropy(m2, omega, phi)?, false)
        }
        VectorMode::Unitary { u } => {
            require(u.nrows() == n2 && u.ncols() == n2 && is_isometry(u), "U is not unitary")?;
            require(m1.ambient_dim() == n2 && m1.is_subalgebra_of(m2), "M1 ⊄ M2")?;
            require(m2.membership_residual(u) <= 1e-8, "U ∉ M2")?;
            require_cyclic(m1, omega, false, "Ω is not cyclic for M1")?;
            let same = m1.dim() == m2.dim();
            (vector_relative_entropy(m1, omega, phi)?, vector_relative_entropy(m2, &(u * omega), &(u * phi))?, same)
        }
        VectorMode::ContractionHom { v, projection } => {
            let n1 = m1.ambient_dim();
            require(n1 == n2, "contraction mode needs a common Hilbert space")?;
            require(
                frobenius(&(projection * projection - projection)) <= 1e-10
                    && frobenius(&(projection.adjoint() - projection)) <= 1e-10,
                "P is not an orthogonal projection",
            )?;
            require(
                m1.basis().iter().all(|b| frobenius(&(projection * b - b * projection)) <= 1e-8),
                "P does not commute with M1, so A ↦ PAP is not a homomorphism",
            )?;
            require(maps_into(m1, m2, |b| projection * b * projection), "PM1P is not contained in M2")?;
            require(v.nrows() == n2 && v.ncols() == n2 && is_isometry(v), "V is not an isometry")?;
            require(m2.membership_residual(v) <= 1e-8, "V ∉ M2")?;
            let v_omega = v * omega;
            require_cyclic(m1, &v_omega, false, "VΩ is not cyclic for M1")?;
            require_cyclic(m2, omega, false, "Ω is not cyclic for M2")?;
            (vector_relative_entropy(m1, &v_omega, &(v * phi))?, vector_relative_entropy(m2, omega, phi)?, false)
        }
        VectorMode::Subalgebra => {
            require(m1.ambient_dim() == n2 && m1.is_subalgebra_of(m2), "M1 ⊄ M2")?;
            require_cyclic(m1, omega, false, "Ω is not cyclic for M1")?;
            (vector_relative_entropy(m1, omega, phi)?, vector_relative_entropy(m2, omega, phi)?, false)
        }
    };
    let margin = margin_of(rhs, lhs);
    let pass = if equality { margin.abs() <= MARGIN_TOL || margin == 0.0 } else { margin >= -MARGIN_TOL };
    Ok(VectorMonotonicityReport { lhs, rhs, margin, equality, pass })
}

#[derive(Debug, Clone)]
pub struct OperatorInequalityReport {
    /// Worst `min-eig(A^t − B^t)` with `A ⪰ B ⪰ 0`.
    pub loewner_heinz: f64,
    /// Worst `min-eig(f_t(K†AK) − K† f_t(A) K)`.
    pub hansen_jensen_pedersen: f64,
    /// Worst `min-eig(A₁^{2t} − T† A₂^{2t} T)` under `T†A₂²T ⪯ A₁²`, `‖T‖ = 1`.
    pub interpolation: f64,
    pub instances: usize,
    pub pass: bool,
}

pub const SUITE_TIMES: [f64; 3] = [0.25, 0.5, 0.75];

/// `A^t` with eigenvalues below the rank cut sent to zero; roundoff-level
/// eigenvalues of a singular `A` would otherwise contribute `(1e−16)^t`.
fn power(a: &HermitianMatrix, t: f64) -> Result<CMatrix> {
    a.eig()?.apply_on_support(|l| l.max(0.0).powf(t))
}

fn unit_psd(n: usize, rng: &mut TrialRng) -> HermitianMatrix {
    let p = random::psd(n, 1 + rng.random_range(0..n), rng);
    let s = p.eig().map(|e| e.max_abs()).unwrap_or(1.0).max(1e-300);
    p.scale(1.0 / s)
}

/// One Löwner–Heinz instance: `A = B + C` with `B, C ⪰ 0`.
pub fn loewner_heinz_margin(n: usize, t: f64, rng: &mut TrialRng) -> Result<f64> {
    let b = unit_psd(n, rng);
    let a = b.add(&unit_psd(n, rng).scale(random::uniform(0.0, 1.0, rng)));
    min_eig(&(power(&a, t)? - power(&b, t)?))
}

/// One Hansen–Jensen–Pedersen instance with a random contraction `K`.
pub fn hjp_margin(n: usize, t: f64, rng: &mut TrialRng) -> Result<f64> {
    let a = unit_psd(n, rng);
    let k = random::contraction(n, rng);
    let kak = HermitianMatrix::symmetrized(k.adjoint() * a.matrix() * &k);
    min_eig(&(power(&kak, t)? - k.adjoint() * power(&a, t)? * &k))
}

/// One interpolation instance: `A₁ ≻ 0`, `‖T‖ = 1`, `A₂ = B^{1/2}` with `B`
/// scaled so that `T† B T ⪯ A₁²`.
pub fn interpolation_margin(n1: usize, n2: usize, t: f64, rng: &mut TrialRng) -> Result<f64> {
    let a1 = unit_psd(n1, rng).add(&HermitianMatrix::identity(n1).scale(random::uniform(0.05, 0.5, rng)));
    let t_op = random::gaussian_matrix(n2, n1, rng);
    let t_op = &t_op / real(crate::numkit::op_norm(&t_op));
    let b = unit_psd(n2, rng);
    let a1_eig = a1.eig()?;
    let a1_inv = a1_eig.apply_real(|l| 1.0 / l)?;
    let pulled = HermitianMatrix::symmetrized(&a1_inv * t_op.adjoint() * b.matrix() * &t_op * &a1_inv);
    let top = pulled.eig()?.max();
    let b = if top > 0.0 { b.scale(1.0 / top) } else { b };
    let a2 = HermitianMatrix::symmetrized(power(&b, 0.5)?);
    let lhs = a1_eig.apply_real(|l| l.powf(2.0 * t))?;
    let rhs = t_op.adjoint() * power(&a2, 2.0 * t)? * &t_op;
    min_eig(&(lhs - rhs))
}

/// Runs `trials` instances of each operator-inequality family for every
/// `t ∈ {0.25, 0.5, 0.75}` (cycled), with dimensions drawn from `dims`.
pub fn loewner_heinz_hjp_suite(trials: usize, dims: &[usize], seed: u64) -> Result<OperatorInequalityReport> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidParameter("dims must be non-empty and positive".into()));
    }
    let mut worst = [f64::INFINITY; 3];
    for (family, tag) in ["loewner_heinz", "hjp", "interpolation"].iter().enumerate() {
        for k in 0..trials {
            let mut rng = random::stream(seed, random::tag(tag), k as u64);
            let n = dims[rng.random_range(0..dims.len())];
            let t = SUITE_TIMES[k % SUITE_TIMES.len()];
            let m = match family {
                0 => loewner_heinz_margin(n, t, &mut rng)?,
                1 => hjp_margin(n, t, &mut rng)?,
                _ => {
                    let n2 = dims[rng.random_range(0..dims.len())];
                    interpolation_margin(n, n2, t, &mut rng)?
                }
            };
            worst[family] = worst[family].min(m);
        }
    }
    let pass = worst.iter().all(|&m| m >= -MARGIN_TOL);
    Ok(OperatorInequalityReport {
        loewner_heinz: worst[0],
        hansen_jensen_pedersen: worst[1],
        interpolation: worst[2],
        instances: trials,
        pass,
    })
}

/// Families of unital CP maps used by the data-processing battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpiFamily {
    PartialTrace,
    Pinching,
    Kraus,
    Isometry,
}

pub const DPI_FAMILIES: [DpiFamily; 4] = [DpiFamily::PartialTrace, DpiFamily::Pinching, DpiFamily::Kraus, DpiFamily::Isometry];

impl DpiFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DpiFamily::PartialTrace => "partial_trace",
            DpiFamily::Pinching => "pinching",
            DpiFamily::Kraus => "kraus",
            DpiFamily::Isometry => "isometry",
        }
    }
}

/// Random map of the family with codomain dimension at most 8.
pub fn random_map<R: Rng + ?Sized>(family: DpiFamily, rng: &mut R) -> Result<QuantumMap> {
    match family {
        DpiFamily::PartialTrace => {
            let d1 = rng.random_range(2..=3);
            let d2 = rng.random_range(2..=(8 / d1));
            Ok(QuantumMap::partial_trace(d1, d2))
        }
        DpiFamily::Pinching => {
            let n = rng.random_range(2..=6);
            let k = rng.random_range(1..n);
            let u = random::unitary(n, rng);
            let p = u.columns(0, k) * u.columns(0, k).adjoint();
            let q = identity(n) - &p;
            QuantumMap::pinching(vec![p, q])
        }
        DpiFamily::Kraus => {
            let out_dim: usize = rng.random_range(2..=5);
            let in_dim: usize = rng.random_range(2..=5);
            let r = rng.random_range(1..=3);
            let v = random::isometry(in_dim * r.max(out_dim.div_ceil(in_dim)), out_dim, rng);
            let blocks = v.nrows() / in_dim;
            let kraus = (0..blocks).map(|j| v.rows(j * in_dim, in_dim).into_owned()).collect();
            QuantumMap::kraus_unital(kraus)
        }
        DpiFamily::Isometry => {
            let out_dim = rng.random_range(2..=5);
            let in_dim = rng.random_range(out_dim..=6);
            QuantumMap::isometry(random::isometry(in_dim, out_dim, rng))
        }
    }
}
