//! Gibbs states of finite quantum systems, their standard Liouvillians and
//! bounded perturbations.
//!
//! The dynamics is `τ_t(A) = e^{itH} A e^{−itH}`. On `HS(Cⁿ)` it is
//! implemented by `e^{itL}` with `L X = HX − XH`, and the Gibbs vector is
//! `Ω = ρ_β^{1/2}`. A perturbation `V` gives `Ω_V = e^{−β(L+V)/2} Ω`, which
//! equals `e^{−β(H+V)/2} / √Z` in closed form.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;

use crate::entropy::{araki_spectral, umegaki};
use crate::error::{Error, Result};
use crate::modular::{modular_data, relative_modular, DensityMatrix, PositiveMatrix};
use crate::numkit::{
    frobenius, identity, left_mult, op_norm, real, rel_residual, right_mult, unvec, vec, CMatrix,
    HermitianMatrix, SpectralDecomposition, C64, I,
};
use crate::random;

/// Agreement required between the operator-exponential and closed-form
/// constructions of `Ω_V`.
pub const DUAL_PATH_TOL: f64 = 1e-8;

/// Largest dimension for which `e^{−β(L+V)/2}` is formed as a general
/// `n² × n²` exponential. Above it the commuting factorization is used.
pub const OPERATOR_EXPM_MAX_DIM: usize = 4;

/// Hamiltonian, inverse temperature and the Gibbs state `e^{−βH}/Z`.
#[derive(Debug, Clone)]
pub struct FiniteQuantumSystem {
    pub h: HermitianMatrix,
    pub beta: f64,
    pub z: f64,
    pub ln_z: f64,
    pub rho: DensityMatrix,
    h_eig: SpectralDecomposition,
}

impl FiniteQuantumSystem {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `e^{sH}` for real `s`.
    pub fn exp_h(&self, s: f64) -> Result<CMatrix> {
        self.h_eig.apply_real(|l| (s * l).exp())
    }

    /// `τ_t(A) = e^{itH} A e^{−itH}`.
    pub fn evolve(&self, t: f64, a: &CMatrix) -> Result<CMatrix> {
        let u = self.h_eig.apply(|l| (I * t * l).exp())?;
        Ok(&u * a * u.adjoint())
    }

    /// `τ_{iβ}(B) = e^{−βH} B e^{βH}`.
    pub fn imaginary_shift(&self, b: &CMatrix) -> Result<CMatrix> {
        Ok(self.exp_h(-self.beta)? * b * self.exp_h(self.beta)?)
    }

    pub fn omega(&self) -> Result<CMatrix> {
        self.rho.sqrt()
    }
}

/// `ln tr e^{−βH}` evaluated with the ground energy shifted out.
fn log_partition(eig: &SpectralDecomposition, beta: f64) -> f64 {
    let e0 = eig.min();
    let s: f64 = eig.eigenvalues.iter().map(|&l| (-beta * (l - e0)).exp()).sum();
    -beta * e0 + s.ln()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("inverse temperature must be positive, got {beta}")));
    }
    Ok(())
}

pub fn gibbs_state(h: &HermitianMatrix, beta: f64) -> Result<FiniteQuantumSystem> {
    check_beta(beta)?;
    let eig = h.eig()?;
    let ln_z = log_partition(&eig, beta);
    let rho = DensityMatrix::new(eig.apply_real(|l| (-beta * l - ln_z).exp())?)?;
    if !rho.is_faithful()? {
        return Err(Error::NotFaithful { min_eig: rho.eig()?.min() });
    }
    Ok(FiniteQuantumSystem { h: h.clone(), beta, z: ln_z.exp(), ln_z, rho, h_eig: eig })
}

#[derive(Debug, Clone)]
pub struct KmsReport {
    pub trials: usize,
    /// Worst `|ω(A τ_{iβ}(B)) − ω(BA)| / scale` over the Gibbs state.
    pub max_residual: f64,
    /// Largest unscaled residual of the same identity for a random faithful
    /// state that is not the Gibbs state.
    pub probe_max_residual: f64,
    pub probe_detects_failure: bool,
    pub pass: bool,
}

pub const KMS_TOL: f64 = 1e-9;
/// Residual above which the probe state is declared non-KMS. Heuristic.
pub const PROBE_THRESHOLD: f64 = 1e-4;

/// `(ω(A τ_{iβ}(B)), ω(BA), scale)` for the state `rho`.
pub fn kms_sides(sys: &FiniteQuantumSystem, rho: &CMatrix, a: &CMatrix, b: &CMatrix) -> Result<(C64, C64, f64)> {
    let shifted = sys.imaginary_shift(b)?;
    let lhs = (rho * a * &shifted).trace();
    let rhs = (rho * b * a).trace();
    let scale = 1.0 + op_norm(a) * op_norm(&shifted).max(op_norm(b));
    Ok((lhs, rhs, scale))
}

pub fn kms_boundary_check(sys: &FiniteQuantumSystem, trials: usize, seed: u64) -> Result<KmsReport> {
    let n = sys.dim();
    let mut rng = random::rng(seed);
    let probe = random::density(n, &mut rng);
    let mut max_residual: f64 = 0.0;
    let mut probe_max: f64 = 0.0;
    for _ in 0..trials {
        let a = random::gaussian_matrix(n, n, &mut rng);
        let b = random::gaussian_matrix(n, n, &mut rng);
        let (lhs, rhs, scale) = kms_sides(sys, sys.rho.matrix(), &a, &b)?;
        max_residual = max_residual.max((lhs - rhs).norm() / scale);
        let (plhs, prhs, _) = kms_sides(sys, probe.matrix(), &a, &b)?;
        probe_max = probe_max.max((plhs - prhs).norm());
    }
    let probe_detects_failure = probe_max > PROBE_THRESHOLD;
    Ok(KmsReport {
        trials,
        max_residual,
        probe_max_residual: probe_max,
        probe_detects_failure,
        // Every state of a one-dimensional system is KMS, so the probe is vacuous there.
        pass: max_residual <= KMS_TOL && (trials == 0 || n == 1 || probe_detects_failure),
    })
}

/// `L = I⊗H − Hᵀ⊗I` on `C^{n²}` together with the Gibbs vector.
#[derive(Debug, Clone)]
pub struct LiouvillianRep {
    pub n: usize,
    pub l: HermitianMatrix,
    pub omega: CMatrix,
    pub beta: f64,
}

impl LiouvillianRep {
    /// `e^{sL}` for complex `s`.
    pub fn exp(&self, s: C64) -> Result<CMatrix> {
        self.l.eig()?.apply(|l| (s * l).exp())
    }

    /// `‖L vec(Ω)‖`.
    pub fn omega_residual(&self) -> f64 {
        (self.l.matrix() * vec(&self.omega)).norm()
    }

    /// Frobenius norm of `JL + LJ`. With `J = P∘conj`, where `P` swaps
    /// `vec(X)` and `vec(Xᵀ)`, this is `P conj(L) + L P`.
    pub fn j_anticommutator(&self) -> f64 {
        let p = transpose_permutation(self.n);
        let lm = self.l.matrix();
        frobenius(&(&p * lm.map(|z| z.conj()) + lm * &p))
    }

    /// `‖e^{−βL} − Δ_Ω‖ / (1 + ‖Δ_Ω‖)` with `Δ_Ω` from the modular data of
    /// the Gibbs state.
    pub fn modular_residual(&self, sys: &FiniteQuantumSystem) -> Result<f64> {
        let delta = modular_data(&sys.rho)?.delta;
        Ok(rel_residual(&self.exp(real(-self.beta))?, delta.matrix()))
    }

    /// `‖e^{−βL/2} vec(AΩ) − J vec(A†Ω)‖`.
    pub fn kms_vector_residual(&self, a: &CMatrix) -> Result<f64> {
        let lhs = self.exp(real(-self.beta / 2.0))? * vec(&(a * &self.omega));
        let rhs = vec(&(a.adjoint() * &self.omega).adjoint());
        Ok((lhs - rhs).norm())
    }
}

fn transpose_permutation(n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            p[(i * n + j, j * n + i)] = real(1.0);
        }
    }
    p
}

pub fn standard_liouvillian(sys: &FiniteQuantumSystem) -> Result<LiouvillianRep> {
    let h = sys.h.matrix();
    let l = HermitianMatrix::symmetrized(left_mult(h) - right_mult(h));
    Ok(LiouvillianRep { n: sys.dim(), l, omega: sys.omega()?, beta: sys.beta })
}

#[derive(Debug, Clone)]
pub struct PerturbationResult {
    pub v: HermitianMatrix,
    pub omega_v: CMatrix,
    /// `Ω_V Ω_V† / ‖Ω_V‖²`.
    pub state: DensityMatrix,
    /// `L + V_left − V_right`.
    pub l_v: HermitianMatrix,
    pub norm_sq: f64,
    /// Relative distance between the two constructions of `Ω_V`.
    pub dual_path_residual: f64,
    /// Distance of the perturbed state from the Gibbs state of `H + V`.
    pub gibbs_residual: f64,
}

impl PerturbationResult {
    /// `‖L_V vec(Ω_V/‖Ω_V‖)‖`.
    pub fn invariance_residual(&self) -> f64 {
        (self.l_v.matrix() * vec(&self.omega_v)).norm() / self.norm_sq.sqrt()
    }

    /// The `Ω_V Ω_V†` functional, not normalized.
    pub fn functional(&self) -> Result<PositiveMatrix> {
        PositiveMatrix::new(&self.omega_v * self.omega_v.adjoint())
    }
}

fn check_same_dim(sys: &FiniteQuantumSystem, v: &HermitianMatrix) -> Result<()> {
    if v.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), actual: v.dim() });
    }
    Ok(())
}

pub fn perturb_state(sys: &FiniteQuantumSystem, v: &HermitianMatrix) -> Result<PerturbationResult> {
    check_same_dim(sys, v)?;
    let n = sys.dim();
    let beta = sys.beta;
    let h = sys.h.matrix();
    let omega = sys.omega()?;

    let hv = sys.h.add(v);
    let hv_eig = hv.eig()?;
    let via_operator = if n <= OPERATOR_EXPM_MAX_DIM {
        let generator = (left_mult(h) - right_mult(h) + left_mult(v.matrix())) * real(-beta / 2.0);
        unvec(&(generator.exp() * vec(&omega)), n)
    } else {
        // L + V_left = L_{H+V} − R_H with commuting terms.
        hv_eig.apply_real(|l| (-beta * l / 2.0).exp())? * omega * sys.exp_h(beta / 2.0)?
    };

    let half_ln_z = sys.ln_z / 2.0;
    let closed = hv_eig.apply_real(|l| (-beta * l / 2.0 - half_ln_z).exp())?;

    let dual_path_residual = rel_residual(&via_operator, &closed);
    if !(dual_path_residual <= DUAL_PATH_TOL) {
        return Err(Error::Internal(format!(
            "perturbed vector constructions disagree by {dual_path_residual:.3e}"
        )));
    }

    let norm_sq = (log_partition(&hv_eig, beta) - sys.ln_z).exp();
    let gram = &closed * closed.adjoint();
    let state = DensityMatrix::new(HermitianMatrix::symmetrized(gram / real(norm_sq)).into_matrix())?;
    let gibbs_v = gibbs_state(&hv, beta)?;
    let gibbs_residual = frobenius(&(state.matrix() - gibbs_v.rho.matrix()));
    let l_v = HermitianMatrix::symmetrized(left_mult(hv.matrix()) - right_mult(hv.matrix()));
    Ok(PerturbationResult {
        v: v.clone(),
        omega_v: closed,
        state,
        l_v,
        norm_sq,
        dual_path_residual,
        gibbs_residual,
    })
}

#[derive(Debug, Clone)]
pub struct PerturbationEntropyReport {
    /// `S(ω, ω_V) = ln‖Ω_V‖² + βω(V)`.
    pub s_fwd: f64,
    /// `S(ω_V, ω) = −ln‖Ω_V‖² − βω_V(V)`.
    pub s_bwd: f64,
    /// Worst deviation of the spectral and Umegaki values from the closed forms.
    pub entropy_residual: f64,
    /// `log Δ_{Ω_V,Ω} = log Δ_Ω − βV_left`.
    pub log_forward_residual: f64,
    /// `log Δ_{Ω,Ω_V} = log Δ_{Ω_V} + βV_left`.
    pub log_backward_residual: f64,
    pub identities_residual: f64,
    pub pass: bool,
}

pub const PERTURBATION_TOL: f64 = 1e-7;

fn log_relative_modular(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<CMatrix> {
    relative_modular(psi, phi)?.eig()?.apply_real(f64::ln)
}

pub fn perturbation_entropy_report(sys: &FiniteQuantumSystem, v: &HermitianMatrix) -> Result<PerturbationEntropyReport> {
    let pert = perturb_state(sys, v)?;
    let beta = sys.beta;
    let ln_norm = pert.norm_sq.ln();
    let s_fwd = ln_norm + beta * sys.rho.expectation(v.matrix()).re;
    let s_bwd = -ln_norm - beta * pert.state.expectation(v.matrix()).re;

    let omega = sys.rho.positive();
    let omega_v = pert.state.positive();
    let fwd = [araki_spectral(omega, omega_v)?, umegaki(omega, omega_v)?];
    let bwd = [araki_spectral(omega_v, omega)?, umegaki(omega_v, omega)?];
    let mut entropy_residual: f64 = 0.0;
    for value in fwd {
        entropy_residual = entropy_residual.max((value.to_f64() - s_fwd).abs());
    }
    for value in bwd {
        entropy_residual = entropy_residual.max((value.to_f64() - s_bwd).abs());
    }

    let functional_v = pert.functional()?;
    let v_left = left_mult(v.matrix()) * real(beta);
    let log_delta = modular_data(&sys.rho)?.log_delta;
    let log_delta_v = modular_data(&pert.state)?.log_delta;
    let fwd_expected = log_delta.matrix() - &v_left;
    let log_forward_residual = rel_residual(&log_relative_modular(&functional_v, omega)?, &fwd_expected);
    let bwd_expected = log_delta_v.matrix() + &v_left;
    let log_backward_residual = rel_residual(&log_relative_modular(omega, &functional_v)?, &bwd_expected);

    let identities_residual = entropy_residual.max(log_forward_residual).max(log_backward_residual);
    Ok(PerturbationEntropyReport {
        s_fwd,
        s_bwd,
        entropy_residual,
        log_forward_residual,
        log_backward_residual,
        identities_residual,
        pass: identities_residual <= PERTURBATION_TOL,
    })
}

pub const MAX_DYSON_ORDER: usize = 4;
const QUADRATURE_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct ExpansionalReport {
    pub t: f64,
    pub order: usize,
    /// `e^{it(H+V)} e^{−itH}`.
    pub closed_form: CMatrix,
    /// Dyson series truncated after `order` terms.
    pub dyson: CMatrix,
    /// Operator norm of each Dyson term, starting with the identity.
    pub term_norms: Vec<f64>,
    pub truncation_error: f64,
    /// `Σ_{m > order} (|t| ‖V‖)^m / m!`.
    pub truncation_bound: f64,
    pub unitarity_residual: f64,
}

/// Iterated integrals `i^k ∫_{0<s₁<…<s_k<t} τ_{s₁}(V)…τ_{s_k}(V)`.
struct Dyson<'a> {
    sys: &'a FiniteQuantumSystem,
    v: &'a CMatrix,
    rule: Vec<(f64, f64)>,
}

impl Dyson<'_> {
    /// `F_k(s) = i ∫₀^s F_{k−1}(u) τ_u(V) du`, `F_0 = I`.
    fn term(&self, k: usize, upper: f64) -> Result<CMatrix> {
        let n = self.sys.dim();
        if k == 0 {
            return Ok(identity(n));
        }
        let half = upper / 2.0;
        let mut acc = CMatrix::zeros(n, n);
        for &(x, w) in &self.rule {
            let u = half * (x + 1.0);
            let inner = self.term(k - 1, u)?;
            acc += inner * self.sys.evolve(u, self.v)? * real(w * half);
        }
        Ok(acc * I)
    }
}

pub fn expansional(sys: &FiniteQuantumSystem, v: &HermitianMatrix, t: f64, order: usize) -> Result<ExpansionalReport> {
    check_same_dim(sys, v)?;
    if order == 0 || order > MAX_DYSON_ORDER {
        return Err(Error::InvalidParameter(format!("Dyson order must lie in 1..={MAX_DYSON_ORDER}, got {order}")));
    }
    let hv = sys.h.add(v);
    let forward = hv.eig()?.apply(|l| (I * t * l).exp())?;
    let closed_form = forward * sys.h.eig()?.apply(|l| (-I * t * l).exp())?;
    let nodes = NonZeroUsize::new(QUADRATURE_NODES).expect("nonzero node count");
    let rule = GaussLegendre::new(nodes).as_node_weight_pairs().to_vec();
    let dyson_terms = Dyson { sys, v: v.matrix(), rule };
    let mut dyson = CMatrix::zeros(sys.dim(), sys.dim());
    let mut term_norms = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let term = dyson_terms.term(k, t)?;
        term_norms.push(op_norm(&term));
        dyson += term;
    }
    let x = t.abs() * op_norm(v.matrix());
    let mut partial = 0.0;
    let mut factor = 1.0;
    for m in 0..=order {
        if m > 0 {
            factor *= x / m as f64;
        }
        partial += factor;
    }
    let truncation_bound = (x.exp() - partial).max(0.0);
    Ok(ExpansionalReport {
        t,
        order,
        truncation_error: op_norm(&(&closed_form - &dyson)),
        unitarity_residual: frobenius(&(closed_form.adjoint() * &closed_form - identity(sys.dim()))),
        closed_form,
        dyson,
        term_norms,
        truncation_bound,
    })
}

#[derive(Debug, Clone)]
pub struct TrotterReport {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    /// `e_n / e_{2n}` for each consecutive doubling in `steps`.
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Below this every splitting is exact to working precision.
pub const TROTTER_EXACT_TOL: f64 = 1e-12;
pub const TROTTER_RATIO_RANGE: (f64, f64) = (1.7, 2.3);

pub fn trotter_check(a: &HermitianMatrix, b: &HermitianMatrix, t: f64, steps: &[usize]) -> Result<TrotterReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    if steps.is_empty() || steps[0] == 0 || steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("step counts must be positive and increasing".into()));
    }
    let a_eig = a.eig()?;
    let b_eig = b.eig()?;
    let exact = unitary_group(&a.add(b).eig()?, t)?;
    let mut errors = Vec::with_capacity(steps.len());
    for &n in steps {
        let s = t / n as f64;
        let step = unitary_group(&a_eig, s)? * unitary_group(&b_eig, s)?;
        let product = step.pow(n as u32);
        errors.push(op_norm(&(product - &exact)));
    }
    let mut ratios = Vec::new();
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            if steps[j] == 2 * steps[i] {
                ratios.push(errors[i] / errors[j]);
            }
        }
    }
    let exact_split = errors.iter().all(|&e| e <= TROTTER_EXACT_TOL);
    let (lo, hi) = TROTTER_RATIO_RANGE;
    let asymptotic = ratios.last().is_some_and(|&r| (lo..=hi).contains(&r));
    Ok(TrotterReport { steps: steps.to_vec(), errors, ratios, pass: exact_split || asymptotic })
}

/// `e^{isA}`, exactly the identity at `s = 0`.
fn unitary_group(eig: &SpectralDecomposition, s: f64) -> Result<CMatrix> {
    if s == 0.0 {
        return Ok(identity(eig.dim()));
    }
    eig.apply(|l| (I * s * l).exp())
}

#[derive(Debug, Clone)]
pub struct GoldenThompsonReport {
    /// `tr e^{−β(H+V)}`.
    pub perturbed_trace: f64,
    /// `tr(e^{−βH} e^{−βV})`.
    pub product_trace: f64,
    /// `‖Ω_V‖²`.
    pub norm_sq: f64,
    /// `‖e^{−βV/2} Ω‖²`.
    pub vector_bound: f64,
    /// `e^{−βω(V)}`.
    pub peierls_lower: f64,
    /// Smallest relative slack among the three inequalities.
    pub worst_margin: f64,
    pub pass: bool,
}

pub const GT_SLACK: f64 = 1e-9;

pub fn golden_thompson_peierls_report(sys: &FiniteQuantumSystem, v: &HermitianMatrix) -> Result<GoldenThompsonReport> {
    check_same_dim(sys, v)?;
    let beta = sys.beta;
    let hv = sys.h.add(v);
    let perturbed_trace = log_partition(&hv.eig()?, beta).exp();
    let v_eig = v.eig()?;
    let product_trace = (sys.exp_h(-beta)? * v_eig.apply_real(|l| (-beta * l).exp())?).trace().re;
    let pert = perturb_state(sys, v)?;
    let damped = v_eig.apply_real(|l| (-beta * l / 2.0).exp())? * sys.omega()?;
    let vector_bound = frobenius(&damped).powi(2);
    let peierls_lower = (-beta * sys.rho.expectation(v.matrix()).re).exp();
    let margins = [
        (product_trace - perturbed_trace) / product_trace,
        (vector_bound - pert.norm_sq) / vector_bound,
        (pert.norm_sq - peierls_lower) / pert.norm_sq,
    ];
    let worst_margin = margins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(GoldenThompsonReport {
        perturbed_trace,
        product_trace,
        norm_sq: pert.norm_sq,
        vector_bound,
        peierls_lower,
        worst_margin,
        pass: worst_margin >= -GT_SLACK,
    })
}

/// `V_c = 1_{[−c,c]}(V) V`.
pub fn spectral_truncation(v: &HermitianMatrix, cutoff: f64) -> Result<HermitianMatrix> {
    if !(cutoff >= 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff must be non-negative, got {cutoff}")));
    }
    let m = v.eig()?.apply_real(|l| if l.abs() <= cutoff { l } else { 0.0 })?;
    Ok(HermitianMatrix::symmetrized(m))
}

/// Random Hamiltonian and perturbation of unit operator norm with
/// `β ∈ [0.1, 5]`, so that `e^{−β(H+V)}` stays well inside double range.
pub fn random_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(FiniteQuantumSystem, HermitianMatrix)> {
    let h = random::hermitian_with_norm(n, 1.0, rng);
    let v = random::hermitian_with_norm(n, 1.0, rng);
    let beta = random::uniform(0.1, 5.0, rng);
    Ok((gibbs_state(&h, beta)?, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{commutator, max_abs, ZERO};
    use approx::assert_relative_eq;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(d)
    }

    fn pauli_x() -> HermitianMatrix {
        HermitianMatrix::symmetrized(CMatrix::from_row_slice(2, 2, &[ZERO, real(1.0), real(1.0), ZERO]))
    }

    #[test]
    fn zero_hamiltonian_gives_maximally_mixed_state() {
        let sys = gibbs_state(&HermitianMatrix::zeros(3), 2.0).unwrap();
        assert!(max_abs(&(sys.rho.matrix() - identity(3) / real(3.0))) < 1e-15);
        assert_relative_eq!(sys.z, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn two_level_gibbs_state() {
        let (e, beta) = (1.3, 0.7);
        let sys = gibbs_state(&diag(&[0.0, e]), beta).unwrap();
        let w = (-beta * e).exp();
        assert_relative_eq!(sys.rho.matrix()[(0, 0)].re, 1.0 / (1.0 + w), max_relative = 1e-14);
        assert_relative_eq!(sys.rho.matrix()[(1, 1)].re, w / (1.0 + w), max_relative = 1e-14);
        assert_relative_eq!(sys.z, 1.0 + w, max_relative = 1e-14);
    }

    #[test]
    fn high_temperature_limit() {
        let mut rng = random::rng(3);
        let h = random::hermitian(4, &mut rng);
        let norm = op_norm(h.matrix());
        for beta in [1e-2, 1e-3, 1e-4] {
            let sys = gibbs_state(&h, beta).unwrap();
            let dev = max_abs(&(sys.rho.matrix() - identity(4) / real(4.0)));
            assert!(dev <= beta * norm, "beta {beta}: {dev}");
        }
    }

    #[test]
    fn partition_function_matches_trace() {
        let mut rng = random::rng(4);
        let h = random::hermitian(5, &mut rng);
        let sys = gibbs_state(&h, 1.7).unwrap();
        let direct = h.matrix().map(|z| z * -1.7).exp().trace().re;
        assert_relative_eq!(sys.z, direct, max_relative = 1e-10);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(gibbs_state(&diag(&[0.0, 1.0]), 0.0).is_err());
        assert!(gibbs_state(&diag(&[0.0, 1.0]), -1.0).is_err());
    }

    #[test]
    fn kms_identity_for_identity_operators() {
        let sys = gibbs_state(&diag(&[0.0, 0.4, 2.0]), 1.1).unwrap();
        let id = identity(3);
        let (lhs, rhs, _) = kms_sides(&sys, sys.rho.matrix(), &id, &id).unwrap();
        assert!((lhs - real(1.0)).norm() < 1e-14);
        assert!((rhs - real(1.0)).norm() < 1e-14);
    }

    #[test]
    fn kms_identity_for_diagonal_operators() {
        let sys = gibbs_state(&diag(&[0.0, 0.4, 2.0]), 1.1).unwrap();
        let a = [0.3, -1.2, 2.0];
        let b = [1.5, 0.7, -0.4];
        let am = diag(&a).into_matrix();
        let bm = diag(&b).into_matrix();
        let expected: f64 = (0..3).map(|i| sys.rho.matrix()[(i, i)].re * a[i] * b[i]).sum();
        let (lhs, rhs, _) = kms_sides(&sys, sys.rho.matrix(), &am, &bm).unwrap();
        assert!((lhs - real(expected)).norm() < 1e-14);
        assert!((rhs - real(expected)).norm() < 1e-14);
    }

    #[test]
    fn kms_check_on_random_system_against_direct_exponentials() {
        let mut rng = random::rng(5);
        let h = random::hermitian(4, &mut rng);
        let beta = 1.3;
        let sys = gibbs_state(&h, beta).unwrap();
        let report = kms_boundary_check(&sys, 100, 9).unwrap();
        assert!(report.pass, "{report:?}");
        let e_minus = h.matrix().map(|z| z * -beta).exp();
        let e_plus = h.matrix().map(|z| z * beta).exp();
        let rho = &e_minus / real(e_minus.trace().re);
        let a = random::gaussian_matrix(4, 4, &mut rng);
        let b = random::gaussian_matrix(4, 4, &mut rng);
        let lhs = (&rho * &a * &e_minus * &b * &e_plus).trace();
        let rhs = (&rho * &b * &a).trace();
        assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn liouvillian_of_zero_hamiltonian_vanishes() {
        let sys = gibbs_state(&HermitianMatrix::zeros(3), 1.0).unwrap();
        let rep = standard_liouvillian(&sys).unwrap();
        assert_eq!(max_abs(rep.l.matrix()), 0.0);
    }

    #[test]
    fn two_level_liouvillian_spectrum() {
        let e = 0.9;
        let sys = gibbs_state(&diag(&[0.0, e]), 1.0).unwrap();
        let rep = standard_liouvillian(&sys).unwrap();
        let eig = rep.l.eig().unwrap();
        let expected = [-e, 0.0, 0.0, e];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn liouvillian_implements_the_dynamics() {
        let mut rng = random::rng(6);
        for _ in 0..10 {
            let sys = gibbs_state(&random::hermitian(4, &mut rng), 1.0).unwrap();
            let rep = standard_liouvillian(&sys).unwrap();
            let x = random::gaussian_matrix(4, 4, &mut rng);
            let t = random::uniform(-3.0, 3.0, &mut rng);
            let u = sys.h.matrix().map(|z| z * I * t).exp();
            let direct = &u * &x * u.adjoint();
            let via_l = unvec(&(rep.exp(I * t).unwrap() * vec(&x)), 4);
            assert!(rel_residual(&via_l, &direct) < 1e-12);
        }
    }

    #[test]
    fn liouvillian_invariants() {
        let mut rng = random::rng(7);
        for n in 1..=5 {
            let beta = random::uniform(0.1, 5.0, &mut rng);
            let sys = gibbs_state(&random::hermitian(n, &mut rng), beta).unwrap();
            let rep = standard_liouvillian(&sys).unwrap();
            assert!(rep.omega_residual() <= 1e-8);
            assert!(rep.j_anticommutator() <= 1e-12);
            assert!(rep.modular_residual(&sys).unwrap() <= 1e-7);
            let a = random::gaussian_matrix(n, n, &mut rng);
            assert!(rep.kms_vector_residual(&a).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn zero_perturbation_is_trivial() {
        let mut rng = random::rng(8);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 0.8).unwrap();
        let pert = perturb_state(&sys, &HermitianMatrix::zeros(3)).unwrap();
        assert!(max_abs(&(&pert.omega_v - sys.omega().unwrap())) < 1e-12);
        assert!(max_abs(&(pert.state.matrix() - sys.rho.matrix())) < 1e-12);
        assert_relative_eq!(pert.norm_sq, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn scalar_perturbation_rescales_the_vector() {
        let mut rng = random::rng(9);
        let beta = 1.4;
        let cst = 0.6;
        let sys = gibbs_state(&random::hermitian(3, &mut rng), beta).unwrap();
        let pert = perturb_state(&sys, &HermitianMatrix::identity(3).scale(cst)).unwrap();
        let expected = sys.omega().unwrap() * real((-beta * cst / 2.0).exp());
        assert!(max_abs(&(&pert.omega_v - expected)) < 1e-12);
        assert!(max_abs(&(pert.state.matrix() - sys.rho.matrix())) < 1e-12);
    }

    #[test]
    fn commuting_perturbation_norm_is_a_spectral_sum() {
        let (h, v, beta) = ([0.0, 0.5, 1.5, 2.0], [0.3, -0.2, 1.0, 0.0], 1.2);
        let sys = gibbs_state(&diag(&h), beta).unwrap();
        let pert = perturb_state(&sys, &diag(&v)).unwrap();
        let z: f64 = h.iter().map(|e| (-beta * e).exp()).sum();
        let zv: f64 = h.iter().zip(&v).map(|(e, x)| (-beta * (e + x)).exp()).sum();
        assert_relative_eq!(pert.norm_sq, zv / z, max_relative = 1e-13);
    }

    #[test]
    fn perturbation_invariants_on_random_instances() {
        let mut rng = random::rng(10);
        for n in 1..=5 {
            let (sys, v) = random_instance(n, &mut rng).unwrap();
            let pert = perturb_state(&sys, &v).unwrap();
            assert!(pert.dual_path_residual <= DUAL_PATH_TOL);
            assert!(pert.gibbs_residual <= 1e-9, "{}", pert.gibbs_residual);
            assert!(min_cone(&pert.omega_v) >= -1e-10);
            assert!(pert.invariance_residual() <= 1e-8);
            let back_sys = gibbs_state(&sys.h.add(&v), sys.beta).unwrap();
            let back = perturb_state(&back_sys, &v.scale(-1.0)).unwrap();
            assert!(frobenius(&(back.state.matrix() - sys.rho.matrix())) <= 1e-9);
        }
    }

    fn min_cone(x: &CMatrix) -> f64 {
        HermitianMatrix::symmetrized(x.clone()).eig().unwrap().min()
    }

    #[test]
    fn perturbation_entropy_identities() {
        let mut rng = random::rng(11);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let zero = perturbation_entropy_report(&sys, &HermitianMatrix::zeros(3)).unwrap();
        assert!(zero.s_fwd.abs() < 1e-12 && zero.s_bwd.abs() < 1e-12);
        assert!(zero.identities_residual <= 1e-10, "{zero:?}");
        for _ in 0..20 {
            let n = 1 + rng.random_range(0..6);
            let (sys, v) = random_instance(n, &mut rng).unwrap();
            let report = perturbation_entropy_report(&sys, &v).unwrap();
            assert!(report.pass, "{report:?}");
            assert!(report.s_fwd >= -1e-10 && report.s_bwd >= -1e-10);
        }
    }

    #[test]
    fn commuting_pair_reduces_to_free_energy_algebra() {
        let (h, v, beta) = ([0.0, 1.0, 2.5], [0.4, -0.7, 0.1], 0.9);
        let sys = gibbs_state(&diag(&h), beta).unwrap();
        let report = perturbation_entropy_report(&sys, &diag(&v)).unwrap();
        let p: Vec<f64> = h.iter().map(|e| (-beta * e).exp()).collect();
        let q: Vec<f64> = h.iter().zip(&v).map(|(e, x)| (-beta * (e + x)).exp()).collect();
        let (zp, zq): (f64, f64) = (p.iter().sum(), q.iter().sum());
        let kl = |a: &[f64], za: f64, b: &[f64], zb: f64| -> f64 {
            a.iter().zip(b).map(|(x, y)| x / za * ((x / za) / (y / zb)).ln()).sum()
        };
        assert!((report.s_fwd - kl(&p, zp, &q, zq)).abs() < 1e-12);
        assert!((report.s_bwd - kl(&q, zq, &p, zp)).abs() < 1e-12);
        assert!(report.identities_residual <= 1e-9);
    }

    #[test]
    fn expansional_without_perturbation_is_identity() {
        let mut rng = random::rng(12);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let rep = expansional(&sys, &HermitianMatrix::zeros(3), 0.8, 3).unwrap();
        assert!(max_abs(&(&rep.closed_form - identity(3))) < 1e-14);
        assert!(rep.term_norms[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn expansional_is_unitary_and_solves_its_equation() {
        let mut rng = random::rng(13);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let v = random::hermitian(3, &mut rng);
        let t = 0.9;
        let rep = expansional(&sys, &v, t, 1).unwrap();
        assert!(rep.unitarity_residual <= 1e-9);
        let h = 1e-5;
        let plus = expansional(&sys, &v, t + h, 1).unwrap().closed_form;
        let minus = expansional(&sys, &v, t - h, 1).unwrap().closed_form;
        let derivative = (plus - minus) / real(2.0 * h);
        let rhs = &rep.closed_form * sys.evolve(t, v.matrix()).unwrap() * I;
        assert!(rel_residual(&derivative, &rhs) < 1e-8);
    }

    #[test]
    fn dyson_error_decays_factorially() {
        let mut rng = random::rng(14);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let v = random::hermitian_with_norm(3, 0.5, &mut rng);
        let mut previous = f64::INFINITY;
        for order in 1..=MAX_DYSON_ORDER {
            let rep = expansional(&sys, &v, 0.6, order).unwrap();
            assert!(rep.truncation_error <= rep.truncation_bound + 1e-13, "{order}: {rep:?}");
            assert!(rep.truncation_error < previous / 2.0);
            previous = rep.truncation_error;
        }
    }

    #[test]
    fn first_order_remainder_is_quadratic_in_time() {
        let mut rng = random::rng(15);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let v = random::hermitian(3, &mut rng);
        let errs: Vec<f64> =
            [0.2, 0.1, 0.05, 0.025].iter().map(|&t| expansional(&sys, &v, t, 1).unwrap().truncation_error).collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        }
    }

    #[test]
    fn expansional_rejects_bad_orders() {
        let sys = gibbs_state(&HermitianMatrix::zeros(2), 1.0).unwrap();
        assert!(expansional(&sys, &HermitianMatrix::zeros(2), 1.0, 0).is_err());
        assert!(expansional(&sys, &HermitianMatrix::zeros(2), 1.0, 5).is_err());
    }

    #[test]
    fn trotter_exact_for_commuting_pair() {
        let rep = trotter_check(&diag(&[1.0, -2.0]), &diag(&[0.5, 3.0]), 1.0, &[1, 2, 4, 8]).unwrap();
        assert!(rep.errors.iter().all(|&e| e <= 1e-12));
        assert!(rep.pass);
        let zero = trotter_check(&pauli_x(), &diag(&[1.0, -1.0]), 0.0, &[1, 2]).unwrap();
        assert!(zero.errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn trotter_pauli_first_order_decay() {
        let rep = trotter_check(&pauli_x(), &diag(&[1.0, -1.0]), 1.0, &[8, 16, 32, 64]).unwrap();
        assert_eq!(rep.ratios.len(), 3);
        for r in &rep.ratios {
            assert!((1.7..=2.3).contains(r), "{rep:?}");
        }
        assert!(rep.pass);
    }

    #[test]
    fn trotter_rejects_unsorted_steps() {
        assert!(trotter_check(&pauli_x(), &pauli_x(), 1.0, &[4, 2]).is_err());
    }

    #[test]
    fn golden_thompson_equality_cases() {
        let sys = gibbs_state(&diag(&[0.0, 1.0, 3.0]), 0.7).unwrap();
        let rep = golden_thompson_peierls_report(&sys, &diag(&[0.2, -1.0, 0.4])).unwrap();
        assert!((rep.product_trace - rep.perturbed_trace).abs() <= 1e-12 * rep.product_trace);
        assert!(rep.pass);
        let mut rng = random::rng(16);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 0.7).unwrap();
        let shift = golden_thompson_peierls_report(&sys, &HermitianMatrix::identity(3).scale(0.8)).unwrap();
        assert_relative_eq!(shift.product_trace, shift.perturbed_trace, max_relative = 1e-12);
        assert_relative_eq!(shift.perturbed_trace, sys.z * (-0.7f64 * 0.8).exp(), max_relative = 1e-12);
    }

    #[test]
    fn golden_thompson_random_pairs() {
        let mut rng = random::rng(17);
        for _ in 0..200 {
            let n = 2 + rng.random_range(0..4);
            let (sys, v) = random_instance(n, &mut rng).unwrap();
            let rep = golden_thompson_peierls_report(&sys, &v).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn truncation_examples() {
        let v = diag(&[5.0, -3.0, 1.0]);
        let cut = spectral_truncation(&v, 2.0).unwrap();
        assert!(max_abs(&(cut.matrix() - diag(&[0.0, 0.0, 1.0]).matrix())) < 1e-14);
        let full = spectral_truncation(&v, 5.0).unwrap();
        assert!(max_abs(&(full.matrix() - v.matrix())) < 1e-14);
        assert!(spectral_truncation(&v, -1.0).is_err());
    }

    #[test]
    fn truncation_sweep_converges() {
        let mut rng = random::rng(18);
        let (sys, v) = random_instance(4, &mut rng).unwrap();
        let xi = random::gaussian_vector(4, &mut rng);
        let target = perturb_state(&sys, &v).unwrap();
        let top = v.eig().unwrap().max_abs();
        let mut prev = f64::INFINITY;
        for k in 0..=8 {
            let cutoff = top * k as f64 / 8.0;
            let vc = spectral_truncation(&v, cutoff).unwrap();
            let dist = (vc.matrix() * &xi - v.matrix() * &xi).norm();
            assert!(dist <= prev + 1e-12);
            prev = dist;
        }
        assert!(prev < 1e-12);
        let at_top = perturb_state(&sys, &spectral_truncation(&v, top).unwrap()).unwrap();
        assert!(max_abs(&(at_top.omega_v - target.omega_v)) < 1e-12);
    }

    #[test]
    fn liouvillian_anticommutes_with_j_on_vectors() {
        let mut rng = random::rng(19);
        let sys = gibbs_state(&random::hermitian(3, &mut rng), 1.0).unwrap();
        let x = random::gaussian_matrix(3, 3, &mut rng);
        let h = sys.h.matrix();
        let jl = commutator(h, &x).adjoint();
        let lj = commutator(h, &x.adjoint());
        assert!(max_abs(&(jl + lj)) < 1e-13);
    }
}
