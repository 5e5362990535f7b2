//! Relative free energy of a partitioned system `H = H₀ + U` and the
//! variational principles that bracket it.
//!
//! `H₀` is a sum of local terms on a tensor product of subsystems and `U` is
//! an arbitrary coupling. With `ρ₀ ∝ e^{−βH₀}` and `ρ ∝ e^{−βH}`, the relative
//! free energy `ΔF = −β⁻¹ ln(Z/Z₀)` satisfies
//!
//! ```text
//! −β⁻¹ ln ω₀(e^{−βU}) ≤ ΔF,      ω(U) ≤ ΔF ≤ ω₀(U).
//! ```
//!
//! In finite dimension every self-adjointness and domain condition needed
//! for unbounded couplings holds automatically, so none is represented here.

use rand::Rng;

use crate::entropy::umegaki;
use crate::error::{Error, Result};
use crate::kms::{gibbs_state, perturb_state, FiniteQuantumSystem};
use crate::numkit::{
    commutator, frobenius, identity, real, tensor_product, CMatrix, HermitianMatrix, ZERO,
};
use crate::random;

pub const MAX_TOTAL_DIM: usize = 64;
/// Agreement required between the three free-energy routes.
pub const ROUTE_TOL: f64 = 1e-8;
pub const BOUND_SLACK: f64 = 1e-8;

/// Description of a partitioned model.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// Two qubits with local terms `diag(0, gap)` and coupling `g X⊗X`.
    TwoLevelPair { gap_a: f64, gap_b: f64, coupling: f64 },
    /// `sites` qubits with local terms `h X` and coupling `J Σ Z_k Z_{k+1}`.
    IsingChain { sites: usize, field: f64, coupling: f64 },
    /// Two qubits, no local terms, coupling `J (X⊗X + Y⊗Y + Z⊗Z)`.
    HeisenbergPair { j: f64 },
    /// Local terms without coupling.
    Uncoupled { blocks: Vec<HermitianMatrix> },
    Custom { blocks: Vec<HermitianMatrix>, coupling: HermitianMatrix },
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, real(1.0), real(1.0), ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -crate::numkit::I, crate::numkit::I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(1.0), ZERO, ZERO, real(-1.0)])
}

fn herm(a: CMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrized(a)
}

/// `I ⊗ … ⊗ A ⊗ … ⊗ I` with `A` on site `k`.
pub fn embed(dims: &[usize], k: usize, a: &CMatrix) -> CMatrix {
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    tensor_product(&tensor_product(&identity(before), a), &identity(after))
}

#[derive(Debug, Clone)]
pub struct PartitionedSystem {
    pub block_hamiltonians: Vec<HermitianMatrix>,
    pub local_dims: Vec<usize>,
    pub coupling: HermitianMatrix,
    pub beta: f64,
    pub h0: HermitianMatrix,
    pub h: HermitianMatrix,
    pub z: f64,
    pub z0: f64,
    pub reference: FiniteQuantumSystem,
    pub full: FiniteQuantumSystem,
}

impl PartitionedSystem {
    pub fn new(blocks: Vec<HermitianMatrix>, coupling: HermitianMatrix, beta: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Empty);
        }
        let local_dims: Vec<usize> = blocks.iter().map(HermitianMatrix::dim).collect();
        let total = local_dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let total = match total {
            Some(t) if t <= MAX_TOTAL_DIM => t,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "total dimension exceeds {MAX_TOTAL_DIM} (local dimensions {local_dims:?})"
                )))
            }
        };
        if coupling.dim() != total {
            return Err(Error::DimensionMismatch { expected: total, actual: coupling.dim() });
        }
        let mut h0 = CMatrix::zeros(total, total);
        for (k, block) in blocks.iter().enumerate() {
            h0 += embed(&local_dims, k, block.matrix());
        }
        let h0 = herm(h0);
        let h = h0.add(&coupling);
        let reference = gibbs_state(&h0, beta)?;
        let full = gibbs_state(&h, beta)?;
        Ok(Self {
            z: full.z,
            z0: reference.z,
            block_hamiltonians: blocks,
            local_dims,
            coupling,
            beta,
            h0,
            h,
            reference,
            full,
        })
    }

    pub fn from_spec(spec: &ModelSpec, beta: f64) -> Result<Self> {
        match spec {
            ModelSpec::TwoLevelPair { gap_a, gap_b, coupling } => {
                let blocks = vec![
                    HermitianMatrix::from_real_diagonal(&[0.0, *gap_a]),
                    HermitianMatrix::from_real_diagonal(&[0.0, *gap_b]),
                ];
                let u = herm(tensor_product(&pauli_x(), &pauli_x()) * real(*coupling));
                Self::new(blocks, u, beta)
            }
            ModelSpec::IsingChain { sites, field, coupling } => {
                if *sites == 0 || *sites > 6 {
                    return Err(Error::InvalidParameter(format!(
                        "Ising chain needs 1 to 6 sites, got {sites}"
                    )));
                }
                let dims = vec![2; *sites];
                let blocks = vec![herm(pauli_x() * real(*field)); *sites];
                let total = 1usize << sites;
                let mut u = CMatrix::zeros(total, total);
                for k in 0..sites - 1 {
                    u += embed(&dims, k, &pauli_z()) * embed(&dims, k + 1, &pauli_z()) * real(*coupling);
                }
                Self::new(blocks, herm(u), beta)
            }
            ModelSpec::HeisenbergPair { j } => {
                let blocks = vec![HermitianMatrix::zeros(2), HermitianMatrix::zeros(2)];
                let u = [pauli_x(), pauli_y(), pauli_z()]
                    .iter()
                    .fold(CMatrix::zeros(4, 4), |acc, p| acc + tensor_product(p, p));
                Self::new(blocks, herm(u * real(*j)), beta)
            }
            ModelSpec::Uncoupled { blocks } => {
                let total: usize = blocks.iter().map(HermitianMatrix::dim).product();
                if total > MAX_TOTAL_DIM {
                    return Err(Error::InvalidParameter(format!("total dimension {total} exceeds {MAX_TOTAL_DIM}")));
                }
                Self::new(blocks.clone(), HermitianMatrix::zeros(total), beta)
            }
            ModelSpec::Custom { blocks, coupling } => Self::new(blocks.clone(), coupling.clone(), beta),
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Worst violation of the structural invariants: each embedded local
    /// term must commute with operators on the other sites, and both
    /// partition functions must match `tr e^{−βH}` evaluated with a general
    /// matrix exponential.
    pub fn invariant_residual<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, block) in self.block_hamiltonians.iter().enumerate() {
            let term = embed(&self.local_dims, k, block.matrix());
            for j in (0..self.local_dims.len()).filter(|&j| j != k) {
                let other = embed(&self.local_dims, j, &random::gaussian_matrix(self.local_dims[j], self.local_dims[j], rng));
                worst = worst.max(frobenius(&commutator(&term, &other)));
            }
        }
        for (h, z) in [(&self.h, self.z), (&self.h0, self.z0)] {
            let direct = h.matrix().map(|x| x * -self.beta).exp().trace().re;
            worst = worst.max((direct - z).abs() / z);
        }
        worst
    }

    /// `ω(A)` in the coupled Gibbs state.
    pub fn coupled_mean(&self, a: &CMatrix) -> f64 {
        self.full.rho.expectation(a).re
    }

    /// `ω₀(A)` in the uncoupled Gibbs state.
    pub fn reference_mean(&self, a: &CMatrix) -> f64 {
        self.reference.rho.expectation(a).re
    }
}

/// Random partitioned system with total dimension at most `max_dim` and
/// `β ∈ [0.1, 5]`. The local terms share a unit norm budget and the coupling
/// has unit norm, which keeps `e^{−βH}` well conditioned.
pub fn random_partitioned<R: Rng + ?Sized>(max_dim: usize, rng: &mut R) -> Result<PartitionedSystem> {
    let mut dims = Vec::new();
    let mut total = 1;
    loop {
        let d = rng.random_range(2..=4);
        if total * d > max_dim.max(2) {
            break;
        }
        dims.push(d);
        total *= d;
        if dims.len() >= 2 && rng.random_bool(0.5) {
            break;
        }
    }
    let share = 1.0 / dims.len() as f64;
    let blocks = dims.iter().map(|&d| random::hermitian_with_norm(d, share, rng)).collect();
    let coupling = random::hermitian_with_norm(total, 1.0, rng);
    let beta = random::uniform(0.1, 5.0, rng);
    PartitionedSystem::new(blocks, coupling, beta)
}

#[derive(Debug, Clone)]
pub struct FreeEnergyRoutes {
    /// `−β⁻¹ ln(Z/Z₀)`.
    pub partition: f64,
    /// `−β⁻¹ ln‖Ω_U‖²` for the perturbed Gibbs vector of `H₀` by `U`.
    pub vector: f64,
    /// `ω(U) + β⁻¹ S(ω, ω₀)`.
    pub entropy: f64,
    pub spread: f64,
}

pub fn free_energy_routes(sys: &PartitionedSystem) -> Result<FreeEnergyRoutes> {
    let beta = sys.beta;
    let partition = -(sys.full.ln_z - sys.reference.ln_z) / beta;
    let pert = perturb_state(&sys.reference, &sys.coupling)?;
    let vector = -pert.norm_sq.ln() / beta;
    let s = umegaki(sys.full.rho.positive(), sys.reference.rho.positive())?.to_f64();
    let entropy = sys.coupled_mean(sys.coupling.matrix()) + s / beta;
    let values = [partition, vector, entropy];
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FreeEnergyRoutes { partition, vector, entropy, spread: hi - lo })
}

/// `ΔF`, after checking that the three routes agree.
pub fn relative_free_energy(sys: &PartitionedSystem) -> Result<f64> {
    let routes = free_energy_routes(sys)?;
    if !(routes.spread <= ROUTE_TOL * routes.partition.abs().max(1.0)) {
        return Err(Error::Internal(format!("free-energy routes disagree by {:.3e}", routes.spread)));
    }
    Ok(routes.partition)
}

#[derive(Debug, Clone)]
pub struct BogoliubovReport {
    /// `ω(U)`.
    pub lower: f64,
    pub delta_f: f64,
    /// `ω₀(U)`.
    pub upper: f64,
    /// `−β⁻¹ ln ω₀(e^{−βU})`.
    pub gt_lower: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub gt_margin: f64,
    /// `S(ω₀, ω)` and `S(ω, ω₀)`.
    pub s_reference_full: f64,
    pub s_full_reference: f64,
    /// Worst deviation from `S(ω₀,ω) = βω₀(U) − βΔF` and
    /// `S(ω,ω₀) = −βω(U) + βΔF`.
    pub identity_residual: f64,
    pub pass: bool,
}

pub fn bogoliubov_report(sys: &PartitionedSystem) -> Result<BogoliubovReport> {
    let beta = sys.beta;
    let u = sys.coupling.matrix();
    let delta_f = relative_free_energy(sys)?;
    let lower = sys.coupled_mean(u);
    let upper = sys.reference_mean(u);
    let damped = sys.coupling.eig()?.apply_real(|l| (-beta * l).exp())?;
    let gt_lower = -sys.reference_mean(&damped).ln() / beta;
    let rho = sys.full.rho.positive();
    let rho0 = sys.reference.rho.positive();
    let s_reference_full = umegaki(rho0, rho)?.to_f64();
    let s_full_reference = umegaki(rho, rho0)?.to_f64();
    let identity_residual = (s_reference_full - beta * (upper - delta_f))
        .abs()
        .max((s_full_reference - beta * (delta_f - lower)).abs());
    let lower_margin = delta_f - lower;
    let upper_margin = upper - delta_f;
    let gt_margin = delta_f - gt_lower;
    let pass = lower_margin >= -BOUND_SLACK
        && upper_margin >= -BOUND_SLACK
        && gt_margin >= -BOUND_SLACK
        && identity_residual <= BOUND_SLACK;
    Ok(BogoliubovReport {
        lower,
        delta_f,
        upper,
        gt_lower,
        lower_margin,
        upper_margin,
        gt_margin,
        s_reference_full,
        s_full_reference,
        identity_residual,
        pass,
    })
}

#[derive(Debug, Clone)]
pub enum Initializer {
    /// `A = −βH`, the exact minimizer.
    Warm,
    /// `A = 0`.
    MaximallyMixed,
    /// `A` a random Hermitian matrix of unit norm.
    Random,
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub init: Initializer,
    /// Success means ending within this distance of `ΔF`.
    pub conv_tol: f64,
    /// Stop once the Frobenius norm of the gradient drops below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { init: Initializer::MaximallyMixed, conv_tol: 1e-4, grad_tol: 1e-9, max_iter: 5000, seed: 0 }
    }
}

/// Finite-difference step for the gradient cross-check.
pub const FD_STEP: f64 = 1e-5;
pub const FD_MISMATCH_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GibbsVariationalReport {
    pub best_value: f64,
    pub best_state: crate::modular::DensityMatrix,
    pub delta_f: f64,
    /// Objective after each accepted step, starting with the initial point.
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest `value − ΔF` over the trajectory.
    pub min_gap: f64,
    pub gradient_mismatch: f64,
    pub pass: bool,
}

/// `γ ↦ ω_γ(U) + β⁻¹ S(γ, ρ₀)` on `γ = e^A / tr e^A`.
struct GibbsObjective<'a> {
    sys: &'a PartitionedSystem,
    ln_z0: f64,
}

struct Evaluation {
    value: f64,
    gradient: CMatrix,
    state: CMatrix,
}

impl GibbsObjective<'_> {
    fn evaluate(&self, a: &HermitianMatrix, with_gradient: bool) -> Result<Evaluation> {
        let beta = self.sys.beta;
        let eig = a.eig()?;
        let top = eig.max();
        let w: Vec<f64> = eig.eigenvalues.iter().map(|&x| (x - top).exp()).collect();
        let norm: f64 = w.iter().sum();
        let lse = top + norm.ln();
        let gamma_diag: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let vecs = &eig.eigenvectors;
        // ln γ − ln ρ₀ = A − lse + βH₀ + ln Z₀ and U + β⁻¹(ln γ − ln ρ₀) = K + const.
        let k = self.sys.h.matrix() + a.matrix() / real(beta);
        let k_tilde = vecs.adjoint() * &k * vecs;
        let mean_k: f64 = (0..a.dim()).map(|i| gamma_diag[i] * k_tilde[(i, i)].re).sum();
        let value = mean_k + (self.ln_z0 - lse) / beta;
        let state = vecs * CMatrix::from_diagonal(&crate::numkit::CVector::from_iterator(
            gamma_diag.len(),
            gamma_diag.iter().map(|&g| real(g)),
        )) * vecs.adjoint();
        let gradient = if with_gradient {
            let n = a.dim();
            let shifted: Vec<f64> = eig.eigenvalues.iter().map(|&x| x - top).collect();
            let mut g = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let dd = divided_difference(shifted[i], shifted[j]) / norm;
                    g[(i, j)] = k_tilde[(i, j)] * dd;
                }
                g[(i, i)] -= real(mean_k * gamma_diag[i]);
            }
            vecs * g * vecs.adjoint()
        } else {
            CMatrix::zeros(0, 0)
        };
        Ok(Evaluation { value, gradient, state })
    }
}

/// `(eˣ − eʸ)/(x − y)`, with the diagonal limit `eˣ`.
fn divided_difference(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    let d = lo - hi;
    if d == 0.0 {
        hi.exp()
    } else {
        hi.exp() * d.exp_m1() / d
    }
}

pub fn gibbs_variational_inf(sys: &PartitionedSystem, config: &OptimizerConfig) -> Result<GibbsVariationalReport> {
    let n = sys.dim();
    let beta = sys.beta;
    let delta_f = relative_free_energy(sys)?;
    let objective = GibbsObjective { sys, ln_z0: sys.reference.ln_z };
    let mut rng = random::rng(config.seed);
    let mut a = match config.init {
        Initializer::Warm => sys.h.scale(-beta),
        Initializer::MaximallyMixed => HermitianMatrix::zeros(n),
        Initializer::Random => random::hermitian_with_norm(n, 1.0, &mut rng),
    };

    let mut current = objective.evaluate(&a, true)?;
    let direction = random::hermitian_with_norm(n, 1.0, &mut rng);
    let analytic = crate::numkit::hs_inner(&current.gradient, direction.matrix()).re;
    let plus = objective.evaluate(&a.add(&direction.scale(FD_STEP)), false)?.value;
    let minus = objective.evaluate(&a.sub(&direction.scale(FD_STEP)), false)?.value;
    let numeric = (plus - minus) / (2.0 * FD_STEP);
    let gradient_mismatch = (analytic - numeric).abs() / numeric.abs().max(1e-6);
    if gradient_mismatch > FD_MISMATCH_TOL {
        return Err(Error::Internal(format!("analytic gradient disagrees with finite differences by {gradient_mismatch:.3e}")));
    }

    let mut trajectory = vec![current.value];
    let mut best_value = current.value;
    let mut best_state = current.state.clone();
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let g_norm_sq = frobenius(&current.gradient).powi(2);
        if g_norm_sq.sqrt() <= config.grad_tol {
            converged = true;
            break;
        }
        let g = herm(current.gradient.clone());
        let mut accepted = None;
        let mut trial_step = step * 2.0;
        for _ in 0..60 {
            let candidate = a.sub(&g.scale(trial_step));
            let eval = objective.evaluate(&candidate, true)?;
            if eval.value <= current.value - 1e-4 * trial_step * g_norm_sq {
                accepted = Some((candidate, eval));
                break;
            }
            trial_step /= 2.0;
        }
        iterations += 1;
        let Some((candidate, eval)) = accepted else {
            // No decrease at any step size: the objective is flat to working precision.
            converged = true;
            break;
        };
        let stalled = current.value - eval.value <= 4.0 * f64::EPSILON * (1.0 + current.value.abs());
        step = trial_step;
        a = candidate;
        current = eval;
        trajectory.push(current.value);
        if current.value < best_value {
            best_value = current.value;
            best_state = current.state.clone();
        }
        if stalled {
            converged = true;
            break;
        }
    }
    let min_gap = trajectory.iter().map(|v| v - delta_f).fold(f64::INFINITY, f64::min);
    let best_state = crate::modular::DensityMatrix::new(herm(best_state).into_matrix())?;
    let pass = min_gap >= -BOUND_SLACK && best_value <= delta_f + config.conv_tol;
    Ok(GibbsVariationalReport {
        best_value,
        best_state,
        delta_f,
        trajectory,
        iterations,
        converged,
        min_gap,
        gradient_mismatch,
        pass,
    })
}

#[derive(Debug, Clone)]
pub struct DvConfig {
    pub s_min: f64,
    pub s_max: f64,
    /// Golden-section search stops when the bracket is narrower than this.
    pub s_tol: f64,
    pub max_evals: usize,
}

impl Default for DvConfig {
    fn default() -> Self {
        Self { s_min: 0.0, s_max: 2.0, s_tol: 1e-8, max_evals: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct DonskerVaradhanReport {
    pub best_value: f64,
    pub best_s: f64,
    pub best_c: f64,
    pub best_v: HermitianMatrix,
    pub delta_f: f64,
    /// Every evaluated `(s, value)` pair.
    pub trajectory: Vec<(f64, f64)>,
    /// Largest `value − ΔF` seen.
    pub max_excess: f64,
    /// `|value(1, c) − ΔF|` for two admissible shifts `c`.
    pub shift_residual: f64,
    pub pass: bool,
}

/// `V ↦ ω(U − V) − β⁻¹ ln tr e^{ln ρ₀ − βV}`.
pub fn dv_value(sys: &PartitionedSystem, v: &HermitianMatrix) -> Result<f64> {
    let beta = sys.beta;
    let u_minus_v = sys.coupling.sub(v);
    let mean = sys.coupled_mean(u_minus_v.matrix());
    // ln ρ₀ − βV = −β(H₀ + V) − ln Z₀.
    let exponent = sys.h0.add(v).eig()?;
    let top = -beta * exponent.min();
    let s: f64 = exponent.eigenvalues.iter().map(|&l| (-beta * l - top).exp()).sum();
    let ln_trace = top + s.ln() - sys.reference.ln_z;
    Ok(mean - ln_trace / beta)
}

/// The member `sU + cI` of the search family.
pub fn dv_candidate(sys: &PartitionedSystem, s: f64, c: f64) -> HermitianMatrix {
    sys.coupling.scale(s).add(&HermitianMatrix::identity(sys.dim()).scale(c))
}

/// Smallest shift with `sU + cI ⪰ 0`.
pub fn dv_min_shift(u_min: f64, s: f64) -> f64 {
    (-s * u_min).max(0.0)
}

pub fn donsker_varadhan_sup(sys: &PartitionedSystem, config: &DvConfig) -> Result<DonskerVaradhanReport> {
    if !(config.s_min < config.s_max) {
        return Err(Error::InvalidParameter("empty search interval for s".into()));
    }
    let delta_f = relative_free_energy(sys)?;
    let u_eig = sys.coupling.eig()?;
    let u_min = u_eig.min();
    let mut trajectory = Vec::new();
    let eval = |s: f64, trajectory: &mut Vec<(f64, f64)>| -> Result<f64> {
        let value = dv_value(sys, &dv_candidate(sys, s, dv_min_shift(u_min, s)))?;
        trajectory.push((s, value));
        Ok(value)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (config.s_min, config.s_max);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = eval(x1, &mut trajectory)?;
    let mut f2 = eval(x2, &mut trajectory)?;
    eval(lo, &mut trajectory)?;
    eval(hi, &mut trajectory)?;
    while hi - lo > config.s_tol && trajectory.len() < config.max_evals {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2, &mut trajectory)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1, &mut trajectory)?;
        }
    }
    let &(best_s, best_value) = trajectory
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least four evaluations");
    let best_c = dv_min_shift(u_min, best_s);
    let max_excess = trajectory.iter().map(|p| p.1 - delta_f).fold(f64::NEG_INFINITY, f64::max);
    let c0 = dv_min_shift(u_min, 1.0);
    let c1 = c0 + u_eig.max_abs() + 1.0;
    let shift_residual = [c0, c1]
        .iter()
        .map(|&c| dv_value(sys, &dv_candidate(sys, 1.0, c)).map(|v| (v - delta_f).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let pass = max_excess <= BOUND_SLACK && shift_residual <= 1e-9 * delta_f.abs().max(1.0);
    Ok(DonskerVaradhanReport {
        best_value,
        best_s,
        best_c,
        best_v: dv_candidate(sys, best_s, best_c),
        delta_f,
        trajectory,
        max_excess,
        shift_residual,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kms::perturbation_entropy_report;
    use crate::numkit::max_abs;
    use approx::assert_relative_eq;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(d)
    }

    fn ising2() -> PartitionedSystem {
        PartitionedSystem::from_spec(&ModelSpec::IsingChain { sites: 2, field: 0.7, coupling: 0.9 }, 1.3).unwrap()
    }

    #[test]
    fn uncoupled_qubits_have_zero_free_energy() {
        let blocks = vec![diag(&[0.0, 1.0]), diag(&[0.0, 0.4])];
        let sys = PartitionedSystem::from_spec(&ModelSpec::Uncoupled { blocks }, 1.0).unwrap();
        assert_relative_eq!(sys.z, sys.z0, max_relative = 1e-14);
        assert!(relative_free_energy(&sys).unwrap().abs() < 1e-14);
        let rep = bogoliubov_report(&sys).unwrap();
        assert!(rep.lower.abs() < 1e-14 && rep.upper.abs() < 1e-14 && rep.delta_f.abs() < 1e-14);
    }

    #[test]
    fn ising_pair_assembly() {
        let (h, j) = (0.7, 0.9);
        let sys = ising2();
        let x = pauli_x();
        let z = pauli_z();
        let id = identity(2);
        let expected = tensor_product(&x, &id) * real(h) + tensor_product(&id, &x) * real(h) + tensor_product(&z, &z) * real(j);
        assert!(max_abs(&(sys.h.matrix() - expected)) < 1e-15);
        let mut rng = random::rng(0);
        assert!(sys.invariant_residual(&mut rng) < 1e-10);
    }

    #[test]
    fn oversized_models_are_rejected() {
        let blocks = vec![HermitianMatrix::zeros(5), HermitianMatrix::zeros(13)];
        assert!(PartitionedSystem::from_spec(&ModelSpec::Uncoupled { blocks }, 1.0).is_err());
        let spec = ModelSpec::IsingChain { sites: 7, field: 1.0, coupling: 1.0 };
        assert!(PartitionedSystem::from_spec(&spec, 1.0).is_err());
    }

    #[test]
    fn commuting_diagonal_free_energy() {
        let (h0a, h0b, u) = ([0.0, 0.8], [0.0, 1.1], [0.2, -0.5, 0.7, 0.1]);
        let beta = 0.9;
        let sys = PartitionedSystem::new(vec![diag(&h0a), diag(&h0b)], diag(&u), beta).unwrap();
        let h0: Vec<f64> = h0a.iter().flat_map(|a| h0b.iter().map(move |b| a + b)).collect();
        let z0: f64 = h0.iter().map(|e| (-beta * e).exp()).sum();
        let z: f64 = h0.iter().zip(&u).map(|(e, x)| (-beta * (e + x)).exp()).sum();
        let expected = -(z / z0).ln() / beta;
        assert!((relative_free_energy(&sys).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn free_energy_routes_agree_on_random_systems() {
        let mut rng = random::rng(1);
        for _ in 0..20 {
            let sys = random_partitioned(16, &mut rng).unwrap();
            let routes = free_energy_routes(&sys).unwrap();
            assert!(routes.spread <= ROUTE_TOL, "{routes:?}");
        }
    }

    #[test]
    fn constant_coupling_pins_all_bounds() {
        let c = 0.35;
        let sys = PartitionedSystem::new(vec![diag(&[0.0, 1.0]), diag(&[0.2, 0.5])], HermitianMatrix::identity(4).scale(c), 2.0).unwrap();
        let rep = bogoliubov_report(&sys).unwrap();
        for x in [rep.lower, rep.delta_f, rep.upper, rep.gt_lower] {
            assert!((x - c).abs() < 1e-12);
        }
    }

    #[test]
    fn bogoliubov_bounds_on_random_systems() {
        let mut rng = random::rng(2);
        for _ in 0..100 {
            let sys = random_partitioned(16, &mut rng).unwrap();
            let rep = bogoliubov_report(&sys).unwrap();
            assert!(rep.pass, "{rep:?}");
            let sum = rep.s_reference_full + rep.s_full_reference;
            assert!((sum - sys.beta * (rep.upper - rep.lower)).abs() <= 1e-8);
        }
    }

    #[test]
    fn bogoliubov_matches_perturbation_entropies() {
        let mut rng = random::rng(3);
        for _ in 0..10 {
            let sys = random_partitioned(8, &mut rng).unwrap();
            let rep = bogoliubov_report(&sys).unwrap();
            let pert = perturbation_entropy_report(&sys.reference, &sys.coupling).unwrap();
            assert!((pert.s_fwd - rep.s_reference_full).abs() < 1e-8);
            assert!((pert.s_bwd - rep.s_full_reference).abs() < 1e-8);
        }
    }

    #[test]
    fn warm_start_is_already_optimal() {
        let sys = ising2();
        let config = OptimizerConfig { init: Initializer::Warm, ..Default::default() };
        let rep = gibbs_variational_inf(&sys, &config).unwrap();
        assert!((rep.trajectory[0] - rep.delta_f).abs() < 1e-9);
        assert!(rep.pass);
    }

    #[test]
    fn cold_start_converges_to_free_energy() {
        let sys = ising2();
        let rep = gibbs_variational_inf(&sys, &OptimizerConfig::default()).unwrap();
        assert!((rep.best_value - rep.delta_f).abs() < 1e-4, "{} vs {}", rep.best_value, rep.delta_f);
        assert!(rep.min_gap >= -1e-8);
        assert!(rep.pass);
        assert!(rep.gradient_mismatch < FD_MISMATCH_TOL);
        assert!(max_abs(&(rep.best_state.matrix() - sys.full.rho.matrix())) < 1e-2);
    }

    #[test]
    fn random_start_never_undercuts_free_energy() {
        let mut rng = random::rng(4);
        for seed in 0..5 {
            let sys = random_partitioned(9, &mut rng).unwrap();
            let config = OptimizerConfig { init: Initializer::Random, seed, max_iter: 300, ..Default::default() };
            let rep = gibbs_variational_inf(&sys, &config).unwrap();
            assert!(rep.min_gap >= -BOUND_SLACK);
            assert!(rep.trajectory.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn divided_difference_limits() {
        assert_relative_eq!(divided_difference(0.3, 0.3), 0.3f64.exp(), max_relative = 1e-15);
        let (x, y) = (0.5, -1.2);
        assert_relative_eq!(divided_difference(x, y), (x.exp() - y.exp()) / (x - y), max_relative = 1e-14);
        assert_relative_eq!(divided_difference(1.0, 1.0 + 1e-12), 1f64.exp(), max_relative = 1e-11);
    }

    #[test]
    fn dv_at_zero_is_bogoliubov_lower_bound() {
        let sys = ising2();
        let v0 = dv_value(&sys, &HermitianMatrix::zeros(4)).unwrap();
        assert!((v0 - sys.coupled_mean(sys.coupling.matrix())).abs() < 1e-12);
    }

    #[test]
    fn dv_at_unit_slope_is_free_energy() {
        let sys = ising2();
        let c = sys.coupling.eig().unwrap().max_abs();
        let value = dv_value(&sys, &dv_candidate(&sys, 1.0, c)).unwrap();
        assert!((value - relative_free_energy(&sys).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn dv_scan_peaks_at_unit_slope() {
        let sys = ising2();
        let u_min = sys.coupling.eig().unwrap().min();
        let values: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let s = k as f64 / 20.0;
                (s, dv_value(&sys, &dv_candidate(&sys, s, dv_min_shift(u_min, s))).unwrap())
            })
            .collect();
        let best = values.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((best.0 - 1.0).abs() < 1e-12);
        let rep = donsker_varadhan_sup(&sys, &DvConfig::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.best_s - 1.0).abs() < 1e-4);
        assert!((rep.best_value - rep.delta_f).abs() < 1e-9);
    }

    #[test]
    fn heisenberg_and_two_level_models_satisfy_the_band() {
        for spec in [
            ModelSpec::HeisenbergPair { j: 0.8 },
            ModelSpec::TwoLevelPair { gap_a: 1.0, gap_b: 0.6, coupling: 0.5 },
        ] {
            let sys = PartitionedSystem::from_spec(&spec, 1.5).unwrap();
            let rep = bogoliubov_report(&sys).unwrap();
            assert!(rep.pass, "{spec:?}: {rep:?}");
            assert!(rep.gt_lower <= rep.delta_f + BOUND_SLACK);
        }
    }

    #[test]
    fn variational_sandwich() {
        let mut rng = random::rng(5);
        for _ in 0..5 {
            let sys = random_partitioned(8, &mut rng).unwrap();
            let dv = donsker_varadhan_sup(&sys, &DvConfig::default()).unwrap();
            let config = OptimizerConfig { max_iter: 200, ..Default::default() };
            let gibbs = gibbs_variational_inf(&sys, &config).unwrap();
            for &(_, v) in &dv.trajectory {
                assert!(v - BOUND_SLACK <= dv.delta_f);
            }
            for &g in &gibbs.trajectory {
                assert!(dv.delta_f <= g + BOUND_SLACK);
            }
        }
    }
}
