//! Relative entropy: Kullback–Leibler, Umegaki trace formula, the spectral
//! formula through relative modular operators, restriction to subalgebras
//! and Uhlmann's limit formula.
//!
//! All state arguments are positive functionals (trace not necessarily one)
//! so scaling identities can be checked directly; [`DensityMatrix`] derefs to
//! [`PositiveMatrix`].
//!
//! [`DensityMatrix`]: crate::modular::DensityMatrix

use std::cmp::Ordering;
use std::fmt;

use crate::algebra::{conditional_expectation, StarAlgebra};
use crate::error::{Error, Result};
use crate::modular::{relative_modular, PositiveMatrix};
use crate::numkit::{identity, op_norm, tol, vec, HermitianMatrix};

/// Range inclusion tolerance `‖(I − P_φ) P_ψ‖ ≤ SUPPORT_TOL`.
pub const SUPPORT_TOL: f64 = 1e-8;

/// A relative entropy value: finite, or `+∞` when the support condition
/// fails. Never produced as an `f64` infinity in arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyValue {
    Finite(f64),
    Infinite,
}

impl EntropyValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, EntropyValue::Finite(_))
    }

    pub fn support_condition_met(&self) -> bool {
        self.is_finite()
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            EntropyValue::Finite(v) => Some(*v),
            EntropyValue::Infinite => None,
        }
    }

    /// Lossy conversion for reporting.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `self ≤ other + tol` in the extended order.
    pub fn le_within(&self, other: &EntropyValue, tol: f64) -> bool {
        match (self, other) {
            (_, EntropyValue::Infinite) => true,
            (EntropyValue::Infinite, EntropyValue::Finite(_)) => false,
            (EntropyValue::Finite(a), EntropyValue::Finite(b)) => *a <= b + tol,
        }
    }
}

impl PartialOrd for EntropyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (EntropyValue::Infinite, EntropyValue::Infinite) => Some(Ordering::Equal),
            (EntropyValue::Infinite, _) => Some(Ordering::Greater),
            (_, EntropyValue::Infinite) => Some(Ordering::Less),
            (EntropyValue::Finite(a), EntropyValue::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyValue::Finite(v) => write!(f, "{v}"),
            EntropyValue::Infinite => write!(f, "inf"),
        }
    }
}

fn check_probability(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbability("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidProbability(format!("entry {x} is negative or not finite")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidProbability(format!("entries sum to {s}")));
    }
    Ok(())
}

/// `Σ p_i ln(p_i / q_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<EntropyValue> {
    check_probability(p)?;
    check_probability(q)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= tol::RANK {
            continue;
        }
        if qi <= tol::RANK {
            return Ok(EntropyValue::Infinite);
        }
        s += pi * (pi / qi).ln();
    }
    Ok(EntropyValue::Finite(s))
}

/// `s(ψ) ≤ s(φ)` at [`SUPPORT_TOL`].
pub fn support_condition(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<bool> {
    let p_psi = psi.support()?;
    let p_phi = phi.support()?;
    let n = psi.dim();
    Ok(op_norm(&((identity(n) - p_phi) * p_psi)) <= SUPPORT_TOL)
}

/// Eigenvalues sitting just above the rank cut make relative entropy
/// ill-conditioned; returns a human-readable warning in that case.
pub fn conditioning_warning(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<Option<String>> {
    for (name, state) in [("psi", psi), ("phi", phi)] {
        let eig = state.eig()?;
        let cut = eig.rank_cut();
        if let Some(l) = eig.eigenvalues.iter().find(|&&l| l > cut && l <= 10.0 * cut) {
            return Ok(Some(format!(
                "{name} has eigenvalue {l:.3e} within 10x the rank cut; entropy near the support boundary is ill-conditioned"
            )));
        }
    }
    Ok(None)
}

fn check_dims(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<()> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), actual: phi.dim() });
    }
    Ok(())
}

/// `tr ρ (log ρ − log σ)` with logarithms taken on the supports.
pub fn umegaki(rho: &PositiveMatrix, sigma: &PositiveMatrix) -> Result<EntropyValue> {
    check_dims(rho, sigma)?;
    if !support_condition(rho, sigma)? {
        return Ok(EntropyValue::Infinite);
    }
    let eig = rho.eig()?;
    let cut = eig.rank_cut();
    let self_term: f64 = eig.eigenvalues.iter().filter(|&&l| l > cut).map(|&l| l * l.ln()).sum();
    let cross = rho.expectation(&sigma.log_on_support()?).re;
    Ok(EntropyValue::Finite(self_term - cross))
}

/// Spectral data of `Δ_{Φ,Ψ}` paired with the weights `|⟨e_k, Ψ⟩|²`.
struct WeightedSpectrum {
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    cut: f64,
}

fn weighted_spectrum(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<WeightedSpectrum> {
    let rel = relative_modular(phi, psi)?;
    let eig = rel.eig()?;
    let big_psi = vec(&psi.sqrt()?);
    let coeffs = eig.eigenvectors.adjoint() * big_psi;
    Ok(WeightedSpectrum {
        cut: eig.rank_cut(),
        weights: coeffs.iter().map(|z| z.norm_sqr()).collect(),
        lambdas: eig.eigenvalues,
    })
}

/// `−⟨Ψ, log Δ_{Φ,Ψ} Ψ⟩` as a finite spectral sum over the nonzero
/// eigenvalues of the relative modular operator.
pub fn araki_spectral(psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<EntropyValue> {
    check_dims(psi, phi)?;
    if !support_condition(psi, phi)? {
        return Ok(EntropyValue::Infinite);
    }
    let spec = weighted_spectrum(psi, phi)?;
    let s: f64 = spec
        .lambdas
        .iter()
        .zip(&spec.weights)
        .filter(|(l, _)| **l > spec.cut)
        .map(|(l, w)| -w * l.ln())
        .sum();
    Ok(EntropyValue::Finite(s))
}

/// Relative entropy of the restrictions to `M`, through the densities
/// `E_M(ρ)` that represent the restricted functionals.
pub fn araki_on_subalgebra(m: &StarAlgebra, psi: &PositiveMatrix, phi: &PositiveMatrix) -> Result<EntropyValue> {
    check_dims(psi, phi)?;
    if psi.dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), actual: psi.dim() });
    }
    let restrict = |p: &PositiveMatrix| -> Result<PositiveMatrix> {
        PositiveMatrix::from_hermitian(HermitianMatrix::symmetrized(conditional_expectation(m, p.matrix())))
    };
    umegaki(&restrict(psi)?, &restrict(phi)?)
}

/// `t_k = 2^{−k}`, `k = 0..=20`.
pub fn default_uhlmann_times() -> Vec<f64> {
    (0..=20).map(|k| 0.5_f64.powi(k)).collect()
}

/// `F(t) = −(‖Δ_{Φ,Ψ}^{t/2} Ψ‖² − ‖Ψ‖²)/t` for each `t`. Non-decreasing as
/// `t ↓ 0` with limit the relative entropy.
pub fn uhlmann_limit(psi: &PositiveMatrix, phi: &PositiveMatrix, times: &[f64]) -> Result<Vec<f64>> {
    check_dims(psi, phi)?;
    if times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::InvalidParameter("times must lie in (0, 1]".into()));
    }
    if times.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("times must be strictly decreasing".into()));
    }
    if !support_condition(psi, phi)? {
        return Err(Error::SupportCondition);
    }
    let spec = weighted_spectrum(psi, phi)?;
    Ok(times
        .iter()
        .map(|&t| {
            // (λ^t − 1)/t, written with expm1 to keep small t accurate.
            spec.lambdas
                .iter()
                .zip(&spec.weights)
                .map(|(&l, &w)| {
                    let g = if l > 0.0 { (t * l.ln()).exp_m1() / t } else { -1.0 / t };
                    -w * g
                })
                .sum()
        })
        .collect())
}

/// `(1/2)‖ρ − σ‖₁`.
pub fn trace_distance(rho: &PositiveMatrix, sigma: &PositiveMatrix) -> Result<f64> {
    let d = HermitianMatrix::symmetrized(rho.matrix() - sigma.matrix());
    Ok(0.5 * d.eig()?.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{block_algebra, center, random_algebra};
    use crate::modular::DensityMatrix;
    use crate::numkit::{c, real, CMatrix};
    use crate::random;
    use proptest::prelude::*;

    fn fin(v: EntropyValue) -> f64 {
        v.finite().expect("finite entropy")
    }

    #[test]
    fn kl_examples() {
        assert_eq!(fin(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap()), 0.0);
        assert!((fin(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap()) - 2f64.ln()).abs() < 1e-15);
        let v = fin(kl_divergence(&[0.5, 0.5], &[0.75, 0.25]).unwrap());
        let want = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.143841).abs() < 1e-6);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), EntropyValue::Infinite);
        assert!(kl_divergence(&[1.5, -0.5], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn umegaki_examples() {
        let mut r = random::rng(1);
        let rho = random::density(3, &mut r);
        assert!(fin(umegaki(&rho, &rho).unwrap()).abs() < 1e-12);
        let a = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        assert!((fin(umegaki(&a, &b).unwrap()) - 0.143841).abs() < 1e-6);
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((fin(umegaki(&pure, &mixed).unwrap()) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(umegaki(&mixed, &pure).unwrap(), EntropyValue::Infinite);
    }

    #[test]
    fn araki_examples() {
        let mut r = random::rng(2);
        let rho = random::density(4, &mut r);
        assert!(fin(araki_spectral(&rho, &rho).unwrap()).abs() < 1e-12);
        let p = random::probability(4, &mut r);
        let q = random::probability(4, &mut r);
        let u = random::unitary(4, &mut r);
        let rot = |d: &[f64]| {
            let m = HermitianMatrix::from_real_diagonal(d).into_matrix();
            DensityMatrix::new(&u * m * u.adjoint()).unwrap()
        };
        let s = fin(araki_spectral(&rot(&p), &rot(&q)).unwrap());
        assert!((s - fin(kl_divergence(&p, &q).unwrap())).abs() < 1e-10);
    }

    #[test]
    fn araki_matches_umegaki_on_random_pairs() {
        let mut r = random::rng(3);
        for trial in 0..200 {
            let n = 2 + trial % 5;
            let rank = if trial % 4 == 0 { 1 + trial % n } else { n };
            let psi = random::density_with_rank(n, rank, &mut r);
            let phi = random::density(n, &mut r);
            let a = fin(araki_spectral(&psi, &phi).unwrap());
            let u = fin(umegaki(&psi, &phi).unwrap());
            assert!((a - u).abs() <= 1e-8 * (1.0 + u.abs()), "trial {trial}: {a} vs {u}");
        }
    }

    #[test]
    fn support_failure_gives_infinity_everywhere() {
        let mut r = random::rng(4);
        let psi = random::density(3, &mut r);
        let phi = random::density_with_rank(3, 2, &mut r);
        assert_eq!(araki_spectral(&psi, &phi).unwrap(), EntropyValue::Infinite);
        assert_eq!(umegaki(&psi, &phi).unwrap(), EntropyValue::Infinite);
        assert!(matches!(uhlmann_limit(&psi, &phi, &[1.0, 0.5]), Err(Error::SupportCondition)));
    }

    #[test]
    fn subalgebra_examples() {
        let mut r = random::rng(5);
        let psi = random::density(3, &mut r);
        let phi = random::density(3, &mut r);
        let full = fin(araki_on_subalgebra(&StarAlgebra::full(3), &psi, &phi).unwrap());
        assert!((full - fin(araki_spectral(&psi, &phi).unwrap())).abs() < 1e-10);

        let diag = fin(araki_on_subalgebra(&StarAlgebra::diagonal(3), &psi, &phi).unwrap());
        let dp: Vec<f64> = (0..3).map(|i| psi.matrix()[(i, i)].re).collect();
        let dq: Vec<f64> = (0..3).map(|i| phi.matrix()[(i, i)].re).collect();
        assert!((diag - fin(kl_divergence(&dp, &dq).unwrap())).abs() < 1e-10);
        assert!(diag <= full + 1e-10);

        let trivial = fin(araki_on_subalgebra(&StarAlgebra::scalars(3), &psi, &phi).unwrap());
        assert!(trivial.abs() < 1e-12);
    }

    #[test]
    fn subalgebra_entropy_with_multiplicity_is_the_reduced_state_entropy() {
        // On Mat(2) ⊗ I_3 the restricted functionals are the reduced states.
        let mut r = random::rng(6);
        let m = StarAlgebra::full(2).tensor_identity(3);
        let psi = random::density(6, &mut r);
        let phi = random::density(6, &mut r);
        let red = |d: &DensityMatrix| {
            let m = crate::numkit::partial_trace(d.matrix(), (2, 3), crate::numkit::Subsystem::Second).unwrap();
            DensityMatrix::new(m).unwrap()
        };
        let want = fin(umegaki(&red(&psi), &red(&phi)).unwrap());
        let got = fin(araki_on_subalgebra(&m, &psi, &phi).unwrap());
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn uhlmann_examples() {
        let mut r = random::rng(7);
        let rho = random::density(3, &mut r);
        for v in uhlmann_limit(&rho, &rho, &default_uhlmann_times()).unwrap() {
            assert!(v.abs() < 1e-10);
        }

        // Commuting pair at t = 1: F(1) = 1 − Σ_{p_i > 0} q_i.
        let p = DensityMatrix::from_diagonal(&[0.6, 0.4, 0.0]).unwrap();
        let q = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let f1 = uhlmann_limit(&p, &q, &[1.0]).unwrap()[0];
        assert!((f1 - (1.0 - 0.5)).abs() < 1e-12);

        let psi = random::density(4, &mut r);
        let phi = random::density(4, &mut r);
        let values = uhlmann_limit(&psi, &phi, &default_uhlmann_times()).unwrap();
        for w in values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        let s = fin(araki_spectral(&psi, &phi).unwrap());
        assert!((values[20] - s).abs() <= 1e-3);
        assert!(values[20] <= s + 1e-12);
    }

    #[test]
    fn uhlmann_rejects_bad_times() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(uhlmann_limit(&rho, &rho, &[0.5, 1.0]).is_err());
        assert!(uhlmann_limit(&rho, &rho, &[2.0]).is_err());
        assert!(uhlmann_limit(&rho, &rho, &[0.0]).is_err());
    }

    #[test]
    fn extended_order() {
        assert!(EntropyValue::Infinite > EntropyValue::Finite(1e300));
        assert!(EntropyValue::Finite(1.0) < EntropyValue::Finite(2.0));
        assert!(EntropyValue::Finite(3.0).le_within(&EntropyValue::Infinite, 0.0));
        assert!(!EntropyValue::Infinite.le_within(&EntropyValue::Finite(3.0), 1.0));
    }

    #[test]
    fn warning_near_support_boundary() {
        let tiny = 5.0 * tol::RANK;
        let rho = DensityMatrix::from_diagonal(&[1.0 - tiny, tiny]).unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        assert!(conditioning_warning(&rho, &sigma).unwrap().is_some());
        assert!(conditioning_warning(&sigma, &sigma).unwrap().is_none());
    }

    fn rank_for(n: usize, k: usize) -> usize {
        1 + k % n
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn relative_entropy_is_non_negative(seed in any::<u64>(), n in 2usize..6, k in 0usize..6) {
            let mut r = random::rng(seed);
            let psi = random::density_with_rank(n, rank_for(n, k), &mut r);
            let phi = random::density(n, &mut r);
            prop_assert!(fin(araki_spectral(&psi, &phi).unwrap()) >= -1e-10);
        }

        #[test]
        fn scaling_identity(seed in any::<u64>(), n in 2usize..6, lambda in 0.05f64..20.0, mu in 0.05f64..20.0) {
            let mut r = random::rng(seed);
            let psi = random::density(n, &mut r);
            let phi = random::density(n, &mut r);
            let s = fin(araki_spectral(&psi, &phi).unwrap());
            let scaled = fin(araki_spectral(&psi.scaled(lambda).unwrap(), &phi.scaled(mu).unwrap()).unwrap());
            let want = lambda * s - lambda * psi.trace() * (mu / lambda).ln();
            prop_assert!((scaled - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }

        #[test]
        fn basic_lower_bound(seed in any::<u64>(), n in 2usize..6, k in 0usize..6, scale in 0.1f64..5.0) {
            let mut r = random::rng(seed);
            let psi = random::density_with_rank(n, rank_for(n, k), &mut r).scaled(scale).unwrap();
            let phi = random::density(n, &mut r);
            let s = fin(araki_spectral(&psi, &phi).unwrap());
            let psi1 = psi.trace();
            let bound = -psi1 * (phi.expectation(&psi.support().unwrap()).re / psi1).ln();
            prop_assert!(s >= bound - 1e-9);
        }

        #[test]
        fn center_inequality(seed in any::<u64>(), pick in 0usize..3) {
            let mut r = random::rng(seed);
            let blocks: &[(usize, usize)] = [&[(2, 1), (1, 2)][..], &[(1, 1), (1, 1), (2, 1)][..], &[(2, 2)][..]][pick];
            let m = block_algebra(blocks);
            let n = m.ambient_dim();
            let z = center(&m);
            let mut a = CMatrix::zeros(n, n);
            for b in z.basis() {
                a += b * c(random::normal(&mut r), random::normal(&mut r));
            }
            let a = HermitianMatrix::symmetrized(a);
            let psi = random::density(n, &mut r);
            let phi = random::density(n, &mut r);
            let s = fin(araki_on_subalgebra(&m, &psi, &phi).unwrap());
            let exp_a = a.eig().unwrap().apply_real(f64::exp).unwrap();
            let rhs = psi.expectation(a.matrix()).re - phi.expectation(&exp_a).re.ln();
            prop_assert!(s >= rhs - 1e-9);
        }

        #[test]
        fn restriction_is_monotone(seed in any::<u64>(), n in 2usize..6) {
            let mut r = random::rng(seed);
            let (_, m) = random_algebra(n, &mut r);
            let psi = random::density(n, &mut r);
            let phi = random::density(n, &mut r);
            let sub = araki_on_subalgebra(&m, &psi, &phi).unwrap();
            let full = araki_spectral(&psi, &phi).unwrap();
            prop_assert!(sub.le_within(&full, 1e-8));
        }

        #[test]
        fn small_entropy_means_close_states(seed in any::<u64>(), n in 2usize..5, eps in 0.0f64..1e-4) {
            let mut r = random::rng(seed);
            let psi = random::density(n, &mut r);
            let noise = random::density(n, &mut r);
            let mix = psi.matrix() * real(1.0 - eps) + noise.matrix() * real(eps);
            let phi = DensityMatrix::new(mix).unwrap();
            let s = fin(araki_spectral(&psi, &phi).unwrap());
            if s <= 1e-8 {
                prop_assert!(trace_distance(&psi, &phi).unwrap() <= 1e-3);
            }
        }
    }
}
