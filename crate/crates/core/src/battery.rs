//! Randomized property batteries, one row per property.
//!
//! Every check returns a margin: its distance from the failure boundary,
//! already including the property's tolerance, so a row passes iff its
//! worst margin is non-negative. Trial `k` of a property draws from
//! `random::stream(seed, tag("module/property"), k)`, which makes any single
//! trial replayable without running the others.

use rand::Rng;
use rayon::prelude::*;

use crate::algebra::{
    bicommutant_check, block_algebra, center, commutant, conditional_expectation, containment_residual,
    cyclic_separating_report, generate_star_algebra, random_algebra, ANGLE_TOL,
};
use crate::bogoliubov::{
    bogoliubov_report, donsker_varadhan_sup, free_energy_routes, gibbs_variational_inf, random_partitioned, DvConfig,
    ModelSpec, OptimizerConfig, PartitionedSystem,
};
use crate::entropy::{
    araki_on_subalgebra, araki_spectral, default_uhlmann_times, kl_divergence, trace_distance, uhlmann_limit, umegaki,
    EntropyValue,
};
use crate::error::{Error, Result};
use crate::kms::{
    expansional, gibbs_state, golden_thompson_peierls_report, kms_boundary_check, perturb_state,
    perturbation_entropy_report, random_instance, standard_liouvillian, trotter_check, FiniteQuantumSystem,
};
use crate::modular::{modular_data, relative_modular, tomita_operator_action, DensityMatrix, TOMITA_TIMES};
use crate::monotone::{
    hjp_margin, interpolation_margin, loewner_heinz_margin, monotonicity_report, random_map, schwarz_check,
    transpose_witness, two_positive_check, QuantumMap, DPI_FAMILIES, SUITE_TIMES,
};
use crate::numkit::{
    c, frobenius, identity, max_abs, min_eig, real, rel_residual, tol, CMatrix, HermitianMatrix, C64,
};
use crate::random::{self, TrialRng};

type Check = fn(&mut TrialRng, &Context) -> Result<f64>;

/// Per-run switches visible to the checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Context {
    /// Harness self-test: the data-processing check tests the reversed
    /// inequality, which fails on generic instances.
    pub inject_fault: bool,
}

pub struct Property {
    pub module: &'static str,
    pub name: &'static str,
    pub default_trials: usize,
    check: Check,
}

impl Property {
    pub fn id(&self) -> String {
        format!("{}/{}", self.module, self.name)
    }

    pub fn run_trial(&self, seed: u64, trial: usize, ctx: &Context) -> Result<f64> {
        let mut rng = random::stream(seed, random::tag(&self.id()), trial as u64);
        (self.check)(&mut rng, ctx)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BatteryConfig {
    pub seed: u64,
    /// Overrides every property's default trial count.
    pub trials: Option<usize>,
    /// Keep only properties whose `module/name` id contains this string.
    pub filter: Option<String>,
    /// Run just this trial index (replay).
    pub trial: Option<usize>,
    pub inject_fault: bool,
}

#[derive(Debug, Clone)]
pub struct PropertyRow {
    pub module: &'static str,
    pub property: &'static str,
    pub trials: usize,
    pub worst_margin: f64,
    pub worst_trial: usize,
    pub error: Option<String>,
    pub pass: bool,
}

impl PropertyRow {
    pub fn replay_line(&self, seed: u64) -> String {
        format!(
            "replay: modent suite --seed {seed} --property {}/{} --trial {}",
            self.module, self.property, self.worst_trial
        )
    }
}

pub fn run_battery(config: &BatteryConfig) -> Vec<PropertyRow> {
    let ctx = Context { inject_fault: config.inject_fault };
    properties()
        .into_iter()
        .filter(|p| config.filter.as_ref().is_none_or(|f| p.id().contains(f.as_str())))
        .map(|p| run_property(&p, config, &ctx))
        .collect()
}

pub fn run_property(p: &Property, config: &BatteryConfig, ctx: &Context) -> PropertyRow {
    let indices: Vec<usize> = match config.trial {
        Some(k) => vec![k],
        None => (0..config.trials.unwrap_or(p.default_trials)).collect(),
    };
    let outcomes: Vec<(usize, Result<f64>)> =
        indices.par_iter().map(|&k| (k, p.run_trial(config.seed, k, ctx))).collect();
    let mut worst_margin = f64::INFINITY;
    let mut worst_trial = indices.first().copied().unwrap_or(0);
    let mut error = None;
    for (k, outcome) in outcomes {
        let m = match outcome {
            Ok(m) if m.is_nan() => f64::NEG_INFINITY,
            Ok(m) => m,
            Err(e) => {
                if error.is_none() {
                    error = Some(e.to_string());
                }
                f64::NEG_INFINITY
            }
        };
        if m < worst_margin {
            worst_margin = m;
            worst_trial = k;
        }
    }
    PropertyRow {
        module: p.module,
        property: p.name,
        trials: indices.len(),
        worst_margin,
        worst_trial,
        pass: worst_margin >= 0.0,
        error,
    }
}

macro_rules! property {
    ($module:literal, $name:literal, $trials:expr, $check:expr) => {
        Property { module: $module, name: $name, default_trials: $trials, check: $check }
    };
}

pub fn properties() -> Vec<Property> {
    vec![
        property!("numkit", "eigen_reconstruction", 100, eigen_reconstruction),
        property!("numkit", "calculus_homomorphism", 100, calculus_homomorphism),
        property!("numkit", "loewner_heinz", 200, loewner_heinz),
        property!("numkit", "pinv_identities", 100, pinv_identities),
        property!("algebra", "commutant_order_reversing", 50, commutant_order_reversing),
        property!("algebra", "bicommutant", 50, bicommutant),
        property!("algebra", "conditional_expectation", 100, conditional_expectation_axioms),
        property!("algebra", "duality", 100, duality),
        property!("algebra", "cyclic_iff_separating", 50, cyclic_iff_separating),
        property!("modular", "polar_identity", 100, polar_identity),
        property!("modular", "inverse_is_j_delta_j", 100, inverse_is_j_delta_j),
        property!("modular", "cone_preservation", 100, cone_preservation),
        property!("modular", "relative_scaling", 100, relative_scaling),
        property!("entropy", "araki_umegaki_agreement", 300, araki_umegaki_agreement),
        property!("entropy", "non_negativity", 100, non_negativity),
        property!("entropy", "equality_characterization", 100, equality_characterization),
        property!("entropy", "scaling_identity", 100, scaling_identity),
        property!("entropy", "lower_bound", 100, lower_bound),
        property!("entropy", "center_inequality", 100, center_inequality),
        property!("entropy", "hansen_jensen_pedersen", 200, hansen_jensen_pedersen),
        property!("entropy", "interpolation", 200, interpolation),
        property!("entropy", "uhlmann_limit", 50, uhlmann_convergence),
        property!("monotone", "data_processing", 500, data_processing),
        property!("monotone", "two_positive_implies_schwarz", 50, two_positive_implies_schwarz),
        property!("monotone", "transpose_witness", 1, transpose_spectra),
        property!("monotone", "unitary_invariance", 100, unitary_invariance),
        property!("kms", "boundary_condition", 100, kms_boundary),
        property!("kms", "uniqueness_probe", 20, kms_uniqueness_probe),
        property!("kms", "modular_is_liouvillian_flow", 50, modular_is_liouvillian_flow),
        property!("kms", "vector_identity", 50, kms_vector_identity),
        property!("kms", "perturbed_invariance", 50, perturbed_invariance),
        property!("kms", "perturbation_round_trip", 50, perturbation_round_trip),
        property!("kms", "perturbation_identities", 100, perturbation_identities),
        property!("kms", "golden_thompson_peierls", 200, golden_thompson_peierls),
        property!("kms", "dyson_truncation", 20, dyson_truncation),
        property!("kms", "trotter_first_order", 1, trotter_first_order),
        property!("bogoliubov", "two_sided_bounds", 100, two_sided_bounds),
        property!("bogoliubov", "proof_identities", 100, proof_identities),
        property!("bogoliubov", "kms_consistency", 50, kms_consistency),
        property!("bogoliubov", "variational_sandwich", 20, variational_sandwich),
        property!("bogoliubov", "gibbs_cold_start", 1, gibbs_cold_start),
    ]
}

fn dim(rng: &mut TrialRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn fin(v: EntropyValue) -> Result<f64> {
    v.finite().ok_or_else(|| Error::Internal("unexpected infinite relative entropy".into()))
}

fn eigen_reconstruction(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 8);
    let a = random::hermitian(n, rng);
    let resid = frobenius(&(a.matrix() - a.eig()?.reconstruct()));
    Ok(n as f64 * tol::EIG * (1.0 + frobenius(a.matrix())) - resid)
}

fn calculus_homomorphism(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 8);
    let eig = random::hermitian(n, rng).eig()?;
    let fg = eig.apply_real(|x| x.sin() * x.cos())?;
    let product = eig.apply_real(f64::sin)? * eig.apply_real(f64::cos)?;
    Ok(1e-10 * n as f64 - frobenius(&(fg - product)))
}

fn loewner_heinz(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 1, 6);
    let t = SUITE_TIMES[rng.random_range(0..SUITE_TIMES.len())];
    Ok(loewner_heinz_margin(n, t, rng)? + 1e-8)
}

fn pinv_identities(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 8);
    let rank = dim(rng, 1, n);
    let u = random::unitary(n, rng);
    let spectrum: Vec<f64> = (0..n)
        .map(|i| if i < rank { random::uniform(0.5, 2.0, rng) * if rng.random_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 })
        .collect();
    let d = HermitianMatrix::from_real_diagonal(&spectrum);
    let a = HermitianMatrix::symmetrized(&u * d.matrix() * u.adjoint());
    let pinv = crate::numkit::pinv_on_support(&a)?;
    let proj = crate::numkit::range_projection(&a)?;
    let resid = max_abs(&(a.matrix() * &pinv - &proj)).max(max_abs(&(&pinv * a.matrix() - &proj)));
    Ok(1e-10 - resid)
}

fn commutant_order_reversing(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let (gens, big) = random_algebra(n, rng);
    let small = generate_star_algebra(&gens[..1], n)?;
    let nested = containment_residual(&small, &big);
    let reversed = containment_residual(&commutant(&big), &commutant(&small));
    Ok(ANGLE_TOL - nested.max(reversed))
}

fn bicommutant(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let (_, m) = random_algebra(n, rng);
    let report = bicommutant_check(&m);
    if report.dim_m != report.dim_mcc {
        return Ok(-1.0);
    }
    Ok(ANGLE_TOL - report.subspace_angle)
}

fn conditional_expectation_axioms(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let (_, m) = random_algebra(n, rng);
    let x = random::psd(n, dim(rng, 1, n), rng).into_matrix();
    let x = &x / real(frobenius(&x));
    let ex = conditional_expectation(&m, &x);
    let positivity = min_eig(&ex)? + 1e-10;
    let unital = max_abs(&(conditional_expectation(&m, &identity(n)) - identity(n)));
    let trace = (ex.trace() - x.trace()).norm();
    let idempotent = max_abs(&(conditional_expectation(&m, &ex) - &ex));
    Ok(positivity.min(1e-10 - unital.max(trace).max(idempotent)))
}

fn duality(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let (_, m) = random_algebra(n, rng);
    let rho = random::density(n, rng);
    let a = m.project(&random::gaussian_matrix(n, n, rng));
    let lhs = rho.expectation(&a);
    let rhs = (conditional_expectation(&m, rho.matrix()) * &a).trace();
    Ok(1e-10 * (1.0 + lhs.norm()) - (lhs - rhs).norm())
}

fn cyclic_iff_separating(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let (_, m) = random_algebra(n, rng);
    let mut xi = random::gaussian_vector(n, rng);
    if rng.random_bool(0.5) {
        // Confine ξ to a random subspace so that both outcomes occur.
        let k = dim(rng, 1, n);
        let v = random::isometry(n, k, rng);
        xi = &v * (v.adjoint() * xi);
    }
    let cyclic = cyclic_separating_report(&m, &xi)?.cyclic;
    let separating_for_commutant = separates(&commutant(&m), &xi);
    Ok(if cyclic == separating_for_commutant { 1.0 } else { -1.0 })
}

/// Whether `A ↦ Aξ` is injective on `N`, by the numerical rank of `{Bᵢξ}`.
fn separates(n_alg: &crate::algebra::StarAlgebra, xi: &crate::numkit::CVector) -> bool {
    let cols: Vec<crate::numkit::CVector> = n_alg.basis().iter().map(|b| b * xi).collect();
    let s = CMatrix::from_columns(&cols).svd(false, false).singular_values;
    let top = s.iter().fold(0.0_f64, |x, &y| x.max(y));
    s.iter().filter(|&&v| v > tol::RANK * top).count() == n_alg.dim()
}

fn polar_identity(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let rho = random::density(n, rng);
    let data = modular_data(&rho)?;
    let a = random::gaussian_matrix(n, n, rng);
    let half = data.apply_delta_pow(real(0.5), &(&a * &data.omega))?;
    let resid = frobenius(&(data.j(&half) - tomita_operator_action(&a, &data.omega)));
    Ok(1e-8 - resid)
}

fn inverse_is_j_delta_j(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let rho = random::density(n, rng);
    let data = modular_data(&rho)?;
    let x = random::gaussian_matrix(n, n, rng);
    let inverse = data.apply_delta_pow(real(-1.0), &x)?;
    let conjugated = data.j(&data.apply_delta_pow(real(1.0), &data.j(&x))?);
    Ok(1e-8 - rel_residual(&conjugated, &inverse))
}

fn cone_preservation(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let rho = random::density(n, rng);
    let data = modular_data(&rho)?;
    let p = random::psd(n, dim(rng, 1, n), rng).into_matrix();
    let p = &p / real(frobenius(&p));
    let t = TOMITA_TIMES[rng.random_range(0..TOMITA_TIMES.len())];
    let moved = data.apply_delta_pow(C64::new(0.0, t), &p)?;
    Ok(min_eig(&moved)? + 1e-8)
}

fn relative_scaling(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 5);
    let psi = random::density_with_rank(n, dim(rng, 1, n), rng);
    let phi = random::density_with_rank(n, dim(rng, 1, n), rng);
    let (mu, lambda) = (random::uniform(0.1, 10.0, rng), random::uniform(0.1, 10.0, rng));
    let base = relative_modular(&psi, &phi)?;
    let scaled = relative_modular(&psi.scaled(mu)?, &phi.scaled(lambda)?)?;
    let expected = base.delta.matrix() * real(mu / lambda);
    Ok(1e-12 * (1.0 + max_abs(&expected)) - max_abs(&(scaled.delta.matrix() - &expected)))
}

fn araki_umegaki_agreement(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 8);
    let commuting = rng.random_bool(0.5);
    let (psi, phi) = if commuting {
        (random::diagonal_density(n, rng), random::diagonal_density(n, rng))
    } else {
        (random::density(n, rng), random::density(n, rng))
    };
    let s = fin(araki_spectral(&psi, &phi)?)?;
    let u = fin(umegaki(&psi, &phi)?)?;
    let mut margin = 1e-8 * (1.0 + s.abs()) - (s - u).abs();
    if commuting {
        let p: Vec<f64> = (0..n).map(|i| psi.matrix()[(i, i)].re).collect();
        let q: Vec<f64> = (0..n).map(|i| phi.matrix()[(i, i)].re).collect();
        let kl = fin(kl_divergence(&p, &q)?)?;
        margin = margin.min(1e-10 - (kl - s).abs());
    }
    Ok(margin)
}

fn non_negativity(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let psi = random::density_with_rank(n, dim(rng, 1, n), rng);
    let phi = random::density(n, rng);
    Ok(fin(araki_spectral(&psi, &phi)?)? + 1e-10)
}

fn equality_characterization(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 5);
    let psi = random::density(n, rng);
    let noise = random::density(n, rng);
    let eps = random::uniform(0.0, 1e-4, rng);
    let phi = DensityMatrix::new(psi.matrix() * real(1.0 - eps) + noise.matrix() * real(eps))?;
    let s = fin(araki_spectral(&psi, &phi)?)?;
    if s > 1e-8 {
        return Ok(1e-3);
    }
    Ok(1e-3 - trace_distance(&psi, &phi)?)
}

fn scaling_identity(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let psi = random::density(n, rng);
    let phi = random::density(n, rng);
    let (lambda, mu) = (random::uniform(0.05, 20.0, rng), random::uniform(0.05, 20.0, rng));
    let s = fin(araki_spectral(&psi, &phi)?)?;
    let scaled = fin(araki_spectral(&psi.scaled(lambda)?, &phi.scaled(mu)?)?)?;
    let want = lambda * s - lambda * psi.trace() * (mu / lambda).ln();
    Ok(1e-10 * (1.0 + want.abs()) - (scaled - want).abs())
}

fn lower_bound(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let psi = random::density_with_rank(n, dim(rng, 1, n), rng).scaled(random::uniform(0.1, 5.0, rng))?;
    let phi = random::density(n, rng);
    let s = fin(araki_spectral(&psi, &phi)?)?;
    let mass = psi.trace();
    let bound = -mass * (phi.expectation(&psi.support()?).re / mass).ln();
    Ok(s - bound + 1e-9)
}

fn center_inequality(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let layouts: [&[(usize, usize)]; 4] = [&[(2, 1), (1, 2)], &[(1, 1), (1, 1), (2, 1)], &[(2, 2)], &[(1, 2), (2, 1), (1, 1)]];
    let m = block_algebra(layouts[rng.random_range(0..layouts.len())]);
    let n = m.ambient_dim();
    let mut a = CMatrix::zeros(n, n);
    for b in center(&m).basis() {
        a += b * c(random::normal(rng), random::normal(rng));
    }
    let a = HermitianMatrix::symmetrized(a);
    let psi = random::density(n, rng);
    let phi = random::density(n, rng);
    let s = fin(araki_on_subalgebra(&m, &psi, &phi)?)?;
    let exp_a = a.eig()?.apply_real(f64::exp)?;
    let rhs = psi.expectation(a.matrix()).re - phi.expectation(&exp_a).re.ln();
    Ok(s - rhs + 1e-9)
}

fn hansen_jensen_pedersen(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 1, 6);
    let t = SUITE_TIMES[rng.random_range(0..SUITE_TIMES.len())];
    Ok(hjp_margin(n, t, rng)? + 1e-8)
}

fn interpolation(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (n1, n2) = (dim(rng, 1, 6), dim(rng, 1, 6));
    let t = SUITE_TIMES[rng.random_range(0..SUITE_TIMES.len())];
    Ok(interpolation_margin(n1, n2, t, rng)? + 1e-8)
}

fn uhlmann_convergence(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let psi = random::density(n, rng);
    let phi = random::density(n, rng);
    let values = uhlmann_limit(&psi, &phi, &default_uhlmann_times())?;
    let s = fin(araki_spectral(&psi, &phi)?)?;
    let monotone = values.windows(2).map(|w| w[1] - w[0] + 1e-12).fold(f64::INFINITY, f64::min);
    let last = *values.last().expect("twenty-one times");
    Ok(monotone.min(1e-3 - (last - s).abs()))
}

fn data_processing(rng: &mut TrialRng, ctx: &Context) -> Result<f64> {
    let family = DPI_FAMILIES[rng.random_range(0..DPI_FAMILIES.len())];
    let alpha = random_map(family, rng)?;
    let psi = random::density(alpha.out_dim, rng);
    let phi = random::density(alpha.out_dim, rng);
    let margin = monotonicity_report(&psi, &phi, &alpha)?.margin;
    Ok(if ctx.inject_fault { -margin + 1e-8 } else { margin + 1e-8 })
}

fn two_positive_implies_schwarz(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let k = rng.random_range(0..=DPI_FAMILIES.len());
    let alpha = if k == DPI_FAMILIES.len() {
        QuantumMap::transpose(dim(rng, 2, 4))
    } else {
        random_map(DPI_FAMILIES[k], rng)?
    };
    let seed = rng.random();
    if !two_positive_check(&alpha, 40, seed)?.pass {
        return Ok(1.0);
    }
    Ok(schwarz_check(&alpha, 40, seed)?.min_eig_worst + 1e-8)
}

fn transpose_spectra(_: &mut TrialRng, _: &Context) -> Result<f64> {
    let w = transpose_witness();
    let input = HermitianMatrix::new(w.clone())?.eig()?.eigenvalues;
    let image = QuantumMap::transpose(2).apply_amplified(&w)?;
    let output = HermitianMatrix::new(image)?.eig()?.eigenvalues;
    let dev_in = input.iter().zip([0.0, 0.0, 2.0, 4.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dev_out = output.iter().zip([-1.0, 1.0, 3.0, 3.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(1e-12 - dev_in.max(dev_out))
}

fn unitary_invariance(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 6);
    let alpha = QuantumMap::unitary(random::unitary(n, rng))?;
    let psi = random::density(n, rng);
    let phi = random::density(n, rng);
    Ok(1e-8 - monotonicity_report(&psi, &phi, &alpha)?.margin.abs())
}

fn random_system(rng: &mut TrialRng, max_dim: usize) -> Result<(FiniteQuantumSystem, HermitianMatrix)> {
    let n = dim(rng, 1, max_dim);
    random_instance(n, rng)
}

fn kms_boundary(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, _) = random_system(rng, 5)?;
    let report = kms_boundary_check(&sys, 1, rng.random())?;
    Ok(crate::kms::KMS_TOL - report.max_residual)
}

fn kms_uniqueness_probe(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let n = dim(rng, 2, 5);
    let (sys, _) = random_instance(n, rng)?;
    let report = kms_boundary_check(&sys, 20, rng.random())?;
    Ok((crate::kms::KMS_TOL - report.max_residual).min(report.probe_max_residual - crate::kms::PROBE_THRESHOLD))
}

fn modular_is_liouvillian_flow(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, _) = random_system(rng, 5)?;
    let rep = standard_liouvillian(&sys)?;
    Ok((1e-7 - rep.modular_residual(&sys)?).min(1e-8 - rep.omega_residual()).min(1e-10 - rep.j_anticommutator()))
}

fn kms_vector_identity(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, _) = random_system(rng, 5)?;
    let rep = standard_liouvillian(&sys)?;
    let a = random::gaussian_matrix(sys.dim(), sys.dim(), rng);
    Ok(1e-8 - rep.kms_vector_residual(&a)?)
}

fn perturbed_invariance(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, v) = random_system(rng, 5)?;
    Ok(1e-8 - perturb_state(&sys, &v)?.invariance_residual())
}

fn perturbation_round_trip(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, v) = random_system(rng, 5)?;
    let perturbed = gibbs_state(&sys.h.add(&v), sys.beta)?;
    let back = perturb_state(&perturbed, &v.scale(-1.0))?;
    Ok(1e-9 - frobenius(&(back.state.matrix() - sys.rho.matrix())))
}

fn perturbation_identities(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, v) = random_system(rng, 4)?;
    let pert = perturb_state(&sys, &v)?;
    let report = perturbation_entropy_report(&sys, &v)?;
    let cone = HermitianMatrix::symmetrized(pert.omega_v.clone()).eig()?.min() + 1e-10;
    Ok((crate::kms::DUAL_PATH_TOL - pert.dual_path_residual)
        .min(1e-9 - pert.gibbs_residual)
        .min(crate::kms::PERTURBATION_TOL - report.identities_residual)
        .min(cone))
}

fn golden_thompson_peierls(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, v) = random_system(rng, 5)?;
    Ok(golden_thompson_peierls_report(&sys, &v)?.worst_margin + crate::kms::GT_SLACK)
}

fn dyson_truncation(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let (sys, v) = random_system(rng, 3)?;
    let t = random::uniform(0.1, 1.0, rng);
    let order = dim(rng, 1, crate::kms::MAX_DYSON_ORDER);
    let rep = expansional(&sys, &v, t, order)?;
    Ok((rep.truncation_bound + 1e-12 - rep.truncation_error).min(1e-9 - rep.unitarity_residual))
}

fn trotter_first_order(_: &mut TrialRng, _: &Context) -> Result<f64> {
    let x = HermitianMatrix::symmetrized(crate::bogoliubov::pauli_x());
    let z = HermitianMatrix::symmetrized(crate::bogoliubov::pauli_z());
    let rep = trotter_check(&x, &z, 1.0, &[8, 16, 32, 64])?;
    let (lo, hi) = crate::kms::TROTTER_RATIO_RANGE;
    Ok(rep.ratios.iter().map(|&r| (r - lo).min(hi - r)).fold(f64::INFINITY, f64::min))
}

fn two_sided_bounds(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let sys = random_partitioned(16, rng)?;
    let rep = bogoliubov_report(&sys)?;
    let routes = free_energy_routes(&sys)?;
    let slack = crate::bogoliubov::BOUND_SLACK;
    Ok((rep.lower_margin + slack)
        .min(rep.upper_margin + slack)
        .min(rep.gt_margin + slack)
        .min(crate::bogoliubov::ROUTE_TOL - routes.spread))
}

fn proof_identities(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let sys = random_partitioned(16, rng)?;
    let rep = bogoliubov_report(&sys)?;
    let sum = rep.s_reference_full + rep.s_full_reference;
    let resid = (sum - sys.beta * (rep.upper - rep.lower)).abs();
    Ok((1e-8 - resid).min(1e-8 - rep.identity_residual))
}

fn kms_consistency(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let sys = random_partitioned(8, rng)?;
    let rep = bogoliubov_report(&sys)?;
    let pert = perturbation_entropy_report(&sys.reference, &sys.coupling)?;
    let resid = (pert.s_fwd - rep.s_reference_full).abs().max((pert.s_bwd - rep.s_full_reference).abs());
    Ok(1e-8 - resid)
}

fn variational_sandwich(rng: &mut TrialRng, _: &Context) -> Result<f64> {
    let sys = random_partitioned(8, rng)?;
    let dv = donsker_varadhan_sup(&sys, &DvConfig::default())?;
    let config = OptimizerConfig { max_iter: 100, seed: rng.random(), ..OptimizerConfig::default() };
    let gibbs = gibbs_variational_inf(&sys, &config)?;
    let slack = crate::bogoliubov::BOUND_SLACK;
    Ok((slack - dv.max_excess).min(gibbs.min_gap + slack))
}

fn gibbs_cold_start(_: &mut TrialRng, _: &Context) -> Result<f64> {
    let sys = ising_fixture()?;
    let config = OptimizerConfig::default();
    let rep = gibbs_variational_inf(&sys, &config)?;
    Ok((config.conv_tol - (rep.best_value - rep.delta_f)).min(rep.min_gap + crate::bogoliubov::BOUND_SLACK))
}

/// The two-qubit transverse-field Ising fixture shared by the suites.
pub fn ising_fixture() -> Result<PartitionedSystem> {
    PartitionedSystem::from_spec(&ModelSpec::IsingChain { sites: 2, field: 0.7, coupling: 0.9 }, 1.3)
}
