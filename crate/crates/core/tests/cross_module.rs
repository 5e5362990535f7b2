//! Checks that tie several modules together through the public API.

use modent::algebra::{generate_star_algebra, StarAlgebra};
use modent::bogoliubov::{bogoliubov_report, relative_free_energy, ModelSpec, PartitionedSystem};
use modent::entropy::{araki_on_subalgebra, default_uhlmann_times, uhlmann_limit, umegaki};
use modent::kms::{gibbs_state, perturb_state, perturbation_entropy_report};
use modent::monotone::{monotonicity_report, QuantumMap};
use modent::numkit::{frobenius, identity, partial_trace, tensor_product, Subsystem};
use modent::{random, DensityMatrix, HermitianMatrix};
use proptest::prelude::*;

fn fin(v: modent::entropy::EntropyValue) -> f64 {
    v.finite().expect("finite")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Restricting to `Mat(d1) ⊗ I` and tracing out the second factor are the same operation.
    #[test]
    fn subalgebra_restriction_equals_partial_trace(seed in any::<u64>(), d1 in 2usize..=3, d2 in 1usize..=3) {
        let mut rng = random::rng(seed);
        let n = d1 * d2;
        let psi = random::density(n, &mut rng);
        let phi = random::density(n, &mut rng);
        let m = StarAlgebra::full(d1).tensor_identity(d2);
        let restricted = fin(araki_on_subalgebra(&m, &psi, &phi)?);
        let reduce = |r: &DensityMatrix| DensityMatrix::new(partial_trace(r.matrix(), (d1, d2), Subsystem::Second).unwrap()).unwrap();
        let traced = fin(umegaki(&reduce(&psi), &reduce(&phi))?);
        prop_assert!((restricted - traced).abs() <= 1e-10 * (1.0 + traced.abs()), "{restricted} vs {traced}");
        let via_map = monotonicity_report(&psi, &phi, &QuantumMap::partial_trace(d1, d2))?;
        prop_assert!((fin(via_map.s_out) - traced).abs() <= 1e-10 * (1.0 + traced.abs()));
    }

    /// `S(ω₀, ω)` from the partitioned system agrees with the perturbation formula on the reference system.
    #[test]
    fn bogoliubov_entropies_match_perturbation_identities(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let sys = modent::bogoliubov::random_partitioned(8, &mut rng)?;
        let b = bogoliubov_report(&sys)?;
        let p = perturbation_entropy_report(&sys.reference, &sys.coupling)?;
        prop_assert!((b.s_reference_full - p.s_fwd).abs() <= 1e-8);
        prop_assert!((b.s_full_reference - p.s_bwd).abs() <= 1e-8);
    }

    /// Shifting the coupling by `c·I` shifts `ΔF` by exactly `c`.
    #[test]
    fn scalar_coupling_shift(seed in any::<u64>(), c in -2.0f64..2.0) {
        let mut rng = random::rng(seed);
        let sys = modent::bogoliubov::random_partitioned(8, &mut rng)?;
        let shifted_u = HermitianMatrix::symmetrized(sys.coupling.matrix() + identity(sys.dim()) * modent::numkit::real(c));
        let shifted = PartitionedSystem::new(sys.block_hamiltonians.clone(), shifted_u, sys.beta)?;
        let d = relative_free_energy(&shifted)? - relative_free_energy(&sys)? - c;
        prop_assert!(d.abs() <= 1e-9, "{d}");
    }

    /// Perturbing a product Gibbs state by a local term keeps it a product state.
    #[test]
    fn local_perturbation_of_product_state(seed in any::<u64>(), beta in 0.1f64..3.0) {
        let mut rng = random::rng(seed);
        let (ha, hb, va) = (
            random::hermitian_with_norm(2, 1.0, &mut rng),
            random::hermitian_with_norm(2, 1.0, &mut rng),
            random::hermitian_with_norm(2, 1.0, &mut rng),
        );
        let i2 = identity(2);
        let h = HermitianMatrix::symmetrized(tensor_product(ha.matrix(), &i2) + tensor_product(&i2, hb.matrix()));
        let v = HermitianMatrix::symmetrized(tensor_product(va.matrix(), &i2));
        let perturbed = perturb_state(&gibbs_state(&h, beta)?, &v)?;
        let expected = tensor_product(gibbs_state(&ha.add(&va), beta)?.rho.matrix(), gibbs_state(&hb, beta)?.rho.matrix());
        prop_assert!(frobenius(&(perturbed.state.matrix() - expected)) <= 1e-12);
    }
}

#[test]
fn uhlmann_table_starts_at_zero_for_faithful_states() {
    let mut rng = random::rng(17);
    for n in 2..=5 {
        let psi = random::density(n, &mut rng);
        let phi = random::density(n, &mut rng);
        let f = uhlmann_limit(&psi, &phi, &default_uhlmann_times()).unwrap();
        assert!(f[0].abs() < 1e-12, "F(1) = {}", f[0]);
    }
}

#[test]
fn uncoupled_system_has_trivial_bounds_for_any_blocks() {
    let mut rng = random::rng(23);
    let blocks = vec![random::hermitian(2, &mut rng), random::hermitian(3, &mut rng)];
    let sys = PartitionedSystem::from_spec(&ModelSpec::Uncoupled { blocks }, 0.8).unwrap();
    let b = bogoliubov_report(&sys).unwrap();
    assert!(b.delta_f.abs() < 1e-14 && b.lower.abs() < 1e-14 && b.upper.abs() < 1e-14);
}

#[test]
fn generated_algebra_of_a_projection_is_its_block_diagonal() {
    let p = modent::numkit::CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        modent::numkit::real(1.0),
        modent::numkit::real(0.0),
        modent::numkit::real(0.0),
    ]));
    let m = generate_star_algebra(&[p], 3).unwrap();
    assert_eq!(m.dim(), 2);
    assert!(m.is_subalgebra_of(&StarAlgebra::diagonal(3)));
}
