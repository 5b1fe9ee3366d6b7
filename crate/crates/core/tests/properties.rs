use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qelm::quantum::{
    diagonal_probabilities, expectation, hermitian_eigendecomposition, pauli_z_string, tensor_product, CMatrix,
    DensityMatrix, HermitianOperator,
};
use qelm::readout::{dress_predictions, fit_readout, predict_all, CalibrationPoint, DesignMatrix};
use qelm::reservoir::{
    evolve, ising_hamiltonian, measure_features_exact, sample_bitstrings, CouplingMatrix, FeatureSpec, ReservoirSpec,
    ShotPlan,
};
use qelm::states::{
    apply_input_noise, compose_initial, make_werner, random_density, EnsembleKind, NoiseParams, RandomStateEnsemble,
    WernerParams,
};
use qelm::stream::derive_substream;

fn hs_state(seed: u64, n_qubits: usize) -> DensityMatrix {
    let ens = RandomStateEnsemble::new(EnsembleKind::HilbertSchmidtMixed, 1 << n_qubits).unwrap();
    random_density(&ens, &mut derive_substream(seed, &[n_qubits as u64]))
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn reduced_first_two(rho: &CMatrix, n_qubits: usize) -> CMatrix {
    let rest = 1 << (n_qubits - 2);
    CMatrix::from_fn(4, 4, |a, b| (0..rest).map(|k| rho[(a * rest + k, b * rest + k)]).sum())
}

fn random_couplings(seed: u64, n: usize) -> CouplingMatrix {
    CouplingMatrix::draw(n, 1.0, &mut derive_substream(seed, &[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_states_satisfy_invariants(seed in any::<u64>(), n in 1usize..=4) {
        let rho = hs_state(seed, n);
        prop_assert!(rho.check_invariants().is_ok());
        let purity = rho.purity();
        prop_assert!(purity <= 1.0 + 1e-12 && purity >= 1.0 / rho.dim() as f64 - 1e-12);
    }

    #[test]
    fn expectation_is_linear(seed in any::<u64>(), a in 0.0f64..1.0, site in 0usize..3) {
        let r1 = hs_state(seed, 3);
        let r2 = hs_state(seed.wrapping_add(1), 3);
        let mix = DensityMatrix::new(r1.matrix().scale(a) + r2.matrix().scale(1.0 - a)).unwrap();
        let z = pauli_z_string(&[site], 3).unwrap();
        let lhs = expectation(&z, &mix).unwrap();
        let rhs = a * expectation(&z, &r1).unwrap() + (1.0 - a) * expectation(&z, &r2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>()) {
        let (a, b, c) = (hs_state(seed, 1), hs_state(seed ^ 1, 2), hs_state(seed ^ 2, 1));
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert!(max_abs(&(left.matrix() - right.matrix())) < 1e-15);
        prop_assert!((left.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_strings_multiply_by_symmetric_difference(
        a in prop::collection::btree_set(0usize..4, 0..4),
        b in prop::collection::btree_set(0usize..4, 0..4),
    ) {
        let sa: Vec<usize> = a.iter().copied().collect();
        let sb: Vec<usize> = b.iter().copied().collect();
        let sd: Vec<usize> = a.symmetric_difference(&b).copied().collect();
        let prod = pauli_z_string(&sa, 4).unwrap().matrix() * pauli_z_string(&sb, 4).unwrap().matrix();
        let want = pauli_z_string(&sd, 4).unwrap();
        prop_assert!(max_abs(&(prod - want.matrix())) == 0.0);
    }

    #[test]
    fn werner_is_affine_in_p(p in 0.0f64..=1.0, n in 2usize..=4) {
        let w0 = make_werner(WernerParams::new(0.0, n).unwrap());
        let w1 = make_werner(WernerParams::new(1.0, n).unwrap());
        let wp = make_werner(WernerParams::new(p, n).unwrap());
        let affine = w0.matrix().scale(1.0 - p) + w1.matrix().scale(p);
        prop_assert!(max_abs(&(wp.matrix() - affine)) < 1e-15);
        prop_assert!(wp.check_invariants().is_ok());
    }

    #[test]
    fn two_qubit_marginals_of_werner_are_maximally_mixed(p in 0.0f64..=1.0) {
        // Partial trace over each qubit in turn.
        let w = make_werner(WernerParams::new(p, 2).unwrap());
        let m = w.matrix();
        for keep_first in [true, false] {
            let r = CMatrix::from_fn(2, 2, |i, j| {
                (0..2).map(|k| if keep_first { m[(2 * i + k, 2 * j + k)] } else { m[(2 * k + i, 2 * k + j)] }).sum()
            });
            let half = CMatrix::identity(2, 2).scale(0.5);
            prop_assert!(max_abs(&(r - half)) < 1e-15);
        }
    }

    #[test]
    fn noise_preserves_trace_and_validity(seed in any::<u64>(), p in 0.0f64..=1.0, eps in 0.0f64..=1.0) {
        let clean = make_werner(WernerParams::new(p, 2).unwrap());
        let noisy = apply_input_noise(&clean, NoiseParams::new(eps).unwrap(), &hs_state(seed, 2)).unwrap();
        prop_assert!((noisy.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(noisy.check_invariants().is_ok());
    }

    #[test]
    fn evolution_preserves_spectrum_and_purity(seed in any::<u64>(), h in 0.0f64..2.0, t in 0.0f64..50.0) {
        let hamiltonian = ising_hamiltonian(&random_couplings(seed, 4), h);
        let rho = hs_state(seed, 4);
        let out = evolve(&rho, &hamiltonian, t).unwrap();
        prop_assert!(out.check_invariants().is_ok());
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-10);
        for (a, b) in rho.eigenvalues().unwrap().iter().zip(out.eigenvalues().unwrap()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uncoupled_reservoir_conserves_local_z(seed in any::<u64>(), h in 0.0f64..2.0, t in 0.0f64..50.0) {
        let zero = CouplingMatrix::from_upper(4, &[0.0; 6]).unwrap();
        let hamiltonian = ising_hamiltonian(&zero, h);
        let rho = hs_state(seed, 4);
        let spec = FeatureSpec::default();
        let before = measure_features_exact(&rho, &spec).unwrap();
        let after = measure_features_exact(&evolve(&rho, &hamiltonian, t).unwrap(), &spec).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn couplings_are_bounded_symmetric_and_reproducible(seed in any::<u64>(), n in 2usize..=7, scale in 0.1f64..3.0) {
        let a = CouplingMatrix::draw(n, scale, &mut derive_substream(seed, &[0]));
        let b = CouplingMatrix::draw(n, scale, &mut derive_substream(seed, &[0]));
        prop_assert_eq!(&a, &b);
        for i in 0..n {
            prop_assert_eq!(a.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(a.get(i, j), a.get(j, i));
                prop_assert!(a.get(i, j).abs() <= scale / 2.0);
            }
        }
    }

    #[test]
    fn shot_records_are_reproducible(seed in any::<u64>(), shots in 1u64..5000) {
        let rho = hs_state(seed, 3);
        let a = sample_bitstrings(&rho, ShotPlan::Finite(shots), &mut derive_substream(seed, &[4])).unwrap();
        let b = sample_bitstrings(&rho, ShotPlan::Finite(shots), &mut derive_substream(seed, &[4])).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total(), shots);
        let probs = diagonal_probabilities(&rho).unwrap();
        for (outcome, _) in a.iter() {
            prop_assert!(probs[outcome] > 0.0);
        }
    }

    #[test]
    fn pseudo_inverse_is_locally_optimal(seed in any::<u64>(), direction in 0usize..6, sign in prop::bool::ANY) {
        let mut rng = derive_substream(seed, &[9]);
        let x = DMatrix::from_fn(50, 6, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
        let y = DVector::from_fn(50, |_, _| rand::Rng::random::<f64>(&mut rng));
        let design = DesignMatrix::new(x.clone(), y.clone()).unwrap();
        let w = DVector::from_column_slice(fit_readout(&design).as_slice());
        let mut dw = DVector::zeros(6);
        dw[direction] = if sign { 1e-3 } else { -1e-3 };
        let base = (&x * &w - &y).norm();
        let moved = (&x * (&w + dw) - &y).norm();
        prop_assert!(moved >= base - 1e-12);
    }

    #[test]
    fn dressing_is_homogeneous(
        raw in prop::collection::vec(0.01f64..1.0, 1..20),
        target in 0.01f64..1.0,
        c in 0.1f64..10.0,
    ) {
        let cal = CalibrationPoint::new(raw[0], target).unwrap();
        let scaled: Vec<f64> = raw.iter().map(|r| r * c).collect();
        let cal_scaled = CalibrationPoint::new(raw[0] * c, target).unwrap();
        let a = dress_predictions(&raw, cal);
        let b = dress_predictions(&scaled, cal_scaled);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        prop_assert!((a[0] - target).abs() < 1e-12);
    }
}

#[test]
fn duplicated_columns_still_fit() {
    let mut rng = derive_substream(3, &[]);
    let col = DVector::from_fn(30, |_, _| rand::Rng::random::<f64>(&mut rng));
    let x = DMatrix::from_columns(&[col.clone(), col.clone(), DVector::from_element(30, 1.0)]);
    let y = col.scale(2.0);
    let design = DesignMatrix::new(x, y.clone()).unwrap();
    let w = fit_readout(&design);
    assert!(w.is_finite());
    let pred = predict_all(&w, &design).unwrap();
    for (p, t) in pred.iter().zip(y.iter()) {
        assert!((p - t).abs() < 1e-10);
    }
}

#[test]
fn werner_input_qubits_read_zero_before_evolution() {
    let reservoir = hs_state(17, 3);
    for p in [0.0, 0.3, 0.7, 1.0] {
        let rho = compose_initial(&make_werner(WernerParams::new(p, 2).unwrap()), &reservoir, 5).unwrap();
        let f = measure_features_exact(&rho, &FeatureSpec::default()).unwrap();
        assert_eq!(f[0], 1.0);
        assert!(f[1].abs() < 1e-15 && f[2].abs() < 1e-15);
        let marginal = reduced_first_two(rho.matrix(), 5);
        assert!(max_abs(&(marginal - make_werner(WernerParams::new(p, 2).unwrap()).matrix())) < 1e-14);
    }
}

#[test]
fn default_reservoir_spec_round_trips() {
    let spec = ReservoirSpec::default();
    assert!(spec.validate().is_ok());
    let h = HermitianOperator::new(ising_hamiltonian(&random_couplings(1, spec.n_qubits), 0.1).matrix().clone());
    assert!(h.is_ok());
    let s = hermitian_eigendecomposition(&h.unwrap()).unwrap();
    assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
}
