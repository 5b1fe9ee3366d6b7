//! Checks against independently computed reference values.

use nalgebra::{DMatrix, DVector};
use qelm::quantum::{hermitian_eigendecomposition, CMatrix, DensityMatrix, HermitianOperator, C64};
use qelm::readout::{fit_readout, mean_squared_error, DesignMatrix};
use qelm::reservoir::{
    estimate_features_from_shots, ising_hamiltonian, measure_features_exact, sample_bitstrings, CouplingMatrix,
    FeatureSpec, ShotPlan,
};
use qelm::states::{compose_initial, make_werner, random_density, EnsembleKind, RandomStateEnsemble, WernerParams};
use qelm::stream::derive_substream;
use rand::Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Gaussian elimination with partial pivoting on `AᵀA w = Aᵀy`.
fn normal_equations(a: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let n = a.ncols();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| (0..a.nrows()).map(|k| a[(k, i)] * a[(k, j)]).sum()).collect();
            row.push((0..a.nrows()).map(|k| a[(k, i)] * y[k]).sum());
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..=n {
                m[r][k] -= f * m[col][k];
            }
        }
    }
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        w[i] = (m[i][n] - (i + 1..n).map(|k| m[i][k] * w[k]).sum::<f64>()) / m[i][i];
    }
    w
}

#[test]
fn pseudo_inverse_matches_normal_equations() {
    let mut rng = derive_substream(100, &[6]);
    for _ in 0..25 {
        let x = DMatrix::from_fn(100, 6, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(100, |_, _| rng.random::<f64>());
        let w = fit_readout(&DesignMatrix::new(x.clone(), y.clone()).unwrap());
        for (a, b) in w.as_slice().iter().zip(normal_equations(&x, &y)) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn two_site_ising_hamiltonian_entries_and_spectrum() {
    // H = 0.3 XX + 0.1 (ZI + IZ): blocks {00,11} and {01,10}.
    let j = CouplingMatrix::from_upper(2, &[0.3]).unwrap();
    let h = ising_hamiltonian(&j, 0.1);
    let want = [[0.2, 0.0, 0.0, 0.3], [0.0, 0.0, 0.3, 0.0], [0.0, 0.3, 0.0, 0.0], [0.3, 0.0, 0.0, -0.2]];
    for r in 0..4 {
        for col in 0..4 {
            assert!((h.matrix()[(r, col)] - c(want[r][col])).norm() < 1e-15);
        }
    }
    let s = hermitian_eigendecomposition(&h).unwrap();
    let root = 0.13f64.sqrt();
    for (got, want) in s.eigenvalues.iter().zip([-root, -0.3, 0.3, root]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn rabi_rotation_matches_closed_form() {
    // exp(-i σx t) |0⟩ = cos t |0⟩ − i sin t |1⟩.
    let x = HermitianOperator::new(CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])).unwrap();
    let u = hermitian_eigendecomposition(&x).unwrap();
    for t in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2] {
        let rho = u.propagator(t).unwrap().conjugate(&DensityMatrix::basis_state(1, 0).unwrap()).unwrap();
        assert!((rho.matrix()[(0, 0)].re - t.cos().powi(2)).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - t.sin().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn werner_with_idle_qubit_minimum_eigenvalue() {
    let w = make_werner(WernerParams::new(0.5, 2).unwrap());
    let rho = compose_initial(&w, &DensityMatrix::maximally_mixed(1).unwrap(), 3).unwrap();
    let eig = rho.eigenvalues().unwrap();
    assert!((eig[0] - 0.0625).abs() < 1e-12);
}

#[test]
fn werner_partial_transpose_threshold() {
    for i in 0..=60 {
        let p = i as f64 / 60.0;
        let m = make_werner(WernerParams::new(p, 2).unwrap()).into_matrix();
        let pt = CMatrix::from_fn(4, 4, |r, s| m[((r & 2) | (s & 1), (s & 2) | (r & 1))]);
        let min = hermitian_eigendecomposition(&HermitianOperator::new(pt).unwrap()).unwrap().eigenvalues[0];
        assert!((min - (1.0 - 3.0 * p) / 4.0).abs() < 1e-12);
    }
}

#[test]
fn hilbert_schmidt_mean_is_maximally_mixed() {
    let ens = RandomStateEnsemble::new(EnsembleKind::HilbertSchmidtMixed, 2).unwrap();
    let mut rng = derive_substream(42, &[]);
    let draws = 100_000;
    let mut acc = CMatrix::zeros(2, 2);
    for _ in 0..draws {
        acc += random_density(&ens, &mut rng).matrix();
    }
    acc.unscale_mut(draws as f64);
    let diff = acc - CMatrix::identity(2, 2).scale(0.5);
    assert!(diff.iter().all(|z| z.norm() < 5e-3), "{diff}");
}

#[test]
fn constant_mean_predictor_scores_variance_of_uniform() {
    let mut rng = derive_substream(12, &[]);
    let targets: Vec<f64> = (0..200_000).map(|_| rng.random()).collect();
    let mse = mean_squared_error(&vec![0.5; targets.len()], &targets).unwrap();
    assert!((mse - 1.0 / 12.0).abs() < 1e-3);
}

#[test]
fn shot_estimator_error_scales_as_inverse_root() {
    let mut rng = derive_substream(5, &[]);
    let ens = RandomStateEnsemble::new(EnsembleKind::HilbertSchmidtMixed, 8).unwrap();
    let rho = random_density(&ens, &mut rng);
    let spec = FeatureSpec { include_bias: false, ..FeatureSpec::default() };
    let exact = measure_features_exact(&rho, &spec).unwrap();
    let shots = [100u64, 1_000, 10_000, 100_000];
    let mut pts = Vec::new();
    for &n in &shots {
        let mut sq = 0.0;
        for _ in 0..300 {
            let est = estimate_features_from_shots(&sample_bitstrings(&rho, ShotPlan::Finite(n), &mut rng).unwrap(), &spec)
                .unwrap();
            sq += est.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        pts.push(((n as f64).ln(), (sq / (300.0 * exact.len() as f64)).sqrt().ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}
