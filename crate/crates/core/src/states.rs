//! Input and reservoir state construction.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{qubits_for_dim, tensor_product, CMatrix, DensityMatrix, C64, MAX_QUBITS};

/// Mixing parameter and register size of a (generalized) Werner state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerParams {
    p: f64,
    n_qubits: usize,
}

impl WernerParams {
    pub fn new(p: f64, n_qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter { name: "p", value: p });
        }
        if n_qubits < 2 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidParameter { name: "n_qubits", value: n_qubits as f64 });
        }
        Ok(Self { p, n_qubits })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    epsilon: f64,
}

impl NoiseParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter { name: "epsilon", value: epsilon });
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// `GG† / Tr(GG†)` with `G` a square complex Ginibre matrix.
    HilbertSchmidtMixed,
    /// Projector onto a normalized complex Gaussian vector.
    HaarPure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomStateEnsemble {
    kind: EnsembleKind,
    dim: usize,
}

impl RandomStateEnsemble {
    pub fn new(kind: EnsembleKind, dim: usize) -> Result<Self> {
        qubits_for_dim(dim)?;
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Pure target state of the Werner family: the singlet for two qubits,
/// `(|0…0⟩ + |1…1⟩)/√2` beyond.
fn werner_target(n_qubits: usize) -> DVector<C64> {
    let dim = 1usize << n_qubits;
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = DVector::zeros(dim);
    if n_qubits == 2 {
        psi[0b01] = amp;
        psi[0b10] = -amp;
    } else {
        psi[0] = amp;
        psi[dim - 1] = amp;
    }
    psi
}

/// `(1−p)/2^n · I + p |ψ⟩⟨ψ|`.
pub fn make_werner(params: WernerParams) -> DensityMatrix {
    let n = params.n_qubits;
    let dim = 1usize << n;
    let psi = werner_target(n);
    let mut m = (&psi * psi.adjoint()).scale(params.p);
    let floor = (1.0 - params.p) / dim as f64;
    for i in 0..dim {
        m[(i, i)] += floor;
    }
    DensityMatrix::from_matrix_unchecked(m)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_density<R: Rng + ?Sized>(ensemble: &RandomStateEnsemble, rng: &mut R) -> DensityMatrix {
    let dim = ensemble.dim;
    match ensemble.kind {
        EnsembleKind::HilbertSchmidtMixed => {
            // Column-major fill keeps the draw order fixed.
            let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
            let gg = &g * g.adjoint();
            let tr = gg.trace().re;
            let m = gg.unscale(tr);
            DensityMatrix::from_matrix_unchecked((&m + m.adjoint()).scale(0.5))
        }
        EnsembleKind::HaarPure => {
            let psi = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
            let psi = psi.unscale(psi.norm());
            DensityMatrix::from_matrix_unchecked(&psi * psi.adjoint())
        }
    }
}

/// `(1−ε) clean + ε r`.
pub fn apply_input_noise(clean: &DensityMatrix, noise: NoiseParams, r: &DensityMatrix) -> Result<DensityMatrix> {
    if clean.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: clean.dim(), found: r.dim() });
    }
    let eps = noise.epsilon;
    if eps == 0.0 {
        return Ok(clean.clone());
    }
    if eps == 1.0 {
        return Ok(r.clone());
    }
    let m = clean.matrix().scale(1.0 - eps) + r.matrix().scale(eps);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// `input ⊗ reservoir_state`, input on the low-index qubits.
pub fn compose_initial(
    input: &DensityMatrix,
    reservoir_state: &DensityMatrix,
    total_qubits: usize,
) -> Result<DensityMatrix> {
    let found = input.n_qubits() + reservoir_state.n_qubits();
    if found != total_qubits {
        return Err(Error::DimensionMismatch { expected: total_qubits, found });
    }
    tensor_product(input, reservoir_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_substream;

    #[test]
    fn werner_limits() {
        let singlet = make_werner(WernerParams::new(1.0, 2).unwrap());
        let h = 0.5;
        let want = [[0., 0., 0., 0.], [0., h, -h, 0.], [0., -h, h, 0.], [0., 0., 0., 0.]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((singlet.matrix()[(i, j)] - C64::new(want[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let mixed = make_werner(WernerParams::new(0.0, 3).unwrap());
        assert_eq!(mixed, DensityMatrix::maximally_mixed(3).unwrap());
    }

    #[test]
    fn werner_elementwise() {
        // (1−p)/4 on the diagonal plus p/2 on the |01⟩, |10⟩ block.
        let p = 0.6;
        let rho = make_werner(WernerParams::new(p, 2).unwrap());
        let diag: Vec<f64> = (0..4).map(|i| rho.matrix()[(i, i)].re).collect();
        let want = [0.1, 0.4, 0.4, 0.1];
        for (got, want) in diag.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((rho.matrix()[(1, 2)].re + 0.3).abs() < 1e-15);
    }

    #[test]
    fn werner_params_validation() {
        assert!(WernerParams::new(1.2, 2).is_err());
        assert!(WernerParams::new(-0.1, 2).is_err());
        assert!(WernerParams::new(0.5, 1).is_err());
        assert!(NoiseParams::new(1.5).is_err());
    }

    #[test]
    fn draws_are_valid_states() {
        let mut rng = derive_substream(11, &[0]);
        for kind in [EnsembleKind::HilbertSchmidtMixed, EnsembleKind::HaarPure] {
            for dim in [2, 4, 8] {
                let ens = RandomStateEnsemble::new(kind, dim).unwrap();
                let rho = random_density(&ens, &mut rng);
                rho.check_invariants().unwrap();
                if kind == EnsembleKind::HaarPure {
                    assert!((rho.purity() - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(RandomStateEnsemble::new(EnsembleKind::HaarPure, 6).is_err());
    }

    #[test]
    fn noise_limits() {
        let clean = make_werner(WernerParams::new(0.3, 2).unwrap());
        let mut rng = derive_substream(5, &[]);
        let r = random_density(&RandomStateEnsemble::new(EnsembleKind::HilbertSchmidtMixed, 4).unwrap(), &mut rng);
        assert_eq!(apply_input_noise(&clean, NoiseParams::new(0.0).unwrap(), &r).unwrap(), clean);
        assert_eq!(apply_input_noise(&clean, NoiseParams::new(1.0).unwrap(), &r).unwrap(), r);
        let wrong = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(apply_input_noise(&clean, NoiseParams::new(0.5).unwrap(), &wrong).is_err());
    }

    #[test]
    fn half_noise_on_mixed_state_is_werner() {
        let clean = DensityMatrix::maximally_mixed(2).unwrap();
        let singlet = make_werner(WernerParams::new(1.0, 2).unwrap());
        let out = apply_input_noise(&clean, NoiseParams::new(0.5).unwrap(), &singlet).unwrap();
        let want = make_werner(WernerParams::new(0.5, 2).unwrap());
        assert!((out.matrix() - want.matrix()).camax() < 1e-15);
    }

    #[test]
    fn composition_sizes() {
        let input = make_werner(WernerParams::new(0.4, 2).unwrap());
        let res = DensityMatrix::maximally_mixed(3).unwrap();
        assert_eq!(compose_initial(&input, &res, 5).unwrap().dim(), 32);
        let input = make_werner(WernerParams::new(0.4, 4).unwrap());
        assert_eq!(compose_initial(&input, &res, 7).unwrap().dim(), 128);
        assert!(compose_initial(&input, &res, 6).is_err());

        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let out = compose_initial(&a, &res, 5).unwrap();
        assert!((out.matrix() - DensityMatrix::maximally_mixed(5).unwrap().matrix()).camax() < 1e-15);
    }
}
